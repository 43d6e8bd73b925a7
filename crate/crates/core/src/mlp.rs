//! Fully connected ReLU network trained by backpropagation on MSE.
//!
//! Inputs and targets are z-scored with statistics taken from the training
//! set; the loss and its gradients are computed in the normalized target
//! space. Weight matrices are stored `in × out` so a batch forward pass is
//! `A · W + b`.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, MapKind};
use crate::error::{input, CkmError, Result};

/// Floor applied to `-inf` CGM targets before training, dB.
pub const CGM_TARGET_FLOOR_DB: f64 = -200.0;

/// Hidden widths of the reference CGM network.
pub const CGM_HIDDEN: [usize; 7] = [64, 128, 256, 512, 256, 128, 64];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpPlan {
    /// Input width, hidden widths..., output width.
    pub layer_dims: Vec<usize>,
}

impl MlpPlan {
    pub fn new(layer_dims: Vec<usize>) -> Result<Self> {
        if layer_dims.len() < 2 {
            return input("a network needs at least an input and an output layer");
        }
        if layer_dims.contains(&0) {
            return input("layer widths must be >= 1");
        }
        Ok(Self { layer_dims })
    }

    /// 4 → 64 → 128 → 256 → 512 → 256 → 128 → 64 → `n_bands`.
    pub fn cgm(n_bands: usize) -> Result<Self> {
        let mut dims = vec![4];
        dims.extend(CGM_HIDDEN);
        dims.push(n_bands);
        Self::new(dims)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated plan")
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            optimizer: Optimizer::default(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(CkmError::Config("learning_rate must be finite and >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(CkmError::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-feature affine normalization `(x − mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Column statistics; zero-variance columns get std 1.
    pub fn fit(data: &Array2<f64>) -> Self {
        let n = data.nrows().max(1) as f64;
        let mean: Vec<f64> = data.axis_iter(Axis(1)).map(|c| c.sum() / n).collect();
        let std = data
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(c, m)| {
                let var = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 1e-12 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    fn apply(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut out = data.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    fn invert(&self, data: &Array2<f64>) -> Array2<f64> {
        let mut out = data.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    plan: MlpPlan,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    input_norm: Normalization,
    output_norm: Normalization,
}

/// Gradients in the same layout as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    /// Flattened in [`Mlp::param`] order.
    pub fn flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Full-data MSE before the first update.
    pub initial_mse: f64,
    /// Full-data MSE after each epoch.
    pub epoch_mse: Vec<f64>,
}

impl TrainReport {
    pub fn final_mse(&self) -> f64 {
        self.epoch_mse.last().copied().unwrap_or(self.initial_mse)
    }
}

struct Tape {
    /// Layer inputs (normalized input first, then post-ReLU activations).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of every layer.
    pre: Vec<Array2<f64>>,
}

impl Mlp {
    /// He-uniform weights (bound √(6/fan_in)), zero biases, identity
    /// normalization.
    pub fn init(plan: &MlpPlan, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in plan.layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
                rng.random_range(-bound..bound)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Self {
            plan: plan.clone(),
            weights,
            biases,
            input_norm: Normalization::identity(plan.input_dim()),
            output_norm: Normalization::identity(plan.output_dim()),
        }
    }

    /// Network from explicit parameters (`weights[l]` is `in × out`).
    pub fn from_parts(
        plan: MlpPlan,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
        input_norm: Normalization,
        output_norm: Normalization,
    ) -> Result<Self> {
        if weights.len() != plan.n_layers() || biases.len() != plan.n_layers() {
            return Err(CkmError::Schema("layer count does not match plan".into()));
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            let (i, o) = (plan.layer_dims[l], plan.layer_dims[l + 1]);
            if w.dim() != (i, o) || b.len() != o {
                return Err(CkmError::Schema(format!("layer {l} has wrong shape")));
            }
        }
        if input_norm.mean.len() != plan.input_dim()
            || input_norm.std.len() != plan.input_dim()
            || output_norm.mean.len() != plan.output_dim()
            || output_norm.std.len() != plan.output_dim()
        {
            return Err(CkmError::Schema("normalization width does not match plan".into()));
        }
        if input_norm
            .std
            .iter()
            .chain(&output_norm.std)
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(CkmError::Schema("normalization std must be positive".into()));
        }
        Ok(Self {
            plan,
            weights,
            biases,
            input_norm,
            output_norm,
        })
    }

    pub fn plan(&self) -> &MlpPlan {
        &self.plan
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn set_normalization(&mut self, input: Normalization, output: Normalization) {
        self.input_norm = input;
        self.output_norm = output;
    }

    pub fn input_norm(&self) -> &Normalization {
        &self.input_norm
    }

    pub fn output_norm(&self) -> &Normalization {
        &self.output_norm
    }

    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    fn locate(&self, mut i: usize) -> (usize, Option<(usize, usize)>, usize) {
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if i < w.len() {
                let cols = w.ncols();
                return (l, Some((i / cols, i % cols)), 0);
            }
            i -= w.len();
            if i < b.len() {
                return (l, None, i);
            }
            i -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `i` in flat order: per layer, weights row-major then biases.
    pub fn param(&self, i: usize) -> f64 {
        match self.locate(i) {
            (l, Some(rc), _) => self.weights[l][rc],
            (l, None, j) => self.biases[l][j],
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        match self.locate(i) {
            (l, Some(rc), _) => self.weights[l][rc] = v,
            (l, None, j) => self.biases[l][j] = v,
        }
    }

    fn check_batch(&self, xs: &Array2<f64>) -> Result<()> {
        if xs.ncols() != self.plan.input_dim() {
            return input(format!(
                "input has {} features, network expects {}",
                xs.ncols(),
                self.plan.input_dim()
            ));
        }
        Ok(())
    }

    fn run(&self, xs_norm: Array2<f64>) -> Tape {
        let last = self.weights.len() - 1;
        let mut inputs = vec![xs_norm];
        let mut pre = Vec::with_capacity(self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = inputs[l].dot(w) + b;
            if l < last {
                inputs.push(z.mapv(|v| v.max(0.0)));
            }
            pre.push(z);
        }
        Tape { inputs, pre }
    }

    /// Raw-unit outputs for a batch of raw-unit inputs.
    pub fn forward_batch(&self, xs: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_batch(xs)?;
        let mut tape = self.run(self.input_norm.apply(xs));
        let out = tape.pre.pop().expect("at least one layer");
        Ok(self.output_norm.invert(&out))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xs = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .map_err(|e| CkmError::Input(e.to_string()))?;
        Ok(self.forward_batch(&xs)?.row(0).to_vec())
    }

    /// Smallest |pre-activation| over all hidden units for the batch; used to
    /// keep finite-difference checks away from ReLU kinks.
    pub fn min_hidden_preactivation(&self, xs: &Array2<f64>) -> Result<f64> {
        self.check_batch(xs)?;
        let tape = self.run(self.input_norm.apply(xs));
        let n = tape.pre.len();
        Ok(tape.pre[..n - 1]
            .iter()
            .flat_map(|z| z.iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs())))
    }

    /// MSE in normalized target space, averaged over samples and outputs.
    pub fn mse(&self, xs: &Array2<f64>, ys: &Array2<f64>) -> Result<f64> {
        self.check_pairs(xs, ys)?;
        let mut tape = self.run(self.input_norm.apply(xs));
        let out = tape.pre.pop().expect("at least one layer");
        let diff = out - self.output_norm.apply(ys);
        Ok(diff.mapv(|v| v * v).mean().unwrap_or(0.0))
    }

    fn check_pairs(&self, xs: &Array2<f64>, ys: &Array2<f64>) -> Result<()> {
        self.check_batch(xs)?;
        if xs.nrows() == 0 {
            return input("empty batch");
        }
        if ys.nrows() != xs.nrows() || ys.ncols() != self.plan.output_dim() {
            return input("target batch shape does not match inputs / output width");
        }
        Ok(())
    }

    /// MSE and its gradient with respect to every parameter. The ReLU
    /// derivative at exactly 0 is taken as 0.
    pub fn loss_and_grad(&self, xs: &Array2<f64>, ys: &Array2<f64>) -> Result<(f64, Gradients)> {
        self.check_pairs(xs, ys)?;
        let tape = self.run(self.input_norm.apply(xs));
        let out = tape.pre.last().expect("at least one layer");
        let diff = out - &self.output_norm.apply(ys);
        let count = diff.len() as f64;
        let mse = diff.iter().map(|v| v * v).sum::<f64>() / count;

        let n = self.weights.len();
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        let mut delta = diff * (2.0 / count);
        for l in (0..n).rev() {
            gw.push(tape.inputs[l].t().dot(&delta));
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                Zip::from(&mut back)
                    .and(&tape.pre[l - 1])
                    .for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    });
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        Ok((
            mse,
            Gradients {
                weights: gw,
                biases: gb,
            },
        ))
    }

    /// Fits normalization to the data, then runs seeded mini-batch descent.
    pub fn train(mut self, xs: &Array2<f64>, ys: &Array2<f64>, cfg: &TrainConfig) -> Result<(Mlp, TrainReport)> {
        cfg.validate()?;
        if xs.nrows() == 0 {
            return input("cannot train on an empty dataset");
        }
        self.check_pairs(xs, ys)?;
        self.input_norm = Normalization::fit(xs);
        self.output_norm = Normalization::fit(ys);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..xs.nrows()).collect();
        let mut adam = AdamState::new(&self);
        let initial_mse = self.mse(xs, ys)?;
        let mut epoch_mse = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                let bx = xs.select(Axis(0), chunk);
                let by = ys.select(Axis(0), chunk);
                let (_, g) = self.loss_and_grad(&bx, &by)?;
                match cfg.optimizer {
                    Optimizer::Sgd => self.sgd_step(&g, cfg.learning_rate),
                    Optimizer::Adam { beta1, beta2, eps } => {
                        adam.step(&mut self, &g, cfg.learning_rate, beta1, beta2, eps)
                    }
                }
            }
            epoch_mse.push(self.mse(xs, ys)?);
        }
        Ok((
            self,
            TrainReport {
                initial_mse,
                epoch_mse,
            },
        ))
    }

    fn sgd_step(&mut self, g: &Gradients, lr: f64) {
        for (w, gw) in self.weights.iter_mut().zip(&g.weights) {
            w.scaled_add(-lr, gw);
        }
        for (b, gb) in self.biases.iter_mut().zip(&g.biases) {
            b.scaled_add(-lr, gb);
        }
    }

    pub fn to_file(&self, config: Option<serde_json::Value>) -> MlpFile {
        MlpFile {
            format_version: crate::io::FORMAT_VERSION,
            plan: self.plan.clone(),
            input_norm: self.input_norm.clone(),
            output_norm: self.output_norm.clone(),
            layers: self
                .weights
                .iter()
                .zip(&self.biases)
                .map(|(w, b)| LayerFile {
                    in_dim: w.nrows(),
                    out_dim: w.ncols(),
                    weights: w.iter().copied().collect(),
                    bias: b.to_vec(),
                })
                .collect(),
            config,
        }
    }

    pub fn from_file(f: &MlpFile) -> Result<Self> {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (l, layer) in f.layers.iter().enumerate() {
            let w = Array2::from_shape_vec((layer.in_dim, layer.out_dim), layer.weights.clone())
                .map_err(|e| CkmError::Schema(format!("layer {l}: {e}")))?;
            weights.push(w);
            biases.push(Array1::from(layer.bias.clone()));
        }
        Mlp::from_parts(
            MlpPlan::new(f.plan.layer_dims.clone())?,
            weights,
            biases,
            f.input_norm.clone(),
            f.output_norm.clone(),
        )
    }
}

struct AdamState {
    t: i32,
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
}

impl AdamState {
    fn new(net: &Mlp) -> Self {
        let zw: Vec<_> = net.weights.iter().map(|w| Array2::zeros(w.dim())).collect();
        let zb: Vec<_> = net.biases.iter().map(|b| Array1::zeros(b.len())).collect();
        Self {
            t: 0,
            m_w: zw.clone(),
            v_w: zw,
            m_b: zb.clone(),
            v_b: zb,
        }
    }

    fn step(&mut self, net: &mut Mlp, g: &Gradients, lr: f64, b1: f64, b2: f64, eps: f64) {
        self.t += 1;
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for l in 0..net.weights.len() {
            Zip::from(&mut net.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&g.weights[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut net.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&g.biases[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerFile {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `in_dim × out_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// JSON model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpFile {
    pub format_version: u32,
    pub plan: MlpPlan,
    pub input_norm: Normalization,
    pub output_norm: Normalization,
    pub layers: Vec<LayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// CGM dataset as `(inputs, targets)` arrays, `-inf` targets floored at
/// [`CGM_TARGET_FLOOR_DB`].
pub fn cgm_arrays(ds: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
    if ds.meta.kind != MapKind::Cgm {
        return Err(CkmError::Schema("expected a CGM dataset".into()));
    }
    ds.validate()?;
    let n = ds.rows.len();
    let vd = ds.meta.value_dim();
    let xs = Array2::from_shape_fn((n, 4), |(i, j)| ds.rows[i].key[j]);
    let ys = Array2::from_shape_fn((n, vd), |(i, j)| ds.rows[i].value[j].max(CGM_TARGET_FLOOR_DB));
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn plan_validation() {
        assert!(MlpPlan::new(vec![4]).is_err());
        assert!(MlpPlan::new(vec![4, 0, 2]).is_err());
        let p = MlpPlan::cgm(12).unwrap();
        assert_eq!(p.layer_dims, vec![4, 64, 128, 256, 512, 256, 128, 64, 12]);
        let net = Mlp::init(&p, 1);
        assert_eq!(net.weights().len(), 8);
    }

    #[test]
    fn seeds() {
        let p = MlpPlan::new(vec![3, 5, 2]).unwrap();
        assert_eq!(Mlp::init(&p, 9), Mlp::init(&p, 9));
        assert_ne!(Mlp::init(&p, 9), Mlp::init(&p, 10));
        let net = Mlp::init(&p, 9);
        let bound = (6.0f64 / 3.0).sqrt();
        assert!(net.weights()[0].iter().all(|w| w.abs() <= bound));
        assert!(net.biases().iter().all(|b| b.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn zero_net_outputs_denormalized_zero() {
        let p = MlpPlan::new(vec![2, 3, 2]).unwrap();
        let mut net = Mlp::init(&p, 0);
        for i in 0..net.param_count() {
            net.set_param(i, 0.0);
        }
        net.set_normalization(
            Normalization::identity(2),
            Normalization { mean: vec![-70.0, 4.0], std: vec![10.0, 2.0] },
        );
        assert_eq!(net.forward(&[3.0, -1.0]).unwrap(), vec![-70.0, 4.0]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let p = MlpPlan::new(vec![3, 3]).unwrap();
        let w = Array2::eye(3);
        let net = Mlp::from_parts(p, vec![w], vec![Array1::zeros(3)], Normalization::identity(3), Normalization::identity(3)).unwrap();
        assert_eq!(net.forward(&[1.5, -2.0, 7.0]).unwrap(), vec![1.5, -2.0, 7.0]);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn normalization_round_trip() {
        let xs = array![[1.0, 100.0, 5.0], [3.0, -50.0, 5.0], [-2.0, 10.0, 5.0]];
        let norm = Normalization::fit(&xs);
        assert_eq!(norm.std[2], 1.0);
        let p = MlpPlan::new(vec![3, 3]).unwrap();
        let net = Mlp::from_parts(p, vec![Array2::eye(3)], vec![Array1::zeros(3)], norm.clone(), norm).unwrap();
        let out = net.forward_batch(&xs).unwrap();
        for (a, b) in out.iter().zip(xs.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_chain_rule() {
        let p = MlpPlan::new(vec![1, 1]).unwrap();
        let net = Mlp::from_parts(p, vec![array![[2.0]]], vec![array![0.0]], Normalization::identity(1), Normalization::identity(1)).unwrap();
        let (mse, g) = net.loss_and_grad(&array![[1.0]], &array![[0.0]]).unwrap();
        assert_eq!(mse, 4.0);
        assert_eq!(g.weights[0][[0, 0]], 4.0);
        assert_eq!(g.biases[0][0], 4.0);
    }

    #[test]
    fn perfect_prediction_zero_gradient() {
        let p = MlpPlan::new(vec![2, 4, 1]).unwrap();
        let net = Mlp::init(&p, 3);
        let xs = array![[0.5, -1.0], [2.0, 0.25]];
        let ys = net.forward_batch(&xs).unwrap();
        let (mse, g) = net.loss_and_grad(&xs, &ys).unwrap();
        assert!(mse < 1e-28);
        assert!(g.flat().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn empty_and_bad_batches() {
        let p = MlpPlan::new(vec![2, 1]).unwrap();
        let net = Mlp::init(&p, 3);
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(net.loss_and_grad(&empty, &Array2::zeros((0, 1))).is_err());
        assert!(net.clone().train(&empty, &Array2::zeros((0, 1)), &TrainConfig::default()).is_err());
        let bad = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(net.train(&array![[1.0, 2.0]], &array![[1.0]], &bad).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_loss_flat() {
        let p = MlpPlan::new(vec![2, 8, 1]).unwrap();
        let xs = Array2::from_shape_fn((40, 2), |(i, j)| (i * (j + 1)) as f64 * 0.1);
        let ys = xs.map_axis(Axis(1), |r| r[0] * r[1]).insert_axis(Axis(1));
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 5, ..Default::default() };
        let (_, rep) = Mlp::init(&p, 1).train(&xs, &ys, &cfg).unwrap();
        assert!(rep.epoch_mse.iter().all(|m| *m == rep.initial_mse));
    }

    #[test]
    fn file_round_trip() {
        let p = MlpPlan::new(vec![2, 3, 2]).unwrap();
        let net = Mlp::init(&p, 5);
        let json = serde_json::to_string(&net.to_file(None)).unwrap();
        let back: MlpFile = serde_json::from_str(&json).unwrap();
        assert_eq!(Mlp::from_file(&back).unwrap(), net);
    }
}
