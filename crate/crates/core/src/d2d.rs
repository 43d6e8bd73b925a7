//! D2D sub-band assignment: sum rate under co-channel interference, the
//! sequential greedy assignment, and an exhaustive optimum for small cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, CkmError, Result};
use crate::mlp::Mlp;
use crate::plfit::PlModel;
use crate::propagation::{narrowband_gain_db, trace_paths, OracleConfig};
use crate::scene::{Point3, Scene};
use crate::store::TableCkm;
use crate::dataset::MapKind;

/// Largest search space [`brute_force_assign`] accepts.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn db_to_linear_power(db: f64) -> f64 {
    if db == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(db / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2dProblem {
    pub pairs: Vec<(Point3, Point3)>,
    pub n_bands: usize,
    pub tx_power_dbm: f64,
    /// Noise power per sub-band.
    pub noise_dbm: f64,
}

impl D2dProblem {
    pub fn new(pairs: Vec<(Point3, Point3)>, n_bands: usize, tx_power_dbm: f64, noise_dbm: f64) -> Result<Self> {
        if pairs.is_empty() {
            return input("a D2D problem needs at least one pair");
        }
        if n_bands == 0 {
            return input("a D2D problem needs at least one sub-band");
        }
        if !tx_power_dbm.is_finite() || !noise_dbm.is_finite() {
            return input("power levels must be finite");
        }
        Ok(Self {
            pairs,
            n_bands,
            tx_power_dbm,
            noise_dbm,
        })
    }

    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    fn p_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

/// `g[j][k][n]`: linear power gain from the transmitter of pair `j` to the
/// receiver of pair `k` on band `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTensor {
    k: usize,
    n: usize,
    data: Vec<f64>,
}

impl GainTensor {
    pub fn zeros(k: usize, n: usize) -> Self {
        Self {
            k,
            n,
            data: vec![0.0; k * k * n],
        }
    }

    pub fn from_fn(k: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(k * k * n);
        for j in 0..k {
            for r in 0..k {
                for b in 0..n {
                    data.push(f(j, r, b));
                }
            }
        }
        Self::from_vec(k, n, data)
    }

    pub fn from_vec(k: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != k * k * n {
            return input(format!("gain tensor needs {} entries, got {}", k * k * n, data.len()));
        }
        if data.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return input("gains must be finite and non-negative");
        }
        Ok(Self { k, n, data })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.k, self.n)
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize, band: usize) -> f64 {
        self.data[(from * self.k + to) * self.n + band]
    }

    pub fn set(&mut self, from: usize, to: usize, band: usize, g: f64) {
        self.data[(from * self.k + to) * self.n + band] = g;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn check(&self, problem: &D2dProblem) -> Result<()> {
        if self.k != problem.k() || self.n != problem.n_bands {
            return input(format!(
                "gain tensor is {}x{}x{}, problem is K={} N={}",
                self.k,
                self.k,
                self.n,
                problem.k(),
                problem.n_bands
            ));
        }
        Ok(())
    }
}

/// Rate of the pairs for which `band[i]` is set, counting interference only
/// among those pairs.
fn rate_of_active(problem: &D2dProblem, band: &[Option<usize>], gains: &GainTensor) -> f64 {
    let p = problem.p_watts();
    let noise = problem.noise_watts();
    let mut total = 0.0;
    for (k, bk) in band.iter().enumerate() {
        let Some(b) = *bk else { continue };
        let interference: f64 = band
            .iter()
            .enumerate()
            .filter(|&(j, bj)| j != k && *bj == Some(b))
            .map(|(j, _)| p * gains.get(j, k, b))
            .sum();
        total += (1.0 + p * gains.get(k, k, b) / (noise + interference)).log2();
    }
    total
}

/// Σ_k log2(1 + SINR_k), unit bandwidth per sub-band.
pub fn sum_rate(problem: &D2dProblem, assignment: &[usize], gains: &GainTensor) -> Result<f64> {
    gains.check(problem)?;
    if assignment.len() != problem.k() {
        return input("assignment length differs from the pair count");
    }
    if assignment.iter().any(|&b| b >= problem.n_bands) {
        return input("assignment uses a band outside the plan");
    }
    let band: Vec<Option<usize>> = assignment.iter().map(|&b| Some(b)).collect();
    Ok(rate_of_active(problem, &band, gains))
}

/// Sequential greedy: each pair, in `order` (default: index order), takes
/// the band maximizing the partial sum rate of the pairs placed so far plus
/// itself; ties go to the lowest band.
pub fn greedy_assign(problem: &D2dProblem, predicted: &GainTensor, order: Option<&[usize]>) -> Result<Vec<usize>> {
    predicted.check(problem)?;
    let k = problem.k();
    let default_order: Vec<usize> = (0..k).collect();
    let order = order.unwrap_or(&default_order);
    let mut seen = vec![false; k];
    if order.len() != k || order.iter().any(|&i| i >= k || std::mem::replace(&mut seen[i], true)) {
        return input("order must be a permutation of the pair indices");
    }
    let mut band: Vec<Option<usize>> = vec![None; k];
    for &pair in order {
        let mut best = (f64::NEG_INFINITY, 0);
        for b in 0..problem.n_bands {
            band[pair] = Some(b);
            let r = rate_of_active(problem, &band, predicted);
            if r > best.0 {
                best = (r, b);
            }
        }
        band[pair] = Some(best.1);
    }
    Ok(band.into_iter().map(|b| b.expect("every pair assigned")).collect())
}

/// Partial predicted sum rate at the greedy decision point of `order[step]`
/// when that pair uses `band`.
pub fn greedy_step_rate(
    problem: &D2dProblem,
    predicted: &GainTensor,
    assignment: &[usize],
    order: &[usize],
    step: usize,
    band: usize,
) -> f64 {
    let mut active: Vec<Option<usize>> = vec![None; problem.k()];
    for &i in &order[..step] {
        active[i] = Some(assignment[i]);
    }
    active[order[step]] = Some(band);
    rate_of_active(problem, &active, predicted)
}

/// Exhaustive search over all N^K assignments in lexicographic order; ties
/// keep the first (smallest) assignment.
pub fn brute_force_assign(problem: &D2dProblem, gains: &GainTensor) -> Result<(Vec<usize>, f64)> {
    gains.check(problem)?;
    let k = problem.k();
    let n = problem.n_bands;
    if (n as f64).powi(k as i32) > BRUTE_FORCE_LIMIT {
        return Err(CkmError::Size(format!("N^K = {n}^{k} exceeds {BRUTE_FORCE_LIMIT}")));
    }
    let mut cur = vec![0usize; k];
    let mut best = (cur.clone(), f64::NEG_INFINITY);
    loop {
        let r = sum_rate(problem, &cur, gains)?;
        if r > best.1 {
            best = (cur.clone(), r);
        }
        // odometer, last position fastest
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < n {
                break;
            }
            cur[i] = 0;
        }
    }
}

fn tensor_from_links(
    problem: &D2dProblem,
    link: impl Fn(&Point3, &Point3) -> Result<Vec<f64>> + Sync,
) -> Result<GainTensor> {
    let k = problem.k();
    let n = problem.n_bands;
    let rows: Vec<Vec<f64>> = (0..k * k)
        .into_par_iter()
        .map(|idx| {
            let (j, r) = (idx / k, idx % k);
            let g = link(&problem.pairs[j].0, &problem.pairs[r].1)?;
            if g.len() != n {
                return input(format!("predictor returned {} bands, expected {n}", g.len()));
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;
    GainTensor::from_vec(k, n, rows.concat())
}

/// Oracle gains over the scene's band plan.
pub fn true_gains(scene: &Scene, problem: &D2dProblem, oracle: &OracleConfig) -> Result<GainTensor> {
    if scene.n_bands() != problem.n_bands {
        return Err(CkmError::Config("scene band plan differs from the problem's N".into()));
    }
    tensor_from_links(problem, |tx, rx| {
        let ps = trace_paths(scene, tx, rx, oracle)?;
        Ok(scene
            .band_plan()
            .iter()
            .map(|&f| db_to_linear_power(narrowband_gain_db(&ps, f)))
            .collect())
    })
}

/// Channel predictor driving the assignment.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    /// Oracle gains.
    Perfect,
    /// IDW-KNN lookup in a table CGM.
    TableCgm(&'a TableCkm),
    /// Learned CGM.
    MlpCgm(&'a Mlp),
    /// Fitted distance/frequency model.
    PathLoss(&'a PlModel),
}

impl Predictor<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Perfect => "perfect",
            Predictor::TableCgm(_) => "cgm",
            Predictor::MlpCgm(_) => "cgm_mlp",
            Predictor::PathLoss(_) => "plfit",
        }
    }
}

pub fn predicted_gains(
    scene: &Scene,
    problem: &D2dProblem,
    predictor: Predictor<'_>,
    oracle: &OracleConfig,
) -> Result<GainTensor> {
    match predictor {
        Predictor::Perfect => true_gains(scene, problem, oracle),
        Predictor::TableCgm(map) => {
            if map.kind() != MapKind::Cgm || map.value_dim() != problem.n_bands {
                return Err(CkmError::Config("CGM predictor needs a gain map with N bands".into()));
            }
            tensor_from_links(problem, |tx, rx| {
                Ok(map
                    .query(&[tx.x, tx.y, rx.x, rx.y])?
                    .into_iter()
                    .map(db_to_linear_power)
                    .collect())
            })
        }
        Predictor::MlpCgm(net) => {
            if net.plan().input_dim() != 4 || net.plan().output_dim() != problem.n_bands {
                return Err(CkmError::Config("MLP predictor needs a 4-input, N-output network".into()));
            }
            tensor_from_links(problem, |tx, rx| {
                Ok(net
                    .forward(&[tx.x, tx.y, rx.x, rx.y])?
                    .into_iter()
                    .map(db_to_linear_power)
                    .collect())
            })
        }
        Predictor::PathLoss(model) => tensor_from_links(problem, |tx, rx| {
            let d = tx.distance(rx);
            scene
                .band_plan()
                .iter()
                .map(|&f| model.predict(d, f).map(db_to_linear_power))
                .collect()
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeOutcome {
    pub predictor: String,
    pub assignment: Vec<usize>,
    /// Sum rate of `assignment` evaluated on the oracle gains.
    pub true_sum_rate: f64,
    /// Sum rate the predictor expected.
    pub predicted_sum_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_gains: Option<GainTensor>,
}

#[derive(Debug, Clone, Serialize)]
pub struct D2dReport {
    pub k: usize,
    pub n: usize,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub schemes: Vec<SchemeOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_gains: Option<GainTensor>,
}

impl D2dReport {
    pub fn rate(&self, predictor: &str) -> Option<f64> {
        self.schemes
            .iter()
            .find(|s| s.predictor == predictor)
            .map(|s| s.true_sum_rate)
    }

    /// Drops the K²·N gain tensors (kept by default).
    pub fn without_gains(mut self) -> Self {
        self.true_gains = None;
        for s in &mut self.schemes {
            s.predicted_gains = None;
        }
        self
    }
}

/// Greedy assignment under each predictor, scored on the true gains.
pub fn run_d2d_experiment(
    scene: &Scene,
    problem: &D2dProblem,
    predictors: &[Predictor<'_>],
    oracle: &OracleConfig,
    order: Option<&[usize]>,
) -> Result<D2dReport> {
    let truth = true_gains(scene, problem, oracle)?;
    let mut schemes = Vec::with_capacity(predictors.len());
    for &p in predictors {
        let predicted = match p {
            Predictor::Perfect => truth.clone(),
            _ => predicted_gains(scene, problem, p, oracle)?,
        };
        let assignment = greedy_assign(problem, &predicted, order)?;
        schemes.push(SchemeOutcome {
            predictor: p.name().to_string(),
            true_sum_rate: sum_rate(problem, &assignment, &truth)?,
            predicted_sum_rate: sum_rate(problem, &assignment, &predicted)?,
            assignment,
            predicted_gains: Some(predicted),
        });
    }
    Ok(D2dReport {
        k: problem.k(),
        n: problem.n_bands,
        tx_power_dbm: problem.tx_power_dbm,
        noise_dbm: problem.noise_dbm,
        schemes,
        true_gains: Some(truth),
    })
}

/// Random pair placement: transmitters uniform over outdoor points, each
/// receiver at a uniform distance in `[min_dist, max_dist]` and uniform
/// bearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairLayout {
    pub n_pairs: usize,
    pub min_dist: f64,
    pub max_dist: f64,
    pub height: f64,
    /// Inset from the scene edge for all nodes, m.
    pub margin: f64,
}

impl Default for PairLayout {
    fn default() -> Self {
        Self {
            n_pairs: 30,
            min_dist: 5.0,
            max_dist: 20.0,
            height: 1.5,
            margin: 1.0,
        }
    }
}

impl PairLayout {
    pub fn generate(&self, scene: &Scene, seed: u64) -> Result<Vec<(Point3, Point3)>> {
        if !(self.min_dist > 0.0 && self.max_dist >= self.min_dist) {
            return input("pair distance range must be positive and ordered");
        }
        let b = scene.bounds();
        let (x0, x1) = (b.min[0] + self.margin, b.max[0] - self.margin);
        let (y0, y1) = (b.min[1] + self.margin, b.max[1] - self.margin);
        if !(x0 < x1 && y0 < y1) {
            return input("margin leaves no room for nodes");
        }
        let ok = |p: &Point3| p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1 && !scene.is_indoor(p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(self.n_pairs);
        let limit = 10_000 * self.n_pairs.max(1);
        let mut draws = 0;
        while pairs.len() < self.n_pairs {
            draws += 1;
            if draws > limit {
                return Err(CkmError::Coverage("could not place D2D pairs outdoors".into()));
            }
            let tx = Point3::new(rng.random_range(x0..=x1), rng.random_range(y0..=y1), self.height);
            let r = rng.random_range(self.min_dist..=self.max_dist);
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let rx = Point3::new(tx.x + r * a.cos(), tx.y + r * a.sin(), self.height);
            if ok(&tx) && ok(&rx) {
                pairs.push((tx, rx));
            }
        }
        Ok(pairs)
    }
}
