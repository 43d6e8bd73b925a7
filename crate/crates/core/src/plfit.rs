//! Log-distance path-loss baseline with a frequency term:
//!
//! `gain_db = −(beta + 10·alpha·log10(d) + 10·gamma·log10(f / f_ref))`
//!
//! fitted by ordinary least squares. `f_ref` is the lowest frequency in the
//! training data.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, MapKind};
use crate::error::{input, CkmError, Result};
use crate::scene::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlSample {
    pub distance_m: f64,
    pub freq_hz: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub f_ref_hz: f64,
    pub residual_rms_db: f64,
}

impl PlModel {
    /// Predicted gain (dB) at distance `d` and frequency `f`.
    pub fn predict(&self, d: f64, f: f64) -> Result<f64> {
        if !(d.is_finite() && d > 0.0) {
            return input(format!("distance must be positive, got {d}"));
        }
        if !(f.is_finite() && f > 0.0) {
            return input(format!("frequency must be positive, got {f}"));
        }
        Ok(self.eval(d, f))
    }

    fn eval(&self, d: f64, f: f64) -> f64 {
        -(self.beta + 10.0 * self.alpha * d.log10() + 10.0 * self.gamma * (f / self.f_ref_hz).log10())
    }

    /// Sum of squared residuals over finite-gain samples.
    pub fn sse(&self, samples: &[PlSample]) -> f64 {
        samples
            .iter()
            .filter(|s| s.gain_db.is_finite())
            .map(|s| (s.gain_db - self.eval(s.distance_m, s.freq_hz)).powi(2))
            .sum()
    }
}

pub fn predict_pl(model: &PlModel, d: f64, f: f64) -> Result<f64> {
    model.predict(d, f)
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// OLS fit; samples with non-finite gain are skipped. With `fit_gamma`
/// false the frequency term is fixed at zero.
pub fn fit_pathloss(samples: &[PlSample], fit_gamma: bool) -> Result<PlModel> {
    let rows: Vec<&PlSample> = samples.iter().filter(|s| s.gain_db.is_finite()).collect();
    if rows.iter().any(|s| !(s.distance_m > 0.0 && s.freq_hz > 0.0)) {
        return input("distances and frequencies must be positive");
    }
    let n_params = if fit_gamma { 3 } else { 2 };
    if rows.len() < n_params {
        return Err(CkmError::Fit {
            column: "intercept",
            reason: format!("{} usable rows for {n_params} parameters", rows.len()),
        });
    }
    if distinct(rows.iter().map(|s| s.distance_m)) < 2 {
        return Err(CkmError::Fit {
            column: "distance",
            reason: "all rows share one distance".into(),
        });
    }
    if fit_gamma && distinct(rows.iter().map(|s| s.freq_hz)) < 2 {
        return Err(CkmError::Fit {
            column: "frequency",
            reason: "all rows share one frequency".into(),
        });
    }
    let f_ref = rows.iter().map(|s| s.freq_hz).fold(f64::INFINITY, f64::min);

    // regressors (log-distance, log-frequency), standardized so the normal
    // equations stay well conditioned; y = c0 + c1·z1 + c2·z2
    let feats: Vec<[f64; 2]> = rows
        .iter()
        .map(|s| [-10.0 * s.distance_m.log10(), -10.0 * (s.freq_hz / f_ref).log10()])
        .collect();
    let k = n_params - 1;
    let n = rows.len() as f64;
    let mut mean = [0.0; 2];
    let mut scale = [1.0; 2];
    for j in 0..k {
        mean[j] = feats.iter().map(|f| f[j]).sum::<f64>() / n;
        let var = feats.iter().map(|f| (f[j] - mean[j]).powi(2)).sum::<f64>() / n;
        scale[j] = var.sqrt();
    }
    let design = |f: &[f64; 2]| -> [f64; 3] {
        let mut r = [1.0, 0.0, 0.0];
        for j in 0..k {
            r[j + 1] = (f[j] - mean[j]) / scale[j];
        }
        r
    };
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (f, s) in feats.iter().zip(&rows) {
        let r = design(f);
        for i in 0..n_params {
            aty[i] += r[i] * s.gain_db;
            for j in 0..n_params {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let c = solve(ata, aty, n_params).map_err(|col| CkmError::Fit {
        column: ["intercept", "distance", "frequency"][col],
        reason: "normal equations are singular".into(),
    })?;

    // back to the physical parameters: gain = −beta + alpha·x1 + gamma·x2
    let alpha = c[1] / scale[0];
    let gamma = if fit_gamma { c[2] / scale[1] } else { 0.0 };
    let beta = -(c[0] - alpha * mean[0] - if fit_gamma { gamma * mean[1] } else { 0.0 });
    let mut model = PlModel {
        alpha,
        beta,
        gamma,
        f_ref_hz: f_ref,
        residual_rms_db: 0.0,
    };
    model.residual_rms_db = (model.sse(samples) / n).sqrt();
    Ok(model)
}

/// Gaussian elimination with partial pivoting on the leading `n × n`
/// block. Returns the failing column on a (near-)zero pivot.
fn solve(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> std::result::Result<[f64; 3], usize> {
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[piv][col].abs() <= 1e-12 * norm.max(1e-300) {
            return Err(col);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| a[row][j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Expands CGM rows into one sample per (row, band), using the map's fixed
/// heights for the 3D distance. Rows with coincident endpoints are skipped.
pub fn samples_from_cgm(ds: &Dataset) -> Result<Vec<PlSample>> {
    if ds.meta.kind != MapKind::Cgm {
        return Err(CkmError::Schema("path-loss fit needs a CGM dataset".into()));
    }
    ds.validate()?;
    let mut out = Vec::with_capacity(ds.rows.len() * ds.meta.band_plan.len());
    for r in &ds.rows {
        let tx = Point3::new(r.key[0], r.key[1], ds.meta.tx_height);
        let rx = Point3::new(r.key[2], r.key[3], ds.meta.rx_height);
        let d = tx.distance(&rx);
        if d <= 0.0 {
            continue;
        }
        for (&f, &g) in ds.meta.band_plan.iter().zip(&r.value) {
            out.push(PlSample {
                distance_m: d,
                freq_hz: f,
                gain_db: g,
            });
        }
    }
    Ok(out)
}
