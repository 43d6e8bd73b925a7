//! Training-free mmWave beam selection with a channel path map.
//!
//! The BS carries an `n_z × n_y` half-wavelength UPA; the UE has a single
//! antenna. Steering vectors are indexed `m_y · n_z + m_z` and use spatial
//! frequencies `u = sinθ·sinφ` (horizontal) and `v = cosθ` (vertical). The
//! codebook samples `u` and `v` on `[−1, 1)` at steps `1/(2·n_y)` and
//! `1/(2·n_z)`, offset by half a step.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dataset::MapKind;
use crate::error::{input, CkmError, Result};
use crate::propagation::{departure_angles, free_space_gain_db, trace_paths, OracleConfig, Path};
use crate::scene::{Point3, Scene};
use crate::store::{PathSlot, PathTriple, TableCkm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpaGeometry {
    pub n_y: usize,
    pub n_z: usize,
}

impl UpaGeometry {
    pub fn new(n_y: usize, n_z: usize) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return input("array dimensions must be >= 1");
        }
        Ok(Self { n_y, n_z })
    }

    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }
}

pub type ChannelVector = Vec<Complex64>;

/// Unit-norm response at spatial frequencies `(u, v)`.
pub fn steering_vector(geom: &UpaGeometry, u: f64, v: f64) -> ChannelVector {
    let scale = 1.0 / (geom.n_elements() as f64).sqrt();
    let mut out = Vec::with_capacity(geom.n_elements());
    for my in 0..geom.n_y {
        for mz in 0..geom.n_z {
            out.push(Complex64::from_polar(scale, PI * (my as f64 * u + mz as f64 * v)));
        }
    }
    out
}

/// Array response toward zenith `theta`, azimuth `phi`.
pub fn upa_response(geom: &UpaGeometry, theta: f64, phi: f64) -> ChannelVector {
    steering_vector(geom, theta.sin() * phi.sin(), theta.cos())
}

/// `wᴴ h`.
pub fn inner(w: &[Complex64], h: &[Complex64]) -> Complex64 {
    w.iter().zip(h).map(|(a, b)| a.conj() * b).sum()
}

#[derive(Debug, Clone)]
pub struct BeamCodebook {
    geom: UpaGeometry,
    grid: Vec<(f64, f64)>,
    beams: Vec<ChannelVector>,
}

/// Grid samples `−1 + (k + ½)·step`, `k = 0 .. 2/step`.
fn axis_samples(n: usize) -> Vec<f64> {
    let step = 1.0 / (2.0 * n as f64);
    (0..4 * n).map(|k| -1.0 + (k as f64 + 0.5) * step).collect()
}

impl BeamCodebook {
    /// `4·n_y × 4·n_z` beams, `u` outer and `v` inner.
    pub fn build(geom: &UpaGeometry) -> Self {
        let us = axis_samples(geom.n_y);
        let vs = axis_samples(geom.n_z);
        let grid: Vec<(f64, f64)> = us
            .iter()
            .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
            .collect();
        let beams = grid.iter().map(|&(u, v)| steering_vector(geom, u, v)).collect();
        Self {
            geom: *geom,
            grid,
            beams,
        }
    }

    pub fn geometry(&self) -> &UpaGeometry {
        &self.geom
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beam(&self, i: usize) -> &[Complex64] {
        &self.beams[i]
    }

    /// Spatial frequencies `(u, v)` of beam `i`.
    pub fn grid_point(&self, i: usize) -> (f64, f64) {
        self.grid[i]
    }

    pub fn grid_step(&self) -> (f64, f64) {
        (1.0 / (2.0 * self.geom.n_y as f64), 1.0 / (2.0 * self.geom.n_z as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamChoice {
    pub index: usize,
    /// `|wᴴ h|` of the chosen beam.
    pub gain: f64,
    /// Set when `h` is identically zero; `index` is then 0.
    pub no_signal: bool,
}

/// Matched-filter scan: the beam maximizing `|wᴴ h|`, lowest index on ties.
pub fn select_beam(codebook: &BeamCodebook, h: &[Complex64]) -> Result<BeamChoice> {
    if h.len() != codebook.geom.n_elements() {
        return input(format!(
            "channel has {} entries, codebook expects {}",
            h.len(),
            codebook.geom.n_elements()
        ));
    }
    if h.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
        return Ok(BeamChoice {
            index: 0,
            gain: 0.0,
            no_signal: true,
        });
    }
    let mut best = BeamChoice {
        index: 0,
        gain: f64::NEG_INFINITY,
        no_signal: false,
    };
    for (i, w) in codebook.beams.iter().enumerate() {
        let g = inner(w, h).norm_sqr();
        if g > best.gain {
            best.index = i;
            best.gain = g;
        }
    }
    best.gain = best.gain.sqrt();
    Ok(best)
}

/// `log2(1 + p_over_n · |wᴴ h|²)`.
pub fn beamformed_rate(h_true: &[Complex64], w: &[Complex64], p_over_n: f64) -> f64 {
    (1.0 + p_over_n * inner(w, h_true).norm_sqr()).log2()
}

fn sum_paths<'a>(slots: impl Iterator<Item = &'a PathSlot>, geom: &UpaGeometry) -> ChannelVector {
    let root_n = (geom.n_elements() as f64).sqrt();
    let mut h = vec![Complex64::new(0.0, 0.0); geom.n_elements()];
    for s in slots {
        let coef = Complex64::from_polar(10f64.powf(s.gain_db / 20.0) * root_n, s.phase_rad);
        for (hi, ai) in h.iter_mut().zip(upa_response(geom, s.zenith_rad, s.azimuth_rad)) {
            *hi += coef * ai;
        }
    }
    h
}

/// Channel implied by the present slots of a path triple.
pub fn reconstruct_channel(triple: &PathTriple, geom: &UpaGeometry) -> ChannelVector {
    sum_paths(triple.present(), geom)
}

/// Narrowband array channel of a traced path list at the carrier.
pub fn channel_from_paths(paths: &[Path], geom: &UpaGeometry) -> ChannelVector {
    let slots: Vec<PathSlot> = paths.iter().map(PathSlot::from).collect();
    sum_paths(slots.iter(), geom)
}

/// Horizontal displacement with uniform bearing and Rayleigh radius of mean
/// `mean_err` (scale `mean_err·√(2/π)`).
pub fn perturb_location<R: Rng + ?Sized>(loc: &Point3, mean_err: f64, rng: &mut R) -> Result<Point3> {
    if !(mean_err.is_finite() && mean_err >= 0.0) {
        return input("mean localization error must be >= 0");
    }
    let bearing = rng.random_range(0.0..2.0 * PI);
    let u: f64 = rng.random();
    if mean_err == 0.0 {
        return Ok(*loc);
    }
    let sigma = mean_err * (2.0 / PI).sqrt();
    let r = sigma * (-2.0 * (1.0 - u).ln()).sqrt();
    Ok(Point3::new(loc.x + r * bearing.cos(), loc.y + r * bearing.sin(), loc.z))
}

/// `p_over_n` giving 10 bit/s/Hz for a free-space LoS path at 100 m on a
/// 100-element array, at the given carrier.
pub fn default_p_over_n(carrier_hz: f64) -> f64 {
    let g_ref = 10f64.powf(free_space_gain_db(100.0, carrier_hz).expect("positive inputs") / 10.0);
    (2f64.powi(10) - 1.0) / (100.0 * g_ref)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamExperimentConfig {
    pub n_y_values: Vec<usize>,
    pub n_z: usize,
    pub errors_m: Vec<f64>,
    pub n_locations: usize,
    pub ue_height: f64,
    /// Defaults to [`default_p_over_n`] at the scene carrier.
    pub p_over_n: Option<f64>,
    pub seed: u64,
}

impl Default for BeamExperimentConfig {
    fn default() -> Self {
        Self {
            n_y_values: vec![2, 5, 10, 20],
            n_z: 10,
            errors_m: vec![0.0, 1.0, 5.0],
            n_locations: 1000,
            ue_height: 1.5,
            p_over_n: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamScheme {
    Perfect,
    Cpm,
    Location,
}

impl BeamScheme {
    pub fn name(self) -> &'static str {
        match self {
            BeamScheme::Perfect => "perfect",
            BeamScheme::Cpm => "cpm",
            BeamScheme::Location => "location",
        }
    }
}

/// Rates at one UE location; `cpm[i][e]` and `location[i][e]` index the
/// `n_y` sweep and the error sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationRates {
    pub draw_index: u64,
    pub ue: Point3,
    pub n_paths: usize,
    pub perfect: Vec<f64>,
    pub cpm: Vec<Vec<f64>>,
    pub location: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamCell {
    pub scheme: BeamScheme,
    pub n_y: usize,
    pub n_z: usize,
    pub mean_err_m: f64,
    pub avg_rate: f64,
    pub ratio_vs_perfect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamReport {
    pub p_over_n: f64,
    pub n_locations: usize,
    pub draws: u64,
    pub cells: Vec<BeamCell>,
}

impl BeamReport {
    pub fn avg(&self, scheme: BeamScheme, n_y: usize, err: f64) -> Option<f64> {
        self.cell(scheme, n_y, err).map(|c| c.avg_rate)
    }

    pub fn cell(&self, scheme: BeamScheme, n_y: usize, err: f64) -> Option<&BeamCell> {
        self.cells.iter().find(|c| {
            c.scheme == scheme && c.n_y == n_y && (scheme == BeamScheme::Perfect || c.mean_err_m == err)
        })
    }
}

const LOCATION_STREAM_KEY: u64 = 0x6c6f_6361_7469_6f6e;
const PERTURB_STREAM_KEY: u64 = 0x7065_7274_7572_6221;

fn stream_rng(seed: u64, key: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key);
    rng.set_stream(index);
    rng
}

/// UE locations drawn uniformly over the scene, keeping those with at least
/// one detectable path. Draw `i` uses its own random stream.
pub fn draw_ue_locations(
    scene: &Scene,
    oracle: &OracleConfig,
    n_locations: usize,
    ue_height: f64,
    seed: u64,
) -> Result<(Vec<(u64, Point3)>, u64)> {
    let bs = scene
        .bs_location()
        .ok_or_else(|| CkmError::Config("beam experiment needs a scene bs_location".into()))?;
    let b = *scene.bounds();
    let limit = 100 * n_locations as u64;
    let mut accepted = Vec::with_capacity(n_locations);
    let mut draw = 0u64;
    while accepted.len() < n_locations {
        if draw >= limit {
            return Err(CkmError::Coverage(format!(
                "only {} of {n_locations} UE locations have a path after {limit} draws",
                accepted.len()
            )));
        }
        let mut rng = stream_rng(seed, LOCATION_STREAM_KEY, draw);
        let ue = Point3::new(
            rng.random_range(b.min[0]..b.max[0]),
            rng.random_range(b.min[1]..b.max[1]),
            ue_height,
        );
        if ue != bs && !trace_paths(scene, &bs, &ue, oracle)?.is_empty() {
            accepted.push((draw, ue));
        }
        draw += 1;
    }
    Ok((accepted, draw))
}

/// Scores every scheme at the given UE locations. The perturbation for
/// draw `i` is the same bearing and normalized radius for every error level.
pub fn evaluate_locations(
    scene: &Scene,
    cpm: &TableCkm,
    oracle: &OracleConfig,
    cfg: &BeamExperimentConfig,
    locations: &[(u64, Point3)],
    p_over_n: f64,
) -> Result<Vec<LocationRates>> {
    let bs = scene
        .bs_location()
        .ok_or_else(|| CkmError::Config("beam experiment needs a scene bs_location".into()))?;
    if cpm.kind() != MapKind::Cpm {
        return Err(CkmError::Config("beam experiment needs a path map".into()));
    }
    let geoms = cfg
        .n_y_values
        .iter()
        .map(|&n_y| UpaGeometry::new(n_y, cfg.n_z))
        .collect::<Result<Vec<_>>>()?;
    let books: Vec<BeamCodebook> = geoms.iter().map(BeamCodebook::build).collect();

    locations
        .par_iter()
        .map(|&(draw, ue)| {
            let ps = trace_paths(scene, &bs, &ue, oracle)?;
            let mut predicted = Vec::with_capacity(cfg.errors_m.len());
            let mut assumed = Vec::with_capacity(cfg.errors_m.len());
            for &err in &cfg.errors_m {
                let mut rng = stream_rng(cfg.seed, PERTURB_STREAM_KEY, draw);
                let est = perturb_location(&ue, err, &mut rng)?;
                predicted.push(cpm.query_paths([est.x, est.y])?);
                assumed.push(departure_angles(&bs, &est));
            }
            let mut out = LocationRates {
                draw_index: draw,
                ue,
                n_paths: ps.paths.len(),
                perfect: Vec::new(),
                cpm: Vec::new(),
                location: Vec::new(),
            };
            for (geom, book) in geoms.iter().zip(&books) {
                let h = channel_from_paths(&ps.paths, geom);
                let rate_of = |guess: &[Complex64]| -> Result<f64> {
                    let choice = select_beam(book, guess)?;
                    Ok(beamformed_rate(&h, book.beam(choice.index), p_over_n))
                };
                out.perfect.push(rate_of(&h)?);
                // an empty predicted triple carries no direction; the
                // estimated location is all the scheme has left
                out.cpm.push(
                    predicted
                        .iter()
                        .zip(&assumed)
                        .map(|(t, &(th, ph))| {
                            if t.is_empty() {
                                rate_of(&upa_response(geom, th, ph))
                            } else {
                                rate_of(&reconstruct_channel(t, geom))
                            }
                        })
                        .collect::<Result<_>>()?,
                );
                out.location.push(
                    assumed
                        .iter()
                        .map(|&(th, ph)| rate_of(&upa_response(geom, th, ph)))
                        .collect::<Result<_>>()?,
                );
            }
            Ok(out)
        })
        .collect()
}

/// Averages per `(scheme, n_y, error)`.
pub fn summarize(cfg: &BeamExperimentConfig, rates: &[LocationRates], p_over_n: f64, draws: u64) -> BeamReport {
    let n = rates.len().max(1) as f64;
    let mut cells = Vec::new();
    for (i, &n_y) in cfg.n_y_values.iter().enumerate() {
        let perfect = rates.iter().map(|r| r.perfect[i]).sum::<f64>() / n;
        let ratio = |v: f64| if perfect > 0.0 { v / perfect } else { f64::NAN };
        cells.push(BeamCell {
            scheme: BeamScheme::Perfect,
            n_y,
            n_z: cfg.n_z,
            mean_err_m: 0.0,
            avg_rate: perfect,
            ratio_vs_perfect: ratio(perfect),
        });
        for (scheme, pick) in [
            (BeamScheme::Cpm, (|r: &LocationRates, i: usize, e: usize| r.cpm[i][e]) as fn(&LocationRates, usize, usize) -> f64),
            (BeamScheme::Location, |r: &LocationRates, i: usize, e: usize| r.location[i][e]),
        ] {
            for (e, &err) in cfg.errors_m.iter().enumerate() {
                let avg = rates.iter().map(|r| pick(r, i, e)).sum::<f64>() / n;
                cells.push(BeamCell {
                    scheme,
                    n_y,
                    n_z: cfg.n_z,
                    mean_err_m: err,
                    avg_rate: avg,
                    ratio_vs_perfect: ratio(avg),
                });
            }
        }
    }
    BeamReport {
        p_over_n,
        n_locations: rates.len(),
        draws,
        cells,
    }
}

/// Full sweep: draw locations, score all schemes, average.
pub fn run_beam_experiment(
    scene: &Scene,
    cpm: &TableCkm,
    oracle: &OracleConfig,
    cfg: &BeamExperimentConfig,
) -> Result<(BeamReport, Vec<LocationRates>)> {
    let p_over_n = cfg.p_over_n.unwrap_or_else(|| default_p_over_n(scene.carrier_hz()));
    if !(p_over_n.is_finite() && p_over_n > 0.0) {
        return Err(CkmError::Config("p_over_n must be positive".into()));
    }
    let (locs, draws) = draw_ue_locations(scene, oracle, cfg.n_locations, cfg.ue_height, cfg.seed)?;
    let rates = evaluate_locations(scene, cpm, oracle, cfg, &locs, p_over_n)?;
    Ok((summarize(cfg, &rates, p_over_n, draws), rates))
}
