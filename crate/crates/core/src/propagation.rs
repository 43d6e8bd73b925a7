//! Deterministic multipath oracle.
//!
//! Paths are the line-of-sight ray plus first-order specular reflections off
//! vertical building faces, found with the image method. Every path carries
//! its Friis gain over the unfolded length, a fixed per-bounce loss, the
//! carrier phase implied by its delay, and the departure angles at the
//! transmitter.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dataset::{Dataset, DatasetMeta, MapKind, Row};
use crate::error::{input, CkmError, Result};
use crate::scene::{Point3, Scene};
use crate::store::PathTriple;
use crate::SPEED_OF_LIGHT;

/// Coherent sums whose magnitude falls below this fraction of the summed
/// amplitudes are treated as exact cancellation.
const CANCELLATION_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Amplitude gain in dB (20·log10 of the linear amplitude).
    pub gain_db: f64,
    /// Carrier phase in [0, 2π).
    pub phase_rad: f64,
    pub delay_s: f64,
    /// Zenith angle of departure in [0, π].
    pub zenith_aod_rad: f64,
    /// Azimuth angle of departure in (−π, π].
    pub azimuth_aod_rad: f64,
    /// Number of reflections (0 for LoS).
    pub bounces: u8,
}

impl Path {
    pub fn amplitude(&self) -> f64 {
        10f64.powf(self.gain_db / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub tx: Point3,
    pub rx: Point3,
    /// Sorted by descending gain.
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn strongest(&self) -> Option<&Path> {
        self.paths.first()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub max_reflections: u8,
    pub reflection_loss_db: f64,
    pub noise_floor_dbm: f64,
    pub tx_power_dbm: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_reflections: 1,
            reflection_loss_db: 6.0,
            noise_floor_dbm: -100.0,
            tx_power_dbm: 30.0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_reflections > 1 {
            return Err(CkmError::Config(format!(
                "max_reflections must be 0 or 1, got {}",
                self.max_reflections
            )));
        }
        if !(self.reflection_loss_db.is_finite() && self.reflection_loss_db >= 0.0) {
            return Err(CkmError::Config("reflection_loss_db must be >= 0".into()));
        }
        if !self.noise_floor_dbm.is_finite() || !self.tx_power_dbm.is_finite() {
            return Err(CkmError::Config("power levels must be finite".into()));
        }
        Ok(())
    }

    /// Weakest path gain (dB) that is still detectable.
    pub fn min_detectable_gain_db(&self) -> f64 {
        self.noise_floor_dbm - self.tx_power_dbm
    }
}

/// Friis free-space amplitude gain, −20·log10(4πdf/c).
pub fn free_space_gain_db(d: f64, f: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return input(format!("distance must be positive, got {d}"));
    }
    if !(f.is_finite() && f > 0.0) {
        return input(format!("frequency must be positive, got {f}"));
    }
    Ok(friis_db(d, f))
}

fn friis_db(d: f64, f: f64) -> f64 {
    -20.0 * (4.0 * PI * d * f / SPEED_OF_LIGHT).log10()
}

/// Carrier phase of a path with the given delay, wrapped to [0, 2π).
pub fn carrier_phase(f: f64, delay_s: f64) -> f64 {
    wrap_2pi(-2.0 * PI * f * delay_s)
}

pub(crate) fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Zenith and azimuth of the direction `from → to`.
pub fn departure_angles(from: &Point3, to: &Point3) -> (f64, f64) {
    let d = to.sub(from);
    let len = d.norm();
    let zenith = (d.z / len).clamp(-1.0, 1.0).acos();
    let mut azimuth = d.y.atan2(d.x);
    if azimuth <= -PI {
        azimuth = PI;
    }
    (zenith, azimuth)
}

fn make_path(scene: &Scene, tx: &Point3, first_hop: &Point3, length: f64, bounces: u8, loss_db: f64) -> Path {
    let fc = scene.carrier_hz();
    let delay_s = length / SPEED_OF_LIGHT;
    let (zenith, azimuth) = departure_angles(tx, first_hop);
    Path {
        gain_db: friis_db(length, fc) - loss_db,
        phase_rad: carrier_phase(fc, delay_s),
        delay_s,
        zenith_aod_rad: zenith,
        azimuth_aod_rad: azimuth,
        bounces,
    }
}

/// A vertical building face: the plane `axis = coord`, facing `outward`.
struct Face {
    axis: usize,
    coord: f64,
    outward: f64,
    /// Extent along the other horizontal axis.
    span: (f64, f64),
    height: f64,
}

fn get(p: &Point3, axis: usize) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

fn with(p: &Point3, axis: usize, v: f64) -> Point3 {
    if axis == 0 {
        Point3::new(v, p.y, p.z)
    } else {
        Point3::new(p.x, v, p.z)
    }
}

fn faces(scene: &Scene) -> impl Iterator<Item = Face> + '_ {
    scene.buildings().iter().flat_map(|b| {
        let (lo, hi) = (b.min_corner, b.max_corner);
        let h = b.max_corner.z;
        [
            Face { axis: 0, coord: lo.x, outward: -1.0, span: (lo.y, hi.y), height: h },
            Face { axis: 0, coord: hi.x, outward: 1.0, span: (lo.y, hi.y), height: h },
            Face { axis: 1, coord: lo.y, outward: -1.0, span: (lo.x, hi.x), height: h },
            Face { axis: 1, coord: hi.y, outward: 1.0, span: (lo.x, hi.x), height: h },
        ]
    })
}

/// Specular point of `tx → face → rx`, when it exists on the face.
fn specular_point(face: &Face, tx: &Point3, rx: &Point3) -> Option<(Point3, f64)> {
    let a = face.axis;
    let other = 1 - a;
    if face.outward * (get(tx, a) - face.coord) <= 0.0 || face.outward * (get(rx, a) - face.coord) <= 0.0 {
        return None;
    }
    let image = with(tx, a, 2.0 * face.coord - get(tx, a));
    let denom = get(rx, a) - get(&image, a);
    let t = (face.coord - get(&image, a)) / denom;
    let p = image.add(&rx.sub(&image).scale(t));
    let p = with(&p, a, face.coord);
    let s = get(&p, other);
    if s < face.span.0 || s > face.span.1 || p.z < 0.0 || p.z > face.height {
        return None;
    }
    Some((p, rx.distance(&image)))
}

/// Traces LoS and single-bounce paths between `tx` and `rx`.
pub fn trace_paths(scene: &Scene, tx: &Point3, rx: &Point3, cfg: &OracleConfig) -> Result<PathSet> {
    cfg.validate()?;
    if !tx.is_finite() || !rx.is_finite() {
        return input("trace_paths: non-finite endpoint");
    }
    if tx == rx {
        return input("trace_paths: tx and rx coincide");
    }
    if !scene.in_bounds(tx) || !scene.in_bounds(rx) {
        return input("trace_paths: endpoint outside scene bounds");
    }

    let mut paths = Vec::new();
    if scene.segment_clear(tx, rx) {
        paths.push(make_path(scene, tx, rx, tx.distance(rx), 0, 0.0));
    }
    if cfg.max_reflections >= 1 {
        for face in faces(scene) {
            let Some((p, length)) = specular_point(&face, tx, rx) else {
                continue;
            };
            if p == *tx || p == *rx {
                continue;
            }
            if scene.segment_clear(tx, &p) && scene.segment_clear(&p, rx) {
                paths.push(make_path(scene, tx, &p, length, 1, cfg.reflection_loss_db));
            }
        }
    }

    let floor = cfg.min_detectable_gain_db();
    paths.retain(|p| p.gain_db >= floor);
    paths.sort_by(|a, b| {
        b.gain_db
            .total_cmp(&a.gain_db)
            .then(a.delay_s.total_cmp(&b.delay_s))
    });
    Ok(PathSet {
        tx: *tx,
        rx: *rx,
        paths,
    })
}

/// Coherent narrowband gain at frequency `f`, in dB; `-inf` when there is
/// no path or the paths cancel.
pub fn narrowband_gain_db(ps: &PathSet, f: f64) -> f64 {
    narrowband_gain_of(&ps.paths, f)
}

pub(crate) fn narrowband_gain_of(paths: &[Path], f: f64) -> f64 {
    if paths.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut sum = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    for p in paths {
        let a = p.amplitude();
        sum += Complex64::from_polar(a, -2.0 * PI * f * p.delay_s);
        total += a;
    }
    let mag = sum.norm();
    if mag <= CANCELLATION_REL * total {
        f64::NEG_INFINITY
    } else {
        20.0 * mag.log10()
    }
}

/// Cell-center grid over the scene bounds at height `z`.
pub fn grid_points(scene: &Scene, step: f64, z: f64) -> Result<Vec<Point3>> {
    crate::store::cell_centers(scene.bounds(), step)
        .map(|(xs, ys)| {
            ys.iter()
                .flat_map(|&y| xs.iter().map(move |&x| Point3::new(x, y, z)))
                .collect()
        })
}

/// [`grid_points`] without the cells whose center lies inside a building.
pub fn outdoor_grid_points(scene: &Scene, step: f64, z: f64) -> Result<Vec<Point3>> {
    let mut pts = grid_points(scene, step, z)?;
    pts.retain(|p| !scene.is_indoor(p));
    Ok(pts)
}

/// One CGM row per ordered (tx, rx) pair with distinct endpoints, holding
/// per-band coherent gains.
pub fn sample_cgm(scene: &Scene, tx_locs: &[Point3], rx_locs: &[Point3], cfg: &OracleConfig) -> Result<Dataset> {
    if tx_locs.is_empty() || rx_locs.is_empty() {
        return input("sample_cgm: location lists must be non-empty");
    }
    let tx_z = tx_locs[0].z;
    let rx_z = rx_locs[0].z;
    if tx_locs.iter().any(|p| p.z != tx_z) || rx_locs.iter().any(|p| p.z != rx_z) {
        return input("sample_cgm: heights must be constant per side");
    }
    let pairs: Vec<(Point3, Point3)> = tx_locs
        .iter()
        .flat_map(|t| rx_locs.iter().map(move |r| (*t, *r)))
        .filter(|(t, r)| t != r)
        .collect();
    let rows = pairs
        .par_iter()
        .map(|(t, r)| {
            let ps = trace_paths(scene, t, r, cfg)?;
            Ok(Row {
                key: vec![t.x, t.y, r.x, r.y],
                value: scene
                    .band_plan()
                    .iter()
                    .map(|&f| narrowband_gain_db(&ps, f))
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        meta: DatasetMeta::for_scene(MapKind::Cgm, scene, tx_z, rx_z),
        rows,
    })
}

/// One CPM row per UE location, from the scene's base station: the three
/// strongest paths, absent slots sentinel-filled.
pub fn sample_cpm(scene: &Scene, ue_locs: &[Point3], cfg: &OracleConfig) -> Result<Dataset> {
    let bs = scene
        .bs_location()
        .ok_or_else(|| CkmError::Config("CPM sampling needs a scene bs_location".into()))?;
    if ue_locs.is_empty() {
        return input("sample_cpm: location list must be non-empty");
    }
    let ue_z = ue_locs[0].z;
    if ue_locs.iter().any(|p| p.z != ue_z) {
        return input("sample_cpm: UE height must be constant");
    }
    let rows = ue_locs
        .par_iter()
        .map(|ue| {
            let ps = trace_paths(scene, &bs, ue, cfg)?;
            Ok(Row {
                key: vec![ue.x, ue.y],
                value: PathTriple::from_paths(&ps.paths).to_values().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        meta: DatasetMeta::for_scene(MapKind::Cpm, scene, bs.z, ue_z),
        rows,
    })
}

/// Dispatches to [`sample_cgm`] or [`sample_cpm`]; `tx_locs` is ignored
/// for CPM rows.
pub fn sample_dataset(
    scene: &Scene,
    kind: MapKind,
    tx_locs: &[Point3],
    rx_locs: &[Point3],
    cfg: &OracleConfig,
) -> Result<Dataset> {
    match kind {
        MapKind::Cgm => sample_cgm(scene, tx_locs, rx_locs, cfg),
        MapKind::Cpm => sample_cpm(scene, rx_locs, cfg),
    }
}
