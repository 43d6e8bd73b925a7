//! Table-based channel knowledge map with IDW-KNN lookup.
//!
//! Entries are kept in insertion order and searched linearly; neighbor ties
//! go to the lower entry index. Gains interpolate linearly in dB, phases and
//! azimuths through the circular mean. In a CGM a band is `-inf` only when
//! every neighbor is; in a CPM a path slot is kept when at least ⌈k/2⌉
//! neighbors have it.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, MapKind, Row};
use crate::error::{input, CkmError, Result};
use crate::propagation::{wrap_2pi, Path};
use crate::scene::Rect;

/// Paths carried by a CPM entry.
pub const CPM_PATHS: usize = 3;
/// Values per CPM entry: (gain, phase, zenith, azimuth) per path.
pub const CPM_VALUE_DIM: usize = 4 * CPM_PATHS;
/// Keys closer than this (m) to a stored key return the stored value.
pub const EXACT_MATCH_DIST: f64 = 1e-9;
/// Export value marking "no detectable path" in azimuth maps (sin φ = 2).
pub const NO_PATH_SIN_AZIMUTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSlot {
    pub gain_db: f64,
    pub phase_rad: f64,
    pub zenith_rad: f64,
    pub azimuth_rad: f64,
}

impl From<&Path> for PathSlot {
    fn from(p: &Path) -> Self {
        Self {
            gain_db: p.gain_db,
            phase_rad: p.phase_rad,
            zenith_rad: p.zenith_aod_rad,
            azimuth_rad: p.azimuth_aod_rad,
        }
    }
}

/// Up to three strongest paths; present slots form a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathTriple {
    pub slots: [Option<PathSlot>; CPM_PATHS],
}

impl PathTriple {
    pub fn from_paths(paths: &[Path]) -> Self {
        let mut t = PathTriple::default();
        for (slot, p) in t.slots.iter_mut().zip(paths) {
            *slot = Some(p.into());
        }
        t
    }

    /// Absent slots are encoded as `(-inf, 0, 0, 0)`.
    pub fn to_values(&self) -> [f64; CPM_VALUE_DIM] {
        let mut v = [0.0; CPM_VALUE_DIM];
        for (l, s) in self.slots.iter().enumerate() {
            let chunk = &mut v[4 * l..4 * l + 4];
            match s {
                Some(s) => chunk.copy_from_slice(&[s.gain_db, s.phase_rad, s.zenith_rad, s.azimuth_rad]),
                None => chunk[0] = f64::NEG_INFINITY,
            }
        }
        v
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != CPM_VALUE_DIM {
            return Err(CkmError::Schema(format!(
                "path triple needs {CPM_VALUE_DIM} values, got {}",
                v.len()
            )));
        }
        let mut t = PathTriple::default();
        for (l, slot) in t.slots.iter_mut().enumerate() {
            let c = &v[4 * l..4 * l + 4];
            if c[0].is_finite() {
                *slot = Some(PathSlot {
                    gain_db: c[0],
                    phase_rad: c[1],
                    zenith_rad: c[2],
                    azimuth_rad: c[3],
                });
            }
        }
        Ok(t)
    }

    pub fn present(&self) -> impl Iterator<Item = &PathSlot> {
        self.slots.iter().flatten()
    }

    pub fn count(&self) -> usize {
        self.present().count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CkmParams {
    pub knn_k: usize,
    pub idw_power: f64,
}

impl Default for CkmParams {
    fn default() -> Self {
        Self {
            knn_k: 3,
            idw_power: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableCkm {
    kind: MapKind,
    key_dim: usize,
    value_dim: usize,
    /// Row-major, `key_dim` coordinates per entry.
    keys: Vec<f64>,
    values: Vec<Vec<f64>>,
    params: CkmParams,
    meta: DatasetMeta,
}

impl TableCkm {
    /// Stores every row; rows sharing a key collapse to the last one, kept
    /// at the position of the first.
    pub fn build(dataset: &Dataset, params: CkmParams) -> Result<Self> {
        if params.knn_k < 1 {
            return Err(CkmError::Build("knn_k must be at least 1".into()));
        }
        if !(params.idw_power.is_finite() && params.idw_power >= 0.0) {
            return Err(CkmError::Build("idw_power must be finite and >= 0".into()));
        }
        if dataset.rows.is_empty() {
            return Err(CkmError::Build("cannot build a map from an empty dataset".into()));
        }
        let key_dim = dataset.meta.key_dim();
        let value_dim = dataset.meta.value_dim();
        dataset.validate()?;

        let mut slot_of: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut keys: Vec<f64> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for Row { key, value } in &dataset.rows {
            if key.iter().any(|c| !c.is_finite()) {
                return Err(CkmError::Schema("keys must be finite".into()));
            }
            let bits: Vec<u64> = key.iter().map(|c| c.to_bits()).collect();
            match slot_of.get(&bits) {
                Some(&i) => values[i] = value.clone(),
                None => {
                    slot_of.insert(bits, values.len());
                    keys.extend_from_slice(key);
                    values.push(value.clone());
                }
            }
        }
        Ok(Self {
            kind: dataset.meta.kind,
            key_dim,
            value_dim,
            keys,
            values,
            params,
            meta: dataset.meta.clone(),
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn key_dim(&self) -> usize {
        self.key_dim
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn params(&self) -> CkmParams {
        self.params
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Stored entries in order, as dataset rows.
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            meta: self.meta.clone(),
            rows: self
                .keys
                .chunks_exact(self.key_dim)
                .zip(&self.values)
                .map(|(k, v)| Row {
                    key: k.to_vec(),
                    value: v.clone(),
                })
                .collect(),
        }
    }

    /// The `knn_k` nearest entries as `(distance, index)`, nearest first,
    /// ties by lower index.
    pub fn nearest(&self, key: &[f64]) -> Vec<(f64, usize)> {
        let k = self.params.knn_k.min(self.len());
        // sorted by (squared distance, index); scanning in index order means
        // an equal distance never displaces an earlier entry
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, stored) in self.keys.chunks_exact(self.key_dim).enumerate() {
            let d2 = sq_dist(stored, key);
            if best.len() == k && d2 >= best[k - 1].0 {
                continue;
            }
            let at = best.partition_point(|&(b, _)| b <= d2);
            best.insert(at, (d2, i));
            best.truncate(k);
        }
        best.into_iter().map(|(d2, i)| (d2.sqrt(), i)).collect()
    }

    /// IDW-KNN estimate at `key`.
    pub fn query(&self, key: &[f64]) -> Result<Vec<f64>> {
        if self.values.is_empty() {
            return Err(CkmError::Query("map has no entries".into()));
        }
        if key.len() != self.key_dim {
            return Err(CkmError::Query(format!(
                "key has {} coordinates, map expects {}",
                key.len(),
                self.key_dim
            )));
        }
        if key.iter().any(|c| !c.is_finite()) {
            return Err(CkmError::Query("key must be finite".into()));
        }
        let nn = self.nearest(key);
        if nn[0].0 < EXACT_MATCH_DIST {
            return Ok(self.values[nn[0].1].clone());
        }
        let weighted: Vec<(f64, &[f64])> = nn
            .iter()
            .map(|&(d, i)| (d.powf(-self.params.idw_power), self.values[i].as_slice()))
            .collect();
        Ok(match self.kind {
            MapKind::Cgm => interpolate_gains(&weighted, self.value_dim),
            MapKind::Cpm => interpolate_paths(&weighted).to_values().to_vec(),
        })
    }

    /// CPM lookup returning the decoded path triple.
    pub fn query_paths(&self, ue_xy: [f64; 2]) -> Result<PathTriple> {
        if self.kind != MapKind::Cpm {
            return Err(CkmError::Query("path query on a gain map".into()));
        }
        PathTriple::from_values(&self.query(&ue_xy)?)
    }

    /// Rasterizes one value slot over `region` at cell centers spaced
    /// `resolution` apart. CGM maps need the transmitter pinned.
    pub fn export_grid(
        &self,
        region: &Rect,
        resolution: f64,
        slot: Slot,
        pinned_tx: Option<[f64; 2]>,
    ) -> Result<Grid> {
        let (xs, ys) = cell_centers(region, resolution)?;
        let index = slot.value_index(self.kind, self.value_dim)?;
        if self.kind == MapKind::Cgm && pinned_tx.is_none() {
            return input("gain map export needs a pinned transmitter location");
        }
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &y in &ys {
            for &x in &xs {
                let key = match (self.kind, pinned_tx) {
                    (MapKind::Cgm, Some(t)) => vec![t[0], t[1], x, y],
                    _ => vec![x, y],
                };
                let v = self.query(&key)?;
                values.push(slot.export_value(&v, index));
            }
        }
        Ok(Grid { xs, ys, values })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn interpolate_gains(weighted: &[(f64, &[f64])], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let (mut num, mut den) = (0.0, 0.0);
            for (w, v) in weighted {
                if v[j].is_finite() {
                    num += w * v[j];
                    den += w;
                }
            }
            if den > 0.0 {
                num / den
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

fn interpolate_paths(weighted: &[(f64, &[f64])]) -> PathTriple {
    let need = weighted.len().div_ceil(2);
    let mut out = PathTriple::default();
    for l in 0..CPM_PATHS {
        let present: Vec<(f64, &[f64])> = weighted
            .iter()
            .filter(|(_, v)| v[4 * l].is_finite())
            .map(|(w, v)| (*w, &v[4 * l..4 * l + 4]))
            .collect();
        if present.len() < need || present.is_empty() {
            continue;
        }
        let wsum: f64 = present.iter().map(|(w, _)| w).sum();
        let lin = |c: usize| present.iter().map(|(w, s)| w * s[c]).sum::<f64>() / wsum;
        let circ = |c: usize| {
            let (sin, cos) = present
                .iter()
                .fold((0.0, 0.0), |(s, co), (w, v)| (s + w * v[c].sin(), co + w * v[c].cos()));
            sin.atan2(cos)
        };
        let mut azimuth = circ(3);
        if azimuth <= -PI {
            azimuth = PI;
        }
        out.slots[l] = Some(PathSlot {
            gain_db: lin(0),
            phase_rad: wrap_2pi(circ(1)),
            zenith_rad: lin(2),
            azimuth_rad: azimuth,
        });
    }
    out
}

/// Weighted circular mean of angles, in (−π, π].
pub fn circular_mean(angles: &[f64], weights: &[f64]) -> f64 {
    let (s, c) = angles
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(s, c), (a, w)| (s + w * a.sin(), c + w * a.cos()));
    let m = s.atan2(c);
    if m <= -PI {
        PI
    } else {
        m
    }
}

/// Cell centers `min + (i + ½)·step` of the whole cells that fit in `region`.
pub fn cell_centers(region: &Rect, step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(step.is_finite() && step > 0.0) {
        return input(format!("resolution must be positive, got {step}"));
    }
    let axis = |lo: f64, span: f64| -> Vec<f64> {
        let n = ((span / step) + 1e-9).floor().max(1.0) as usize;
        (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect()
    };
    Ok((
        axis(region.min[0], region.width()),
        axis(region.min[1], region.height()),
    ))
}

/// Which value to rasterize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// CGM band gain, 0-based.
    Band(usize),
    /// CPM path gain, 0-based path index.
    Gain(usize),
    Phase(usize),
    Zenith(usize),
    /// Exported as sin φ, with [`NO_PATH_SIN_AZIMUTH`] for absent paths.
    Azimuth(usize),
}

impl std::str::FromStr for Slot {
    type Err = CkmError;

    /// Names are 1-based: `band1`, `gain2`, `azimuth1`, ...
    fn from_str(s: &str) -> Result<Self> {
        let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let (name, num) = s.split_at(split);
        let n: usize = num
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| CkmError::Input(format!("bad slot `{s}`: expected e.g. azimuth1")))?;
        Ok(match name {
            "band" => Slot::Band(n - 1),
            "gain" => Slot::Gain(n - 1),
            "phase" => Slot::Phase(n - 1),
            "zenith" => Slot::Zenith(n - 1),
            "azimuth" => Slot::Azimuth(n - 1),
            _ => return input(format!("unknown slot `{s}`")),
        })
    }
}

impl Slot {
    fn value_index(self, kind: MapKind, value_dim: usize) -> Result<usize> {
        let idx = match (kind, self) {
            (MapKind::Cgm, Slot::Band(n)) => n,
            (MapKind::Cpm, Slot::Gain(l)) => 4 * l,
            (MapKind::Cpm, Slot::Phase(l)) => 4 * l + 1,
            (MapKind::Cpm, Slot::Zenith(l)) => 4 * l + 2,
            (MapKind::Cpm, Slot::Azimuth(l)) => 4 * l + 3,
            _ => return input(format!("slot {self:?} does not apply to a {kind:?} map")),
        };
        if idx >= value_dim {
            return input(format!("slot {self:?} out of range"));
        }
        Ok(idx)
    }

    fn export_value(self, v: &[f64], index: usize) -> f64 {
        match self {
            Slot::Band(_) | Slot::Gain(_) => v[index],
            Slot::Phase(_) | Slot::Zenith(_) | Slot::Azimuth(_) => {
                let present = v[index - index % 4].is_finite();
                match (self, present) {
                    (Slot::Azimuth(_), true) => v[index].sin(),
                    (Slot::Azimuth(_), false) => NO_PATH_SIN_AZIMUTH,
                    (_, true) => v[index],
                    (_, false) => f64::NAN,
                }
            }
        }
    }
}

/// Row-major raster: `values[iy * xs.len() + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(kind: MapKind, n: usize) -> DatasetMeta {
        DatasetMeta {
            kind,
            tx_height: 1.5,
            rx_height: 1.5,
            carrier_hz: 28e9,
            band_plan: (0..n).map(|i| 28e9 + i as f64 * 20e6).collect(),
            bs_location: None,
            gain_sum: "coherent".into(),
        }
    }

    fn cgm(rows: Vec<(Vec<f64>, Vec<f64>)>) -> Dataset {
        let n = rows[0].1.len();
        Dataset {
            meta: meta(MapKind::Cgm, n),
            rows: rows.into_iter().map(|(key, value)| Row { key, value }).collect(),
        }
    }

    fn slot(g: f64, ph: f64, az: f64) -> [f64; 4] {
        [g, ph, 1.2, az]
    }

    fn cpm_row(x: f64, y: f64, slots: &[[f64; 4]]) -> Row {
        let mut v = vec![f64::NEG_INFINITY, 0.0, 0.0, 0.0].repeat(3);
        for (l, s) in slots.iter().enumerate() {
            v[4 * l..4 * l + 4].copy_from_slice(s);
        }
        Row { key: vec![x, y], value: v }
    }

    #[test]
    fn empty_dataset_fails() {
        let ds = Dataset { meta: meta(MapKind::Cpm, 1), rows: vec![] };
        assert!(matches!(TableCkm::build(&ds, CkmParams::default()), Err(CkmError::Build(_))));
    }

    #[test]
    fn mixed_dims_fail() {
        let ds = cgm(vec![
            (vec![0.0, 0.0, 1.0, 1.0], vec![-50.0]),
            (vec![0.0, 0.0, 2.0], vec![-50.0]),
        ]);
        assert!(matches!(TableCkm::build(&ds, CkmParams::default()), Err(CkmError::Schema(_))));
    }

    #[test]
    fn duplicate_keys_last_wins() {
        let ds = cgm(vec![
            (vec![0.0, 0.0, 1.0, 1.0], vec![-50.0]),
            (vec![5.0, 0.0, 1.0, 1.0], vec![-70.0]),
            (vec![0.0, 0.0, 1.0, 1.0], vec![-60.0]),
        ]);
        let m = TableCkm::build(&ds, CkmParams::default()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.query(&[0.0, 0.0, 1.0, 1.0]).unwrap(), vec![-60.0]);
    }

    #[test]
    fn equidistant_pair_averages() {
        let ds = cgm(vec![
            (vec![0.0, 0.0, 0.0, 0.0], vec![-40.0, f64::NEG_INFINITY]),
            (vec![0.0, 0.0, 2.0, 0.0], vec![-60.0, -80.0]),
        ]);
        let m = TableCkm::build(&ds, CkmParams { knn_k: 2, idw_power: 2.0 }).unwrap();
        let v = m.query(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(v[0], -50.0);
        // sentinel excluded per component
        assert_eq!(v[1], -80.0);
    }

    #[test]
    fn all_sentinel_band_stays_sentinel() {
        let ds = cgm(vec![
            (vec![0.0, 0.0, 0.0, 0.0], vec![f64::NEG_INFINITY]),
            (vec![0.0, 0.0, 2.0, 0.0], vec![f64::NEG_INFINITY]),
        ]);
        let m = TableCkm::build(&ds, CkmParams { knn_k: 2, idw_power: 2.0 }).unwrap();
        assert_eq!(m.query(&[0.0, 0.0, 1.0, 0.0]).unwrap(), vec![f64::NEG_INFINITY]);
    }

    #[test]
    fn query_errors() {
        let ds = cgm(vec![(vec![0.0, 0.0, 0.0, 0.0], vec![-40.0])]);
        let m = TableCkm::build(&ds, CkmParams::default()).unwrap();
        assert!(matches!(m.query(&[0.0, 0.0]), Err(CkmError::Query(_))));
        // fewer entries than k is fine
        assert_eq!(m.query(&[1.0, 1.0, 1.0, 1.0]).unwrap(), vec![-40.0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let ds = cgm(vec![
            (vec![1.0, 0.0, 0.0, 0.0], vec![-40.0]),
            (vec![-1.0, 0.0, 0.0, 0.0], vec![-60.0]),
            (vec![0.0, 1.0, 0.0, 0.0], vec![-80.0]),
        ]);
        let m = TableCkm::build(&ds, CkmParams { knn_k: 2, idw_power: 2.0 }).unwrap();
        let nn = m.nearest(&[0.0; 4]);
        assert_eq!(nn.iter().map(|x| x.1).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn phase_circular_mean_wraps() {
        let m = circular_mean(&[3.0, -3.0], &[1.0, 1.0]);
        assert!((m.abs() - PI).abs() < 1e-12, "{m}");
        // and through the CPM path: azimuths ±3 rad average to ±π
        let ds = Dataset {
            meta: meta(MapKind::Cpm, 1),
            rows: vec![
                cpm_row(0.0, 0.0, &[slot(-80.0, 3.0, 3.0)]),
                cpm_row(2.0, 0.0, &[slot(-90.0, 2.0 * PI - 3.0, -3.0)]),
            ],
        };
        let m = TableCkm::build(&ds, CkmParams { knn_k: 2, idw_power: 2.0 }).unwrap();
        let t = m.query_paths([1.0, 0.0]).unwrap();
        let s = t.slots[0].unwrap();
        assert!((s.azimuth_rad.abs() - PI).abs() < 1e-12);
        assert!((s.phase_rad - PI).abs() < 1e-12);
        assert_eq!(s.gain_db, -85.0);
    }

    #[test]
    fn majority_vote_on_path_presence() {
        let ds = Dataset {
            meta: meta(MapKind::Cpm, 1),
            rows: vec![
                cpm_row(0.0, 0.0, &[slot(-80.0, 0.1, 0.2), slot(-90.0, 0.1, 0.3)]),
                cpm_row(1.0, 0.0, &[slot(-81.0, 0.1, 0.2)]),
                cpm_row(0.0, 1.0, &[]),
                cpm_row(9.0, 9.0, &[slot(-70.0, 0.0, 0.0)]),
            ],
        };
        let m = TableCkm::build(&ds, CkmParams { knn_k: 3, idw_power: 2.0 }).unwrap();
        let t = m.query_paths([0.3, 0.3]).unwrap();
        // 2 of 3 neighbors have path 1, 1 of 3 has path 2
        assert_eq!(t.count(), 1);
        let t = m.query_paths([0.1, 0.9]).unwrap();
        assert_eq!(t.count(), 1);
        let only_empty = Dataset {
            meta: meta(MapKind::Cpm, 1),
            rows: vec![cpm_row(0.0, 0.0, &[]), cpm_row(1.0, 0.0, &[]), cpm_row(5.0, 0.0, &[slot(-70.0, 0.0, 0.0)])],
        };
        let m = TableCkm::build(&only_empty, CkmParams::default()).unwrap();
        assert!(m.query_paths([0.5, 0.0]).unwrap().is_empty());
    }

    #[test]
    fn triple_value_round_trip() {
        let row = cpm_row(0.0, 0.0, &[slot(-80.0, 0.5, -1.0), slot(-85.0, 1.5, 2.0)]);
        let t = PathTriple::from_values(&row.value).unwrap();
        assert_eq!(t.count(), 2);
        assert_eq!(t.to_values().to_vec(), row.value);
        assert!(PathTriple::from_values(&[0.0; 5]).is_err());
    }

    #[test]
    fn grid_shape_and_exact_cells() {
        let rows = (0..10)
            .flat_map(|iy| (0..10).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| {
                let (x, y) = (5.0 + 10.0 * ix as f64, 5.0 + 10.0 * iy as f64);
                if ix == 3 && iy == 4 {
                    cpm_row(x, y, &[])
                } else {
                    cpm_row(x, y, &[slot(-80.0 - x, 0.0, (x - y) / 100.0)])
                }
            })
            .collect();
        let ds = Dataset { meta: meta(MapKind::Cpm, 1), rows };
        let m = TableCkm::build(&ds, CkmParams::default()).unwrap();
        let region = Rect::new([0.0, 0.0], [100.0, 100.0]).unwrap();
        let g = m.export_grid(&region, 10.0, Slot::Azimuth(0), None).unwrap();
        assert_eq!((g.xs.len(), g.ys.len(), g.values.len()), (10, 10, 100));
        assert_eq!(g.get(3, 4), NO_PATH_SIN_AZIMUTH);
        assert_eq!(g.get(7, 2), ((75.0f64 - 25.0) / 100.0).sin());
        let gg = m.export_grid(&region, 10.0, Slot::Gain(0), None).unwrap();
        assert_eq!(gg.get(7, 2), -155.0);
        assert!(m.export_grid(&region, 0.0, Slot::Gain(0), None).is_err());
        assert!(m.export_grid(&region, 10.0, Slot::Band(0), None).is_err());
    }

    #[test]
    fn slot_names() {
        assert_eq!("azimuth1".parse::<Slot>().unwrap(), Slot::Azimuth(0));
        assert_eq!("band12".parse::<Slot>().unwrap(), Slot::Band(11));
        assert!("azimuth0".parse::<Slot>().is_err());
        assert!("foo1".parse::<Slot>().is_err());
        assert!("gain".parse::<Slot>().is_err());
    }

    #[test]
    fn cgm_export_needs_pinned_tx() {
        let ds = cgm(vec![(vec![0.0, 0.0, 5.0, 5.0], vec![-40.0])]);
        let m = TableCkm::build(&ds, CkmParams::default()).unwrap();
        let region = Rect::new([0.0, 0.0], [10.0, 10.0]).unwrap();
        assert!(m.export_grid(&region, 10.0, Slot::Band(0), None).is_err());
        let g = m.export_grid(&region, 10.0, Slot::Band(0), Some([0.0, 0.0])).unwrap();
        assert_eq!(g.values, vec![-40.0]);
    }
}
