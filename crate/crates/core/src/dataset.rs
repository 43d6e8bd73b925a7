//! Location-keyed sample rows shared by the map builders and learners.

use serde::{Deserialize, Serialize};

use crate::error::{CkmError, Result};
use crate::scene::{Point3, Scene};
use crate::store::CPM_VALUE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Channel gain map: (tx_x, tx_y, rx_x, rx_y) → N per-band gains.
    Cgm,
    /// Channel path map: (ue_x, ue_y) → three strongest paths.
    Cpm,
}

impl MapKind {
    pub fn key_dim(self) -> usize {
        match self {
            MapKind::Cgm => 4,
            MapKind::Cpm => 2,
        }
    }

    pub fn value_dim(self, n_bands: usize) -> usize {
        match self {
            MapKind::Cgm => n_bands,
            MapKind::Cpm => CPM_VALUE_DIM,
        }
    }
}

/// Map metadata; stored in the JSON sidecar next to every dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: MapKind,
    /// Fixed transmitter height (BS height for CPM), m.
    pub tx_height: f64,
    /// Fixed receiver / UE height, m.
    pub rx_height: f64,
    pub carrier_hz: f64,
    pub band_plan: Vec<f64>,
    #[serde(default)]
    pub bs_location: Option<Point3>,
    /// How per-band gains combine paths.
    #[serde(default = "default_gain_sum")]
    pub gain_sum: String,
}

fn default_gain_sum() -> String {
    "coherent".into()
}

impl DatasetMeta {
    pub fn for_scene(kind: MapKind, scene: &Scene, tx_height: f64, rx_height: f64) -> Self {
        Self {
            kind,
            tx_height,
            rx_height,
            carrier_hz: scene.carrier_hz(),
            band_plan: scene.band_plan().to_vec(),
            bs_location: scene.bs_location(),
            gain_sum: default_gain_sum(),
        }
    }

    pub fn key_dim(&self) -> usize {
        self.kind.key_dim()
    }

    pub fn value_dim(&self) -> usize {
        self.kind.value_dim(self.band_plan.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub key: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub rows: Vec<Row>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks every row against the metadata dimensions.
    pub fn validate(&self) -> Result<()> {
        let (kd, vd) = (self.meta.key_dim(), self.meta.value_dim());
        for (i, r) in self.rows.iter().enumerate() {
            if r.key.len() != kd || r.value.len() != vd {
                return Err(CkmError::Schema(format!(
                    "row {i}: expected {kd}+{vd} columns, got {}+{}",
                    r.key.len(),
                    r.value.len()
                )));
            }
        }
        Ok(())
    }

    /// Deterministic split: the first `fraction` of a seeded permutation
    /// becomes the training part.
    pub fn split(&self, fraction: f64, seed: u64) -> (Dataset, Dataset) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let cut = ((self.rows.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        let pick = |ids: &[usize]| Dataset {
            meta: self.meta.clone(),
            rows: ids.iter().map(|&i| self.rows[i].clone()).collect(),
        };
        (pick(&idx[..cut]), pick(&idx[cut..]))
    }
}
