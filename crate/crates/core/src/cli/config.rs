//! JSON experiment configuration. Every section is optional; relative paths
//! resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::d2d::PairLayout;
use crate::dataset::MapKind;
use crate::mlp::{TrainConfig, CGM_HIDDEN};
use crate::mmwave::BeamExperimentConfig;
use crate::propagation::OracleConfig;
use crate::scene::{Rect, UrbanLayout};
use crate::store::CkmParams;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Scene JSON consumed by every command except `gen-scene`.
    pub scene: Option<String>,
    pub layout: UrbanLayout,
    pub oracle: OracleConfig,
    pub sampling: SamplingConfig,
    pub ckm: CkmSection,
    pub mlp: MlpSection,
    pub plfit: PlSection,
    pub d2d: D2dSection,
    pub beam: BeamSection,
    pub export: ExportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub kind: MapKind,
    /// Cell-center grid over the scene; CGM rows cover all ordered pairs.
    pub grid_step: Option<f64>,
    /// Alternatively: this many random locations (CPM) or pairs (CGM).
    pub count: Option<usize>,
    /// Grid mode only: skip cells centered inside buildings.
    pub outdoor_only: bool,
    pub tx_height: f64,
    pub rx_height: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            kind: MapKind::Cpm,
            grid_step: Some(10.0),
            count: None,
            outdoor_only: false,
            tx_height: 1.5,
            rx_height: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CkmSection {
    pub dataset: Option<String>,
    pub knn_k: usize,
    pub idw_power: f64,
}

impl Default for CkmSection {
    fn default() -> Self {
        let p = CkmParams::default();
        Self {
            dataset: None,
            knn_k: p.knn_k,
            idw_power: p.idw_power,
        }
    }
}

impl CkmSection {
    pub fn params(&self) -> CkmParams {
        CkmParams {
            knn_k: self.knn_k,
            idw_power: self.idw_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSection {
    pub dataset: Option<String>,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub train_fraction: f64,
}

impl Default for MlpSection {
    fn default() -> Self {
        Self {
            dataset: None,
            hidden: CGM_HIDDEN.to_vec(),
            train: TrainConfig::default(),
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlSection {
    pub dataset: Option<String>,
    pub fit_gamma: bool,
}

impl Default for PlSection {
    fn default() -> Self {
        Self {
            dataset: None,
            fit_gamma: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct D2dSection {
    pub pairs: PairLayout,
    /// Instances evaluated; instance `i` uses seed `seed + i`.
    pub instances: usize,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Grid step of the CGM training set when no prebuilt map is given.
    pub train_grid_step: f64,
    pub knn_k: usize,
    pub idw_power: f64,
    /// Any of `perfect`, `cgm`, `cgm_mlp`, `plfit`.
    pub predictors: Vec<String>,
    /// Greedy processing order; index order when absent.
    pub order: Option<Vec<usize>>,
    /// Prebuilt artifacts (from `build-ckm`, `fit-pl`, `train-mlp`).
    pub ckm: Option<String>,
    pub pl_model: Option<String>,
    pub mlp_model: Option<String>,
    /// Include the K²·N gain tensors in the JSON report.
    pub dump_gains: bool,
}

impl Default for D2dSection {
    fn default() -> Self {
        Self {
            pairs: PairLayout::default(),
            instances: 50,
            tx_power_dbm: 20.0,
            noise_dbm: -90.0,
            train_grid_step: 5.0,
            knn_k: 3,
            idw_power: 2.0,
            predictors: vec!["perfect".into(), "cgm".into(), "plfit".into()],
            order: None,
            ckm: None,
            pl_model: None,
            mlp_model: None,
            dump_gains: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamSection {
    #[serde(flatten)]
    pub experiment: BeamExperimentConfig,
    /// Grid step of the CPM samples when no prebuilt map is given.
    pub cpm_grid_step: f64,
    /// Sample the CPM at outdoor cells only.
    pub cpm_outdoor_only: bool,
    pub knn_k: usize,
    pub idw_power: f64,
    pub ckm: Option<String>,
    /// Also write per-location rates.
    pub dump_locations: bool,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            experiment: BeamExperimentConfig::default(),
            cpm_grid_step: 1.0,
            cpm_outdoor_only: true,
            knn_k: 3,
            idw_power: 2.0,
            ckm: None,
            dump_locations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSection {
    pub ckm: Option<String>,
    /// Defaults to the scene bounds when a scene is configured.
    pub region: Option<Rect>,
    pub resolution: f64,
    pub slot: String,
    /// Transmitter position for gain-map exports.
    pub tx: Option<[f64; 2]>,
}

impl Default for ExportSection {
    fn default() -> Self {
        Self {
            ckm: None,
            region: None,
            resolution: 1.0,
            slot: "azimuth1".into(),
            tx: None,
        }
    }
}

/// Resolves `p` against `base` unless it is absolute.
pub fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
