//! `ckm` command-line front end.
//!
//! Every command takes `--config <json>`, `--seed <u64>` and `--out <dir>`,
//! writes its outputs atomically into the output directory and echoes the
//! resolved configuration into each file. Exit status: 0 ok, 1 usage, 2
//! runtime failure.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::d2d::{run_d2d_experiment, D2dProblem, D2dReport, Predictor};
use crate::dataset::{Dataset, DatasetMeta, MapKind};
use crate::error::{CkmError, Result};
use crate::io::{self, header_comments, FORMAT_VERSION};
use crate::mlp::{cgm_arrays, Mlp, MlpFile, MlpPlan, TrainReport, CGM_TARGET_FLOOR_DB};
use crate::mmwave::{run_beam_experiment, BeamReport, LocationRates};
use crate::plfit::{fit_pathloss, samples_from_cgm, PlModel};
use crate::propagation::{grid_points, outdoor_grid_points, sample_cgm, sample_cpm};
use crate::scene::{Point3, Scene, SceneFile};
use crate::store::{Slot, TableCkm};

pub use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "ckm", version, about = "Channel knowledge map toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic urban scene.
    GenScene(CommonArgs),
    /// Sample a CGM or CPM dataset from the propagation oracle.
    Sample(CommonArgs),
    /// Build a table CKM from a dataset.
    BuildCkm(CommonArgs),
    /// Train a DNN channel gain map.
    TrainMlp(CommonArgs),
    /// Fit the path-loss baseline to a CGM dataset.
    FitPl(CommonArgs),
    /// D2D sub-band assignment experiment.
    EvalD2d(CommonArgs),
    /// mmWave beam-selection experiment.
    EvalBeam(CommonArgs),
    /// Rasterize one slot of a CKM.
    ExportMap(ExportArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Slot name, e.g. `azimuth1`, `gain2`, `band3`.
    #[arg(long)]
    slot: Option<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Parses `args` and runs the command; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    base: PathBuf,
    out: PathBuf,
}

impl Ctx {
    fn new(args: &CommonArgs) -> Result<Self> {
        let (mut cfg, base) = match &args.config {
            Some(p) => {
                let cfg: ExperimentConfig = io::read_json(p)?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (ExperimentConfig::default(), PathBuf::new()),
        };
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        Ok(Self {
            cfg,
            base,
            out: args.out.clone(),
        })
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::to_value(&self.cfg).expect("config serializes")
    }

    fn path(&self, p: &str) -> PathBuf {
        config::resolve(&self.base, p)
    }

    fn required(&self, field: &str, value: &Option<String>) -> Result<PathBuf> {
        value
            .as_deref()
            .map(|p| self.path(p))
            .ok_or_else(|| CkmError::Config(format!("`{field}` must be set in the config")))
    }

    fn scene(&self) -> Result<Scene> {
        let path = self.required("scene", &self.cfg.scene)?;
        Scene::from_file(&io::read_json::<SceneFile>(&path)?)
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenScene(a) => gen_scene(&Ctx::new(&a)?),
        Command::Sample(a) => sample(&Ctx::new(&a)?),
        Command::BuildCkm(a) => build_ckm(&Ctx::new(&a)?),
        Command::TrainMlp(a) => train_mlp(&Ctx::new(&a)?),
        Command::FitPl(a) => fit_pl(&Ctx::new(&a)?),
        Command::EvalD2d(a) => eval_d2d(&Ctx::new(&a)?),
        Command::EvalBeam(a) => eval_beam(&Ctx::new(&a)?),
        Command::ExportMap(a) => {
            let mut ctx = Ctx::new(&a.common)?;
            if let Some(s) = a.slot {
                ctx.cfg.export.slot = s;
            }
            export_map(&ctx)
        }
    }
}

fn gen_scene(ctx: &Ctx) -> Result<()> {
    let scene = ctx.cfg.layout.generate(ctx.cfg.seed)?;
    io::write_json(&ctx.out_file("scene.json"), &scene.to_file(Some(ctx.echo())))
}

fn random_points(scene: &Scene, n: usize, z: f64, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let b = scene.bounds();
    (0..n)
        .map(|_| {
            Point3::new(
                rng.random_range(b.min[0]..b.max[0]),
                rng.random_range(b.min[1]..b.max[1]),
                z,
            )
        })
        .collect()
}

/// Dataset per the `sampling` section.
pub fn sample_from_config(scene: &Scene, cfg: &ExperimentConfig) -> Result<Dataset> {
    let s = &cfg.sampling;
    let grid = |step, z| {
        if s.outdoor_only {
            outdoor_grid_points(scene, step, z)
        } else {
            grid_points(scene, step, z)
        }
    };
    match (s.kind, s.grid_step, s.count) {
        (MapKind::Cpm, Some(step), _) => sample_cpm(scene, &grid(step, s.rx_height)?, &cfg.oracle),
        (MapKind::Cgm, Some(step), _) => {
            let tx = grid(step, s.tx_height)?;
            let rx = grid(step, s.rx_height)?;
            sample_cgm(scene, &tx, &rx, &cfg.oracle)
        }
        (kind, None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let rx = random_points(scene, n, s.rx_height, &mut rng);
            match kind {
                MapKind::Cpm => sample_cpm(scene, &rx, &cfg.oracle),
                MapKind::Cgm => {
                    let tx = random_points(scene, n, s.tx_height, &mut rng);
                    let parts = tx
                        .iter()
                        .zip(&rx)
                        .filter(|(t, r)| t != r)
                        .map(|(t, r)| sample_cgm(scene, &[*t], &[*r], &cfg.oracle))
                        .collect::<Result<Vec<_>>>()?;
                    let mut rows = Vec::with_capacity(parts.len());
                    let mut meta = None;
                    for p in parts {
                        meta.get_or_insert(p.meta);
                        rows.extend(p.rows);
                    }
                    Ok(Dataset {
                        meta: meta.unwrap_or_else(|| DatasetMeta::for_scene(MapKind::Cgm, scene, s.tx_height, s.rx_height)),
                        rows,
                    })
                }
            }
        }
        (_, None, None) => Err(CkmError::Config("sampling needs `grid_step` or `count`".into())),
    }
}

fn dataset_name(kind: MapKind) -> &'static str {
    match kind {
        MapKind::Cgm => "cgm.csv",
        MapKind::Cpm => "cpm.csv",
    }
}

fn sample(ctx: &Ctx) -> Result<()> {
    let scene = ctx.scene()?;
    let ds = sample_from_config(&scene, &ctx.cfg)?;
    io::save_dataset(&ctx.out_file(dataset_name(ds.meta.kind)), &ds, &ctx.echo())
}

/// `ckm.json`: map parameters plus a pointer to the entry CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CkmFile {
    pub format_version: u32,
    pub kind: MapKind,
    pub knn_k: usize,
    pub idw_power: f64,
    pub entry_count: usize,
    /// Entry CSV, relative to this file.
    pub entries: String,
    pub meta: DatasetMeta,
    pub gain_interpolation: String,
    pub missing_paths: String,
    pub no_path_sentinel: String,
    #[serde(default)]
    pub config: serde_json::Value,
}

/// Writes `ckm.json` and `ckm_entries.csv` into `dir`.
pub fn save_ckm(dir: &Path, map: &TableCkm, config: &serde_json::Value) -> Result<()> {
    let entries = "ckm_entries.csv";
    io::save_dataset(&dir.join(entries), &map.to_dataset(), config)?;
    let p = map.params();
    io::write_json(
        &dir.join("ckm.json"),
        &CkmFile {
            format_version: FORMAT_VERSION,
            kind: map.kind(),
            knn_k: p.knn_k,
            idw_power: p.idw_power,
            entry_count: map.len(),
            entries: entries.into(),
            meta: map.meta().clone(),
            gain_interpolation: "idw of dB values; circular mean for phase and azimuth".into(),
            missing_paths: match map.kind() {
                MapKind::Cpm => "path slot kept when >= ceil(k/2) neighbors have it".into(),
                MapKind::Cgm => "band is -inf only when all neighbors are".into(),
            },
            no_path_sentinel: "-inf gain; sin(azimuth) = 2 in azimuth exports".into(),
            config: config.clone(),
        },
    )
}

pub fn load_ckm(path: &Path) -> Result<TableCkm> {
    let f: CkmFile = io::read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let ds = io::load_dataset(&config::resolve(dir, &f.entries))?;
    TableCkm::build(
        &ds,
        crate::store::CkmParams {
            knn_k: f.knn_k,
            idw_power: f.idw_power,
        },
    )
}

fn build_ckm(ctx: &Ctx) -> Result<()> {
    let ds = io::load_dataset(&ctx.required("ckm.dataset", &ctx.cfg.ckm.dataset)?)?;
    let map = TableCkm::build(&ds, ctx.cfg.ckm.params())?;
    save_ckm(&ctx.out, &map, &ctx.echo())
}

#[derive(Debug, Serialize)]
struct TrainSummary<'a> {
    format_version: u32,
    train_rows: usize,
    test_rows: usize,
    target_floor_db: f64,
    report: &'a TrainReport,
    test_mse: Option<f64>,
    config: serde_json::Value,
}

fn train_mlp(ctx: &Ctx) -> Result<()> {
    let ds = io::load_dataset(&ctx.required("mlp.dataset", &ctx.cfg.mlp.dataset)?)?;
    let m = &ctx.cfg.mlp;
    let (train, test) = ds.split(m.train_fraction, ctx.cfg.seed);
    if train.is_empty() {
        return Err(CkmError::Config("training split is empty".into()));
    }
    let (xs, ys) = cgm_arrays(&train)?;
    let mut dims = vec![4];
    dims.extend(&m.hidden);
    dims.push(ds.meta.value_dim());
    let plan = MlpPlan::new(dims)?;
    let tcfg = crate::mlp::TrainConfig {
        seed: ctx.cfg.seed,
        ..m.train
    };
    let (net, report) = Mlp::init(&plan, ctx.cfg.seed).train(&xs, &ys, &tcfg)?;
    let test_mse = if test.is_empty() {
        None
    } else {
        let (tx, ty) = cgm_arrays(&test)?;
        Some(net.mse(&tx, &ty)?)
    };
    io::write_json(&ctx.out_file("mlp.json"), &net.to_file(Some(ctx.echo())))?;
    io::write_json(
        &ctx.out_file("mlp_train.json"),
        &TrainSummary {
            format_version: FORMAT_VERSION,
            train_rows: train.len(),
            test_rows: test.len(),
            target_floor_db: CGM_TARGET_FLOOR_DB,
            report: &report,
            test_mse,
            config: ctx.echo(),
        },
    )?;
    let mut csv = header_comments(&ctx.echo());
    csv.push_str("epoch,train_mse\n");
    writeln!(csv, "0,{}", report.initial_mse).expect("string write");
    for (i, v) in report.epoch_mse.iter().enumerate() {
        writeln!(csv, "{},{v}", i + 1).expect("string write");
    }
    io::write_atomic(&ctx.out_file("mlp_history.csv"), csv.as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlFile {
    pub format_version: u32,
    pub model: PlModel,
    pub samples: usize,
    #[serde(default)]
    pub config: serde_json::Value,
}

fn fit_pl(ctx: &Ctx) -> Result<()> {
    let ds = io::load_dataset(&ctx.required("plfit.dataset", &ctx.cfg.plfit.dataset)?)?;
    let samples = samples_from_cgm(&ds)?;
    let model = fit_pathloss(&samples, ctx.cfg.plfit.fit_gamma)?;
    io::write_json(
        &ctx.out_file("plmodel.json"),
        &PlFile {
            format_version: FORMAT_VERSION,
            model,
            samples: samples.len(),
            config: ctx.echo(),
        },
    )
}

#[derive(Debug, Serialize)]
struct D2dInstance {
    seed: u64,
    report: D2dReport,
}

#[derive(Debug, Serialize)]
struct D2dFile {
    format_version: u32,
    training_entries: Option<usize>,
    pl_model: Option<PlModel>,
    mean_true_sum_rate: Vec<(String, f64)>,
    instances: Vec<D2dInstance>,
    config: serde_json::Value,
}

fn eval_d2d(ctx: &Ctx) -> Result<()> {
    let scene = ctx.scene()?;
    let d = &ctx.cfg.d2d;
    let names: Vec<&str> = d.predictors.iter().map(String::as_str).collect();
    if let Some(bad) = names
        .iter()
        .find(|n| !matches!(**n, "perfect" | "cgm" | "cgm_mlp" | "plfit"))
    {
        return Err(CkmError::Config(format!("unknown predictor `{bad}`")));
    }
    let wants = |n: &str| names.contains(&n);

    // training data shared by the table CGM and the path-loss fit
    let need_training = (wants("cgm") && d.ckm.is_none()) || (wants("plfit") && d.pl_model.is_none());
    let training = if need_training {
        let h = d.pairs.height;
        let pts = grid_points(&scene, d.train_grid_step, h)?;
        Some(sample_cgm(&scene, &pts, &pts, &ctx.cfg.oracle)?)
    } else {
        None
    };
    let cgm = if wants("cgm") {
        Some(match &d.ckm {
            Some(p) => load_ckm(&ctx.path(p))?,
            None => TableCkm::build(
                training.as_ref().expect("training sampled"),
                crate::store::CkmParams {
                    knn_k: d.knn_k,
                    idw_power: d.idw_power,
                },
            )?,
        })
    } else {
        None
    };
    let pl = if wants("plfit") {
        Some(match &d.pl_model {
            Some(p) => io::read_json::<PlFile>(&ctx.path(p))?.model,
            None => fit_pathloss(&samples_from_cgm(training.as_ref().expect("training sampled"))?, true)?,
        })
    } else {
        None
    };
    let mlp = if wants("cgm_mlp") {
        let p = ctx.required("d2d.mlp_model", &d.mlp_model)?;
        Some(Mlp::from_file(&io::read_json::<MlpFile>(&p)?)?)
    } else {
        None
    };
    let predictors: Vec<Predictor<'_>> = names
        .iter()
        .map(|n| match *n {
            "perfect" => Predictor::Perfect,
            "cgm" => Predictor::TableCgm(cgm.as_ref().expect("built above")),
            "cgm_mlp" => Predictor::MlpCgm(mlp.as_ref().expect("loaded above")),
            _ => Predictor::PathLoss(pl.as_ref().expect("fitted above")),
        })
        .collect();

    let mut instances = Vec::with_capacity(d.instances);
    for i in 0..d.instances as u64 {
        let seed = ctx.cfg.seed.wrapping_add(i);
        let pairs = d.pairs.generate(&scene, seed)?;
        let problem = D2dProblem::new(pairs, scene.n_bands(), d.tx_power_dbm, d.noise_dbm)?;
        let report = run_d2d_experiment(&scene, &problem, &predictors, &ctx.cfg.oracle, d.order.as_deref())?;
        let report = if d.dump_gains { report } else { report.without_gains() };
        instances.push(D2dInstance { seed, report });
    }

    let mean = |name: &str| {
        instances.iter().filter_map(|x| x.report.rate(name)).sum::<f64>() / instances.len().max(1) as f64
    };
    let mean_true_sum_rate: Vec<(String, f64)> = names.iter().map(|n| (n.to_string(), mean(n))).collect();

    let mut csv = header_comments(&ctx.echo());
    csv.push_str("seed");
    for n in &names {
        write!(csv, ",{n}").expect("string write");
    }
    csv.push('\n');
    for inst in &instances {
        write!(csv, "{}", inst.seed).expect("string write");
        for n in &names {
            write!(csv, ",{}", inst.report.rate(n).unwrap_or(f64::NAN)).expect("string write");
        }
        csv.push('\n');
    }
    io::write_atomic(&ctx.out_file("d2d_summary.csv"), csv.as_bytes())?;
    io::write_json(
        &ctx.out_file("d2d_report.json"),
        &D2dFile {
            format_version: FORMAT_VERSION,
            training_entries: cgm.as_ref().map(TableCkm::len),
            pl_model: pl,
            mean_true_sum_rate,
            instances,
            config: ctx.echo(),
        },
    )
}

#[derive(Debug, Serialize)]
struct BeamFile<'a> {
    format_version: u32,
    cpm_entries: usize,
    report: &'a BeamReport,
    config: serde_json::Value,
}

/// CPM sampled on the beam section's grid.
pub fn beam_cpm(scene: &Scene, cfg: &ExperimentConfig) -> Result<TableCkm> {
    let b = &cfg.beam;
    let pts = if b.cpm_outdoor_only {
        outdoor_grid_points(scene, b.cpm_grid_step, b.experiment.ue_height)?
    } else {
        grid_points(scene, b.cpm_grid_step, b.experiment.ue_height)?
    };
    let ds = sample_cpm(scene, &pts, &cfg.oracle)?;
    TableCkm::build(
        &ds,
        crate::store::CkmParams {
            knn_k: b.knn_k,
            idw_power: b.idw_power,
        },
    )
}

fn eval_beam(ctx: &Ctx) -> Result<()> {
    let scene = ctx.scene()?;
    let b = &ctx.cfg.beam;
    let cpm = match &b.ckm {
        Some(p) => load_ckm(&ctx.path(p))?,
        None => beam_cpm(&scene, &ctx.cfg)?,
    };
    let mut exp = b.experiment.clone();
    exp.seed = ctx.cfg.seed;
    let (report, rates) = run_beam_experiment(&scene, &cpm, &ctx.cfg.oracle, &exp)?;

    let mut csv = header_comments(&ctx.echo());
    csv.push_str("scheme,n_y,n_z,mean_err_m,avg_rate,ratio_vs_perfect\n");
    for c in &report.cells {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            serde_json::to_value(c.scheme).expect("enum").as_str().unwrap_or(""),
            c.n_y,
            c.n_z,
            c.mean_err_m,
            c.avg_rate,
            c.ratio_vs_perfect
        )
        .expect("string write");
    }
    io::write_atomic(&ctx.out_file("beam_rates.csv"), csv.as_bytes())?;
    if b.dump_locations {
        io::write_atomic(&ctx.out_file("beam_locations.csv"), locations_csv(&exp, &rates, &ctx.echo()).as_bytes())?;
    }
    io::write_json(
        &ctx.out_file("beam_report.json"),
        &BeamFile {
            format_version: FORMAT_VERSION,
            cpm_entries: cpm.len(),
            report: &report,
            config: ctx.echo(),
        },
    )
}

fn locations_csv(exp: &crate::mmwave::BeamExperimentConfig, rates: &[LocationRates], echo: &serde_json::Value) -> String {
    let mut csv = header_comments(echo);
    csv.push_str("draw,ue_x,ue_y,n_paths,n_y,scheme,mean_err_m,rate\n");
    for r in rates {
        for (i, n_y) in exp.n_y_values.iter().enumerate() {
            let prefix = format!("{},{},{},{},{n_y}", r.draw_index, r.ue.x, r.ue.y, r.n_paths);
            writeln!(csv, "{prefix},perfect,0,{}", r.perfect[i]).expect("string write");
            for (e, err) in exp.errors_m.iter().enumerate() {
                writeln!(csv, "{prefix},cpm,{err},{}", r.cpm[i][e]).expect("string write");
                writeln!(csv, "{prefix},location,{err},{}", r.location[i][e]).expect("string write");
            }
        }
    }
    csv
}

fn export_map(ctx: &Ctx) -> Result<()> {
    let e = &ctx.cfg.export;
    let map = load_ckm(&ctx.required("export.ckm", &e.ckm)?)?;
    let region = match (e.region, &ctx.cfg.scene) {
        (Some(r), _) => crate::scene::Rect::new(r.min, r.max)?,
        (None, Some(_)) => *ctx.scene()?.bounds(),
        (None, None) => return Err(CkmError::Config("export needs `export.region` or a scene".into())),
    };
    let slot: Slot = e.slot.parse()?;
    let grid = map.export_grid(&region, e.resolution, slot, e.tx)?;
    io::write_atomic(
        &ctx.out_file(&format!("map_{}.csv", e.slot)),
        io::grid_to_csv(&grid, &ctx.echo()).as_bytes(),
    )
}

/// Inputs/targets of a CGM dataset, for callers that train outside the CLI.
pub fn cgm_training_arrays(ds: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
    cgm_arrays(ds)
}
