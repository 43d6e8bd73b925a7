//! File formats: dataset CSV + JSON sidecar, grid CSV, atomic writes.
//!
//! Every written file starts with `# format_version: N` and
//! `# config: {...}` comment lines. Floats use Rust's shortest round-trip
//! representation, so `load(save(x)) == x` bitwise; `-inf` marks a missing
//! gain.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, MapKind, Row};
use crate::error::{CkmError, Result};
use crate::store::{Grid, CPM_PATHS};

pub const FORMAT_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CkmError + '_ {
    move |source| CkmError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CkmError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| CkmError::Json {
        path: path.display().to_string(),
        source,
    })?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CkmError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// The two leading comment lines of every CSV output.
pub fn header_comments(config: &serde_json::Value) -> String {
    format!(
        "# format_version: {FORMAT_VERSION}\n# config: {}\n",
        serde_json::to_string(config).expect("json value serializes")
    )
}

/// Column names for a dataset of the given kind.
pub fn dataset_header(kind: MapKind, n_bands: usize) -> Vec<String> {
    match kind {
        MapKind::Cgm => ["tx_x", "tx_y", "rx_x", "rx_y"]
            .iter()
            .map(|s| s.to_string())
            .chain((1..=n_bands).map(|n| format!("gain_db_{n}")))
            .collect(),
        MapKind::Cpm => ["ue_x".to_string(), "ue_y".to_string()]
            .into_iter()
            .chain((1..=CPM_PATHS).flat_map(|l| {
                [
                    format!("gain_db_{l}"),
                    format!("phase_rad_{l}"),
                    format!("zenith_rad_{l}"),
                    format!("azimuth_rad_{l}"),
                ]
            }))
            .collect(),
    }
}

/// `foo.csv` → `foo.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    meta: DatasetMeta,
    rows: usize,
    #[serde(default)]
    config: serde_json::Value,
}

pub fn dataset_to_csv(ds: &Dataset, config: &serde_json::Value) -> String {
    let mut out = header_comments(config);
    out.push_str(&dataset_header(ds.meta.kind, ds.meta.band_plan.len()).join(","));
    out.push('\n');
    for r in &ds.rows {
        let mut first = true;
        for v in r.key.iter().chain(&r.value) {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

/// Writes `path` (CSV) and its `.meta.json` sidecar.
pub fn save_dataset(path: &Path, ds: &Dataset, config: &serde_json::Value) -> Result<()> {
    ds.validate()?;
    write_atomic(path, dataset_to_csv(ds, config).as_bytes())?;
    write_json(
        &sidecar_path(path),
        &Sidecar {
            format_version: FORMAT_VERSION,
            meta: ds.meta.clone(),
            rows: ds.rows.len(),
            config: config.clone(),
        },
    )
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let side: Sidecar = read_json(&sidecar_path(path))?;
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let rows = parse_dataset_csv(&text, &side.meta, &path.display().to_string())?;
    Ok(Dataset {
        meta: side.meta,
        rows,
    })
}

/// Parses dataset CSV text against `meta`; errors carry the 1-based line.
pub fn parse_dataset_csv(text: &str, meta: &DatasetMeta, origin: &str) -> Result<Vec<Row>> {
    let parse_err = |line: u64, message: String| CkmError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let expected = dataset_header(meta.kind, meta.band_plan.len());
    let header = rdr
        .headers()
        .map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?
        .clone();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(
            header.position().map_or(0, |p| p.line()),
            format!("header mismatch: expected `{}`", expected.join(",")),
        ));
    }
    let kd = meta.key_dim();
    let width = expected.len();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} columns, found {}", rec.len())));
        }
        let mut vals = Vec::with_capacity(width);
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(line, format!("column {} (`{}`): cannot parse `{field}`", i + 1, expected[i]))
            })?;
            vals.push(v);
        }
        let value = vals.split_off(kd);
        rows.push(Row { key: vals, value });
    }
    Ok(rows)
}

/// Grid CSV: `x,y,value`, row-major (y outer, x inner).
pub fn grid_to_csv(grid: &Grid, config: &serde_json::Value) -> String {
    let mut out = header_comments(config);
    out.push_str("x,y,value\n");
    for (iy, y) in grid.ys.iter().enumerate() {
        for (ix, x) in grid.xs.iter().enumerate() {
            writeln!(out, "{x},{y},{}", grid.get(ix, iy)).expect("write to string");
        }
    }
    out
}
