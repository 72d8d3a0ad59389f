//! On-disk meta-dataset directory.
//!
//! All files are UTF-8 CSV with a header row:
//!
//! * `grid.csv`: `config_id`, one column per hyperparameter (raw level), `enc_0..enc_{P-1}`
//! * `metafeatures.csv`: `dataset_id` followed by the sixteen raw metafeatures
//! * `scaler.csv`: `split_id,dimension,mean,std`, the per-split meta-train scaler (derived, informational)
//! * `responses.csv`: `dataset_id,config_id,fold,loss`
//! * `splits.csv`: `split_id,dataset_id,role` with role `train` or `test`
//! * `manifest.txt`: `key=value` lines; `format_version`, `n_datasets`, `n_configs`,
//!   `n_folds`, `grid` (schema mini-language) and `seed` when synthetic
//!
//! Reals are written with the shortest representation that parses back to
//! the same `f64`, so a save/load round trip is exact.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::metafeatures::{MetafeatureVector, METAFEATURE_NAMES, N_METAFEATURES};
use super::{encode_grid, MetaDataset, Schema, Split};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const GRID: &str = "grid.csv";
const METAFEATURES: &str = "metafeatures.csv";
const SCALER: &str = "scaler.csv";
const RESPONSES: &str = "responses.csv";
const SPLITS: &str = "splits.csv";
pub(crate) const MANIFEST: &str = "manifest.txt";

/// Ordered `key=value` text file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an existing value in place.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(file, i + 1, format!("expected key=value, got {line:?}")))?;
            m.set(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key).ok_or_else(|| Error::SchemaMismatch {
            file: MANIFEST.into(),
            detail: format!("missing key {key:?}"),
        })?;
        raw.parse().map_err(|_| Error::SchemaMismatch {
            file: MANIFEST.into(),
            detail: format!("invalid value {raw:?} for {key:?}"),
        })
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn save_metadataset(md: &MetaDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = md.grid.encoded_dim();

    let mut w = writer(dir, GRID)?;
    let mut header = vec!["config_id".to_string()];
    header.extend(md.grid.schema.names().map(String::from));
    header.extend((0..p).map(|i| format!("enc_{i}")));
    w.write_record(&header)?;
    for c in &md.grid.configs {
        let mut row = vec![c.config_id.to_string()];
        row.extend(c.raw.iter().cloned());
        row.extend(c.encoded.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dir.join(GRID), e))?;

    let mut w = writer(dir, METAFEATURES)?;
    let mut header = vec!["dataset_id"];
    header.extend(METAFEATURE_NAMES);
    w.write_record(&header)?;
    for (d, mf) in md.metafeatures.iter().enumerate() {
        let mut row = vec![d.to_string()];
        row.extend(mf.0.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dir.join(METAFEATURES), e))?;

    let mut w = writer(dir, SCALER)?;
    w.write_record(["split_id", "dimension", "mean", "std"])?;
    for s in 0..md.splits.len() {
        let scaler = md.scaler_for_split(s)?;
        for k in 0..N_METAFEATURES {
            w.write_record([s.to_string(), METAFEATURE_NAMES[k].to_string(), scaler.mean[k].to_string(), scaler.std[k].to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir.join(SCALER), e))?;

    let mut w = writer(dir, RESPONSES)?;
    w.write_record(["dataset_id", "config_id", "fold", "loss"])?;
    for d in 0..md.n_datasets() {
        for c in 0..md.n_configs() {
            for (f, l) in md.fold_losses(d, c).iter().enumerate() {
                w.write_record([d.to_string(), c.to_string(), f.to_string(), l.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(dir.join(RESPONSES), e))?;

    let mut w = writer(dir, SPLITS)?;
    w.write_record(["split_id", "dataset_id", "role"])?;
    for (s, split) in md.splits.iter().enumerate() {
        let mut rows: Vec<(usize, &str)> = split.train.iter().map(|&d| (d, "train")).collect();
        rows.extend(split.test.iter().map(|&d| (d, "test")));
        rows.sort_unstable();
        for (d, role) in rows {
            w.write_record([s.to_string(), d.to_string(), role.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir.join(SPLITS), e))?;

    let mut m = Manifest::new();
    m.set("format_version", FORMAT_VERSION);
    m.set("n_datasets", md.n_datasets());
    m.set("n_configs", md.n_configs());
    m.set("n_folds", md.n_folds());
    m.set("grid", &md.grid.schema);
    if let Some(seed) = md.seed {
        m.set("seed", seed);
    }
    m.write(&dir.join(MANIFEST))
}

fn open(dir: &Path, name: &str, what: &'static str) -> Result<(csv::Reader<fs::File>, PathBuf)> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::MissingFile { what, path });
    }
    let reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&path)?;
    Ok((reader, path))
}

fn check_header(reader: &mut csv::Reader<fs::File>, file: &str, expected: &[String]) -> Result<()> {
    let got: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if got != expected {
        return Err(Error::SchemaMismatch {
            file: file.into(),
            detail: format!("expected columns [{}], found [{}]", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, file: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    let raw = rec.get(i).ok_or_else(|| Error::parse(file, line, format!("missing column {i}")))?;
    raw.parse().map_err(|_| Error::parse(file, line, format!("cannot parse {raw:?} in column {i}")))
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

pub fn load_metadataset(dir: &Path) -> Result<MetaDataset> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(Error::MissingFile { what: "manifest", path: manifest_path });
    }
    let manifest = Manifest::read(&manifest_path)?;
    let version: u32 = manifest.require("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::SchemaMismatch {
            file: MANIFEST.into(),
            detail: format!("unsupported format_version {version}"),
        });
    }
    let n_datasets: usize = manifest.require("n_datasets")?;
    let n_configs: usize = manifest.require("n_configs")?;
    let n_folds: usize = manifest.require("n_folds")?;
    let seed: Option<u64> = match manifest.get("seed") {
        Some(_) => Some(manifest.require("seed")?),
        None => None,
    };
    let schema_text: String = manifest.require("grid")?;
    let schema = Schema::parse(&schema_text)?;
    let p = schema.encoded_dim();

    // grid
    let (mut r, _) = open(dir, GRID, "grid")?;
    let mut header = vec!["config_id".to_string()];
    header.extend(schema.names().map(String::from));
    header.extend((0..p).map(|i| format!("enc_{i}")));
    check_header(&mut r, GRID, &header)?;
    let n_axes = schema.0.len();
    let mut raws = Vec::new();
    let mut encs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let id: usize = field(&rec, 0, GRID)?;
        if id != raws.len() {
            return Err(Error::NonContiguousIds {
                file: GRID.into(),
                detail: format!("line {}: expected config_id {}, found {id}", line_of(&rec), raws.len()),
            });
        }
        raws.push((1..=n_axes).map(|i| rec[i].to_string()).collect::<Vec<_>>());
        encs.push((0..p).map(|j| field::<f64>(&rec, 1 + n_axes + j, GRID)).collect::<Result<Vec<_>>>()?);
    }
    if raws.len() != n_configs {
        return Err(Error::SchemaMismatch {
            file: GRID.into(),
            detail: format!("{} configs, manifest declares {n_configs}", raws.len()),
        });
    }
    let grid = encode_grid(schema, &raws)?;
    for (c, enc) in grid.configs.iter().zip(&encs) {
        if &c.encoded != enc {
            return Err(Error::SchemaMismatch {
                file: GRID.into(),
                detail: format!("encoding of config {} disagrees with the schema", c.config_id),
            });
        }
    }

    // metafeatures
    let (mut r, _) = open(dir, METAFEATURES, "metafeatures")?;
    let mut header = vec!["dataset_id".to_string()];
    header.extend(METAFEATURE_NAMES.iter().map(|s| s.to_string()));
    check_header(&mut r, METAFEATURES, &header)?;
    let mut metafeatures = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let id: usize = field(&rec, 0, METAFEATURES)?;
        if id != metafeatures.len() {
            return Err(Error::NonContiguousIds {
                file: METAFEATURES.into(),
                detail: format!("line {}: expected dataset_id {}, found {id}", line_of(&rec), metafeatures.len()),
            });
        }
        let mut v = [0.0; N_METAFEATURES];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field(&rec, k + 1, METAFEATURES)?;
        }
        metafeatures.push(MetafeatureVector(v));
    }
    if metafeatures.len() != n_datasets {
        return Err(Error::SchemaMismatch {
            file: METAFEATURES.into(),
            detail: format!("{} datasets, manifest declares {n_datasets}", metafeatures.len()),
        });
    }

    // responses
    let (mut r, _) = open(dir, RESPONSES, "responses")?;
    let header: Vec<String> = ["dataset_id", "config_id", "fold", "loss"].map(String::from).to_vec();
    check_header(&mut r, RESPONSES, &header)?;
    let mut table: Vec<Option<f64>> = vec![None; n_datasets * n_configs * n_folds];
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let d: usize = field(&rec, 0, RESPONSES)?;
        let c: usize = field(&rec, 1, RESPONSES)?;
        let f: usize = field(&rec, 2, RESPONSES)?;
        let loss: f64 = field(&rec, 3, RESPONSES)?;
        if d >= n_datasets || c >= n_configs || f >= n_folds {
            return Err(Error::parse(RESPONSES, line, format!("cell (dataset {d}, config {c}, fold {f}) is out of range")));
        }
        if !loss.is_finite() {
            return Err(Error::parse(RESPONSES, line, "loss is not finite"));
        }
        let slot = &mut table[(d * n_configs + c) * n_folds + f];
        if slot.replace(loss).is_some() {
            return Err(Error::parse(RESPONSES, line, format!("duplicate cell (dataset {d}, config {c}, fold {f})")));
        }
    }
    let mut losses = Vec::with_capacity(table.len());
    for (i, v) in table.into_iter().enumerate() {
        match v {
            Some(x) => losses.push(x),
            None => {
                let (d, c, f) = (i / (n_configs * n_folds), (i / n_folds) % n_configs, i % n_folds);
                return Err(Error::IncompleteResponses(format!("dataset {d}, config {c}, fold {f} absent")));
            }
        }
    }

    // splits
    let (mut r, _) = open(dir, SPLITS, "splits")?;
    check_header(&mut r, SPLITS, &["split_id", "dataset_id", "role"].map(String::from))?;
    let mut splits: Vec<Split> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let s: usize = field(&rec, 0, SPLITS)?;
        let d: usize = field(&rec, 1, SPLITS)?;
        if s > splits.len() {
            return Err(Error::NonContiguousIds { file: SPLITS.into(), detail: format!("line {line}: split_id {s} skips ids") });
        }
        if s == splits.len() {
            splits.push(Split { train: Vec::new(), test: Vec::new() });
        }
        match &rec[2] {
            "train" => splits[s].train.push(d),
            "test" => splits[s].test.push(d),
            other => return Err(Error::parse(SPLITS, line, format!("role must be train or test, got {other:?}"))),
        }
    }
    for s in &mut splits {
        s.train.sort_unstable();
        s.test.sort_unstable();
    }

    MetaDataset::new(grid, metafeatures, n_folds, losses, splits, seed)
}
