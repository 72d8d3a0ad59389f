//! Hyperparameter schema, cross-product enumeration and config encoding.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingKind {
    OneHot,
    Scalar,
}

impl EncodingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodingKind::OneHot => "onehot",
            EncodingKind::Scalar => "scalar",
        }
    }
}

/// One axis of the grid: a named hyperparameter with its admissible levels.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterSpec {
    pub name: String,
    pub kind: EncodingKind,
    pub levels: Vec<String>,
}

impl HyperparameterSpec {
    pub fn new(name: &str, kind: EncodingKind, levels: &[&str]) -> Self {
        Self { name: name.to_string(), kind, levels: levels.iter().map(|s| s.to_string()).collect() }
    }

    /// Number of encoded entries this axis contributes.
    pub fn width(&self) -> usize {
        match self.kind {
            EncodingKind::OneHot => self.levels.len(),
            EncodingKind::Scalar => 1,
        }
    }

    fn numeric_levels(&self) -> Result<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| {
                l.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    Error::Grid(format!("scalar hyperparameter {:?} has non-numeric level {l:?}", self.name))
                })
            })
            .collect()
    }

    /// Index of `value` among the levels; scalar axes also match numerically.
    fn level_index(&self, value: &str) -> Result<usize> {
        if let Some(i) = self.levels.iter().position(|l| l == value) {
            return Ok(i);
        }
        if self.kind == EncodingKind::Scalar {
            if let Ok(x) = value.trim().parse::<f64>() {
                if let Some(i) = self.numeric_levels()?.iter().position(|&l| l == x) {
                    return Ok(i);
                }
            }
        }
        Err(Error::UnknownLevel { name: self.name.clone(), value: value.to_string() })
    }
}

/// An ordered list of hyperparameter axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema(pub Vec<HyperparameterSpec>);

impl Schema {
    /// The eight-axis neural-network grid: 2916 configurations, 13 encoded dims.
    pub fn full_nnmeta() -> Self {
        use EncodingKind::*;
        Schema(vec![
            HyperparameterSpec::new("activation", OneHot, &["ReLU", "leakyReLU", "tanh"]),
            HyperparameterSpec::new("neurons", Scalar, &["5", "10", "20"]),
            HyperparameterSpec::new("hidden_units", Scalar, &["10", "20", "50"]),
            HyperparameterSpec::new("optimizer", OneHot, &["Adam", "AdaDelta", "AdaGrad"]),
            HyperparameterSpec::new("epochs", Scalar, &["10", "100"]),
            HyperparameterSpec::new("dropout", Scalar, &["0", "0.2", "0.4"]),
            HyperparameterSpec::new("lp_regularization", OneHot, &["L1", "L2"]),
            HyperparameterSpec::new("regularization_constant", Scalar, &["0.01", "0.001", "0.0001"]),
        ])
    }

    /// Parses `full-nnmeta` or the `name:kind:v1,v2,...;...` mini-language.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "full-nnmeta" {
            return Ok(Self::full_nnmeta());
        }
        let mut axes = Vec::new();
        for entry in spec.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            let parts: Vec<&str> = entry.splitn(3, ':').collect();
            let [name, kind, values] = parts[..] else {
                return Err(Error::Grid(format!("expected name:kind:v1,v2,... in {entry:?}")));
            };
            let kind = match kind.trim().to_ascii_lowercase().as_str() {
                "onehot" | "one-hot" => EncodingKind::OneHot,
                "scalar" => EncodingKind::Scalar,
                other => return Err(Error::Grid(format!("unknown encoding kind {other:?}"))),
            };
            let levels: Vec<String> =
                values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            axes.push(HyperparameterSpec { name: name.trim().to_string(), kind, levels });
        }
        let schema = Schema(axes);
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Grid("schema has no hyperparameters".into()));
        }
        let mut names = HashSet::new();
        for axis in &self.0 {
            if axis.name.is_empty() || axis.name.contains([',', ';', ':']) {
                return Err(Error::Grid(format!("invalid hyperparameter name {:?}", axis.name)));
            }
            if !names.insert(axis.name.as_str()) {
                return Err(Error::Grid(format!("duplicate hyperparameter {:?}", axis.name)));
            }
            if axis.levels.is_empty() {
                return Err(Error::Grid(format!("hyperparameter {:?} has no levels", axis.name)));
            }
            let distinct: HashSet<&String> = axis.levels.iter().collect();
            if distinct.len() != axis.levels.len() {
                return Err(Error::Grid(format!("hyperparameter {:?} repeats a level", axis.name)));
            }
            if axis.kind == EncodingKind::Scalar {
                let nums = axis.numeric_levels()?;
                let distinct: HashSet<u64> = nums.iter().map(|x| (x + 0.0).to_bits()).collect();
                if distinct.len() != nums.len() {
                    return Err(Error::Grid(format!("hyperparameter {:?} repeats a level", axis.name)));
                }
            }
        }
        Ok(())
    }

    pub fn encoded_dim(&self) -> usize {
        self.0.iter().map(HyperparameterSpec::width).sum()
    }

    /// Every combination of levels; the first axis varies slowest.
    pub fn cross_product(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = vec![Vec::new()];
        for axis in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.levels.iter().map(move |l| {
                        let mut p = prefix.clone();
                        p.push(l.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|a| a.name.as_str())
    }
}

impl fmt::Display for Schema {
    /// Writes the mini-language form accepted by [`Schema::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, axis) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}:{}:{}", axis.name, axis.kind.as_str(), axis.levels.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterConfig {
    pub config_id: usize,
    /// Raw level per axis, aligned with the schema.
    pub raw: Vec<String>,
    pub encoded: Vec<f64>,
}

/// The finite action space: every configuration with its encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterGrid {
    pub schema: Schema,
    pub configs: Vec<HyperparameterConfig>,
}

impl HyperparameterGrid {
    /// Full cross product of `schema`.
    pub fn from_schema(schema: Schema) -> Result<Self> {
        let combos = schema.cross_product();
        encode_grid(schema, &combos)
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn encoded_dim(&self) -> usize {
        self.schema.encoded_dim()
    }

    pub fn encoded(&self, config_id: usize) -> &[f64] {
        &self.configs[config_id].encoded
    }
}

/// Encodes each raw combination: one-hot axes expand to indicator entries,
/// scalar axes map to a single min-max scaled value in `[0, 1]`.
pub fn encode_grid(schema: Schema, raw_combinations: &[Vec<String>]) -> Result<HyperparameterGrid> {
    schema.validate()?;
    let scalar_ranges: Vec<Option<(f64, f64, Vec<f64>)>> = schema
        .0
        .iter()
        .map(|axis| match axis.kind {
            EncodingKind::OneHot => Ok(None),
            EncodingKind::Scalar => {
                let nums = axis.numeric_levels()?;
                let lo = nums.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = nums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(Some((lo, hi, nums)))
            }
        })
        .collect::<Result<_>>()?;

    let mut seen = HashSet::new();
    let mut configs = Vec::with_capacity(raw_combinations.len());
    for (config_id, combo) in raw_combinations.iter().enumerate() {
        if combo.len() != schema.0.len() {
            return Err(Error::Grid(format!(
                "configuration {config_id} has {} values, schema has {} hyperparameters",
                combo.len(),
                schema.0.len()
            )));
        }
        let mut encoded = Vec::with_capacity(schema.encoded_dim());
        let mut raw = Vec::with_capacity(combo.len());
        let mut key = Vec::with_capacity(combo.len());
        for ((axis, value), range) in schema.0.iter().zip(combo).zip(&scalar_ranges) {
            let idx = axis.level_index(value)?;
            key.push(idx);
            raw.push(axis.levels[idx].clone());
            match range {
                None => encoded.extend((0..axis.levels.len()).map(|j| if j == idx { 1.0 } else { 0.0 })),
                Some((lo, hi, nums)) => {
                    let x = nums[idx];
                    encoded.push(if hi > lo { (x - lo) / (hi - lo) } else { 0.0 });
                }
            }
        }
        if !seen.insert(key) {
            return Err(Error::Grid(format!("configuration {config_id} duplicates an earlier combination")));
        }
        configs.push(HyperparameterConfig { config_id, raw, encoded });
    }
    Ok(HyperparameterGrid { schema, configs })
}
