//! Dataset metafeatures and their standardization.

use crate::error::{Error, Result};

/// Number of metafeatures per dataset.
pub const N_METAFEATURES: usize = 16;

/// Column names, in storage order.
pub const METAFEATURE_NAMES: [&str; N_METAFEATURES] = [
    "num_instances",
    "log_num_instances",
    "num_features",
    "log_num_features",
    "dimensionality",
    "log_dimensionality",
    "inv_dimensionality",
    "log_inv_dimensionality",
    "kurtosis_min",
    "kurtosis_max",
    "kurtosis_mean",
    "kurtosis_std",
    "skewness_min",
    "skewness_max",
    "skewness_mean",
    "skewness_std",
];

/// The sixteen descriptive statistics of a dataset, raw (unstandardized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetafeatureVector(pub [f64; N_METAFEATURES]);

impl MetafeatureVector {
    /// Builds the size-derived block from instance and feature counts plus
    /// the aggregated skewness/kurtosis statistics `[min, max, mean, std]`.
    pub fn from_parts(n: f64, p: f64, kurtosis: [f64; 4], skewness: [f64; 4]) -> Self {
        let dim = p / n;
        let inv = 1.0 / dim;
        let mut v = [0.0; N_METAFEATURES];
        v[0] = n;
        v[1] = n.ln();
        v[2] = p;
        v[3] = p.ln();
        v[4] = dim;
        v[5] = dim.ln();
        v[6] = inv;
        v[7] = inv.ln();
        v[8..12].copy_from_slice(&kurtosis);
        v[12..16].copy_from_slice(&skewness);
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_instances(&self) -> f64 {
        self.0[0]
    }

    pub fn num_features(&self) -> f64 {
        self.0[2]
    }

    pub fn dimensionality(&self) -> f64 {
        self.0[4]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        METAFEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.0[i])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Population skewness and excess kurtosis of one column.
///
/// Columns with zero variance yield `(0, 0)`.
pub fn column_moments(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in col {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let scale = col.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    // variance below floating-point resolution of the column counts as zero
    let floor = (4.0 * f64::EPSILON * scale).powi(2);
    if m2 <= floor {
        return (0.0, 0.0);
    }
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// `[min, max, mean, std]` with the population standard deviation.
fn aggregate(values: &[f64]) -> [f64; 4] {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    [min, max, mean, var.sqrt()]
}

/// Computes the raw metafeatures of a numeric table given as rows.
pub fn compute_metafeatures(rows: &[Vec<f64>]) -> Result<MetafeatureVector> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(Error::EmptyDataset);
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::Shape(format!("row {r} has {} columns, expected {p}", row.len())));
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: r, col: c });
        }
    }
    let mut skew = Vec::with_capacity(p);
    let mut kurt = Vec::with_capacity(p);
    let mut col = vec![0.0; n];
    for j in 0..p {
        for (dst, row) in col.iter_mut().zip(rows) {
            *dst = row[j];
        }
        let (s, k) = column_moments(&col);
        skew.push(s);
        kurt.push(k);
    }
    Ok(MetafeatureVector::from_parts(n as f64, p as f64, aggregate(&kurt), aggregate(&skew)))
}

/// Per-dimension z-score transform fitted on a subset of datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: [f64; N_METAFEATURES],
    pub std: [f64; N_METAFEATURES],
}

impl Scaler {
    /// Fits mean and population standard deviation over `vectors`.
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a MetafeatureVector>) -> Result<Self> {
        let vs: Vec<&MetafeatureVector> = vectors.into_iter().collect();
        if vs.is_empty() {
            return Err(Error::InvalidArgument("scaler needs at least one fit vector".into()));
        }
        let n = vs.len() as f64;
        let mut mean = [0.0; N_METAFEATURES];
        let mut std = [0.0; N_METAFEATURES];
        for k in 0..N_METAFEATURES {
            mean[k] = vs.iter().map(|v| v.0[k]).sum::<f64>() / n;
            let var = vs.iter().map(|v| (v.0[k] - mean[k]).powi(2)).sum::<f64>() / n;
            std[k] = var.sqrt();
        }
        Ok(Self { mean, std })
    }

    /// Standardizes one vector; dimensions with zero spread map to 0.
    pub fn transform(&self, v: &MetafeatureVector) -> [f64; N_METAFEATURES] {
        let mut out = [0.0; N_METAFEATURES];
        for k in 0..N_METAFEATURES {
            out[k] = if self.std[k] > 0.0 { (v.0[k] - self.mean[k]) / self.std[k] } else { 0.0 };
        }
        out
    }
}

/// Fits a scaler on `fit_ids` (indices into `vectors`) and standardizes every vector.
pub fn standardize_metafeatures(
    vectors: &[MetafeatureVector],
    fit_ids: &[usize],
) -> Result<(Vec<[f64; N_METAFEATURES]>, Scaler)> {
    if fit_ids.is_empty() {
        return Err(Error::InvalidArgument("fit set is empty".into()));
    }
    let mut fit = Vec::with_capacity(fit_ids.len());
    for &id in fit_ids {
        fit.push(vectors.get(id).ok_or(Error::UnknownDataset(id))?);
    }
    let scaler = Scaler::fit(fit)?;
    let out = vectors.iter().map(|v| scaler.transform(v)).collect();
    Ok((out, scaler))
}
