//! Seeded synthetic meta-datasets.
//!
//! Each dataset gets a latent vector `z`. Its response surface is a logistic
//! of a quadratic form in the encoded config whose coefficients are affine in
//! `z`; its metafeatures are monotone maps of a fixed linear projection of `z`,
//! so metafeatures carry information about where the good configs are.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::metafeatures::{MetafeatureVector, Scaler, N_METAFEATURES};
use super::{kfold_splits, HyperparameterGrid, MetaDataset};
use crate::error::{Error, Result};
use crate::scalar::sigmoid;

const STREAM_COEFFS: u64 = 0;
const STREAM_LATENT: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SPLITS: u64 = 3;

/// Number of metafeature channels projected from the latent vector.
const N_CHANNELS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub latent_dim: usize,
    /// Standard deviation of the per-fold noise added after the logistic.
    pub noise_std: f64,
    /// Number of cross-dataset splits (clamped to the dataset count).
    pub n_splits: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { latent_dim: 8, noise_std: 0.01, n_splits: 5 }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normals(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * normal(rng)).collect()
}

/// Coefficients of the affine maps `z -> (A, b, c)` and `z -> metafeature channels`.
struct Surface {
    p: usize,
    k: usize,
    // A(z) = a0 + Σ_j z_j a[j], each p×p symmetric, row-major.
    a0: Vec<f64>,
    a: Vec<Vec<f64>>,
    // b(z) = b0 + B z, B is p×k.
    b0: Vec<f64>,
    b: Vec<f64>,
    c0: f64,
    c: Vec<f64>,
    // channels u = M z, M is N_CHANNELS×k.
    m: Vec<f64>,
}

impl Surface {
    fn draw(rng: &mut ChaCha8Rng, grid: &HyperparameterGrid, k: usize) -> Self {
        let p = grid.encoded_dim();
        let g = normals(rng, p * p, 1.0);
        let mut a0 = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                a0[i * p + j] = (0..p).map(|l| g[i * p + l] * g[j * p + l]).sum::<f64>() / p as f64;
            }
        }
        let a = (0..k)
            .map(|_| {
                let raw = normals(rng, p * p, 1.0 / (p as f64).sqrt());
                let mut s = vec![0.0; p * p];
                for i in 0..p {
                    for j in 0..p {
                        s[i * p + j] = 0.5 * (raw[i * p + j] + raw[j * p + i]);
                    }
                }
                s
            })
            .collect();
        let b0 = normals(rng, p, 1.5);
        let b = normals(rng, p * k, 1.0 / (k as f64).sqrt());
        let c = normals(rng, k, 0.3 / (k as f64).sqrt());
        let m = normals(rng, N_CHANNELS * k, 1.0 / (k as f64).sqrt());
        let mut surface = Self { p, k, a0, a, b0, b, c0: 0.0, c, m };
        // center the shared logit over the grid so losses straddle 0.5
        let zero = vec![0.0; k];
        let mean = grid.configs.iter().map(|cfg| surface.logit(&zero, &cfg.encoded)).sum::<f64>() / grid.len() as f64;
        surface.c0 = -mean;
        surface
    }

    fn logit(&self, z: &[f64], e: &[f64]) -> f64 {
        let (p, k) = (self.p, self.k);
        let mut quad = 0.0;
        for i in 0..p {
            if e[i] == 0.0 {
                continue;
            }
            for j in 0..p {
                if e[j] == 0.0 {
                    continue;
                }
                let mut aij = self.a0[i * p + j];
                for (zl, al) in z.iter().zip(&self.a) {
                    aij += 0.5 * zl * al[i * p + j];
                }
                quad += e[i] * aij * e[j];
            }
        }
        let mut lin = 0.0;
        for i in 0..p {
            let bi = self.b0[i] + 0.7 * (0..k).map(|l| self.b[i * k + l] * z[l]).sum::<f64>();
            lin += bi * e[i];
        }
        let c = self.c0 + self.c.iter().zip(z).map(|(x, y)| x * y).sum::<f64>();
        quad + lin + c
    }

    fn metafeatures(&self, z: &[f64]) -> MetafeatureVector {
        let k = self.k;
        let u: Vec<f64> = (0..N_CHANNELS).map(|r| (0..k).map(|l| self.m[r * k + l] * z[l]).sum()).collect();
        let log_n = 7.0 + 2.5 * (u[0] / 1.5).tanh();
        let log_p = 2.5 + 1.5 * (u[1] / 1.5).tanh();
        let n = log_n.exp().round().max(1.0);
        let p = log_p.exp().round().max(1.0);

        let skew_mean = u[2];
        let skew_std = (0.5 * u[3] - 0.5).exp();
        let skew_min = skew_mean - (1.0 + (0.5 * u[4]).exp()) * skew_std;
        let skew_max = skew_mean + (1.0 + (0.5 * u[5]).exp()) * skew_std;

        let kurt_mean = (0.7 * u[6]).exp() - 0.5;
        let kurt_std = (0.5 * u[7] - 0.5).exp();
        let kurt_min = -2.0 + (kurt_mean + 2.0) * sigmoid(u[8]);
        let kurt_max = kurt_mean + (1.0 + (0.5 * u[9]).exp()) * kurt_std;

        MetafeatureVector::from_parts(
            n,
            p,
            [kurt_min, kurt_max, kurt_mean, kurt_std],
            [skew_min, skew_max, skew_mean, skew_std],
        )
    }
}

/// Generates a synthetic meta-dataset with the default settings.
pub fn generate_synthetic_metadataset(
    n_datasets: usize,
    grid: &HyperparameterGrid,
    n_folds: usize,
    seed: u64,
) -> Result<MetaDataset> {
    generate_synthetic_with(n_datasets, grid, n_folds, seed, &SyntheticConfig::default())
}

pub fn generate_synthetic_with(
    n_datasets: usize,
    grid: &HyperparameterGrid,
    n_folds: usize,
    seed: u64,
    cfg: &SyntheticConfig,
) -> Result<MetaDataset> {
    if n_datasets < 2 {
        return Err(Error::InvalidArgument("need ≥ 2 datasets for splits".into()));
    }
    if grid.is_empty() {
        return Err(Error::Grid("grid is empty".into()));
    }
    if n_folds == 0 {
        return Err(Error::InvalidArgument("fold count must be ≥ 1".into()));
    }
    if cfg.latent_dim == 0 || !(cfg.noise_std >= 0.0) {
        return Err(Error::InvalidArgument("latent_dim must be ≥ 1 and noise_std ≥ 0".into()));
    }
    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s);
        rng
    };
    let surface = Surface::draw(&mut stream(STREAM_COEFFS), grid, cfg.latent_dim);
    let mut latent_rng = stream(STREAM_LATENT);
    let mut noise_rng = stream(STREAM_NOISE);

    const LO: f64 = 1e-4;
    const HI: f64 = 1.0 - 1e-4;
    let mut metafeatures = Vec::with_capacity(n_datasets);
    let mut losses = Vec::with_capacity(n_datasets * grid.len() * n_folds);
    for _ in 0..n_datasets {
        let z = normals(&mut latent_rng, cfg.latent_dim, 1.0);
        metafeatures.push(surface.metafeatures(&z));
        for config in &grid.configs {
            let base = sigmoid(surface.logit(&z, &config.encoded)).clamp(LO, HI);
            for _ in 0..n_folds {
                let eta = cfg.noise_std * normal(&mut noise_rng);
                losses.push((base + eta).clamp(LO, HI));
            }
        }
    }
    let splits = kfold_splits(n_datasets, cfg.n_splits, &mut stream(STREAM_SPLITS))?;
    MetaDataset::new(grid.clone(), metafeatures, n_folds, losses, splits, Some(seed))
}

/// Pearson correlation, over dataset pairs, between the distance of
/// standardized metafeatures and the RMS distance of fold-averaged surfaces.
pub fn metafeature_surface_correlation(md: &MetaDataset) -> f64 {
    let all: Vec<usize> = (0..md.n_datasets()).collect();
    let scaler = Scaler::fit(all.iter().map(|&d| &md.metafeatures[d])).expect("non-empty");
    let z: Vec<[f64; N_METAFEATURES]> = md.metafeatures.iter().map(|m| scaler.transform(m)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..md.n_datasets() {
        for j in (i + 1)..md.n_datasets() {
            let dm = z[i].iter().zip(&z[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let (si, sj) = (md.surface(i), md.surface(j));
            let ds = (si.iter().zip(sj).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / si.len() as f64).sqrt();
            xs.push(dm);
            ys.push(ds);
        }
    }
    pearson(&xs, &ys)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
