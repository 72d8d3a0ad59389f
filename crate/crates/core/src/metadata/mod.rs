//! Meta-datasets: per-dataset metafeatures, the shared configuration grid
//! and a complete tabular response store `loss[dataset][config][fold]`.

mod grid;
mod io;
mod metafeatures;
mod synthetic;

pub use grid::{encode_grid, EncodingKind, HyperparameterConfig, HyperparameterGrid, HyperparameterSpec, Schema};
pub use io::{load_metadataset, save_metadataset, Manifest, FORMAT_VERSION};
pub use metafeatures::{
    column_moments, compute_metafeatures, standardize_metafeatures, MetafeatureVector, Scaler, METAFEATURE_NAMES,
    N_METAFEATURES,
};
pub use synthetic::{
    generate_synthetic_metadataset, generate_synthetic_with, metafeature_surface_correlation, SyntheticConfig,
};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// One meta-train / meta-test partition of the dataset ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Assigns shuffled dataset ids round-robin to `k` folds; split `i` tests on fold `i`.
pub fn kfold_splits<R: Rng + ?Sized>(n_datasets: usize, k: usize, rng: &mut R) -> Result<Vec<Split>> {
    if n_datasets < 2 {
        return Err(Error::InvalidArgument("need ≥ 2 datasets for splits".into()));
    }
    let k = k.clamp(2, n_datasets);
    let mut ids: Vec<usize> = (0..n_datasets).collect();
    ids.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].push(id);
    }
    Ok((0..k)
        .map(|i| {
            let mut test = folds[i].clone();
            test.sort_unstable();
            let mut train: Vec<usize> =
                folds.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, f)| f.iter().copied()).collect();
            train.sort_unstable();
            Split { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub grid: HyperparameterGrid,
    /// Raw metafeatures; the index is the dataset id.
    pub metafeatures: Vec<MetafeatureVector>,
    pub splits: Vec<Split>,
    /// Seed of the synthetic generator, if the data is synthetic.
    pub seed: Option<u64>,
    n_folds: usize,
    losses: Vec<f64>,
    mean_losses: Vec<f64>,
}

impl MetaDataset {
    /// Validates and assembles a meta-dataset. `losses` is laid out
    /// `[dataset][config][fold]`.
    pub fn new(
        grid: HyperparameterGrid,
        metafeatures: Vec<MetafeatureVector>,
        n_folds: usize,
        losses: Vec<f64>,
        splits: Vec<Split>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let n_d = metafeatures.len();
        let n_c = grid.len();
        if n_c == 0 {
            return Err(Error::Grid("grid is empty".into()));
        }
        if n_folds == 0 {
            return Err(Error::InvalidArgument("fold count must be ≥ 1".into()));
        }
        if losses.len() != n_d * n_c * n_folds {
            return Err(Error::IncompleteResponses(format!(
                "expected {} values, got {}",
                n_d * n_c * n_folds,
                losses.len()
            )));
        }
        if let Some(i) = losses.iter().position(|x| !x.is_finite()) {
            let (d, c, f) = (i / (n_c * n_folds), (i / n_folds) % n_c, i % n_folds);
            return Err(Error::IncompleteResponses(format!(
                "non-finite loss at dataset {d}, config {c}, fold {f}"
            )));
        }
        if let Some(d) = metafeatures.iter().position(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument(format!("dataset {d} has non-finite metafeatures")));
        }
        for (s, split) in splits.iter().enumerate() {
            let mut seen = vec![false; n_d];
            for &id in split.train.iter().chain(&split.test) {
                if id >= n_d || std::mem::replace(&mut seen[id], true) {
                    return Err(Error::InvalidArgument(format!(
                        "split {s} is not a partition of the dataset ids (id {id})"
                    )));
                }
            }
            if seen.iter().any(|&x| !x) || split.train.is_empty() {
                return Err(Error::InvalidArgument(format!("split {s} does not cover every dataset")));
            }
        }
        let mean_losses = losses.chunks(n_folds).map(|f| f.iter().sum::<f64>() / n_folds as f64).collect();
        Ok(Self { grid, metafeatures, splits, seed, n_folds, losses, mean_losses })
    }

    pub fn n_datasets(&self) -> usize {
        self.metafeatures.len()
    }

    pub fn n_configs(&self) -> usize {
        self.grid.len()
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn check_dataset(&self, dataset_id: usize) -> Result<()> {
        if dataset_id < self.n_datasets() {
            Ok(())
        } else {
            Err(Error::UnknownDataset(dataset_id))
        }
    }

    pub fn loss(&self, dataset_id: usize, config_id: usize, fold: usize) -> f64 {
        self.losses[(dataset_id * self.n_configs() + config_id) * self.n_folds + fold]
    }

    /// Per-fold losses of one (dataset, config) cell.
    pub fn fold_losses(&self, dataset_id: usize, config_id: usize) -> &[f64] {
        let start = (dataset_id * self.n_configs() + config_id) * self.n_folds;
        &self.losses[start..start + self.n_folds]
    }

    /// Fold-averaged loss, the response the environment consumes.
    pub fn mean_loss(&self, dataset_id: usize, config_id: usize) -> f64 {
        self.mean_losses[dataset_id * self.n_configs() + config_id]
    }

    /// Fold-averaged losses of every config on one dataset.
    pub fn surface(&self, dataset_id: usize) -> &[f64] {
        let n = self.n_configs();
        &self.mean_losses[dataset_id * n..(dataset_id + 1) * n]
    }

    /// `(min, max)` of the fold-averaged loss over the grid.
    pub fn loss_range(&self, dataset_id: usize) -> (f64, f64) {
        self.surface(dataset_id)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    /// Lowest-id config attaining the minimum fold-averaged loss.
    pub fn best_config(&self, dataset_id: usize) -> usize {
        let s = self.surface(dataset_id);
        (0..s.len()).fold(0, |best, c| if s[c] < s[best] { c } else { best })
    }

    /// Scaler fitted on the meta-train datasets of `split`.
    pub fn scaler_for_split(&self, split: usize) -> Result<Scaler> {
        let s = self
            .splits
            .get(split)
            .ok_or_else(|| Error::InvalidArgument(format!("split {split} does not exist ({} splits)", self.splits.len())))?;
        Scaler::fit(s.train.iter().map(|&d| &self.metafeatures[d]))
    }

    /// The flat `[dataset][config][fold]` loss table.
    pub fn raw_losses(&self) -> &[f64] {
        &self.losses
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kfold_partitions_every_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let splits = kfold_splits(25, 5, &mut rng).unwrap();
        assert_eq!(splits.len(), 5);
        let mut tested = [0; 25];
        for s in &splits {
            assert_eq!(s.test.len(), 5);
            assert_eq!(s.train.len(), 20);
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..25).collect::<Vec<_>>());
            for &t in &s.test {
                tested[t] += 1;
            }
        }
        assert!(tested.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_needs_two_datasets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = kfold_splits(1, 5, &mut rng).unwrap_err();
        assert!(err.to_string().contains("need ≥ 2 datasets for splits"));
    }
}
