use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metadata::HyperparameterGrid;

/// `budget` distinct config ids drawn uniformly without replacement, in draw order.
pub fn random_search<R: Rng + ?Sized>(grid: &HyperparameterGrid, budget: usize, rng: &mut R) -> Result<Vec<usize>> {
    sample_ids(grid.len(), budget, rng)
}

pub(crate) fn sample_ids<R: Rng + ?Sized>(n: usize, budget: usize, rng: &mut R) -> Result<Vec<usize>> {
    if budget > n {
        return Err(Error::BudgetTooLarge { budget, n_configs: n });
    }
    Ok(index::sample(rng, n, budget).into_vec())
}
