use std::time::{Duration, Instant};

use rand::Rng;
use statrs::function::erf::erfc;

use super::gp::{fit_gp, FitOptions, KernelKind};
use super::random::sample_ids;
use crate::error::{Error, Result};
use crate::metadata::MetaDataset;
use crate::trial::TrialRecord;
use crate::Scalar;

/// Expected improvement below `best` for a Gaussian prediction.
pub fn expected_improvement<T: Scalar>(mean: T, variance: T, best: T) -> T {
    let (mu, var, best) = (mean.as_f64(), variance.as_f64().max(0.0), best.as_f64());
    let sigma = var.sqrt();
    if sigma == 0.0 {
        return T::of((best - mu).max(0.0));
    }
    let z = (best - mu) / sigma;
    let cdf = 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    T::of(((best - mu) * cdf + sigma * pdf).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmboOptions {
    pub n_init: usize,
    pub fit: FitOptions,
}

impl Default for SmboOptions {
    fn default() -> Self {
        Self { n_init: 3, fit: FitOptions::default() }
    }
}

/// Method label used in reports for each kernel.
pub fn smbo_method_name(kind: KernelKind) -> &'static str {
    match kind {
        KernelKind::SeArd => "i-gp",
        KernelKind::Matern52 => "spearmint",
    }
}

/// Sequential model-based optimization on one dataset's response surface.
pub fn smbo_run<R: Rng + ?Sized>(
    md: &MetaDataset,
    dataset_id: usize,
    budget: usize,
    kind: KernelKind,
    rng: &mut R,
    opts: &SmboOptions,
) -> Result<TrialRecord> {
    smbo_run_timed(md, dataset_id, budget, kind, rng, opts).map(|(r, _)| r)
}

/// As [`smbo_run`], also returning the wall time spent choosing each trial.
pub fn smbo_run_timed<R: Rng + ?Sized>(
    md: &MetaDataset,
    dataset_id: usize,
    budget: usize,
    kind: KernelKind,
    rng: &mut R,
    opts: &SmboOptions,
) -> Result<(TrialRecord, Vec<Duration>)> {
    md.check_dataset(dataset_id)?;
    let n = md.n_configs();
    if budget > n {
        return Err(Error::BudgetTooLarge { budget, n_configs: n });
    }
    let mut times = Vec::with_capacity(budget);
    let start = Instant::now();
    let mut picks = sample_ids(n, opts.n_init.min(budget), rng)?;
    let init_each = start.elapsed() / picks.len().max(1) as u32;
    times.extend(std::iter::repeat_n(init_each, picks.len()));
    let mut evaluated = vec![false; n];
    picks.iter().for_each(|&c| evaluated[c] = true);

    while picks.len() < budget {
        let start = Instant::now();
        let x: Vec<Vec<f64>> = picks.iter().map(|&c| md.grid.encoded(c).to_vec()).collect();
        let y: Vec<f64> = picks.iter().map(|&c| md.mean_loss(dataset_id, c)).collect();
        let best = y.iter().copied().fold(f64::INFINITY, f64::min);
        let gp = fit_gp(kind, x, y, &opts.fit)?;
        let mut choice: Option<(usize, f64)> = None;
        for c in (0..n).filter(|&c| !evaluated[c]) {
            let (mu, var) = gp.posterior(md.grid.encoded(c));
            let ei = expected_improvement(mu, var, best);
            if choice.is_none_or(|(_, b)| ei > b) {
                choice = Some((c, ei));
            }
        }
        let (c, _) = choice.expect("budget ≤ grid size leaves a candidate");
        evaluated[c] = true;
        picks.push(c);
        times.push(start.elapsed());
    }
    let record = TrialRecord::from_configs(smbo_method_name(kind), md, dataset_id, 0, &picks);
    Ok((record, times))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ei_reference_points() {
        assert_eq!(expected_improvement(0.5, 0.0, 0.5), 0.0);
        assert_eq!(expected_improvement(0.2, 0.0, 0.5), 0.3);
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((expected_improvement(0.5, 1.0, 0.5) - phi0).abs() < 1e-15);
        assert!((expected_improvement(0.5f64, 1.0, 0.5) - 0.39894).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn ei_nonnegative_and_monotone_in_sigma(mu in -2.0f64..2.0, gap in 0.0f64..2.0, s1 in 0.0f64..3.0, ds in 0.0f64..3.0) {
            let best = mu - gap;
            let lo = expected_improvement(mu, s1 * s1, best);
            let hi = expected_improvement(mu, (s1 + ds).powi(2), best);
            prop_assert!(lo >= 0.0);
            prop_assert!(hi >= lo - 1e-15);
        }
    }
}
