use crate::error::{Error, Result};
use crate::metadata::MetaDataset;
use crate::trial::TrialRecord;

/// Mean normalized distance to the minimum, with the number of records
/// skipped because their dataset's surface is flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adtm {
    /// `None` when every record was degenerate.
    pub value: Option<f64>,
    pub n_used: usize,
    pub n_degenerate: usize,
}

/// Normalized regret `(best within t − f_min) / (f_max − f_min)` for
/// t = 1..=len, or `None` for a flat surface.
pub fn distance_curve(record: &TrialRecord, md: &MetaDataset) -> Result<Option<Vec<f64>>> {
    md.check_dataset(record.dataset_id)?;
    let (lo, hi) = md.loss_range(record.dataset_id);
    if !(hi > lo) {
        return Ok(None);
    }
    let mut best = f64::INFINITY;
    let curve = record
        .trials
        .iter()
        .map(|tr| {
            best = best.min(md.mean_loss(record.dataset_id, tr.config_id));
            (best - lo) / (hi - lo)
        })
        .collect();
    Ok(Some(curve))
}

/// Average distance to the minimum after `t` trials over `records`.
pub fn adtm(records: &[&TrialRecord], md: &MetaDataset, t: usize) -> Result<Adtm> {
    if t == 0 {
        return Err(Error::InvalidArgument("ADTM needs t ≥ 1".into()));
    }
    let (mut sum, mut n_used, mut n_degenerate) = (0.0, 0usize, 0usize);
    for rec in records {
        if rec.len() < t {
            return Err(Error::InvalidArgument(format!(
                "dataset {} has {} trials, fewer than t = {t}",
                rec.dataset_id,
                rec.len()
            )));
        }
        match distance_curve(rec, md)? {
            Some(c) => {
                sum += c[t - 1];
                n_used += 1;
            }
            None => n_degenerate += 1,
        }
    }
    if n_degenerate > 0 {
        log::warn!("{n_degenerate} record(s) on flat response surfaces excluded from ADTM");
    }
    let value = (n_used > 0).then(|| sum / n_used as f64);
    Ok(Adtm { value, n_used, n_degenerate })
}

/// 1-based ascending ranks; tied values share the mean of their positions.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share their mean
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Per-method mean rank, where `best[m][d]` is method m's best-so-far loss on
/// problem d.
pub fn average_rank(best: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = best.first() else { return Ok(Vec::new()) };
    let n = first.len();
    if best.iter().any(|b| b.len() != n) {
        return Err(Error::Shape("every method needs a value for every dataset".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("average rank over zero datasets".into()));
    }
    let mut totals = vec![0.0; best.len()];
    for d in 0..n {
        let column: Vec<f64> = best.iter().map(|b| b[d]).collect();
        for (t, r) in totals.iter_mut().zip(rank_with_ties(&column)) {
            *t += r;
        }
    }
    Ok(totals.into_iter().map(|t| t / n as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_ranks() {
        assert_eq!(rank_with_ties(&[0.1, 0.1, 0.3]), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank_with_ties(&[0.3, 0.2, 0.2, 0.2]), vec![4.0, 2.0, 2.0, 2.0]);
        assert_eq!(average_rank(&[vec![0.1, 0.1], vec![0.2, 0.2]]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(average_rank(&[vec![0.4, 0.9]]).unwrap(), vec![1.0]);
        assert!(average_rank(&[vec![0.1], vec![]]).is_err());
    }
}
