use super::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const DEFAULT_VAL_FRACTION: f64 = 0.15;

/// Random train/validation split, stratified by class.
///
/// The validation size is round(n·val_fraction), shared out across classes
/// by largest remainder, so each class's share is within one row of
/// val_fraction. Every class with at least two rows keeps at least one in
/// validation. If some class has fewer than two rows the split falls back to
/// an unstratified shuffle and `Split::warning` is set.
pub fn split(dataset: &Dataset, val_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::input(format!("val_fraction must be in (0, 1), got {val_fraction}")));
    }
    let n = dataset.num_rows();
    let all: Vec<usize> = (0..n).collect();
    let counts = dataset.class_counts(&all);
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();

    let (mut train, mut validation, warning) = if present.iter().any(|&c| counts[c] < 2) {
        let mut order = all;
        RngStream::derive(seed, &[u64::MAX]).shuffle(&mut order);
        let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n.max(2) - 1);
        let validation = order.split_off(n - n_val.min(n));
        (
            order,
            validation,
            Some("a class has fewer than 2 rows; split is not stratified".to_string()),
        )
    } else {
        let total = (n as f64 * val_fraction).round() as usize;
        let mut quota: Vec<usize> = counts.iter().map(|&c| (c as f64 * val_fraction).floor() as usize).collect();
        let mut remainders: Vec<(f64, usize)> = present
            .iter()
            .map(|&c| (counts[c] as f64 * val_fraction - quota[c] as f64, c))
            .collect();
        // largest remainder first; ties go to the lower class index
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let assigned: usize = quota.iter().sum();
        for &(_, c) in remainders.iter().take(total.saturating_sub(assigned)) {
            quota[c] += 1;
        }
        for &c in &present {
            quota[c] = quota[c].clamp(1, counts[c] - 1);
        }
        let mut train = Vec::with_capacity(n);
        let mut validation = Vec::new();
        for &c in &present {
            let mut rows: Vec<usize> = (0..n).filter(|&i| dataset.labels()[i] == c).collect();
            RngStream::derive(seed, &[c as u64]).shuffle(&mut rows);
            validation.extend_from_slice(&rows[..quota[c]]);
            train.extend_from_slice(&rows[quota[c]..]);
        }
        (train, validation, None)
    };
    train.sort_unstable();
    validation.sort_unstable();
    Ok(dataset.clone().with_split(Split {
        train,
        validation,
        warning,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerClass {
    All,
    K(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsampleSpec {
    pub per_class: PerClass,
    pub seed: u64,
}

/// Keeps min(k, available) training rows per class, chosen uniformly at
/// random; validation rows are kept as they are. Dropped rows are removed.
pub fn subsample(dataset: &Dataset, spec: &SubsampleSpec) -> Result<Dataset> {
    let k = match spec.per_class {
        PerClass::All => return Ok(dataset.clone()),
        PerClass::K(0) => return Err(Error::input("per-class sample count must be positive")),
        PerClass::K(k) => k,
    };
    let mut keep: Vec<usize> = dataset.split().validation.clone();
    for c in 0..dataset.num_classes() {
        let mut rows: Vec<usize> = dataset
            .split()
            .train
            .iter()
            .copied()
            .filter(|&i| dataset.labels()[i] == c)
            .collect();
        RngStream::derive(spec.seed, &[c as u64]).shuffle(&mut rows);
        keep.extend_from_slice(&rows[..k.min(rows.len())]);
    }
    Ok(dataset.select(&keep))
}

/// Keeps at most `max` validation rows, chosen uniformly at random; the
/// training split is untouched.
pub fn cap_validation(dataset: &Dataset, max: usize, seed: u64) -> Dataset {
    let val = &dataset.split().validation;
    if val.len() <= max {
        return dataset.clone();
    }
    let mut chosen = val.clone();
    RngStream::derive(seed, &[u64::MAX - 1]).shuffle(&mut chosen);
    chosen.truncate(max);
    chosen.extend_from_slice(&dataset.split().train);
    dataset.select(&chosen)
}
