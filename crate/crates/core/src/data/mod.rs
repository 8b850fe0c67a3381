//! Datasets: IDX and CSV loaders, a synthetic generator, splitting,
//! per-class subsampling and standardization.

mod idx;
mod split;
mod synth;
mod tabular;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use idx::{load_idx, parse_idx, IMAGES_MAGIC, LABELS_MAGIC};
pub use split::{cap_validation, split, subsample, PerClass, SubsampleSpec, DEFAULT_VAL_FRACTION};
pub use synth::synth_separable;
pub use tabular::{load_csv, parse_csv, standardize, CsvSchema};

/// Row indices of the training and validation parts of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    /// Set when the split could not be stratified by class.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    split: Split,
}

impl Dataset {
    /// All rows start in the training split.
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Dimension {
                op: "Dataset::new",
                detail: format!("{} labels for {} feature rows", labels.len(), features.rows()),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::input(format!("label {bad} outside 0..{num_classes}")));
        }
        let n = labels.len();
        Ok(Self {
            features,
            labels,
            num_classes,
            split: Split {
                train: (0..n).collect(),
                validation: Vec::new(),
                warning: None,
            },
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn split(&self) -> &Split {
        &self.split
    }

    pub(crate) fn with_split(mut self, split: Split) -> Self {
        debug_assert!({
            let mut all: Vec<usize> = split.train.iter().chain(&split.validation).copied().collect();
            all.sort_unstable();
            all == (0..self.num_rows()).collect::<Vec<_>>()
        });
        self.split = split;
        self
    }

    pub(crate) fn with_features(mut self, features: Matrix) -> Self {
        assert_eq!(features.rows(), self.features.rows());
        self.features = features;
        self
    }

    /// Keeps the given rows (ascending order is used) and remaps the split.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut rows = rows.to_vec();
        rows.sort_unstable();
        rows.dedup();
        let mut new_index = vec![usize::MAX; self.num_rows()];
        for (new, &old) in rows.iter().enumerate() {
            new_index[old] = new;
        }
        let remap = |idx: &[usize]| -> Vec<usize> {
            idx.iter().map(|&i| new_index[i]).filter(|&i| i != usize::MAX).collect()
        };
        Dataset {
            features: self.features.select_rows(&rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            split: Split {
                train: remap(&self.split.train),
                validation: remap(&self.split.validation),
                warning: self.split.warning.clone(),
            },
        }
    }

    /// Rows per class, indexed by label.
    pub fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &i in rows {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// The training rows as CSV: header `f0,…,f{d−1},label`, numbers in
    /// shortest round-trip form.
    pub fn train_to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (0..self.feature_dim()).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header).expect("in-memory write");
        for &i in &self.split.train {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
