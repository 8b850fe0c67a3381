//! Tabular CSV datasets and per-feature standardization.

use std::fs;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Which columns of a headed CSV file are features and which is the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    /// Feature column names; `None` means every column except the label.
    pub features: Option<Vec<String>>,
    pub label: String,
}

impl CsvSchema {
    pub fn new(label: &str) -> Self {
        Self {
            features: None,
            label: label.to_string(),
        }
    }

    pub fn with_features(label: &str, features: &[&str]) -> Self {
        Self {
            features: Some(features.iter().map(|s| s.to_string()).collect()),
            label: label.to_string(),
        }
    }

    pub fn iris() -> Self {
        Self::with_features(
            "species",
            &["sepal_length", "sepal_width", "petal_length", "petal_width"],
        )
    }

    /// Wine Quality: 11 physico-chemical features, `quality` as the label.
    pub fn wine() -> Self {
        Self::new("quality")
    }
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains(';') && !header.contains(',') {
        b';'
    } else {
        b','
    }
}

/// Parses CSV text. Labels are re-indexed densely in ascending order
/// (numeric order if every label parses as a number, otherwise lexical).
pub fn parse_csv(text: &str, schema: &CsvSchema, path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(text))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::CsvMissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let label_col = find(&schema.label)?;
    let feature_cols: Vec<usize> = match &schema.features {
        Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| i != label_col).collect(),
    };
    if feature_cols.is_empty() {
        return Err(Error::input(format!("{}: no feature columns", path.display())));
    }

    let mut data = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("");
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Error::CsvValue {
                    path: path.to_path_buf(),
                    row: row + 1,
                    column: headers[c].to_string(),
                    value: cell.to_string(),
                }
            })?;
            data.push(v);
        }
        raw_labels.push(record.get(label_col).unwrap_or("").to_string());
    }
    if raw_labels.is_empty() {
        return Err(Error::input(format!("{}: no data rows", path.display())));
    }

    let mut classes: Vec<String> = raw_labels.clone();
    let numeric: Option<Vec<f64>> = classes.iter().map(|s| s.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        classes.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    } else {
        classes.sort();
    }
    classes.dedup();
    let labels = raw_labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("label is in its own class list"))
        .collect();
    let features = Matrix::new(raw_labels.len(), feature_cols.len(), data)?;
    Dataset::new(features, labels, classes.len())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, schema, path)
}

/// Zero mean, unit variance per feature using statistics of the training
/// rows only; applied to every row. Constant features become 0.
pub fn standardize(dataset: &Dataset) -> Dataset {
    let train = &dataset.split().train;
    let x = dataset.features();
    let d = x.cols();
    let n = train.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    for &i in train {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for &i in train {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
    let out = Matrix::from_fn(x.rows(), d, |i, j| {
        if std[j] > 1e-12 {
            (x[(i, j)] - mean[j]) / std[j]
        } else {
            0.0
        }
    });
    dataset.clone().with_features(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, schema: &CsvSchema) -> Result<Dataset> {
        parse_csv(text, schema, Path::new("t.csv"))
    }

    #[test]
    fn dense_label_reindexing() {
        let text = "a,b,q\n1,2,7\n3,4,5\n5,6,7\n7,8,10\n";
        let d = parse(text, &CsvSchema::new("q")).unwrap();
        assert_eq!(d.labels(), &[1, 0, 1, 2]);
        assert_eq!(d.num_classes(), 3);
        assert_eq!(d.features().shape(), (4, 2));
    }

    #[test]
    fn string_labels_and_semicolons() {
        let text = "x;kind\n1.5;b\n2.5;a\n";
        let d = parse(text, &CsvSchema::new("kind")).unwrap();
        assert_eq!(d.labels(), &[1, 0]);
        assert_eq!(d.features().as_slice(), &[1.5, 2.5]);
    }

    #[test]
    fn errors_carry_location() {
        let err = parse("a,b\n1,2\n", &CsvSchema::new("q")).unwrap_err();
        assert!(matches!(err, Error::CsvMissingColumn { ref column, .. } if column == "q"));
        let err = parse("a,q\n1,0\nx,1\n", &CsvSchema::new("q")).unwrap_err();
        match err {
            Error::CsvValue { row, column, value, .. } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "a", "x"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn standardize_uses_training_rows() {
        let text = "a,c,q\n1,5,0\n3,5,1\n100,5,0\n";
        let d = parse(text, &CsvSchema::new("q")).unwrap();
        let d = d.select(&[0, 1, 2]);
        let d = d.clone().with_split(crate::data::Split {
            train: vec![0, 1],
            validation: vec![2],
            warning: None,
        });
        let s = standardize(&d);
        assert_eq!(s.features().column(0)[..2], [-1.0, 1.0]);
        assert_eq!(s.features()[(2, 0)], 98.0);
        assert!(s.features().column(1).iter().all(|&v| v == 0.0));
    }
}
