//! Grid execution: every (method, network, activation, per-class, seed)
//! cell is an independent single-threaded training run.

use std::collections::BTreeMap;
use std::path::Path;

use epsinit::data::{
    cap_validation, load_csv, load_idx, split, standardize, subsample, synth_separable, CsvSchema, Dataset, PerClass,
    SubsampleSpec,
};
use epsinit::nn::{build, train, Activation, NetworkConfig, TrainConfig, TrainReport};
use epsinit::rng::RngStream;
use epsinit::InitMethod;
use rayon::prelude::*;

use crate::error::CliError;
use crate::spec::{per_class_name, DatasetKind, ExperimentSpec, Hidden};

pub const MNIST_IMAGES: &str = "mnist-10k-images-idx3-ubyte.gz";
pub const MNIST_LABELS: &str = "mnist-10k-labels-idx1-ubyte.gz";
pub const IRIS_CSV: &str = "iris.csv";
pub const WINE_CSV: &str = "winequality-red.csv";

/// Grid position of a cell; the sort order of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub method: usize,
    pub network: usize,
    pub activation: usize,
    pub per_class: usize,
    pub seed: usize,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub key: CellKey,
    pub method: InitMethod,
    pub network: Hidden,
    pub activation: Activation,
    pub per_class: PerClass,
    pub seed: u64,
    pub outcome: Result<TrainReport, String>,
}

impl CellResult {
    pub fn final_val_acc(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(TrainReport::final_val_acc)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    /// Sorted by key.
    pub cells: Vec<CellResult>,
}

fn method_label(m: &InitMethod) -> String {
    m.kind.name().to_string()
}

impl ExperimentResult {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// One row per cell and reported epoch. Failed cells get one row with
    /// empty metrics and the error in `status`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "experiment",
            "method",
            "network",
            "activation",
            "per_class",
            "seed",
            "epoch",
            "train_loss",
            "train_acc",
            "val_acc",
            "dead_unit_fraction",
            "status",
        ])
        .expect("in-memory write");
        for c in &self.cells {
            let head = [
                self.spec.name.clone(),
                method_label(&c.method),
                c.network.to_string(),
                c.activation.to_string(),
                per_class_name(c.per_class),
                c.seed.to_string(),
            ];
            match &c.outcome {
                Ok(rep) => {
                    for r in &rep.rows {
                        let keep = self.spec.checkpoints.as_ref().map_or(true, |cp| cp.contains(&r.epoch));
                        if !keep {
                            continue;
                        }
                        let tail = [
                            r.epoch.to_string(),
                            r.train_loss.to_string(),
                            r.train_acc.to_string(),
                            r.val_acc.to_string(),
                            r.dead_unit_fraction.to_string(),
                            "ok".to_string(),
                        ];
                        w.write_record(head.iter().chain(&tail)).expect("in-memory write");
                    }
                }
                Err(e) => {
                    let tail = ["", "", "", "", "", e.as_str()];
                    w.write_record(head.iter().map(String::as_str).chain(tail)).expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Median final validation accuracy per (method, network, activation,
    /// per-class) over seeds, failed cells excluded.
    pub fn medians(&self) -> Vec<MedianRow> {
        let mut groups: BTreeMap<(usize, usize, usize, usize), (usize, Vec<f64>)> = BTreeMap::new();
        for c in &self.cells {
            let k = (c.key.method, c.key.network, c.key.activation, c.key.per_class);
            let entry = groups.entry(k).or_default();
            entry.0 += 1;
            if let Some(v) = c.final_val_acc() {
                entry.1.push(v);
            }
        }
        groups
            .into_iter()
            .map(|((m, n, a, p), (runs, vals))| MedianRow {
                method: method_label(&self.spec.methods[m]),
                network: self.spec.networks[n].to_string(),
                activation: self.spec.activations[a],
                per_class: self.spec.per_class[p],
                runs,
                median_val_acc: median(vals),
            })
            .collect()
    }

    /// Median final validation accuracy of one method (by name) over all
    /// of its cells.
    pub fn median_for(&self, method: &str) -> Option<f64> {
        let vals: Vec<f64> =
            self.cells.iter().filter(|c| c.method.kind.name() == method).filter_map(CellResult::final_val_acc).collect();
        (!vals.is_empty()).then(|| median(vals))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub method: String,
    pub network: String,
    pub activation: Activation,
    pub per_class: PerClass,
    pub runs: usize,
    pub median_val_acc: f64,
}

pub fn medians_to_csv(rows: &[MedianRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "network", "activation", "per_class", "runs", "median_val_acc"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.network.clone(),
            r.activation.to_string(),
            per_class_name(r.per_class),
            r.runs.to_string(),
            r.median_val_acc.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Median of the values; the mean of the middle two for even counts, NaN
/// when empty.
pub fn median(mut vals: Vec<f64>) -> f64 {
    if vals.is_empty() {
        return f64::NAN;
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}

/// Loads the dataset named by the spec, unsplit and unnormalized.
pub fn load_base(spec: &ExperimentSpec, data_dir: &Path) -> Result<Dataset, CliError> {
    let d = &spec.dataset;
    let or_default = |p: &Option<std::path::PathBuf>, name: &str| p.clone().unwrap_or_else(|| data_dir.join(name));
    let data = match d.kind {
        DatasetKind::Iris => load_csv(or_default(&d.path, IRIS_CSV), &CsvSchema::iris())?,
        DatasetKind::Wine => load_csv(or_default(&d.path, WINE_CSV), &CsvSchema::wine())?,
        DatasetKind::Mnist => load_idx(or_default(&d.images, MNIST_IMAGES), or_default(&d.labels, MNIST_LABELS))?,
        DatasetKind::Idx => load_idx(
            d.images.as_ref().expect("validated at parse"),
            d.labels.as_ref().expect("validated at parse"),
        )?,
        DatasetKind::Csv => load_csv(
            d.path.as_ref().expect("validated at parse"),
            &CsvSchema::new(d.label_column.as_deref().expect("validated at parse")),
        )?,
        DatasetKind::Synth => synth_separable(d.synth_rows, d.synth_dim, d.synth_margin, d.data_seed.unwrap_or(0))?,
    };
    Ok(data)
}

/// Row cap, stratified split, standardization (tabular data only),
/// per-class subsampling and validation cap, all seeded by `seed`.
pub fn prepare(spec: &ExperimentSpec, base: &Dataset, per_class: PerClass, seed: u64) -> Result<Dataset, CliError> {
    let d = &spec.dataset;
    let mut data = base.clone();
    if let Some(cap) = d.row_cap {
        if cap < data.num_rows() {
            let mut rows: Vec<usize> = (0..data.num_rows()).collect();
            RngStream::derive(seed, &[0x726f_7773]).shuffle(&mut rows);
            rows.truncate(cap);
            data = data.select(&rows);
        }
    }
    data = split(&data, d.val_fraction, seed)?;
    if matches!(d.kind, DatasetKind::Iris | DatasetKind::Wine | DatasetKind::Csv) {
        data = standardize(&data);
    }
    data = subsample(&data, &SubsampleSpec { per_class, seed })?;
    if let Some(cap) = d.val_cap {
        data = cap_validation(&data, cap, seed);
    }
    Ok(data)
}

/// Trains one cell.
pub fn run_cell(
    spec: &ExperimentSpec,
    data: &Dataset,
    method: &InitMethod,
    hidden: &Hidden,
    activation: Activation,
    seed: u64,
) -> Result<TrainReport, epsinit::Error> {
    let mut dims = vec![data.feature_dim()];
    dims.extend(hidden.widths());
    dims.push(data.num_classes());
    let init = method.with_seed(method.seed.wrapping_add(seed));
    let mut net = build(&NetworkConfig::new(dims, activation, init))?;
    let mut cfg = TrainConfig::new(spec.epochs, seed);
    cfg.adam.learning_rate = spec.learning_rate;
    cfg.batch_size = spec.batch_size;
    train(&mut net, data, &cfg)
}

/// Runs the whole grid on `threads` workers (0 lets the pool decide).
/// Failed cells are recorded and the run continues.
pub fn run(spec: &ExperimentSpec, data_dir: &Path, threads: usize) -> Result<ExperimentResult, CliError> {
    let base = load_base(spec, data_dir)?;
    let data_seed = |seed: u64| spec.dataset.data_seed.unwrap_or(seed);

    // one prepared dataset per (per-class, data seed)
    let mut prepared: BTreeMap<(usize, u64), Dataset> = BTreeMap::new();
    for (p, &pc) in spec.per_class.iter().enumerate() {
        for &s in &spec.seeds {
            let ds = data_seed(s);
            if !prepared.contains_key(&(p, ds)) {
                prepared.insert((p, ds), prepare(spec, &base, pc, ds)?);
            }
        }
    }

    let mut keys = Vec::with_capacity(spec.num_cells());
    for method in 0..spec.methods.len() {
        for network in 0..spec.networks.len() {
            for activation in 0..spec.activations.len() {
                for per_class in 0..spec.per_class.len() {
                    for seed in 0..spec.seeds.len() {
                        keys.push(CellKey { method, network, activation, per_class, seed });
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::failure(format!("cannot start worker pool: {e}")))?;
    let mut cells: Vec<CellResult> = pool.install(|| {
        keys.par_iter()
            .map(|&key| {
                let method = spec.methods[key.method];
                let network = spec.networks[key.network].clone();
                let activation = spec.activations[key.activation];
                let per_class = spec.per_class[key.per_class];
                let seed = spec.seeds[key.seed];
                let data = &prepared[&(key.per_class, data_seed(seed))];
                let outcome =
                    run_cell(spec, data, &method, &network, activation, seed).map_err(|e| e.to_string());
                CellResult { key, method, network, activation, per_class, seed, outcome }
            })
            .collect()
    });
    cells.sort_by_key(|c| c.key);
    Ok(ExperimentResult { spec: spec.clone(), cells })
}
