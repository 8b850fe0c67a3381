use serde::Serialize;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::network::{argmax, mean_cross_entropy, Network};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Rows per forward pass when evaluating a whole dataset.
const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub shuffle_seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, shuffle_seed: u64) -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 100,
            epochs,
            shuffle_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub dead_unit_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub rows: Vec<EpochRow>,
}

impl TrainReport {
    /// Header `epoch,train_loss,train_acc,val_acc,dead_unit_fraction`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["epoch", "train_loss", "train_acc", "val_acc", "dead_unit_fraction"])
            .expect("in-memory write");
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn final_row(&self) -> Option<&EpochRow> {
        self.rows.last()
    }

    pub fn final_val_acc(&self) -> f64 {
        self.final_row().map_or(f64::NAN, |r| r.val_acc)
    }
}

struct Evaluation {
    train_loss: f64,
    train_acc: f64,
    val_acc: f64,
    dead_unit_fraction: f64,
}

/// One pass over every row of the dataset.
fn evaluate(net: &Network, data: &Dataset) -> Result<Evaluation> {
    let n = data.num_rows();
    let mut alive: Vec<Vec<bool>> =
        net.biases[..net.biases.len() - 1].iter().map(|b| vec![false; b.len()]).collect();
    let mut in_train = vec![false; n];
    for &i in &data.split().train {
        in_train[i] = true;
    }
    let (mut loss_sum, mut train_hits, mut val_hits) = (0.0, 0usize, 0usize);
    let all: Vec<usize> = (0..n).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let x = data.features().select_rows(chunk);
        let logits = net.logits_and_alive(&x, &mut alive)?;
        for (r, &i) in chunk.iter().enumerate() {
            let y = data.labels()[i];
            let hit = argmax(logits.row(r)) == y;
            if in_train[i] {
                loss_sum += mean_cross_entropy(&logits.select_rows(&[r]), &[y]);
                train_hits += usize::from(hit);
            } else {
                val_hits += usize::from(hit);
            }
        }
    }
    let n_train = data.split().train.len().max(1) as f64;
    let n_val = data.split().validation.len().max(1) as f64;
    let units: usize = alive.iter().map(Vec::len).sum();
    let dead = alive.iter().flatten().filter(|&&a| !a).count();
    Ok(Evaluation {
        train_loss: loss_sum / n_train,
        train_acc: train_hits as f64 / n_train,
        val_acc: val_hits as f64 / n_val,
        dead_unit_fraction: if units == 0 { 0.0 } else { dead as f64 / units as f64 },
    })
}

/// Fraction of hidden units whose activation is zero on every row.
/// A network without hidden layers has none and reports 0.
pub fn dead_unit_fraction(net: &Network, data: &Dataset) -> Result<f64> {
    Ok(evaluate(net, data)?.dead_unit_fraction)
}

/// Accuracy of `net` on the given rows.
pub fn accuracy(net: &Network, data: &Dataset, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for chunk in rows.chunks(EVAL_CHUNK) {
        let mut alive: Vec<Vec<bool>> =
            net.biases[..net.biases.len() - 1].iter().map(|b| vec![false; b.len()]).collect();
        let logits = net.logits_and_alive(&data.features().select_rows(chunk), &mut alive)?;
        hits += chunk
            .iter()
            .enumerate()
            .filter(|&(r, &i)| argmax(logits.row(r)) == data.labels()[i])
            .count();
    }
    Ok(hits as f64 / rows.len() as f64)
}

/// Mini-batch Adam on the training split. Row 0 of the report is the
/// untrained network; every later row is measured after its epoch. Each
/// epoch visits the training rows in an order drawn from
/// (shuffle_seed, epoch); the last partial batch is kept.
pub fn train(net: &mut Network, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.batch_size == 0 {
        return Err(Error::input("batch_size must be at least 1"));
    }
    let lr = cfg.adam.learning_rate;
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::input(format!("learning rate must be finite and non-negative, got {lr}")));
    }
    if data.feature_dim() != net.input_dim() {
        return Err(Error::Dimension {
            op: "train",
            detail: format!("dataset has {} features, network expects {}", data.feature_dim(), net.input_dim()),
        });
    }
    if data.num_classes() > net.output_dim() {
        return Err(Error::Dimension {
            op: "train",
            detail: format!("{} classes but {} outputs", data.num_classes(), net.output_dim()),
        });
    }
    if data.split().train.is_empty() || data.split().validation.is_empty() {
        return Err(Error::input("training needs non-empty train and validation splits"));
    }

    let mut report = TrainReport::default();
    let mut record = |epoch: usize, net: &Network| -> Result<()> {
        let e = evaluate(net, data)?;
        report.rows.push(EpochRow {
            epoch,
            train_loss: e.train_loss,
            train_acc: e.train_acc,
            val_acc: e.val_acc,
            dead_unit_fraction: e.dead_unit_fraction,
        });
        Ok(())
    };
    record(0, net)?;

    let mut state = AdamState::new(net);
    for epoch in 1..=cfg.epochs {
        let mut order = data.split().train.clone();
        RngStream::derive(cfg.shuffle_seed, &[epoch as u64]).shuffle(&mut order);
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.features().select_rows(rows);
            let y: Vec<usize> = rows.iter().map(|&i| data.labels()[i]).collect();
            let pass = net.forward(&x)?;
            let loss = net.loss(&pass, &y);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch, loss });
            }
            let grads = net.backward(&pass, &y)?;
            adam_step(net, &grads, &mut state, &cfg.adam);
            if !net.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch, loss: f64::NAN });
            }
        }
        record(epoch, net)?;
    }
    Ok(report)
}
