use std::fs;
use std::path::Path;

use epsinit::init::w_epsilon;
use epsinit::nn::TrainReport;
use epsinit::props::{signal_rows_to_csv, reports_to_csv, run_figure1, verify_all, PropReport, VerifyGrid};

use crate::error::CliError;
use crate::experiment::{load_base, prepare, run_cell};
use crate::spec::ExperimentSpec;

/// Writes `text` to `out`, or returns it for stdout when `out` is `None`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<Option<String>, CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
            Ok(None)
        }
        None => Ok(Some(text.to_string())),
    }
}

/// W^ε as CSV, one row per line.
pub fn gen_matrix(m: usize, n: usize, eps: f64) -> Result<String, CliError> {
    Ok(w_epsilon(m, n, eps)?.to_csv_string())
}

pub struct VerifyOutcome {
    pub reports: Vec<PropReport>,
    pub text: String,
}

impl VerifyOutcome {
    pub fn failed(&self) -> Vec<&PropReport> {
        self.reports.iter().filter(|r| !r.passed).collect()
    }
}

/// Every property check over `grid`, as CSV or JSON lines.
pub fn verify(grid: &VerifyGrid, json: bool) -> Result<VerifyOutcome, CliError> {
    let reports = verify_all(grid)?;
    let text = if json {
        reports.iter().map(|r| r.to_json_line() + "\n").collect()
    } else {
        reports_to_csv(&reports)
    };
    Ok(VerifyOutcome { reports, text })
}

/// Per-trial signal statistics for the proposed, Gaussian and orthogonal matrices.
pub fn propagate(eps: f64, seed: u64) -> Result<String, CliError> {
    Ok(signal_rows_to_csv(&run_figure1(eps, seed)?))
}

/// A single training run; the spec must describe exactly one cell.
pub fn train_single(spec: &ExperimentSpec, data_dir: &Path) -> Result<TrainReport, CliError> {
    if spec.num_cells() != 1 {
        return Err(CliError::config(format!(
            "train needs exactly one method, network, activation, per_class and seed; the spec has {} combinations",
            spec.num_cells()
        )));
    }
    let seed = spec.seeds[0];
    let base = load_base(spec, data_dir)?;
    let data = prepare(spec, &base, spec.per_class[0], spec.dataset.data_seed.unwrap_or(seed))?;
    run_cell(spec, &data, &spec.methods[0], &spec.networks[0], spec.activations[0], seed)
        .map_err(|e| CliError::failure(format!("training failed: {e}")))
}
