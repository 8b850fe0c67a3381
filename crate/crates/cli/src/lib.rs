//! Command-line driver: matrix generation, property verification, signal
//! propagation, single training runs and experiment grids.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use epsinit::props::VerifyGrid;

pub use error::CliError;
use spec::{builtin, ExperimentSpec, BUILTIN_NAMES};

#[derive(Debug, Parser)]
#[command(name = "epsinit", version, about = "ε-orthogonal initialization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write W^ε (m × n) as CSV.
    GenMatrix {
        m: usize,
        n: usize,
        /// ε, also accepted as `--eps`.
        #[arg(conflicts_with = "eps")]
        eps_pos: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every property check; exit 1 if any fails.
    Verify {
        /// Emit JSON lines instead of CSV.
        #[arg(long)]
        json: bool,
        /// Comma-separated ε values for the W^ε checks.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Comma-separated dimensions for the W^ε checks.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Positive-signal propagation trials (3 matrices × 2 inputs × 25).
    Propagate {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one network described by a spec file.
    Train {
        config: PathBuf,
        #[command(flatten)]
        common: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment grid from a spec file or a built-in spec.
    Experiment {
        /// Built-in name or path to a spec file.
        #[arg(long, required_unless_present = "list")]
        spec: Option<String>,
        #[command(flatten)]
        common: SpecArgs,
        /// Results table (one row per cell and epoch).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-group medians of the final validation accuracy.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Print the resolved spec instead of running it.
        #[arg(long)]
        dump: bool,
        /// List the built-in specs.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Override a spec entry, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Directory holding the bundled dataset files.
    #[arg(long, default_value = "fixtures")]
    pub data_dir: PathBuf,
}

fn resolve_spec(name: &str, overrides: &[String]) -> Result<ExperimentSpec, CliError> {
    match builtin(name) {
        Some(text) => ExperimentSpec::parse_with(&text, overrides),
        None if Path::new(name).exists() => ExperimentSpec::load(Path::new(name), overrides),
        None => Err(CliError::config(format!(
            "`{name}` is neither a spec file nor a built-in ({})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

fn print(stdout: &mut dyn Write, text: Option<String>) -> Result<(), CliError> {
    if let Some(t) = text {
        stdout.write_all(t.as_bytes()).map_err(|e| CliError::failure(format!("stdout: {e}")))?;
    }
    Ok(())
}

/// Executes a parsed command. Primary output goes to `--out` when given,
/// otherwise to `stdout`; diagnostics go to `stderr`.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::GenMatrix { m, n, eps_pos, eps, out } => {
            let eps = eps_pos.or(eps).unwrap_or(epsinit::init::DEFAULT_EPS);
            let text = commands::gen_matrix(m, n, eps)?;
            print(stdout, commands::emit(&text, out.as_deref())?)
        }
        Command::Verify { json, eps, dims, seed, out } => {
            let mut grid = VerifyGrid { seed, ..VerifyGrid::default() };
            if let Some(e) = eps {
                grid.eps = e;
            }
            if let Some(d) = dims {
                grid.dims = d;
            }
            let outcome = commands::verify(&grid, json)?;
            print(stdout, commands::emit(&outcome.text, out.as_deref())?)?;
            let failed = outcome.failed();
            if failed.is_empty() {
                return Ok(());
            }
            for r in &failed {
                let _ = writeln!(stderr, "FAILED {}", r.to_json_line());
            }
            Err(CliError::failure(format!("{} of {} checks failed", failed.len(), outcome.reports.len())))
        }
        Command::Propagate { eps, seed, out } => {
            let text = commands::propagate(eps, seed)?;
            print(stdout, commands::emit(&text, out.as_deref())?)
        }
        Command::Train { config, common, out } => {
            let spec = ExperimentSpec::load(&config, &common.overrides)?;
            let report = commands::train_single(&spec, &common.data_dir)?;
            if let Some(last) = report.final_row() {
                let _ = writeln!(stderr, "final val_acc {}", last.val_acc);
            }
            print(stdout, commands::emit(&report.to_csv(), out.as_deref())?)
        }
        Command::Experiment { spec, common, out, summary, threads, dump, list } => {
            if list {
                return print(stdout, Some(BUILTIN_NAMES.map(|n| format!("{n}\n")).concat()));
            }
            let spec = resolve_spec(spec.as_deref().expect("clap requires --spec"), &common.overrides)?;
            if dump {
                return print(stdout, Some(spec.to_text()));
            }
            let _ = writeln!(stderr, "{}: {} runs", spec.name, spec.num_cells());
            let result = experiment::run(&spec, &common.data_dir, threads)?;
            let medians = experiment::medians_to_csv(&result.medians());
            print(stdout, commands::emit(&result.to_csv(), out.as_deref())?)?;
            match summary {
                Some(path) => {
                    commands::emit(&medians, Some(&path))?;
                }
                None => {
                    let _ = stderr.write_all(medians.as_bytes());
                }
            }
            match result.failures() {
                0 => Ok(()),
                n => Err(CliError::failure(format!("{n} of {} runs failed", result.cells.len()))),
            }
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
