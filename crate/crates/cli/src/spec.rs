//! Experiment description files.
//!
//! A spec is plain text: `key = value` lines grouped under `[section]`
//! headers, `#` starts a comment. Keys are addressed as `section.key`
//! (top-level keys have no prefix), which is also the form accepted by
//! `--set` overrides. Lists are comma separated; `network.hidden` takes
//! several networks separated by `;`, each a comma list optionally
//! followed by `xN` to repeat it, e.g. `10,6x60` or `none`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use epsinit::data::PerClass;
use epsinit::nn::Activation;
use epsinit::{InitKind, InitMethod};

use crate::error::CliError;

/// Hidden widths: `pattern` repeated `repeats` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hidden {
    pub pattern: Vec<usize>,
    pub repeats: usize,
}

impl Hidden {
    pub fn widths(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.pattern.len() * self.repeats);
        for _ in 0..self.repeats {
            out.extend_from_slice(&self.pattern);
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.pattern.len() * self.repeats
    }
}

impl fmt::Display for Hidden {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pattern.is_empty() || self.repeats == 0 {
            return write!(f, "none");
        }
        let list: Vec<String> = self.pattern.iter().map(usize::to_string).collect();
        write!(f, "{}", list.join(","))?;
        if self.repeats > 1 {
            write!(f, "x{}", self.repeats)?;
        }
        Ok(())
    }
}

impl FromStr for Hidden {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "none" {
            return Ok(Hidden { pattern: Vec::new(), repeats: 1 });
        }
        let (list, repeats) = match s.rsplit_once('x') {
            Some((list, r)) => (list, r.trim().parse().map_err(|_| format!("bad repeat count in `{s}`"))?),
            None => (s, 1),
        };
        let pattern = list
            .split(',')
            .map(|w| match w.trim().parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(format!("bad layer width `{}` in `{s}`", w.trim())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if repeats == 0 {
            return Err(format!("repeat count must be positive in `{s}`"));
        }
        Ok(Hidden { pattern, repeats })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    Iris,
    Wine,
    /// The bundled 10k MNIST files unless paths are given.
    Mnist,
    /// Any IDX image/label pair, e.g. Fashion-MNIST.
    Idx,
    /// Any headed CSV; needs `dataset.path` and `dataset.label`.
    Csv,
    /// Two separable Gaussian blobs.
    Synth,
}

impl DatasetKind {
    fn name(&self) -> &'static str {
        match self {
            DatasetKind::Iris => "iris",
            DatasetKind::Wine => "wine",
            DatasetKind::Mnist => "mnist",
            DatasetKind::Idx => "idx",
            DatasetKind::Csv => "csv",
            DatasetKind::Synth => "synth",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub path: Option<PathBuf>,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub label_column: Option<String>,
    pub val_fraction: f64,
    /// Random subset of this many rows before splitting.
    pub row_cap: Option<usize>,
    /// Random subset of this many validation rows after splitting.
    pub val_cap: Option<usize>,
    /// Fixed seed for row capping, splitting and subsampling; otherwise
    /// each run uses its own seed.
    pub data_seed: Option<u64>,
    pub synth_rows: usize,
    pub synth_dim: usize,
    pub synth_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub dataset: DatasetSpec,
    pub networks: Vec<Hidden>,
    pub activations: Vec<Activation>,
    pub methods: Vec<InitMethod>,
    pub per_class: Vec<PerClass>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs written to the results table; `None` writes every epoch.
    pub checkpoints: Option<Vec<usize>>,
}

impl ExperimentSpec {
    pub fn num_cells(&self) -> usize {
        self.methods.len() * self.networks.len() * self.activations.len() * self.per_class.len() * self.seeds.len()
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::parse_with(text, &[])
    }

    /// Parses `text`, then applies `section.key=value` overrides.
    pub fn parse_with(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut map = parse_pairs(text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("override `{o}` is not key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_pairs(map)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::failure(format!("{}: {e}", path.display())))?;
        Self::parse_with(&text, overrides)
    }

    fn from_pairs(mut map: BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut take = |key: &str| map.remove(key);
        let name = take("name").unwrap_or_else(|| "experiment".into());

        let kind = match take("dataset.kind").as_deref() {
            Some("iris") => DatasetKind::Iris,
            Some("wine") => DatasetKind::Wine,
            Some("mnist") => DatasetKind::Mnist,
            Some("idx") => DatasetKind::Idx,
            Some("csv") => DatasetKind::Csv,
            Some("synth") => DatasetKind::Synth,
            Some(other) => return Err(CliError::config(format!("dataset.kind: unknown dataset `{other}`"))),
            None => return Err(CliError::config("dataset.kind is required")),
        };
        let dataset = DatasetSpec {
            path: take("dataset.path").map(PathBuf::from),
            images: take("dataset.images").map(PathBuf::from),
            labels: take("dataset.labels").map(PathBuf::from),
            label_column: take("dataset.label"),
            val_fraction: opt(take("dataset.val_fraction"), "dataset.val_fraction")?.unwrap_or(0.15),
            row_cap: opt(take("dataset.row_cap"), "dataset.row_cap")?,
            val_cap: opt(take("dataset.val_cap"), "dataset.val_cap")?,
            data_seed: opt(take("dataset.data_seed"), "dataset.data_seed")?,
            synth_rows: opt(take("dataset.rows"), "dataset.rows")?.unwrap_or(200),
            synth_dim: opt(take("dataset.dim"), "dataset.dim")?.unwrap_or(5),
            synth_margin: opt(take("dataset.margin"), "dataset.margin")?.unwrap_or(5.0),
            kind,
        };
        if !(dataset.val_fraction > 0.0 && dataset.val_fraction < 1.0) {
            return Err(CliError::config(format!(
                "dataset.val_fraction must lie in (0, 1), got {}",
                dataset.val_fraction
            )));
        }
        match dataset.kind {
            DatasetKind::Csv if dataset.path.is_none() || dataset.label_column.is_none() => {
                return Err(CliError::config("dataset.kind = csv needs dataset.path and dataset.label"));
            }
            DatasetKind::Idx if dataset.images.is_none() || dataset.labels.is_none() => {
                return Err(CliError::config("dataset.kind = idx needs dataset.images and dataset.labels"));
            }
            _ => {}
        }

        let networks = take("network.hidden")
            .ok_or_else(|| CliError::config("network.hidden is required"))?
            .split(';')
            .map(|h| h.parse::<Hidden>().map_err(|e| CliError::config(format!("network.hidden: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let activations = list(take("network.activations").as_deref().unwrap_or("relu"), "network.activations")?;

        let eps: Option<f64> = opt(take("grid.eps"), "grid.eps")?;
        if let Some(e) = eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(CliError::config(format!("grid.eps must be positive, got {e}")));
            }
        }
        let mut methods: Vec<InitMethod> = split_top_level(take("grid.methods").as_deref().unwrap_or("proposed"))
            .iter()
            .map(|m| m.parse::<InitMethod>().map_err(|e| CliError::config(format!("grid.methods: {e}"))))
            .collect::<Result<_, _>>()?;
        if let Some(e) = eps {
            for m in methods.iter_mut().filter(|m| m.kind == InitKind::Proposed) {
                m.eps = e;
            }
        }
        let per_class = take("grid.per_class")
            .as_deref()
            .unwrap_or("all")
            .split(',')
            .map(|s| match s.trim() {
                "all" => Ok(PerClass::All),
                k => match k.parse::<usize>() {
                    Ok(k) if k > 0 => Ok(PerClass::K(k)),
                    _ => Err(CliError::config(format!("grid.per_class: `{k}` is not a positive integer or all"))),
                },
            })
            .collect::<Result<Vec<_>, _>>()?;
        let seeds = list(take("grid.seeds").as_deref().unwrap_or("0"), "grid.seeds")?;

        let epochs = opt(take("train.epochs"), "train.epochs")?.unwrap_or(10);
        let learning_rate: f64 = opt(take("train.learning_rate"), "train.learning_rate")?.unwrap_or(0.001);
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(CliError::config(format!("train.learning_rate must be non-negative, got {learning_rate}")));
        }
        let batch_size = opt(take("train.batch_size"), "train.batch_size")?.unwrap_or(100);
        if batch_size == 0 {
            return Err(CliError::config("train.batch_size must be at least 1"));
        }
        let checkpoints = match take("train.checkpoints").as_deref() {
            None | Some("all") => None,
            Some(s) => Some(list(s, "train.checkpoints")?),
        };

        if let Some(key) = map.keys().next() {
            return Err(CliError::config(format!("unknown key `{key}`")));
        }
        let spec = ExperimentSpec {
            name,
            dataset,
            networks,
            activations,
            methods,
            per_class,
            seeds,
            epochs,
            learning_rate,
            batch_size,
            checkpoints,
        };
        if spec.num_cells() == 0 {
            return Err(CliError::config("the grid is empty"));
        }
        Ok(spec)
    }

    /// Text form accepted by [`ExperimentSpec::parse`].
    pub fn to_text(&self) -> String {
        let join = |items: Vec<String>, sep: &str| items.join(sep);
        let d = &self.dataset;
        let mut out = format!("name = {}\n\n[dataset]\nkind = {}\n", self.name, d.kind.name());
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        for (k, p) in [("path", &d.path), ("images", &d.images), ("labels", &d.labels)] {
            if let Some(p) = p {
                line(k, p.display().to_string());
            }
        }
        if let Some(l) = &d.label_column {
            line("label", l.clone());
        }
        line("val_fraction", d.val_fraction.to_string());
        if let Some(c) = d.row_cap {
            line("row_cap", c.to_string());
        }
        if let Some(c) = d.val_cap {
            line("val_cap", c.to_string());
        }
        if let Some(s) = d.data_seed {
            line("data_seed", s.to_string());
        }
        if d.kind == DatasetKind::Synth {
            line("rows", d.synth_rows.to_string());
            line("dim", d.synth_dim.to_string());
            line("margin", d.synth_margin.to_string());
        }
        out.push_str("\n[network]\n");
        out.push_str(&format!(
            "hidden = {}\nactivations = {}\n",
            join(self.networks.iter().map(Hidden::to_string).collect(), "; "),
            join(self.activations.iter().map(|a| a.to_string()).collect(), ", ")
        ));
        out.push_str(&format!(
            "\n[train]\nepochs = {}\nlearning_rate = {}\nbatch_size = {}\n",
            self.epochs, self.learning_rate, self.batch_size
        ));
        if let Some(c) = &self.checkpoints {
            out.push_str(&format!("checkpoints = {}\n", join(c.iter().map(usize::to_string).collect(), ", ")));
        }
        out.push_str(&format!(
            "\n[grid]\nmethods = {}\nper_class = {}\nseeds = {}\n",
            join(self.methods.iter().map(InitMethod::to_string).collect(), ", "),
            join(self.per_class.iter().map(|p| per_class_name(*p)).collect(), ", "),
            join(self.seeds.iter().map(u64::to_string).collect(), ", ")
        ));
        out
    }
}

pub fn per_class_name(p: PerClass) -> String {
    match p {
        PerClass::All => "all".into(),
        PerClass::K(k) => k.to_string(),
    }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    let mut section = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected key = value, got `{line}`", n + 1)))?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::config(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(map)
}

fn opt<T: FromStr>(value: Option<String>, key: &str) -> Result<Option<T>, CliError> {
    value
        .map(|v| v.parse().map_err(|_| CliError::config(format!("{key}: cannot parse `{v}`"))))
        .transpose()
}

fn list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|s| s.trim().parse().map_err(|e| CliError::config(format!("{key}: `{}`: {e}", s.trim()))))
        .collect()
}

/// Splits on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

const ALL_METHODS: &str = "proposed, xavier, he, orthogonal, identity, zero, rai, gsm";

/// Names of the bundled experiment specs.
pub const BUILTIN_NAMES: [&str; 6] =
    ["table1-smoke", "fig2-depth", "fig34-width", "table2-activation", "iris-deep", "wine-deep"];

/// Text of a bundled spec.
pub fn builtin(name: &str) -> Option<String> {
    let text = match name {
        "table1-smoke" => format!(
            "# few-shot MNIST, one 16-unit hidden layer\n\
             name = table1-smoke\n\n[dataset]\nkind = mnist\nval_fraction = 0.2\nval_cap = 2000\n\n\
             [network]\nhidden = 16\nactivations = relu\n\n[train]\nepochs = 10\n\n\
             [grid]\nmethods = {ALL_METHODS}\nper_class = 1, 2, 4, all\nseeds = 0, 1, 2, 3, 4\n"
        ),
        "fig2-depth" => {
            let nets: Vec<String> = [10, 20, 40, 50, 80, 100, 120].iter().map(|d| format!("10,6x{}", d / 2)).collect();
            format!(
                "# validation accuracy against depth, alternating 10/6 ReLU layers\n\
                 name = fig2-depth\n\n[dataset]\nkind = mnist\nrow_cap = 10000\n\n\
                 [network]\nhidden = {}\nactivations = relu\n\n[train]\nepochs = 10\n\n\
                 [grid]\nmethods = {ALL_METHODS}\nseeds = 0, 1, 2\n",
                nets.join("; ")
            )
        }
        "fig34-width" => {
            let widths = [2, 4, 8, 16, 32, 64];
            let nets: Vec<String> =
                widths.iter().flat_map(|a| widths.iter().map(move |b| format!("{a},{b}"))).collect();
            format!(
                "# two hidden layers, every width pair\n\
                 name = fig34-width\n\n[dataset]\nkind = mnist\nrow_cap = 10000\n\n\
                 [network]\nhidden = {}\nactivations = relu\n\n[train]\nepochs = 10\n\n\
                 [grid]\nmethods = {ALL_METHODS}\nseeds = 0\n",
                nets.join("; ")
            )
        }
        "table2-activation" => format!(
            "# 120 hidden layers of alternating 10/6, five activations\n\
             name = table2-activation\n\n[dataset]\nkind = mnist\nrow_cap = 10000\n\n\
             [network]\nhidden = 10,6x60\nactivations = relu, tanh, sigmoid, selu, gelu\n\n\
             [train]\nepochs = 10\n\n[grid]\nmethods = {ALL_METHODS}\nseeds = 0\n"
        ),
        "iris-deep" => "# deep narrow net on Iris\n\
             name = iris-deep\n\n[dataset]\nkind = iris\n\n\
             [network]\nhidden = 10,6x100\nactivations = relu\n\n[train]\nepochs = 100\n\n\
             [grid]\nmethods = proposed, zero, orthogonal, rai, he\nseeds = 0, 1, 2, 3, 4\n"
            .to_string(),
        "wine-deep" => "# deep narrow net on red Wine Quality\n\
             name = wine-deep\n\n[dataset]\nkind = wine\n\n\
             [network]\nhidden = 10,6x60\nactivations = relu\n\n[train]\nepochs = 100\n\n\
             [grid]\nmethods = proposed, zero, orthogonal, rai, he\nseeds = 0, 1, 2, 3, 4\n"
            .to_string(),
        _ => return None,
    };
    Some(text)
}
