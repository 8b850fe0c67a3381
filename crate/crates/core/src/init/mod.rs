//! Weight initializers: the ε-orthogonal W^ε and seven baselines.

mod baselines;
mod proposed;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RngStream;

pub use baselines::{gsm_init, he, identity, rai_init, rai_std, random_orthogonal, xavier, zero_init};
pub use proposed::{
    q_epsilon_fast, q_epsilon_naive, w_epsilon, w_epsilon_with_signs, ColumnSigns, DEFAULT_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Proposed,
    Xavier,
    He,
    RandomOrthogonal,
    Identity,
    ZerO,
    Rai,
    Gsm,
}

impl InitKind {
    pub const ALL: [InitKind; 8] = [
        InitKind::Proposed,
        InitKind::Xavier,
        InitKind::He,
        InitKind::RandomOrthogonal,
        InitKind::Identity,
        InitKind::ZerO,
        InitKind::Rai,
        InitKind::Gsm,
    ];

    /// Canonical config-file name.
    pub fn name(self) -> &'static str {
        match self {
            InitKind::Proposed => "proposed",
            InitKind::Xavier => "xavier",
            InitKind::He => "he",
            InitKind::RandomOrthogonal => "orthogonal",
            InitKind::Identity => "identity",
            InitKind::ZerO => "zero",
            InitKind::Rai => "rai",
            InitKind::Gsm => "gsm",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, InitKind::Proposed | InitKind::Identity | InitKind::ZerO)
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "proposed" | "epsilon" | "eps" => InitKind::Proposed,
            "xavier" | "glorot" => InitKind::Xavier,
            "he" | "kaiming" => InitKind::He,
            "orthogonal" | "random_orthogonal" => InitKind::RandomOrthogonal,
            "identity" => InitKind::Identity,
            "zero" => InitKind::ZerO,
            "rai" => InitKind::Rai,
            "gsm" => InitKind::Gsm,
            _ => return None,
        })
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An initializer together with its parameters.
///
/// `eps` is only read by [`InitKind::Proposed`]; `seed` only by the
/// stochastic kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitMethod {
    pub kind: InitKind,
    pub eps: f64,
    pub seed: u64,
}

impl InitMethod {
    pub fn new(kind: InitKind) -> Self {
        Self {
            kind,
            eps: DEFAULT_EPS,
            seed: 0,
        }
    }

    pub fn proposed(eps: f64) -> Self {
        Self {
            eps,
            ..Self::new(InitKind::Proposed)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            InitKind::Proposed => write!(f, "proposed(eps={})", self.eps),
            k if k.is_stochastic() => write!(f, "{k}(seed={})", self.seed),
            k => write!(f, "{k}"),
        }
    }
}

/// Grammar: `name` or `name(key=value, ...)`, keys `eps` and `seed`.
impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: String| Error::InitParse {
            input: input.to_string(),
            reason,
        };
        let text = input.trim();
        let (name, args) = match text.find('(') {
            Some(open) => {
                let rest = text[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| fail("missing closing parenthesis".into()))?;
                (text[..open].trim(), Some(rest))
            }
            None => (text, None),
        };
        let kind =
            InitKind::from_name(name).ok_or_else(|| fail(format!("unknown init method `{name}`")))?;
        let mut method = InitMethod::new(kind);
        for pair in args.into_iter().flat_map(|a| a.split(',')) {
            let pair = pair.trim();
            if pair.is_empty() {
                continue;
            }
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got `{pair}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "eps" if kind == InitKind::Proposed => {
                    let eps: f64 =
                        value.parse().map_err(|_| fail(format!("eps `{value}` is not a number")))?;
                    if !(eps > 0.0 && eps.is_finite()) {
                        return Err(fail(format!("eps must be positive, got {value}")));
                    }
                    method.eps = eps;
                }
                "seed" => {
                    method.seed = value
                        .parse()
                        .map_err(|_| fail(format!("seed `{value}` is not an unsigned integer")))?;
                }
                _ => return Err(fail(format!("unknown parameter `{key}` for {kind}"))),
            }
        }
        Ok(method)
    }
}

/// m × n weight for a single layer, drawn from the method's base stream.
pub fn init_weights(method: &InitMethod, m: usize, n: usize) -> Result<Matrix> {
    init_layer(method, m, n, 0)
}

/// m × n weight for layer `layer`; stochastic methods use an independent
/// stream per (layer, method).
pub fn init_layer(method: &InitMethod, m: usize, n: usize, layer: usize) -> Result<Matrix> {
    if m == 0 || n == 0 {
        return Err(Error::input(format!("layer shape must be positive, got {m}x{n}")));
    }
    let mut rng = RngStream::derive(method.seed, &[layer as u64, method.kind as u64]);
    Ok(match method.kind {
        InitKind::Proposed => w_epsilon(m, n, method.eps)?,
        InitKind::Xavier => xavier(m, n, &mut rng),
        InitKind::He => he(m, n, &mut rng),
        InitKind::RandomOrthogonal => random_orthogonal(m, n, &mut rng)?,
        InitKind::Identity => identity(m, n),
        InitKind::ZerO => zero_init(m, n)?,
        InitKind::Rai => rai_init(m, n, &mut rng),
        InitKind::Gsm => gsm_init(m, n, &mut rng),
    })
}
