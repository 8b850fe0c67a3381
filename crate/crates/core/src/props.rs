//! Executable checks of the algebraic properties of W^ε and Q^ε, and the
//! positive-signal-propagation experiment.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::init::{q_epsilon_fast, random_orthogonal, w_epsilon, w_epsilon_with_signs, ColumnSigns};
use crate::linalg::{j_epsilon, matmul, Matrix, Vector};
use crate::rng::RngStream;

/// Allowance for floating-point roundoff added to bounds that are exact in
/// real arithmetic (e.g. a zero bound when min(m, n) = 1).
pub const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropReport {
    pub name: String,
    pub max_violation: f64,
    pub bound: f64,
    pub passed: bool,
    pub metadata: BTreeMap<String, String>,
}

impl PropReport {
    pub fn new(name: &str, max_violation: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            max_violation,
            bound,
            // NaN never passes
            passed: max_violation <= bound,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    fn metadata_string(&self) -> String {
        self.metadata
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// CSV with header `name,max_violation,bound,passed,metadata`; metadata is
/// `key=value` pairs joined by `;`.
pub fn reports_to_csv(reports: &[PropReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "max_violation", "bound", "passed", "metadata"])
        .expect("in-memory write");
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.max_violation.to_string(),
            r.bound.to_string(),
            r.passed.to_string(),
            r.metadata_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// ‖GᵀG − I‖_max with G the taller orientation of `w`.
pub fn check_orthogonality(w: &Matrix) -> PropReport {
    let g = if w.rows() >= w.cols() { w.gram() } else { w.transpose().gram() };
    let k = g.rows();
    PropReport::new("orthogonality", g.max_abs_diff(&Matrix::identity(k)), 1e-9)
        .with("m", w.rows())
        .with("n", w.cols())
}

/// (W^ε_{m×n})ᵀ = W^ε_{n×m}.
pub fn check_transpose_identity(m: usize, n: usize, eps: f64) -> Result<PropReport> {
    let a = w_epsilon(m, n, eps)?.transpose();
    let b = w_epsilon(n, m, eps)?;
    Ok(PropReport::new("transpose_identity", a.max_abs_diff(&b), 1e-9)
        .with("m", m)
        .with("n", n)
        .with("eps", eps))
}

/// Column sums of Q^ε: ⟨q₁, 1⟩ = (m+ε)/√(ε²+2ε+m), and for j ≥ 2 both
/// |⟨q_j, 1⟩| ≤ ε and the sharper |⟨q_j, 1⟩| ≤ ε/√(j−1).
///
/// The three checks have different scales, so `max_violation` is the
/// largest deviation/tolerance ratio and the bound is 1.
pub fn check_q_column_sums(m: usize, eps: f64) -> Result<PropReport> {
    check_q_column_sums_of(&q_epsilon_fast(m, eps)?, eps)
}

/// As [`check_q_column_sums`] for a caller-supplied Q (e.g. the naive path).
pub fn check_q_column_sums_of(q: &Matrix, eps: f64) -> Result<PropReport> {
    let m = q.rows();
    if m < 2 || q.cols() != m {
        return Err(Error::input(format!("check_q_column_sums needs a square Q with m >= 2, got {m}x{}", q.cols())));
    }
    let mf = m as f64;
    let sums = q.column_sums();
    let first = (mf + eps) / (eps * eps + 2.0 * eps + mf).sqrt();
    let first_dev = (sums[0] - first).abs();
    let mut worst_plain = 0.0_f64;
    let mut worst_refined = 0.0_f64;
    for (j0, s) in sums.iter().enumerate().skip(1) {
        worst_plain = worst_plain.max(s.abs() / eps);
        worst_refined = worst_refined.max(s.abs() / (eps / (j0 as f64).sqrt()));
    }
    let ratio = (first_dev / 1e-10).max(worst_plain).max(worst_refined);
    Ok(PropReport::new("q_column_sums", ratio, 1.0)
        .with("m", m)
        .with("eps", eps)
        .with("first_sum", sums[0])
        .with("first_dev", first_dev)
        .with("max_plain_ratio", worst_plain)
        .with("max_refined_ratio", worst_refined))
}

/// Near-constant row and column sums of W^ε:
/// |c_jᵀ1 − d₁ q̂₁[j] ⟨q₁, 1⟩| ≤ ε√H_{s−1} and the mirrored row statement,
/// where d₁ is the sign W^ε applies to its leading outer product.
pub fn check_w_sum_constancy(m: usize, n: usize, eps: f64) -> Result<PropReport> {
    check_w_sum_constancy_with(m, n, eps, ColumnSigns::default())
}

pub fn check_w_sum_constancy_with(
    m: usize,
    n: usize,
    eps: f64,
    signs: ColumnSigns,
) -> Result<PropReport> {
    let w = w_epsilon_with_signs(m, n, eps, signs)?;
    let s = m.min(n);
    let d1 = if signs == ColumnSigns::Householder && s == 1 && m != n { -1.0 } else { 1.0 };
    let qm = q_epsilon_fast(m, eps)?.column(0);
    let qn = q_epsilon_fast(n, eps)?.column(0);
    let sum_m: f64 = qm.iter().sum();
    let sum_n: f64 = qn.iter().sum();
    let col_dev = w
        .column_sums()
        .iter()
        .zip(&qn)
        .map(|(c, qj)| (c - d1 * qj * sum_m).abs())
        .fold(0.0_f64, f64::max);
    let row_dev = w
        .row_sums()
        .iter()
        .zip(&qm)
        .map(|(r, qi)| (r - d1 * qi * sum_n).abs())
        .fold(0.0_f64, f64::max);
    let bound = eps * harmonic(s.saturating_sub(1)).sqrt() + ROUNDOFF;
    Ok(PropReport::new("w_sum_constancy", col_dev.max(row_dev), bound)
        .with("m", m)
        .with("n", n)
        .with("eps", eps)
        .with("col_dev", col_dev)
        .with("row_dev", row_dev))
}

/// Angle between each column a_j of J^ε and 1:
/// ⟨a_j/‖a_j‖, 1/‖1‖⟩ = (m+ε)/(√m √(m+2ε+ε²)) within 1e-12, and that value
/// against 1 − (m−1)ε²/(2m²) within 10ε³ (plus roundoff). Ratio-normalized,
/// bound 1.
pub fn check_a_column_angle(m: usize, eps: f64) -> Result<PropReport> {
    let j = j_epsilon(m, eps)?;
    let mf = m as f64;
    let closed = (mf + eps) / (mf.sqrt() * (mf + 2.0 * eps + eps * eps).sqrt());
    let expansion = 1.0 - (mf - 1.0) / (2.0 * mf * mf) * eps * eps;
    let mut exact_dev = 0.0_f64;
    for c in 0..m {
        let a = Vector::from(j.column(c));
        let cos = a.sum() / (a.norm() * mf.sqrt());
        exact_dev = exact_dev.max((cos - closed).abs());
    }
    let expansion_dev = (closed - expansion).abs();
    let ratio = (exact_dev / 1e-12).max(expansion_dev / (10.0 * eps.powi(3) + ROUNDOFF));
    Ok(PropReport::new("a_column_angle", ratio, 1.0)
        .with("m", m)
        .with("eps", eps)
        .with("cos", closed)
        .with("exact_dev", exact_dev)
        .with("expansion_dev", expansion_dev))
}

/// W(p,k)·W(k,n) = W(p,n); only claimed when k ≥ min(p, n).
pub fn check_composition(p: usize, k: usize, n: usize, eps: f64) -> Result<PropReport> {
    if k < p.min(n) {
        return Err(Error::input(format!(
            "composition needs k >= min(p, n), got p={p} k={k} n={n}"
        )));
    }
    let prod = matmul(&w_epsilon(p, k, eps)?, &w_epsilon(k, n, eps)?)?;
    Ok(PropReport::new("composition", prod.max_abs_diff(&w_epsilon(p, n, eps)?), 1e-8)
        .with("p", p)
        .with("k", k)
        .with("n", n)
        .with("eps", eps))
}

/// |mean_in − √(N₁/N_x)·mean_out| ≤ ε√H_{s−1}·‖x‖/N_x + 1e-6 for W^ε ∈ R^{N₁×N_x}.
pub fn check_mean_preservation(n1: usize, nx: usize, eps: f64, x: &Vector) -> Result<PropReport> {
    let w = w_epsilon(n1, nx, eps)?;
    let st = signal_propagate(&w, x)?;
    let dev = (st.mean_in - (n1 as f64 / nx as f64).sqrt() * st.mean_out).abs();
    let s = n1.min(nx);
    let bound = eps * harmonic(s.saturating_sub(1)).sqrt() * x.norm() / nx as f64 + 1e-6;
    Ok(PropReport::new("mean_preservation", dev, bound)
        .with("n1", n1)
        .with("nx", nx)
        .with("eps", eps))
}

/// |cos_out − cos_in| ≤ 0.01, the angle between the signal and 1 being kept.
///
/// A wide W^ε (N₁ < N_x) is not norm preserving and discards the component
/// of x outside its row space, so for that shape x is first projected onto
/// the row space (x ← WᵀWx); there W acts isometrically.
pub fn check_angle_preservation(n1: usize, nx: usize, eps: f64, x: &Vector) -> Result<PropReport> {
    let w = w_epsilon(n1, nx, eps)?;
    let projected;
    let x = if n1 < nx {
        projected = w.transpose().mul_vec(&w.mul_vec(x)?)?;
        &projected
    } else {
        x
    };
    let st = signal_propagate(&w, x)?;
    Ok(PropReport::new("angle_preservation", (st.cos_out - st.cos_in).abs(), 0.01)
        .with("n1", n1)
        .with("nx", nx)
        .with("eps", eps)
        .with("projected", n1 < nx))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalStats {
    pub positive_fraction: f64,
    pub mean_in: f64,
    pub mean_out: f64,
    pub cos_in: f64,
    pub cos_out: f64,
}

fn cos_with_ones(v: &Vector) -> f64 {
    let len = v.norm();
    if len == 0.0 {
        0.0
    } else {
        (v.sum() / (len * (v.dim() as f64).sqrt())).clamp(-1.0, 1.0)
    }
}

/// Statistics of x and y = Wx: means, cosines with the all-ones vector,
/// and the fraction of strictly positive entries of y.
pub fn signal_propagate(w: &Matrix, x: &Vector) -> Result<SignalStats> {
    let y = w.mul_vec(x)?;
    let positive = y.as_slice().iter().filter(|&&v| v > 0.0).count();
    Ok(SignalStats {
        positive_fraction: positive as f64 / y.dim() as f64,
        mean_in: x.mean(),
        mean_out: y.mean(),
        cos_in: cos_with_ones(x),
        cos_out: cos_with_ones(&y),
    })
}

pub const SIGNAL_ROWS: usize = 200;
pub const SIGNAL_COLS: usize = 100;
pub const SIGNAL_TRIALS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalMatrix {
    Proposed,
    Gaussian,
    Orthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDistribution {
    /// N(0.5, 0.25²)
    Normal,
    /// U[0, 1]
    Uniform,
}

impl InputDistribution {
    pub fn sample(self, dim: usize, rng: &mut RngStream) -> Vector {
        Vector::from(
            (0..dim)
                .map(|_| match self {
                    InputDistribution::Normal => rng.normal(0.5, 0.25),
                    InputDistribution::Uniform => rng.uniform(),
                })
                .collect::<Vec<_>>(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalRow {
    pub matrix: SignalMatrix,
    pub distribution: InputDistribution,
    pub trial: usize,
    pub stats: SignalStats,
}

/// 3 matrices (W^ε, N(0, 0.1²), random orthogonal; all 200×100) ×
/// 2 input distributions × 25 trials. Every matrix sees the same inputs.
pub fn run_figure1(eps: f64, seed: u64) -> Result<Vec<SignalRow>> {
    let (m, n) = (SIGNAL_ROWS, SIGNAL_COLS);
    let mut grng = RngStream::derive(seed, &[1]);
    let matrices = [
        (SignalMatrix::Proposed, w_epsilon(m, n, eps)?),
        (
            SignalMatrix::Gaussian,
            Matrix::from_fn(m, n, |_, _| grng.normal(0.0, 0.1)),
        ),
        (
            SignalMatrix::Orthogonal,
            random_orthogonal(m, n, &mut RngStream::derive(seed, &[2]))?,
        ),
    ];
    let mut rows = Vec::with_capacity(3 * 2 * SIGNAL_TRIALS);
    for (d_idx, dist) in [InputDistribution::Normal, InputDistribution::Uniform].into_iter().enumerate() {
        for trial in 0..SIGNAL_TRIALS {
            let x = dist.sample(n, &mut RngStream::derive(seed, &[3, d_idx as u64, trial as u64]));
            for (kind, w) in &matrices {
                rows.push(SignalRow {
                    matrix: *kind,
                    distribution: dist,
                    trial,
                    stats: signal_propagate(w, &x)?,
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.matrix, r.distribution, r.trial));
    Ok(rows)
}

/// CSV with header
/// `matrix,distribution,trial,positive_fraction,mean_in,mean_out,cos_in,cos_out`.
pub fn signal_rows_to_csv(rows: &[SignalRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "matrix",
        "distribution",
        "trial",
        "positive_fraction",
        "mean_in",
        "mean_out",
        "cos_in",
        "cos_out",
    ])
    .expect("in-memory write");
    for r in rows {
        let s = &r.stats;
        w.serialize((
            r.matrix,
            r.distribution,
            r.trial,
            s.positive_fraction,
            s.mean_in,
            s.mean_out,
            s.cos_in,
            s.cos_out,
        ))
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn signal_stats_to_csv(stats: &[SignalStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in stats {
        w.serialize(s).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Parameters for [`verify_all`].
#[derive(Debug, Clone)]
pub struct VerifyGrid {
    /// Dimensions for W^ε checks (all pairs m, n).
    pub dims: Vec<usize>,
    pub eps: Vec<f64>,
    /// Sizes for the Q^ε column-sum checks.
    pub q_dims: Vec<usize>,
    pub q_eps: Vec<f64>,
    pub compositions: Vec<(usize, usize, usize)>,
    /// (N₁, N_x) shapes for the signal checks.
    pub signal_shapes: Vec<(usize, usize)>,
    pub seed: u64,
}

impl Default for VerifyGrid {
    fn default() -> Self {
        Self {
            dims: vec![1, 2, 3, 5, 8, 16, 64, 200],
            eps: vec![1e-4, 0.1],
            q_dims: (2..=64).collect(),
            q_eps: vec![1e-4, 1e-2, 0.1],
            compositions: vec![(10, 10, 6), (6, 10, 6), (20, 40, 20)],
            signal_shapes: vec![(200, 100), (100, 200), (50, 50)],
            seed: 0,
        }
    }
}

/// Runs every property check over the grid.
pub fn verify_all(grid: &VerifyGrid) -> Result<Vec<PropReport>> {
    let mut out = Vec::new();
    for &eps in &grid.eps {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::input(format!("eps must be positive, got {eps}")));
        }
        for &m in &grid.dims {
            for &n in &grid.dims {
                let w = w_epsilon(m, n, eps)?;
                out.push(check_orthogonality(&w).with("eps", eps));
                out.push(check_transpose_identity(m, n, eps)?);
                out.push(check_w_sum_constancy(m, n, eps)?);
            }
            out.push(check_a_column_angle(m, eps)?);
        }
        for &(p, k, n) in &grid.compositions {
            out.push(check_composition(p, k, n, eps)?);
        }
    }
    for &eps in &grid.q_eps {
        for &m in &grid.q_dims {
            out.push(check_q_column_sums(m, eps)?);
        }
    }
    for (t, &(n1, nx)) in grid.signal_shapes.iter().enumerate() {
        let x = InputDistribution::Uniform.sample(nx, &mut RngStream::derive(grid.seed, &[t as u64]));
        for &eps in &grid.eps {
            if eps <= 0.1 {
                out.push(check_mean_preservation(n1, nx, eps, &x)?.with("seed", grid.seed));
            }
        }
        out.push(check_angle_preservation(n1, nx, 1e-3, &x)?.with("seed", grid.seed));
    }
    Ok(out)
}
