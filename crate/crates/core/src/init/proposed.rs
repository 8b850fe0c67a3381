//! The ε-orthogonal initializer W^ε = Q^ε_m · I_{m×n} · (Q^ε_n)ᵀ.

use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt_qr, j_epsilon, Matrix};

pub const DEFAULT_EPS: f64 = 0.1;

/// Sign convention for the columns of Q^ε when assembling W^ε.
///
/// Gram-Schmidt yields R with a positive diagonal. A Householder QR (LAPACK,
/// NumPy) of J^ε instead returns R with diagonal signs (−, …, −, +), i.e. every
/// column of Q negated except the last. The worked examples of W^ε in the
/// literature were produced with the latter, so it is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnSigns {
    #[default]
    Householder,
    PositiveDiagonal,
}

fn validate(m: usize, eps: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::input("dimension must be at least 1"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::input(format!("eps must be a positive finite number, got {eps}")));
    }
    Ok(())
}

/// Q^ε via Gram-Schmidt on the explicit J^ε. O(m³); kept as a reference.
pub fn q_epsilon_naive(m: usize, eps: f64) -> Result<Matrix> {
    validate(m, eps)?;
    Ok(gram_schmidt_qr(&j_epsilon(m, eps)?)?.q)
}

/// Q^ε from the column recurrence, O(m²) in total.
pub fn q_epsilon_fast(m: usize, eps: f64) -> Result<Matrix> {
    validate(m, eps)?;
    // columns are produced a few at a time and scattered into row-major
    // storage, so Q is the only m × m allocation
    const BLOCK: usize = 8;
    let mut rec = ColumnRecurrence::new(m, eps);
    let mut q = vec![0.0; m * m];
    let mut block = vec![0.0; BLOCK * m];
    for j0 in (0..m).step_by(BLOCK) {
        let b = BLOCK.min(m - j0);
        for col in block.chunks_mut(m).take(b) {
            rec.next_into(col);
        }
        for (r, row) in q.chunks_mut(m).enumerate() {
            for (k, out) in row[j0..j0 + b].iter_mut().enumerate() {
                *out = block[k * m + r];
            }
        }
    }
    Matrix::new(m, m, q)
}

/// Successive normalized columns of Q^ε (positive-diagonal convention).
///
/// u₁ = 1 + εe₁ and u_j = f·u_{j−1} + ε(e_j − e_{j−1}). The textbook factor
/// f = 1 − ⟨u_{j−1}, a_j⟩/‖u_{j−1}‖² cancels catastrophically (f ≈ ε²/m at
/// j = 2), so it is evaluated through the equivalent form
/// f = ε(u_{j−1}[j−1] − u_{j−1}[j])/‖u_{j−1}‖², which uses ⟨u_{j−1}, a_{j−1}⟩ = ‖u_{j−1}‖².
struct ColumnRecurrence {
    u: Vec<f64>,
    sq: f64,
    eps: f64,
    j: usize,
}

impl ColumnRecurrence {
    fn new(m: usize, eps: f64) -> Self {
        let mut u = vec![1.0; m];
        u[0] += eps;
        let sq = u.iter().map(|v| v * v).sum();
        Self { u, sq, eps, j: 0 }
    }

    /// Writes column `j` (0-based) and advances.
    fn next_into(&mut self, out: &mut [f64]) {
        let (j, eps, u) = (self.j, self.eps, &mut self.u);
        if j > 0 {
            let f = eps * (u[j - 1] - u[j]) / self.sq;
            u.iter_mut().for_each(|v| *v *= f);
            u[j] += eps;
            u[j - 1] -= eps;
            self.sq = u.iter().map(|v| v * v).sum();
        }
        let len = self.sq.sqrt();
        for (o, v) in out.iter_mut().zip(u.iter()) {
            *o = v / len;
        }
        self.j += 1;
    }
}

/// First `count` columns of Q^ε as the rows of a `count × m` matrix.
pub(crate) fn q_columns(m: usize, eps: f64, count: usize) -> Matrix {
    let count = count.min(m);
    let mut rec = ColumnRecurrence::new(m, eps);
    let mut out = vec![0.0; count * m];
    for row in out.chunks_mut(m) {
        rec.next_into(row);
    }
    Matrix::new(count, m, out).expect("finite by construction")
}

/// W^ε_{m×n} with the default (Householder) column signs.
pub fn w_epsilon(m: usize, n: usize, eps: f64) -> Result<Matrix> {
    w_epsilon_with_signs(m, n, eps, ColumnSigns::default())
}

/// W^ε_{m×n} = Σ_{i<s} d_i q_i q̂_iᵀ with s = min(m, n).
///
/// With positive-diagonal signs every d_i is 1. With Householder signs the
/// sign products cancel except on the last term when m ≠ n, where d_s = −1.
pub fn w_epsilon_with_signs(m: usize, n: usize, eps: f64, signs: ColumnSigns) -> Result<Matrix> {
    validate(m, eps)?;
    validate(n, eps)?;
    if m == n {
        return Ok(Matrix::identity(m));
    }
    let s = m.min(n);
    let q = q_columns(m, eps, s);
    let q_hat = q_columns(n, eps, s);
    let mut w = Matrix::zeros(m, n);
    for i in 0..s {
        let d = if signs == ColumnSigns::Householder && i == s - 1 {
            -1.0
        } else {
            1.0
        };
        for (r, &qr) in q.row(i).iter().enumerate() {
            let a = d * qr;
            for (out, &qc) in w.row_mut(r).iter_mut().zip(q_hat.row(i)) {
                *out += a * qc;
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, norm};

    /// Closed form of the j-th column (0-based) of Q^ε: with
    /// D = ε² + (m + 2ε)·j, the unnormalized vector is
    /// (−(m+ε) repeated j times, ε + D, ε repeated m−j−1 times).
    fn closed_form_q(m: usize, eps: f64) -> Matrix {
        let mf = m as f64;
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                let d = eps * eps + (mf + 2.0 * eps) * j as f64;
                let mut v = vec![eps; m];
                v[..j].iter_mut().for_each(|x| *x = -(mf + eps));
                v[j] = eps + d;
                let len = norm(&v);
                v.into_iter().map(|x| x / len).collect()
            })
            .collect();
        Matrix::from_columns(&cols)
    }

    fn assert_close(got: &Matrix, want: &[&[f64]], tol: f64) {
        let want = Matrix::from_rows(&want.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        let diff = got.max_abs_diff(&want);
        assert!(diff <= tol, "diff {diff:e}\n{got:?}");
    }

    #[test]
    fn one_by_one() {
        assert_eq!(q_epsilon_fast(1, 0.3).unwrap().as_slice(), &[1.0]);
        assert_eq!(q_epsilon_naive(1, 0.3).unwrap().as_slice(), &[1.0]);
    }

    #[test]
    fn two_by_two_recurrence_by_hand() {
        let q = q_epsilon_fast(2, 1.0).unwrap();
        let s5 = 5f64.sqrt();
        assert!((q[(0, 1)] + 1.0 / s5).abs() < 1e-15);
        assert!((q[(1, 1)] - 2.0 / s5).abs() < 1e-15);
    }

    #[test]
    fn first_column_sum_m8() {
        let q = q_epsilon_fast(8, 1e-4).unwrap();
        let s: f64 = q.column(0).iter().sum();
        let want = (8.0 + 1e-4) / (1e-8_f64 + 2e-4 + 8.0).sqrt();
        assert!((s - want).abs() < 1e-12, "{s}");
        assert!((s - 2.828_427_1).abs() < 1e-7, "{s}");
        for j in 1..8 {
            let sj: f64 = q.column(j).iter().sum();
            assert!(sj.abs() <= 1e-4);
        }
    }

    #[test]
    fn fast_and_naive_match_closed_form() {
        for m in [2, 3, 7, 16, 50, 129] {
            for eps in [1e-4, 1e-2, 0.1, 1.0] {
                let exact = closed_form_q(m, eps);
                let fast = q_epsilon_fast(m, eps).unwrap();
                let naive = q_epsilon_naive(m, eps).unwrap();
                assert!(fast.max_abs_diff(&exact) < 1e-12, "fast m={m} eps={eps}");
                assert!(naive.max_abs_diff(&exact) < 1e-10, "naive m={m} eps={eps}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(q_epsilon_fast(0, 0.1).is_err());
        assert!(q_epsilon_fast(3, 0.0).is_err());
        assert!(w_epsilon(3, 0, 0.1).is_err());
        assert!(w_epsilon(3, 2, -0.1).is_err());
    }

    #[test]
    fn square_is_identity() {
        assert_eq!(w_epsilon(5, 5, 0.1).unwrap(), Matrix::identity(5));
    }

    #[test]
    fn worked_example_3x2() {
        let w = w_epsilon(3, 2, 0.01).unwrap();
        assert_close(
            &w,
            &[&[-0.0829, 0.9097], &[0.9081, -0.0993], &[0.4106, 0.4032]],
            1e-3,
        );
    }

    #[test]
    fn worked_example_4x3() {
        let w = w_epsilon(4, 3, 0.01).unwrap();
        assert_close(
            &w,
            &[
                &[0.6241, -0.3762, 0.6213],
                &[-0.3754, 0.6242, 0.6217],
                &[0.6213, 0.6209, -0.3816],
                &[0.2890, 0.2887, 0.2862],
            ],
            1e-3,
        );
    }

    #[test]
    fn worked_example_8x5() {
        let w = w_epsilon(8, 5, 1e-4).unwrap();
        let (a, b, c, d, g) = (0.8581, -0.1419, 0.3581, -0.6419, 0.1581);
        assert_close(
            &w,
            &[
                &[a, b, b, b, c],
                &[b, a, b, b, c],
                &[b, b, a, b, c],
                &[b, b, b, a, c],
                &[c, c, c, c, d],
                &[g, g, g, g, g],
                &[g, g, g, g, g],
                &[g, g, g, g, g],
            ],
            1e-3,
        );
    }

    #[test]
    fn householder_signs_match_explicit_sign_matrices() {
        // Q_m D_m I D_n Q_nᵀ with D = diag(−1, …, −1, +1)
        for (m, n) in [(3, 2), (2, 3), (6, 4), (1, 3), (4, 1)] {
            let eps = 0.05;
            let flip = |q: Matrix| {
                let k = q.cols();
                Matrix::from_fn(q.rows(), k, |i, j| if j + 1 == k { q[(i, j)] } else { -q[(i, j)] })
            };
            let qm = flip(q_epsilon_fast(m, eps).unwrap());
            let qn = flip(q_epsilon_fast(n, eps).unwrap());
            let want = matmul(&matmul(&qm, &Matrix::partial_identity(m, n)).unwrap(), &qn.transpose())
                .unwrap();
            let got = w_epsilon(m, n, eps).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-13, "({m},{n})");
        }
    }

    #[test]
    fn positive_diagonal_variant_is_q_i_qt() {
        let (m, n, eps) = (5, 3, 0.1);
        let qm = q_epsilon_naive(m, eps).unwrap();
        let qn = q_epsilon_naive(n, eps).unwrap();
        let want = matmul(&matmul(&qm, &Matrix::partial_identity(m, n)).unwrap(), &qn.transpose())
            .unwrap();
        let got = w_epsilon_with_signs(m, n, eps, ColumnSigns::PositiveDiagonal).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-12);
    }
}
