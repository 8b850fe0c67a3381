use crate::error::{Error, Result};
use crate::linalg::{hadamard, thin_qr, Matrix};
use crate::rng::RngStream;

/// −2√2/(3√π) + √(1 + 8/(9π)) ≈ 0.6007.
pub fn rai_std() -> f64 {
    let pi = std::f64::consts::PI;
    -2.0 * 2f64.sqrt() / (3.0 * pi.sqrt()) + (1.0 + 8.0 / (9.0 * pi)).sqrt()
}

fn gaussian(m: usize, n: usize, std: f64, rng: &mut RngStream) -> Matrix {
    Matrix::from_fn(m, n, |_, _| std * rng.standard_normal())
}

/// N(0, 2/(m+n)).
pub fn xavier(m: usize, n: usize, rng: &mut RngStream) -> Matrix {
    gaussian(m, n, (2.0 / (m + n) as f64).sqrt(), rng)
}

/// N(0, 2/n) with n the fan-in (number of columns).
pub fn he(m: usize, n: usize, rng: &mut RngStream) -> Matrix {
    gaussian(m, n, (2.0 / n as f64).sqrt(), rng)
}

pub fn identity(m: usize, n: usize) -> Matrix {
    Matrix::partial_identity(m, n)
}

/// Orthonormal columns (m >= n) or rows (m < n) from the QR of a Gaussian
/// matrix. R has a positive diagonal, so the result is Haar distributed.
pub fn random_orthogonal(m: usize, n: usize, rng: &mut RngStream) -> Result<Matrix> {
    if m >= n {
        Ok(thin_qr(&gaussian(m, n, 1.0, rng))?.q)
    } else {
        Ok(thin_qr(&gaussian(n, m, 1.0, rng))?.q.transpose())
    }
}

/// Partial identity when the layer does not expand, otherwise the leading
/// block of a scaled Hadamard matrix: c·H_p[:m, :n], p = ⌈log₂ m⌉,
/// c = 2^{−(p−1)/2}.
pub fn zero_init(m: usize, n: usize) -> Result<Matrix> {
    if m <= n {
        return Ok(Matrix::partial_identity(m, n));
    }
    let p = usize::BITS - (m - 1).leading_zeros();
    let h = hadamard(p).map_err(|_| {
        Error::input(format!("zero init: {m} rows needs a Hadamard matrix larger than supported"))
    })?;
    let c = 2f64.powf(-((p as f64) - 1.0) / 2.0);
    Ok(h.crop(m, n).scale(c))
}

/// Gaussian with std ≈ 0.6007, then one uniformly chosen entry per row
/// replaced by a Beta(2, 1) draw.
pub fn rai_init(m: usize, n: usize, rng: &mut RngStream) -> Matrix {
    let mut w = gaussian(m, n, rai_std(), rng);
    for i in 0..m {
        let j = rng.below(n);
        w[(i, j)] = rng.beta_2_1();
    }
    w
}

/// [[W₀, −W₀], [−W₀, W₀]] with W₀ He-initialized of shape ⌈m/2⌉ × ⌈n/2⌉,
/// cropped to m × n.
pub fn gsm_init(m: usize, n: usize, rng: &mut RngStream) -> Matrix {
    let (a, b) = (m.div_ceil(2), n.div_ceil(2));
    let w0 = he(a, b, rng);
    Matrix::from_fn(m, n, |i, j| {
        let v = w0[(i % a, j % b)];
        if (i >= a) == (j >= b) {
            v
        } else {
            -v
        }
    })
}
