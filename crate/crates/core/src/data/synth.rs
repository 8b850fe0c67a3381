use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::rng::RngStream;

/// Two unit-variance Gaussian blobs centred at ±margin·u for a random unit
/// direction u. The component along u is truncated to (−margin, margin)
/// around each centre, so the classes are strictly separated by the
/// hyperplane u·x = 0. Rows alternate between class 0 and class 1.
pub fn synth_separable(n: usize, dim: usize, margin: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || dim == 0 {
        return Err(Error::input(format!("synth_separable needs n, dim >= 1, got n={n} dim={dim}")));
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::input(format!("margin must be positive, got {margin}")));
    }
    let mut rng = RngStream::new(seed);
    let mut u: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let len = norm(&u);
    u.iter_mut().for_each(|v| *v /= len);

    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let sign = if class == 0 { -1.0 } else { 1.0 };
        let mut x: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let along: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum();
        let mut t = rng.standard_normal();
        while t.abs() >= margin {
            t = rng.standard_normal();
        }
        // replace the component along u with the truncated draw plus the centre
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi += (sign * margin + t - along) * ui;
        }
        data.extend(x);
        labels.push(class);
    }
    Dataset::new(Matrix::new(n, dim, data)?, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty() {
        assert!(synth_separable(0, 3, 1.0, 0).is_err());
        assert!(synth_separable(3, 0, 1.0, 0).is_err());
        assert!(synth_separable(3, 2, 0.0, 0).is_err());
    }

    #[test]
    fn reproducible() {
        assert_eq!(synth_separable(20, 3, 2.0, 5).unwrap(), synth_separable(20, 3, 2.0, 5).unwrap());
        assert_ne!(synth_separable(20, 3, 2.0, 5).unwrap(), synth_separable(20, 3, 2.0, 6).unwrap());
    }

    #[test]
    fn two_balanced_classes() {
        let d = synth_separable(11, 4, 5.0, 1).unwrap();
        assert_eq!(d.class_counts(&d.split().train), vec![6, 5]);
        assert_eq!(d.features().shape(), (11, 4));
    }
}
