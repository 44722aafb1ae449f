//! Gauss–Hermite rules for the standard normal law.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights integrating polynomials of degree `< 2q` exactly
/// against the standard normal density. Weights sum to 1.
pub fn gauss_hermite(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    // Golub–Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    let jacobi = DMatrix::from_fn(q, q, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_standard_normal() {
        let (x, w) = gauss_hermite(5);
        let m = |k: i32| x.iter().zip(&w).map(|(a, b)| b * a.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(1).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-13);
        assert!((m(4) - 3.0).abs() < 1e-12);
        assert!((m(6) - 15.0).abs() < 1e-11);
        assert!((m(8) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn three_point_rule() {
        let (x, w) = gauss_hermite(3);
        assert!((x[2] - 3f64.sqrt()).abs() < 1e-13);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-13);
    }
}
