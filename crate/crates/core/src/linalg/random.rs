//! Random test matrices with controlled spectra.

use rand::Rng;

use super::{dot, norm, DenseMatrix};
use crate::rng::normal_vector;

/// Orthogonal matrix from Gram-Schmidt (applied twice) on a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = normal_vector(rng, n);
        for _ in 0..2 {
            for q in &cols {
                let c = dot(q, &v);
                super::axpy(-c, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            super::scale(1.0 / nv, &mut v);
            cols.push(v);
        }
    }
    DenseMatrix::from_columns(&cols)
}

/// `Q diag(λ) Qᵀ` with `λ` drawn uniformly from `[1, kappa]`, endpoints
/// included so the condition number is exactly `kappa` when `n >= 2`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, kappa: f64) -> (DenseMatrix, Vec<f64>) {
    let q = random_orthogonal(rng, n);
    let mut lambda: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=kappa)).collect();
    if n >= 2 {
        lambda[0] = 1.0;
        lambda[n - 1] = kappa;
    }
    let ql = DenseMatrix::from_fn(n, n, |i, j| q[(i, j)] * lambda[j]);
    let m = ql.matmul(&q.transpose()).expect("square").symmetrized();
    (m, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use crate::rng;

    #[test]
    fn spd_has_requested_condition() {
        let mut r = rng::stream(3, 0);
        let (m, _) = random_spd(&mut r, 7, 5.0);
        let e = sym_eig(&m).unwrap();
        assert!((e.condition() - 5.0).abs() < 1e-10);
    }
}
