use super::{sym_eig, DenseMatrix, SymmetricOperator};
use crate::error::{FlexError, Result};

/// Columns `f(e_j)` for `j = 0..n`.
pub fn materialize(n: usize, f: &dyn Fn(&[f64]) -> Vec<f64>) -> DenseMatrix {
    let mut e = vec![0.0; n];
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            e[j] = 1.0;
            let c = f(&e);
            e[j] = 0.0;
            c
        })
        .collect();
    DenseMatrix::from_columns(&cols)
}

/// Spectral condition number of `B⁻¹A` given the action of `B⁻¹`.
///
/// `B⁻¹A` is self-adjoint in the A-inner product. With `A = L Lᵀ` it is
/// similar to the symmetric `Lᵀ B⁻¹ L`, whose extreme eigenvalues are taken.
pub fn generalized_condition(a: &dyn SymmetricOperator, binv: &dyn Fn(&[f64]) -> Vec<f64>) -> Result<f64> {
    let n = a.dim();
    let a_dense = a
        .dense_view()
        .ok_or_else(|| FlexError::invalid(format!("dimension {n} too large for a dense audit")))?;
    let l = a_dense.cholesky()?.lower().clone();
    let b = materialize(n, binv);
    let asym = b.asymmetry();
    if asym > 1e-8 {
        return Err(FlexError::NotSymmetric(asym));
    }
    let pencil = l.transpose().matmul(&b.symmetrized())?.matmul(&l)?.symmetrized();
    let eig = sym_eig(&pencil)?;
    if eig.min() <= 0.0 {
        return Err(FlexError::Indefinite(eig.min()));
    }
    Ok(eig.condition())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseOperator, DiagonalOperator, Laplacian1d};

    #[test]
    fn exact_inverse_is_one() {
        let a = Laplacian1d::new(12).unwrap();
        let chol = a.dense_view().unwrap().cholesky().unwrap();
        let k = generalized_condition(&a, &|r| chol.solve(r)).unwrap();
        assert!((k - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_on_diag() {
        let a = DiagonalOperator::new(vec![1.0, 2.0]).unwrap();
        let k = generalized_condition(&a, &|r| r.to_vec()).unwrap();
        assert!((k - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_on_laplacian_is_kappa_a() {
        let a = Laplacian1d::new(20).unwrap();
        let ev = a.eigenvalues();
        let k = generalized_condition(&a, &|r| r.to_vec()).unwrap();
        assert!((k / (ev[19] / ev[0]) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn indefinite_reported() {
        let a = DenseOperator::new(DenseMatrix::identity(2)).unwrap();
        let r = generalized_condition(&a, &|r| vec![r[0], -r[1]]);
        assert!(matches!(r, Err(FlexError::Indefinite(_))));
    }
}
