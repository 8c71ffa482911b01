use super::{PrecondContext, Preconditioned, Preconditioner};
use crate::error::{check_dim, FlexError, Result};
use crate::linalg::SymmetricOperator;

type SolveFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A constant SPD preconditioner given by the action of `B⁻¹`. Ignores the
/// step context.
pub struct FixedSpd {
    label: String,
    solve: Box<SolveFn>,
}

impl FixedSpd {
    pub fn new(label: impl Into<String>, solve: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        FixedSpd { label: label.into(), solve: Box::new(solve) }
    }

    /// `B = I`.
    pub fn identity() -> Self {
        Self::new("identity", |r| r.to_vec())
    }

    /// `B = diag(A)`.
    pub fn jacobi(a: &dyn SymmetricOperator) -> Result<Self> {
        let d = a.diagonal();
        if d.iter().any(|&v| !(v > 0.0)) {
            return Err(FlexError::invalid("Jacobi preconditioner needs a positive diagonal"));
        }
        let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        Ok(Self::new("jacobi", move |r| r.iter().zip(&inv).map(|(x, w)| x * w).collect()))
    }

    /// `B = A`, by a dense Cholesky factorization.
    pub fn exact(a: &dyn SymmetricOperator) -> Result<Self> {
        let dense = a
            .dense_view()
            .ok_or_else(|| FlexError::invalid("operator too large for an exact dense preconditioner"))?;
        let chol = dense.cholesky()?;
        Ok(Self::new("exact", move |r| chol.solve(r)))
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        (self.solve)(r)
    }
}

impl Preconditioner for FixedSpd {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn apply(&mut self, r: &[f64], _ctx: &PrecondContext<'_>) -> Result<Preconditioned> {
        let s = (self.solve)(r);
        check_dim(r.len(), s.len())?;
        Ok(Preconditioned::plain(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DiagonalOperator, Laplacian1d};

    fn ctx(a: &dyn SymmetricOperator) -> PrecondContext<'_> {
        PrecondContext { step: 0, operator: a, directions: &[], error: None }
    }

    #[test]
    fn identity_passes_through() {
        let a = Laplacian1d::new(3).unwrap();
        let mut p = FixedSpd::identity();
        assert_eq!(p.apply(&[1.0, 2.0, 3.0], &ctx(&a)).unwrap().s, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_equals_exact_on_diagonal() {
        let a = DiagonalOperator::new((1..=50).map(f64::from).collect()).unwrap();
        let mut j = FixedSpd::jacobi(&a).unwrap();
        let mut e = FixedSpd::exact(&a).unwrap();
        let r: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let sj = j.apply(&r, &ctx(&a)).unwrap().s;
        let se = e.apply(&r, &ctx(&a)).unwrap().s;
        for (u, v) in sj.iter().zip(&se) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}
