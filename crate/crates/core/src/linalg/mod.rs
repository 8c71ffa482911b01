//! Dense and structured real linear algebra used by the solvers and audits.
//!
//! Vectors are plain `[f64]` slices. Operators implement
//! [`SymmetricOperator`]; inner products and angles are taken with respect to
//! a [`Metric`], which is either Euclidean or induced by an SPD operator.

mod condition;
mod dense;
mod eig;
mod operator;
mod random;

pub use condition::{generalized_condition, materialize};
pub use dense::{Cholesky, DenseMatrix};
pub use eig::{sym_eig, SymEig};
pub use random::{random_orthogonal, random_spd};
pub use operator::{
    DenseOperator, DiagonalOperator, Laplacian1d, OperatorKind, SymmetricOperator,
    DENSE_VIEW_LIMIT,
};

use crate::error::{check_dim, FlexError, Result};

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub fn scale(a: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= a);
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Inner product geometry: `(x, y)_M = (x, M y)`.
#[derive(Clone, Copy)]
pub enum Metric<'a> {
    Euclidean,
    Operator(&'a dyn SymmetricOperator),
}

impl<'a> Metric<'a> {
    pub fn induced(op: &'a dyn SymmetricOperator) -> Self {
        Metric::Operator(op)
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Metric::Euclidean => None,
            Metric::Operator(op) => Some(op.dim()),
        }
    }

    /// `M x`, or a copy of `x` for the Euclidean metric.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Metric::Euclidean => x.to_vec(),
            Metric::Operator(op) => op.apply(x),
        }
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        weighted_inner(*self, x, y)
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0).sqrt())
    }
}

impl std::fmt::Debug for Metric<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Euclidean => write!(f, "Euclidean"),
            Metric::Operator(op) => write!(f, "Operator({:?}, n={})", op.kind(), op.dim()),
        }
    }
}

pub fn weighted_inner(metric: Metric<'_>, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    match metric {
        Metric::Euclidean => Ok(dot(x, y)),
        Metric::Operator(op) => {
            check_dim(op.dim(), x.len())?;
            Ok(dot(x, &op.apply(y)))
        }
    }
}

/// Cosine of the metric angle between two nonzero vectors, clamped to `[-1, 1]`.
pub fn cos_angle(metric: Metric<'_>, x: &[f64], y: &[f64]) -> Result<f64> {
    let xy = weighted_inner(metric, x, y)?;
    let xx = weighted_inner(metric, x, x)?;
    let yy = weighted_inner(metric, y, y)?;
    if xx <= 0.0 || yy <= 0.0 {
        return Err(FlexError::invalid("angle is undefined for a zero vector"));
    }
    Ok((xy / (xx.sqrt() * yy.sqrt())).clamp(-1.0, 1.0))
}

/// Angle in `[0, pi]` between `x` and `y` in the given metric.
///
/// Uses `atan2` of the projection-based sine and the clamped cosine, which
/// matches `acos` of the clamped cosine but keeps full accuracy near 0 and pi.
pub fn angle(metric: Metric<'_>, x: &[f64], y: &[f64]) -> Result<f64> {
    let c = cos_angle(metric, x, y)?;
    let s = sin_angle(metric, x, y)?;
    Ok(s.atan2(c))
}

/// Sine of the metric angle, computed from the distance of `x` to its
/// projection onto `span{y}`. Unlike `sin(acos(c))` this stays accurate for
/// nearly parallel vectors.
pub fn sin_angle(metric: Metric<'_>, x: &[f64], y: &[f64]) -> Result<f64> {
    let xy = weighted_inner(metric, x, y)?;
    let xx = weighted_inner(metric, x, x)?;
    let yy = weighted_inner(metric, y, y)?;
    if xx <= 0.0 || yy <= 0.0 {
        return Err(FlexError::invalid("angle is undefined for a zero vector"));
    }
    let mut resid = x.to_vec();
    axpy(-xy / yy, y, &mut resid);
    let rr = weighted_inner(metric, &resid, &resid)?.max(0.0);
    Ok((rr / xx).sqrt().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn weighted_inner_examples() {
        assert_eq!(weighted_inner(Metric::Euclidean, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let m = DiagonalOperator::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(weighted_inner(Metric::induced(&m), &[1.0, 1.0], &[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(weighted_inner(Metric::Euclidean, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn weighted_inner_rejects_mismatch() {
        assert!(matches!(
            weighted_inner(Metric::Euclidean, &[1.0], &[1.0, 2.0]),
            Err(FlexError::DimensionMismatch { .. })
        ));
        let m = DiagonalOperator::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(weighted_inner(Metric::induced(&m), &[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn angle_examples() {
        let e = Metric::Euclidean;
        assert!((angle(e, &[1.0, 0.0], &[0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(angle(e, &[3.0, 7.0], &[3.0, 7.0]).unwrap(), 0.0);
        assert!((angle(e, &[1.0, 0.0], &[1.0, 1.0]).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!(angle(e, &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn angle_scale_invariance() {
        let mut rng = rng::stream(11, 0);
        let a = DiagonalOperator::new((1..=6).map(f64::from).collect()).unwrap();
        for trial in 0..1000 {
            let x = rng::normal_vector(&mut rng, 6);
            let y = rng::normal_vector(&mut rng, 6);
            let sx: f64 = rng.random_range(0.01..100.0);
            let sy: f64 = rng.random_range(0.01..100.0);
            let xs: Vec<f64> = x.iter().map(|v| v * sx).collect();
            let ys: Vec<f64> = y.iter().map(|v| v * sy).collect();
            let metric = if trial % 2 == 0 { Metric::Euclidean } else { Metric::induced(&a) };
            let d = angle(metric, &x, &y).unwrap() - angle(metric, &xs, &ys).unwrap();
            assert!(d.abs() <= 1e-12, "trial {trial}: {d}");
        }
    }

    #[test]
    fn metric_norm_positive() {
        let mut rng = rng::stream(12, 0);
        let a = Laplacian1d::new(9).unwrap();
        for _ in 0..100 {
            let x = rng::normal_vector(&mut rng, 9);
            assert!(weighted_inner(Metric::induced(&a), &x, &x).unwrap() > 0.0);
            assert!(weighted_inner(Metric::Euclidean, &x, &x).unwrap() > 0.0);
        }
    }

    #[test]
    fn sin_angle_matches_acos_route() {
        let s = sin_angle(Metric::Euclidean, &[1.0, 0.0], &[3.0, 1.0]).unwrap();
        assert!((s - 1.0 / 10f64.sqrt()).abs() < 1e-15);
    }
}
