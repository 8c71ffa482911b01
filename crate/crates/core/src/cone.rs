//! Cones of SPD images.
//!
//! For a fixed nonzero `x`, the vectors `C x` with `C` SPD and
//! `κ(C) <= κ_max` are exactly the vectors whose angle to `x` has sine at most
//! `(κ_max - 1)/(κ_max + 1)`. This module builds the map realizing a given
//! point of that cone and tests membership. Everything is parametrized by a
//! [`Metric`] so the same code serves the A-inner product.

use crate::error::{FlexError, Result};
use crate::linalg::{axpy, sym_eig, weighted_inner, DenseMatrix, Metric};

/// Slack used when classifying points on the cone boundary.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// `(κ_max - 1)/(κ_max + 1)`, the worst per-step A-norm error reduction of
/// preconditioned steepest descent.
pub fn spectral_bound(kappa_max: f64) -> Result<f64> {
    if !(kappa_max >= 1.0) || !kappa_max.is_finite() {
        return Err(FlexError::invalid(format!("kappa_max must be a finite value >= 1, got {kappa_max}")));
    }
    Ok((kappa_max - 1.0) / (kappa_max + 1.0))
}

/// Inverse of [`spectral_bound`]: `(1 + s)/(1 - s)`.
pub fn kappa_from_sin(s: f64) -> f64 {
    (1.0 + s) / (1.0 - s)
}

/// An SPD map `C` (self-adjoint in its metric) with `C x ∥ y`.
#[derive(Clone, Debug)]
pub struct SpdMap {
    pub matrix: DenseMatrix,
    pub achieved_sin: f64,
    pub kappa: f64,
}

impl SpdMap {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.matrix.matvec(z)
    }
}

struct Geometry {
    xy: f64,
    xx: f64,
    yy: f64,
}

fn geometry(metric: Metric<'_>, x: &[f64], y: &[f64]) -> Result<Geometry> {
    let xy = weighted_inner(metric, x, y)?;
    let xx = weighted_inner(metric, x, x)?;
    let yy = weighted_inner(metric, y, y)?;
    if !(xx > 0.0) || !(yy > 0.0) {
        return Err(FlexError::invalid("cone operations need nonzero vectors"));
    }
    Ok(Geometry { xy, xx, yy })
}

/// Builds `C = I + (sin α) H` with `H` a metric Householder reflection so that
/// `C x` is the metric projection of `x` onto `span{y}`.
///
/// Fails unless the metric angle between `x` and `y` lies in `[0, π/2)`.
pub fn construct_spd_map(metric: Metric<'_>, x: &[f64], y: &[f64]) -> Result<SpdMap> {
    let n = x.len();
    let g = geometry(metric, x, y)?;
    if !(g.xy > 0.0) {
        return Err(FlexError::invalid(
            "y is outside the open half-space around x (angle >= pi/2)",
        ));
    }
    // y rescaled to the projection of x onto span{y}
    let t = g.xy / g.yy;
    let u: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| t * yi - xi).collect();
    let uu = weighted_inner(metric, &u, &u)?.max(0.0);
    let sin = (uu / g.xx).sqrt().min(1.0);
    if sin >= 1.0 {
        return Err(FlexError::invalid("angle is numerically pi/2"));
    }

    let identity = || SpdMap { matrix: DenseMatrix::identity(n), achieved_sin: 0.0, kappa: 1.0 };
    if sin == 0.0 {
        return Ok(identity());
    }
    // H maps v = (sin α) x onto u; both have metric length (sin α)‖x‖.
    let mut w: Vec<f64> = x.iter().map(|xi| sin * xi).collect();
    axpy(-1.0, &u, &mut w);
    let ww = weighted_inner(metric, &w, &w)?;
    if !(ww > 0.0) {
        return Ok(identity());
    }
    let wn = ww.sqrt();
    w.iter_mut().for_each(|v| *v /= wn);
    let mw = metric.apply(&w);

    // C = (1 + s) I - 2 s w (M w)ᵀ
    let matrix = DenseMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { 1.0 + sin } else { 0.0 };
        diag - 2.0 * sin * w[i] * mw[j]
    });
    Ok(SpdMap { matrix, achieved_sin: sin, kappa: kappa_from_sin(sin) })
}

/// Whether `y` lies in the cone of SPD images of `x` with `κ <= kappa_max`.
pub fn cone_membership(metric: Metric<'_>, x: &[f64], y: &[f64], kappa_max: f64) -> Result<bool> {
    let bound = spectral_bound(kappa_max)?;
    let g = geometry(metric, x, y)?;
    if !(g.xy > 0.0) {
        return Ok(false);
    }
    let sin = crate::linalg::sin_angle(metric, x, y)?;
    Ok(sin <= bound + BOUNDARY_SLACK)
}

/// Eigenvalues (ascending) of a matrix self-adjoint in `metric`, via the
/// symmetric similarity transform `Lᵀ C L⁻ᵀ` where `M = L Lᵀ`.
pub fn metric_eigenvalues(metric: Metric<'_>, c: &DenseMatrix) -> Result<Vec<f64>> {
    let sym = match metric {
        Metric::Euclidean => c.symmetrized(),
        Metric::Operator(op) => {
            let m = op
                .dense_view()
                .ok_or_else(|| FlexError::invalid("metric too large to materialize"))?;
            let chol = m.cholesky()?;
            let n = c.rows();
            let mut e = vec![0.0; n];
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    e[j] = 1.0;
                    let z = chol.solve_upper(&e);
                    e[j] = 0.0;
                    let cz = c.matvec(&z);
                    chol.lower().transpose().matvec(&cz)
                })
                .collect();
            DenseMatrix::from_columns(&cols).symmetrized()
        }
    };
    Ok(sym_eig(&sym)?.values)
}
