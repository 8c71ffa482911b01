use super::{AOrthoBasis, ApplyMeta, PrecondContext, Preconditioned, Preconditioner};
use crate::cone::{construct_spd_map, kappa_from_sin, spectral_bound, SpdMap};
use crate::error::{FlexError, Result};
use crate::linalg::{axpy, dot, DenseMatrix, Metric, SymmetricOperator};
use crate::rng::{normal_vector, SolverRng};

const MAX_REDRAWS: usize = 8;

/// Worst-case variable preconditioner.
///
/// At step `k` it returns `s_k = cos θ e_k + sin θ ‖e_k‖_A û`, on the
/// boundary of the A-cone around `e_k` with half-opening
/// `sin θ = (κ_max - 1)/(κ_max + 1)`, where `û` is a random A-unit vector
/// A-orthogonal to `e_k` and to every earlier search direction. Such an `s_k` equals
/// `B_k⁻¹ A e_k` for an SPD `B_k` with `κ(B_k⁻¹ A) = κ_max`, and any
/// orthogonalization against old directions leaves it unchanged, so every
/// method in the family degenerates to steepest descent at the worst rate.
///
/// Needs `e_k` in the context, i.e. a problem with a known solution.
pub struct Adversarial {
    kappa_max: f64,
    sin_theta: f64,
    rng: SolverRng,
    basis: AOrthoBasis,
}

impl Adversarial {
    pub fn new(kappa_max: f64, rng: SolverRng) -> Result<Self> {
        if !(kappa_max > 1.0) {
            return Err(FlexError::invalid("adversarial preconditioner needs kappa_max > 1"));
        }
        let sin_theta = spectral_bound(kappa_max)?;
        Ok(Adversarial { kappa_max, sin_theta, rng, basis: AOrthoBasis::default() })
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    fn draw_orthogonal(&mut self, a: &dyn SymmetricOperator, e_hat: &[f64], n: usize) -> Result<Vec<f64>> {
        let ae_hat = a.apply(e_hat);
        for _ in 0..MAX_REDRAWS {
            let mut u = normal_vector(&mut self.rng, n);
            let start = dot(&u, &a.apply(&u)).sqrt();
            for _ in 0..2 {
                self.basis.orthogonalize(&mut u);
                let c = dot(&u, &ae_hat);
                axpy(-c, e_hat, &mut u);
            }
            let uu = dot(&u, &a.apply(&u));
            if uu > 0.0 && uu.sqrt() > 1e-8 * start {
                let inv = 1.0 / uu.sqrt();
                u.iter_mut().for_each(|v| *v *= inv);
                return Ok(u);
            }
        }
        Err(FlexError::DegenerateDirection(MAX_REDRAWS))
    }
}

impl Preconditioner for Adversarial {
    fn label(&self) -> String {
        format!("adversarial(kappa={})", self.kappa_max)
    }

    fn apply(&mut self, _r: &[f64], ctx: &PrecondContext<'_>) -> Result<Preconditioned> {
        let e = ctx.error.ok_or(FlexError::MissingContext("adversarial preconditioner needs e_k"))?;
        let a = ctx.operator;
        let n = e.len();
        if ctx.step >= n {
            return Err(FlexError::DimensionExhausted { step: ctx.step, dim: n });
        }
        self.basis.sync(a, ctx.step, ctx.directions);

        let e_norm = dot(e, &a.apply(e)).sqrt();
        if !(e_norm > 0.0) {
            return Err(FlexError::invalid("adversarial preconditioner needs a nonzero error"));
        }
        let mut e_perp = e.to_vec();
        self.basis.orthogonalize(&mut e_perp);
        let perp_norm = dot(&e_perp, &a.apply(&e_perp)).max(0.0).sqrt();
        if !(perp_norm > 1e-12 * e_norm) {
            return Err(FlexError::DimensionExhausted { step: ctx.step, dim: n });
        }
        let perp_hat: Vec<f64> = e_perp.iter().map(|v| v / perp_norm).collect();
        let u_hat = self.draw_orthogonal(a, &perp_hat, n)?;

        // û is A-orthogonal to e_k and to every earlier direction. When e_k is
        // too, as for every method of the orthogonalizing family, so is s_k.
        let cos_theta = (1.0 - self.sin_theta * self.sin_theta).sqrt();
        let s: Vec<f64> = e
            .iter()
            .zip(&u_hat)
            .map(|(ei, uh)| cos_theta * ei + e_norm * self.sin_theta * uh)
            .collect();
        let achieved = crate::linalg::sin_angle(Metric::induced(a), e, &s)?;
        Ok(Preconditioned {
            s,
            meta: ApplyMeta { inner_iterations: None, kappa_estimate: Some(kappa_from_sin(achieved)) },
        })
    }
}

/// Materializes the SPD map behind one preconditioned step: `C` with
/// `C e ∥ s` self-adjoint in the A-inner product, and `B⁻¹ = C A⁻¹`, so that
/// `B⁻¹ A = C` and `κ(B⁻¹ A) = κ(C)`. Dense; meant for small audits.
pub fn materialize_step(a: &dyn SymmetricOperator, e: &[f64], s: &[f64]) -> Result<(SpdMap, DenseMatrix)> {
    let c = construct_spd_map(Metric::induced(a), e, s)?;
    let dense = a
        .dense_view()
        .ok_or_else(|| FlexError::invalid("operator too large to materialize"))?;
    let chol = dense.cholesky()?;
    let n = e.len();
    let mut unit = vec![0.0; n];
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            unit[j] = 1.0;
            let col = c.apply(&chol.solve(&unit));
            unit[j] = 0.0;
            col
        })
        .collect();
    Ok((c, DenseMatrix::from_columns(&cols).symmetrized()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{generalized_condition, sin_angle, Laplacian1d};
    use crate::rng;

    #[test]
    fn rejects_kappa_one() {
        assert!(Adversarial::new(1.0, rng::stream(0, 0)).is_err());
    }

    #[test]
    fn needs_error_in_context() {
        let a = Laplacian1d::new(4).unwrap();
        let mut p = Adversarial::new(2.0, rng::stream(0, 0)).unwrap();
        let ctx = PrecondContext { step: 0, operator: &a, directions: &[], error: None };
        assert!(matches!(p.apply(&[1.0; 4], &ctx), Err(FlexError::MissingContext(_))));
    }

    #[test]
    fn exhausts_dimension() {
        let a = Laplacian1d::new(3).unwrap();
        let mut p = Adversarial::new(2.0, rng::stream(0, 0)).unwrap();
        let e = [1.0, 0.0, 0.0];
        let dirs = vec![vec![0.0, 1.0, 0.0]; 3];
        let ctx = PrecondContext { step: 3, operator: &a, directions: &dirs, error: Some(&e) };
        assert!(matches!(p.apply(&[0.0; 3], &ctx), Err(FlexError::DimensionExhausted { .. })));
    }

    #[test]
    fn lands_on_cone_boundary_and_materializes() {
        let a = Laplacian1d::new(30).unwrap();
        let mut p = Adversarial::new(2.0, rng::stream(4, 0)).unwrap();
        let e = rng::normal_vector(&mut rng::stream(4, 1), 30);
        let ctx = PrecondContext { step: 0, operator: &a, directions: &[], error: Some(&e) };
        let out = p.apply(&a.apply(&e), &ctx).unwrap();
        let sin = sin_angle(Metric::induced(&a), &e, &out.s).unwrap();
        assert!((sin - 1.0 / 3.0).abs() < 1e-12);
        let (c, binv) = materialize_step(&a, &e, &out.s).unwrap();
        assert!((c.kappa - 2.0).abs() < 1e-10);
        let k = generalized_condition(&a, &|r: &[f64]| binv.matvec(r)).unwrap();
        assert!((k - 2.0).abs() < 1e-8, "{k}");
    }

    #[test]
    fn near_one_kappa_returns_error_direction() {
        let a = Laplacian1d::new(10).unwrap();
        let mut p = Adversarial::new(1.0 + 1e-12, rng::stream(5, 0)).unwrap();
        let e = rng::normal_vector(&mut rng::stream(5, 1), 10);
        let ctx = PrecondContext { step: 0, operator: &a, directions: &[], error: Some(&e) };
        let s = p.apply(&a.apply(&e), &ctx).unwrap().s;
        assert!(sin_angle(Metric::induced(&a), &e, &s).unwrap() < 1e-11);
    }
}
