use super::{ApplyMeta, PrecondContext, Preconditioned, Preconditioner};
use crate::error::{FlexError, Result};
use crate::linalg::{axpy, dot, norm, sub};

/// Inexact `A⁻¹`: unpreconditioned CG on `A s = r` from `s = 0`, stopped at
/// the first iterate with `‖r - A s‖ < η ‖r‖`. The residual tested is always
/// recomputed from scratch.
#[derive(Clone, Debug)]
pub struct InnerCg {
    eta: f64,
    max_inner: Option<usize>,
}

impl InnerCg {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(FlexError::invalid(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(InnerCg { eta, max_inner: None })
    }

    /// Overrides the default cap of `10 n` inner steps.
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.max_inner = Some(cap);
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Preconditioner for InnerCg {
    fn label(&self) -> String {
        format!("inner-cg(eta={})", self.eta)
    }

    fn apply(&mut self, r: &[f64], ctx: &PrecondContext<'_>) -> Result<Preconditioned> {
        let a = ctx.operator;
        let n = r.len();
        let cap = self.max_inner.unwrap_or(10 * n);
        let target = self.eta * norm(r);
        let mut s = vec![0.0; n];
        if target == 0.0 {
            return Ok(Preconditioned { s, meta: ApplyMeta { inner_iterations: Some(0), ..Default::default() } });
        }
        let mut res = r.to_vec();
        let mut p = res.clone();
        let mut rr = dot(&res, &res);
        for it in 1..=cap {
            let ap = a.apply(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(FlexError::Breakdown { step: it, what: "inner CG curvature" });
            }
            let alpha = rr / pap;
            axpy(alpha, &p, &mut s);
            axpy(-alpha, &ap, &mut res);
            let true_res = sub(r, &a.apply(&s));
            if norm(&true_res) < target {
                return Ok(Preconditioned {
                    s,
                    meta: ApplyMeta { inner_iterations: Some(it), ..Default::default() },
                });
            }
            let rr_next = dot(&res, &res);
            let beta = rr_next / rr;
            rr = rr_next;
            for (pi, ri) in p.iter_mut().zip(&res) {
                *pi = ri + beta * *pi;
            }
        }
        Err(FlexError::InnerIterationCap(cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DiagonalOperator, Laplacian1d, SymmetricOperator};
    use crate::rng;

    fn ctx(a: &dyn SymmetricOperator) -> PrecondContext<'_> {
        PrecondContext { step: 0, operator: a, directions: &[], error: None }
    }

    #[test]
    fn rejects_eta_outside_unit_interval() {
        assert!(InnerCg::new(0.0).is_err());
        assert!(InnerCg::new(1.0).is_err());
    }

    #[test]
    fn loose_eta_takes_one_step() {
        // One CG step from zero: s = (r,r)/(r,Ar) r, which is the exact
        // minimizer along r; check against that closed form.
        let a = DiagonalOperator::new((1..=100).map(f64::from).collect()).unwrap();
        let r = rng::normal_vector(&mut rng::stream(3, 0), 100);
        let out = InnerCg::new(0.999).unwrap().apply(&r, &ctx(&a)).unwrap();
        assert_eq!(out.meta.inner_iterations, Some(1));
        let t = dot(&r, &r) / dot(&r, &a.apply(&r));
        for (si, ri) in out.s.iter().zip(&r) {
            assert!((si - t * ri).abs() < 1e-14 * ri.abs().max(1.0));
        }
    }

    #[test]
    fn returned_residual_meets_eta() {
        let a = Laplacian1d::new(200).unwrap();
        let r = rng::normal_vector(&mut rng::stream(3, 1), 200);
        for eta in [0.2, 0.4, 0.6, 0.8, 1e-10] {
            let out = InnerCg::new(eta).unwrap().apply(&r, &ctx(&a)).unwrap();
            assert!(norm(&sub(&r, &a.apply(&out.s))) < eta * norm(&r));
        }
    }

    #[test]
    fn cap_is_reported() {
        let a = Laplacian1d::new(200).unwrap();
        let r = rng::normal_vector(&mut rng::stream(3, 2), 200);
        let err = InnerCg::new(1e-12).unwrap().with_cap(3).apply(&r, &ctx(&a)).unwrap_err();
        assert!(matches!(err, FlexError::InnerIterationCap(3)));
    }

    #[test]
    fn zero_input_gives_zero() {
        let a = Laplacian1d::new(5).unwrap();
        let out = InnerCg::new(0.5).unwrap().apply(&[0.0; 5], &ctx(&a)).unwrap();
        assert_eq!(out.s, vec![0.0; 5]);
    }
}
