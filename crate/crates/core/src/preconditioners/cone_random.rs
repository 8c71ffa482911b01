use rand::Rng;

use super::{ApplyMeta, PrecondContext, Preconditioned, Preconditioner};
use crate::cone::{kappa_from_sin, spectral_bound};
use crate::error::{FlexError, Result};
use crate::linalg::{axpy, dot, sin_angle, Metric};
use crate::rng::{normal_vector, SolverRng};

/// Random variable preconditioner whose action on `e_k` lands strictly inside
/// the A-cone of half-opening `arcsin((κ_max - 1)/(κ_max + 1))`: a random
/// A-orthogonal tilt `u` with `sin φ = bound · U(0, 1)`. Each step is thus
/// realized by some SPD `B_k` with `κ(B_k⁻¹ A) <= κ_max`.
///
/// Needs `e_k` in the context.
pub struct ConeRandom {
    kappa_max: f64,
    sin_theta: f64,
    rng: SolverRng,
}

impl ConeRandom {
    pub fn new(kappa_max: f64, rng: SolverRng) -> Result<Self> {
        if !(kappa_max >= 1.0) || !kappa_max.is_finite() {
            return Err(FlexError::invalid("kappa_max must be finite and at least 1"));
        }
        Ok(ConeRandom { kappa_max, sin_theta: spectral_bound(kappa_max)?, rng })
    }
}

impl Preconditioner for ConeRandom {
    fn label(&self) -> String {
        format!("cone-random(kappa={})", self.kappa_max)
    }

    fn apply(&mut self, _r: &[f64], ctx: &PrecondContext<'_>) -> Result<Preconditioned> {
        let e = ctx.error.ok_or(FlexError::MissingContext("cone-random preconditioner needs e_k"))?;
        let a = ctx.operator;
        let n = e.len();
        let ae = a.apply(e);
        let ee = dot(e, &ae);
        if !(ee > 0.0) {
            return Ok(Preconditioned::plain(vec![0.0; n]));
        }
        let e_norm = ee.sqrt();
        let sin_phi = self.sin_theta * self.rng.random::<f64>();
        let cos_phi = (1.0 - sin_phi * sin_phi).sqrt();

        let mut u = normal_vector(&mut self.rng, n);
        for _ in 0..2 {
            let c = dot(&u, &ae) / ee;
            axpy(-c, e, &mut u);
        }
        let uu = dot(&u, &a.apply(&u));
        let s: Vec<f64> = if uu > 0.0 && n > 1 {
            let w = e_norm * sin_phi / uu.sqrt();
            e.iter().zip(&u).map(|(ei, ui)| cos_phi * ei + w * ui).collect()
        } else {
            e.to_vec()
        };
        let achieved = sin_angle(Metric::induced(a), e, &s)?;
        Ok(Preconditioned {
            s,
            meta: ApplyMeta { inner_iterations: None, kappa_estimate: Some(kappa_from_sin(achieved)) },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::cone_membership;
    use crate::linalg::{DiagonalOperator, SymmetricOperator};
    use crate::rng;

    #[test]
    fn stays_inside_cone() {
        let a = DiagonalOperator::new((1..=40).map(f64::from).collect()).unwrap();
        let mut p = ConeRandom::new(4.0, rng::stream(1, 0)).unwrap();
        let mut g = rng::stream(1, 1);
        for _ in 0..50 {
            let e = normal_vector(&mut g, 40);
            let ctx = PrecondContext { step: 0, operator: &a, directions: &[], error: Some(&e) };
            let out = p.apply(&a.apply(&e), &ctx).unwrap();
            assert!(cone_membership(Metric::induced(&a), &e, &out.s, 4.0).unwrap());
            assert!(out.meta.kappa_estimate.unwrap() <= 4.0 + 1e-9);
        }
    }
}
