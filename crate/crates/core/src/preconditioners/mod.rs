//! Preconditioners `s_k = B_k⁻¹ r_k`, possibly changing from step to step.

mod adversarial;
mod cone_random;
mod fixed;
mod inner_cg;
mod two_grid;

pub use adversarial::{materialize_step, Adversarial};
pub use cone_random::ConeRandom;
pub use fixed::FixedSpd;
pub use inner_cg::InnerCg;
pub use two_grid::{
    build_two_grid, sample_coarse, two_grid_apply, CoarseMode, Interpolation, SmootherConfig,
    TwoGridHierarchy, TwoGridPreconditioner,
};

use crate::error::Result;
use crate::linalg::SymmetricOperator;

/// What a solver knows at step `k` when it asks for `s_k`.
pub struct PrecondContext<'a> {
    pub step: usize,
    pub operator: &'a dyn SymmetricOperator,
    /// Every search direction `p_0, ..., p_{k-1}` produced so far.
    pub directions: &'a [Vec<f64>],
    /// `e_k = x - x_k`, available only when the true solution is known.
    pub error: Option<&'a [f64]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ApplyMeta {
    pub inner_iterations: Option<usize>,
    pub kappa_estimate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Preconditioned {
    pub s: Vec<f64>,
    pub meta: ApplyMeta,
}

impl Preconditioned {
    pub fn plain(s: Vec<f64>) -> Self {
        Preconditioned { s, meta: ApplyMeta::default() }
    }
}

/// A per-step SPD preconditioner. Implementations may carry state (RNG,
/// cached hierarchies), so one instance belongs to one solve at a time.
pub trait Preconditioner: Send {
    fn label(&self) -> String;

    fn apply(&mut self, r: &[f64], ctx: &PrecondContext<'_>) -> Result<Preconditioned>;
}

impl<P: Preconditioner + ?Sized> Preconditioner for Box<P> {
    fn label(&self) -> String {
        (**self).label()
    }

    fn apply(&mut self, r: &[f64], ctx: &PrecondContext<'_>) -> Result<Preconditioned> {
        (**self).apply(r, ctx)
    }
}

/// Running A-orthonormal basis of the span of previously seen directions.
#[derive(Default)]
pub(crate) struct AOrthoBasis {
    q: Vec<Vec<f64>>,
    aq: Vec<Vec<f64>>,
    seen: usize,
}

impl AOrthoBasis {
    /// Absorbs directions not yet seen; resets when a new solve starts.
    pub(crate) fn sync(&mut self, a: &dyn SymmetricOperator, step: usize, directions: &[Vec<f64>]) {
        if step == 0 || directions.len() < self.seen {
            self.q.clear();
            self.aq.clear();
            self.seen = 0;
        }
        for p in &directions[self.seen..] {
            let p_norm = crate::linalg::dot(p, &a.apply(p)).max(0.0).sqrt();
            let mut v = p.clone();
            self.orthogonalize(&mut v);
            let av = a.apply(&v);
            let vv = crate::linalg::dot(&v, &av);
            if vv > 0.0 && vv.sqrt() > 1e-12 * p_norm {
                let s = 1.0 / vv.sqrt();
                self.q.push(v.iter().map(|x| x * s).collect());
                self.aq.push(av.iter().map(|x| x * s).collect());
            }
        }
        self.seen = directions.len();
    }

    /// Removes the A-projection onto the basis (two passes).
    pub(crate) fn orthogonalize(&self, v: &mut [f64]) {
        for _ in 0..2 {
            for (q, aq) in self.q.iter().zip(&self.aq) {
                let c = crate::linalg::dot(v, aq);
                crate::linalg::axpy(-c, q, v);
            }
        }
    }
}
