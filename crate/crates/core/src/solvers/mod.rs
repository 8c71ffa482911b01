//! Iterative solvers and trace audits.

mod alg1;
pub mod audit;
mod flexible;
mod policy;
mod trace;

pub use alg1::{solve_alg1, solve_alg1_with, RESIDUAL_REFRESH, RESIDUAL_REFRESH_DROP};
pub use audit::{
    audit_error_transition, audit_local_optimality, audit_orthogonality, audit_sd_reduction,
    envelope_excess, LocalOptimality, OrthogonalityReport, TwoTermCheck,
};
pub use flexible::{solve_flexible, solve_flexible_with, BREAKDOWN_EPS};
pub use policy::{validate_policy, MemoryPolicy, PolicyViolation};
pub use trace::{
    BetaFormula, Method, SolveTrace, StepRecord, StepVectors, StoppingRule, Termination, TraceOptions,
};

use crate::error::{check_dim, FlexError, Result};
use crate::linalg::{all_finite, dot, sub, SymmetricOperator};

/// `A x = b` with a starting guess and, optionally, the exact solution so that
/// A-norm errors can be tracked.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub a: &'a dyn SymmetricOperator,
    pub b: &'a [f64],
    pub x0: &'a [f64],
    pub true_solution: Option<&'a [f64]>,
}

impl<'a> Problem<'a> {
    pub fn new(a: &'a dyn SymmetricOperator, b: &'a [f64], x0: &'a [f64]) -> Self {
        Problem { a, b, x0, true_solution: None }
    }

    pub fn with_solution(mut self, x: &'a [f64]) -> Self {
        self.true_solution = Some(x);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.dim();
        check_dim(n, self.b.len())?;
        check_dim(n, self.x0.len())?;
        if let Some(x) = self.true_solution {
            check_dim(n, x.len())?;
        }
        if !all_finite(self.b) || !all_finite(self.x0) {
            return Err(FlexError::invalid("right-hand side and initial guess must be finite"));
        }
        Ok(())
    }

    pub fn error_a_norm(&self, x: &[f64]) -> Option<f64> {
        let xt = self.true_solution?;
        let e = sub(xt, x);
        Some(dot(&e, &self.a.apply(&e)).max(0.0).sqrt())
    }
}
