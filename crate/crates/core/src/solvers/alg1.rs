use super::flexible::check_stop;
use super::trace::{BetaFormula, Method, SolveTrace, StepRecord, StepVectors, StoppingRule, Termination, TraceOptions};
use super::Problem;
use crate::error::{FlexError, Result};
use crate::linalg::{all_finite, axpy, dot, norm, sub};
use crate::preconditioners::{PrecondContext, Preconditioner};

/// The recurred residual is replaced by `b - A x` after this many steps.
pub const RESIDUAL_REFRESH: usize = 50;

/// ... and also once it has shrunk by this factor since the last refresh, so
/// the rounding gap (about `ε ‖r‖` at refresh time) stays small relative to
/// the current residual.
pub const RESIDUAL_REFRESH_DROP: f64 = 1e-4;

/// Two-term PCG recurrence:
///
/// ```text
/// s_k = B_k⁻¹ r_k
/// p_0 = s_0,  p_k = s_k + β_k p_{k-1}
/// α_k = (s_k, r_k) / (p_k, A p_k)
/// x_{k+1} = x_k + α_k p_k,  r_{k+1} = r_k - α_k A p_k
/// ```
pub fn solve_alg1(
    problem: &Problem<'_>,
    precond: &mut dyn Preconditioner,
    beta_formula: BetaFormula,
    stop: &StoppingRule,
) -> Result<SolveTrace> {
    solve_alg1_with(problem, precond, beta_formula, stop, TraceOptions::default())
}

pub fn solve_alg1_with(
    problem: &Problem<'_>,
    precond: &mut dyn Preconditioner,
    beta_formula: BetaFormula,
    stop: &StoppingRule,
    opts: TraceOptions,
) -> Result<SolveTrace> {
    problem.validate()?;
    let a = problem.a;
    let b = problem.b;

    let mut x = problem.x0.to_vec();
    let mut r = sub(b, &a.apply(&x));
    let r0 = norm(&r);
    let mut r_refreshed = r0;
    let mut error_a_norms = Vec::new();
    let mut e0 = None;
    if let Some(e) = problem.error_a_norm(&x) {
        error_a_norms.push(e);
        e0 = Some(e);
    }

    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut prev: Option<(Vec<f64>, f64)> = None; // (r_{k-1}, (s_{k-1}, r_{k-1}))
    let mut steps = Vec::new();
    let mut termination = Termination::MaxIterations;

    for k in 0..stop.max_iterations {
        let rn = norm(&r);
        if let Some(t) = check_stop(stop, rn, r0, error_a_norms.last().copied(), e0) {
            termination = t;
            break;
        }
        let error = problem.true_solution.map(|xt| sub(xt, &x));
        let ctx = PrecondContext { step: k, operator: a, directions: &directions, error: error.as_deref() };
        let out = precond.apply(&r, &ctx)?;
        let s = out.s;
        if s.len() != x.len() {
            return Err(FlexError::DimensionMismatch { expected: x.len(), found: s.len() });
        }
        if !all_finite(&s) {
            return Err(FlexError::NonFinite(k));
        }
        let sr = dot(&s, &r);
        if !(sr > 0.0) {
            return Err(FlexError::PreconditionerNotSpd { step: k, inner: sr });
        }

        let (p, beta) = match (&prev, directions.last()) {
            (Some((r_prev, sr_prev)), Some(p_prev)) => {
                let beta = match beta_formula {
                    BetaFormula::Standard => sr / sr_prev,
                    BetaFormula::Modified => (sr - dot(&s, r_prev)) / sr_prev,
                };
                let mut p = s.clone();
                axpy(beta, p_prev, &mut p);
                (p, Some(beta))
            }
            _ => (s.clone(), None),
        };
        let a_p = a.apply(&p);
        let p_energy = dot(&p, &a_p);
        if !(p_energy > 0.0) {
            termination = Termination::Breakdown;
            break;
        }
        let alpha = sr / p_energy;
        let x_prev = (opts.retain_vectors && k < opts.cap).then(|| x.clone());
        axpy(alpha, &p, &mut x);
        if !all_finite(&x) {
            return Err(FlexError::NonFinite(k));
        }
        let mut r_next = r.clone();
        axpy(-alpha, &a_p, &mut r_next);
        if (k + 1) % RESIDUAL_REFRESH == 0 || norm(&r_next) < RESIDUAL_REFRESH_DROP * r_refreshed {
            r_next = sub(b, &a.apply(&x));
            r_refreshed = norm(&r_next);
        }
        let r_k = std::mem::replace(&mut r, r_next);

        steps.push(StepRecord {
            k,
            memory: k.min(1),
            alpha,
            beta,
            residual_norm: rn,
            meta: out.meta,
            vectors: x_prev.map(|xp| StepVectors { x: xp, r: r_k.clone(), s, p: p.clone() }),
        });
        prev = Some((r_k, sr));
        directions.push(p);
        if let Some(e) = problem.error_a_norm(&x) {
            error_a_norms.push(e);
        }
    }
    if termination == Termination::MaxIterations {
        if let Some(t) = check_stop(stop, norm(&r), r0, error_a_norms.last().copied(), e0) {
            termination = t;
        }
    }

    Ok(SolveTrace {
        method: Method::TwoTerm(beta_formula),
        preconditioner: precond.label(),
        steps,
        error_a_norms,
        final_residual_norm: norm(&r),
        final_x: x,
        termination,
    })
}
