use super::policy::{validate_policy, MemoryPolicy};
use super::trace::{Method, SolveTrace, StepRecord, StepVectors, StoppingRule, Termination, TraceOptions};
use super::Problem;
use crate::error::{FlexError, Result};
use crate::linalg::{all_finite, axpy, dot, norm, sub};
use crate::preconditioners::{PrecondContext, Preconditioner};

/// Threshold for `‖p_k‖_A² <= ε ‖s_k‖_A²`.
pub const BREAKDOWN_EPS: f64 = f64::EPSILON;

/// The general A-orthogonalizing iteration:
///
/// ```text
/// r_k = b - A x_k,  s_k = B_k⁻¹ r_k
/// p_k = s_k - Σ_{l=k-m_k}^{k-1} (A s_k, p_l) / (A p_l, p_l) p_l
/// x_{k+1} = x_k + (r_k, p_k) / (A p_k, p_k) p_k
/// ```
pub fn solve_flexible(
    problem: &Problem<'_>,
    precond: &mut dyn Preconditioner,
    policy: &MemoryPolicy,
    stop: &StoppingRule,
) -> Result<SolveTrace> {
    solve_flexible_with(problem, precond, policy, stop, TraceOptions::default())
}

pub fn solve_flexible_with(
    problem: &Problem<'_>,
    precond: &mut dyn Preconditioner,
    policy: &MemoryPolicy,
    stop: &StoppingRule,
    opts: TraceOptions,
) -> Result<SolveTrace> {
    problem.validate()?;
    validate_policy(policy, stop.max_iterations).map_err(|v| FlexError::invalid(v.to_string()))?;
    let a = problem.a;
    let b = problem.b;

    let mut x = problem.x0.to_vec();
    let mut r = sub(b, &a.apply(&x));
    let r0 = norm(&r);
    let mut error_a_norms = Vec::new();
    let mut e0 = None;
    if let Some(e) = problem.error_a_norm(&x) {
        error_a_norms.push(e);
        e0 = Some(e);
    }

    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut dir_energy: Vec<f64> = Vec::new();
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

        let a_s = a.apply(&s);
        let s_energy = dot(&s, &a_s);
        let m_k = policy.m(k);
        let mut p = s.clone();
        for l in (k - m_k)..k {
            let coef = dot(&a_s, &directions[l]) / dir_energy[l];
            axpy(-coef, &directions[l], &mut p);
        }
        let a_p = a.apply(&p);
        let p_energy = dot(&p, &a_p);
        if !(p_energy > BREAKDOWN_EPS * s_energy) {
            termination = Termination::Breakdown;
            break;
        }
        let alpha = dot(&r, &p) / p_energy;
        let x_prev = (opts.retain_vectors && k < opts.cap).then(|| x.clone());
        axpy(alpha, &p, &mut x);
        if !all_finite(&x) {
            return Err(FlexError::NonFinite(k));
        }
        let r_prev = std::mem::replace(&mut r, sub(b, &a.apply(&x)));

        steps.push(StepRecord {
            k,
            memory: m_k,
            alpha,
            beta: None,
            residual_norm: rn,
            meta: out.meta,
            vectors: x_prev.map(|xp| StepVectors { x: xp, r: r_prev, s, p: p.clone() }),
        });
        directions.push(p);
        dir_energy.push(p_energy);
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
        method: Method::Flexible(policy.clone()),
        preconditioner: precond.label(),
        steps,
        error_a_norms,
        final_residual_norm: norm(&r),
        final_x: x,
        termination,
    })
}

pub(super) fn check_stop(
    stop: &StoppingRule,
    rn: f64,
    r0: f64,
    e: Option<f64>,
    e0: Option<f64>,
) -> Option<Termination> {
    if rn == 0.0 {
        return Some(Termination::ExactSolution);
    }
    if let (Some(tol), Some(e), Some(e0)) = (stop.error_tolerance, e, e0) {
        if e <= tol * e0 {
            return Some(Termination::ErrorTolerance);
        }
    }
    if let Some(tol) = stop.residual_tolerance {
        if rn <= tol * r0 {
            return Some(Termination::ResidualTolerance);
        }
    }
    None
}
