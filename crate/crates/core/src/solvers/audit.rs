//! Checks, on recorded traces, of identities the iteration satisfies in exact
//! arithmetic: the error transition, local A-orthogonality, local optimality
//! and the steepest-descent reduction formula.

use super::trace::{BetaFormula, Method, SolveTrace};
use crate::error::{FlexError, Result};
use crate::linalg::{axpy, dot, norm, sin_angle, sub, Metric, SymmetricOperator};

fn vectors_missing() -> FlexError {
    FlexError::MissingContext("trace did not retain per-step vectors")
}

fn error_at(trace: &SolveTrace, x_true: &[f64], k: usize) -> Result<Vec<f64>> {
    let x = trace.iterate(k).ok_or_else(vectors_missing)?;
    Ok(sub(x_true, x))
}

fn a_norm(a: &dyn SymmetricOperator, v: &[f64]) -> f64 {
    dot(v, &a.apply(v)).max(0.0).sqrt()
}

/// `max_k ‖e_{k+1} - (e_k - (A e_k, p_k)/(A p_k, p_k) p_k)‖ / ‖e_k‖`.
pub fn audit_error_transition(trace: &SolveTrace, a: &dyn SymmetricOperator, x_true: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut e_k = error_at(trace, x_true, 0)?;
    for k in 0..trace.iterations() {
        let v = trace.vectors(k).ok_or_else(vectors_missing)?;
        let e_next = error_at(trace, x_true, k + 1)?;
        let a_p = a.apply(&v.p);
        let coef = dot(&a.apply(&e_k), &v.p) / dot(&a_p, &v.p);
        let mut predicted = e_k.clone();
        axpy(-coef, &v.p, &mut predicted);
        let en = norm(&e_k);
        if en > 0.0 {
            worst = worst.max(norm(&sub(&e_next, &predicted)) / en);
        }
        e_k = e_next;
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OrthogonalityReport {
    /// Largest normalized `|(p_i, p_j)_A|` over pairs inside an enforced window.
    pub directions: f64,
    /// Largest normalized `|(e_{k+1}, p_i)_A|` and `|(e_{k+1}, s_k)_A|`.
    pub errors: Option<f64>,
}

impl OrthogonalityReport {
    pub fn worst(&self) -> f64 {
        self.directions.max(self.errors.unwrap_or(0.0))
    }
}

/// Local A-orthogonality inside each step's window `k - m_k ..= k`.
///
/// Windows are nested, so checking the pairs `(i, k)` at every `k` covers all
/// pairs `i < j` of every window. For the standard-`β` recurrence, which does
/// not belong to the windowed family, only the line-search relation
/// `(e_{k+1}, p_k)_A = 0` is checked.
pub fn audit_orthogonality(
    trace: &SolveTrace,
    a: &dyn SymmetricOperator,
    x_true: Option<&[f64]>,
) -> Result<OrthogonalityReport> {
    let standard = trace.method == Method::TwoTerm(BetaFormula::Standard);
    let n_steps = trace.iterations();
    let mut p = Vec::with_capacity(n_steps);
    let mut ap = Vec::with_capacity(n_steps);
    let mut pn = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let v = trace.vectors(k).ok_or_else(vectors_missing)?;
        let a_p = a.apply(&v.p);
        pn.push(dot(&v.p, &a_p).max(0.0).sqrt());
        p.push(v.p.clone());
        ap.push(a_p);
    }

    let mut report = OrthogonalityReport::default();
    for k in 0..n_steps {
        let m_k = if standard { 0 } else { trace.steps[k].memory };
        for i in (k - m_k)..k {
            let c = dot(&p[i], &ap[k]).abs() / (pn[i] * pn[k]);
            report.directions = report.directions.max(c);
        }
        if let Some(xt) = x_true {
            let e_next = error_at(trace, xt, k + 1)?;
            let ae = a.apply(&e_next);
            let en = dot(&e_next, &ae).max(0.0).sqrt();
            if en == 0.0 {
                continue;
            }
            let mut worst = report.errors.unwrap_or(0.0);
            for i in (k - m_k)..=k {
                worst = worst.max(dot(&ae, &p[i]).abs() / (en * pn[i]));
            }
            if !standard {
                let s = &trace.vectors(k).ok_or_else(vectors_missing)?.s;
                worst = worst.max(dot(&ae, s).abs() / (en * a_norm(a, s)));
            }
            report.errors = Some(worst);
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoTermCheck {
    /// Minimizing `β` in `min_{α,β} ‖e_k - α s_k - β (e_k - e_{k-1})‖_A`.
    pub beta: f64,
    pub minimum: f64,
    /// `‖e_{k+1}‖_A <= minimum + 1e-10 ‖e_k‖_A`.
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalOptimality {
    /// `|‖e_{k+1}‖_A - min_p ‖e_k - p‖_A| / ‖e_k‖_A`.
    pub gap: f64,
    pub minimum: f64,
    pub rank: usize,
    pub two_term: Option<TwoTermCheck>,
}

/// Brute-force check of local optimality at step `k`: minimizes
/// `‖e_k - p‖_A` over `span{s_k, p_{k-m_k}, ..., p_{k-1}}` from the
/// A-Gram normal equations, and for `k > 0` also over
/// `span{s_k, e_k - e_{k-1}}`.
pub fn audit_local_optimality(
    trace: &SolveTrace,
    k: usize,
    a: &dyn SymmetricOperator,
    x_true: &[f64],
) -> Result<LocalOptimality> {
    if k >= trace.iterations() {
        return Err(FlexError::invalid(format!("step {k} not in trace")));
    }
    let e_k = error_at(trace, x_true, k)?;
    let e_next = error_at(trace, x_true, k + 1)?;
    let ek_norm = a_norm(a, &e_k);
    let m_k = trace.steps[k].memory;

    let mut basis = vec![trace.vectors(k).ok_or_else(vectors_missing)?.s.clone()];
    for l in (k - m_k)..k {
        basis.push(trace.vectors(l).ok_or_else(vectors_missing)?.p.clone());
    }
    let (minimum, _, rank) = a_least_squares(a, &basis, &e_k);
    let gap = (a_norm(a, &e_next) - minimum).abs() / ek_norm;

    let two_term = if k > 0 {
        let e_prev = error_at(trace, x_true, k - 1)?;
        let d = sub(&e_k, &e_prev);
        let s = basis[0].clone();
        let (min2, coef, _) = a_least_squares(a, &[s, d], &e_k);
        Some(TwoTermCheck {
            beta: coef[1],
            minimum: min2,
            holds: a_norm(a, &e_next) <= min2 + 1e-10 * ek_norm,
        })
    } else {
        None
    };

    Ok(LocalOptimality { gap, minimum, rank, two_term })
}

/// Minimizes `‖target - V c‖_A` through the normal equations
/// `(Vᵀ A V) c = Vᵀ A target`, solved by symmetric pivoted elimination that
/// drops numerically dependent columns. Returns the minimum, the
/// coefficients (zero for dropped columns) and the numerical rank.
fn a_least_squares(a: &dyn SymmetricOperator, basis: &[Vec<f64>], target: &[f64]) -> (f64, Vec<f64>, usize) {
    let m = basis.len();
    // Unit A-norm columns, so a small but independent vector is not taken for a dependent one.
    let scales: Vec<f64> = basis.iter().map(|v| a_norm(a, v)).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
    let basis: Vec<Vec<f64>> = basis.iter().zip(&scales).map(|(v, s)| v.iter().map(|x| x / s).collect()).collect();
    let av: Vec<Vec<f64>> = basis.iter().map(|v| a.apply(v)).collect();
    let mut g = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..=i {
            let v = dot(&basis[i], &av[j]);
            g[i][j] = v;
            g[j][i] = v;
        }
        rhs[i] = dot(&av[i], target);
    }
    let max_diag = (0..m).map(|i| g[i][i]).fold(0.0f64, f64::max);

    // Gauss-Jordan with diagonal pivoting on the SPD Gram matrix.
    let mut active: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..m).collect();
    while !remaining.is_empty() {
        let (pos, &piv) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| g[*a.1][*a.1].total_cmp(&g[*b.1][*b.1]))
            .unwrap();
        if !(g[piv][piv] > 1e-13 * max_diag) {
            break;
        }
        remaining.remove(pos);
        let d = g[piv][piv];
        for &i in remaining.iter().chain(active.iter()) {
            let f = g[i][piv] / d;
            if f == 0.0 {
                continue;
            }
            for j in 0..m {
                g[i][j] -= f * g[piv][j];
            }
            rhs[i] -= f * rhs[piv];
        }
        active.push(piv);
    }
    let mut coef = vec![0.0; m];
    for &i in &active {
        coef[i] = rhs[i] / g[i][i];
    }
    let mut resid = target.to_vec();
    for (c, v) in coef.iter().zip(&basis) {
        axpy(-c, v, &mut resid);
    }
    let coef = coef.iter().zip(&scales).map(|(c, s)| c / s).collect();
    (a_norm(a, &resid), coef, active.len())
}

/// `max_k |‖e_{k+1}‖_A/‖e_k‖_A - sin ∠_A(e_k, s_k)|` for a steepest-descent
/// trace.
pub fn audit_sd_reduction(trace: &SolveTrace, a: &dyn SymmetricOperator, x_true: &[f64]) -> Result<f64> {
    if trace.steps.iter().any(|s| s.memory != 0) {
        return Err(FlexError::invalid("steepest-descent reduction audit needs a trace with m_k = 0"));
    }
    let metric = Metric::induced(a);
    let mut worst: f64 = 0.0;
    for k in 0..trace.iterations() {
        let e_k = error_at(trace, x_true, k)?;
        let e_next = error_at(trace, x_true, k + 1)?;
        let s = &trace.vectors(k).ok_or_else(vectors_missing)?.s;
        let ratio = a_norm(a, &e_next) / a_norm(a, &e_k);
        worst = worst.max((ratio - sin_angle(metric, &e_k, s)?).abs());
    }
    Ok(worst)
}

/// Largest amount by which any reduction factor exceeds `bound`.
pub fn envelope_excess(trace: &SolveTrace, bound: f64) -> f64 {
    trace.reduction_factors().iter().fold(f64::NEG_INFINITY, |m, &q| m.max(q - bound))
}
