//! Experiment harness: runs the convergence studies, audits the traces and
//! writes CSV, SVG and plain-text reports.

mod config;
mod report;

pub use config::{
    parse_key_values, read_config_file, EmitFlags, ExperimentConfig, ExperimentId, MethodChoice, OperatorChoice,
    PreconditionerChoice, CONFIG_KEYS,
};
pub use report::{emit_report, format_real, render_audit, render_csv, render_svg, CSV_HEADER};

use std::time::{Duration, Instant};

use crate::cone::spectral_bound;
use crate::error::Result;
use crate::linalg::{DiagonalOperator, Laplacian1d, SymmetricOperator};
use crate::preconditioners::{
    Adversarial, CoarseMode, ConeRandom, FixedSpd, InnerCg, Preconditioner, SmootherConfig, TwoGridPreconditioner,
};
use crate::rng::{normal_vector, stream};
use crate::solvers::{
    audit_error_transition, audit_local_optimality, audit_orthogonality, audit_sd_reduction, solve_alg1_with,
    solve_flexible_with, MemoryPolicy, Problem, SolveTrace, StoppingRule, Termination, TraceOptions,
};

const X0_STREAM: u64 = 1;
const PRECOND_STREAM: u64 = 16;

/// Steps, from the start of a trace, that get the brute-force optimality check.
pub const LOCAL_OPTIMALITY_STEPS: usize = 30;

pub const ERROR_TRANSITION_TOL: f64 = 1e-12;
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
pub const OPTIMALITY_TOL: f64 = 1e-10;
pub const SD_REDUCTION_TOL: f64 = 1e-10;
pub const ENVELOPE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl AuditCheck {
    pub fn passed(&self) -> bool {
        self.value <= self.threshold
    }
}

/// Convergence history of one method/preconditioner pairing.
#[derive(Clone, Debug)]
pub struct History {
    pub method: String,
    /// The `eta_or_mode` column: an `η` value, a coarse-grid mode, or empty.
    pub variant: String,
    pub preconditioner: String,
    /// `‖e_0‖_A, ‖e_1‖_A, ...`
    pub error_a_norms: Vec<f64>,
    /// Per step.
    pub inner_iterations: Vec<Option<usize>>,
    pub kappa_estimates: Vec<Option<f64>>,
    /// `q` of the reference line `q^k ‖e_0‖_A`, when the run has one.
    pub bound_factor: Option<f64>,
    pub termination: Option<Termination>,
    pub failure: Option<String>,
    pub wall_time: Duration,
    pub audits: Vec<AuditCheck>,
}

impl History {
    pub fn label(&self) -> String {
        if self.variant.is_empty() {
            self.method.clone()
        } else {
            format!("{} {}", self.method, self.variant)
        }
    }

    pub fn iterations(&self) -> usize {
        self.error_a_norms.len().saturating_sub(1)
    }

    pub fn reduction_factors(&self) -> Vec<f64> {
        self.error_a_norms.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Geometric mean of the reduction factors.
    pub fn mean_reduction(&self) -> Option<f64> {
        let k = self.iterations();
        (k > 0).then(|| (self.error_a_norms[k] / self.error_a_norms[0]).powf(1.0 / k as f64))
    }

    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        let e0 = *self.error_a_norms.first()?;
        self.error_a_norms.iter().position(|&e| e <= tol * e0)
    }

    pub fn bound_at(&self, i: usize) -> Option<f64> {
        Some(self.bound_factor?.powi(i as i32) * self.error_a_norms.first()?)
    }

    pub fn audits_passed(&self) -> bool {
        self.audits.iter().all(AuditCheck::passed)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub histories: Vec<History>,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn failures(&self) -> impl Iterator<Item = &History> {
        self.histories.iter().filter(|h| h.failure.is_some())
    }

    pub fn audits_passed(&self) -> bool {
        self.histories.iter().all(History::audits_passed)
    }

    pub fn find(&self, method: &str, variant: &str) -> Option<&History> {
        self.histories.iter().find(|h| h.method == method && h.variant == variant)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PrecondKind {
    Identity,
    Jacobi,
    Adversarial,
    ConeRandom,
    InnerCg(f64),
    TwoGrid(CoarseMode),
}

struct PlannedRun {
    method: MethodChoice,
    precond: PrecondKind,
    variant: String,
    stream: u64,
}

fn variants(config: &ExperimentConfig) -> Vec<(PrecondKind, String)> {
    match config.preconditioner {
        PreconditionerChoice::Identity => vec![(PrecondKind::Identity, String::new())],
        PreconditionerChoice::Jacobi => vec![(PrecondKind::Jacobi, String::new())],
        PreconditionerChoice::Adversarial => vec![(PrecondKind::Adversarial, String::new())],
        PreconditionerChoice::ConeRandom => vec![(PrecondKind::ConeRandom, String::new())],
        PreconditionerChoice::InnerCg => {
            config.eta_list.iter().map(|&eta| (PrecondKind::InnerCg(eta), format!("{eta}"))).collect()
        }
        PreconditionerChoice::TwoGridFixed => vec![(PrecondKind::TwoGrid(CoarseMode::Fixed), "fixed".into())],
        PreconditionerChoice::TwoGridRerandomized => {
            vec![(PrecondKind::TwoGrid(CoarseMode::Rerandomized), "rerandomized".into())]
        }
        PreconditionerChoice::TwoGrid => vec![
            (PrecondKind::TwoGrid(CoarseMode::Fixed), "fixed".into()),
            (PrecondKind::TwoGrid(CoarseMode::Rerandomized), "rerandomized".into()),
        ],
    }
}

fn plan(config: &ExperimentConfig) -> Vec<PlannedRun> {
    let mut runs = Vec::new();
    for (i, (precond, variant)) in variants(config).into_iter().enumerate() {
        for method in &config.methods {
            runs.push(PlannedRun { method: method.clone(), precond, variant: variant.clone(), stream: PRECOND_STREAM + i as u64 });
        }
    }
    runs
}

fn build_operator(config: &ExperimentConfig) -> Result<Box<dyn SymmetricOperator>> {
    Ok(match config.operator {
        OperatorChoice::Laplacian => Box::new(Laplacian1d::new(config.n)?),
        OperatorChoice::Diagonal => Box::new(DiagonalOperator::new((1..=config.n).map(|i| i as f64).collect())?),
    })
}

fn build_preconditioner(
    kind: PrecondKind,
    a: &dyn SymmetricOperator,
    config: &ExperimentConfig,
    stream_id: u64,
) -> Result<Box<dyn Preconditioner>> {
    let rng = stream(config.seed, stream_id);
    Ok(match kind {
        PrecondKind::Identity => Box::new(FixedSpd::identity()),
        PrecondKind::Jacobi => Box::new(FixedSpd::jacobi(a)?),
        PrecondKind::Adversarial => Box::new(Adversarial::new(config.kappa_max, rng)?),
        PrecondKind::ConeRandom => Box::new(ConeRandom::new(config.kappa_max, rng)?),
        PrecondKind::InnerCg(eta) => Box::new(InnerCg::new(eta)?),
        PrecondKind::TwoGrid(mode) => {
            Box::new(TwoGridPreconditioner::new(a, config.coarse_count, mode, SmootherConfig::default(), rng)?)
        }
    })
}

fn audit_trace(trace: &SolveTrace, method: &MethodChoice, a: &dyn SymmetricOperator, config: &ExperimentConfig) -> Result<Vec<AuditCheck>> {
    let zero = vec![0.0; a.dim()];
    let mut checks = vec![
        AuditCheck { name: "error-transition", value: audit_error_transition(trace, a, &zero)?, threshold: ERROR_TRANSITION_TOL },
        AuditCheck {
            name: "orthogonality",
            value: audit_orthogonality(trace, a, Some(&zero))?.worst(),
            threshold: ORTHOGONALITY_TOL,
        },
    ];
    if method.in_family() {
        let mut gap: f64 = 0.0;
        let mut two_term: f64 = 0.0;
        for k in 0..trace.iterations().min(LOCAL_OPTIMALITY_STEPS) {
            let l = audit_local_optimality(trace, k, a, &zero)?;
            gap = gap.max(l.gap);
            if let (Some(t), true) = (l.two_term, trace.steps[k].memory >= 1) {
                let ek = trace.error_a_norms[k];
                two_term = two_term.max((trace.error_a_norms[k + 1] - t.minimum) / ek);
            }
        }
        checks.push(AuditCheck { name: "local-optimality", value: gap, threshold: OPTIMALITY_TOL });
        checks.push(AuditCheck { name: "two-term-optimality", value: two_term.max(0.0), threshold: OPTIMALITY_TOL });
    }
    if *method == MethodChoice::Flexible(MemoryPolicy::Psd) {
        checks.push(AuditCheck { name: "sd-reduction", value: audit_sd_reduction(trace, a, &zero)?, threshold: SD_REDUCTION_TOL });
    }
    let has_estimates = trace.steps.iter().any(|s| s.meta.kappa_estimate.is_some());
    if method.in_family() && has_estimates {
        let bound = spectral_bound(config.kappa_max)?;
        let factors = trace.reduction_factors();
        let excess = trace
            .steps
            .iter()
            .zip(&factors)
            .filter(|(s, _)| s.meta.kappa_estimate.is_some_and(|k| k <= config.kappa_max * (1.0 + 1e-9)))
            .fold(0.0f64, |m, (_, q)| m.max(q - bound));
        checks.push(AuditCheck { name: "envelope", value: excess, threshold: ENVELOPE_TOL });
    }
    Ok(checks)
}

fn execute(run: &PlannedRun, a: &dyn SymmetricOperator, x0: &[f64], config: &ExperimentConfig, audit: bool) -> History {
    let start = Instant::now();
    let zero = vec![0.0; a.dim()];
    let problem = Problem::new(a, &zero, x0).with_solution(&zero);
    let mut stop = StoppingRule::iterations(config.iterations);
    stop.error_tolerance = config.tolerance;
    let opts = if audit {
        TraceOptions { retain_vectors: true, cap: usize::MAX }
    } else {
        TraceOptions::scalars_only()
    };
    let bound_factor = match run.precond {
        PrecondKind::Adversarial | PrecondKind::ConeRandom => spectral_bound(config.kappa_max).ok(),
        _ => None,
    };

    let mut history = History {
        method: run.method.label(),
        variant: run.variant.clone(),
        preconditioner: String::new(),
        error_a_norms: Vec::new(),
        inner_iterations: Vec::new(),
        kappa_estimates: Vec::new(),
        bound_factor,
        termination: None,
        failure: None,
        wall_time: Duration::ZERO,
        audits: Vec::new(),
    };
    let result = build_preconditioner(run.precond, a, config, run.stream).and_then(|mut p| {
        history.preconditioner = p.label();
        match &run.method {
            MethodChoice::Flexible(policy) => solve_flexible_with(&problem, p.as_mut(), policy, &stop, opts),
            MethodChoice::Alg1(beta) => solve_alg1_with(&problem, p.as_mut(), *beta, &stop, opts),
        }
    });
    match result {
        Ok(trace) => {
            if audit {
                match audit_trace(&trace, &run.method, a, config) {
                    Ok(checks) => history.audits = checks,
                    Err(e) => history.failure = Some(format!("audit: {e}")),
                }
            }
            history.inner_iterations = trace.steps.iter().map(|s| s.meta.inner_iterations).collect();
            history.kappa_estimates = trace.steps.iter().map(|s| s.meta.kappa_estimate).collect();
            history.termination = Some(trace.termination);
            history.error_a_norms = trace.error_a_norms;
        }
        Err(e) => history.failure = Some(e.to_string()),
    }
    history.wall_time = start.elapsed();
    history
}

fn bound_history(config: &ExperimentConfig, e0: f64) -> Result<History> {
    let q = spectral_bound(config.kappa_max)?;
    let iters = config.iterations;
    Ok(History {
        method: "bound".into(),
        variant: String::new(),
        preconditioner: String::new(),
        error_a_norms: (0..=iters).map(|i| q.powi(i as i32) * e0).collect(),
        inner_iterations: vec![None; iters],
        kappa_estimates: vec![None; iters],
        bound_factor: Some(q),
        termination: None,
        failure: None,
        wall_time: Duration::ZERO,
        audits: Vec::new(),
    })
}

/// Runs every method/preconditioner pairing of `config` (in parallel) with
/// `b = 0`, `x = 0` and a standard normal `x_0` drawn from the seed. Audits
/// run when `config.emit.audit` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_with(config, config.emit.audit)
}

pub fn run_experiment_with(config: &ExperimentConfig, audit: bool) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let a = build_operator(config)?;
    let x0 = normal_vector(&mut stream(config.seed, X0_STREAM), config.n);
    let runs = plan(config);

    let a_ref: &dyn SymmetricOperator = a.as_ref();
    let mut histories: Vec<History> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|run| {
                let x0 = &x0;
                scope.spawn(move || execute(run, a_ref, x0, config, audit))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
    });

    if config.preconditioner == PreconditionerChoice::Adversarial {
        let ax = a.apply(&x0);
        let e0 = crate::linalg::dot(&x0, &ax).sqrt();
        histories.push(bound_history(config, e0)?);
    }
    Ok(RunReport { config: config.clone(), histories, wall_time: start.elapsed() })
}
