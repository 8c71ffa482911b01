use super::policy::MemoryPolicy;
use crate::preconditioners::ApplyMeta;

/// Which `β` the two-term recurrence uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaFormula {
    /// `β_k = (s_k, r_k) / (s_{k-1}, r_{k-1})`
    Standard,
    /// `β_k = (s_k, r_k - r_{k-1}) / (s_{k-1}, r_{k-1})`
    Modified,
}

impl BetaFormula {
    pub fn label(self) -> &'static str {
        match self {
            BetaFormula::Standard => "alg1-standard",
            BetaFormula::Modified => "alg1-modified",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Flexible(MemoryPolicy),
    TwoTerm(BetaFormula),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Flexible(p) => p.label(),
            Method::TwoTerm(b) => b.label().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    ErrorTolerance,
    ResidualTolerance,
    /// `r_k = 0` exactly.
    ExactSolution,
    /// The search direction lost (numerically) all A-norm.
    Breakdown,
}

/// Stops when any configured criterion fires. Tolerances are relative to the
/// initial value: `‖e_k‖_A <= tol ‖e_0‖_A`, `‖r_k‖ <= tol ‖r_0‖`.
#[derive(Clone, Debug, PartialEq)]
pub struct StoppingRule {
    pub max_iterations: usize,
    pub error_tolerance: Option<f64>,
    pub residual_tolerance: Option<f64>,
}

impl StoppingRule {
    pub fn iterations(max_iterations: usize) -> Self {
        StoppingRule { max_iterations, error_tolerance: None, residual_tolerance: None }
    }

    pub fn with_error_tolerance(mut self, tol: f64) -> Self {
        self.error_tolerance = Some(tol);
        self
    }

    pub fn with_residual_tolerance(mut self, tol: f64) -> Self {
        self.residual_tolerance = Some(tol);
        self
    }
}

/// Controls how many per-step vectors a trace keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceOptions {
    pub retain_vectors: bool,
    /// Vectors are dropped for steps at or past this index.
    pub cap: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { retain_vectors: true, cap: 512 }
    }
}

impl TraceOptions {
    pub fn scalars_only() -> Self {
        TraceOptions { retain_vectors: false, cap: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct StepVectors {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub k: usize,
    pub memory: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub residual_norm: f64,
    pub meta: ApplyMeta,
    pub vectors: Option<StepVectors>,
}

#[derive(Clone, Debug)]
pub struct SolveTrace {
    pub method: Method,
    pub preconditioner: String,
    pub steps: Vec<StepRecord>,
    /// `‖e_0‖_A, ‖e_1‖_A, ...`; empty without a true solution.
    pub error_a_norms: Vec<f64>,
    pub final_x: Vec<f64>,
    pub final_residual_norm: f64,
    pub termination: Termination,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    /// `‖e_{k+1}‖_A / ‖e_k‖_A` for every step taken.
    pub fn reduction_factors(&self) -> Vec<f64> {
        self.error_a_norms.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// `(‖e_K‖_A / ‖e_0‖_A)^(1/K)`.
    pub fn mean_reduction(&self) -> Option<f64> {
        let k = self.error_a_norms.len().checked_sub(1).filter(|&k| k > 0)?;
        Some((self.error_a_norms[k] / self.error_a_norms[0]).powf(1.0 / k as f64))
    }

    /// First `k` with `‖e_k‖_A <= tol ‖e_0‖_A`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        let e0 = *self.error_a_norms.first()?;
        self.error_a_norms.iter().position(|&e| e <= tol * e0)
    }

    /// `x_k`, when retained (`k == iterations()` is the final iterate).
    pub fn iterate(&self, k: usize) -> Option<&[f64]> {
        if k == self.steps.len() {
            return Some(&self.final_x);
        }
        self.steps.get(k)?.vectors.as_ref().map(|v| v.x.as_slice())
    }

    pub fn vectors(&self, k: usize) -> Option<&StepVectors> {
        self.steps.get(k)?.vectors.as_ref()
    }
}
