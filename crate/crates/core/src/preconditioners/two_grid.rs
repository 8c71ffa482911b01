use rand::seq::index;

use super::{ApplyMeta, PrecondContext, Preconditioned, Preconditioner};
use crate::error::{check_dim, FlexError, Result};
use crate::linalg::{OperatorKind, SymmetricOperator};
use crate::rng::SolverRng;

/// Richardson smoothing `z <- z + ω (r - A z)`, `ν` steps before and after
/// the coarse correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherConfig {
    pub omega: f64,
    pub nu: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig { omega: 0.25, nu: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarseMode {
    /// One coarse set for the whole solve.
    Fixed,
    /// A fresh coarse set on every application.
    Rerandomized,
}

impl CoarseMode {
    pub fn label(self) -> &'static str {
        match self {
            CoarseMode::Fixed => "fixed",
            CoarseMode::Rerandomized => "rerandomized",
        }
    }
}

/// Piecewise-linear prolongation from a sorted coarse index set. A fine point
/// between two coarse neighbours takes the distance-weighted average; points
/// outside the coarse hull decay linearly to zero at the virtual boundary
/// points `-1` and `n`. Each fine row has at most two entries.
#[derive(Clone, Debug)]
pub struct Interpolation {
    n: usize,
    coarse: Vec<usize>,
    rows: Vec<[(usize, f64); 2]>,
}

impl Interpolation {
    pub fn new(n: usize, coarse: &[usize]) -> Result<Self> {
        if coarse.is_empty() {
            return Err(FlexError::invalid("coarse set is empty"));
        }
        if coarse.windows(2).any(|w| w[0] >= w[1]) || *coarse.last().unwrap() >= n {
            return Err(FlexError::invalid("coarse indices must be sorted, distinct and below n"));
        }
        let m = coarse.len();
        let mut rows = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            while j < m && coarse[j] < i {
                j += 1;
            }
            // coarse[j] is the first coarse index >= i (if any).
            let row = if j < m && coarse[j] == i {
                [(j, 1.0), (j, 0.0)]
            } else if j == 0 {
                let w = (i + 1) as f64 / (coarse[0] + 1) as f64;
                [(0, w), (0, 0.0)]
            } else if j == m {
                let c = coarse[m - 1];
                let w = (n - i) as f64 / (n - c) as f64;
                [(m - 1, w), (m - 1, 0.0)]
            } else {
                let (lo, hi) = (coarse[j - 1], coarse[j]);
                let h = (hi - lo) as f64;
                [(j - 1, (hi - i) as f64 / h), (j, (i - lo) as f64 / h)]
            };
            rows.push(row);
        }
        Ok(Interpolation { n, coarse: coarse.to_vec(), rows })
    }

    pub fn fine_dim(&self) -> usize {
        self.n
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.len()
    }

    pub fn coarse_indices(&self) -> &[usize] {
        &self.coarse
    }

    /// `P[i][j]`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().filter(|(c, _)| *c == j).map(|(_, w)| w).sum()
    }

    pub fn prolong(&self, xc: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, w)| w * xc[j]).sum()).collect()
    }

    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.coarse.len()];
        for (row, xi) in self.rows.iter().zip(x) {
            for &(j, w) in row {
                out[j] += w * xi;
            }
        }
        out
    }
}

/// Bands of a symmetric tridiagonal matrix: `diag[i]` and `off[i] = A[i][i+1]`.
#[derive(Clone, Debug)]
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn of(a: &dyn SymmetricOperator) -> Result<Self> {
        let n = a.dim();
        match a.kind() {
            OperatorKind::TridiagonalLaplacian => {
                Ok(Tridiagonal { diag: vec![2.0; n], off: vec![-1.0; n.saturating_sub(1)] })
            }
            OperatorKind::Diagonal => Ok(Tridiagonal { diag: a.diagonal(), off: vec![0.0; n.saturating_sub(1)] }),
            OperatorKind::Dense => {
                let m = a.dense_view().ok_or_else(|| FlexError::invalid("operator too large"))?;
                for i in 0..n {
                    for j in 0..n {
                        if i.abs_diff(j) > 1 && m[(i, j)] != 0.0 {
                            return Err(FlexError::invalid("two-grid needs a tridiagonal operator"));
                        }
                    }
                }
                Ok(Tridiagonal {
                    diag: (0..n).map(|i| m[(i, i)]).collect(),
                    off: (1..n).map(|i| m[(i - 1, i)]).collect(),
                })
            }
        }
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `Pᵀ A P`, which stays tridiagonal: columns `j` and `j + 2` of `P` are
    /// separated by coarse point `j + 1`.
    fn galerkin(&self, p: &Interpolation) -> Tridiagonal {
        let m = p.coarse_dim();
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m.saturating_sub(1)];
        let mut add = |j: usize, k: usize, v: f64| {
            if j == k {
                diag[j] += v;
            } else if j + 1 == k {
                off[j] += v;
            }
        };
        let n = self.diag.len();
        for i in 0..n {
            for &(j, wj) in &p.rows[i] {
                if wj == 0.0 {
                    continue;
                }
                for &(k, wk) in &p.rows[i] {
                    add(j, k, wj * self.diag[i] * wk);
                }
                if i + 1 < n {
                    for &(k, wk) in &p.rows[i + 1] {
                        let v = wj * self.off[i] * wk;
                        // A[i][i+1] and A[i+1][i] both contribute.
                        add(j, k, v);
                        add(k, j, v);
                    }
                }
            }
        }
        Tridiagonal { diag, off }
    }
}

/// Cholesky factor of a symmetric positive definite tridiagonal matrix.
#[derive(Clone, Debug)]
struct BandCholesky {
    l_diag: Vec<f64>,
    l_sub: Vec<f64>,
}

impl BandCholesky {
    fn factor(t: &Tridiagonal) -> Result<Self> {
        let m = t.dim();
        let mut l_diag = vec![0.0; m];
        let mut l_sub = vec![0.0; m.saturating_sub(1)];
        for i in 0..m {
            let mut d = t.diag[i];
            if i > 0 {
                l_sub[i - 1] = t.off[i - 1] / l_diag[i - 1];
                d -= l_sub[i - 1] * l_sub[i - 1];
            }
            if !(d > 0.0) {
                return Err(FlexError::NotPositiveDefinite { row: i, pivot: d });
            }
            l_diag[i] = d.sqrt();
        }
        Ok(BandCholesky { l_diag, l_sub })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.l_diag.len();
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut v = b[i];
            if i > 0 {
                v -= self.l_sub[i - 1] * y[i - 1];
            }
            y[i] = v / self.l_diag[i];
        }
        for i in (0..m).rev() {
            let mut v = y[i];
            if i + 1 < m {
                v -= self.l_sub[i] * y[i + 1];
            }
            y[i] = v / self.l_diag[i];
        }
        y
    }
}

/// Everything needed to run one symmetric two-grid cycle.
#[derive(Clone, Debug)]
pub struct TwoGridHierarchy {
    fine: Tridiagonal,
    interp: Interpolation,
    coarse_diag: Vec<f64>,
    coarse_off: Vec<f64>,
    coarse_solver: BandCholesky,
    smoother: SmootherConfig,
}

impl TwoGridHierarchy {
    pub fn dim(&self) -> usize {
        self.fine.dim()
    }

    pub fn interpolation(&self) -> &Interpolation {
        &self.interp
    }

    pub fn smoother(&self) -> SmootherConfig {
        self.smoother
    }

    /// `A_c[j][k]` of the Galerkin coarse matrix.
    pub fn coarse_entry(&self, j: usize, k: usize) -> f64 {
        match j.abs_diff(k) {
            0 => self.coarse_diag[j],
            1 => self.coarse_off[j.min(k)],
            _ => 0.0,
        }
    }
}

pub fn build_two_grid(a: &dyn SymmetricOperator, coarse: &[usize], smoother: SmootherConfig) -> Result<TwoGridHierarchy> {
    let fine = Tridiagonal::of(a)?;
    build_from_bands(fine, coarse, smoother)
}

fn build_from_bands(fine: Tridiagonal, coarse: &[usize], smoother: SmootherConfig) -> Result<TwoGridHierarchy> {
    if !(smoother.omega > 0.0) || !smoother.omega.is_finite() {
        return Err(FlexError::invalid("smoother damping must be positive"));
    }
    let interp = Interpolation::new(fine.dim(), coarse)?;
    let ac = fine.galerkin(&interp);
    let coarse_solver = BandCholesky::factor(&ac)?;
    Ok(TwoGridHierarchy { fine, interp, coarse_diag: ac.diag, coarse_off: ac.off, coarse_solver, smoother })
}

/// One symmetric cycle for `A z = r` from `z = 0`.
pub fn two_grid_apply(h: &TwoGridHierarchy, r: &[f64]) -> Result<Vec<f64>> {
    check_dim(h.dim(), r.len())?;
    let omega = h.smoother.omega;
    let mut z = vec![0.0; r.len()];
    let smooth = |z: &mut Vec<f64>| {
        let az = h.fine.apply(z);
        for ((zi, ri), ai) in z.iter_mut().zip(r).zip(&az) {
            *zi += omega * (ri - ai);
        }
    };
    for _ in 0..h.smoother.nu {
        smooth(&mut z);
    }
    let az = h.fine.apply(&z);
    let res: Vec<f64> = r.iter().zip(&az).map(|(ri, ai)| ri - ai).collect();
    let correction = h.interp.prolong(&h.coarse_solver.solve(&h.interp.restrict(&res)));
    for (zi, ci) in z.iter_mut().zip(&correction) {
        *zi += ci;
    }
    for _ in 0..h.smoother.nu {
        smooth(&mut z);
    }
    Ok(z)
}

/// `count` distinct indices from `0..n`, uniformly, sorted.
pub fn sample_coarse(rng: &mut SolverRng, n: usize, count: usize) -> Result<Vec<usize>> {
    if count == 0 || count > n {
        return Err(FlexError::invalid(format!("coarse count must lie in 1..={n}, got {count}")));
    }
    let mut idx = index::sample(rng, n, count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Two-grid preconditioner on random coarse sets.
pub struct TwoGridPreconditioner {
    fine: Tridiagonal,
    coarse_count: usize,
    mode: CoarseMode,
    smoother: SmootherConfig,
    rng: SolverRng,
    current: Option<TwoGridHierarchy>,
}

impl TwoGridPreconditioner {
    pub fn new(
        a: &dyn SymmetricOperator,
        coarse_count: usize,
        mode: CoarseMode,
        smoother: SmootherConfig,
        mut rng: SolverRng,
    ) -> Result<Self> {
        let fine = Tridiagonal::of(a)?;
        let current = match mode {
            CoarseMode::Fixed => {
                let coarse = sample_coarse(&mut rng, fine.dim(), coarse_count)?;
                Some(build_from_bands(fine.clone(), &coarse, smoother)?)
            }
            CoarseMode::Rerandomized => {
                if coarse_count == 0 || coarse_count > fine.dim() {
                    return Err(FlexError::invalid("coarse count out of range"));
                }
                None
            }
        };
        Ok(TwoGridPreconditioner { fine, coarse_count, mode, smoother, rng, current })
    }

    pub fn mode(&self) -> CoarseMode {
        self.mode
    }

    /// The hierarchy used by the latest application (or the fixed one).
    pub fn hierarchy(&self) -> Option<&TwoGridHierarchy> {
        self.current.as_ref()
    }
}

impl Preconditioner for TwoGridPreconditioner {
    fn label(&self) -> String {
        format!("two-grid({}, coarse={})", self.mode.label(), self.coarse_count)
    }

    fn apply(&mut self, r: &[f64], _ctx: &PrecondContext<'_>) -> Result<Preconditioned> {
        if self.mode == CoarseMode::Rerandomized {
            let coarse = sample_coarse(&mut self.rng, self.fine.dim(), self.coarse_count)?;
            self.current = Some(build_from_bands(self.fine.clone(), &coarse, self.smoother)?);
        }
        let h = self.current.as_ref().expect("hierarchy present");
        let s = two_grid_apply(h, r)?;
        Ok(Preconditioned { s, meta: ApplyMeta::default() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, generalized_condition, materialize, sym_eig, DenseMatrix, Laplacian1d};
    use crate::rng;

    fn dense_p(p: &Interpolation) -> DenseMatrix {
        DenseMatrix::from_fn(p.fine_dim(), p.coarse_dim(), |i, j| p.weight(i, j))
    }

    #[test]
    fn seven_point_example() {
        let a = Laplacian1d::new(7).unwrap();
        let h = build_two_grid(&a, &[1, 3, 5], SmootherConfig::default()).unwrap();
        let p = dense_p(h.interpolation());
        let expected_col0 = [0.5, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(p.column(0), expected_col0);
        assert_eq!(p.column(1), [0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0]);
        assert_eq!(p.column(2), [0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 0.5]);
        for j in 0..3usize {
            for k in 0..3 {
                let want = match j.abs_diff(k) {
                    0 => 1.0,
                    1 => -0.5,
                    _ => 0.0,
                };
                assert!((h.coarse_entry(j, k) - want).abs() < 1e-15, "{j} {k}");
            }
        }
    }

    #[test]
    fn galerkin_matches_dense_product() {
        let a = Laplacian1d::new(40).unwrap();
        let coarse = sample_coarse(&mut rng::stream(8, 0), 40, 11).unwrap();
        let h = build_two_grid(&a, &coarse, SmootherConfig::default()).unwrap();
        let p = dense_p(h.interpolation());
        let ad = a.dense_view().unwrap();
        let ac = p.transpose().matmul(&ad.matmul(&p).unwrap()).unwrap();
        for j in 0..11 {
            for k in 0..11 {
                assert!((ac[(j, k)] - h.coarse_entry(j, k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn full_coarse_set_is_identity() {
        let a = Laplacian1d::new(6).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let h = build_two_grid(&a, &all, SmootherConfig::default()).unwrap();
        let p = dense_p(h.interpolation());
        assert_eq!(p.max_abs(), 1.0);
        assert!(p.sub(&DenseMatrix::identity(6)).unwrap().max_abs() == 0.0);
        for j in 0..6usize {
            for k in 0..6 {
                let want = match j.abs_diff(k) {
                    0 => 2.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert_eq!(h.coarse_entry(j, k), want);
            }
        }
    }

    #[test]
    fn single_coarse_point() {
        let a = Laplacian1d::new(9).unwrap();
        let h = build_two_grid(&a, &[4], SmootherConfig::default()).unwrap();
        let p = h.interpolation().prolong(&[1.0]);
        let want = dot(&p, &a.apply(&p));
        assert!(want > 0.0);
        assert!((h.coarse_entry(0, 0) - want).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_coarse_sets() {
        let a = Laplacian1d::new(5).unwrap();
        let s = SmootherConfig::default();
        assert!(build_two_grid(&a, &[], s).is_err());
        assert!(build_two_grid(&a, &[2, 1], s).is_err());
        assert!(build_two_grid(&a, &[1, 1], s).is_err());
        assert!(build_two_grid(&a, &[5], s).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let a = Laplacian1d::new(31).unwrap();
        let h = build_two_grid(&a, &(1..31).step_by(2).collect::<Vec<_>>(), SmootherConfig::default()).unwrap();
        assert_eq!(two_grid_apply(&h, &[0.0; 31]).unwrap(), vec![0.0; 31]);
    }

    #[test]
    fn cycle_is_spd_on_small_grids() {
        let a = Laplacian1d::new(31).unwrap();
        let coarse: Vec<usize> = (1..31).step_by(2).collect();
        let h = build_two_grid(&a, &coarse, SmootherConfig::default()).unwrap();
        let b = materialize(31, &|r: &[f64]| two_grid_apply(&h, r).unwrap());
        assert!(b.sub(&b.transpose()).unwrap().frobenius_norm() <= 1e-12 * b.frobenius_norm());
        assert!(sym_eig(&b.symmetrized()).unwrap().min() > 0.0);

        for seed in 0..5 {
            let n = 63;
            let a = Laplacian1d::new(n).unwrap();
            let coarse = sample_coarse(&mut rng::stream(seed, 0), n, 13).unwrap();
            let h = build_two_grid(&a, &coarse, SmootherConfig::default()).unwrap();
            let b = materialize(n, &|r: &[f64]| two_grid_apply(&h, r).unwrap());
            assert!(b.sub(&b.transpose()).unwrap().frobenius_norm() <= 1e-12 * b.frobenius_norm());
            assert!(sym_eig(&b.symmetrized()).unwrap().min() > 0.0);
        }
    }

    #[test]
    fn random_grid_condition_is_finite() {
        // Same 5:1 fine/coarse ratio as the large experiment, at a size the
        // dense eigen-solver handles quickly.
        let n = 255;
        let a = Laplacian1d::new(n).unwrap();
        let coarse = sample_coarse(&mut rng::stream(11, 0), n, 51).unwrap();
        let h = build_two_grid(&a, &coarse, SmootherConfig::default()).unwrap();
        let k = generalized_condition(&a, &|r: &[f64]| two_grid_apply(&h, r).unwrap()).unwrap();
        assert!(k.is_finite() && k > 1.0, "{k}");
    }

    #[test]
    fn sampling_is_sorted_distinct_and_reproducible() {
        let x = sample_coarse(&mut rng::stream(2, 0), 3000, 600).unwrap();
        let y = sample_coarse(&mut rng::stream(2, 0), 3000, 600).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.len(), 600);
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert!(sample_coarse(&mut rng::stream(2, 0), 10, 11).is_err());
        assert!(sample_coarse(&mut rng::stream(2, 0), 10, 0).is_err());
    }

    #[test]
    fn rerandomized_changes_coarse_set() {
        let a = Laplacian1d::new(100).unwrap();
        let mut p = TwoGridPreconditioner::new(&a, 20, CoarseMode::Rerandomized, SmootherConfig::default(), rng::stream(0, 9)).unwrap();
        let ctx = PrecondContext { step: 0, operator: &a, directions: &[], error: None };
        let r = vec![1.0; 100];
        let s1 = p.apply(&r, &ctx).unwrap().s;
        let c1 = p.hierarchy().unwrap().interpolation().coarse_indices().to_vec();
        let s2 = p.apply(&r, &ctx).unwrap().s;
        let c2 = p.hierarchy().unwrap().interpolation().coarse_indices().to_vec();
        assert_ne!(c1, c2);
        assert_ne!(s1, s2);
    }
}
