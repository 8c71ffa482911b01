use super::DenseMatrix;
use crate::error::{FlexError, Result};

/// Structured operators refuse to materialize beyond this dimension.
pub const DENSE_VIEW_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Dense,
    Diagonal,
    TridiagonalLaplacian,
}

/// A real symmetric linear map `y = A x`, applied matrix-free.
pub trait SymmetricOperator: Send + Sync {
    fn dim(&self) -> usize;

    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn kind(&self) -> OperatorKind;

    /// Dense copy for audits; `None` above [`DENSE_VIEW_LIMIT`].
    fn dense_view(&self) -> Option<DenseMatrix>;

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    fn diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        let mut e = vec![0.0; n];
        (0..n)
            .map(|i| {
                e[i] = 1.0;
                let v = self.apply(&e)[i];
                e[i] = 0.0;
                v
            })
            .collect()
    }
}

/// `tridiag(-1, 2, -1)`: the 3-point 1-D Laplacian with homogeneous Dirichlet
/// ends, unscaled by the mesh width.
#[derive(Clone, Debug)]
pub struct Laplacian1d {
    n: usize,
}

impl Laplacian1d {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FlexError::invalid("Laplacian dimension must be positive"));
        }
        Ok(Laplacian1d { n })
    }

    /// Exact eigenvalues `2 - 2 cos(k pi / (n + 1))`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = std::f64::consts::PI / (self.n as f64 + 1.0);
        (1..=self.n).map(|k| 2.0 - 2.0 * (k as f64 * h).cos()).collect()
    }
}

impl SymmetricOperator for Laplacian1d {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = 2.0 * x[i] - left - right;
        }
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::TridiagonalLaplacian
    }

    fn dense_view(&self) -> Option<DenseMatrix> {
        (self.n <= DENSE_VIEW_LIMIT).then(|| {
            DenseMatrix::from_fn(self.n, self.n, |i, j| match i.abs_diff(j) {
                0 => 2.0,
                1 => -1.0,
                _ => 0.0,
            })
        })
    }

    fn diagonal(&self) -> Vec<f64> {
        vec![2.0; self.n]
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    d: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(FlexError::invalid("empty diagonal"));
        }
        if !super::all_finite(&d) {
            return Err(FlexError::invalid("diagonal has non-finite entries"));
        }
        Ok(DiagonalOperator { d })
    }

    pub fn entries(&self) -> &[f64] {
        &self.d
    }
}

impl SymmetricOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.d.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.d) {
            *yi = di * xi;
        }
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::Diagonal
    }

    fn dense_view(&self) -> Option<DenseMatrix> {
        (self.d.len() <= DENSE_VIEW_LIMIT).then(|| DenseMatrix::diag(&self.d))
    }

    fn diagonal(&self) -> Vec<f64> {
        self.d.clone()
    }
}

#[derive(Clone, Debug)]
pub struct DenseOperator {
    m: DenseMatrix,
}

impl DenseOperator {
    /// Accepts `m` if it is square, finite and symmetric to 1e-12 relative.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(FlexError::invalid("operator matrix must be square and nonempty"));
        }
        if !super::all_finite(m.as_slice()) {
            return Err(FlexError::invalid("operator matrix has non-finite entries"));
        }
        let asym = m.asymmetry();
        if asym > 1e-12 {
            return Err(FlexError::NotSymmetric(asym));
        }
        Ok(DenseOperator { m })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.m
    }
}

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = super::dot(self.m.row(i), x);
        }
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::Dense
    }

    fn dense_view(&self) -> Option<DenseMatrix> {
        Some(self.m.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::rng;

    #[test]
    fn laplacian_matches_dense_view() {
        let a = Laplacian1d::new(6).unwrap();
        let d = a.dense_view().unwrap();
        let x = rng::normal_vector(&mut rng::stream(1, 0), 6);
        let y1 = a.apply(&x);
        let y2 = d.matvec(&x);
        for (u, v) in y1.iter().zip(&y2) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn operators_are_symmetric() {
        let mut r = rng::stream(2, 0);
        let ops: Vec<Box<dyn SymmetricOperator>> = vec![
            Box::new(Laplacian1d::new(10).unwrap()),
            Box::new(DiagonalOperator::new((1..=10).map(f64::from).collect()).unwrap()),
        ];
        for op in &ops {
            let norm_a = op.dense_view().unwrap().frobenius_norm();
            for _ in 0..50 {
                let x = rng::normal_vector(&mut r, 10);
                let y = rng::normal_vector(&mut r, 10);
                let lhs = dot(&op.apply(&x), &y);
                let rhs = dot(&x, &op.apply(&y));
                let tol = 1e-12 * crate::linalg::norm(&x) * crate::linalg::norm(&y) * norm_a;
                assert!((lhs - rhs).abs() <= tol);
            }
        }
    }

    #[test]
    fn dense_operator_rejects_asymmetric() {
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(DenseOperator::new(m), Err(FlexError::NotSymmetric(_))));
    }

    #[test]
    fn dense_view_capped() {
        assert!(Laplacian1d::new(DENSE_VIEW_LIMIT + 1).unwrap().dense_view().is_none());
    }
}
