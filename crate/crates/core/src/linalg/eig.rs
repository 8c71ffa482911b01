use super::DenseMatrix;
use crate::error::{FlexError, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DenseMatrix,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn condition(&self) -> f64 {
        self.max() / self.min()
    }
}

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps over all `(p, q)` pairs in row order, annihilating `a_pq` with a
/// plane rotation, until the off-diagonal mass drops below machine precision
/// relative to the Frobenius norm.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    if !m.is_square() {
        return Err(FlexError::invalid("sym_eig needs a square matrix"));
    }
    if !super::all_finite(m.as_slice()) {
        return Err(FlexError::invalid("sym_eig input has non-finite entries"));
    }
    let asym = m.asymmetry();
    if asym > 1e-12 {
        return Err(FlexError::NotSymmetric(asym));
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let fro = a.frobenius_norm();
    let target = (f64::EPSILON * fro).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if 2.0 * off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // negligible against both diagonal entries: drop it
                if apq.abs() < 1e-3 * f64::EPSILON * app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    a[(k, p)] = new_p;
                    a[(p, k)] = new_p;
                    a[(k, q)] = new_q;
                    a[(q, k)] = new_q;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEig { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use crate::rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let g = rng::normal_vector(&mut rng::stream(seed, 3), n * n);
        DenseMatrix::from_fn(n, n, |i, j| g[i * n + j] + g[j * n + i])
    }

    #[test]
    fn diagonal_sorted() {
        let e = sym_eig(&DenseMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_spectrum() {
        for n in [1, 4, 17] {
            let e = sym_eig(&DenseMatrix::identity(n)).unwrap();
            assert!(e.values.iter().all(|&l| l == 1.0));
        }
    }

    #[test]
    fn laplacian_three_by_three() {
        let m = DenseMatrix::from_row_major(3, 3, vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0])
            .unwrap();
        let e = sym_eig(&m).unwrap();
        // oracle: det(M - l I) = (2 - l)((2 - l)^2 - 2)
        for &l in &e.values {
            let charpoly = (2.0 - l) * ((2.0 - l).powi(2) - 2.0);
            assert!(charpoly.abs() < 1e-14, "{charpoly}");
        }
        let expected = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (l, x) in e.values.iter().zip(expected) {
            assert!((l - x).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(sym_eig(&m), Err(FlexError::NotSymmetric(_))));
    }

    #[test]
    fn residuals_and_orthonormality() {
        for (n, seed) in [(5, 1), (30, 2), (80, 3)] {
            let m = random_symmetric(n, seed);
            let e = sym_eig(&m).unwrap();
            let scale = e.values.iter().fold(0.0f64, |a, l| a.max(l.abs()));
            for j in 0..n {
                let vj = e.vectors.column(j);
                let mv = m.matvec(&vj);
                let r: Vec<f64> = mv.iter().zip(&vj).map(|(a, b)| a - e.values[j] * b).collect();
                assert!(norm(&r) <= 1e-10 * scale);
                for i in 0..=j {
                    let d = dot(&e.vectors.column(i), &vj);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((d - want).abs() <= 1e-10);
                }
            }
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn reconstruction_up_to_200() {
        for (n, seed) in [(2, 10), (9, 11), (64, 12), (200, 13)] {
            let m = random_symmetric(n, seed);
            let e = sym_eig(&m).unwrap();
            let vl = DenseMatrix::from_fn(n, n, |i, j| e.vectors[(i, j)] * e.values[j]);
            let rebuilt = vl.matmul(&e.vectors.transpose()).unwrap();
            let err = rebuilt.sub(&m).unwrap().frobenius_norm();
            assert!(err <= 1e-9 * m.frobenius_norm(), "n={n}: {err}");
        }
    }
}
