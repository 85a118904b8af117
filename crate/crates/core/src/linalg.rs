//! Dense symmetric eigenvalue support for the small matrices this crate needs
//! (graph Laplacians and feature second-moment matrices, n ≤ 64).

use thiserror::Error;

/// Row-major square matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from a row-major buffer; `data.len()` must equal `n * n`.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "buffer length must be n*n");
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Error)]
#[error(
    "Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:.3e})"
)]
pub struct EigenError {
    pub sweeps: usize,
    pub off_diagonal: f64,
    /// The matrix that failed, for diagnostics.
    pub matrix: SquareMatrix,
}

const MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi rotations.
///
/// O(n³) per sweep; fine for the n ≤ 64 matrices used here.
pub fn symmetric_eigenvalues(m: &SquareMatrix) -> Result<Vec<f64>, EigenError> {
    let n = m.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j).abs())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let tol = 1e-14 * scale;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= tol {
            let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a.get(i, p);
                        let aiq = a.get(i, q);
                        a.set(i, p, c * aip - s * aiq);
                        a.set(p, i, a.get(i, p));
                        a.set(i, q, s * aip + c * aiq);
                        a.set(q, i, a.get(i, q));
                    }
                }
                a.set(p, p, c * c * app - 2.0 * s * c * apq + s * s * aqq);
                a.set(q, q, s * s * app + 2.0 * s * c * apq + c * c * aqq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
            }
        }
    }

    let mut off = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            off = off.max(a.get(i, j).abs());
        }
    }
    Err(EigenError {
        sweeps: MAX_SWEEPS,
        off_diagonal: off,
        matrix: m.clone(),
    })
}
