use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Relative tolerance for accepting an input as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Jacobi sweeps stop once the off-diagonal Frobenius mass falls below this fraction of `‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: DenseMatrix,
}

impl EigenResult {
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(A + Aᵀ)/2` after the symmetry check, so tiny
/// asymmetries from upstream arithmetic do not bias the result. Eigenvalues are
/// sorted descending with ties kept in their diagonal order, and each eigenvector
/// is signed so its largest-magnitude component is positive.
pub fn sym_eig(a: &DenseMatrix) -> Result<EigenResult> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::shape("sym_eig input is not symmetric"));
    }
    let n = a.rows();
    let mut m: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let mut v = DenseMatrix::identity(n).into_vec();

    let total = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * total;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m, n) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, n, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&m, n) > threshold {
        return Err(Error::NoConvergence(format!(
            "Jacobi did not converge in {MAX_SWEEPS} sweeps (n = {n})"
        )));
    }

    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their diagonal order
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0.0_f64;
        for k in 0..n {
            let x = v[k * n + src];
            if x.abs() > pivot.abs() {
                pivot = x;
            }
        }
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vecs[k * n + dst] = sign * v[k * n + src];
        }
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors: DenseMatrix::new(n, n, vecs)?,
    })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[i * n + j] * m[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// Applies `A ← JᵀAJ`, `V ← VJ` for the plane rotation in (p, q).
#[inline]
fn rotate(m: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        m[k * n + p] = c * akp - s * akq;
        m[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = m[p * n + k];
        let aqk = m[q * n + k];
        m[p * n + k] = c * apk - s * aqk;
        m[q * n + k] = s * apk + c * aqk;
    }
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}
