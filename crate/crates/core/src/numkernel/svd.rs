use super::eigen::sym_eig;
use super::matrix::{dot, norm2, DenseMatrix};
use crate::error::{Error, Result};

/// Singular values below this fraction of `σ_max` are treated as exact zeros.
pub const SVD_ZERO_TOL: f64 = 1e-12;

/// Compact SVD `G = U·diag(σ)·Vᵀ` with `k = min(rows, cols)` triplets.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows × k`, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdResult {
    /// Number of singular values above `tol · σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.singular_values.iter().take_while(|&&s| s > tol * smax).count()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, k) = self.u.shape();
        let n = self.v.rows();
        let mut out = DenseMatrix::zeros(m, n);
        for t in 0..k {
            let s = self.singular_values[t];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let ui = self.u.get(i, t) * s;
                for j in 0..n {
                    out.set(i, j, out.get(i, j) + ui * self.v.get(j, t));
                }
            }
        }
        out
    }
}

/// Singular value decomposition via the symmetric eigenproblem of the smaller Gram matrix.
///
/// The eigenvectors of `GᵀG` (or `GGᵀ` when `G` is wide) give one factor; the other is
/// recovered as `Gv/σ` and then re-orthonormalized. Columns belonging to zero singular
/// values are completed to an orthonormal set deterministically.
pub fn svd(g: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = g.shape();
    if m == 0 || n == 0 {
        return Err(Error::shape("svd of an empty matrix"));
    }
    if n <= m {
        let (v, sigma, u) = factor(g, &g.gram())?;
        Ok(SvdResult {
            u,
            singular_values: sigma,
            v,
        })
    } else {
        let gt = g.transpose();
        let (u, sigma, v) = factor(&gt, &gt.gram())?;
        Ok(SvdResult {
            u,
            singular_values: sigma,
            v,
        })
    }
}

/// For tall `a` (rows ≥ cols) with Gram `aᵀa`, returns (right factor, σ, left factor).
fn factor(a: &DenseMatrix, gram: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, k) = a.shape();
    let eig = sym_eig(gram)?;
    // σ from ‖a·v‖ rather than √λ: null directions then land near ε·σ_max instead of √ε·σ_max
    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..k)
        .map(|j| {
            let v = eig.eigenvector(j);
            let av = a.apply(&v)?;
            Ok((norm2(&av), v, av))
        })
        .collect::<Result<_>>()?;
    triplets.sort_by(|x, y| y.0.total_cmp(&x.0));
    let smax = triplets[0].0;

    let mut sigma = Vec::with_capacity(k);
    let mut right_cols = Vec::with_capacity(k);
    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (s, v, av) in triplets {
        if s > SVD_ZERO_TOL * smax && s > 0.0 {
            left_cols.push(av.into_iter().map(|x| x / s).collect());
            sigma.push(s);
        } else {
            sigma.push(0.0);
        }
        right_cols.push(v);
    }
    orthonormalize(&mut left_cols);
    complete_basis(&mut left_cols, m, k);

    Ok((
        DenseMatrix::from_columns(&right_cols)?,
        sigma,
        DenseMatrix::from_columns(&left_cols)?,
    ))
}

/// Modified Gram–Schmidt, two passes.
fn orthonormalize(cols: &mut [Vec<f64>]) {
    for _ in 0..2 {
        for j in 0..cols.len() {
            let (done, rest) = cols.split_at_mut(j);
            let c = &mut rest[0];
            for prev in done.iter() {
                let p = dot(prev, c);
                for (x, y) in c.iter_mut().zip(prev) {
                    *x -= p * y;
                }
            }
            let nrm = norm2(c);
            if nrm > 0.0 {
                for x in c.iter_mut() {
                    *x /= nrm;
                }
            }
        }
    }
}

/// Extends orthonormal `cols` in `R^dim` to `target` columns using standard basis vectors.
fn complete_basis(cols: &mut Vec<Vec<f64>>, dim: usize, target: usize) {
    let mut e = 0;
    while cols.len() < target && e < dim {
        let mut c = vec![0.0; dim];
        c[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for prev in cols.iter() {
                let p = dot(prev, &c);
                for (x, y) in c.iter_mut().zip(prev) {
                    *x -= p * y;
                }
            }
        }
        let nrm = norm2(&c);
        if nrm > 1e-8 {
            for x in c.iter_mut() {
                *x /= nrm;
            }
            cols.push(c);
        }
    }
}
