use super::matrix::DenseMatrix;
use super::svd::svd;
use crate::error::{Error, Result};

/// Default relative cutoff for the polar factor's rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Exact polar factor `Q(G) = U_r V_rᵀ` over singular directions with `σ > rank_tol · σ_max`.
pub fn polar_factor(g: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let dec = svd(g)?;
    let r = dec.rank(rank_tol);
    if r == 0 {
        return Err(Error::degenerate("polar factor of a zero matrix"));
    }
    let (m, n) = g.shape();
    let mut q = DenseMatrix::zeros(m, n);
    for t in 0..r {
        for i in 0..m {
            let ui = dec.u.get(i, t);
            for j in 0..n {
                q.set(i, j, q.get(i, j) + ui * dec.v.get(j, t));
            }
        }
    }
    Ok(q)
}
