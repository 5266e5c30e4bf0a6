//! Mechanism-level checks for three architectural interventions: rotary position
//! scores, absolute positional tables, tied versus untied readouts, and the exact
//! polar-factor (idealized Muon) step.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numkernel::{dot, polar_factor, svd, DenseMatrix, DEFAULT_RANK_TOL};

/// Default rotary base for `θ_k = base^(−2k/d)`.
pub const ROPE_BASE: f64 = 10_000.0;
/// Embeddings with condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Block-diagonal rotations `R_t`, one 2×2 block per frequency, rotating by `t·θ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotaryFamily {
    dim: usize,
    frequencies: Vec<f64>,
}

impl RotaryFamily {
    /// Conventional schedule `θ_k = base^(−2k/d)`, `k = 0..d/2`.
    pub fn new(dim: usize, base: f64) -> Result<Self> {
        if dim == 0 || dim % 2 == 1 {
            return Err(Error::shape(format!(
                "rotary dimension {dim} must be even and positive"
            )));
        }
        let frequencies = (0..dim / 2).map(|k| base.powf(-2.0 * k as f64 / dim as f64)).collect();
        Ok(Self { dim, frequencies })
    }

    pub fn with_frequencies(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.iter().any(|f| !f.is_finite()) {
            return Err(Error::shape("need at least one finite frequency"));
        }
        Ok(Self {
            dim: 2 * frequencies.len(),
            frequencies,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `R_position · v`.
    pub fn rotate(&self, position: i64, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::shape(format!(
                "vector of length {} for rotary dimension {}",
                v.len(),
                self.dim
            )));
        }
        let mut out = vec![0.0; self.dim];
        for (k, theta) in self.frequencies.iter().enumerate() {
            let (s, c) = (position as f64 * theta).sin_cos();
            let (a, b) = (v[2 * k], v[2 * k + 1]);
            out[2 * k] = c * a - s * b;
            out[2 * k + 1] = s * a + c * b;
        }
        Ok(out)
    }
}

/// Query/key projections (`d × m`) with an optional absolute positional table.
#[derive(Debug, Clone)]
pub struct ScoreProbe {
    pub w_q: DenseMatrix,
    pub w_k: DenseMatrix,
    /// `p_t ∈ R^m`, added to the input at position `t`.
    pub positional: Option<Vec<Vec<f64>>>,
}

impl ScoreProbe {
    pub fn new(w_q: DenseMatrix, w_k: DenseMatrix) -> Result<Self> {
        if w_q.shape() != w_k.shape() {
            return Err(Error::shape("query and key projections differ in shape"));
        }
        Ok(Self {
            w_q,
            w_k,
            positional: None,
        })
    }

    pub fn with_table(mut self, table: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = table.iter().position(|p| p.len() != self.w_q.cols()) {
            return Err(Error::shape(format!("positional entry {bad} has the wrong width")));
        }
        self.positional = Some(table);
        Ok(self)
    }

    fn query(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.w_q.apply(x)
    }

    fn key(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.w_k.apply(x)
    }
}

fn token(x: &[Vec<f64>], i: usize) -> Result<&[f64]> {
    x.get(i)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::shape(format!("index {i} beyond sequence of length {}", x.len())))
}

/// Rotary score `⟨R_i W_q x_i, R_j W_k x_j⟩`.
pub fn rope_score(probe: &ScoreProbe, rotary: &RotaryFamily, x: &[Vec<f64>], i: usize, j: usize) -> Result<f64> {
    let q = rotary.rotate(i as i64, &probe.query(token(x, i)?)?)?;
    let k = rotary.rotate(j as i64, &probe.key(token(x, j)?)?)?;
    Ok(dot(&q, &k))
}

/// The same score through the relative rotation, `q_iᵀ R_{j−i} k_j`.
pub fn relative_rope_score(
    probe: &ScoreProbe,
    rotary: &RotaryFamily,
    x: &[Vec<f64>],
    i: usize,
    j: usize,
) -> Result<f64> {
    let q = probe.query(token(x, i)?)?;
    let k = rotary.rotate(j as i64 - i as i64, &probe.key(token(x, j)?)?)?;
    Ok(dot(&q, &k))
}

/// Score with absolute positions: `⟨W_q (x_i + p_i), W_k (x_j + p_j)⟩`.
pub fn absolute_score(probe: &ScoreProbe, x: &[Vec<f64>], i: usize, j: usize) -> Result<f64> {
    let table = probe
        .positional
        .as_ref()
        .ok_or_else(|| Error::Config("probe has no positional table".into()))?;
    let with_pos = |t: usize| -> Result<Vec<f64>> {
        let p = table
            .get(t)
            .ok_or_else(|| Error::shape(format!("position {t} beyond table of length {}", table.len())))?;
        let xt = token(x, t)?;
        if xt.len() != p.len() {
            return Err(Error::shape("token and positional widths differ"));
        }
        Ok(xt.iter().zip(p).map(|(a, b)| a + b).collect())
    };
    let q = probe.query(&with_pos(i)?)?;
    let k = probe.key(&with_pos(j)?)?;
    Ok(dot(&q, &k))
}

/// `S_τ x`: the sequence moved `tau` positions later, prefixed with zero vectors.
pub fn shift_sequence(x: &[Vec<f64>], tau: usize) -> Vec<Vec<f64>> {
    let width = x.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; width]; tau];
    out.extend(x.iter().cloned());
    out
}

/// `max |a_{i+τ, j+τ}(S_τ x) − a_{ij}(x)|` over every sequence and index pair.
pub fn shift_equivariance_residual<F>(score: F, sequences: &[Vec<Vec<f64>>], tau: usize) -> Result<f64>
where
    F: Fn(&[Vec<f64>], usize, usize) -> Result<f64>,
{
    let mut worst = 0.0_f64;
    for x in sequences {
        let shifted = shift_sequence(x, tau);
        for i in 0..x.len() {
            for j in 0..x.len() {
                let base = score(x, i, j)?;
                let moved = score(&shifted, i + tau, j + tau)?;
                worst = worst.max((moved - base).abs());
            }
        }
    }
    Ok(worst)
}

/// Token embedding `E` (`d × V`, full row rank, `d < V`) with an optional untied head.
#[derive(Debug, Clone)]
pub struct EmbeddingPair {
    embedding: DenseMatrix,
    head: Option<DenseMatrix>,
    /// Orthonormal basis of `col(Eᵀ)`, `V × d`.
    row_basis: DenseMatrix,
    /// `E⁺ = Eᵀ(EEᵀ)⁻¹`, `V × d`.
    pinv: DenseMatrix,
}

impl EmbeddingPair {
    pub fn new(embedding: DenseMatrix) -> Result<Self> {
        let (d, v) = embedding.shape();
        if d >= v {
            return Err(Error::shape(format!("embedding must be wide, got {d}x{v}")));
        }
        let dec = svd(&embedding)?;
        let smax = dec.singular_values[0];
        let smin = dec.singular_values[d - 1];
        if !(smin > 0.0) || smax / smin > MAX_CONDITION {
            return Err(Error::domain(format!(
                "embedding is rank deficient or ill-conditioned (σ_min = {smin:e}, σ_max = {smax:e})"
            )));
        }
        let mut pinv = DenseMatrix::zeros(v, d);
        for t in 0..d {
            let s = dec.singular_values[t];
            for a in 0..v {
                let va = dec.v.get(a, t) / s;
                for b in 0..d {
                    pinv.set(a, b, pinv.get(a, b) + va * dec.u.get(b, t));
                }
            }
        }
        Ok(Self {
            embedding,
            head: None,
            row_basis: dec.v,
            pinv,
        })
    }

    pub fn with_head(mut self, head: DenseMatrix) -> Result<Self> {
        if head.shape() != self.embedding.shape() {
            return Err(Error::shape("untied head must match the embedding shape"));
        }
        self.head = Some(head);
        Ok(self)
    }

    pub fn embedding(&self) -> &DenseMatrix {
        &self.embedding
    }

    pub fn vocab(&self) -> usize {
        self.embedding.cols()
    }

    pub fn width(&self) -> usize {
        self.embedding.rows()
    }

    /// Token-to-logit map `HᵀAE`, with `H = E` when tied.
    pub fn readout(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let h = self.head.as_ref().unwrap_or(&self.embedding);
        h.transpose().matmul(a)?.matmul(&self.embedding)
    }

    /// `P_out`, the orthogonal projector onto `col(Eᵀ)`.
    pub fn output_projector(&self) -> DenseMatrix {
        self.row_basis
            .matmul(&self.row_basis.transpose())
            .expect("basis shapes agree")
    }

    fn check_target(&self, t_star: &DenseMatrix) -> Result<()> {
        let v = self.vocab();
        if t_star.shape() != (v, v) {
            return Err(Error::shape(format!(
                "target map must be {v}x{v}, got {:?}",
                t_star.shape()
            )));
        }
        Ok(())
    }

    /// Lower bound `‖(I − P_out) T*‖_F` on any tied fit.
    pub fn tied_projection_residual(&self, t_star: &DenseMatrix) -> Result<f64> {
        self.check_target(t_star)?;
        let pt = self.output_projector().matmul(t_star)?;
        Ok(t_star.sub(&pt)?.frobenius_norm())
    }

    /// Least-squares `A` minimizing `‖EᵀAE − T*‖_F`, with the achieved residual.
    pub fn best_tied_fit(&self, t_star: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
        self.check_target(t_star)?;
        let a = self.pinv.transpose().matmul(t_star)?.matmul(&self.pinv)?;
        let fitted = self.embedding.transpose().matmul(&a)?.matmul(&self.embedding)?;
        let residual = fitted.sub(t_star)?.frobenius_norm();
        Ok((a, residual))
    }

    /// Least-squares `B` minimizing `‖BE − T*‖_F`, with the achieved residual.
    pub fn untied_fit(&self, t_star: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
        self.check_target(t_star)?;
        let b = t_star.matmul(&self.pinv)?;
        let residual = b.matmul(&self.embedding)?.sub(t_star)?.frobenius_norm();
        Ok((b, residual))
    }
}

/// See [`EmbeddingPair::tied_projection_residual`].
pub fn tied_projection_residual(t_star: &DenseMatrix, e: &DenseMatrix) -> Result<f64> {
    EmbeddingPair::new(e.clone())?.tied_projection_residual(t_star)
}

/// See [`EmbeddingPair::best_tied_fit`].
pub fn best_tied_fit(t_star: &DenseMatrix, e: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    EmbeddingPair::new(e.clone())?.best_tied_fit(t_star)
}

/// See [`EmbeddingPair::untied_fit`].
pub fn untied_fit(t_star: &DenseMatrix, e: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    EmbeddingPair::new(e.clone())?.untied_fit(t_star)
}

/// One polar-factor step on `f(W) = (L/2)‖W − W*‖_F²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentCheck {
    pub f_before: f64,
    /// `f(W⁺)` with `W⁺ = W − η Q(G)`.
    pub f_after: f64,
    /// `f(W) − η‖G‖_* + (Lη²/2) r`.
    pub bound: f64,
    pub nuclear_norm: f64,
    pub rank: usize,
}

impl DescentCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.f_after <= self.bound + tol
    }

    pub fn strict_descent(&self) -> bool {
        self.f_after < self.f_before
    }
}

/// Largest step `2‖G‖_*/(L r)` below which the polar step strictly descends.
pub fn strict_descent_limit(g: &DenseMatrix, smoothness: f64) -> Result<f64> {
    let dec = svd(g)?;
    let r = dec.rank(DEFAULT_RANK_TOL);
    if r == 0 {
        return Err(Error::degenerate("zero gradient"));
    }
    let nuclear: f64 = dec.singular_values.iter().sum();
    Ok(2.0 * nuclear / (smoothness * r as f64))
}

pub fn muon_descent_check(w0: &DenseMatrix, w_star: &DenseMatrix, smoothness: f64, eta: f64) -> Result<DescentCheck> {
    if !(smoothness > 0.0 && eta > 0.0) {
        return Err(Error::domain("smoothness and step must be positive"));
    }
    let diff = w0.sub(w_star)?;
    let g = diff.scale(smoothness);
    let dec = svd(&g)?;
    let rank = dec.rank(DEFAULT_RANK_TOL);
    if rank == 0 {
        return Err(Error::degenerate("zero gradient at W0"));
    }
    let nuclear: f64 = dec.singular_values.iter().sum();
    let q = polar_factor(&g, DEFAULT_RANK_TOL)?;
    let w_plus = w0.sub(&q.scale(eta))?;
    let f = |w: &DenseMatrix| -> Result<f64> { Ok(0.5 * smoothness * w.sub(w_star)?.frobenius_norm().powi(2)) };
    let f_before = f(w0)?;
    Ok(DescentCheck {
        f_before,
        f_after: f(&w_plus)?,
        bound: f_before - eta * nuclear + 0.5 * smoothness * eta * eta * rank as f64,
        nuclear_norm: nuclear,
        rank,
    })
}

/// `⟨G, Q(G)⟩`, the value of the operator-norm trust-region maximizer.
pub fn nuclear_maximizer_check(g: &DenseMatrix) -> Result<f64> {
    let q = polar_factor(g, DEFAULT_RANK_TOL)?;
    g.frobenius_inner(&q)
}

/// Random matrix with operator norm at most one: uniform entries, then singular
/// values clipped to `≤ 1`.
pub fn random_unit_opnorm<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<DenseMatrix> {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = DenseMatrix::new(rows, cols, data)?;
    let mut dec = svd(&m)?;
    for s in dec.singular_values.iter_mut() {
        *s = s.min(1.0);
    }
    Ok(dec.reconstruct())
}
