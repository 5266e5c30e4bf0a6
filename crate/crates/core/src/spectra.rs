//! Covariance and gradient spectra, trace normalization, band-restricted exponents
//! over the rank-window bank, RankMe and spectral Jensen–Shannon divergence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{loglog_slope, svd, sym_eig, DenseMatrix};

/// Eigenvalues below `-NEGATIVE_TOL · trace` are rejected instead of clamped.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// Nonnegative values sorted descending, with their trace-normalized form.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    normalized: Vec<f64>,
}

impl Spectrum {
    /// Sorts `values` descending and attaches the normalized form.
    ///
    /// Negative roundoff above `-NEGATIVE_TOL · trace` is clamped to zero.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::shape("empty spectrum"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite spectrum value"));
        }
        let trace: f64 = values.iter().filter(|v| **v > 0.0).sum();
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < -NEGATIVE_TOL * trace {
                    return Err(Error::domain(format!(
                        "negative eigenvalue {v} beyond roundoff (trace {trace})"
                    )));
                }
                *v = 0.0;
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let normalized = trace_normalize(&values)?;
        Ok(Self { values, normalized })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Divides each value by the total so the result sums to one.
pub fn trace_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| *v < 0.0) {
        return Err(Error::domain("trace normalization of negative values"));
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateSpectrum("zero trace".into()));
    }
    Ok(values.iter().map(|v| v / total).collect())
}

/// Eigenvalues of the centered sample covariance `(1/(N−1)) Σ (hᵢ−h̄)(hᵢ−h̄)ᵀ`, descending.
///
/// Rows of `h` are samples. May be all zero; see [`covariance_spectrum`].
pub fn covariance_eigenvalues(h: &DenseMatrix) -> Result<Vec<f64>> {
    let (n, d) = h.shape();
    if n < 2 {
        return Err(Error::shape(format!("covariance needs at least 2 rows, got {n}")));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(h.row(i)) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = Vec::with_capacity(n * d);
    for i in 0..n {
        centered.extend(h.row(i).iter().zip(&mean).map(|(x, m)| x - m));
    }
    let centered = DenseMatrix::new(n, d, centered)?;
    let cov = centered.gram().scale(1.0 / (n as f64 - 1.0));
    Ok(sym_eig(&cov)?.eigenvalues)
}

/// Centered covariance spectrum of an `N × d` activation matrix.
pub fn covariance_spectrum(h: &DenseMatrix) -> Result<Spectrum> {
    Spectrum::new(covariance_eigenvalues(h)?)
}

/// Inclusive, 1-based rank window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RankWindow {
    pub lo: usize,
    pub hi: usize,
}

impl RankWindow {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo < 1 || lo >= hi {
            return Err(Error::Config(format!(
                "rank window [{lo}, {hi}] must satisfy 1 <= lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_within(&self, len: usize) -> Result<()> {
        if self.hi > len {
            return Err(Error::WindowOutOfRange {
                lo: self.lo,
                hi: self.hi,
                len,
            });
        }
        Ok(())
    }
}

impl fmt::Display for RankWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl FromStr for RankWindow {
    type Err = Error;

    /// Parses `lo:hi`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("window `{s}` is not lo:hi")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad rank `{t}` in window `{s}`")))
        };
        Self::new(parse(lo)?, parse(hi)?)
    }
}

/// Fitted band exponent over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub window: RankWindow,
    /// Magnitude of the fitted log-log slope.
    pub alpha: f64,
    pub residual: f64,
}

/// `α(I) = −slope` of `ln λ̃_j` against `ln j` for `j ∈ I`, on normalized values.
pub fn band_alpha(spec: &Spectrum, window: RankWindow) -> Result<TailFit> {
    window.check_within(spec.len())?;
    let norm = spec.normalized();
    let mut pts = Vec::with_capacity(window.len());
    for j in window.lo..=window.hi {
        let v = norm[j - 1];
        if !(v > 0.0) {
            return Err(Error::domain(format!(
                "zero normalized eigenvalue at rank {j} inside window {window}"
            )));
        }
        pts.push((j, v));
    }
    let fit = loglog_slope(&pts)?;
    Ok(TailFit {
        window,
        alpha: -fit.slope,
        residual: fit.residual,
    })
}

/// Model scale tier, each pinned to one window of the bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScaleTier {
    #[serde(rename = "d12")]
    D12,
    #[serde(rename = "d36")]
    D36,
    #[serde(rename = "d48")]
    D48,
}

impl ScaleTier {
    pub const ALL: [ScaleTier; 3] = [ScaleTier::D12, ScaleTier::D36, ScaleTier::D48];

    pub fn layers(self) -> usize {
        match self {
            ScaleTier::D12 => 12,
            ScaleTier::D36 => 36,
            ScaleTier::D48 => 48,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScaleTier::D12 => "d12",
            ScaleTier::D36 => "d36",
            ScaleTier::D48 => "d48",
        }
    }
}

impl fmt::Display for ScaleTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScaleTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d12" => Ok(ScaleTier::D12),
            "d36" => Ok(ScaleTier::D36),
            "d48" => Ok(ScaleTier::D48),
            other => Err(Error::Config(format!(
                "unknown scale tier `{other}` (expected d12, d36 or d48)"
            ))),
        }
    }
}

/// The tail window for a tier: `[100,200]`, `[200,400]` or `[400,800]`.
pub fn select_window(tier: ScaleTier) -> RankWindow {
    match tier {
        ScaleTier::D12 => RankWindow { lo: 100, hi: 200 },
        ScaleTier::D36 => RankWindow { lo: 200, hi: 400 },
        ScaleTier::D48 => RankWindow { lo: 400, hi: 800 },
    }
}

/// Entropy effective rank `exp(−Σ pⱼ ln pⱼ)` of the normalized spectrum.
pub fn rankme(spec: &Spectrum) -> f64 {
    let h: f64 = spec
        .normalized()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.exp()
}

/// Singular value spectrum of the stacked per-sample gradients (one row per sample).
///
/// The attached normalized form divides by `Σσ`, not `Σσ²`.
pub fn gradient_spectrum<R: AsRef<[f64]>>(rows: &[R]) -> Result<Spectrum> {
    let g = DenseMatrix::from_rows(rows)?;
    gradient_spectrum_of(&g)
}

/// [`gradient_spectrum`] for an already stacked `M × P` matrix.
pub fn gradient_spectrum_of(g: &DenseMatrix) -> Result<Spectrum> {
    Spectrum::new(svd(g)?.singular_values)
}

/// Jensen–Shannon divergence (natural log) between two normalized spectra.
///
/// The shorter spectrum is padded with zeros.
pub fn js_divergence(a: &Spectrum, b: &Spectrum) -> f64 {
    jsd_normalized(a.normalized(), b.normalized())
}

/// Jensen–Shannon divergence between two nonnegative weight vectors, each
/// trace-normalized first and zero-padded to a common length.
pub fn js_divergence_weights(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(jsd_normalized(&trace_normalize(p)?, &trace_normalize(q)?))
}

fn jsd_normalized(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let mut acc = 0.0;
    for i in 0..n {
        let pi = p.get(i).copied().unwrap_or(0.0);
        let qi = q.get(i).copied().unwrap_or(0.0);
        let m = 0.5 * (pi + qi);
        if pi > 0.0 {
            acc += 0.5 * pi * (pi / m).ln();
        }
        if qi > 0.0 {
            acc += 0.5 * qi * (qi / m).ln();
        }
    }
    acc.max(0.0)
}
