//! Closed-form gradient-flow dynamics for the cyclic toy task.
//!
//! On the cyclic group the kernel is diagonalized by Fourier characters, so every
//! quantity here is expressed on real per-mode coefficients and energies: the one-layer
//! linearized model `ȧ_r = −κ_r (a_r − β_r)`, its smooth power-law specialization
//! (learned head, crossover rank, unresolved tail, band recruitment), and the balanced
//! two-layer product dynamics `ṁ_r = 2 m_r (β_r − m_r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{bisect_decreasing, bisect_first_true};
use crate::spectra::Spectrum;

/// `κ·t` at which "t → ∞" limits are evaluated; truncation error is `e^(−50)`.
pub const LIMIT_KAPPA_T: f64 = 50.0;

/// Clean cyclic sequence generator: `x_j = o + ((a + j·d) mod c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicTask {
    pub cycle: u64,
    pub step: u64,
    pub offset: i64,
    pub context: usize,
}

impl CyclicTask {
    pub fn new(cycle: u64, step: u64, offset: i64, context: usize) -> Result<Self> {
        if cycle < 2 {
            return Err(Error::Config(format!("cycle length {cycle} < 2")));
        }
        if step >= cycle {
            return Err(Error::Config(format!("step {step} not in 0..{cycle}")));
        }
        if context < 1 {
            return Err(Error::Config("context length must be at least 1".into()));
        }
        Ok(Self {
            cycle,
            step,
            offset,
            context,
        })
    }

    fn token(&self, phase: u64, j: u64) -> i64 {
        let c = self.cycle as u128;
        let k = (phase as u128 + j as u128 * self.step as u128) % c;
        self.offset + k as i64
    }
}

/// Context tokens and target for phase `a`.
pub fn cyclic_sequence(task: &CyclicTask, phase: u64) -> Result<(Vec<i64>, i64)> {
    if phase >= task.cycle {
        return Err(Error::domain(format!("phase {phase} outside 0..{}", task.cycle)));
    }
    let x = (0..task.context as u64).map(|j| task.token(phase, j)).collect();
    Ok((x, task.token(phase, task.context as u64)))
}

/// One Fourier mode of the linearized one-layer model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub beta: f64,
    pub kappa: f64,
    pub a0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneLayerConfig {
    pub modes: Vec<Mode>,
}

impl OneLayerConfig {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Config("at least one mode is required".into()));
        }
        for (r, m) in modes.iter().enumerate() {
            if !(m.beta.is_finite() && m.kappa.is_finite() && m.a0.is_finite()) {
                return Err(Error::Config(format!("mode {r} has a non-finite entry")));
            }
            if m.kappa < 0.0 {
                return Err(Error::Config(format!("mode {r} has negative rate")));
            }
        }
        Ok(Self { modes })
    }

    /// Zero-initialized modes with the given targets and rates.
    pub fn from_rates(betas: &[f64], kappas: &[f64]) -> Result<Self> {
        if betas.len() != kappas.len() {
            return Err(Error::shape("betas and kappas differ in length"));
        }
        Self::new(
            betas
                .iter()
                .zip(kappas)
                .map(|(&beta, &kappa)| Mode { beta, kappa, a0: 0.0 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_kappa(&self) -> f64 {
        self.modes.iter().fold(0.0, |m, x| m.max(x.kappa))
    }

    pub fn min_kappa(&self) -> f64 {
        self.modes.iter().fold(f64::INFINITY, |m, x| m.min(x.kappa))
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("time {t} must be finite and >= 0")));
        }
        Ok(())
    }
}

/// `a_r(t) = β_r + (a_r(0) − β_r) e^{−κ_r t}` for every mode.
pub fn one_layer_state(cfg: &OneLayerConfig, t: f64) -> Result<Vec<f64>> {
    OneLayerConfig::check_time(t)?;
    Ok(cfg
        .modes
        .iter()
        .map(|m| m.beta + (m.a0 - m.beta) * (-m.kappa * t).exp())
        .collect())
}

/// Right-hand side of the modewise ODE, for integrators.
pub fn one_layer_rhs(cfg: &OneLayerConfig, a: &[f64]) -> Vec<f64> {
    cfg.modes.iter().zip(a).map(|(m, &a)| -m.kappa * (a - m.beta)).collect()
}

/// Per-mode energies in mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEnergies {
    /// Learned energy `|a_r|²`.
    pub activation: Vec<f64>,
    /// Residual energy seen by the update, `κ_r² |β_r − a_r|²`.
    pub gradient: Vec<f64>,
}

pub fn mode_energies(cfg: &OneLayerConfig, t: f64) -> Result<ModeEnergies> {
    let a = one_layer_state(cfg, t)?;
    let activation = a.iter().map(|x| x * x).collect();
    let gradient = cfg
        .modes
        .iter()
        .zip(&a)
        .map(|(m, x)| {
            let r = m.beta - x;
            m.kappa * m.kappa * r * r
        })
        .collect();
    Ok(ModeEnergies { activation, gradient })
}

/// [`mode_energies`] with the constant (DC) mode removed, as it drops out of a
/// centered covariance.
pub fn centered_mode_energies(cfg: &OneLayerConfig, t: f64, dc_mode: usize) -> Result<ModeEnergies> {
    if dc_mode >= cfg.len() {
        return Err(Error::shape(format!(
            "DC mode {dc_mode} out of range for {} modes",
            cfg.len()
        )));
    }
    let mut e = mode_energies(cfg, t)?;
    e.activation.remove(dc_mode);
    e.gradient.remove(dc_mode);
    Ok(e)
}

/// `½ Σ_r |a_r(t) − β_r|²`.
pub fn loss(cfg: &OneLayerConfig, t: f64) -> Result<f64> {
    let a = one_layer_state(cfg, t)?;
    Ok(0.5
        * cfg
            .modes
            .iter()
            .zip(&a)
            .map(|(m, x)| (x - m.beta) * (x - m.beta))
            .sum::<f64>())
}

/// The loss floor reached as `t → ∞` (only frozen modes keep a residual).
pub fn loss_limit(cfg: &OneLayerConfig) -> f64 {
    0.5 * cfg
        .modes
        .iter()
        .filter(|m| m.kappa == 0.0)
        .map(|m| (m.a0 - m.beta) * (m.a0 - m.beta))
        .sum::<f64>()
}

/// The unique time at which the loss equals `level`, by bisection.
pub fn matched_loss_time(cfg: &OneLayerConfig, level: f64) -> Result<f64> {
    let initial = loss(cfg, 0.0)?;
    let floor = loss_limit(cfg);
    if !(level > floor && level < initial) {
        return Err(Error::domain(format!(
            "loss level {level} outside the open range ({floor}, {initial})"
        )));
    }
    let hi = 1.0 / cfg.max_kappa();
    bisect_decreasing(|t| loss(cfg, t).unwrap_or(f64::NAN), level, hi)
        .ok_or_else(|| Error::NoConvergence("matched-loss bracket never crossed".into()))
}

/// `|a_1(t)|² / Σ_r |a_r(t)|²`: the normalized activation mass on the first mode.
pub fn leading_mode_share(cfg: &OneLayerConfig, t: f64) -> Result<f64> {
    let a = one_layer_state(cfg, t)?;
    let total: f64 = a.iter().map(|x| x * x).sum();
    if !(total > 0.0) {
        return Err(Error::degenerate("zero activation mass"));
    }
    Ok(a[0] * a[0] / total)
}

fn check_bands(k: usize, m: usize, allow_full: bool) -> Result<()> {
    let ok = k > 0 && (k < m || (allow_full && k == m));
    if !ok {
        return Err(Error::domain(format!("fast band size {k} invalid for {m} modes")));
    }
    Ok(())
}

/// Early share of learned energy in the fast band, with zero initialization and unit targets.
///
/// `κ_s = κ̄` is accepted and returns `k/m`.
pub fn band_concentration(k: usize, m: usize, kappa_bar: f64, kappa_s: f64, t0: f64) -> Result<f64> {
    check_bands(k, m, false)?;
    if !(t0 > 0.0) {
        return Err(Error::domain(format!("early time {t0} must be positive")));
    }
    if !(kappa_s > 0.0 && kappa_s <= kappa_bar) {
        return Err(Error::domain(format!(
            "rates must satisfy 0 < kappa_s <= kappa_bar, got {kappa_s}, {kappa_bar}"
        )));
    }
    if kappa_s == kappa_bar {
        return Ok(k as f64 / m as f64);
    }
    let fast = k as f64 * (-(-kappa_bar * t0).exp_m1()).powi(2);
    let slow = (m - k) as f64 * (-(-kappa_s * t0).exp_m1()).powi(2);
    Ok(fast / (fast + slow))
}

/// Time at which `½(k e^{−2κ̄T} + (m−k) e^{−2κ_s T}) = ε`.
pub fn time_to_target(k: usize, m: usize, kappa_bar: f64, kappa_s: f64, eps: f64) -> Result<f64> {
    check_bands(k, m, true)?;
    if !(eps > 0.0 && eps < m as f64 / 2.0) {
        return Err(Error::domain(format!("target {eps} outside (0, {})", m as f64 / 2.0)));
    }
    if !(kappa_bar > 0.0) || (k < m && !(kappa_s > 0.0)) {
        return Err(Error::domain("rates must be positive"));
    }
    let (kf, ks) = (k as f64, (m - k) as f64);
    let f = |t: f64| 0.5 * (kf * (-2.0 * kappa_bar * t).exp() + ks * (-2.0 * kappa_s * t).exp());
    bisect_decreasing(f, eps, 1.0 / kappa_bar)
        .ok_or_else(|| Error::NoConvergence("time-to-target bracket never crossed".into()))
}

/// Power-law teacher `β_r² = C r^{−p}` with rates `κ_r = η r^{−q}` over ranks `1..=ranks`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSpectrumConfig {
    pub scale: f64,
    pub p: f64,
    pub eta: f64,
    pub q: f64,
    pub ranks: usize,
}

impl SmoothSpectrumConfig {
    pub fn new(scale: f64, p: f64, eta: f64, q: f64, ranks: usize) -> Result<Self> {
        if !(scale > 0.0 && p > 0.0 && eta > 0.0) {
            return Err(Error::Config("scale, p and eta must be positive".into()));
        }
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::Config("q must be finite and nonnegative".into()));
        }
        if ranks < 1 {
            return Err(Error::Config("ranks must be at least 1".into()));
        }
        Ok(Self {
            scale,
            p,
            eta,
            q,
            ranks,
        })
    }

    pub fn rate(&self, r: usize) -> f64 {
        self.eta * (r as f64).powf(-self.q)
    }

    /// The equivalent zero-initialized one-layer model (`β_r = √(C r^{−p})`).
    pub fn as_one_layer(&self) -> OneLayerConfig {
        OneLayerConfig {
            modes: (1..=self.ranks)
                .map(|r| Mode {
                    beta: (self.scale * (r as f64).powf(-self.p)).sqrt(),
                    kappa: self.rate(r),
                    a0: 0.0,
                })
                .collect(),
        }
    }
}

/// `λ_r = C r^{−p} (1 − e^{−η t r^{−q}})²` for `r = 1..=ranks`, descending.
pub fn smooth_act_eigenvalues(cfg: &SmoothSpectrumConfig, t: f64) -> Result<Vec<f64>> {
    OneLayerConfig::check_time(t)?;
    Ok((1..=cfg.ranks)
        .map(|r| {
            let x = cfg.rate(r) * t;
            cfg.scale * (r as f64).powf(-cfg.p) * (-x).exp_m1().powi(2)
        })
        .collect())
}

/// [`smooth_act_eigenvalues`] as a normalized spectrum (degenerate at `t = 0`).
pub fn smooth_act_spectrum(cfg: &SmoothSpectrumConfig, t: f64) -> Result<Spectrum> {
    Spectrum::new(smooth_act_eigenvalues(cfg, t)?)
}

/// Crossover rank `r_* = (η t)^{1/q}` between learned head and unresolved tail.
pub fn crossover_rank(cfg: &SmoothSpectrumConfig, t: f64) -> Result<f64> {
    if cfg.q == 0.0 {
        return Err(Error::domain("no crossover rank when q = 0"));
    }
    if !(t > 0.0) {
        return Err(Error::domain("crossover rank needs t > 0"));
    }
    Ok((cfg.eta * t).powf(1.0 / cfg.q))
}

/// Unresolved-tail exponent `p + 2q`.
pub fn tail_alpha(cfg: &SmoothSpectrumConfig) -> f64 {
    cfg.p + 2.0 * cfg.q
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("tolerance {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Time for every mode `r ≤ R` to reach `(1 − δ) β_r`: `ln(1/δ) R^q / η`.
pub fn band_recruitment_time(cfg: &SmoothSpectrumConfig, cutoff: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if cutoff < 1 {
        return Err(Error::domain("cutoff rank must be at least 1"));
    }
    Ok((1.0 / delta).ln() / cfg.eta * (cutoff as f64).powf(cfg.q))
}

/// Bisection route for [`band_recruitment_time`]: first time at which every mode up to
/// `cutoff` satisfies `a_r(t) ≥ (1−δ) β_r`, checking each mode explicitly.
pub fn band_recruitment_time_bisect(cfg: &SmoothSpectrumConfig, cutoff: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if cutoff < 1 {
        return Err(Error::domain("cutoff rank must be at least 1"));
    }
    let recruited = |t: f64| {
        (1..=cutoff).all(|r| {
            // a_r/β_r under zero initialization
            let progress = -(-cfg.rate(r) * t).exp_m1();
            progress >= 1.0 - delta
        })
    };
    bisect_first_true(recruited, 1.0 / cfg.eta)
        .ok_or_else(|| Error::NoConvergence("recruitment bracket never crossed".into()))
}

/// Early head anchor: mode `rank` has reached fraction `progress` of its target at time `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadAnchor {
    pub rank: usize,
    pub progress: f64,
    pub t0: f64,
}

impl HeadAnchor {
    pub fn new(rank: usize, progress: f64, t0: f64) -> Result<Self> {
        if rank < 1 {
            return Err(Error::domain("anchor rank must be at least 1"));
        }
        if !(progress > 0.0 && progress < 1.0) {
            return Err(Error::domain(format!("anchor progress {progress} outside (0, 1)")));
        }
        if !(t0 > 0.0) {
            return Err(Error::domain("anchor time must be positive"));
        }
        Ok(Self { rank, progress, t0 })
    }

    /// The rate scale `η = −t0⁻¹ r_h^q ln(1 − ξ)` implied by the anchor.
    pub fn implied_eta(&self, q: f64) -> f64 {
        -(self.rank as f64).powf(q) * (-self.progress).ln_1p() / self.t0
    }
}

/// Recruitment time to cutoff `R` for a run matched at the head anchor:
/// `ln(1/δ) / (−ln(1−ξ)) · t0 · (R/r_h)^q`.
pub fn head_matched_time(q: f64, anchor: &HeadAnchor, cutoff: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if cutoff <= anchor.rank {
        return Err(Error::domain(format!(
            "cutoff {cutoff} must exceed the anchor rank {}",
            anchor.rank
        )));
    }
    let ratio = cutoff as f64 / anchor.rank as f64;
    Ok((1.0 / delta).ln() / -(-anchor.progress).ln_1p() * anchor.t0 * ratio.powf(q))
}

/// Time at which the update-side energies `κ² e^{−2κt}` of two modes cross.
pub fn grad_crossover_time(kappa_i: f64, kappa_j: f64) -> Result<f64> {
    if !(kappa_j > 0.0 && kappa_i > kappa_j) {
        return Err(Error::domain(format!(
            "need kappa_i > kappa_j > 0, got {kappa_i}, {kappa_j}"
        )));
    }
    Ok((kappa_i / kappa_j).ln() / (kappa_i - kappa_j))
}

/// One mode of the balanced two-layer factor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerMode {
    pub beta: f64,
    pub m0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerConfig {
    pub modes: Vec<TwoLayerMode>,
}

impl TwoLayerConfig {
    pub fn new(modes: Vec<TwoLayerMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Config("at least one mode is required".into()));
        }
        for (r, m) in modes.iter().enumerate() {
            if !(m.m0 > 0.0 && m.m0.is_finite()) {
                return Err(Error::Config(format!("mode {r}: initial product must be positive")));
            }
            if !(m.beta >= 0.0 && m.beta.is_finite()) {
                return Err(Error::Config(format!("mode {r}: target must be >= 0")));
            }
        }
        Ok(Self { modes })
    }
}

/// Products `m_r(t)`: logistic for `β_r > 0`, `m0/(1 + 2 m0 t)` for `β_r = 0`.
pub fn two_layer_state(cfg: &TwoLayerConfig, t: f64) -> Result<Vec<f64>> {
    OneLayerConfig::check_time(t)?;
    Ok(cfg
        .modes
        .iter()
        .map(|m| {
            if m.beta > 0.0 {
                m.beta / (1.0 + (m.beta / m.m0 - 1.0) * (-2.0 * m.beta * t).exp())
            } else {
                m.m0 / (1.0 + 2.0 * m.m0 * t)
            }
        })
        .collect())
}

/// Right-hand side `2 m_r (β_r − m_r)`, for integrators.
pub fn two_layer_rhs(cfg: &TwoLayerConfig, m: &[f64]) -> Vec<f64> {
    cfg.modes
        .iter()
        .zip(m)
        .map(|(mode, &x)| 2.0 * x * (mode.beta - x))
        .collect()
}

/// Share of total mass on the index set `band` (0-based mode indices).
pub fn band_statistic(masses: &[f64], band: &[usize]) -> Result<f64> {
    if band.is_empty() {
        return Err(Error::domain("empty band"));
    }
    let mut seen = vec![false; masses.len()];
    let mut inside = 0.0;
    for &r in band {
        if r >= masses.len() {
            return Err(Error::shape(format!(
                "band index {r} out of range for {} modes",
                masses.len()
            )));
        }
        if !seen[r] {
            seen[r] = true;
            inside += masses[r];
        }
    }
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::degenerate("zero total mass"));
    }
    Ok(inside / total)
}
