//! Named oracle suites. Each target re-derives one analytic result through an
//! independent numerical route (RK4, bisection, grids, optimality conditions) on
//! seeded random instances and reports every invariant as pass or fail.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    band_concentration, band_recruitment_time, band_recruitment_time_bisect, band_statistic, centered_mode_energies,
    crossover_rank, cyclic_sequence, grad_crossover_time, head_matched_time, leading_mode_share, loss,
    matched_loss_time, mode_energies, one_layer_rhs, one_layer_state, smooth_act_eigenvalues, smooth_act_spectrum,
    tail_alpha, time_to_target, two_layer_rhs, two_layer_state, CyclicTask, HeadAnchor, Mode, OneLayerConfig,
    SmoothSpectrumConfig, TwoLayerConfig, TwoLayerMode,
};
use crate::error::{Error, Result};
use crate::mechanisms::{
    absolute_score, muon_descent_check, nuclear_maximizer_check, random_unit_opnorm, relative_rope_score, rope_score,
    shift_equivariance_residual, strict_descent_limit, EmbeddingPair, RotaryFamily, ScoreProbe, ROPE_BASE,
};
use crate::numkernel::{polar_factor, svd, sym_eig, DenseMatrix, DEFAULT_RANK_TOL};
use crate::oracle::rk4;
use crate::spectra::{band_alpha, RankWindow};

pub const DEFAULT_SEED: u64 = 42;

/// Every valid target name, in report order.
pub const TARGETS: &[&str] = &[
    "cyclic-shift",
    "modewise-dynamics",
    "second-moments",
    "matched-loss",
    "band-concentration",
    "three-zone",
    "band-recruitment",
    "head-matched",
    "crossover-rank",
    "complementarity",
    "two-layer",
    "monotone-band",
    "rope-equivariance",
    "absolute-positions",
    "untied-expressivity",
    "tied-error",
    "idealized-muon",
];

/// Optional overrides read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Number of random instances; each target has its own default.
    #[serde(default)]
    pub cases: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn at_most(name: impl Into<String>, worst: f64, tol: f64) -> Check {
    check(name, worst <= tol, format!("max {worst:.3e} (limit {tol:.0e})"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub target: String,
    pub seed: u64,
    pub cases: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}/{}: {}", self.target, c.name, c.detail)?;
        }
        let status = if self.passed() { "passed" } else { "FAILED" };
        write!(
            f,
            "{}: {status} ({} checks, seed {}, {} cases)",
            self.target,
            self.checks.len(),
            self.seed,
            self.cases
        )
    }
}

pub fn is_target(name: &str) -> bool {
    TARGETS.contains(&name)
}

/// Runs one named suite.
pub fn run(target: &str, seed: u64, config: &VerifyConfig) -> Result<Report> {
    let default_cases = match target {
        "rope-equivariance" => 100,
        "modewise-dynamics" | "two-layer" => 50,
        "three-zone" | "band-recruitment" | "head-matched" => 1,
        _ => 20,
    };
    let cases = config.cases.unwrap_or(default_cases).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let checks = match target {
        "cyclic-shift" => cyclic_shift(rng, cases)?,
        "modewise-dynamics" => modewise_dynamics(rng, cases)?,
        "second-moments" => second_moments(rng, cases)?,
        "matched-loss" => matched_loss(rng, cases)?,
        "band-concentration" => band_concentration_suite(rng, cases)?,
        "three-zone" => three_zone()?,
        "band-recruitment" => band_recruitment()?,
        "head-matched" => head_matched()?,
        "crossover-rank" => crossover(rng, cases)?,
        "complementarity" => complementarity(rng, cases)?,
        "two-layer" => two_layer(rng, cases)?,
        "monotone-band" => monotone_band(rng, cases)?,
        "rope-equivariance" => rope_equivariance(rng, cases)?,
        "absolute-positions" => absolute_positions(rng, cases)?,
        "untied-expressivity" => untied_expressivity(rng, cases)?,
        "tied-error" => tied_error(rng, cases)?,
        "idealized-muon" => idealized_muon(rng, cases)?,
        other => {
            return Err(Error::Config(format!(
                "unknown verify target `{other}`; valid targets: {}",
                TARGETS.join(", ")
            )))
        }
    };
    Ok(Report {
        target: target.to_string(),
        seed,
        cases,
        checks,
    })
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite entries")
}

fn uniform_seq(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn cyclic_shift(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut phase_ok = true;
    let mut orbit_ok = true;
    for _ in 0..cases {
        let c = rng.gen_range(2..60u64);
        let d = rng.gen_range(0..c);
        let task = CyclicTask::new(c, d, rng.gen_range(-20..20), rng.gen_range(1..10))?;
        let bump = |x: i64| task.offset + (x - task.offset + 1).rem_euclid(c as i64);
        for a in 0..c {
            let (x, y) = cyclic_sequence(&task, a)?;
            let (x1, y1) = cyclic_sequence(&task, (a + 1) % c)?;
            phase_ok &= x1 == x.iter().map(|&v| bump(v)).collect::<Vec<_>>() && y1 == bump(y);
            let (xd, yd) = cyclic_sequence(&task, (a + d) % c)?;
            let mut expect: Vec<i64> = x[1..].to_vec();
            expect.push(y);
            orbit_ok &= xd == expect && (task.context > 1 || yd == cyclic_sequence(&task, (a + 2 * d) % c)?.0[0]);
        }
    }
    Ok(vec![
        check(
            "phase-increment-commutes",
            phase_ok,
            format!("{cases} tasks, every phase"),
        ),
        check(
            "orbit-advance-is-one-step",
            orbit_ok,
            format!("{cases} tasks, every phase"),
        ),
    ])
}

fn random_one_layer(rng: &mut ChaCha8Rng) -> Result<OneLayerConfig> {
    let m = rng.gen_range(1..=8);
    OneLayerConfig::new(
        (0..m)
            .map(|_| Mode {
                beta: rng.gen_range(-2.0..2.0),
                kappa: rng.gen_range(0.1..2.0),
                a0: rng.gen_range(-1.0..1.0),
            })
            .collect(),
    )
}

/// Integrates an autonomous system segment by segment and returns the state at each grid time.
fn rk4_path<F>(f: F, y0: &[f64], times: &[f64], step: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut y = y0.to_vec();
    let mut last = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        y = rk4(|_, y| f(y), &y, t - last, step);
        last = t;
        out.push(y.clone());
    }
    out
}

fn modewise_dynamics(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut monotone = true;
    for _ in 0..cases {
        let cfg = random_one_layer(rng)?;
        let t_end = 10.0 / cfg.min_kappa();
        let times: Vec<f64> = (1..=20).map(|k| t_end * k as f64 / 20.0).collect();
        let path = rk4_path(
            |a| one_layer_rhs(&cfg, a),
            &cfg.modes.iter().map(|m| m.a0).collect::<Vec<_>>(),
            &times,
            1e-3 / cfg.max_kappa(),
        );
        for (t, y) in times.iter().zip(&path) {
            let exact = one_layer_state(&cfg, *t)?;
            for (a, b) in exact.iter().zip(y) {
                worst = worst.max((a - b).abs());
            }
        }
        let mut inside = cfg.clone();
        for m in inside.modes.iter_mut() {
            m.a0 = m.beta * rng.gen_range(0.0..1.0);
        }
        let mut prev = loss(&inside, 0.0)?;
        for k in 1..=200 {
            let l = loss(&inside, t_end * k as f64 / 200.0)?;
            monotone &= l <= prev;
            prev = l;
        }
    }
    Ok(vec![
        at_most("closed-form-vs-rk4", worst, 1e-8),
        check(
            "loss-nonincreasing",
            monotone,
            format!("{cases} configs, 200-point grid"),
        ),
    ])
}

fn second_moments(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut ordered = true;
    let mut centered_ok = true;
    for _ in 0..cases {
        let cfg = random_one_layer(rng)?;
        for k in 0..10 {
            let t = k as f64 / cfg.min_kappa();
            let a = one_layer_state(&cfg, t)?;
            let e = mode_energies(&cfg, t)?;
            let v = one_layer_rhs(&cfg, &a);
            for r in 0..cfg.len() {
                worst = worst.max((e.activation[r] - a[r] * a[r]).abs());
                worst = worst.max((e.gradient[r] - v[r] * v[r]).abs());
            }
            let dc = k % cfg.len();
            let c = centered_mode_energies(&cfg, t, dc)?;
            let mut expect = e.activation.clone();
            expect.remove(dc);
            centered_ok &= c.activation == expect && c.gradient.len() == cfg.len() - 1;
        }
        let zero = OneLayerConfig::from_rates(
            &cfg.modes.iter().map(|m| m.beta).collect::<Vec<_>>(),
            &cfg.modes.iter().map(|m| m.kappa).collect::<Vec<_>>(),
        )?;
        let mut prev = mode_energies(&zero, 0.0)?;
        for k in 1..=100 {
            let e = mode_energies(&zero, k as f64 * 0.1 / zero.min_kappa())?;
            for r in 0..zero.len() {
                ordered &= e.activation[r] >= prev.activation[r] && e.gradient[r] <= prev.gradient[r];
            }
            prev = e;
        }
    }
    Ok(vec![
        at_most("energies-match-state-and-velocity", worst, 1e-12),
        check("centering-drops-dc-mode", centered_ok, format!("{cases} configs")),
        check(
            "activation-grows-gradient-decays",
            ordered,
            "zero initialization, 100-point grid",
        ),
    ])
}

fn matched_loss(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let fractions = [0.9, 0.7, 0.5, 0.3, 0.1];
    let mut min_margin = f64::INFINITY;
    let mut iso_worst = 0.0_f64;
    let mut match_worst = 0.0_f64;
    for _ in 0..cases {
        let m = rng.gen_range(2..=8);
        let mut kappas: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..3.0)).collect();
        kappas.sort_by(|a, b| b.total_cmp(a));
        kappas.dedup();
        let cfg = OneLayerConfig::from_rates(&vec![1.0; kappas.len()], &kappas)?;
        let iso = OneLayerConfig::from_rates(&vec![1.0; m], &vec![kappas[0]; m])?;
        for f in fractions {
            for (c, isotropic) in [(&cfg, false), (&iso, true)] {
                let level = f * loss(c, 0.0)?;
                let t = matched_loss_time(c, level)?;
                match_worst = match_worst.max(rel(loss(c, t)?, level));
                let gap = leading_mode_share(c, t)? - 1.0 / c.len() as f64;
                if isotropic {
                    iso_worst = iso_worst.max(gap.abs());
                } else if c.len() > 1 {
                    min_margin = min_margin.min(gap);
                }
            }
        }
    }
    Ok(vec![
        at_most("bisected-time-matches-level", match_worst, 1e-10),
        check(
            "anisotropic-share-exceeds-uniform",
            min_margin > 0.0,
            format!("min margin {min_margin:.3e} over {cases} configs x 5 levels"),
        ),
        at_most("isotropic-share-is-uniform", iso_worst, 1e-12),
    ])
}

fn band_concentration_suite(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut above = true;
    let mut limit_worst = 0.0_f64;
    let mut equal_worst = 0.0_f64;
    let mut target_worst = 0.0_f64;
    let mut faster_sooner = true;
    for _ in 0..cases {
        let m = rng.gen_range(2..20);
        let k = rng.gen_range(1..m);
        let ks = rng.gen_range(0.05..1.0);
        let kb = ks * rng.gen_range(1.1..10.0);
        let (kf, sf) = (k as f64, (m - k) as f64);
        for t0 in [1e-3, 0.1, 1.0, 10.0] {
            above &= band_concentration(k, m, kb, ks, t0)? > kf / m as f64;
        }
        let small = band_concentration(k, m, kb, ks, 1e-7)?;
        let lim = kf * kb * kb / (kf * kb * kb + sf * ks * ks);
        limit_worst = limit_worst.max((small - lim).abs());
        equal_worst = equal_worst.max((band_concentration(k, m, kb, kb, 1.0)? - kf / m as f64).abs());
        let eps = rng.gen_range(0.01..0.4) * m as f64 / 2.0;
        let t = time_to_target(k, m, kb, ks, eps)?;
        let residual = 0.5 * (kf * (-2.0 * kb * t).exp() + sf * (-2.0 * ks * t).exp());
        target_worst = target_worst.max(rel(residual, eps));
        faster_sooner &= time_to_target(k, m, 2.0 * kb, ks, eps)? <= t;
    }
    Ok(vec![
        check(
            "fast-band-share-exceeds-k-over-m",
            above,
            format!("{cases} configs x 4 times"),
        ),
        at_most("small-time-limit", limit_worst, 1e-6),
        at_most("equal-rate-branch", equal_worst, 1e-15),
        at_most("time-to-target-hits-level", target_worst, 1e-10),
        check(
            "faster-band-reaches-target-sooner",
            faster_sooner,
            format!("{cases} configs"),
        ),
    ])
}

/// Fitted head and deep-tail exponents of the smooth spectrum with `r* = 2000` and
/// `ranks = 400 r*`, for one `(p, q)` cell.
pub fn three_zone_cell(p: f64, q: f64) -> Result<(f64, f64)> {
    let r_star = 2000usize;
    let cfg = SmoothSpectrumConfig::new(1.0, p, 1.0, q, 400 * r_star)?;
    let t = (r_star as f64).powf(q);
    let spec = smooth_act_spectrum(&cfg, t)?;
    let head = band_alpha(&spec, RankWindow::new(1, r_star / 200)?)?;
    let tail = band_alpha(&spec, RankWindow::new(200 * r_star, 400 * r_star)?)?;
    Ok((head.alpha, tail.alpha))
}

fn three_zone() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for p in [0.5, 1.0] {
        for q in [0.25, 0.5, 1.0] {
            let (head, tail) = three_zone_cell(p, q)?;
            let (eh, et) = (rel(head, p), rel(tail, p + 2.0 * q));
            checks.push(check(
                format!("head-alpha(p={p},q={q})"),
                eh <= 0.05,
                format!("{head:.4} vs p = {p}, rel err {eh:.3e} (limit 5e-2)"),
            ));
            checks.push(check(
                format!("tail-alpha(p={p},q={q})"),
                et <= 0.05,
                format!("{tail:.4} vs p+2q = {}, rel err {et:.3e} (limit 5e-2)", p + 2.0 * q),
            ));
        }
    }
    Ok(checks)
}

fn band_recruitment() -> Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut n = 0;
    for eta in [0.1, 0.5, 2.0, 10.0] {
        for q in [0.25, 0.5, 1.0, 1.5] {
            for cutoff in [1, 10, 100, 1000] {
                for delta in [0.5, (-1.0f64).exp(), 0.01] {
                    let cfg = SmoothSpectrumConfig::new(1.0, 1.0, eta, q, cutoff)?;
                    let closed = band_recruitment_time(&cfg, cutoff, delta)?;
                    let bisected = band_recruitment_time_bisect(&cfg, cutoff, delta)?;
                    worst = worst.max(rel(bisected, closed));
                    n += 1;
                }
            }
        }
    }
    Ok(vec![check(
        "closed-form-vs-bisection",
        worst <= 1e-9,
        format!("max rel {worst:.3e} (limit 1e-9) over {n} grid points"),
    )])
}

fn head_matched() -> Result<Vec<Check>> {
    let anchor = HeadAnchor::new(10, 0.6, 3.0)?;
    let qs = [0.25, 0.5, 0.75, 1.0, 1.5];
    let mut ordered = true;
    let mut consistent = 0.0_f64;
    let mut anchored = 0.0_f64;
    for ratio in [2usize, 4, 8, 16] {
        let cutoff = ratio * anchor.rank;
        for w in qs.windows(2) {
            ordered &=
                head_matched_time(w[0], &anchor, cutoff, 0.05)? < head_matched_time(w[1], &anchor, cutoff, 0.05)?;
        }
        for &q in &qs {
            let eta = anchor.implied_eta(q);
            let cfg = SmoothSpectrumConfig::new(1.0, 1.0, eta, q, cutoff)?;
            consistent = consistent.max(rel(
                head_matched_time(q, &anchor, cutoff, 0.05)?,
                band_recruitment_time(&cfg, cutoff, 0.05)?,
            ));
            let progress = -(-cfg.rate(anchor.rank) * anchor.t0).exp_m1();
            anchored = anchored.max((progress - anchor.progress).abs());
        }
    }
    Ok(vec![
        check("smaller-q-recruits-sooner", ordered, "R/r_h in {2,4,8,16}, 5 exponents"),
        at_most("matches-recruitment-at-implied-rate", consistent, 1e-12),
        at_most("anchor-progress-reproduced", anchored, 1e-12),
    ])
}

fn crossover(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let gain = (-(-1.0f64).exp_m1()).powi(2);
    let mut rank_worst = 0.0_f64;
    let mut gain_worst = 0.0_f64;
    let mut scaling_worst = 0.0_f64;
    let mut alpha_ok = true;
    for _ in 0..cases {
        let p = rng.gen_range(0.2..2.0);
        let q = rng.gen_range(0.2..2.0);
        let eta = rng.gen_range(0.1..5.0);
        let r_star = rng.gen_range(5..200usize);
        let cfg = SmoothSpectrumConfig::new(rng.gen_range(0.5..2.0), p, eta, q, r_star)?;
        let t = (r_star as f64).powf(q) / eta;
        rank_worst = rank_worst.max(rel(crossover_rank(&cfg, t)?, r_star as f64));
        let lam = smooth_act_eigenvalues(&cfg, t)?[r_star - 1];
        gain_worst = gain_worst.max(rel(lam / (cfg.scale * (r_star as f64).powf(-p)), gain));
        scaling_worst = scaling_worst.max(rel(
            crossover_rank(&cfg, 2.0 * t)?,
            crossover_rank(&cfg, t)? * 2f64.powf(1.0 / q),
        ));
        alpha_ok &= tail_alpha(&cfg) == p + 2.0 * q;
    }
    Ok(vec![
        at_most("crossover-rank-inverts-rate", rank_worst, 1e-12),
        at_most("progress-at-crossover", gain_worst, 1e-12),
        at_most("crossover-grows-as-t-power", scaling_worst, 1e-12),
        check("tail-exponent-is-p-plus-2q", alpha_ok, format!("{cases} configs")),
    ])
}

fn complementarity(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let grid = 1000;
    let mut single_flip = true;
    let mut located = true;
    let mut activation_stable = true;
    for _ in 0..cases {
        let kj = rng.gen_range(0.1..2.0);
        let ki = kj * rng.gen_range(1.2..5.0);
        let t_ij = grad_crossover_time(ki, kj)?;
        let cfg = OneLayerConfig::from_rates(&[1.0, 1.0], &[ki, kj])?;
        let t_end = 3.7 * t_ij;
        let h = t_end / grid as f64;
        let mut flips = Vec::new();
        let mut prev_sign = None;
        for k in 0..=grid {
            let t = k as f64 * h;
            let e = mode_energies(&cfg, t)?;
            let sign = (e.gradient[0] - e.gradient[1]).signum();
            if let Some(s) = prev_sign {
                if s != sign {
                    flips.push(t);
                }
            }
            prev_sign = Some(sign);
            if k > 0 {
                activation_stable &= e.activation[0] > e.activation[1];
            }
        }
        single_flip &= flips.len() == 1;
        located &= flips.len() == 1 && (flips[0] - 0.5 * h - t_ij).abs() <= 0.5 * h;
    }
    Ok(vec![
        check(
            "gradient-gap-flips-once",
            single_flip,
            format!("{cases} rate pairs, {grid}-point grid"),
        ),
        check("flip-at-crossover-time", located, "within one grid step"),
        check(
            "activation-order-never-flips",
            activation_stable,
            format!("{cases} rate pairs"),
        ),
    ])
}

fn random_two_layer(rng: &mut ChaCha8Rng, support: Option<&[bool]>) -> Result<TwoLayerConfig> {
    let m = support.map_or_else(|| rng.gen_range(1..=8), <[bool]>::len);
    TwoLayerConfig::new(
        (0..m)
            .map(|r| {
                let on = support.map_or_else(|| rng.gen_bool(0.7), |s| s[r]);
                TwoLayerMode {
                    beta: if on { rng.gen_range(0.2..2.0) } else { 0.0 },
                    m0: rng.gen_range(1e-3..0.1),
                }
            })
            .collect(),
    )
}

fn two_layer(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut shape_ok = true;
    for _ in 0..cases {
        let cfg = random_two_layer(rng, None)?;
        let rate = cfg.modes.iter().map(|m| 2.0 * m.beta.max(m.m0)).fold(0.0, f64::max);
        let slow = cfg
            .modes
            .iter()
            .filter(|m| m.beta > 0.0)
            .map(|m| 2.0 * m.beta)
            .fold(f64::INFINITY, f64::min);
        let t_end = 10.0 / if slow.is_finite() { slow } else { rate };
        let times: Vec<f64> = (1..=20).map(|k| t_end * k as f64 / 20.0).collect();
        let m0: Vec<f64> = cfg.modes.iter().map(|m| m.m0).collect();
        let path = rk4_path(|m| two_layer_rhs(&cfg, m), &m0, &times, 1e-3 / rate);
        let mut prev = m0.clone();
        for (t, y) in times.iter().zip(&path) {
            let exact = two_layer_state(&cfg, *t)?;
            for (r, (a, b)) in exact.iter().zip(y).enumerate() {
                worst = worst.max((a - b).abs());
                let mode = cfg.modes[r];
                if mode.beta == 0.0 {
                    shape_ok &= *a < prev[r];
                } else if prev[r] < mode.beta {
                    shape_ok &= *a > prev[r] && *a <= mode.beta;
                }
            }
            prev = exact;
        }
    }
    Ok(vec![
        at_most("closed-form-vs-rk4", worst, 1e-8),
        check(
            "off-target-decays-on-target-grows",
            shape_ok,
            format!("{cases} configs, 20-point grid"),
        ),
    ])
}

fn monotone_band(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let grid = 1000;
    let mut strictly = true;
    let mut points = 0usize;
    for _ in 0..cases {
        let m = rng.gen_range(2..=10);
        let mut support: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.5)).collect();
        support[0] = true;
        support[m - 1] = false;
        let cfg = random_two_layer(rng, Some(&support))?;
        let band: Vec<usize> = (0..m).filter(|&r| support[r]).collect();
        let slow = cfg
            .modes
            .iter()
            .filter(|x| x.beta > 0.0)
            .map(|x| 2.0 * x.beta)
            .fold(f64::INFINITY, f64::min);
        let t_end = 10.0 / slow;
        let mut prev = None;
        for k in 0..=grid {
            let masses = two_layer_state(&cfg, t_end * k as f64 / grid as f64)?;
            let off: f64 = (0..m).filter(|&r| !support[r]).map(|r| masses[r]).sum();
            let h = band_statistic(&masses, &band)?;
            if let Some(p) = prev {
                if off > 1e-12 {
                    strictly &= h > p;
                    points += 1;
                }
            }
            prev = Some(h);
        }
    }
    Ok(vec![check(
        "band-share-strictly-increases",
        strictly,
        format!("{cases} trajectories, {points} grid steps with off-band mass > 1e-12"),
    )])
}

fn rope_equivariance(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut worst = 0.0_f64;
    let mut relative_worst = 0.0_f64;
    for _ in 0..cases {
        let d = 2 * rng.gen_range(1..=4);
        let m = rng.gen_range(2..=6);
        let n = rng.gen_range(2..=8);
        let tau = rng.gen_range(1..=16);
        let probe = ScoreProbe::new(uniform_matrix(rng, d, m), uniform_matrix(rng, d, m))?;
        let rotary = RotaryFamily::new(d, ROPE_BASE)?;
        let x = uniform_seq(rng, n, m);
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let base = rope_score(&probe, &rotary, &x, i, j)?;
        let shifted = crate::mechanisms::shift_sequence(&x, tau);
        worst = worst.max((rope_score(&probe, &rotary, &shifted, i + tau, j + tau)? - base).abs());
        worst = worst.max(shift_equivariance_residual(
            |s, a, b| rope_score(&probe, &rotary, s, a, b),
            std::slice::from_ref(&x),
            tau,
        )?);
        relative_worst = relative_worst.max((relative_rope_score(&probe, &rotary, &x, i, j)? - base).abs());
    }
    Ok(vec![
        at_most("shift-residual", worst, 1e-10),
        at_most("relative-rotation-identity", relative_worst, 1e-10),
    ])
}

/// Orthonormal basis of the common null space of the rows of `a`.
fn null_basis(a: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
    let eig = sym_eig(&a.gram())?;
    let top = eig.eigenvalues[0];
    Ok((0..a.cols())
        .filter(|&j| eig.eigenvalues[j] <= 1e-12 * top)
        .map(|j| eig.eigenvector(j))
        .collect())
}

fn absolute_positions(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut min_break = f64::INFINITY;
    let mut constant_worst = 0.0_f64;
    let mut hidden_worst = 0.0_f64;
    for _ in 0..cases {
        let d = rng.gen_range(1..=3);
        let m = 2 * d + 2;
        let n = rng.gen_range(3..=6);
        let tau = rng.gen_range(1..=4);
        let (wq, wk) = (uniform_matrix(rng, d, m), uniform_matrix(rng, d, m));
        let probe = ScoreProbe::new(wq.clone(), wk.clone())?;
        let seqs = vec![uniform_seq(rng, n, m)];

        let mut broken = 0.0_f64;
        for _attempt in 0..2 {
            let table = uniform_seq(rng, n + tau, m);
            let p = probe.clone().with_table(table)?;
            broken = shift_equivariance_residual(|x, i, j| absolute_score(&p, x, i, j), &seqs, tau)?;
            if broken > 1e-3 {
                break;
            }
        }
        min_break = min_break.min(broken);

        let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let constant = probe.clone().with_table(vec![c.clone(); n + tau])?;
        constant_worst = constant_worst.max(shift_equivariance_residual(
            |x, i, j| absolute_score(&constant, x, i, j),
            &seqs,
            tau,
        )?);

        let mut stacked = wq.as_slice().to_vec();
        stacked.extend_from_slice(wk.as_slice());
        let null = null_basis(&DenseMatrix::new(2 * d, m, stacked)?)?;
        let hidden_table: Vec<Vec<f64>> = (0..n + tau)
            .map(|_| {
                let mut p = c.clone();
                for v in &null {
                    let w = rng.gen_range(-1.0..1.0);
                    for (pi, vi) in p.iter_mut().zip(v) {
                        *pi += w * vi;
                    }
                }
                p
            })
            .collect();
        let hidden = probe.with_table(hidden_table)?;
        hidden_worst = hidden_worst.max(shift_equivariance_residual(
            |x, i, j| absolute_score(&hidden, x, i, j),
            &seqs,
            tau,
        )?);
    }
    Ok(vec![
        check(
            "generic-table-breaks-equivariance",
            min_break > 1e-3,
            format!("min residual {min_break:.3e} (must exceed 1e-3)"),
        ),
        at_most("constant-table-equivariant", constant_worst, 1e-10),
        at_most("projected-constant-table-equivariant", hidden_worst, 1e-10),
    ])
}

fn random_embedding(rng: &mut ChaCha8Rng) -> Result<(usize, usize, EmbeddingPair)> {
    loop {
        let d = rng.gen_range(1..=8);
        let v = rng.gen_range(d + 1..=32);
        if let Ok(pair) = EmbeddingPair::new(uniform_matrix(rng, d, v)) {
            return Ok((d, v, pair));
        }
    }
}

/// `‖E (M E − T)ᵀ‖_F`-style normal-equation residuals for the two fits.
fn normal_residuals(e: &DenseMatrix, t: &DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) -> Result<(f64, f64)> {
    let tied = e.transpose().matmul(a)?.matmul(e)?.sub(t)?;
    let tied_grad = e.matmul(&tied)?.matmul(&e.transpose())?;
    let untied = b.matmul(e)?.sub(t)?;
    let untied_grad = untied.matmul(&e.transpose())?;
    Ok((tied_grad.frobenius_norm(), untied_grad.frobenius_norm()))
}

fn untied_expressivity(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut sandwich = true;
    let mut witness_untied = 0.0_f64;
    let mut witness_ratio = f64::INFINITY;
    for _ in 0..cases {
        let (_, v, pair) = random_embedding(rng)?;
        let t = uniform_matrix(rng, v, v);
        let lower = pair.tied_projection_residual(&t)?;
        let (_, tied) = pair.best_tied_fit(&t)?;
        let (_, untied) = pair.untied_fit(&t)?;
        sandwich &= lower >= 0.0 && tied >= lower - 1e-9 && untied <= tied + 1e-9;

        let p = pair.output_projector();
        let g: Vec<f64> = (0..v).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pg = p.apply(&g)?;
        let u: Vec<f64> = g.iter().zip(&pg).map(|(a, b)| a - b).collect();
        let w = p.apply(&(0..v).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())?;
        let mut witness = DenseMatrix::zeros(v, v);
        for (a, ua) in u.iter().enumerate() {
            for (b, wb) in w.iter().enumerate() {
                witness.set(a, b, ua * wb);
            }
        }
        let norm = witness.frobenius_norm();
        witness_untied = witness_untied.max(pair.untied_fit(&witness)?.1);
        witness_ratio = witness_ratio.min(pair.best_tied_fit(&witness)?.1 / norm);
    }
    Ok(vec![
        check(
            "tied-above-bound-untied-below-tied",
            sandwich,
            format!("{cases} instances, slack 1e-9"),
        ),
        at_most("witness-untied-exact", witness_untied, 1e-9),
        check(
            "witness-tied-error",
            witness_ratio >= 0.9,
            format!("min tied/||T|| {witness_ratio:.4} (must be >= 0.9)"),
        ),
    ])
}

fn tied_error(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut optimality = 0.0_f64;
    let mut pythagoras = 0.0_f64;
    let mut projector = 0.0_f64;
    for _ in 0..cases {
        let (d, v, pair) = random_embedding(rng)?;
        let t = uniform_matrix(rng, v, v);
        let (a, tied) = pair.best_tied_fit(&t)?;
        let (b, untied) = pair.untied_fit(&t)?;
        let (gt, gu) = normal_residuals(pair.embedding(), &t, &a, &b)?;
        optimality = optimality.max(gt.max(gu) / t.frobenius_norm());
        let p = pair.output_projector();
        let ptp = p.matmul(&t)?.matmul(&p)?;
        let tp = t.matmul(&p)?;
        let tn = t.frobenius_norm();
        pythagoras = pythagoras.max((tied * tied - (tn * tn - ptp.frobenius_norm().powi(2))).abs() / (tn * tn));
        pythagoras = pythagoras.max((untied * untied - (tn * tn - tp.frobenius_norm().powi(2))).abs() / (tn * tn));
        let idem = p.matmul(&p)?.sub(&p)?.frobenius_norm();
        let trace: f64 = (0..v).map(|i| p.get(i, i)).sum();
        projector = projector.max(idem).max((trace - d as f64).abs());
    }
    Ok(vec![
        at_most("fits-satisfy-normal-equations", optimality, 1e-9),
        at_most("residuals-match-projections", pythagoras, 1e-9),
        at_most("output-projector-rank-d", projector, 1e-9),
    ])
}

fn idealized_muon(rng: &mut ChaCha8Rng, cases: usize) -> Result<Vec<Check>> {
    let mut scale_worst = 0.0_f64;
    let mut inner_worst = 0.0_f64;
    let mut rank_worst = 0.0_f64;
    let mut descent = true;
    let mut trust = true;
    for _ in 0..cases {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=6);
        let g = uniform_matrix(rng, rows, cols);
        let q = polar_factor(&g, DEFAULT_RANK_TOL)?;
        for c in [0.1, 2.0, 1000.0] {
            let qc = polar_factor(&g.scale(c), DEFAULT_RANK_TOL)?;
            scale_worst = scale_worst.max(qc.sub(&q)?.max_abs());
        }
        let dec = svd(&g)?;
        let nuclear: f64 = dec.singular_values.iter().sum();
        inner_worst = inner_worst.max((nuclear_maximizer_check(&g)? - nuclear).abs());
        rank_worst = rank_worst.max((q.frobenius_norm().powi(2) - dec.rank(DEFAULT_RANK_TOL) as f64).abs());
        for _ in 0..5 {
            let m = random_unit_opnorm(rng, rows, cols)?;
            trust &= g.frobenius_inner(&m)? <= nuclear + 1e-10;
        }

        let w_star = uniform_matrix(rng, rows, cols);
        let w0 = uniform_matrix(rng, rows, cols);
        let smooth = rng.gen_range(0.5..4.0);
        let limit = strict_descent_limit(&w0.sub(&w_star)?.scale(smooth), smooth)?;
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = muon_descent_check(&w0, &w_star, smooth, frac * limit)?;
            descent &= r.holds(1e-10 * r.f_before.max(1.0)) && r.strict_descent();
        }
    }
    Ok(vec![
        at_most("polar-scale-invariant", scale_worst, 1e-10),
        at_most("inner-product-is-nuclear-norm", inner_worst, 1e-10),
        at_most("polar-frobenius-is-rank", rank_worst, 1e-10),
        check(
            "unit-ball-never-beats-polar",
            trust,
            format!("{cases} gradients x 5 samples"),
        ),
        check(
            "descent-bound-and-strict-descent",
            descent,
            format!("{cases} quadratics x 5 steps below the limit"),
        ),
    ])
}
