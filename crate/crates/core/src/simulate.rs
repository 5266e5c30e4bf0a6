//! Plot-ready sweeps of the analytic engine. Each simulation takes a JSON config
//! (every field optional) and returns a numeric table plus a JSON summary.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{
    band_recruitment_time, band_recruitment_time_bisect, band_statistic, crossover_rank, leading_mode_share, loss,
    one_layer_state, smooth_act_spectrum, tail_alpha, two_layer_state, Mode, OneLayerConfig, SmoothSpectrumConfig,
    TwoLayerConfig, TwoLayerMode,
};
use crate::error::{Error, Result};
use crate::spectra::{band_alpha, RankWindow};

pub const SIMULATIONS: &[&str] = &["three-zone", "one-layer", "two-layer", "band-recruitment"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simulation {
    pub table: Table,
    pub summary: Value,
}

fn parse<T: DeserializeOwned + Default>(config: Option<&Value>) -> Result<T> {
    match config {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(e.to_string())),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ThreeZone {
    p: f64,
    q: f64,
    eta: f64,
    scale: f64,
    r_star: usize,
    ranks_per_r_star: usize,
}

impl Default for ThreeZone {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 0.5,
            eta: 1.0,
            scale: 1.0,
            r_star: 50,
            ranks_per_r_star: 400,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OneLayer {
    betas: Vec<f64>,
    kappas: Vec<f64>,
    a0: Option<Vec<f64>>,
    t_end: Option<f64>,
    points: usize,
}

impl Default for OneLayer {
    fn default() -> Self {
        Self {
            betas: vec![1.0, 1.0, 1.0, 1.0],
            kappas: vec![2.0, 1.0, 0.5, 0.25],
            a0: None,
            t_end: None,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TwoLayer {
    betas: Vec<f64>,
    m0: Vec<f64>,
    /// 0-based indices of the task band.
    band: Option<Vec<usize>>,
    t_end: Option<f64>,
    points: usize,
}

impl Default for TwoLayer {
    fn default() -> Self {
        Self {
            betas: vec![1.0, 0.5, 0.0, 0.0],
            m0: vec![0.01; 4],
            band: Some(vec![0, 1]),
            t_end: None,
            points: 101,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Recruitment {
    eta: f64,
    q: f64,
    delta: f64,
    cutoffs: Vec<usize>,
}

impl Default for Recruitment {
    fn default() -> Self {
        Self {
            eta: 1.0,
            q: 0.5,
            delta: 0.01,
            cutoffs: vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024],
        }
    }
}

fn time_grid(t_end: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Config("need points >= 2 and a positive finite t_end".into()));
    }
    Ok((0..points).map(|k| t_end * k as f64 / (points - 1) as f64).collect())
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |r| format!("{prefix}{r}"))
}

/// Runs the named simulation. Unknown names and malformed configs are `Config` errors.
pub fn simulate(name: &str, config: Option<&Value>) -> Result<Simulation> {
    match name {
        "three-zone" => three_zone(parse(config)?),
        "one-layer" => one_layer(parse(config)?),
        "two-layer" => two_layer(parse(config)?),
        "band-recruitment" => recruitment(parse(config)?),
        other => Err(Error::Config(format!(
            "unknown simulation `{other}`; valid: {}",
            SIMULATIONS.join(", ")
        ))),
    }
}

fn three_zone(c: ThreeZone) -> Result<Simulation> {
    if c.r_star < 200 / c.ranks_per_r_star.max(1) || c.ranks_per_r_star < 2 {
        return Err(Error::Config("r_star and ranks_per_r_star too small".into()));
    }
    let ranks = c.r_star * c.ranks_per_r_star;
    let cfg = SmoothSpectrumConfig::new(c.scale, c.p, c.eta, c.q, ranks)?;
    if cfg.q == 0.0 {
        return Err(Error::Config("three-zone needs q > 0".into()));
    }
    let t = (c.r_star as f64).powf(c.q) / c.eta;
    let spec = smooth_act_spectrum(&cfg, t)?;
    let head = RankWindow::new(1, (c.r_star / 200).max(2))?;
    let tail = RankWindow::new(ranks / 2, ranks)?;
    let head_fit = band_alpha(&spec, head)?;
    let tail_fit = band_alpha(&spec, tail)?;
    let rows = spec
        .values()
        .iter()
        .zip(spec.normalized())
        .enumerate()
        .map(|(i, (v, n))| vec![(i + 1) as f64, *v, *n])
        .collect();
    Ok(Simulation {
        table: Table {
            columns: vec!["rank".into(), "eigenvalue".into(), "normalized".into()],
            rows,
        },
        summary: json!({
            "t": t,
            "crossover_rank": crossover_rank(&cfg, t)?,
            "head": head_fit,
            "tail": tail_fit,
            "expected_head_alpha": c.p,
            "expected_tail_alpha": tail_alpha(&cfg),
        }),
    })
}

fn one_layer(c: OneLayer) -> Result<Simulation> {
    let mut cfg = OneLayerConfig::from_rates(&c.betas, &c.kappas)?;
    if let Some(a0) = &c.a0 {
        if a0.len() != cfg.len() {
            return Err(Error::Config("a0 length differs from betas".into()));
        }
        cfg = OneLayerConfig::new(cfg.modes.iter().zip(a0).map(|(m, &a0)| Mode { a0, ..*m }).collect())?;
    }
    let slow = cfg.min_kappa();
    let t_end = c.t_end.unwrap_or(if slow > 0.0 { 10.0 / slow } else { 10.0 });
    let mut columns = vec!["t".to_string()];
    columns.extend(numbered("a", cfg.len()));
    columns.extend(["loss".to_string(), "leading_share".to_string()]);
    let mut rows = Vec::new();
    for t in time_grid(t_end, c.points)? {
        let mut row = vec![t];
        row.extend(one_layer_state(&cfg, t)?);
        row.push(loss(&cfg, t)?);
        row.push(leading_mode_share(&cfg, t).unwrap_or(f64::NAN));
        rows.push(row);
    }
    Ok(Simulation {
        table: Table { columns, rows },
        summary: json!({ "modes": cfg.len(), "t_end": t_end }),
    })
}

fn two_layer(c: TwoLayer) -> Result<Simulation> {
    if c.betas.len() != c.m0.len() {
        return Err(Error::Config("betas and m0 differ in length".into()));
    }
    let cfg = TwoLayerConfig::new(
        c.betas
            .iter()
            .zip(&c.m0)
            .map(|(&beta, &m0)| TwoLayerMode { beta, m0 })
            .collect(),
    )?;
    let slow = cfg
        .modes
        .iter()
        .filter(|m| m.beta > 0.0)
        .map(|m| 2.0 * m.beta)
        .fold(f64::INFINITY, f64::min);
    let t_end = c.t_end.unwrap_or(if slow.is_finite() { 10.0 / slow } else { 10.0 });
    let mut columns = vec!["t".to_string()];
    columns.extend(numbered("m", cfg.modes.len()));
    if c.band.is_some() {
        columns.push("band_share".into());
    }
    let mut rows = Vec::new();
    for t in time_grid(t_end, c.points)? {
        let m = two_layer_state(&cfg, t)?;
        let mut row = vec![t];
        row.extend(&m);
        if let Some(band) = &c.band {
            row.push(band_statistic(&m, band)?);
        }
        rows.push(row);
    }
    Ok(Simulation {
        table: Table { columns, rows },
        summary: json!({ "modes": cfg.modes.len(), "t_end": t_end }),
    })
}

fn recruitment(c: Recruitment) -> Result<Simulation> {
    let max = c.cutoffs.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::Config("cutoffs must be nonempty and positive".into()));
    }
    let cfg = SmoothSpectrumConfig::new(1.0, 1.0, c.eta, c.q, max)?;
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    for &r in &c.cutoffs {
        let closed = band_recruitment_time(&cfg, r, c.delta)?;
        let bisected = band_recruitment_time_bisect(&cfg, r, c.delta)?;
        worst = worst.max((closed - bisected).abs() / closed);
        rows.push(vec![r as f64, closed, bisected]);
    }
    Ok(Simulation {
        table: Table {
            columns: vec!["cutoff".into(), "closed_form".into(), "bisection".into()],
            rows,
        },
        summary: json!({ "max_relative_gap": worst }),
    })
}
