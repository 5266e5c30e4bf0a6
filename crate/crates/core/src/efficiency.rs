//! Run-level analytics: within-family token ratios, transition gains, rank
//! correlations, early-prediction tables and the four-way transition taxonomy.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One training run, as seen by the efficiency statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    /// Effective batch size `B`.
    pub tier: u64,
    pub tokens_to_target: Option<f64>,
    pub throughput: Option<f64>,
    /// `α_tail` measured at the fixed early token budget.
    pub early_alpha: Option<f64>,
    #[serde(default)]
    pub layer: String,
}

impl RunRecord {
    pub fn new(family: impl Into<String>, tier: u64) -> Self {
        Self {
            family: family.into(),
            tier,
            tokens_to_target: None,
            throughput: None,
            early_alpha: None,
            layer: String::new(),
        }
    }

    pub fn with_tokens(mut self, tokens: f64) -> Self {
        self.tokens_to_target = Some(tokens);
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.early_alpha = Some(alpha);
        self
    }

    pub fn with_throughput(mut self, q: f64) -> Self {
        self.throughput = Some(q);
        self
    }
}

/// `ε_tok(B) = T(B) / min_{B'} T(B')` over the completed runs of one family.
pub fn token_ratio(records: &[RunRecord]) -> Result<BTreeMap<u64, f64>> {
    let family = records.first().map(|r| r.family.as_str()).unwrap_or("");
    let mut tokens = BTreeMap::new();
    for r in records {
        if r.family != family {
            return Err(Error::Config(format!(
                "token_ratio got mixed families `{family}` and `{}`",
                r.family
            )));
        }
        if r.tier == 0 {
            return Err(Error::Config("tier must be positive".into()));
        }
        if let Some(t) = r.tokens_to_target {
            if !(t > 0.0) {
                return Err(Error::domain(format!("tokens-to-target {t} must be positive")));
            }
            if tokens.insert(r.tier, t).is_some() {
                return Err(Error::Config(format!(
                    "family `{family}` has two completed runs at tier {}",
                    r.tier
                )));
            }
        }
    }
    let min = tokens.values().copied().fold(f64::INFINITY, f64::min);
    if tokens.is_empty() {
        return Err(Error::EmptyFamily(family.to_string()));
    }
    Ok(tokens.into_iter().map(|(b, t)| (b, t / min)).collect())
}

/// Relative and logarithmic gains of one transition `a → b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub tok_gain: f64,
    pub thr_gain: f64,
    pub g_tok: f64,
    pub g_thr: f64,
}

/// `TokGain = T_a/T_b − 1`, `ThrGain = Q_b/Q_a − 1`, and their logs.
pub fn transition_gains(tokens_a: f64, tokens_b: f64, thr_a: f64, thr_b: f64) -> Result<Gains> {
    for (name, v) in [
        ("tokens_a", tokens_a),
        ("tokens_b", tokens_b),
        ("throughput_a", thr_a),
        ("throughput_b", thr_b),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} = {v} must be positive")));
        }
    }
    Ok(Gains {
        tok_gain: tokens_a / tokens_b - 1.0,
        thr_gain: thr_b / thr_a - 1.0,
        g_tok: (tokens_a / tokens_b).ln(),
        g_thr: (thr_b / thr_a).ln(),
    })
}

/// Average (mid) ranks, 1-based; ties share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::shape("spearman needs at least two observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("spearman input contains a non-finite value"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::degenerate("constant input has no rank correlation"))
}

/// Affine map sending the smallest value to 0 and the largest to 1.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::degenerate(
            "min-max normalization needs two distinct finite values",
        ));
    }
    Ok(values.iter().map(|v| (v - min) / (max - min)).collect())
}

/// One family's row in the early-prediction table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyPrediction {
    pub family: String,
    /// Tiers with both an early exponent and tokens-to-target.
    pub tiers: usize,
    /// Spearman correlation of early `α_tail` against `ε_tok`.
    pub rho: Option<f64>,
    /// Why the family was left out, when it was.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionTable {
    pub families: Vec<FamilyPrediction>,
    pub mean_within: Option<f64>,
    /// Spearman over all families after per-family min-max normalization of both axes.
    pub pooled: Option<f64>,
    pub pooled_points: usize,
}

impl PredictionTable {
    pub fn analyzed(&self) -> usize {
        self.families.iter().filter(|f| f.rho.is_some()).count()
    }
}

/// Within-family and pooled rank agreement between the early exponent and token efficiency.
///
/// Families are reported in name order. A family with fewer than two usable tiers, or
/// whose values are constant, is kept in the table with a `skipped` note.
pub fn early_prediction_table(records: &[RunRecord]) -> PredictionTable {
    let mut by_family: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_family.entry(r.family.as_str()).or_default().push(r);
    }

    let mut families = Vec::new();
    let mut pooled_x = Vec::new();
    let mut pooled_y = Vec::new();
    for (family, runs) in by_family {
        let usable: Vec<RunRecord> = runs
            .iter()
            .filter(|r| r.early_alpha.is_some() && r.tokens_to_target.is_some())
            .map(|r| (*r).clone())
            .collect();
        let mut row = FamilyPrediction {
            family: family.to_string(),
            tiers: usable.len(),
            rho: None,
            skipped: None,
        };
        if usable.len() < 2 {
            row.skipped = Some(format!("{} usable tier(s), need 2", usable.len()));
            families.push(row);
            continue;
        }
        let analysed = token_ratio(&usable).and_then(|ratios| {
            let mut sorted = usable.clone();
            sorted.sort_by_key(|r| r.tier);
            let alpha: Vec<f64> = sorted.iter().map(|r| r.early_alpha.unwrap()).collect();
            let eps: Vec<f64> = sorted.iter().map(|r| ratios[&r.tier]).collect();
            let rho = spearman(&alpha, &eps)?;
            Ok((rho, minmax_normalize(&alpha)?, minmax_normalize(&eps)?))
        });
        match analysed {
            Ok((rho, nx, ny)) => {
                row.rho = Some(rho);
                pooled_x.extend(nx);
                pooled_y.extend(ny);
            }
            Err(e) => row.skipped = Some(e.to_string()),
        }
        families.push(row);
    }

    let rhos: Vec<f64> = families.iter().filter_map(|f| f.rho).collect();
    let mean_within = (!rhos.is_empty()).then(|| rhos.iter().sum::<f64>() / rhos.len() as f64);
    let pooled = spearman(&pooled_x, &pooled_y).ok();
    PredictionTable {
        families,
        mean_within,
        pooled,
        pooled_points: pooled_x.len(),
    }
}

/// Transition category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    ActivationLed,
    GradientLed,
    ThroughputLeaning,
    Mixed,
    /// No rule fired (every gain inside the thresholds).
    None,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::ActivationLed => "activation-led",
            Label::GradientLed => "gradient-led",
            Label::ThroughputLeaning => "throughput-leaning",
            Label::Mixed => "mixed",
            Label::None => "none",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "activation-led" => Label::ActivationLed,
            "gradient-led" => Label::GradientLed,
            "throughput-leaning" => Label::ThroughputLeaning,
            "mixed" => Label::Mixed,
            "none" => Label::None,
            other => return Err(Error::Config(format!("unknown label `{other}`"))),
        })
    }
}

fn default_tau() -> f64 {
    0.02
}

fn default_rho_dom() -> f64 {
    1.0
}

/// Classification cut-offs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_tau")]
    pub tau_tok: f64,
    #[serde(default = "default_tau")]
    pub tau_thr: f64,
    /// Dominance ratio between the activation and gradient deltas.
    #[serde(default = "default_rho_dom")]
    pub rho_dom: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_tok: default_tau(),
            tau_thr: default_tau(),
            rho_dom: default_rho_dom(),
        }
    }
}

/// A consecutive-variant transition with its gains and spectral displacements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionRecord {
    pub from_variant: String,
    pub to_variant: String,
    pub gains: Gains,
    /// `|Δα_head|` between the final checkpoints.
    pub activation_delta: Option<f64>,
    /// `|Δ(top-σ share)|` of the gradient spectra between the final checkpoints.
    pub gradient_delta: Option<f64>,
    pub label: Option<Label>,
}

impl TransitionRecord {
    pub fn new(from: impl Into<String>, to: impl Into<String>, gains: Gains) -> Self {
        Self {
            from_variant: from.into(),
            to_variant: to.into(),
            gains,
            activation_delta: None,
            gradient_delta: None,
            label: None,
        }
    }

    pub fn with_deltas(mut self, activation: f64, gradient: f64) -> Self {
        self.activation_delta = Some(activation);
        self.gradient_delta = Some(gradient);
        self
    }
}

/// Assigns the taxonomy label. Rules are tried in the order
/// mixed, activation-led, gradient-led, throughput-leaning; the first match wins.
pub fn classify_transition(rec: &TransitionRecord, th: &Thresholds) -> Result<Label> {
    let (Some(act), Some(grad)) = (rec.activation_delta, rec.gradient_delta) else {
        return Err(Error::IncompleteRecord(format!(
            "{} -> {}: spectral deltas missing",
            rec.from_variant, rec.to_variant
        )));
    };
    let g = &rec.gains;
    let tok_up = g.tok_gain > th.tau_tok;
    let label = if (tok_up && g.thr_gain < -th.tau_thr) || (g.thr_gain > th.tau_thr && g.tok_gain < -th.tau_tok) {
        Label::Mixed
    } else if tok_up && act >= grad * th.rho_dom {
        Label::ActivationLed
    } else if tok_up && grad > act * th.rho_dom {
        Label::GradientLed
    } else if g.thr_gain > th.tau_thr && g.tok_gain <= th.tau_tok {
        Label::ThroughputLeaning
    } else {
        Label::None
    };
    Ok(label)
}
