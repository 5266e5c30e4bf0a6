use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;
use serde_json::{json, Value};

use splx::efficiency::{classify_transition, early_prediction_table, transition_gains, Thresholds, TransitionRecord};
use splx::ingest::{read_dump_of_kind, read_manifest, DumpKind, RunManifest};
use splx::simulate::{simulate, SIMULATIONS};
use splx::spectra::{band_alpha, covariance_spectrum, gradient_spectrum_of, select_window};
use splx::verify::{self, VerifyConfig, TARGETS};
use splx::{Error, RankWindow, ScaleTier, Spectrum};

use crate::error::{CliError, CliResult};
use crate::output::{float_csv, indexed_csv, num, opt_num, pretty, Emit};

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(format!("{}: file not found", path.display())))
    }
}

fn read_json(path: &Path) -> CliResult<Value> {
    require_file(path)?;
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))
}

pub fn spectrum(dump: &Path, normalize: bool, emit: &Emit) -> CliResult<()> {
    let h = read_dump_of_kind(dump, DumpKind::Activation)?;
    let spec = covariance_spectrum(&h)?;
    let columns: &[&str] = if normalize {
        &["rank", "eigenvalue", "normalized"]
    } else {
        &["rank", "eigenvalue"]
    };
    let rows = spec
        .values()
        .iter()
        .zip(spec.normalized())
        .enumerate()
        .map(|(i, (&v, &n))| (i + 1, if normalize { vec![v, n] } else { vec![v] }));
    let summary = json!({ "samples": h.rows(), "width": h.cols(), "trace": spec.trace() });
    emit.write(&indexed_csv(columns, rows), Some(summary))
}

pub fn gradsvd(dump: &Path, emit: &Emit) -> CliResult<()> {
    let g = read_dump_of_kind(dump, DumpKind::Gradient)?;
    let spec = gradient_spectrum_of(&g)?;
    let rows = spec
        .values()
        .iter()
        .zip(spec.normalized())
        .enumerate()
        .map(|(i, (&s, &n))| (i + 1, vec![s, n]));
    let summary = json!({ "samples": g.rows(), "parameters": g.cols(), "nuclear_norm": spec.trace() });
    emit.write(&indexed_csv(&["rank", "sigma", "normalized"], rows), Some(summary))
}

/// Resolves `--tier` or `--window` into a rank window; both failures map to exit 3.
pub fn parse_window(tier: Option<&str>, window: Option<&str>) -> CliResult<RankWindow> {
    match (tier, window) {
        (Some(t), None) => t
            .parse::<ScaleTier>()
            .map(select_window)
            .map_err(|e| CliError::BadWindow(e.to_string())),
        (None, Some(w)) => w.parse().map_err(|e: Error| CliError::BadWindow(e.to_string())),
        _ => Err(CliError::BadWindow("give exactly one of --tier or --window".into())),
    }
}

/// Eigenvalues from a `rank,eigenvalue,...` CSV (as written by `spectrum` or `toy simulate`).
fn spectrum_from_csv(path: &Path) -> CliResult<Spectrum> {
    require_file(path)?;
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = headers.iter().position(|h| h == "eigenvalue").unwrap_or(1);
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(col).unwrap_or("");
        let v: f64 = cell
            .trim()
            .parse()
            .map_err(|_| CliError::failed(format!("{}: row {}: bad eigenvalue `{cell}`", path.display(), i + 1)))?;
        values.push(v);
    }
    Ok(Spectrum::new(values)?)
}

pub fn tailfit(input: &Path, window: RankWindow, emit: &Emit) -> CliResult<()> {
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let spec = if is_csv {
        spectrum_from_csv(input)?
    } else {
        covariance_spectrum(&read_dump_of_kind(input, DumpKind::Activation)?)?
    };
    let fit = band_alpha(&spec, window)?;
    emit.write(&pretty(&fit), None)
}

#[derive(Debug, Clone, Serialize)]
struct RunRow {
    manifest: String,
    family: String,
    tier: u64,
    scale: ScaleTier,
    tokens_to_target: Option<u64>,
    early_step: Option<u64>,
    early_tokens: Option<u64>,
    early_alpha: Option<f64>,
    note: Option<String>,
}

fn early_alpha(m: &RunManifest, budget: u64, row: &mut RunRow) -> CliResult<()> {
    let Some(cp) = m.early_checkpoint(budget) else {
        row.note = Some(format!("no activation dump at or before {budget} tokens"));
        return Ok(());
    };
    row.early_step = Some(cp.step);
    row.early_tokens = Some(cp.tokens);
    let h = read_dump_of_kind(m.resolve(cp.activation_dump.as_ref().unwrap()), DumpKind::Activation)?;
    let fit = covariance_spectrum(&h).and_then(|s| band_alpha(&s, select_window(m.scale)));
    match fit {
        Ok(f) => row.early_alpha = Some(f.alpha),
        Err(e) => row.note = Some(e.to_string()),
    }
    Ok(())
}

fn analyse_run(path: &Path, budget: u64) -> CliResult<(RunRow, RunManifest)> {
    let m = read_manifest(path)?;
    let mut row = RunRow {
        manifest: path.display().to_string(),
        family: m.family.clone(),
        tier: m.tier,
        scale: m.scale,
        tokens_to_target: m.tokens_to_target(),
        early_step: None,
        early_tokens: None,
        early_alpha: None,
        note: None,
    };
    if row.tokens_to_target.is_none() {
        row.note = Some("incomplete: target loss never reached".into());
    }
    early_alpha(&m, budget, &mut row)?;
    Ok((row, m))
}

pub fn predict(pattern: &str, budget: u64, pool: &ThreadPool, emit: &Emit) -> CliResult<()> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| CliError::failed(format!("bad glob `{pattern}`: {e}")))?
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::NothingAnalyzable(format!("no manifest matches `{pattern}`")));
    }
    let results: Vec<CliResult<(RunRow, RunManifest)>> =
        pool.install(|| paths.par_iter().map(|p| analyse_run(p, budget)).collect());
    let mut rows = Vec::with_capacity(results.len());
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        let (row, manifest) = r?;
        let mut rec = manifest.run_record();
        rec.early_alpha = row.early_alpha;
        records.push(rec);
        rows.push(row);
    }
    rows.sort_by(|a, b| {
        (&a.family, a.tier, a.early_step, &a.manifest).cmp(&(&b.family, b.tier, b.early_step, &b.manifest))
    });
    for row in rows.iter().filter(|r| r.note.is_some()) {
        log::warn!("{}: {}", row.manifest, row.note.as_ref().unwrap());
    }
    let table = early_prediction_table(&records);
    if table.analyzed() == 0 {
        let reasons: Vec<String> = table
            .families
            .iter()
            .map(|f| format!("{}: {}", f.family, f.skipped.clone().unwrap_or_default()))
            .collect();
        return Err(CliError::NothingAnalyzable(format!(
            "no family has two complete tiers with an early exponent ({})",
            reasons.join("; ")
        )));
    }
    let doc = json!({
        "early_tokens": budget,
        "runs": rows,
        "families": table.families,
        "mean_within": table.mean_within,
        "pooled": table.pooled,
        "pooled_points": table.pooled_points,
    });
    emit.write(&pretty(&doc), None)
}

/// Reads `from to` manifest pairs, one per line; `#` starts a comment. Paths are relative
/// to the pairs file.
fn read_pairs(path: &Path) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    require_file(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(CliError::failed(format!(
                "{}:{}: expected two manifest paths",
                path.display(),
                n + 1
            )));
        }
        pairs.push((base.join(fields[0]), base.join(fields[1])));
    }
    Ok(pairs)
}

fn variant_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// `(α_head, top-σ share)` at the final checkpoint, each absent if its dump is.
fn final_signature(m: &RunManifest, head: RankWindow) -> CliResult<(Option<f64>, Option<f64>)> {
    let Some(cp) = m.final_checkpoint() else {
        return Ok((None, None));
    };
    let mut alpha = None;
    if let Some(p) = &cp.activation_dump {
        let h = read_dump_of_kind(m.resolve(p), DumpKind::Activation)?;
        match covariance_spectrum(&h).and_then(|s| band_alpha(&s, head)) {
            Ok(fit) => alpha = Some(fit.alpha),
            Err(e) => log::warn!("{}: head exponent unavailable: {e}", m.family),
        }
    }
    let mut share = None;
    if let Some(p) = &cp.gradient_dump {
        let g = read_dump_of_kind(m.resolve(p), DumpKind::Gradient)?;
        match gradient_spectrum_of(&g) {
            Ok(s) => share = Some(s.normalized()[0]),
            Err(e) => log::warn!("{}: gradient spectrum unavailable: {e}", m.family),
        }
    }
    Ok((alpha, share))
}

fn transition_row(from: &Path, to: &Path, head: RankWindow, th: &Thresholds) -> CliResult<Vec<String>> {
    let (a, b) = (read_manifest(from)?, read_manifest(to)?);
    let mut cells = vec![variant_name(from), variant_name(to)];
    let gains = match (a.tokens_to_target(), b.tokens_to_target(), a.throughput, b.throughput) {
        (Some(ta), Some(tb), Some(qa), Some(qb)) => Some(transition_gains(ta as f64, tb as f64, qa, qb)?),
        _ => None,
    };
    let (alpha_a, share_a) = final_signature(&a, head)?;
    let (alpha_b, share_b) = final_signature(&b, head)?;
    let act = alpha_a.zip(alpha_b).map(|(x, y)| (x - y).abs());
    let grad = share_a.zip(share_b).map(|(x, y)| (x - y).abs());
    let (label, note) = match gains {
        None => (
            String::new(),
            "gains not computable: tokens-to-target or throughput missing".to_string(),
        ),
        Some(g) => {
            let mut rec = TransitionRecord::new(cells[0].clone(), cells[1].clone(), g);
            rec.activation_delta = act;
            rec.gradient_delta = grad;
            match classify_transition(&rec, th) {
                Ok(l) => (l.to_string(), String::new()),
                Err(e) => (String::new(), e.to_string()),
            }
        }
    };
    match gains {
        Some(g) => cells.extend([num(g.tok_gain), num(g.thr_gain), num(g.g_tok), num(g.g_thr)]),
        None => cells.extend(vec![String::new(); 4]),
    }
    cells.extend([opt_num(act), opt_num(grad), label, note]);
    Ok(cells)
}

pub fn taxonomy(pairs_file: &Path, th: Thresholds, head: RankWindow, pool: &ThreadPool, emit: &Emit) -> CliResult<()> {
    let pairs = read_pairs(pairs_file)?;
    if pairs.is_empty() {
        return Err(CliError::NothingAnalyzable(format!(
            "{}: no manifest pairs",
            pairs_file.display()
        )));
    }
    let rows: Vec<CliResult<Vec<String>>> =
        pool.install(|| pairs.par_iter().map(|(a, b)| transition_row(a, b, head, &th)).collect());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "from",
        "to",
        "tok_gain",
        "thr_gain",
        "g_tok",
        "g_thr",
        "activation_delta",
        "gradient_delta",
        "label",
        "note",
    ])?;
    let mut flagged = 0;
    for row in rows {
        let row = row?;
        if !row[9].is_empty() {
            flagged += 1;
            log::warn!("{} -> {}: {}", row[0], row[1], row[9]);
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::failed(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    emit.write(
        &text,
        Some(json!({ "pairs": pairs.len(), "flagged": flagged, "thresholds": th })),
    )
}

pub fn load_thresholds(
    file: Option<&Path>,
    tau_tok: Option<f64>,
    tau_thr: Option<f64>,
    rho_dom: Option<f64>,
) -> CliResult<Thresholds> {
    let mut th = match file {
        Some(p) => {
            serde_json::from_value(read_json(p)?).map_err(|e| CliError::failed(format!("{}: {e}", p.display())))?
        }
        None => Thresholds::default(),
    };
    if let Some(v) = tau_tok {
        th.tau_tok = v;
    }
    if let Some(v) = tau_thr {
        th.tau_thr = v;
    }
    if let Some(v) = rho_dom {
        th.rho_dom = v;
    }
    Ok(th)
}

pub fn toy_simulate(name: &str, config: Option<&Path>, emit: &Emit) -> CliResult<()> {
    if !SIMULATIONS.contains(&name) {
        return Err(CliError::UnknownTarget(format!(
            "unknown simulation `{name}`; valid: {}",
            SIMULATIONS.join(", ")
        )));
    }
    let cfg = config.map(read_json).transpose()?;
    let sim = simulate(name, cfg.as_ref())?;
    let csv = float_csv(&sim.table.columns, &sim.table.rows);
    if emit.out.is_none() {
        eprintln!("{}", serde_json::to_string(&sim.summary).expect("json value"));
    }
    emit.write(&csv, Some(sim.summary))
}

pub fn toy_verify(name: &str, config: Option<&Path>, seed: u64, emit: &Emit) -> CliResult<()> {
    let targets: Vec<&str> = if name == "all" {
        TARGETS.to_vec()
    } else if verify::is_target(name) {
        vec![name]
    } else {
        return Err(CliError::UnknownTarget(format!(
            "unknown verify target `{name}`; valid: all, {}",
            TARGETS.join(", ")
        )));
    };
    let cfg: VerifyConfig = match config {
        Some(p) => {
            serde_json::from_value(read_json(p)?).map_err(|e| CliError::failed(format!("{}: {e}", p.display())))?
        }
        None => VerifyConfig::default(),
    };
    let mut reports = Vec::new();
    for t in targets {
        let report = verify::run(t, seed, &cfg)?;
        println!("{report}");
        reports.push(report);
    }
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.target.as_str())
        .collect();
    if let Some(out) = emit.out {
        let doc = Emit {
            out: Some(out),
            command: emit.command,
            config: emit.config.clone(),
        };
        doc.write(&pretty(&reports), Some(json!({ "failed": failed })))?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("verification failed: {}", failed.join(", "))))
    }
}
