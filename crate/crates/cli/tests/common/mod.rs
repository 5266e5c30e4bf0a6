#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splx::dynamics::{loss, smooth_act_eigenvalues, SmoothSpectrumConfig};
use splx::ingest::{write_dump, write_manifest, Checkpoint, Dtype, DumpKind, RunManifest};
use splx::{DenseMatrix, ScaleTier};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_splx"));
    c.env("SOURCE_DATE_EPOCH", "1700000000").env_remove("RUST_LOG");
    c
}

pub fn splx(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn splx_workers(args: &[&str], workers: usize) -> Output {
    bin()
        .env("SPLX_NUM_WORKERS", workers.to_string())
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// `n × λ.len()` activations whose centered covariance is exactly `diag(λ)` in exact
/// arithmetic: column `k` is a scaled DCT-II vector of frequency `k + 1`, which is
/// zero-mean and orthogonal to every other column.
pub fn activations_with_spectrum(lambda: &[f64], n: usize) -> DenseMatrix {
    assert!(lambda.len() < n);
    let d = lambda.len();
    let mut data = vec![0.0; n * d];
    for (k, &l) in lambda.iter().enumerate() {
        let amp = (l * (n as f64 - 1.0) / (n as f64 / 2.0)).sqrt();
        for i in 0..n {
            let phase = std::f64::consts::PI * (i as f64 + 0.5) * (k + 1) as f64 / n as f64;
            data[i * d + k] = amp * phase.cos();
        }
    }
    DenseMatrix::new(n, d, data).unwrap()
}

pub fn write_activation_spectrum(path: &Path, lambda: &[f64], n: usize) {
    write_dump(
        &activations_with_spectrum(lambda, n),
        DumpKind::Activation,
        Dtype::F64,
        path,
    )
    .unwrap();
}

/// Square gradient block with the given singular values on its diagonal.
pub fn write_gradient_sigmas(path: &Path, sigmas: &[f64]) {
    write_dump(
        &DenseMatrix::from_diag(sigmas).unwrap(),
        DumpKind::Gradient,
        Dtype::F64,
        path,
    )
    .unwrap();
}

/// Deterministic, well-spread test matrix without a random-number dependency.
pub fn scrambled(rows: usize, cols: usize, salt: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|i| {
            let x = (i as f64 + 1.0) * (0.7548776662466927 + salt);
            let frac = x - x.floor();
            (2.0 * frac - 1.0) * (1.0 + (i % 7) as f64 / 7.0)
        })
        .collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// One checkpoint of a hand-built run; `spectrum` becomes an activation dump.
pub struct Cp {
    pub tokens: u64,
    pub loss: Option<f64>,
    pub spectrum: Option<Vec<f64>>,
}

pub const SAMPLES: usize = 256;

pub fn write_run(
    dir: &Path,
    name: &str,
    family: &str,
    tier: u64,
    scale: ScaleTier,
    target: f64,
    cps: Vec<Cp>,
) -> PathBuf {
    let mut checkpoints = Vec::new();
    for (step, cp) in cps.into_iter().enumerate() {
        let activation_dump = cp.spectrum.map(|lambda| {
            let file = format!("{name}.step{step}.splx");
            write_activation_spectrum(&dir.join(&file), &lambda, SAMPLES);
            PathBuf::from(file)
        });
        checkpoints.push(Checkpoint {
            step: step as u64,
            tokens: cp.tokens,
            loss: cp.loss,
            activation_dump,
            gradient_dump: None,
        });
    }
    let m = RunManifest {
        family: family.into(),
        tier,
        scale,
        target_loss: target,
        throughput: Some(1.0e5),
        layer: Some("mid".into()),
        checkpoints,
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join(format!("{name}.json"));
    write_manifest(&m, &path).unwrap();
    path
}

/// Pure power law `j^{-a}` over `d` ranks.
pub fn power_law(a: f64, d: usize) -> Vec<f64> {
    (1..=d).map(|j| (j as f64).powf(-a)).collect()
}

pub const SYNTH_WIDTH: usize = 220;
pub const TOKENS_PER_TIME: f64 = 1.0e6;

/// A family whose runs follow the smooth-spectrum dynamics, one tail exponent `q` per
/// tier. Checkpoint losses come from the closed-form loss and the early checkpoint at
/// `t = 1` carries the activation spectrum. Returns the manifest paths.
pub fn write_dynamics_family(dir: &Path, family: &str, p: f64, tiers: &[(u64, f64)]) -> Vec<PathBuf> {
    tiers
        .iter()
        .map(|&(tier, q)| {
            let cfg = SmoothSpectrumConfig::new(1.0, p, 1.0, q, SYNTH_WIDTH).unwrap();
            let model = cfg.as_one_layer();
            let target = 0.3 * loss(&model, 0.0).unwrap();
            let mut cps = Vec::new();
            let mut t = 1.0;
            for k in 0..2000 {
                let l = loss(&model, t).unwrap();
                let spectrum = (k == 0).then(|| smooth_act_eigenvalues(&cfg, t).unwrap());
                cps.push(Cp {
                    tokens: (t * TOKENS_PER_TIME).round() as u64,
                    loss: Some(l),
                    spectrum,
                });
                if l <= target {
                    break;
                }
                t *= 1.02;
            }
            write_run(
                dir,
                &format!("{family}-b{tier}"),
                family,
                tier,
                ScaleTier::D12,
                target,
                cps,
            )
        })
        .collect()
}
