//! `splx`: spectral diagnostics for training runs and the toy-model theory engine.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use error::{CliError, CliResult};
use output::Emit;

#[derive(Debug, Parser)]
#[command(name = "splx", version, about = "Spectral diagnostics for training telemetry")]
struct Cli {
    /// Seed for every randomized witness.
    #[arg(long, global = true, default_value_t = splx::verify::DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write the result here (plus a `.meta.json` sidecar) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Covariance eigenvalues of an activation dump as CSV.
    Spectrum {
        dump: PathBuf,
        /// Add the trace-normalized column.
        #[arg(long)]
        normalize: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Band exponent of a dump or spectrum CSV over a rank window.
    Tailfit {
        input: PathBuf,
        /// Scale tier whose window to use (d12, d36, d48).
        #[arg(long, conflicts_with = "window", required_unless_present = "window")]
        tier: Option<String>,
        /// Explicit inclusive window `lo:hi`.
        #[arg(long)]
        window: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Singular values of a per-sample gradient dump as CSV.
    Gradsvd {
        dump: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Early-exponent versus token-efficiency rank agreement over run manifests.
    Predict {
        /// Glob matching manifest JSON files.
        manifests: String,
        /// Token budget for the early measurement.
        #[arg(long)]
        early_tokens: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Label consecutive-variant transitions from a file of manifest pairs.
    Taxonomy {
        pairs: PathBuf,
        /// JSON thresholds file; fields default to 0.02, 0.02, 1.0.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long)]
        tau_tok: Option<f64>,
        #[arg(long)]
        tau_thr: Option<f64>,
        #[arg(long)]
        rho_dom: Option<f64>,
        /// Head window for the activation delta.
        #[arg(long, default_value = "1:30")]
        head_window: String,
        #[command(flatten)]
        out: OutArg,
    },
    /// Analytic toy model: trajectory sweeps and oracle verification.
    Toy {
        #[command(subcommand)]
        action: ToyAction,
    },
}

#[derive(Debug, Subcommand)]
enum ToyAction {
    /// Emit a plot-ready CSV sweep.
    Simulate {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the oracle suite for one named result (or `all`).
    Verify {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
}

fn worker_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SPLX_NUM_WORKERS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => builder = builder.num_threads(n),
            _ => log::warn!("ignoring SPLX_NUM_WORKERS={v:?}; expected a positive integer"),
        }
    }
    builder.build().map_err(CliError::failed)
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Spectrum { dump, normalize, out } => {
            let emit = Emit {
                out: out.out.as_deref(),
                command: "spectrum",
                config: json!({ "dump": dump, "normalize": normalize }),
            };
            commands::spectrum(&dump, normalize, &emit)
        }
        Command::Tailfit {
            input,
            tier,
            window,
            out,
        } => {
            let w = commands::parse_window(tier.as_deref(), window.as_deref())?;
            let emit = Emit {
                out: out.out.as_deref(),
                command: "tailfit",
                config: json!({ "input": input, "tier": tier, "window": w.to_string() }),
            };
            commands::tailfit(&input, w, &emit)
        }
        Command::Gradsvd { dump, out } => {
            let emit = Emit {
                out: out.out.as_deref(),
                command: "gradsvd",
                config: json!({ "dump": dump }),
            };
            commands::gradsvd(&dump, &emit)
        }
        Command::Predict {
            manifests,
            early_tokens,
            out,
        } => {
            let emit = Emit {
                out: out.out.as_deref(),
                command: "predict",
                config: json!({ "manifests": manifests, "early_tokens": early_tokens }),
            };
            commands::predict(&manifests, early_tokens, &worker_pool()?, &emit)
        }
        Command::Taxonomy {
            pairs,
            thresholds,
            tau_tok,
            tau_thr,
            rho_dom,
            head_window,
            out,
        } => {
            let th = commands::load_thresholds(thresholds.as_deref(), tau_tok, tau_thr, rho_dom)?;
            let head = commands::parse_window(None, Some(&head_window))?;
            let emit = Emit {
                out: out.out.as_deref(),
                command: "taxonomy",
                config: json!({ "pairs": pairs, "thresholds": th, "head_window": head.to_string() }),
            };
            commands::taxonomy(&pairs, th, head, &worker_pool()?, &emit)
        }
        Command::Toy { action } => match action {
            ToyAction::Simulate { name, config, out } => {
                let emit = Emit {
                    out: out.out.as_deref(),
                    command: "toy simulate",
                    config: json!({ "name": name, "config": config }),
                };
                commands::toy_simulate(&name, config.as_deref(), &emit)
            }
            ToyAction::Verify { name, config, out } => {
                let emit = Emit {
                    out: out.out.as_deref(),
                    command: "toy verify",
                    config: json!({ "name": name, "config": config, "seed": seed }),
                };
                commands::toy_verify(&name, config.as_deref(), seed, &emit)
            }
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("splx: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
