use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mobo_osd::harness::{run, RunConfig};

/// Multi-objective Bayesian optimization runs with CSV logs.
#[derive(Parser, Debug)]
#[command(name = "mobo-osd", version)]
struct Cli {
    /// Flat `key = value` file; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// mobo-osd, random or nbi.
    #[arg(long)]
    algo: Option<String>,
    /// Total evaluation budget T.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long = "n-beta")]
    n_beta: Option<String>,
    /// Comma list (`1,2,3`) or range (`0..10`).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "n-s")]
    n_s: Option<String>,
    #[arg(long = "n-e")]
    n_e: Option<String>,
    #[arg(long = "pfe-scale")]
    pfe_scale: Option<String>,
    /// Initial design size (default 2·(D + 1)).
    #[arg(long)]
    init: Option<String>,
    /// Disable the local exploration step.
    #[arg(long = "no-pfe")]
    no_pfe: bool,
    /// Record elapsed wall-clock time (makes logs non-reproducible).
    #[arg(long)]
    timing: bool,
}

fn build_config(cli: &Cli) -> mobo_osd::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let pairs = [
        ("problem", &cli.problem),
        ("algo", &cli.algo),
        ("budget", &cli.budget),
        ("batch", &cli.batch),
        ("n-beta", &cli.n_beta),
        ("seeds", &cli.seeds),
        ("delta", &cli.delta),
        ("n-s", &cli.n_s),
        ("n-e", &cli.n_e),
        ("pfe-scale", &cli.pfe_scale),
        ("init", &cli.init),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if cli.no_pfe {
        cfg.pfe = false;
    }
    if cli.timing {
        cfg.timing = true;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build_config(&cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(out) => {
            for r in &out.runs {
                match (&r.failure, r.final_log_hv_diff()) {
                    (Some((it, msg)), _) => {
                        eprintln!("seed {}: failed at iteration {it}: {msg}", r.seed)
                    }
                    (None, Some(g)) => eprintln!(
                        "seed {}: {} evaluations, hv {:.6}, log10 hv gap {g:.4}",
                        r.seed,
                        r.records.len(),
                        r.final_hv().unwrap_or(0.0)
                    ),
                    (None, None) => eprintln!("seed {}: no evaluations", r.seed),
                }
            }
            eprintln!("logs written to {}", out.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
