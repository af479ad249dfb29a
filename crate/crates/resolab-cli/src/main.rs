use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resolab_cli::commands::{self, Ctx, RunError};
use resolab_cli::config::ExperimentConfig;
use resolab_cli::output::{Sink, VERSION};
use serde_json::json;

#[derive(Parser)]
#[command(name = "resolab", version, about = "Resonances, perturbation determinants and spectral shift functions in 1D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated h values replacing `h_list`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    h: Option<Vec<f64>>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Perturbation determinants at the configured points.
    Det,
    /// Resonances in the configured region for each h.
    Resonances,
    /// Spectral shift derivative, Breit-Wigner split and Birman-Krein check.
    Ssf,
    /// Second-order trace identity, Paley-Wiener growth and dz phi samples.
    Counterexample,
    /// Zeta-regularized against Fredholm determinants, heat-trace fits.
    ZetaCheck,
    /// Complex-scaled eigenvalues against determinant zeros.
    DistortCheck,
    /// sup |dz phi_p| over the window as h shrinks.
    ScalingStudy,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Det => "det",
            Self::Resonances => "resonances",
            Self::Ssf => "ssf",
            Self::Counterexample => "counterexample",
            Self::ZetaCheck => "zeta-check",
            Self::DistortCheck => "distort-check",
            Self::ScalingStudy => "scaling-study",
        }
    }
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("resolab: {msg}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RESOLAB_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let Some(path) = cli.config else {
        return fail("--config is required");
    };
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if let Some(h) = cli.h {
        cfg.h_list = h;
        if let Err(e) = cfg.validate() {
            return fail(e);
        }
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            return fail(format!("cannot start thread pool: {e}"));
        }
    }
    let out = cli.out.or(cfg.output_dir.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("resolab_out"));
    let hash = cfg.sha256();
    let sink = match Sink::new(&out, hash.clone()) {
        Ok(s) => s,
        Err(e) => return fail(format!("cannot create {}: {e}", out.display())),
    };
    let ctx = match Ctx::new(cfg, sink) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    log::info!("resolab {VERSION}: {} with config {}", cli.command.name(), path.display());
    let res = match cli.command {
        Command::Det => commands::det(&ctx),
        Command::Resonances => commands::resonances(&ctx),
        Command::Ssf => commands::ssf(&ctx),
        Command::Counterexample => commands::counterexample(&ctx),
        Command::ZetaCheck => commands::zeta_check(&ctx),
        Command::DistortCheck => commands::distort_check(&ctx),
        Command::ScalingStudy => commands::scaling(&ctx),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Io(e)) => fail(format!("i/o error: {e}")),
        Err(RunError::Numerical(e)) => {
            let diag = json!({
                "resolab_version": VERSION,
                "config_sha256": hash,
                "subcommand": cli.command.name(),
                "error": e.to_string(),
                "detail": format!("{e:?}"),
            });
            let text = serde_json::to_string_pretty(&diag).unwrap_or_default();
            let _ = std::fs::write(out.join("error.json"), format!("{text}\n"));
            eprintln!("{text}");
            ExitCode::from(2)
        }
    }
}
