use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quadric_dioph::{config::Experiment, experiments, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(
    name = "quadric-dioph",
    version,
    about = "Experiments in intrinsic Diophantine approximation on rational quadrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the height cap from the config.
    #[arg(long)]
    h_max: Option<i64>,
    /// Override the random seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root for results/ and cache/.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate rational points on X up to h_max.
    Enumerate(Common),
    /// Bound the Q-rank of the form (isotropic witness vs local obstruction).
    Qrank(Common),
    /// Hyperbolic normal form at a rational base point.
    Normalize(Common),
    /// Simplex-lemma sweep: near clusters span totally isotropic subspaces.
    SimplexVerify(Common),
    /// Strong simplex sweep with the sqrt(rho/H) membership rule.
    StrongSimplexVerify(Common),
    /// Dani correspondence inequality along the diagonal flow.
    DaniVerify(Common),
    /// Diophantine exponent estimates from best-approximation records.
    Exponent(Common),
    /// Empirical Dirichlet constants from best-approximation records.
    Dirichlet(Common),
    /// Cover-count dimension diagnostic for well-approximable sets.
    CoverCount(Common),
    /// Isotropic Schmidt games with badly-approximable certificates.
    Game(Common),
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Enumerate(c) => (Experiment::Enumerate, c),
            Command::Qrank(c) => (Experiment::Qrank, c),
            Command::Normalize(c) => (Experiment::Normalize, c),
            Command::SimplexVerify(c) => (Experiment::SimplexVerify, c),
            Command::StrongSimplexVerify(c) => (Experiment::StrongSimplexVerify, c),
            Command::DaniVerify(c) => (Experiment::DaniVerify, c),
            Command::Exponent(c) => (Experiment::Exponent, c),
            Command::Dirichlet(c) => (Experiment::Dirichlet, c),
            Command::CoverCount(c) => (Experiment::CoverCount, c),
            Command::Game(c) => (Experiment::Game, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = cli.command.split();
    let cfg = match ExperimentConfig::load(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match experiments::run(experiment, &cfg, common.h_max, common.seed, &common.out) {
        Ok(report) => {
            let s = &report.summary;
            println!(
                "{}: pass_count={} fail_count={} -> {} ({})",
                experiment,
                s["pass_count"],
                s["fail_count"],
                if report.pass { "PASS" } else { "FAIL" },
                report.dir.display()
            );
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Err(e @ (RunError::Config(_) | RunError::Locked(_) | RunError::Io { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
