use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gext_cli::run::write_json;
use gext_cli::{run_command, Command, RunConfig};

#[derive(Parser)]
#[command(name = "gext", version, about = "Finite G-extension speedup constructions")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// n-name distance between two systems.
    Metrics(Opts),
    /// One distribution improvement step from a bootstrapped regular speedup.
    Improve(Opts),
    /// Iterated improvement with twisting between steps.
    Factor(Opts),
    /// Factor loop interleaved with partition copying and generator checks.
    Iso(Opts),
    /// Copies a target orbit's name onto the source.
    SeedOrbit(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 64)]
    n1: usize,
    #[arg(long, default_value_t = 0.05)]
    delta1: f64,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    budget: usize,
    #[arg(long, default_value_t = 0.1)]
    zeta: f64,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Use the sufficient-constant schedule preset instead of halving.
    #[arg(long)]
    strict_schedule: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, o) = match cli.command {
        Sub::Metrics(o) => (Command::Metrics, o),
        Sub::Improve(o) => (Command::Improve, o),
        Sub::Factor(o) => (Command::Factor, o),
        Sub::Iso(o) => (Command::Iso, o),
        Sub::SeedOrbit(o) => (Command::SeedOrbit, o),
    };
    let cfg = RunConfig {
        command,
        target: o.target,
        source: o.source,
        n: o.n,
        delta: o.delta,
        n1: o.n1,
        delta1: o.delta1,
        epsilon: o.epsilon,
        budget: o.budget,
        zeta: o.zeta,
        len: o.len,
        seed: o.seed,
        out: o.out,
        strict_schedule: o.strict_schedule,
    };
    match run_command(&cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gext: {e}");
            if let Err(w) = write_json(&cfg.out, "refusal.json", &e.to_json()) {
                eprintln!("gext: could not write refusal file: {w}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
