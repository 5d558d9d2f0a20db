use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rfsurf::experiments::{Command, Run};

#[derive(Parser)]
#[command(name = "rfsurf", version, about = "Random-field gradient interface experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dyadic ground-state differences across scales.
    GroundState(Common),
    /// Shared-noise coupling of Λ_L and Λ_2L across scales.
    Couple(Common),
    /// Exact Gaussian fluctuation, decorrelation and spatial-average studies.
    Oracle(Common),
    /// Neumann representation kernel: identity errors and sup norms.
    Green(Common),
    /// Oracle-backed pass/fail checks, written to report.json.
    Validate(Common),
    /// DLR resampling estimates per disorder seed.
    Dlr(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long, env = "RFSURF_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::GroundState(a) => (Command::GroundState, a),
        Cmd::Couple(a) => (Command::Couple, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
        Cmd::Green(a) => (Command::Green, a),
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Dlr(a) => (Command::Dlr, a),
    };
    let result = Run::from_path(&args.config, args.seed_offset).and_then(|run| {
        let dir = args
            .out
            .clone()
            .or_else(|| run.config.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let out = run.execute_into(command, args.threads, &dir)?;
        eprintln!("{}: {} rows written to {}", command.name(), out.rows.len(), dir.display());
        Ok(out)
    });
    match result {
        Ok(out) => {
            let failed = out.report.as_ref().is_some_and(|r| r["all_pass"] == false);
            if failed {
                eprintln!("validation failed; see report.json");
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
