use clap::{Args, Parser, Subcommand};
use measex::config::Operation;
use measex::pipeline::{run_file, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact expansion constants of measured group actions.
#[derive(Parser)]
#[command(name = "measex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expansion profile c*(alpha, k) of the action or of a domain.
    Profile(Common),
    /// Cheeger constant of an approximating space, optionally bracketed spectrally.
    Cheeger(Common),
    /// Approximating spaces of a partition sequence.
    Approx(Common),
    /// Maximal Følner certificate and complement check.
    Folner(Common),
    /// Exhaustion by domains of expansion.
    Exhaust(Common),
    /// Admissibility test over a partition sequence.
    Admissible(Common),
    /// Build the scenario, write model.json and run the config's `operations`.
    Scenario(Common),
    /// DOT graph and CSV distance matrix of an approximating space.
    Export(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Minimisation strategy: exact or local-search.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_exact_cells: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, op, c) = match cli.command {
        Command::Profile(c) => ("profile", Some(Operation::Profile), c),
        Command::Cheeger(c) => ("cheeger", Some(Operation::Cheeger), c),
        Command::Approx(c) => ("approx", Some(Operation::Approx), c),
        Command::Folner(c) => ("folner", Some(Operation::Folner), c),
        Command::Exhaust(c) => ("exhaust", Some(Operation::Exhaust), c),
        Command::Admissible(c) => ("admissible", Some(Operation::Admissible), c),
        Command::Scenario(c) => ("scenario", None, c),
        Command::Export(c) => ("export", Some(Operation::Export), c),
    };
    let ov = Overrides {
        strategy: c.strategy,
        seed: c.seed,
        max_exact_cells: c.max_exact_cells,
        out_dir: c.out_dir,
    };
    let ops: Vec<Operation> = op.into_iter().collect();
    match run_file(&c.config, &ops, name, &ov) {
        Ok(o) => {
            for op in &o.operations {
                println!("{:<11} {}", op.name, if op.passed { "pass" } else { "FAIL" });
            }
            println!("report: {}", o.report_path.display());
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
