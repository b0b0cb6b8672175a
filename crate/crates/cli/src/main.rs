mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpfraisse::rng::{DEFAULT_SEED, SEED_ENV};

use output::Format;

#[derive(Parser)]
#[command(
    name = "lpfraisse",
    version,
    about = "Finite-dimensional checks for L_p embeddings, equipartitions and Ramsey bounds"
)]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Seed for every sampled operation.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Override the numeric tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest discrete space (atoms) a command may build.
    #[arg(long, global = true, default_value_t = 128)]
    pub budget_atoms: usize,
    /// Colourings swept exhaustively or sampled by falsification.
    #[arg(long, global = true, default_value_t = lpfraisse::ramsey::DEFAULT_FALSIFICATION_TRIALS)]
    pub budget_colorings: u64,
    /// Samples, trials or distance evaluations for sampled estimates.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub budget_samples: usize,
    /// Largest n searched by certificate construction.
    #[arg(long, global = true, default_value_t = 20_000)]
    pub budget_n: u64,
    /// Worker threads for `suite`.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Lamperti embeddings, amalgamation and Hilbert rounding.
    #[command(subcommand)]
    Spaces(commands::spaces::Cmd),
    /// Distances to unit balls, the gap metric and Banach–Mazur bounds.
    #[command(subcommand)]
    Geometry(commands::geometry::Cmd),
    /// Mazur maps between ℓ_p and ℓ_q.
    #[command(subcommand)]
    Mazur(commands::mazur::Cmd),
    /// p-characteristics, CDF inversion and Lévy–Prokhorov distances.
    #[command(subcommand)]
    Measures(commands::measures::Cmd),
    /// Envelope of a subspace of a discrete L_p space and isometric transfer.
    Envelope(commands::envelope::Cmd),
    /// Equisurjections: distances, matching, counting, concentration, certificates.
    #[command(subcommand)]
    Equi(commands::equi::Cmd),
    /// Spreads and equipartition Ramsey checks.
    #[command(subcommand)]
    Ramsey(commands::ramsey::Cmd),
    /// δ-lattice-embedding predicates and rounding.
    #[command(subcommand)]
    Lattice(commands::lattice::Cmd),
    /// The acceptance battery, or replay of a saved certificate.
    Suite(commands::suite::Cmd),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.run;
    let result = match cli.command {
        Command::Spaces(c) => commands::spaces::run(c, &cfg),
        Command::Geometry(c) => commands::geometry::run(c, &cfg),
        Command::Mazur(c) => commands::mazur::run(c, &cfg),
        Command::Measures(c) => commands::measures::run(c, &cfg),
        Command::Envelope(c) => commands::envelope::run(c, &cfg),
        Command::Equi(c) => commands::equi::run(c, &cfg),
        Command::Ramsey(c) => commands::ramsey::run(c, &cfg),
        Command::Lattice(c) => commands::lattice::run(c, &cfg),
        Command::Suite(c) => commands::suite::run(c, &cfg),
    };
    match result {
        Ok(report) => {
            if let Err(e) = report.emit(cfg.format) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<input::InputError>() { 2 } else { 1 })
        }
    }
}
