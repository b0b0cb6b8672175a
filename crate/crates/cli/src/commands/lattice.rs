use std::path::PathBuf;

use anyhow::Result;
use clap::{Subcommand, ValueEnum};
use lpfraisse::lattice::{lattice_round, predicates, MSpaceMap, RoundMode};
use serde::Deserialize;

use crate::input::read_json;
use crate::output::Report;
use crate::RunConfig;

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Lattice,
    Disjoint,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// δ-disjointness, δ-positivity and δ-isometry of a map ℓ_∞^m → ℓ_∞^n.
    Check {
        /// JSON `{"rows": [[...], ...]}`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
    },
    /// Round a δ-embedding to an exact one within 3δm.
    Round {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Lattice)]
        mode: ModeArg,
    },
}

#[derive(Deserialize)]
struct Rows {
    rows: Vec<Vec<f64>>,
}

fn load(path: &PathBuf) -> Result<MSpaceMap> {
    let r: Rows = read_json(path)?;
    Ok(MSpaceMap::new(r.rows)?)
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Check { input, delta } => {
            let g = load(&input)?;
            let pr = predicates(&g, delta, cfg.seed);
            let ok = pr.disjoint && pr.positive && pr.isometric;
            let report = Report::new(&pr, ok)?;
            Ok(if pr.isometric_certified {
                report
            } else {
                report.seeded(cfg.seed)
            })
        }
        Cmd::Round { input, delta, mode } => {
            let g = load(&input)?;
            let mode = match mode {
                ModeArg::Lattice => RoundMode::Lattice,
                ModeArg::Disjoint => RoundMode::Disjoint,
            };
            let r = lattice_round(&g, delta, mode, cfg.seed)?;
            let ok = r.within_bound;
            Ok(Report::new(r, ok)?.seeded(cfg.seed))
        }
    }
}
