use std::path::PathBuf;

use anyhow::Result;
use clap::Subcommand;
use lpfraisse::geometry::{bm_with_gap, dist_to_unit_ball, gap_estimate, GapBudget, Subspace};
use lpfraisse::spaces::{PIndex, VectorP};
use lpfraisse::Error;
use serde::Deserialize;
use serde_json::json;

use crate::input::read_json;
use crate::output::Report;
use crate::RunConfig;

#[derive(Subcommand)]
pub enum Cmd {
    /// Distance from a point to the unit ball of a subspace.
    Distance {
        /// JSON `{"p": …, "point": [...], "basis": [[...], ...]}`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Certified bracket for the gap between two subspaces of equal dimension.
    Gap {
        /// JSON `{"p": …, "x": [[...], ...], "y": [[...], ...]}` (basis vectors).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Banach–Mazur bound from a small gap, with the constructed map.
    Bm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
}

#[derive(Deserialize)]
struct PointInput {
    p: PIndex,
    point: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct PairInput {
    p: PIndex,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

fn budget(cfg: &RunConfig, restarts: usize) -> GapBudget {
    GapBudget {
        restarts,
        seed: cfg.seed,
        tol: cfg.tol.unwrap_or(0.0),
        max_evaluations: cfg.budget_samples,
        ..GapBudget::default()
    }
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Distance { input } => {
            let i: PointInput = read_json(&input)?;
            let y = Subspace::new(i.basis, i.p)?;
            let d = dist_to_unit_ball(&VectorP::new(i.point, i.p)?, &y)?;
            let ok = d.certified;
            Report::new(d, ok)
        }
        Cmd::Gap { input, restarts } => {
            let i: PairInput = read_json(&input)?;
            let (x, y) = (Subspace::new(i.x, i.p)?, Subspace::new(i.y, i.p)?);
            let g = gap_estimate(&x, &y, &budget(cfg, restarts))?;
            Ok(Report::new(g, true)?.seeded(cfg.seed))
        }
        Cmd::Bm { input, restarts } => {
            let i: PairInput = read_json(&input)?;
            let (x, y) = (Subspace::new(i.x, i.p)?, Subspace::new(i.y, i.p)?);
            let b = budget(cfg, restarts);
            let gap = gap_estimate(&x, &y, &b)?;
            match bm_with_gap(&x, &y, gap.clone(), &b) {
                Ok(r) => {
                    let ok = r.bound <= r.target + 1e-6;
                    Ok(Report::new(r, ok)?.seeded(cfg.seed))
                }
                Err(Error::Precondition(reason)) => {
                    let body = json!({ "gap": gap, "uncertified": true, "reason": reason });
                    Ok(Report::new(body, false)?.seeded(cfg.seed))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}
