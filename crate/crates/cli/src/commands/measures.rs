use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Subcommand;
use lpfraisse::measures::{
    even_p_counterexample, gp, invert_cdf, levy_prokhorov, odd_p_search, p_characteristic,
    plateau_function, DiscreteMeasure,
};
use serde::Deserialize;
use serde_json::json;

use crate::input::read_json;
use crate::output::Report;
use crate::RunConfig;

#[derive(Subcommand)]
pub enum Cmd {
    /// Evaluate the smoothed step G_p(x, a, ε).
    Gp {
        #[arg(short, long)]
        p: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// Recover ∫ G_p dμ from the p-characteristic of a measure on the line.
    Invert {
        #[arg(short, long)]
        p: u32,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long)]
        eps: f64,
        /// Atoms `z:m`, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        atoms: Vec<String>,
    },
    /// Two different measures with equal p-characteristics (even p).
    Counterexample {
        #[arg(short, long)]
        p: u32,
    },
    /// Seeded search for equal characteristics at odd p; hits would refute uniqueness.
    OddSearch {
        #[arg(short, long)]
        p: u32,
        /// Characteristic agreement counted as a hit.
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
    /// Lévy–Prokhorov distance between two discrete measures.
    Lp {
        /// JSON `{"mu": …, "nu": …}`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Plateau function with vanishing low moments.
    Plateau {
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        m: usize,
    },
}

#[derive(Deserialize)]
struct Pair {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
}

fn parse_atoms(atoms: &[String]) -> Result<Vec<(f64, f64)>> {
    atoms
        .iter()
        .map(|s| {
            let (z, m) = s
                .split_once(':')
                .with_context(|| format!("atom `{s}` is not `z:m`"))?;
            Ok((z.trim().parse()?, m.trim().parse()?))
        })
        .collect()
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Gp { p, a, eps, x } => {
            let values = x
                .iter()
                .map(|&xi| gp(xi, a, eps, p))
                .collect::<lpfraisse::Result<Vec<_>>>()?;
            Report::new(
                json!({ "p": p, "a": a, "eps": eps, "x": x, "values": values }),
                true,
            )
        }
        Cmd::Invert { p, a, eps, atoms } => {
            let mu = DiscreteMeasure::on_line(&parse_atoms(&atoms)?)?;
            let chi = |t: f64| p_characteristic(&mu, &[t], p as f64);
            let inv = invert_cdf(&chi, a, eps, p)?;
            let (lo, hi) = (mu.cdf(inv.a_used), mu.cdf(inv.a_used + eps * p as f64));
            let tol = cfg.tol.unwrap_or(1e-9);
            let ok = inv.value >= lo - tol && inv.value <= hi + tol;
            Report::new(
                json!({ "inversion": inv, "cdf_a": lo, "cdf_a_plus_eps_p": hi, "tol": tol, "sandwiched": ok }),
                ok,
            )
        }
        Cmd::Counterexample { p } => {
            let c = even_p_counterexample(p)?;
            Report::new(c, true)
        }
        Cmd::OddSearch { p, threshold } => {
            let s = odd_p_search(p, cfg.budget_samples, cfg.seed, threshold)?;
            let ok = s.hits == 0;
            Ok(Report::new(s, ok)?.seeded(cfg.seed))
        }
        Cmd::Lp { input } => {
            let pair: Pair = read_json(&input)?;
            Report::new(levy_prokhorov(&pair.mu, &pair.nu)?, true)
        }
        Cmd::Plateau { p, m } => {
            let f = plateau_function(p, m)?;
            let ok = f.ok;
            Report::new(f, ok)
        }
    }
}
