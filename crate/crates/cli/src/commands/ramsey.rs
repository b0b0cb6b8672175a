use anyhow::Result;
use clap::Subcommand;
use lpfraisse::ramsey::{
    best_spread_dp, dual_demo, ramsey_check, spread, spread_vector_search, SpreadVector,
};
use num_rational::BigRational;
use serde_json::json;

use crate::input::rational;
use crate::output::Report;
use crate::RunConfig;

#[derive(Subcommand)]
pub enum Cmd {
    /// The vector spread(a, s) in ℓ_1^n.
    Spread {
        /// Profile a (normalised to unit ℓ_1 norm).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        /// Strictly increasing positions.
        #[arg(long, value_delimiter = ',')]
        s: Vec<usize>,
        #[arg(short, long)]
        n: usize,
    },
    /// Best spread of a inside the allowed positions, by dynamic programming.
    Dp {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a: Vec<f64>,
        /// Allowed positions; all of `0..len(x)` when absent.
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<usize>>,
    },
    /// Seeded search for a spread profile approximating every unit combination within ε.
    Search {
        #[arg(short, long)]
        m: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        k_budget: usize,
    },
    /// Exhaustive or falsification check of the equipartition Ramsey property.
    Check {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        d: usize,
        #[arg(short, long)]
        m: usize,
        #[arg(short, long)]
        r: usize,
        #[arg(long, value_parser = rational)]
        eps: BigRational,
        #[arg(long, value_parser = rational)]
        delta: BigRational,
        /// Refuse to sample when exhaustive enumeration exceeds the colouring budget.
        #[arg(long)]
        exhaustive_only: bool,
    },
    /// Dual Ramsey correspondence on small quotient maps.
    Dual {
        #[arg(short, long)]
        d: usize,
        #[arg(short, long)]
        m: usize,
        #[arg(long, value_parser = rational)]
        eps: BigRational,
        #[arg(long, default_value_t = 16)]
        taus: usize,
    },
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Spread { a, s, n } => {
            let a = SpreadVector::normalized(a)?;
            let v = spread(&a, &s, n)?;
            Report::new(json!({ "a": a, "positions": s, "vector": v }), true)
        }
        Cmd::Dp { x, a, windows } => {
            let a = SpreadVector::normalized(a)?;
            let windows = windows.unwrap_or_else(|| (0..x.len()).collect());
            Report::new(best_spread_dp(&x, &a, &windows)?, true)
        }
        Cmd::Search { m, eps, k_budget } => {
            let s = spread_vector_search(m, eps, k_budget, cfg.budget_samples, cfg.seed)?;
            let ok = s.sampled_ok;
            Ok(Report::new(s, ok)?.seeded(cfg.seed))
        }
        Cmd::Check {
            n,
            d,
            m,
            r,
            eps,
            delta,
            exhaustive_only,
        } => {
            let c = ramsey_check(
                n,
                d,
                m,
                r,
                &eps,
                &delta,
                cfg.budget_colorings,
                !exhaustive_only,
                cfg.budget_colorings,
                cfg.seed,
            )?;
            let ok = c.passed();
            let sampled = c.seed.is_some();
            let report = Report::new(c, ok)?;
            Ok(if sampled {
                report.seeded(cfg.seed)
            } else {
                report
            })
        }
        Cmd::Dual { d, m, eps, taus } => {
            let demo = dual_demo(d, m, &eps, taus, cfg.seed)?;
            let ok = demo.all_rigid && demo.within_eps;
            Ok(Report::new(demo, ok)?.seeded(cfg.seed))
        }
    }
}
