use std::path::PathBuf;

use anyhow::Result;
use clap::{Subcommand, ValueEnum};
use lpfraisse::rng::stream_rng;
use lpfraisse::spaces::{
    amalgamate, hilbert_round, operator_norm_2, random_isometric, Coupling, LampertiEmbedding,
    LinearMap, PIndex,
};
use serde::Deserialize;
use serde_json::json;

use crate::input::{p_index, read_json};
use crate::output::Report;
use crate::RunConfig;

#[derive(Clone, Copy, ValueEnum)]
pub enum CouplingArg {
    NorthWest,
    Product,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Amalgamate two isometric Lamperti embeddings of ℓ_p^d.
    Amalgamate {
        /// JSON `{"gamma": …, "eta": …}`; random seeded embeddings when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(short, long, value_parser = p_index, default_value = "3")]
        p: PIndex,
        #[arg(short, long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_enum, default_value_t = CouplingArg::NorthWest)]
        coupling: CouplingArg,
    },
    /// Nearest isometry (polar factor) of a map between Euclidean spaces.
    Hilbert {
        /// JSON linear map with `domain_p = codomain_p = 2`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Certified upper and sampled lower bounds on an operator norm.
    Norm {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Deserialize)]
struct Pair {
    gamma: LampertiEmbedding,
    eta: LampertiEmbedding,
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Amalgamate {
            input,
            p,
            d,
            coupling,
        } => {
            let (pair, sampled) = match input {
                Some(path) => (read_json::<Pair>(&path)?, false),
                None => {
                    let mut rng = stream_rng(cfg.seed, 0);
                    let gamma = random_isometric(&mut rng, p, d)?;
                    let eta = random_isometric(&mut rng, p, d)?;
                    (Pair { gamma, eta }, true)
                }
            };
            let kind = match coupling {
                CouplingArg::NorthWest => Coupling::NorthWest,
                CouplingArg::Product => Coupling::Product,
            };
            let am = amalgamate(&pair.gamma, &pair.eta, kind)?;
            let commutes = am.i.compose(&pair.gamma)? == am.j.compose(&pair.eta)?;
            let ok = commutes && am.i.is_isometric() && am.j.is_isometric();
            let body = json!({
                "gamma": pair.gamma,
                "eta": pair.eta,
                "amalgam": am,
                "commutes": commutes,
                "i_isometric": am.i.is_isometric(),
                "j_isometric": am.j.is_isometric(),
            });
            let report = Report::new(body, ok)?;
            Ok(if sampled {
                report.seeded(cfg.seed)
            } else {
                report
            })
        }
        Cmd::Hilbert { input } => {
            let t: LinearMap = read_json(&input)?;
            let w = hilbert_round(&t)?;
            let distance = operator_norm_2(&(&t.matrix - &w.matrix));
            Report::new(json!({ "rounded": w, "distance": distance }), true)
        }
        Cmd::Norm { input } => {
            let t: LinearMap = read_json(&input)?;
            let upper = t.norm_upper();
            let sampled = t.norm_sampled(cfg.budget_samples, cfg.seed);
            Ok(Report::new(
                json!({ "upper": upper, "sampled_lower": sampled, "samples": cfg.budget_samples }),
                true,
            )?
            .seeded(cfg.seed))
        }
    }
}
