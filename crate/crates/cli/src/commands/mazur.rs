use anyhow::{bail, Result};
use clap::Subcommand;
use lpfraisse::mazur::{
    mazur_map, mazur_map_exact, sampled_modulus, MazurParams, ModulusConstant, PowerVector,
};
use lpfraisse::numeric::rational_to_f64;
use lpfraisse::spaces::{PIndex, VectorP};
use num_rational::BigRational;
use serde_json::json;

use crate::input::{p_index, rational};
use crate::output::Report;
use crate::RunConfig;

#[derive(Subcommand)]
pub enum Cmd {
    /// Apply M_{p,q} to a point of the unit sphere of ℓ_p^n.
    Map {
        #[arg(short, long, value_parser = p_index)]
        p: PIndex,
        #[arg(short, long, value_parser = p_index)]
        q: PIndex,
        /// Coordinates (rationals such as `1/2` allowed), comma separated.
        #[arg(long, value_delimiter = ',', value_parser = rational, allow_hyphen_values = true)]
        x: Vec<BigRational>,
        /// Exact arithmetic on `|x_i|^p`; needs an integer `p`.
        #[arg(long)]
        exact: bool,
    },
    /// Sampled check of the modulus of continuity bound on sphere pairs.
    Modulus {
        #[arg(short, long, value_parser = p_index)]
        p: PIndex,
        #[arg(short, long, value_parser = p_index)]
        q: PIndex,
        #[arg(long, default_value_t = 6)]
        max_dim: usize,
    },
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Map { p, q, x, exact } => {
            let params = MazurParams::new(p, q)?;
            if exact {
                let pv = p.value();
                if pv.fract() != 0.0 {
                    bail!("--exact needs an integer p, got {p}");
                }
                let v = PowerVector::from_rationals(&x, pv as u32)?;
                let image = mazur_map_exact(&v, &params)?;
                let back = mazur_map_exact(&image, &params.inverse())?;
                let body = json!({
                    "image": image,
                    "norm_pow": lpfraisse::numeric::format_rational(&image.norm_pow()),
                    "involution_exact": back == v,
                });
                let ok = back == v;
                return Report::new(body, ok);
            }
            let xv = VectorP::new(x.iter().map(rational_to_f64).collect(), p)?;
            let image = mazur_map(&xv, &params)?;
            let back = mazur_map(&image, &params.inverse())?;
            let err = xv
                .entries
                .iter()
                .zip(&back.entries)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let tol = cfg.tol.unwrap_or(1e-12);
            Report::new(
                json!({ "image": image, "norm": image.norm(), "round_trip_error": err, "tol": tol }),
                err <= tol,
            )
        }
        Cmd::Modulus { p, q, max_dim } => {
            let params = MazurParams::new(p, q)?;
            let tol = cfg.tol.unwrap_or(1e-6);
            let r = sampled_modulus(
                &params,
                ModulusConstant::Holder,
                cfg.budget_samples,
                max_dim,
                cfg.seed,
                tol,
            )?;
            let ok = r.holds;
            Ok(Report::new(r, ok)?.seeded(cfg.seed))
        }
    }
}
