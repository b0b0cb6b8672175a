use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use lpfraisse::partitions::{
    envelope, sample_envelope_instance, transfer_isometry, EnvelopeInstance,
};
use serde_json::json;

use crate::input::read_json;
use crate::output::Report;
use crate::RunConfig;

#[derive(Args)]
pub struct Cmd {
    /// JSON `EnvelopeInstance`; a seeded random instance when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Atoms of the random base space.
    #[arg(long, default_value_t = 32)]
    atoms: usize,
    /// Dimension of X, counting the constants.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Perturbation of the re-embedded values in the random instance.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(short, long, default_value_t = 1.0)]
    p: f64,
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    let (inst, sampled) = match &cmd.input {
        Some(path) => (read_json::<EnvelopeInstance>(path)?, false),
        None => {
            if cmd.atoms > cfg.budget_atoms {
                bail!(
                    "--atoms {} exceeds --budget-atoms {}",
                    cmd.atoms,
                    cfg.budget_atoms
                );
            }
            (
                sample_envelope_instance(cmd.atoms, cmd.dim, cmd.noise, cfg.seed)?,
                true,
            )
        }
    };
    let largest = inst.space0.len().max(inst.space1.len());
    if largest > cfg.budget_atoms {
        bail!(
            "instance has {largest} atoms, above --budget-atoms {}",
            cfg.budget_atoms
        );
    }
    let env = envelope(&inst.basis, &inst.space0, cmd.eps, cmd.p, cfg.seed)?;
    let tr = transfer_isometry(&env, &inst.space1, &inst.images, cfg.seed)?;
    let isometric = tr.isometry.is_isometric();
    let ok = isometric && tr.defect_bound <= cmd.eps;
    let body = json!({
        "p": cmd.p,
        "eps": cmd.eps,
        "m": env.m(),
        "envelope_defect_bound": env.defect_bound,
        "envelope_defect_sampled": env.defect_sampled,
        "isometric": isometric,
        "defect_bound": tr.defect_bound,
        "defect_sampled": tr.defect_sampled,
        "isometry": tr.isometry,
        "instance": if sampled { Some(&inst) } else { None },
    });
    Ok(Report::new(body, ok)?.seeded(cfg.seed))
}
