use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::Args;
use lpfraisse::equi::Certificate;
use lpfraisse::suite::{run_criterion, CriterionResult, SuiteConfig, CRITERIA};
use serde_json::{json, Value};

use crate::output::Report;
use crate::RunConfig;

#[derive(Args)]
pub struct Cmd {
    /// Instance-count multiplier: `small` (0.1), `full` (1.0) or a number.
    #[arg(long, default_value = "full", value_parser = parse_scale)]
    scale: f64,
    /// Run only these criteria (repeatable).
    #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=14))]
    criteria: Vec<u8>,
    /// Replay a certificate (JSON lines) instead of running the battery.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Include wall-clock times and count budget overruns as failures.
    #[arg(long)]
    timings: bool,
}

fn parse_scale(s: &str) -> Result<f64, String> {
    match s {
        "small" => Ok(0.1),
        "full" => Ok(1.0),
        _ => match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(format!(
                "expected `small`, `full` or a positive number, got `{s}`"
            )),
        },
    }
}

fn replay(path: &PathBuf) -> Result<Report> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cert = Certificate::from_json_lines(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    let lines: Vec<Value> = cert
        .lines
        .iter()
        .enumerate()
        .map(|(i, l)| json!({ "line": i + 1, "description": l.description, "holds": l.holds(), "replays": l.replay() }))
        .collect();
    let ok = cert.replay();
    let body = json!({
        "file": path.display().to_string(),
        "label": cert.label,
        "n": cert.n,
        "verdict": cert.verdict,
        "replays": ok,
        "lines": lines,
    });
    Report::new(body, ok)
}

/// Runs the selected criteria on `jobs` threads; results come back in id order.
fn run_all(ids: &[u8], cfg: &SuiteConfig, jobs: usize) -> Result<Vec<CriterionResult>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<lpfraisse::Result<CriterionResult>>>> =
        Mutex::new(ids.iter().map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, ids.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&id) = ids.get(i) else { break };
                let r = run_criterion(id, cfg);
                slots.lock().expect("suite worker panicked")[i] = Some(r);
            });
        }
    });
    let slots = slots.into_inner().expect("suite worker panicked");
    slots
        .into_iter()
        .map(|r| Ok(r.expect("every criterion ran")?))
        .collect()
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    if let Some(path) = &cmd.replay {
        return replay(path);
    }
    let mut ids = if cmd.criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        cmd.criteria.clone()
    };
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        bail!("no criteria selected");
    }
    let scfg = SuiteConfig {
        seed: cfg.seed,
        scale: cmd.scale,
        falsification_trials: cfg.budget_colorings,
    };
    let results = run_all(&ids, &scfg, cfg.jobs)?;
    let mut ok = true;
    let rows: Vec<Value> = results
        .iter()
        .map(|r| {
            let pass = if cmd.timings {
                r.passed
            } else {
                r.property_holds
            };
            ok &= pass;
            let mut row = json!({
                "criterion": r.id,
                "name": r.name,
                "result": if pass { "pass" } else { "fail" },
                "checked": r.checked,
                "seed": r.seed,
                "scale": r.scale,
                "detail": r.detail,
            });
            if cmd.timings {
                row["elapsed_ms"] = r.elapsed_ms.into();
                row["budget_ms"] = r.budget_ms.into();
                row["within_budget"] = r.within_budget.into();
            }
            row
        })
        .collect();
    Report::new(rows, ok)
}
