use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Subcommand;
use lpfraisse::equi::{
    count_equi, eq21_bound, eq22_bound, eq22_threshold, hamming, match_permutation, round_to_exact,
    sufficient_n_certificate, Equisurjection, IsoperimetricTable, SearchBudget, DOWNSET_BUDGET,
};
use lpfraisse::numeric::{format_rational, rational_to_f64};
use lpfraisse::Error;
use num_rational::BigRational;
use serde_json::json;

use crate::input::rational;
use crate::output::Report;
use crate::RunConfig;

#[derive(Subcommand)]
pub enum Cmd {
    /// Least δ for which a surjection T → S is a δ-equisurjection.
    Delta {
        /// Values `f(0), …, f(|T|−1)`, comma separated.
        #[arg(long, value_delimiter = ',')]
        map: Vec<usize>,
        #[arg(short, long)]
        s: usize,
    },
    /// Normalised Hamming distance between two maps T → S.
    Distance {
        #[arg(long, value_delimiter = ',')]
        f: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        g: Vec<usize>,
        #[arg(short, long)]
        s: usize,
    },
    /// Permutation π of T with ψ∘π close to φ.
    Match {
        #[arg(long, value_delimiter = ',')]
        phi: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        psi: Vec<usize>,
        #[arg(short, long)]
        s: usize,
    },
    /// Nearest exact equisurjection (|S| must divide |T|).
    Round {
        #[arg(long, value_delimiter = ',')]
        map: Vec<usize>,
        #[arg(short, long)]
        s: usize,
    },
    /// #Equi_δ(n, S) and its fraction of all maps, with the printed lower bound.
    Count {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        s: usize,
        #[arg(long, value_parser = rational)]
        delta: BigRational,
    },
    /// Concentration α for sets of size a fattened by t coordinates in the cube [s]^n.
    Alpha {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        s: usize,
        #[arg(short, long)]
        a: usize,
        #[arg(short, long)]
        t: usize,
    },
    /// Sufficient n for the equipartition Ramsey property, with a replayable certificate.
    Certify {
        #[arg(short, long)]
        d: u64,
        #[arg(short, long)]
        m: u64,
        #[arg(short, long)]
        r: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_parser = rational)]
        delta: BigRational,
        /// Also write the certificate (JSON lines) to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cmd: Cmd, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Cmd::Delta { map, s } => {
            let f = Equisurjection::new(map, s)?;
            let delta = f.delta()?;
            Report::new(
                json!({ "delta": format_rational(&delta), "preimage_sizes": f.preimage_sizes() }),
                true,
            )
        }
        Cmd::Distance { f, g, s } => {
            let d = hamming(&Equisurjection::new(f, s)?, &Equisurjection::new(g, s)?)?;
            Report::new(json!({ "distance": format_rational(&d) }), true)
        }
        Cmd::Match { phi, psi, s } => {
            let (phi, psi) = (Equisurjection::new(phi, s)?, Equisurjection::new(psi, s)?);
            let pi = match_permutation(&phi, &psi)?;
            let matched = psi.permute(&pi)?;
            let distance = hamming(&matched, &phi)?;
            let bound = (phi.delta()? + psi.delta()?) / BigRational::from_integer(2.into());
            let ok = distance <= bound;
            let body = json!({
                "permutation": pi,
                "distance": format_rational(&distance),
                "bound": format_rational(&bound),
            });
            Report::new(body, ok)
        }
        Cmd::Round { map, s } => {
            let f = Equisurjection::new(map, s)?;
            let g = round_to_exact(&f)?;
            let distance = hamming(&f, &g)?;
            Report::new(
                json!({ "rounded": g.map, "distance": format_rational(&distance) }),
                true,
            )
        }
        Cmd::Count { n, s, delta } => {
            let c = count_equi(n, s, &delta);
            let df = rational_to_f64(&delta);
            let bound = eq22_bound(n, s, df);
            let threshold = eq22_threshold(s, df);
            let applies = n as u64 >= threshold;
            let ok = !applies || c.fraction >= bound;
            let body = json!({ "count": c, "lower_bound": bound, "threshold": threshold, "bound_applies": applies });
            Report::new(body, ok)
        }
        Cmd::Alpha { n, s, a, t } => {
            let table = IsoperimetricTable::build(n, s, DOWNSET_BUDGET).with_context(|| {
                format!("cube [{s}]^{n} is too large for the isoperimetric table")
            })?;
            let c = table.alpha(a, t);
            let eps = t as f64 / n as f64;
            let bound = eq21_bound(n, eps);
            let applies = 2 * c.a >= s.pow(n as u32);
            let ok = !applies || c.upper <= bound * (1.0 + 1e-12);
            let body =
                json!({ "concentration": c, "eps": eps, "bound": bound, "bound_applies": applies });
            Report::new(body, ok)
        }
        Cmd::Certify {
            d,
            m,
            r,
            eps,
            delta,
            out,
        } => {
            match sufficient_n_certificate(
                d,
                m,
                r,
                eps,
                &delta,
                SearchBudget {
                    max_n: cfg.budget_n,
                },
            ) {
                Ok(cert) => {
                    let lines = cert.to_json_lines();
                    if let Some(path) = out {
                        std::fs::write(&path, format!("{lines}\n"))
                            .with_context(|| format!("writing {}", path.display()))?;
                    }
                    let ok = cert.verdict && cert.replay();
                    let mut report = Report::new(&cert, ok)?;
                    report.raw_json = Some(format!("{lines}\n"));
                    Ok(report)
                }
                Err(Error::Budget(reason)) => {
                    let body = json!({
                        "d": d, "m": m, "r": r, "eps": eps, "delta": format_rational(&delta),
                        "max_n": cfg.budget_n, "uncertified": true, "reason": reason,
                    });
                    Report::new(body, false)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}
