//! Distinct measures with equal `p`-characteristics for even `p`, and a seeded
//! search showing the same construction fails for odd `p`.
//!
//! For even `p`, `|1 + az|^p = (1 + az)^p` is a polynomial of degree `p`, so
//! two measures sharing the moments of order `0..=p` have the same
//! characteristic. The `(p+2)`-th finite difference `σ_i = (−1)^i C(p+2, i)`
//! on `p + 3` equally spaced points annihilates every polynomial of degree
//! `≤ p + 1`; its positive and negative parts give the pair.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{levy_prokhorov, DiscreteMeasure};
use crate::numeric::binomial_f64;
use crate::rng::stream_rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub p: u32,
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    /// `max |μ̂(a) − ν̂(a)|` over the grid.
    pub char_diff: f64,
    pub grid: (f64, f64, usize),
    pub lp: f64,
}

fn char_int(atoms: &[(f64, f64)], a: f64, p: u32) -> f64 {
    let s: f64 = atoms
        .iter()
        .map(|(z, m)| m * (1.0 + a * z).abs().powi(p as i32))
        .sum();
    s.powf(1.0 / p as f64)
}

fn max_char_diff(mu: &[(f64, f64)], nu: &[(f64, f64)], p: u32, grid: (f64, f64, usize)) -> f64 {
    let (lo, hi, n) = grid;
    (0..n)
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            (char_int(mu, a, p) - char_int(nu, a, p)).abs()
        })
        .fold(0.0, f64::max)
}

/// Splits a signed measure into normalised positive and negative parts.
fn split(points: &[f64], sigma: &[f64]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let pos: f64 = sigma.iter().filter(|s| **s > 0.0).sum();
    let neg: f64 = -sigma.iter().filter(|s| **s < 0.0).sum::<f64>();
    let mu = points
        .iter()
        .zip(sigma)
        .filter(|(_, s)| **s > 0.0)
        .map(|(z, s)| (*z, s / pos))
        .collect();
    let nu = points
        .iter()
        .zip(sigma)
        .filter(|(_, s)| **s < 0.0)
        .map(|(z, s)| (*z, -s / neg))
        .collect();
    (mu, nu)
}

pub fn even_p_counterexample(p: u32) -> Result<Counterexample> {
    if p == 0 || p % 2 == 1 {
        return Err(Error::Invalid(format!(
            "p = {p} must be a positive even integer"
        )));
    }
    let n = p + 2;
    let half = n as f64 / 2.0;
    let points: Vec<f64> = (0..=n).map(|i| i as f64 - half).collect();
    let sigma: Vec<f64> = (0..=n)
        .map(|i| {
            if i % 2 == 0 {
                binomial_f64(n, i)
            } else {
                -binomial_f64(n, i)
            }
        })
        .collect();
    let (mu, nu) = split(&points, &sigma);
    let grid = (-10.0, 10.0, 1000);
    let char_diff = max_char_diff(&mu, &nu, p, grid);
    let mu = DiscreteMeasure::on_line(&mu)?;
    let nu = DiscreteMeasure::on_line(&nu)?;
    let lp = levy_prokhorov(&mu, &nu)?.value;
    Ok(Counterexample {
        p,
        mu,
        nu,
        char_diff,
        grid,
        lp,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddSearch {
    pub p: u32,
    pub trials: usize,
    /// Smallest grid discrepancy among pairs at Lévy–Prokhorov distance `≥ min_lp`.
    pub best_char_diff: f64,
    pub best_pair: Option<(DiscreteMeasure, DiscreteMeasure)>,
    pub min_lp: f64,
    /// Pairs with discrepancy below `threshold`.
    pub hits: usize,
    pub threshold: f64,
}

/// Seeded search: random `p + 2` separated points in `[−3, 3]`, the signed
/// measure killing the moments `0..=p`, and its normalised parts.
pub fn odd_p_search(p: u32, trials: usize, seed: u64, threshold: f64) -> Result<OddSearch> {
    let min_lp = 0.05;
    let grid = (-10.0, 10.0, 1000);
    let mut rng = stream_rng(seed, 0x0dd + p as u64);
    let mut out = OddSearch {
        p,
        trials: 0,
        best_char_diff: f64::INFINITY,
        best_pair: None,
        min_lp,
        hits: 0,
        threshold,
    };
    let k = p as usize + 2;
    while out.trials < trials {
        let mut pts: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        pts.sort_by(f64::total_cmp);
        if pts.windows(2).any(|w| w[1] - w[0] < 0.2) {
            continue;
        }
        out.trials += 1;
        let a = DMatrix::from_fn(k, k, |r, c| {
            if r <= p as usize {
                pts[c].powi(r as i32)
            } else {
                0.0
            }
        });
        let svd = a.svd(false, true);
        let Some(vt) = svd.v_t else { continue };
        let imin = svd.singular_values.imin();
        let sigma: Vec<f64> = vt.row(imin).iter().copied().collect();
        let (mu, nu) = split(&pts, &sigma);
        if mu.is_empty() || nu.is_empty() {
            continue;
        }
        let d = max_char_diff(&mu, &nu, p, grid);
        let (mu, nu) = (
            DiscreteMeasure::on_line(&mu)?,
            DiscreteMeasure::on_line(&nu)?,
        );
        if levy_prokhorov(&mu, &nu)?.value < min_lp {
            continue;
        }
        if d < threshold {
            out.hits += 1;
        }
        if d < out.best_char_diff {
            out.best_char_diff = d;
            out.best_pair = Some((mu, nu));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_is_the_classical_pair() {
        let c = even_p_counterexample(2).unwrap();
        assert_eq!(
            c.nu,
            DiscreteMeasure::on_line(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
        );
        assert_eq!(
            c.mu,
            DiscreteMeasure::on_line(&[(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)]).unwrap()
        );
        assert!(c.char_diff < 1e-10 && c.lp > 0.1, "{c:?}");
    }

    #[test]
    fn p4_pair() {
        let c = even_p_counterexample(4).unwrap();
        assert!(c.char_diff < 1e-10 && c.lp > 0.1, "{c:?}");
        assert!(even_p_counterexample(3).is_err());
    }

    #[test]
    fn odd_search_small() {
        let s = odd_p_search(3, 200, 7, 1e-6).unwrap();
        assert_eq!(s.hits, 0);
        assert!(s.best_char_diff > 1e-6);
    }
}
