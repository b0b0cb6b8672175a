//! The smoothed step `G_p(·, a, ε)` for odd `p` and CDF recovery from the
//! `p`-characteristic.
//!
//! Using `|t|^p = 2t_+^p − t^p` and `Σ_j (−1)^j C(p,j)(y − jε)^p = p!ε^p`,
//! `G_p(x) = 1 − S(y)/(p!ε^p)` with `y = x − a` and
//! `S(y) = Σ_j (−1)^j C(p,j)(y − jε)_+^p`, a cardinal B-spline integral.
//! Only the `j < y/ε` terms survive, and the reflection
//! `G(y) = 1 − G(pε − y)` keeps the number of terms below `p/2`.

use serde::{Deserialize, Serialize};

use crate::numeric::{binomial_f64, factorial_f64, Compensated};
use crate::{Error, Result};

fn check(eps: f64, p: u32) -> Result<()> {
    if p % 2 == 0 {
        return Err(Error::Invalid(format!("p = {p} must be odd")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Invalid("ε must be positive".into()));
    }
    Ok(())
}

/// `Σ_{j < u} (−1)^j C(p,j)(u − j)^p / p!` for `u ∈ [0, p/2]`.
fn spline_tail(u: f64, p: u32) -> f64 {
    let mut s = Compensated::new();
    let mut j = 0u32;
    while (j as f64) < u && j <= p {
        let term = binomial_f64(p, j) * (u - j as f64).powi(p as i32);
        s.add(if j % 2 == 0 { term } else { -term });
        j += 1;
    }
    s.value() / factorial_f64(p)
}

/// `G_p(x, a, ε)` for odd `p`.
pub fn gp(x: f64, a: f64, eps: f64, p: u32) -> Result<f64> {
    check(eps, p)?;
    let u = (x - a) / eps;
    let pf = p as f64;
    let v = if u <= 0.0 {
        1.0
    } else if u >= pf {
        0.0
    } else if u <= pf / 2.0 {
        1.0 - spline_tail(u, p)
    } else {
        spline_tail(pf - u, p)
    };
    Ok(v.clamp(0.0, 1.0))
}

/// `G_p` evaluated term by term from its defining sum (a cross-check; loses
/// accuracy through cancellation for larger `p`).
pub fn gp_literal(x: f64, a: f64, eps: f64, p: u32) -> Result<f64> {
    check(eps, p)?;
    let mut s = Compensated::new();
    for j in 0..=p {
        let t = binomial_f64(p, j) * (x - (a + j as f64 * eps)).abs().powi(p as i32);
        s.add(if j % 2 == 1 { t } else { -t });
    }
    Ok(0.5 + s.value() / (2.0 * factorial_f64(p) * eps.powi(p as i32)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    /// `∫ G_p(x, a, ε) dμ(x)`, which lies in `[μ(−∞, a], μ(−∞, a + εp]]`.
    pub value: f64,
    /// Argument actually used (shifted when some `a + jε` vanished).
    pub a_used: f64,
    pub jittered: bool,
}

/// Jitter applied to `a` when one of the shifts `a + jε` is zero.
pub const JITTER: f64 = 1e-9;

/// Recovers `∫ G_p(x, a, ε) dμ` from the characteristic alone, through
/// `∫|x + c|^p dμ = |c|^p μ̂(1/c)^p` and `‖μ‖ = μ̂(0)^p`.
pub fn invert_cdf(char_fn: &dyn Fn(f64) -> f64, a: f64, eps: f64, p: u32) -> Result<Inversion> {
    check(eps, p)?;
    let mut a_used = a;
    let mut jittered = false;
    while (0..=p).any(|j| (a_used + j as f64 * eps).abs() < 1e-12) {
        a_used += JITTER;
        jittered = true;
    }
    let pi = p as i32;
    let mass = char_fn(0.0).powi(pi);
    let mut s = Compensated::new();
    for j in 0..=p {
        let c = a_used + j as f64 * eps;
        let t = binomial_f64(p, j) * c.abs().powi(pi) * char_fn(-1.0 / c).powi(pi);
        s.add(if j % 2 == 1 { t } else { -t });
    }
    let value = 0.5 * mass + s.value() / (2.0 * factorial_f64(p) * eps.powi(pi));
    Ok(Inversion {
        value,
        a_used,
        jittered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{p_characteristic, DiscreteMeasure};

    #[test]
    fn g3_examples() {
        assert_eq!(gp(1.5, 2.0, 1.0, 3).unwrap(), 1.0);
        assert_eq!(gp(5.0, 2.0, 1.0, 3).unwrap(), 0.0);
        assert!((gp(3.5, 2.0, 1.0, 3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stable_form_matches_literal_sum() {
        for p in [1u32, 3, 5] {
            for i in 0..200 {
                let x = -1.0 + i as f64 * 0.05;
                let (a, b) = (
                    gp(x, 0.3, 0.7, p).unwrap(),
                    gp_literal(x, 0.3, 0.7, p).unwrap(),
                );
                assert!((a - b).abs() < 1e-10, "p={p} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reflection_identity() {
        let (a, eps) = (0.4, 0.3);
        for i in 0..100 {
            let x = a + 5.0 * eps * i as f64 / 100.0;
            let s = gp(x, a, eps, 5).unwrap() + gp(2.0 * a + 5.0 * eps - x, a, eps, 5).unwrap();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn inversion_examples() {
        let d0 = DiscreteMeasure::on_line(&[(0.0, 1.0)]).unwrap();
        let f = |b: f64| p_characteristic(&d0, &[b], 3.0);
        assert!((invert_cdf(&f, 1.0, 0.2, 3).unwrap().value - 1.0).abs() < 1e-12);
        let d1 = DiscreteMeasure::on_line(&[(1.0, 1.0)]).unwrap();
        let g = |b: f64| p_characteristic(&d1, &[b], 3.0);
        let r = invert_cdf(&g, 0.0, 0.1, 3).unwrap();
        assert!(r.jittered && r.value.abs() < 1e-9, "{r:?}");
    }
}
