//! `#Equi_δ(n, S)` by convolution over preimage sizes.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::numeric::{ln_factorials, log_add_exp};

/// Above this `n` counts are computed in floating point only.
pub const EXACT_LIMIT: usize = 1000;

/// Preimage sizes `k ≥ 1` allowed by `n/s·(1−δ) ≤ k ≤ n/s·(1+δ)`.
pub fn window(n: usize, s: usize, delta: &BigRational) -> RangeInclusive<usize> {
    let base = BigRational::new(BigInt::from(n), BigInt::from(s));
    let one = BigRational::one();
    let lo = (&base * (&one - delta)).ceil().to_integer();
    let hi = (&base * (&one + delta)).floor().to_integer();
    let lo = lo.to_i64().unwrap_or(i64::MAX).max(1) as usize;
    let hi = hi.to_i64().unwrap_or(0).clamp(0, n as i64) as usize;
    lo..=hi
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquiCount {
    pub n: usize,
    pub s: usize,
    #[serde(with = "crate::numeric::serde_rational")]
    pub delta: BigRational,
    /// Exact `#Equi_δ(n, S)` when `n ≤ EXACT_LIMIT`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_biguint")]
    pub count: Option<BigUint>,
    /// `#Equi_δ(n, S)/s^n`.
    pub fraction: f64,
    pub ln_fraction: f64,
}

mod opt_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_str(&b.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Exact count through `h_i(t) = Σ_{k ∈ W} C(t, k)·h_{i−1}(t − k)`.
fn exact_count(n: usize, s: usize, w: &RangeInclusive<usize>) -> BigUint {
    let (lo, hi) = (*w.start(), *w.end());
    if lo > hi {
        return BigUint::zero();
    }
    let mut h = vec![BigUint::zero(); n + 1];
    h[0] = BigUint::one();
    for i in 1..=s {
        let mut next = vec![BigUint::zero(); n + 1];
        let ts: Vec<usize> = if i == s {
            vec![n]
        } else {
            (lo * i..=(hi * i).min(n)).collect()
        };
        for t in ts {
            if t < lo {
                continue;
            }
            let mut c = binomial(t, lo);
            let mut acc = BigUint::zero();
            for k in lo..=hi.min(t) {
                if !h[t - k].is_zero() {
                    acc += &c * &h[t - k];
                }
                c = c * (t - k) / (k + 1);
            }
            next[t] = acc;
        }
        h = next;
    }
    std::mem::take(&mut h[n])
}

fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, j| acc * (n - j) / (j + 1))
}

fn ln_big(b: &BigUint) -> f64 {
    if b.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = b.bits();
    let shift = bits.saturating_sub(60);
    (b >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Fraction of maps `n → s` whose preimage sizes all lie in the window, through
/// `r_i(t) = Σ_k Bin(t, 1/i)(k)·r_{i−1}(t − k)`.
pub fn count_equi_f64(n: usize, s: usize, delta: &BigRational) -> f64 {
    let w = window(n, s, delta);
    let (lo, hi) = (*w.start(), *w.end());
    if lo > hi || s == 0 {
        return 0.0;
    }
    let lf = ln_factorials(n);
    let mut r = vec![0.0; n + 1];
    (lo..=hi.min(n)).for_each(|t| r[t] = 1.0);
    for i in 2..=s {
        let p = 1.0 / i as f64;
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let ratio = p / (1.0 - p);
        let mut next = vec![0.0; n + 1];
        let ts: Vec<usize> = if i == s {
            vec![n]
        } else {
            (lo * i..=(hi * i).min(n)).collect()
        };
        for t in ts {
            let kmax = hi.min(t);
            if kmax < lo {
                continue;
            }
            let mode = ((t as f64 * p).round() as usize).clamp(lo, kmax);
            let pmf_at =
                |k: usize| (lf[t] - lf[k] - lf[t - k] + k as f64 * lp + (t - k) as f64 * lq).exp();
            let mut acc = 0.0;
            let mut pk = pmf_at(mode);
            for k in mode..=kmax {
                acc += pk * r[t - k];
                pk *= (t - k) as f64 / (k + 1) as f64 * ratio;
            }
            let mut pk = pmf_at(mode);
            for k in (lo..mode).rev() {
                pk *= (k + 1) as f64 / (t - k) as f64 / ratio;
                acc += pk * r[t - k];
            }
            next[t] = acc;
        }
        r = next;
    }
    r[n].min(1.0)
}

pub fn count_equi(n: usize, s: usize, delta: &BigRational) -> EquiCount {
    let w = window(n, s, delta);
    if n <= EXACT_LIMIT && s >= 1 {
        let count = exact_count(n, s, &w);
        let ln_fraction = ln_big(&count) - n as f64 * (s as f64).ln();
        return EquiCount {
            n,
            s,
            delta: delta.clone(),
            count: Some(count),
            fraction: ln_fraction.exp(),
            ln_fraction,
        };
    }
    let fraction = count_equi_f64(n, s, delta);
    EquiCount {
        n,
        s,
        delta: delta.clone(),
        count: None,
        fraction,
        ln_fraction: fraction.ln(),
    }
}

/// `ln(1 − #Equi_δ(n, 2)/2^n)`, summing both binomial tails in log space. Stays
/// informative where the fraction itself rounds to 1.
pub fn ln_miss_fraction_binary(n: usize, delta: &BigRational) -> f64 {
    let w = window(n, 2, delta);
    let lf = ln_factorials(n);
    let ln_half = -(n as f64) * std::f64::consts::LN_2;
    (0..=n)
        .filter(|&k| !(w.contains(&k) && w.contains(&(n - k))))
        .map(|k| lf[n] - lf[k] - lf[n - k] + ln_half)
        .fold(f64::NEG_INFINITY, log_add_exp)
}

/// `1 − exp(−δ²n/(9(s(s−1))²))`.
pub fn eq22_bound(n: usize, s: usize, delta: f64) -> f64 {
    let c = (s * (s - 1)) as f64;
    1.0 - (-delta * delta * n as f64 / (9.0 * c * c)).exp()
}

/// The `n_δ` produced by the concentration argument for the bound above: with
/// `η = δ/(s(s−1))` and `γ` such that `8/9 < (1−γ)²`, every `n` with
/// `η²((1−γ)²/8 − 1/9)·n ≥ ln s` and `(ηγ)²n/8 > ln s` qualifies. Minimised over a grid in `γ`.
pub fn eq22_threshold(s: usize, delta: f64) -> u64 {
    let eta = delta / (s * (s - 1)) as f64;
    let ls = (s as f64).ln();
    let gmax = 1.0 - (8.0f64 / 9.0).sqrt();
    (1..10_000)
        .map(|i| {
            let g = gmax * i as f64 / 10_000.0;
            let c1 = eta * eta * ((1.0 - g).powi(2) / 8.0 - 1.0 / 9.0);
            let n1 = (ls / c1).ceil();
            let n2 = (8.0 * ls / (eta * g).powi(2)).floor() + 1.0;
            n1.max(n2)
        })
        .fold(f64::INFINITY, f64::min) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn binary_miss_fraction_matches_exact_count() {
        for n in 1..=60 {
            for d in [rat(0, 1), rat(1, 10), rat(3, 10), rat(1, 1)] {
                let c = count_equi(n, 2, &d);
                let miss = BigRational::from_integer(BigInt::one()) - exact_fraction(&c, n, 2);
                let got = ln_miss_fraction_binary(n, &d);
                if miss.is_zero() {
                    assert_eq!(got, f64::NEG_INFINITY);
                } else {
                    let want = miss.to_f64().unwrap().ln();
                    assert!(
                        (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                        "n={n} δ={d}: {got} vs {want}"
                    );
                }
            }
        }
    }

    fn exact_fraction(c: &EquiCount, n: usize, s: usize) -> BigRational {
        let count = BigInt::from(c.count.clone().unwrap());
        BigRational::new(count, BigInt::from(s).pow(n as u32))
    }

    fn brute(n: usize, s: usize, delta: &BigRational) -> u64 {
        let w = window(n, s, delta);
        let total = s.pow(n as u32);
        (0..total)
            .filter(|&code| {
                let mut c = vec![0; s];
                let mut x = code;
                for _ in 0..n {
                    c[x % s] += 1;
                    x /= s;
                }
                c.iter().all(|k| w.contains(k))
            })
            .count() as u64
    }

    #[test]
    fn small_examples() {
        assert_eq!(
            count_equi(4, 2, &rat(0, 1)).count.unwrap(),
            BigUint::from(6u32)
        );
        assert_eq!(
            count_equi(4, 2, &rat(1, 2)).count.unwrap(),
            BigUint::from(14u32)
        );
    }

    #[test]
    fn matches_enumeration() {
        for (n, s) in [(6, 2), (5, 3), (4, 4), (8, 2), (7, 3)] {
            for d in [rat(0, 1), rat(1, 10), rat(3, 10), rat(1, 2), rat(1, 1)] {
                let c = count_equi(n, s, &d);
                assert_eq!(
                    c.count.clone().unwrap(),
                    BigUint::from(brute(n, s, &d)),
                    "n={n} s={s} δ={d}"
                );
                let f = count_equi_f64(n, s, &d);
                assert!((f - c.fraction).abs() < 1e-12, "{f} vs {}", c.fraction);
            }
        }
    }

    #[test]
    fn float_dp_agrees_at_scale() {
        let d = rat(1, 10);
        let e = count_equi(1000, 3, &d);
        let f = count_equi_f64(1000, 3, &d);
        assert!((e.fraction - f).abs() < 1e-10, "{} vs {f}", e.fraction);
    }

    #[test]
    fn threshold_is_finite() {
        let n = eq22_threshold(2, 0.1);
        assert!(n > 1000 && n < u64::MAX);
    }
}
