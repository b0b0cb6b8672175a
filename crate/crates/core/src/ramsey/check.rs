//! Ramsey checks for `Equi_δ(n, d)`: exhaustive sweeps over all colourings at
//! tiny scale, and seeded falsification runs over hash-defined colourings.
//!
//! The statement tested: every `r`-colouring of `Equi_δ(n, d)` admits
//! `R ∈ Equi(n, m)` and a colour whose closed `(δ+ε)`-fattening contains
//! `Equi_δ(m, d)∘R`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::equi::{count_equi, window, Equisurjection};
use crate::numeric::format_rational;
use crate::rng::{splitmix64, stream_rng};
use crate::{Error, Result};

/// Largest number of colourings swept exhaustively.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 24;
pub const DEFAULT_FALSIFICATION_TRIALS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    Exhaustive,
    Falsification,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    /// Every colouring has a monochromatic orbit (exhaustive mode only).
    Holds,
    /// A colouring with no `(δ+ε)`-monochromatic orbit: `colouring[i]` colours `elements[i]`.
    Counterexample {
        elements: Vec<Vec<usize>>,
        colouring: Vec<usize>,
    },
    /// Every sampled colouring had a witness; says nothing about other colourings.
    NoCounterexampleFound,
    /// The witness search gave up on a sampled colouring; not a counterexample.
    Unresolved { trial: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyCheck {
    pub mode: CheckMode,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub r: usize,
    pub eps: String,
    pub delta: String,
    /// `#Equi_δ(n, d)`, as a decimal string.
    pub equi_size: String,
    pub orbit_size: usize,
    pub colourings_checked: u64,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

impl RamseyCheck {
    /// False only for a genuine counterexample or an unresolved trial.
    pub fn passed(&self) -> bool {
        matches!(
            self.verdict,
            Verdict::Holds | Verdict::NoCounterexampleFound
        )
    }
}

/// Every map `n → s` whose preimage sizes lie in `window(n, s, δ)`, in lexicographic order.
pub fn enumerate_equi(n: usize, s: usize, delta: &BigRational) -> Vec<Vec<usize>> {
    let w = window(n, s, delta);
    let (lo, hi) = (*w.start(), *w.end());
    let mut out = Vec::new();
    if lo > hi || lo * s > n || hi * s < n {
        return out;
    }
    let mut cur = vec![0; n];
    let mut counts = vec![0; s];
    fn rec(
        t: usize,
        cur: &mut Vec<usize>,
        counts: &mut Vec<usize>,
        lo: usize,
        hi: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let n = cur.len();
        let deficit: usize = counts.iter().map(|&c| lo.saturating_sub(c)).sum();
        if deficit > n - t {
            return;
        }
        if t == n {
            out.push(cur.clone());
            return;
        }
        for v in 0..counts.len() {
            if counts[v] < hi {
                cur[t] = v;
                counts[v] += 1;
                rec(t + 1, cur, counts, lo, hi, out);
                counts[v] -= 1;
            }
        }
    }
    rec(0, &mut cur, &mut counts, lo, hi, &mut out);
    out
}

fn validate(
    n: usize,
    d: usize,
    m: usize,
    r: usize,
    eps: &BigRational,
    delta: &BigRational,
) -> Result<()> {
    if d == 0 || m < d || n < m || r == 0 {
        return Err(Error::Invalid(format!(
            "need 1 ≤ d ≤ m ≤ n and r ≥ 1, got n={n} d={d} m={m} r={r}"
        )));
    }
    if n % m != 0 {
        return Err(Error::Precondition(format!(
            "Equi(n, m) is empty: {m} does not divide {n}"
        )));
    }
    if eps <= &BigRational::from_integer(0.into()) || delta < &BigRational::from_integer(0.into()) {
        return Err(Error::Invalid(
            "ε must be positive and δ nonnegative".into(),
        ));
    }
    Ok(())
}

/// Number of coordinates two maps on `n` points may differ in while staying within `δ + ε`.
fn radius_count(n: usize, eps: &BigRational, delta: &BigRational) -> usize {
    ((eps + delta) * BigRational::from_integer(BigInt::from(n)))
        .floor()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX)
}

fn orbit_maps(
    n: usize,
    d: usize,
    m: usize,
    delta: &BigRational,
    r_map: &[usize],
) -> Vec<Vec<usize>> {
    debug_assert_eq!(r_map.len(), n);
    enumerate_equi(m, d, delta)
        .into_iter()
        .map(|g| r_map.iter().map(|&t| g[t]).collect())
        .collect()
}

/// Decides the statement by sweeping all `r^#Equi_δ(n,d)` colourings in modular Gray-code
/// order; colour-class fattenings are maintained incrementally as bitmasks.
pub fn exhaustive_ramsey_check(
    n: usize,
    d: usize,
    m: usize,
    r: usize,
    eps: &BigRational,
    delta: &BigRational,
    max_colourings: u64,
) -> Result<RamseyCheck> {
    validate(n, d, m, r, eps, delta)?;
    let size = count_equi(n, d, delta)
        .count
        .ok_or_else(|| Error::Budget("Equi_δ(n, d) too large to count".into()))?;
    let size = size.to_usize().filter(|&s| s <= 63).ok_or_else(|| {
        Error::Budget(format!(
            "#Equi_δ({n},{d}) = {size} exceeds the exhaustive limit"
        ))
    })?;
    let total = (r as u64)
        .checked_pow(size as u32)
        .filter(|&t| t <= max_colourings)
        .ok_or_else(|| {
            Error::Budget(format!(
                "{r}^{size} colourings exceed the exhaustive budget {max_colourings}"
            ))
        })?;
    let elems = enumerate_equi(n, d, delta);
    debug_assert_eq!(elems.len(), size);
    let index: HashMap<&[usize], usize> = elems
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_slice(), i))
        .collect();
    let rad = radius_count(n, eps, delta);
    let balls: Vec<Vec<usize>> = elems
        .iter()
        .map(|a| {
            (0..size)
                .filter(|&b| a.iter().zip(&elems[b]).filter(|(x, y)| x != y).count() <= rad)
                .collect()
        })
        .collect();
    let mut orbits: Vec<u64> = enumerate_equi(n, m, &BigRational::from_integer(0.into()))
        .iter()
        .map(|rm| {
            orbit_maps(n, d, m, delta, rm)
                .iter()
                .try_fold(0u64, |acc, f| {
                    index
                        .get(f.as_slice())
                        .map(|&i| acc | (1 << i))
                        .ok_or_else(|| Error::Internal("orbit left Equi_δ(n, d)".into()))
                })
        })
        .collect::<Result<_>>()?;
    orbits.sort_unstable();
    orbits.dedup();
    let orbit_size = orbit_maps(n, d, m, delta, &Equisurjection::canonical(n, m)?.map).len();

    let mut colour = vec![0usize; size];
    let mut cover = vec![vec![0u32; size]; r];
    for (e, ball) in balls.iter().enumerate() {
        cover[0][e] = ball.len() as u32;
    }
    let mut fat = vec![0u64; r];
    fat[0] = (1u64 << size) - 1;
    let mono = |fat: &[u64]| orbits.iter().any(|&o| fat.iter().any(|&f| o & !f == 0));

    let mut checked = 0u64;
    for k in 0..total {
        if k > 0 {
            let mut j = 0;
            let mut x = k;
            while x % r as u64 == 0 {
                x /= r as u64;
                j += 1;
            }
            let (old, new) = (colour[j], (colour[j] + 1) % r);
            colour[j] = new;
            for &e in &balls[j] {
                cover[old][e] -= 1;
                if cover[old][e] == 0 {
                    fat[old] &= !(1 << e);
                }
                cover[new][e] += 1;
                fat[new] |= 1 << e;
            }
        }
        checked += 1;
        if !mono(&fat) {
            return Ok(RamseyCheck {
                mode: CheckMode::Exhaustive,
                n,
                d,
                m,
                r,
                eps: format_rational(eps),
                delta: format_rational(delta),
                equi_size: size.to_string(),
                orbit_size,
                colourings_checked: checked,
                seed: None,
                verdict: Verdict::Counterexample {
                    elements: elems,
                    colouring: colour,
                },
            });
        }
    }
    Ok(RamseyCheck {
        mode: CheckMode::Exhaustive,
        n,
        d,
        m,
        r,
        eps: format_rational(eps),
        delta: format_rational(delta),
        equi_size: size.to_string(),
        orbit_size,
        colourings_checked: checked,
        seed: None,
        verdict: Verdict::Holds,
    })
}

/// Candidate witnesses per orbit element in falsification mode.
const NEIGHBOURS: usize = 48;
/// Embeddings `R` tried per colouring before a trial counts as unresolved.
const R_CANDIDATES: usize = 4;

struct Zobrist {
    d: usize,
    table: Vec<u64>,
}

impl Zobrist {
    fn new(n: usize, d: usize, seed: u64) -> Self {
        let base = splitmix64(seed ^ 0x2b0b_1257);
        Self {
            d,
            table: (0..n * d)
                .map(|i| splitmix64(base.wrapping_add(i as u64)))
                .collect(),
        }
    }

    fn h(&self, t: usize, c: usize) -> u64 {
        self.table[t * self.d + c]
    }

    fn hash(&self, f: &[usize]) -> u64 {
        f.iter()
            .enumerate()
            .fold(0u64, |acc, (t, &c)| acc.wrapping_add(self.h(t, c)))
    }
}

/// Hashes of `F` and of up to `NEIGHBOURS` maps in `Equi_δ(n, d)` within `rad` coordinates of
/// `F`: single-coordinate changes first, then transpositions of two values.
fn witness_hashes(
    z: &Zobrist,
    f: &[usize],
    d: usize,
    lo: usize,
    hi: usize,
    rad: usize,
) -> Vec<u64> {
    let h0 = z.hash(f);
    let mut out = vec![h0];
    let mut counts = vec![0; d];
    f.iter().for_each(|&c| counts[c] += 1);
    if rad >= 1 {
        'single: for (t, &a) in f.iter().enumerate() {
            for b in 0..d {
                if b != a && counts[a] > lo && counts[b] < hi {
                    out.push(h0.wrapping_sub(z.h(t, a)).wrapping_add(z.h(t, b)));
                    if out.len() > NEIGHBOURS {
                        break 'single;
                    }
                }
            }
        }
    }
    if rad >= 2 && out.len() <= NEIGHBOURS {
        'pair: for t in 0..f.len() {
            for u in t + 1..f.len() {
                let (a, b) = (f[t], f[u]);
                if a != b {
                    let h = h0
                        .wrapping_sub(z.h(t, a))
                        .wrapping_sub(z.h(u, b))
                        .wrapping_add(z.h(t, b))
                        .wrapping_add(z.h(u, a));
                    out.push(h);
                    if out.len() > NEIGHBOURS {
                        break 'pair;
                    }
                }
            }
        }
    }
    out
}

/// Seeded falsification: colouring number `k` sends `F` to `splitmix64(key_k ⊕ H(F)) mod r`,
/// with `H` a Zobrist hash. Each colouring is searched for a monochromatic orbit; reports
/// "no counterexample found" at best, since neither the colourings nor the witnesses are exhaustive.
pub fn falsify_ramsey(
    n: usize,
    d: usize,
    m: usize,
    r: usize,
    eps: &BigRational,
    delta: &BigRational,
    trials: u64,
    seed: u64,
) -> Result<RamseyCheck> {
    validate(n, d, m, r, eps, delta)?;
    let w = window(n, d, delta);
    let (lo, hi) = (*w.start(), *w.end());
    if lo > hi || lo * d > n || hi * d < n {
        return Err(Error::Precondition(format!("Equi_δ({n},{d}) is empty")));
    }
    let rad = radius_count(n, eps, delta);
    let z = Zobrist::new(n, d, seed);
    let canonical = Equisurjection::canonical(n, m)?.map;
    let mut rng = stream_rng(seed, 0x7a);
    let mut r_maps = vec![canonical.clone()];
    while r_maps.len() < R_CANDIDATES {
        let mut p = canonical.clone();
        rand::seq::SliceRandom::shuffle(p.as_mut_slice(), &mut rng);
        r_maps.push(p);
    }
    // For each R, for each orbit element, the hashes of its candidate witnesses.
    let candidates: Vec<Vec<Vec<u64>>> = r_maps
        .iter()
        .map(|rm| {
            orbit_maps(n, d, m, delta, rm)
                .iter()
                .map(|f| witness_hashes(&z, f, d, lo, hi, rad))
                .collect()
        })
        .collect();
    let orbit_size = candidates[0].len();
    let key_base = splitmix64(seed ^ 0xc01_0u64);
    let rr = r as u64;
    for k in 0..trials {
        let key = splitmix64(key_base.wrapping_add(k));
        let colour = |h: u64| (splitmix64(key ^ h) % rr) as usize;
        let found = candidates
            .iter()
            .any(|orbit| (0..r).any(|c| orbit.iter().all(|hs| hs.iter().any(|&h| colour(h) == c))));
        if !found {
            return Ok(report_falsification(
                n,
                d,
                m,
                r,
                eps,
                delta,
                orbit_size,
                k + 1,
                seed,
                Verdict::Unresolved { trial: k },
            ));
        }
    }
    Ok(report_falsification(
        n,
        d,
        m,
        r,
        eps,
        delta,
        orbit_size,
        trials,
        seed,
        Verdict::NoCounterexampleFound,
    ))
}

#[allow(clippy::too_many_arguments)]
fn report_falsification(
    n: usize,
    d: usize,
    m: usize,
    r: usize,
    eps: &BigRational,
    delta: &BigRational,
    orbit_size: usize,
    checked: u64,
    seed: u64,
    verdict: Verdict,
) -> RamseyCheck {
    let c = count_equi(n, d, delta);
    let equi_size = match c.count {
        Some(b) => b.to_string(),
        None => format!("≈ exp({:.1})", c.ln_fraction + n as f64 * (d as f64).ln()),
    };
    RamseyCheck {
        mode: CheckMode::Falsification,
        n,
        d,
        m,
        r,
        eps: format_rational(eps),
        delta: format_rational(delta),
        equi_size,
        orbit_size,
        colourings_checked: checked,
        seed: Some(seed),
        verdict,
    }
}

/// Exhaustive when `r^#Equi_δ(n,d) ≤ max_colourings`; otherwise falsification if allowed.
#[allow(clippy::too_many_arguments)]
pub fn ramsey_check(
    n: usize,
    d: usize,
    m: usize,
    r: usize,
    eps: &BigRational,
    delta: &BigRational,
    max_colourings: u64,
    allow_falsification: bool,
    trials: u64,
    seed: u64,
) -> Result<RamseyCheck> {
    match exhaustive_ramsey_check(n, d, m, r, eps, delta, max_colourings) {
        Err(Error::Budget(_)) if allow_falsification => {
            falsify_ramsey(n, d, m, r, eps, delta, trials, seed)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn enumeration_matches_count() {
        for (n, s, d) in [(6, 2, rat(0, 1)), (6, 3, rat(1, 2)), (5, 2, rat(1, 5))] {
            let e = enumerate_equi(n, s, &d);
            assert_eq!(
                e.len().to_string(),
                count_equi(n, s, &d).count.unwrap().to_string()
            );
        }
        assert_eq!(enumerate_equi(6, 2, &rat(0, 1)).len(), 20);
    }

    #[test]
    fn single_colour_holds() {
        let c =
            exhaustive_ramsey_check(4, 2, 4, 1, &rat(1, 10), &rat(0, 1), EXHAUSTIVE_LIMIT).unwrap();
        assert_eq!(c.verdict, Verdict::Holds);
        assert_eq!(c.colourings_checked, 1);
    }

    #[test]
    fn n6_d2_m2_sweep() {
        let c =
            exhaustive_ramsey_check(6, 2, 2, 2, &rat(1, 2), &rat(0, 1), EXHAUSTIVE_LIMIT).unwrap();
        assert_eq!(c.colourings_checked, 1 << 20);
        assert_eq!(c.verdict, Verdict::Holds);
    }

    #[test]
    fn small_radius_has_counterexample() {
        // At ε < 1/3 the fattening is trivial and the two-element orbits {A, Aᶜ} split.
        let c =
            exhaustive_ramsey_check(4, 2, 2, 2, &rat(1, 5), &rat(0, 1), EXHAUSTIVE_LIMIT).unwrap();
        let Verdict::Counterexample {
            elements,
            colouring,
        } = &c.verdict
        else {
            panic!("{c:?}")
        };
        for (i, e) in elements.iter().enumerate() {
            let comp: Vec<usize> = e.iter().map(|&v| 1 - v).collect();
            let j = elements.iter().position(|x| *x == comp).unwrap();
            assert_ne!(colouring[i], colouring[j]);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let e = exhaustive_ramsey_check(8, 2, 2, 2, &rat(1, 2), &rat(0, 1), EXHAUSTIVE_LIMIT);
        assert!(matches!(e, Err(Error::Budget(_))));
        let c = ramsey_check(
            8,
            2,
            2,
            2,
            &rat(1, 2),
            &rat(0, 1),
            EXHAUSTIVE_LIMIT,
            true,
            1000,
            3,
        )
        .unwrap();
        assert_eq!(c.mode, CheckMode::Falsification);
        assert!(c.passed());
    }

    #[test]
    fn falsification_is_deterministic() {
        let a = falsify_ramsey(40, 2, 4, 3, &rat(2, 5), &rat(1, 10), 2000, 9).unwrap();
        let b = falsify_ramsey(40, 2, 4, 3, &rat(2, 5), &rat(1, 10), 2000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.verdict, Verdict::NoCounterexampleFound);
    }
}
