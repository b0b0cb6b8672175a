//! The acceptance battery: fourteen seeded property checks, each with a
//! runtime budget. A criterion passes when its property holds on every
//! generated instance and it finishes within budget.

use std::time::Instant;

use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equi::{
    count_equi, count_equi_f64, eq21_bound, eq22_bound, eq22_threshold, hamming,
    ln_miss_fraction_binary, match_permutation, shift_rule_check, sufficient_n_certificate,
    Certificate, Equisurjection, IsoperimetricTable, SearchBudget,
};
use crate::geometry::{bm_with_gap, gap_estimate, GapBudget, Subspace};
use crate::lattice::{lattice_round, MSpaceMap, RoundMode};
use crate::mazur::{
    mazur_map, mazur_map_exact, sampled_modulus, MazurParams, ModulusConstant, PowerVector,
};
use crate::measures::{
    even_p_counterexample, gp, invert_cdf, odd_p_search, p_characteristic, DiscreteMeasure,
};
use crate::numeric::{binomial_f64, factorial_f64, rat, rational_from_f64_decimal};
use crate::partitions::{envelope, sample_envelope_instance, transfer_isometry};
use crate::ramsey::{
    best_spread_brute, best_spread_dp, falsify_ramsey, spread, SpreadVector,
    DEFAULT_FALSIFICATION_TRIALS,
};
use crate::rng::{child_seed, stream_rng, DEFAULT_SEED};
use crate::spaces::{
    amalgamate, hilbert_round, operator_norm_2, random_isometric, Coupling, LampertiEmbedding,
    LampertiEntry, LinearMap, PIndex,
};
use crate::{Error, Result};

/// `(id, name, budget in ms)`.
pub const CRITERIA: [(u8, &str, u64); 14] = [
    (1, "gp-shape", 5_000),
    (2, "cdf-inversion", 10_000),
    (3, "even-odd-characteristics", 60_000),
    (4, "matching-bound", 10_000),
    (5, "concentration", 60_000),
    (6, "equi-counting", 30_000),
    (7, "lattice-rounding", 10_000),
    (8, "amalgamation", 10_000),
    (9, "hilbert-rounding", 20_000),
    (10, "mazur", 20_000),
    (11, "envelope-pipeline", 60_000),
    (12, "certificates", 300_000),
    (13, "spread-dp", 10_000),
    (14, "gap-geometry", 120_000),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplier on instance counts; `1.0` runs the full battery.
    pub scale: f64,
    pub falsification_trials: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            scale: 1.0,
            falsification_trials: DEFAULT_FALSIFICATION_TRIALS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub property_holds: bool,
    pub within_budget: bool,
    /// Number of elementary checks performed.
    pub checked: u64,
    pub detail: String,
    pub seed: u64,
    pub scale: f64,
    pub elapsed_ms: u64,
    pub budget_ms: u64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<26} {}  {} ms / {} ms  {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_ms,
            self.budget_ms,
            self.detail
        )
    }
}

struct Outcome {
    holds: bool,
    checked: u64,
    detail: String,
}

fn scaled(cfg: &SuiteConfig, n: usize) -> usize {
    ((n as f64 * cfg.scale).ceil() as usize).max(1)
}

pub fn run_criterion(id: u8, cfg: &SuiteConfig) -> Result<CriterionResult> {
    let &(_, name, budget_ms) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .ok_or_else(|| Error::Invalid(format!("no criterion {id}; valid ids are 1..=14")))?;
    let seed = child_seed(cfg.seed, id as u64);
    let start = Instant::now();
    let outcome = match id {
        1 => gp_shape(cfg, seed),
        2 => cdf_inversion(cfg, seed),
        3 => even_odd(cfg, seed),
        4 => matching(cfg, seed),
        5 => concentration_check(),
        6 => counting(),
        7 => lattice(cfg, seed),
        8 => amalgamation(cfg, seed),
        9 => hilbert(cfg, seed),
        10 => mazur(cfg, seed),
        11 => envelopes(cfg, seed),
        12 => certificates(cfg, seed),
        13 => spread_dp(cfg, seed),
        _ => geometry(cfg, seed),
    };
    let elapsed_ms = start.elapsed().as_millis() as u64;
    let outcome = outcome.unwrap_or_else(|e| Outcome {
        holds: false,
        checked: 0,
        detail: format!("error: {e}"),
    });
    let within_budget = elapsed_ms <= budget_ms;
    Ok(CriterionResult {
        id,
        name: name.to_string(),
        passed: outcome.holds && within_budget,
        property_holds: outcome.holds,
        within_budget,
        checked: outcome.checked,
        detail: outcome.detail,
        seed,
        scale: cfg.scale,
        elapsed_ms,
        budget_ms,
    })
}

pub fn run_suite(cfg: &SuiteConfig) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|c| run_criterion(c.0, cfg).expect("listed criterion"))
        .collect()
}

fn gp_shape(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let (mut worst, mut bad, mut checked) = (0.0f64, 0u64, 0u64);
    for p in [1u32, 3, 5, 7] {
        for _ in 0..scaled(cfg, 100) {
            let a = rng.random_range(-5.0..5.0);
            let eps = 2.0 * (1.0 - rng.random::<f64>());
            let top = a + eps * p as f64;
            let (lo, hi) = (a - 1.0, top + 1.0);
            let mut prev = f64::INFINITY;
            for i in 0..1000 {
                let x = lo + (hi - lo) * i as f64 / 999.0;
                let g = gp(x, a, eps, p)?;
                let shape = if x <= a {
                    (g - 1.0).abs()
                } else if x >= top {
                    g.abs()
                } else {
                    (-g).max(g - 1.0).max(0.0)
                };
                let dev = shape.max(g - prev);
                worst = worst.max(dev);
                bad += (dev > 1e-9) as u64;
                prev = g;
                checked += 1;
            }
        }
    }
    Ok(Outcome {
        holds: bad == 0,
        checked,
        detail: format!("{checked} grid points, worst deviation {worst:.1e}"),
    })
}

/// Forward rounding-error bound for the inversion sum at `(a, ε)`, taken atom by
/// atom: `1 − z/c` carries an absolute error of a few ulps of `1 + |z/c|`, which
/// dominates when an atom sits next to a shift `c = a + jε`.
fn inversion_tolerance(mu: &DiscreteMeasure, a: f64, eps: f64, p: u32) -> f64 {
    let (u, pf) = (f64::EPSILON, p as f64);
    let mut total = 0.0;
    for j in 0..=p {
        let c = a + j as f64 * eps;
        let mut inner = 0.0;
        for at in &mu.atoms {
            let r = at.z[0] / c;
            let (v, e) = ((1.0 - r).abs(), 4.0 * u * (1.0 + r.abs()));
            inner += at.m * ((v + e).powf(pf) - v.powf(pf) + 8.0 * pf * u * v.powf(pf));
        }
        let term = p_characteristic(mu, &[-1.0 / c], pf).powf(pf);
        total += binomial_f64(p, j) * c.abs().powf(pf) * (inner + 8.0 * pf * u * term);
    }
    4.0 * (total / (2.0 * factorial_f64(p) * eps.powf(pf)) + 8.0 * u)
}

fn cdf_inversion(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let (mut checked, mut sandwich_bad, mut converge_bad, mut continuity) =
        (0u64, 0u64, 0u64, 0u64);
    let mut worst_tol: f64 = 0.0;
    for _ in 0..scaled(cfg, 50) {
        let k = rng.random_range(1..=10);
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(1..=10) as f64).collect();
        let total: f64 = weights.iter().sum();
        let atoms: Vec<(f64, f64)> = weights
            .iter()
            .map(|w| (rng.random_range(-3.0..3.0), w / total))
            .collect();
        let mu = DiscreteMeasure::on_line(&atoms)?;
        for p in [1u32, 3] {
            let chr = |a: f64| p_characteristic(&mu, &[a], p as f64);
            let mut args: Vec<f64> = (0..20).map(|_| rng.random_range(-4.0..4.0)).collect();
            args.extend(atoms.iter().map(|t| t.0));
            for a in args {
                let eps0 = rng.random_range(0.25..1.0);
                let mut last = None;
                for step in 0..=6 {
                    let eps = eps0 / f64::powi(2.0, step);
                    let inv = invert_cdf(&chr, a, eps, p)?;
                    let tol = inversion_tolerance(&mu, inv.a_used, eps, p);
                    worst_tol = worst_tol.max(tol);
                    let lo = mu.cdf(inv.a_used);
                    let hi = mu.cdf(inv.a_used + eps * p as f64);
                    if inv.value < lo - tol || inv.value > hi + tol {
                        sandwich_bad += 1;
                    }
                    checked += 1;
                    last = Some((inv.value, hi, tol));
                }
                let (v, hi, tol) = last.expect("seven steps");
                if hi == mu.cdf(a) {
                    continuity += 1;
                    if (v - mu.cdf(a)).abs() > tol {
                        converge_bad += 1;
                    }
                }
            }
        }
    }
    Ok(Outcome {
        holds: sandwich_bad == 0 && converge_bad == 0,
        checked,
        detail: format!(
            "{checked} evaluations, {sandwich_bad} outside the sandwich; {continuity} continuity points, \
             {converge_bad} not converged; largest rounding allowance {worst_tol:.1e}"
        ),
    })
}

fn even_odd(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut notes = Vec::new();
    let mut holds = true;
    let mut checked = 0u64;
    for p in [2u32, 4] {
        let c = even_p_counterexample(p)?;
        let diff = (0..1000)
            .map(|i| {
                let a = -10.0 + 20.0 * i as f64 / 999.0;
                (p_characteristic(&c.mu, &[a], p as f64) - p_characteristic(&c.nu, &[a], p as f64))
                    .abs()
            })
            .fold(0.0, f64::max);
        checked += 1000;
        holds &= diff <= 1e-10 && c.lp > 0.1 && c.mu != c.nu;
        notes.push(format!("p={p}: char diff {diff:.1e}, LP {:.3}", c.lp));
    }
    for p in [1u32, 3] {
        let s = odd_p_search(p, scaled(cfg, 10_000), child_seed(seed, p as u64), 1e-6)?;
        checked += s.trials as u64;
        holds &= s.hits == 0;
        notes.push(format!(
            "p={p}: {} hits in {} trials, best diff {:.1e}",
            s.hits, s.trials, s.best_char_diff
        ));
    }
    Ok(Outcome {
        holds,
        checked,
        detail: notes.join("; "),
    })
}

fn random_surjection(rng: &mut ChaCha8Rng, t: usize, s: usize) -> Result<Equisurjection> {
    let mut map: Vec<usize> = (0..t)
        .map(|i| if i < s { i } else { rng.random_range(0..s) })
        .collect();
    map.shuffle(rng);
    Equisurjection::new(map, s)
}

/// Least Hamming distance `#{t : ψ(π(t)) ≠ φ(t)}` over all permutations `π` (Heap's algorithm).
fn brute_matching(phi: &Equisurjection, psi: &Equisurjection) -> usize {
    let n = phi.t_size();
    let mut pi: Vec<usize> = (0..n).collect();
    let cost = |pi: &[usize]| (0..n).filter(|&t| psi.map[pi[t]] != phi.map[t]).count();
    let mut best = cost(&pi);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                pi.swap(0, i);
            } else {
                pi.swap(c[i], i);
            }
            best = best.min(cost(&pi));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

fn matching(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let (mut bound_bad, mut brute_bad, mut brute_checked) = (0u64, 0u64, 0u64);
    let total = scaled(cfg, 1000);
    for i in 0..total {
        let t = if i % 4 == 0 {
            rng.random_range(1..=8)
        } else {
            rng.random_range(1..=60)
        };
        let s = rng.random_range(1..=t);
        let phi = random_surjection(&mut rng, t, s)?;
        let psi = random_surjection(&mut rng, t, s)?;
        let pi = match_permutation(&phi, &psi)?;
        let d = hamming(&psi.permute(&pi)?, &phi)?;
        if d > (phi.delta()? + psi.delta()?) / rat(2, 1) {
            bound_bad += 1;
        }
        if t <= 8 {
            brute_checked += 1;
            if d * rat(t as i64, 1) > rat(brute_matching(&phi, &psi) as i64, 1) {
                brute_bad += 1;
            }
        }
    }
    Ok(Outcome {
        holds: bound_bad == 0 && brute_bad == 0,
        checked: total as u64,
        detail: format!(
            "{total} pairs, {bound_bad} over (δ+δ')/2; {brute_checked} brute-force comparisons, {brute_bad} worse"
        ),
    })
}

fn concentration_check() -> Result<Outcome> {
    let (mut exact_cubes, mut bracket_cubes, mut bad, mut shifts, mut shift_bad, mut checked) =
        (0u64, Vec::new(), 0u64, 0u64, 0u64, 0u64);
    for n in 1..=16usize {
        let mut s = 2usize;
        while s.checked_pow(n as u32).is_some_and(|v| v <= 1 << 16) {
            let table = IsoperimetricTable::build(n, s, crate::equi::DOWNSET_BUDGET)
                .ok_or_else(|| Error::Internal(format!("no cube for n={n}, s={s}")))?;
            let size = s.pow(n as u32);
            for t in 0..=n {
                let c = table.alpha(size.div_ceil(2), t);
                let bound = eq21_bound(n, t as f64 / n as f64);
                checked += 1;
                if c.upper > bound * (1.0 + 1e-12) {
                    bad += 1;
                }
            }
            if table.is_exact() {
                exact_cubes += 1;
                for tr in 0..=n {
                    for te in 0..=n - tr {
                        if let Some(sc) = shift_rule_check(&table, tr, te) {
                            shifts += 1;
                            shift_bad += !sc.holds as u64;
                        }
                    }
                }
            } else {
                bracket_cubes.push(format!("{s}^{n}"));
            }
            s += 1;
        }
    }
    Ok(Outcome {
        holds: bad == 0 && shift_bad == 0,
        checked: checked + shifts,
        detail: format!(
            "{checked} (n, s, t) triples, {bad} over the bound; {exact_cubes} cubes exact, bracket upper bound on {}; \
             {shifts} shift-rule replays, {shift_bad} failed",
            if bracket_cubes.is_empty() { "none".to_string() } else { bracket_cubes.join(" ") }
        ),
    })
}

fn counting() -> Result<Outcome> {
    let mut notes = Vec::new();
    let (mut bad, mut past, mut dp_bad, mut checked) = (0u64, 0u64, 0u64, 0u64);
    for s in [2usize, 3] {
        for (num, den) in [(1i64, 10i64), (3, 10)] {
            let delta = rat(num, den);
            let df = num as f64 / den as f64;
            let threshold = eq22_threshold(s, df);
            let mut below_ok = 0;
            for n in 1..=1000usize {
                let frac = count_equi_f64(n, s, &delta);
                let ok = frac >= eq22_bound(n, s, df);
                checked += 1;
                if n as u64 >= threshold {
                    past += 1;
                    bad += !ok as u64;
                } else {
                    below_ok += ok as u64;
                }
                if n % 50 == 0 {
                    let exact = count_equi(n, s, &delta).fraction;
                    if (frac - exact).abs() > 1e-9 * exact.max(1e-300) {
                        dp_bad += 1;
                    }
                }
            }
            // Thresholds lie beyond 10³. For s = 2, n past the threshold is checked directly on
            // ln(1 − fraction), since both sides round to 1 in double precision there.
            if s == 2 {
                for n in (0..20)
                    .map(|k| threshold as usize + 97 * k)
                    .chain([2 * threshold as usize])
                {
                    checked += 1;
                    past += 1;
                    bad += (ln_miss_fraction_binary(n, &delta) > -df * df * n as f64 / 36.0) as u64;
                }
            }
            notes.push(format!(
                "s={s} δ={df}: threshold {threshold}, bound met at {below_ok} earlier n"
            ));
        }
    }
    Ok(Outcome {
        holds: bad == 0 && dp_bad == 0,
        checked,
        detail: format!(
            "{past} n past threshold checked, {bad} below the bound; DP vs exact mismatches {dp_bad}; {}",
            notes.join("; ")
        ),
    })
}

/// `max_{x ∈ {±1}^m} ‖Ax‖_∞` by direct enumeration.
fn sign_pattern_norm(rows: &[Vec<f64>]) -> f64 {
    let m = rows[0].len();
    (0..1u64 << m)
        .map(|bits| {
            rows.iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .map(|(j, v)| if bits >> j & 1 == 1 { -v } else { *v })
                        .sum::<f64>()
                        .abs()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn lattice(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let (mut bad, mut worst_ratio) = (0u64, 0.0f64);
    let total = scaled(cfg, 1000);
    for i in 0..total {
        let mode = if i % 2 == 0 {
            RoundMode::Lattice
        } else {
            RoundMode::Disjoint
        };
        let m = rng.random_range(1..=4);
        let n = rng.random_range(m..=12);
        let delta = 0.1 * (1.0 - rng.random::<f64>());
        let sign = |rng: &mut ChaCha8Rng| {
            if mode == RoundMode::Disjoint && rng.random_bool(0.5) {
                -1.0
            } else {
                1.0
            }
        };
        let mut rows = vec![vec![0.0; m]; n];
        for (r, row) in rows.iter_mut().enumerate() {
            if r < m {
                row[r] = sign(&mut rng);
            } else if rng.random_bool(0.8) {
                let v = rng.random_range(0.0..1.0) * sign(&mut rng);
                row[rng.random_range(0..m)] = v;
            }
            let budget = delta / (1.0 + delta) * rng.random::<f64>();
            let noise: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let l1: f64 = noise.iter().map(|v| v.abs()).sum();
            if l1 > 0.0 {
                row.iter_mut()
                    .zip(&noise)
                    .for_each(|(v, e)| *v += e * budget / l1);
            }
        }
        rows.shuffle(&mut rng);
        let g = MSpaceMap::new(rows)?;
        let r = lattice_round(&g, delta, mode, child_seed(seed, i as u64))?;
        let diff: Vec<Vec<f64>> = g
            .rows
            .iter()
            .zip(&r.xi.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        let dist = sign_pattern_norm(&diff);
        let bound = 3.0 * delta * m as f64;
        worst_ratio = worst_ratio.max(dist / bound);
        if !r.xi.is_exact(mode) || dist > bound {
            bad += 1;
        }
    }
    Ok(Outcome {
        holds: bad == 0,
        checked: total as u64,
        detail: format!("{total} maps, {bad} failures, largest ‖γ−ξ‖/(3δm) = {worst_ratio:.3}"),
    })
}

fn amalgamation(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let total = scaled(cfg, 1000);
    let mut bad = 0u64;
    for i in 0..total {
        let p = [PIndex::one(), PIndex::Finite(1.5), PIndex::Finite(3.0)][i % 3];
        let d = rng.random_range(1..=3);
        let gamma = random_isometric(&mut rng, p, d)?;
        let eta = random_isometric(&mut rng, p, d)?;
        let kind = if rng.random_bool(0.5) {
            Coupling::NorthWest
        } else {
            Coupling::Product
        };
        let am = amalgamate(&gamma, &eta, kind)?;
        let ok = am.i.compose(&gamma)? == am.j.compose(&eta)?
            && am.i.is_isometric()
            && am.j.is_isometric();
        bad += !ok as u64;
    }
    Ok(Outcome {
        holds: bad == 0,
        checked: total as u64,
        detail: format!("{total} pairs, {bad} failures"),
    })
}

fn hilbert(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let total = scaled(cfg, 10_000);
    let (mut bad, mut worst) = (0u64, f64::NEG_INFINITY);
    let two = PIndex::two();
    for i in 0..total {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(d..=6);
        let delta = 0.2 * (1.0 - rng.random::<f64>());
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
            .qr()
            .q();
        let w = q.columns(0, d).into_owned();
        let t = if i % 2 == 0 {
            let e = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
            let scale = delta / (1.0 + delta) * rng.random::<f64>() / operator_norm_2(&e);
            w + e * scale
        } else {
            let v = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0))
                .qr()
                .q();
            let sig = DMatrix::from_fn(d, d, |r, c| {
                if r != c {
                    0.0
                } else if (r + i) % 2 == 0 {
                    1.0 + delta
                } else {
                    1.0 / (1.0 + delta)
                }
            });
            w * sig * v.transpose()
        };
        let sv = t.clone().svd(false, false).singular_values;
        let dt = (sv.max() - 1.0).max(1.0 / sv.min() - 1.0).max(0.0);
        let map = LinearMap::new(t.clone(), two, two)?;
        let round = hilbert_round(&map)?;
        let dist = operator_norm_2(&(t - &round.matrix));
        worst = worst.max(dist - dt);
        if dt > delta + 1e-12 || dist > dt + 1e-9 {
            bad += 1;
        }
    }
    Ok(Outcome {
        holds: bad == 0,
        checked: total as u64,
        detail: format!("{total} maps, {bad} failures, largest distance − δ = {worst:.1e}"),
    })
}

fn mazur(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let (mut exact_bad, mut float_bad, mut checked) = (0u64, 0u64, 0u64);
    let mut notes = Vec::new();
    for (p, q) in [(1u32, 2u32), (3, 1), (2, 3)] {
        let params = MazurParams::new(PIndex::Finite(p as f64), PIndex::Finite(q as f64))?;
        for _ in 0..scaled(cfg, 200) {
            let dim = rng.random_range(1..=6);
            let x: Vec<BigRational> = (0..dim)
                .map(|_| rat(rng.random_range(-40..=40), rng.random_range(1..=17)))
                .collect();
            let v = PowerVector::from_rationals(&x, p)?;
            let y = mazur_map_exact(&v, &params)?;
            let back = mazur_map_exact(&y, &params.inverse())?;
            exact_bad += (back != v || y.norm_pow() != v.norm_pow()) as u64;
            let fy = mazur_map(&v.to_vector(), &params)?;
            let ey = y.to_vector();
            let gap = fy
                .entries
                .iter()
                .zip(&ey.entries)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            float_bad += (gap > 1e-12 * (1.0 + ey.norm())) as u64;
            checked += 1;
        }
        let rep = sampled_modulus(
            &params,
            ModulusConstant::Holder,
            scaled(cfg, 10_000),
            6,
            child_seed(seed, p as u64 * 10 + q as u64),
            1e-6,
        )?;
        checked += rep.pairs as u64;
        if !rep.holds {
            notes.push(format!(
                "({p},{q}) modulus exceeded by {:.2e}",
                rep.worst_excess
            ));
        } else {
            notes.push(format!("({p},{q}) worst excess {:.2e}", rep.worst_excess));
        }
        exact_bad += !rep.holds as u64;
    }
    Ok(Outcome {
        holds: exact_bad == 0 && float_bad == 0,
        checked,
        detail: format!(
            "{exact_bad} exact/modulus failures, {float_bad} float mismatches; {}",
            notes.join("; ")
        ),
    })
}

fn envelopes(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let total = scaled(cfg, 100);
    let eps = 0.2;
    let (mut bad, mut worst, mut largest) = (0u64, 0.0f64, 0usize);
    let mut errors = Vec::new();
    for i in 0..total {
        let dim = rng.random_range(1..=3);
        let atoms = rng.random_range(dim.max(4)..=64);
        let p = if i % 2 == 0 { 1.0 } else { 3.0 };
        let noise = 1e-4 * rng.random::<f64>();
        let s = child_seed(seed, i as u64);
        let run = || -> Result<(bool, f64, usize)> {
            let inst = sample_envelope_instance(atoms, dim, noise, s)?;
            let env = envelope(&inst.basis, &inst.space0, eps, p, s)?;
            let t = transfer_isometry(&env, &inst.space1, &inst.images, s)?;
            let ok = inst.space1.len() <= 128 && t.isometry.is_isometric() && t.defect_bound <= eps;
            Ok((ok, t.defect_bound, inst.space1.len()))
        };
        match run() {
            Ok((ok, defect, size)) => {
                bad += !ok as u64;
                worst = worst.max(defect);
                largest = largest.max(size);
            }
            Err(e) => {
                bad += 1;
                errors.push(format!("run {i}: {e}"));
            }
        }
    }
    let mut detail = format!(
        "{total} runs, {bad} failures, largest certified defect {worst:.3e}, up to {largest} atoms"
    );
    if !errors.is_empty() {
        detail.push_str(&format!("; {}", errors.join("; ")));
    }
    Ok(Outcome {
        holds: bad == 0,
        checked: total as u64,
        detail,
    })
}

/// Parameter sets `(d, m, r, ε, δ)` certified and then attacked by falsification.
pub const CERTIFIED_SETS: [(u64, u64, u64, f64, (i64, i64)); 4] = [
    (2, 4, 2, 0.4, (1, 10)),
    (2, 2, 2, 0.5, (0, 1)),
    (2, 4, 3, 0.5, (1, 10)),
    (3, 3, 2, 0.5, (1, 5)),
];

fn certificates(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut notes = Vec::new();
    let (mut holds, mut checked) = (true, 0u64);
    for (idx, &(d, m, r, eps, (dn, dd))) in CERTIFIED_SETS.iter().enumerate() {
        let delta = rat(dn, dd);
        let cert = sufficient_n_certificate(d, m, r, eps, &delta, SearchBudget::default())?;
        let replayed = Certificate::from_json_lines(&cert.to_json_lines())?;
        let replays = cert.replay() && replayed.replay() && replayed == cert;
        checked += cert.lines.len() as u64;
        holds &= replays;
        if !cert.verdict {
            notes.push(format!(
                "(d={d},m={m},r={r}) no certified n, replay {replays}"
            ));
            continue;
        }
        let trials = ((cfg.falsification_trials as f64 * cfg.scale).ceil() as u64).max(1);
        let eps_r = rational_from_f64_decimal(eps)?;
        let check = falsify_ramsey(
            cert.n as usize,
            d as usize,
            m as usize,
            r as usize,
            &eps_r,
            &delta,
            trials,
            child_seed(seed, idx as u64),
        )?;
        checked += check.colourings_checked;
        holds &= check.passed();
        notes.push(format!(
            "(d={d},m={m},r={r},ε={eps},δ={dn}/{dd}) n={} lines {} replay {replays}, {} colourings {}",
            cert.n,
            cert.lines.len(),
            check.colourings_checked,
            if check.passed() { "no counterexample" } else { "FAILED" }
        ));
    }
    Ok(Outcome {
        holds,
        checked,
        detail: notes.join("; "),
    })
}

fn spread_dp(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let total = scaled(cfg, 400);
    let (mut bad, mut planted_bad, mut combos) = (0u64, 0u64, 0u64);
    for _ in 0..total {
        let k = rng.random_range(1..=5);
        let n = rng.random_range(k..=40);
        let mut windows: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.7)).collect();
        while windows.len() < k {
            windows = (0..n).collect();
        }
        while crate::numeric::binomial_f64(windows.len() as u32, k as u32) > 1e5 {
            windows.remove(rng.random_range(0..windows.len()));
        }
        let a = SpreadVector::normalized((0..k).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.4) {
                    rng.random_range(-0.5..0.5)
                } else {
                    0.0
                }
            })
            .collect();
        let dp = best_spread_dp(&x, &a, &windows)?;
        let brute = best_spread_brute(&x, &a, &windows)
            .ok_or_else(|| Error::Internal("no placement".into()))?;
        combos += crate::numeric::binomial_f64(windows.len() as u32, k as u32) as u64;
        let recomputed = crate::numeric::compensated_sum(
            spread(&a, &dp.positions, n)?
                .entries
                .iter()
                .zip(&x)
                .map(|(s, v)| (s - v).abs()),
        );
        if (dp.error - brute.error).abs() > 1e-12 || (recomputed - dp.error).abs() > 1e-12 {
            bad += 1;
        }
        let mut planted: Vec<usize> = windows.clone();
        planted.shuffle(&mut rng);
        planted.truncate(k);
        planted.sort_unstable();
        let y = spread(&a, &planted, n)?;
        let fit = best_spread_dp(&y.entries, &a, &windows)?;
        if fit.error > 1e-15 || (a.a.iter().all(|v| *v != 0.0) && fit.positions != planted) {
            planted_bad += 1;
        }
    }
    Ok(Outcome {
        holds: bad == 0 && planted_bad == 0,
        checked: 2 * total as u64,
        detail: format!(
            "{total} instances ({combos} placements enumerated), {bad} DP/brute mismatches; {total} planted, {planted_bad} not recovered"
        ),
    })
}

/// A Lamperti isometry `ℓ_p^k → ℓ_p^n` as a dense matrix.
fn isometry_matrix(rng: &mut ChaCha8Rng, p: PIndex, k: usize, n: usize) -> Result<DMatrix<f64>> {
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(rng);
    let extra = n - k;
    let mut spare: Vec<usize> = coords[k..].to_vec();
    let mut cols: Vec<Vec<LampertiEntry>> = Vec::with_capacity(k);
    for (j, &c) in coords[..k].iter().enumerate() {
        let mut slots = vec![c];
        if extra > 0 && j + 1 == k {
            slots.append(&mut spare);
        } else if !spare.is_empty() && rng.random_bool(0.5) {
            slots.push(spare.pop().expect("nonempty"));
        }
        let w: Vec<i64> = slots.iter().map(|_| rng.random_range(1..=4)).collect();
        let top = *w.iter().max().expect("nonempty");
        let total: i64 = w.iter().sum();
        cols.push(
            slots
                .iter()
                .zip(&w)
                .map(|(&s, &wi)| {
                    let sign = if rng.random_bool(0.5) { 1 } else { -1 };
                    LampertiEntry::new(
                        s,
                        sign,
                        if p.is_infinite() {
                            rat(wi, top)
                        } else {
                            rat(wi, total)
                        },
                    )
                })
                .collect(),
        );
    }
    Ok(LampertiEmbedding::new(p, n, cols)?.to_linear_map().matrix)
}

fn perturbation(
    rng: &mut ChaCha8Rng,
    p: PIndex,
    rows: usize,
    cols: usize,
    size: f64,
) -> Result<DMatrix<f64>> {
    let e = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let norm = LinearMap::new(e.clone(), p, p)?.norm_upper();
    Ok(e * (size / norm))
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols())
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}

fn geometry(cfg: &SuiteConfig, seed: u64) -> Result<Outcome> {
    let mut rng = stream_rng(seed, 0);
    let total = scaled(cfg, 1000);
    let ps = [
        PIndex::one(),
        PIndex::two(),
        PIndex::Finite(3.0),
        PIndex::Infinity,
    ];
    let (mut claim_bad, mut prop_bad, mut prop_checked, mut skipped) = (0u64, 0u64, 0u64, 0u64);
    let mut worst_claim = f64::NEG_INFINITY;
    for i in 0..total {
        let p = ps[i % ps.len()];
        let k = 1 + (i / ps.len()) % 3;
        let n = rng.random_range(k..=k + 2);
        let base = isometry_matrix(&mut rng, p, k, n)?;
        // Alternate blocks of small perturbations, which exercise the
        // Banach–Mazur construction, and large ones up to δ = 1/2.
        let scale = if (i / 12) % 2 == 0 { 0.03 } else { 1.0 / 6.0 };
        let (e1, e2) = (scale * rng.random::<f64>(), scale * rng.random::<f64>());
        let gamma = &base + perturbation(&mut rng, p, n, k, e1)?;
        let eta = &gamma + perturbation(&mut rng, p, n, k, e2)?;
        // Both maps lie within e1 + e2 of an isometry.
        let e = e1 + e2;
        let delta = e / (1.0 - e);
        let diff = LinearMap::new(&gamma - &eta, p, p)?.norm_upper();
        let gx = Subspace::new(columns(&gamma), p)?;
        let hx = Subspace::new(columns(&eta), p)?;
        let budget = GapBudget {
            restarts: 4,
            seed: child_seed(seed, i as u64),
            max_evaluations: 4000,
            ..GapBudget::default()
        };
        let gap = gap_estimate(&gx, &hx, &budget)?;
        match bm_with_gap(&gx, &hx, gap.clone(), &budget) {
            Ok(r) => {
                prop_checked += 1;
                if r.bound > r.target + 1e-6 || r.sampled > r.bound + 1e-9 {
                    prop_bad += 1;
                }
            }
            Err(Error::Precondition(_)) => skipped += 1,
            Err(_) => {
                prop_bad += 1;
                prop_checked += 1;
            }
        }
        let rhs = 2.0 * (1.0 + delta) * diff;
        worst_claim = worst_claim.max(gap.lower - rhs);
        if gap.lower > rhs + 1e-9 {
            claim_bad += 1;
        }
    }
    Ok(Outcome {
        holds: claim_bad == 0 && prop_bad == 0,
        checked: total as u64 + prop_checked,
        detail: format!(
            "{total} pairs, {claim_bad} gap-claim failures (largest Λ_lower − 2(1+δ)‖γ−η‖ = {worst_claim:.2e}); \
             {prop_checked} Banach–Mazur constructions, {prop_bad} failures, {skipped} outside the 1/(2k) precondition"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_matching_small() {
        let phi = Equisurjection::new(vec![0, 0, 1], 2).unwrap();
        let psi = Equisurjection::new(vec![1, 0, 1], 2).unwrap();
        assert_eq!(brute_matching(&phi, &psi), 1);
        assert_eq!(brute_matching(&phi, &phi), 0);
    }

    #[test]
    fn sign_pattern_norm_is_row_sum() {
        assert_eq!(sign_pattern_norm(&[vec![0.5, -0.25], vec![0.1, 0.1]]), 0.75);
    }

    #[test]
    fn scaled_run_is_deterministic() {
        let cfg = SuiteConfig {
            scale: 0.02,
            ..Default::default()
        };
        for id in [1, 4, 8, 13] {
            let a = run_criterion(id, &cfg).unwrap();
            let b = run_criterion(id, &cfg).unwrap();
            assert!(a.property_holds, "{}", a.line());
            assert_eq!((a.checked, &a.detail), (b.checked, &b.detail));
        }
    }

    #[test]
    fn unknown_criterion_is_rejected() {
        assert!(run_criterion(15, &SuiteConfig::default()).is_err());
    }
}
