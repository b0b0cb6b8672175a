//! Appropriate box partitions, their pullbacks to a discrete space, and
//! envelopes: finite-dimensional `L_p` spaces of cell indicators that almost
//! contain a given subspace and transfer along almost isometric embeddings.
//!
//! `L_p` of a discrete space with masses `m(ω)` is identified with `ℓ_p^N`
//! through `f ↦ (f(ω)·m(ω)^{1/p})_ω`. Envelope coordinates use the normalised
//! indicators `μ(P)^{−1/p} 𝟙_P`, so the envelope is literally `ℓ_p^m`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::geometry::{auerbach_basis, Subspace};
use crate::measures::DiscreteSpace;
use crate::numeric::rational_to_f64;
use crate::spaces::{sphere_sample, LampertiEmbedding, LampertiEntry, PIndex};
use crate::{Error, Result};

/// Position of a value on one axis: a bounded interval or the tail `|x| ≥ K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Piece {
    Interval(usize),
    Tail,
}

/// Product partition of `ℝ^n`: on every axis, `(−K, K)` is cut at the
/// breakpoints into half-open intervals, and `|x| ≥ K` is one more piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxPartition {
    pub dim: usize,
    pub k: f64,
    pub eps: f64,
    pub p: f64,
    /// Largest allowed interval width `ε/(3‖μ‖)^{1/p}`.
    pub max_width: f64,
    /// Interior breakpoints per axis, increasing, strictly inside `(−K, K)`.
    pub breakpoints: Vec<Vec<f64>>,
}

impl BoxPartition {
    pub fn piece(&self, axis: usize, x: f64) -> Piece {
        if x.abs() >= self.k {
            return Piece::Tail;
        }
        Piece::Interval(self.breakpoints[axis].partition_point(|b| *b <= x))
    }

    pub fn cell_of(&self, point: &[f64]) -> Vec<Piece> {
        point
            .iter()
            .enumerate()
            .map(|(a, x)| self.piece(a, *x))
            .collect()
    }

    /// Widest bounded interval over all axes.
    pub fn widest(&self) -> f64 {
        self.breakpoints
            .iter()
            .map(|b| {
                let mut edges = vec![-self.k];
                edges.extend(b.iter().copied());
                edges.push(self.k);
                edges.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Number of cells, saturating.
    pub fn cell_count(&self) -> u128 {
        self.breakpoints
            .iter()
            .fold(1u128, |acc, b| acc.saturating_mul(b.len() as u128 + 2))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: Vec<Piece>,
    /// Indices of the atoms in `F⁻¹(R)`.
    pub atoms: Vec<usize>,
    #[serde(with = "crate::numeric::serde_rational")]
    pub mass: BigRational,
}

/// `F⁻¹(R)` for the cells of positive mass, with the classes used in the estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackPartition {
    /// Cells with positive mass (`R_+`), sorted by key.
    pub cells: Vec<Cell>,
    /// Number of null cells (`R_0`).
    pub null_cells: u128,
    /// `R_{+,k}`: positive cells bounded on axis `k` (indices into `cells`).
    pub plus: Vec<Vec<usize>>,
    /// `R_{∞,k}`: positive cells whose axis-`k` piece is the tail.
    pub infinite: Vec<Vec<usize>>,
}

impl PullbackPartition {
    pub fn classify(
        boxes: &BoxPartition,
        values: &[Vec<f64>],
        space: &DiscreteSpace,
    ) -> Result<Self> {
        if values.len() != boxes.dim || values.iter().any(|f| f.len() != space.len()) {
            return Err(Error::Shape("one value per atom and axis expected".into()));
        }
        let mut map: BTreeMap<Vec<Piece>, Vec<usize>> = BTreeMap::new();
        for w in 0..space.len() {
            let pt: Vec<f64> = values.iter().map(|f| f[w]).collect();
            map.entry(boxes.cell_of(&pt)).or_default().push(w);
        }
        let cells: Vec<Cell> = map
            .into_iter()
            .map(|(key, atoms)| {
                let mass = atoms
                    .iter()
                    .fold(BigRational::zero(), |a, &w| a + &space.atoms[w].mass);
                Cell { key, atoms, mass }
            })
            .collect();
        let plus = (0..boxes.dim)
            .map(|k| {
                (0..cells.len())
                    .filter(|&c| cells[c].key[k] != Piece::Tail)
                    .collect()
            })
            .collect();
        let infinite = (0..boxes.dim)
            .map(|k| {
                (0..cells.len())
                    .filter(|&c| cells[c].key[k] == Piece::Tail)
                    .collect()
            })
            .collect();
        let null_cells = boxes.cell_count().saturating_sub(cells.len() as u128);
        Ok(Self {
            cells,
            null_cells,
            plus,
            infinite,
        })
    }

    pub fn masses(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| rational_to_f64(&c.mass))
            .collect()
    }
}

fn tail_integral(f: &[f64], masses: &[f64], k: f64, p: f64) -> f64 {
    f.iter()
        .zip(masses)
        .filter(|(v, _)| v.abs() >= k)
        .map(|(v, m)| m * v.abs().powf(p))
        .sum()
}

/// Places a breakpoint within `h/4` of `b` as far as possible from every atom value.
fn place_breakpoint(b: f64, sorted: &[f64], h: f64) -> f64 {
    let (lo, hi) = (b - h / 4.0, b + h / 4.0);
    let start = sorted.partition_point(|v| *v < lo);
    let end = sorted.partition_point(|v| *v <= hi);
    let inside = &sorted[start..end];
    if inside.is_empty() {
        return b;
    }
    let clearance = |x: f64| {
        let i = sorted.partition_point(|v| *v < x);
        let mut d = f64::INFINITY;
        if i < sorted.len() {
            d = d.min(sorted[i] - x);
        }
        if i > 0 {
            d = d.min(x - sorted[i - 1]);
        }
        d
    };
    let mut cands = vec![lo, hi];
    cands.extend(inside.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    cands
        .into_iter()
        .max_by(|x, y| clearance(*x).total_cmp(&clearance(*y)))
        .unwrap_or(b)
}

/// Builds an `(ε, K)`-appropriate partition for `F` made of `F_*μ`-continuity sets.
pub fn build_appropriate(
    fs: &[Vec<f64>],
    space: &DiscreteSpace,
    eps: f64,
    p: f64,
) -> Result<(BoxPartition, PullbackPartition)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Invalid("ε must lie in (0, 1]".into()));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Invalid("p must be a finite real ≥ 1".into()));
    }
    if fs.is_empty() || fs.iter().any(|f| f.len() != space.len()) || space.is_empty() {
        return Err(Error::Shape(
            "need at least one function with one value per atom".into(),
        ));
    }
    let masses = space.masses();
    let total: f64 = masses.iter().sum();
    let bound = eps.powf(p) / 3.0;
    let fmax = fs.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let ok = |k: f64| fs.iter().all(|f| tail_integral(f, &masses, k, p) < bound);
    let mut k = if fmax > 0.0 { 2.0 * fmax } else { 1.0 };
    for _ in 0..200 {
        let next = k / 2.0;
        if next <= 0.0 || !ok(next) {
            break;
        }
        k = next;
    }
    // No atom on |x| = K, so the tail boundary carries no mass.
    let mut abs_vals: Vec<f64> = fs.iter().flatten().map(|v| v.abs()).collect();
    abs_vals.sort_by(f64::total_cmp);
    abs_vals.dedup();
    if abs_vals.iter().any(|v| *v == k) {
        let above = abs_vals.iter().find(|v| **v > k).copied();
        k = match above {
            Some(a) => 0.5 * (k + a),
            None => k * 1.5,
        };
    }
    let max_width = eps / (3.0 * total).powf(1.0 / p);
    // Moves of at most h/4 keep every interval below 1.5h < max_width.
    let n = (3.0 * k / max_width).ceil() as usize + 1;
    let h = 2.0 * k / n as f64;
    let breakpoints = fs
        .iter()
        .map(|f| {
            let mut sorted: Vec<f64> = f.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            (1..n)
                .map(|i| place_breakpoint(-k + i as f64 * h, &sorted, h))
                .collect()
        })
        .collect();
    let boxes = BoxPartition {
        dim: fs.len(),
        k,
        eps,
        p,
        max_width,
        breakpoints,
    };
    let pull = PullbackPartition::classify(&boxes, fs, space)?;
    Ok((boxes, pull))
}

/// Whether `boxes` is `(ε, K)`-appropriate for `G` over `space`.
pub fn is_appropriate(boxes: &BoxPartition, gs: &[Vec<f64>], space: &DiscreteSpace) -> bool {
    let masses = space.masses();
    let total: f64 = masses.iter().sum();
    let width_ok = boxes.widest() < boxes.eps / (3.0 * total).powf(1.0 / boxes.p);
    width_ok
        && gs
            .iter()
            .all(|g| tail_integral(g, &masses, boxes.k, boxes.p) < boxes.eps.powf(boxes.p) / 3.0)
}

/// `E(f; P)`: the cell averages of `f`, as a function on the atoms.
pub fn conditional_expectation(f: &[f64], pull: &PullbackPartition, masses: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for cell in &pull.cells {
        let m: f64 = cell.atoms.iter().map(|&w| masses[w]).sum();
        let avg = cell.atoms.iter().map(|&w| masses[w] * f[w]).sum::<f64>() / m;
        cell.atoms.iter().for_each(|&w| out[w] = avg);
    }
    out
}

/// `(Σ_{ω ∈ S} m(ω)|f(ω)|^p)^{1/p}` over the atoms selected by `keep`.
pub fn weighted_norm(f: &[f64], masses: &[f64], p: f64, keep: impl Fn(usize) -> bool) -> f64 {
    f.iter()
        .zip(masses)
        .enumerate()
        .filter(|(w, _)| keep(*w))
        .map(|(_, (v, m))| m * v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// The three estimates for one coordinate function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEstimates {
    /// `‖E(f_k) on R_{∞,k}‖_p^p` and `‖f_k on R_{∞,k}‖_p^p`.
    pub tail: (f64, f64),
    /// `‖E(f_k) − f_k on R_{+,k}‖_p^p`.
    pub bounded: f64,
    /// `‖f_k − E(f_k)‖_p`.
    pub total: f64,
}

pub fn cell_estimates(
    fs: &[Vec<f64>],
    pull: &PullbackPartition,
    masses: &[f64],
    p: f64,
) -> Vec<CellEstimates> {
    let n = masses.len();
    fs.iter()
        .enumerate()
        .map(|(k, f)| {
            let e = conditional_expectation(f, pull, masses);
            let mut in_inf = vec![false; n];
            for &c in &pull.infinite[k] {
                pull.cells[c].atoms.iter().for_each(|&w| in_inf[w] = true);
            }
            let diff: Vec<f64> = f.iter().zip(&e).map(|(a, b)| a - b).collect();
            CellEstimates {
                tail: (
                    weighted_norm(&e, masses, p, |w| in_inf[w]).powf(p),
                    weighted_norm(f, masses, p, |w| in_inf[w]).powf(p),
                ),
                bounded: weighted_norm(&diff, masses, p, |w| !in_inf[w]).powf(p),
                total: weighted_norm(&diff, masses, p, |_| true),
            }
        })
        .collect()
}

/// `(E, ξ)` for a subspace `X ∋ 𝟙` of `L_p(μ_0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub p: f64,
    pub eps: f64,
    pub space: DiscreteSpace,
    /// Input basis of `X`, as functions on the atoms.
    pub basis: Vec<Vec<f64>>,
    /// Auerbach basis of `X`: column `j` gives its coordinates in `basis`.
    pub auerbach: Vec<Vec<f64>>,
    pub auerbach_constant: f64,
    pub boxes: BoxPartition,
    pub pullback: PullbackPartition,
    /// `ξ` from `basis` coordinates to normalised-indicator coordinates (`ℓ_p^m`).
    pub xi: Vec<Vec<f64>>,
    /// Sampled `‖ξ − i_X‖`.
    pub defect_sampled: f64,
    /// Certified `A·Σ_j ‖f_j − E(f_j)‖`.
    pub defect_bound: f64,
}

fn combine(basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (ci, b) in c.iter().zip(basis) {
        for (o, v) in out.iter_mut().zip(b) {
            *o += ci * v;
        }
    }
    out
}

impl Envelope {
    /// Dimension `m` of the envelope (`ℓ_p^m`).
    pub fn m(&self) -> usize {
        self.pullback.cells.len()
    }
}

/// Builds an `ε`-envelope of `span(basis)`, which must contain the constants.
pub fn envelope(
    basis: &[Vec<f64>],
    space: &DiscreteSpace,
    eps: f64,
    p: f64,
    seed: u64,
) -> Result<Envelope> {
    let n_atoms = space.len();
    if basis.is_empty() || basis.iter().any(|b| b.len() != n_atoms) {
        return Err(Error::Shape(
            "basis functions need one value per atom".into(),
        ));
    }
    let masses = space.masses();
    let scale: Vec<f64> = masses.iter().map(|m| m.powf(1.0 / p)).collect();
    let k = basis.len();
    let bm = DMatrix::from_fn(n_atoms, k, |i, j| basis[j][i]);
    let ones = DVector::from_element(n_atoms, 1.0);
    let c = bm
        .clone()
        .svd(true, true)
        .solve(&ones, 1e-14)
        .map_err(|e| Error::Internal(e.into()))?;
    if (&bm * c - &ones).amax() > 1e-9 {
        return Err(Error::Precondition(
            "the constant function is not in the span of the basis".into(),
        ));
    }
    let weighted: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| b.iter().zip(&scale).map(|(v, s)| v * s).collect())
        .collect();
    let sub = Subspace::new(weighted, PIndex::Finite(p))?;
    let aub = auerbach_basis(&sub, 8, seed)?;
    let a_const = aub.constant();
    let fs: Vec<Vec<f64>> = aub.coeffs.iter().map(|c| combine(basis, c)).collect();
    let (boxes, pullback) = build_appropriate(&fs, space, eps / (6.0 * k as f64), p)?;
    let cell_mass = pullback.masses();
    let xi = pullback
        .cells
        .iter()
        .zip(&cell_mass)
        .map(|(cell, cm)| {
            (0..k)
                .map(|j| {
                    cell.atoms
                        .iter()
                        .map(|&w| masses[w] * basis[j][w])
                        .sum::<f64>()
                        / cm
                        * cm.powf(1.0 / p)
                })
                .collect()
        })
        .collect();
    let defect_bound = a_const
        * fs.iter()
            .map(|f| {
                let e = conditional_expectation(f, &pullback, &masses);
                let d: Vec<f64> = f.iter().zip(&e).map(|(a, b)| a - b).collect();
                weighted_norm(&d, &masses, p, |_| true)
            })
            .sum::<f64>();
    let mut defect_sampled: f64 = 0.0;
    for c in sphere_sample(k, PIndex::Infinity, 10_000, seed) {
        let x = combine(basis, &c);
        let e = conditional_expectation(&x, &pullback, &masses);
        let d: Vec<f64> = x.iter().zip(&e).map(|(a, b)| a - b).collect();
        let nx = weighted_norm(&x, &masses, p, |_| true);
        if nx > 0.0 {
            defect_sampled = defect_sampled.max(weighted_norm(&d, &masses, p, |_| true) / nx);
        }
    }
    Ok(Envelope {
        p,
        eps,
        space: space.clone(),
        basis: basis.to_vec(),
        auerbach: aub.coeffs,
        auerbach_constant: a_const,
        boxes,
        pullback,
        xi,
        defect_sampled,
        defect_bound,
    })
}

/// Isometric `I: E → L_p(μ_1)` with `I∘ξ ≈ γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    /// `I` in normalised-indicator coordinates, as an exact disjoint-support embedding.
    pub isometry: LampertiEmbedding,
    /// Cells of `γ(F)` over `μ_1`.
    pub target: PullbackPartition,
    /// Sampled `‖I∘ξ − γ‖`.
    pub defect_sampled: f64,
    /// Certified `A·Σ_j ‖(I∘ξ − γ)(f_j)‖`.
    pub defect_bound: f64,
}

/// `γ` is given by the images of the input basis of `env`, as functions on the atoms of `space1`.
pub fn transfer_isometry(
    env: &Envelope,
    space1: &DiscreteSpace,
    images: &[Vec<f64>],
    seed: u64,
) -> Result<Transfer> {
    let n1 = space1.len();
    if images.len() != env.basis.len() || images.iter().any(|g| g.len() != n1) {
        return Err(Error::Shape(
            "one image per basis vector, one value per atom".into(),
        ));
    }
    let p = env.p;
    let gs: Vec<Vec<f64>> = env.auerbach.iter().map(|c| combine(images, c)).collect();
    let target = PullbackPartition::classify(&env.boxes, &gs, space1)?;
    let mut columns = Vec::with_capacity(env.m());
    let mut target_index = Vec::with_capacity(env.m());
    let mut missing = Vec::new();
    for cell in &env.pullback.cells {
        match target.cells.binary_search_by(|c| c.key.cmp(&cell.key)) {
            Ok(t) => {
                let q = &target.cells[t];
                columns.push(
                    q.atoms
                        .iter()
                        .map(|&w| LampertiEntry::new(w, 1, &space1.atoms[w].mass / &q.mass))
                        .collect::<Vec<_>>(),
                );
                target_index.push(t);
            }
            Err(_) => missing.push(format!("{:?}", cell.key)),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Refused(format!(
            "positive cells without mass under γ: {}",
            missing.join(", ")
        )));
    }
    let isometry = LampertiEmbedding::new(PIndex::Finite(p), n1, columns)?;
    if !isometry.is_isometric() {
        return Err(Error::Internal(
            "cell-mass weights do not sum to one".into(),
        ));
    }
    let m0 = env.space.masses();
    let m1 = space1.masses();
    let mass0 = env.pullback.masses();
    let mass1 = target.masses();
    // (I∘ξ)(x) on G⁻¹R is the F⁻¹R-average of x times (μ_0(F⁻¹R)/μ_1(G⁻¹R))^{1/p}.
    let i_xi = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n1];
        for (r, cell) in env.pullback.cells.iter().enumerate() {
            let avg = cell.atoms.iter().map(|&w| m0[w] * x[w]).sum::<f64>() / mass0[r];
            let t = target_index[r];
            let factor = (mass0[r] / mass1[t]).powf(1.0 / p);
            target.cells[t]
                .atoms
                .iter()
                .for_each(|&w| out[w] = avg * factor);
        }
        out
    };
    let gap = |coeffs: &[f64]| -> (f64, f64) {
        let x = combine(&env.basis, coeffs);
        let gx = combine(images, coeffs);
        let d: Vec<f64> = i_xi(&x).iter().zip(&gx).map(|(a, b)| a - b).collect();
        (
            weighted_norm(&d, &m1, p, |_| true),
            weighted_norm(&x, &m0, p, |_| true),
        )
    };
    let defect_bound = env.auerbach_constant * env.auerbach.iter().map(|c| gap(c).0).sum::<f64>();
    let mut defect_sampled: f64 = 0.0;
    for c in sphere_sample(env.basis.len(), PIndex::Infinity, 10_000, seed) {
        let (num, den) = gap(&c);
        if den > 0.0 {
            defect_sampled = defect_sampled.max(num / den);
        }
    }
    Ok(Transfer {
        isometry,
        target,
        defect_sampled,
        defect_bound,
    })
}

/// Seeded test instance: `μ_0` with rational masses, a subspace `X ∋ 𝟙` whose
/// functions take values on a 0.01 grid, and a unital re-embedding into a
/// refinement `μ_1` (atoms split, shuffled, values perturbed by at most `noise`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeInstance {
    pub space0: DiscreteSpace,
    pub basis: Vec<Vec<f64>>,
    pub space1: DiscreteSpace,
    pub images: Vec<Vec<f64>>,
}

pub fn sample_envelope_instance(
    atoms0: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> Result<EnvelopeInstance> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    if dim == 0 || atoms0 < dim {
        return Err(Error::Invalid("need dim ≥ 1 and at least dim atoms".into()));
    }
    let mut rng = crate::rng::stream_rng(seed, 0xe17);
    let weights: Vec<i64> = (0..atoms0).map(|_| rng.random_range(1..=20)).collect();
    let total: i64 = weights.iter().sum();
    let space0 = DiscreteSpace::new(
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| (format!("a{i}"), crate::numeric::rat(*w, total)))
            .collect(),
    )?;
    let mut basis = vec![vec![1.0; atoms0]];
    for _ in 1..dim {
        basis.push(
            (0..atoms0)
                .map(|_| rng.random_range(-150i32..=150) as f64 / 100.0)
                .collect(),
        );
    }
    let mut children: Vec<(usize, BigRational)> = Vec::new();
    for (i, a) in space0.atoms.iter().enumerate() {
        if rng.random_bool(0.5) {
            let num = rng.random_range(1..4);
            let share = &a.mass * crate::numeric::rat(num, 4);
            children.push((i, share.clone()));
            children.push((i, &a.mass - share));
        } else {
            children.push((i, a.mass.clone()));
        }
    }
    children.shuffle(&mut rng);
    let space1 = DiscreteSpace::new(
        children
            .iter()
            .enumerate()
            .map(|(c, (_, m))| (format!("b{c}"), m.clone()))
            .collect(),
    )?;
    let images = basis
        .iter()
        .enumerate()
        .map(|(j, f)| {
            children
                .iter()
                .map(|(parent, _)| {
                    if j == 0 {
                        1.0
                    } else {
                        f[*parent] + noise * rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    Ok(EnvelopeInstance {
        space0,
        basis,
        space1,
        images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn uniform(n: usize) -> DiscreteSpace {
        DiscreteSpace::new((0..n).map(|i| (format!("{i}"), rat(1, n as i64))).collect()).unwrap()
    }

    #[test]
    fn unit_interval_function() {
        let space = uniform(11);
        let f: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let (b, pull) = build_appropriate(&[f.clone()], &space, 0.3, 1.0).unwrap();
        assert!(b.widest() < 0.1);
        assert!(pull.infinite[0].is_empty());
        let est = cell_estimates(&[f], &pull, &space.masses(), 1.0);
        assert!(est[0].total <= 0.3);
    }

    #[test]
    fn constant_function_has_one_cell() {
        let space = uniform(5);
        let (_, pull) = build_appropriate(&[vec![2.0; 5]], &space, 0.5, 3.0).unwrap();
        assert_eq!(pull.cells.len(), 1);
    }

    #[test]
    fn breakpoints_avoid_atoms() {
        let space = uniform(9);
        let f: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let (b, _) = build_appropriate(&[f.clone()], &space, 0.9, 1.0).unwrap();
        for x in &b.breakpoints[0] {
            assert!(f.iter().all(|v| v != x));
        }
        assert!(f.iter().all(|v| v.abs() != b.k));
    }

    #[test]
    fn expectation_is_a_projection() {
        let space = uniform(6);
        let f = vec![0.0, 0.05, 1.0, 1.02, -3.0, 7.0];
        let (_, pull) = build_appropriate(&[f.clone()], &space, 0.5, 2.0).unwrap();
        let m = space.masses();
        let e = conditional_expectation(&f, &pull, &m);
        assert_eq!(conditional_expectation(&e, &pull, &m), e);
        for p in [1.0, 2.0, 3.0] {
            assert!(
                weighted_norm(&e, &m, p, |_| true) <= weighted_norm(&f, &m, p, |_| true) + 1e-12
            );
        }
    }

    #[test]
    fn envelope_of_constants() {
        let space = uniform(7);
        let env = envelope(&[vec![1.0; 7]], &space, 0.2, 3.0, 1).unwrap();
        assert_eq!(env.m(), 1);
        assert!(env.defect_bound < 1e-12 && env.defect_sampled < 1e-12);
        let t = transfer_isometry(&env, &space, &[vec![1.0; 7]], 2).unwrap();
        assert!(t.isometry.is_isometric());
        assert!(t.defect_sampled < 1e-12);
    }

    #[test]
    fn envelope_needs_constants() {
        let space = uniform(4);
        let r = envelope(&[vec![1.0, 2.0, 3.0, 4.0]], &space, 0.2, 1.0, 1);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn identity_transfer_is_identity_on_cells() {
        let inst = sample_envelope_instance(40, 2, 0.0, 9).unwrap();
        let env = envelope(&inst.basis, &inst.space0, 0.2, 1.0, 3).unwrap();
        let t = transfer_isometry(&env, &inst.space0, &inst.basis, 4).unwrap();
        for (j, col) in t.isometry.columns().iter().enumerate() {
            let atoms: Vec<usize> = col.iter().map(|e| e.k).collect();
            assert_eq!(atoms, env.pullback.cells[j].atoms);
        }
        assert!(t.defect_sampled <= 0.2 && env.defect_sampled <= 0.2);
    }

    #[test]
    fn mismatched_cells_are_refused() {
        let space = uniform(4);
        let basis = vec![vec![1.0; 4], vec![0.0, 0.0, 1.0, 1.0]];
        let env = envelope(&basis, &space, 0.2, 1.0, 1).unwrap();
        let images = vec![vec![1.0; 4], vec![0.0; 4]];
        assert!(matches!(
            transfer_isometry(&env, &space, &images, 1),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn perturbed_refinement_transfers() {
        let inst = sample_envelope_instance(64, 3, 1e-4, 11).unwrap();
        for p in [1.0, 3.0] {
            let env = envelope(&inst.basis, &inst.space0, 0.2, p, 5).unwrap();
            let t = transfer_isometry(&env, &inst.space1, &inst.images, 6).unwrap();
            assert!(t.isometry.is_isometric());
            assert!(
                t.defect_bound <= 0.2,
                "p={p}: {} {}",
                t.defect_bound,
                t.defect_sampled
            );
        }
    }
}
