//! Subspaces of `ℓ_p^n`: distance to a unit ball, the gap metric, Auerbach
//! bases, and a Banach–Mazur bound built from a small gap.
//!
//! All subspace computations run in coefficient coordinates: a subspace with
//! basis matrix `B` (`n × k`) is parametrised by `c ∈ ℝ^k`, and its unit ball
//! is the convex set `{c : ‖Bc‖_p ≤ 1}`. Convex subproblems are solved by the
//! ellipsoid method in [`convex`], which returns a certified optimality gap.

pub mod convex;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;
use crate::spaces::{lp_norm, sphere_sample, DistortionReport, LinearMap, PIndex, VectorP};
use crate::{Error, Result};
use convex::{ConvexSolution, Ellipsoid};

/// A subspace of `ℓ_p^n` given by a linearly independent basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    pub ambient_n: usize,
    pub ambient_p: PIndex,
    pub basis: Vec<VectorP>,
}

impl Subspace {
    pub fn new(basis: Vec<Vec<f64>>, p: PIndex) -> Result<Self> {
        let n = basis.first().map_or(0, |b| b.len());
        if basis.is_empty() || n == 0 {
            return Err(Error::Shape(
                "a subspace needs at least one nonzero basis vector".into(),
            ));
        }
        if basis.iter().any(|b| b.len() != n) {
            return Err(Error::Shape("basis vectors have different lengths".into()));
        }
        let basis = basis
            .into_iter()
            .map(|b| VectorP::new(b, p))
            .collect::<Result<Vec<_>>>()?;
        let s = Self {
            ambient_n: n,
            ambient_p: p,
            basis,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks the stored fields (also used after deserialisation).
    pub fn validate(&self) -> Result<()> {
        let k = self.basis.len();
        if k == 0 || k > self.ambient_n {
            return Err(Error::Shape(format!(
                "dimension {k} in ambient {}",
                self.ambient_n
            )));
        }
        if self
            .basis
            .iter()
            .any(|b| b.len() != self.ambient_n || b.p != self.ambient_p)
        {
            return Err(Error::Shape(
                "basis vector does not live in the ambient space".into(),
            ));
        }
        let sv = self.matrix().svd(false, false).singular_values;
        if sv.min() <= 1e-10 * sv.max() {
            return Err(Error::Invalid("basis is not linearly independent".into()));
        }
        Ok(())
    }

    /// The whole space `ℓ_p^n`.
    pub fn full(n: usize, p: PIndex) -> Self {
        Self {
            ambient_n: n,
            ambient_p: p,
            basis: (0..n).map(|j| VectorP::unit(n, j, p)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis as the columns of an `n × k` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ambient_n, self.dim(), |i, j| self.basis[j].entries[i])
    }

    /// Image of the subspace under a map of the ambient space.
    pub fn image(&self, t: &LinearMap) -> Result<Subspace> {
        if t.cols() != self.ambient_n {
            return Err(Error::Shape("map does not act on the ambient space".into()));
        }
        let m = &t.matrix * self.matrix();
        let basis = (0..m.ncols())
            .map(|j| m.column(j).iter().copied().collect())
            .collect();
        Subspace::new(basis, t.codomain_p)
    }
}

/// Subgradient of `‖·‖_p` at `v`, together with the norm.
pub fn norm_subgradient(v: &[f64], p: PIndex) -> (f64, Vec<f64>) {
    let norm = p.norm(v);
    let mut g = vec![0.0; v.len()];
    if norm == 0.0 {
        return (0.0, g);
    }
    match p {
        PIndex::Infinity => {
            let (i, _) = v.iter().enumerate().fold((0, -1.0), |acc, (i, x)| {
                if x.abs() > acc.1 {
                    (i, x.abs())
                } else {
                    acc
                }
            });
            g[i] = v[i].signum();
        }
        PIndex::Finite(q) if q == 1.0 => {
            for (gi, x) in g.iter_mut().zip(v) {
                *gi = if *x > 0.0 {
                    1.0
                } else if *x < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
        }
        PIndex::Finite(q) => {
            for (gi, x) in g.iter_mut().zip(v) {
                *gi = x.signum() * (x.abs() / norm).powf(q - 1.0);
            }
        }
    }
    (norm, g)
}

/// Precomputed data for convex problems over the unit ball of a subspace.
struct BallProblem {
    b: DMatrix<f64>,
    p: PIndex,
    radius: f64,
}

impl BallProblem {
    fn new(y: &Subspace) -> Self {
        let b = y.matrix();
        let n = y.ambient_n as f64;
        let smin = b.clone().svd(false, false).singular_values.min();
        // ‖v‖_2 ≤ n^{max(0, 1/2 − 1/p)} ‖v‖_p and ‖Bc‖_2 ≥ σ_min ‖c‖_2.
        let expo = (0.5 - 1.0 / y.ambient_p.value()).max(0.0);
        let radius = 1.01 * n.powf(expo) / smin;
        Self {
            b,
            p: y.ambient_p,
            radius,
        }
    }

    fn k(&self) -> usize {
        self.b.ncols()
    }

    fn image(&self, c: &[f64]) -> DVector<f64> {
        &self.b * DVector::from_column_slice(c)
    }

    fn pull_back(&self, g: &[f64]) -> Vec<f64> {
        (self.b.transpose() * DVector::from_column_slice(g))
            .iter()
            .copied()
            .collect()
    }

    fn ball_constraint(&self, c: &[f64]) -> (f64, Vec<f64>) {
        let y = self.image(c);
        let (nv, g) = norm_subgradient(y.as_slice(), self.p);
        (nv - 1.0, self.pull_back(&g))
    }

    fn solver(&self) -> Ellipsoid {
        Ellipsoid {
            tol: 1e-7,
            max_iter: 4000 * self.k().max(1),
        }
    }

    fn distance(&self, x: &[f64]) -> ConvexSolution {
        self.distance_from(x, &vec![0.0; self.k()], self.radius, self.solver())
    }

    /// Search restricted to a ball around `start`; the upper value is always a
    /// feasible distance, the lower one only if the ball holds a minimiser.
    fn distance_from(
        &self,
        x: &[f64],
        start: &[f64],
        radius: f64,
        solver: Ellipsoid,
    ) -> ConvexSolution {
        let mut f = |c: &[f64]| {
            let y = self.image(c);
            let r: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
            let (nv, g) = norm_subgradient(&r, self.p);
            let g: Vec<f64> = self.pull_back(&g).into_iter().map(|v| -v).collect();
            (nv, g)
        };
        let mut g = |c: &[f64]| self.ball_constraint(c);
        solver.minimize(start, radius, &mut f, &mut g)
    }

    /// Certified bracket for `max {φ·c : ‖Bc‖ ≤ 1}` and a near-maximiser.
    fn max_linear(&self, phi: &[f64]) -> (f64, f64, Vec<f64>) {
        let mut f = |c: &[f64]| {
            let v: f64 = phi.iter().zip(c).map(|(a, b)| a * b).sum();
            (-v, phi.iter().map(|a| -a).collect())
        };
        let mut g = |c: &[f64]| self.ball_constraint(c);
        let sol = self
            .solver()
            .minimize(&vec![0.0; self.k()], self.radius, &mut f, &mut g);
        (-sol.upper, -sol.lower, sol.x)
    }
}

/// Distance from a point to the unit ball of a subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallDistance {
    /// Distance to the returned feasible point (an upper bound).
    pub value: f64,
    /// Certified lower bound.
    pub lower: f64,
    /// Nearest point found, in ambient coordinates.
    pub point: Vec<f64>,
    /// Coefficients of `point` in the subspace basis.
    pub coeffs: Vec<f64>,
    /// `value − lower ≤ 1e−6`.
    pub certified: bool,
}

/// `min {‖x − y‖ : y ∈ B_Y}`.
pub fn dist_to_unit_ball(x: &VectorP, y: &Subspace) -> Result<BallDistance> {
    if x.len() != y.ambient_n || x.p != y.ambient_p {
        return Err(Error::Shape(
            "point and subspace live in different spaces".into(),
        ));
    }
    Ok(distance_with(&BallProblem::new(y), &x.entries))
}

fn distance_with(prob: &BallProblem, x: &[f64]) -> BallDistance {
    if prob.p == PIndex::two() {
        return euclidean_distance(prob, x);
    }
    let sol = prob.distance(x);
    let point: Vec<f64> = prob.image(&sol.x).iter().copied().collect();
    BallDistance {
        value: sol.upper,
        lower: sol.lower.max(0.0),
        point,
        coeffs: sol.x.clone(),
        certified: sol.gap() <= 1e-6,
    }
}

/// Closed form for `p = 2`: project onto the span, then radially onto the ball.
fn euclidean_distance(prob: &BallProblem, x: &[f64]) -> BallDistance {
    let xv = DVector::from_column_slice(x);
    let c = prob
        .b
        .clone()
        .svd(true, true)
        .solve(&xv, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(prob.k()));
    let proj = &prob.b * &c;
    let r = (&xv - &proj).norm();
    let s = proj.norm();
    let (value, scale) = if s <= 1.0 {
        (r, 1.0)
    } else {
        ((r * r + (s - 1.0) * (s - 1.0)).sqrt(), 1.0 / s)
    };
    let coeffs: Vec<f64> = c.iter().map(|v| v * scale).collect();
    let point: Vec<f64> = proj.iter().map(|v| v * scale).collect();
    BallDistance {
        value,
        lower: value,
        point,
        coeffs,
        certified: true,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub lower: f64,
    pub upper: f64,
    /// Sphere points considered (both directions).
    pub samples: usize,
    /// Covering slack added to the sampled maximum.
    pub slack: f64,
}

/// Refinement target and Auerbach search used by [`gap_estimate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBudget {
    /// Initial cells per axis on each cube face; 0 picks a default by dimension.
    pub per_axis: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Refinement stops once the covering slack is below this; 0 means [`GAP_TOL`].
    #[serde(default)]
    pub tol: f64,
    /// Cap on distance evaluations per direction; 0 means [`GAP_MAX_EVALUATIONS`].
    /// Stopping early only widens the bracket.
    #[serde(default)]
    pub max_evaluations: usize,
}

/// Default covering slack for [`gap_estimate`].
pub const GAP_TOL: f64 = 1e-3;

/// Default cap on distance evaluations per direction.
pub const GAP_MAX_EVALUATIONS: usize = 100_000;

impl Default for GapBudget {
    fn default() -> Self {
        Self {
            per_axis: 0,
            restarts: 8,
            seed: crate::rng::DEFAULT_SEED,
            tol: 0.0,
            max_evaluations: 0,
        }
    }
}

impl GapBudget {
    fn per_axis_for(&self, k: usize) -> usize {
        if self.per_axis > 0 {
            return self.per_axis;
        }
        match k {
            1 => 1,
            2 => 16,
            3 => 4,
            _ => 2,
        }
    }

    fn tol(&self) -> f64 {
        if self.tol > 0.0 {
            self.tol
        } else {
            GAP_TOL
        }
    }

    fn max_evaluations(&self) -> usize {
        if self.max_evaluations > 0 {
            self.max_evaluations
        } else {
            GAP_MAX_EVALUATIONS
        }
    }
}

/// Points `c` on the surface of the cube `[−1,1]^k` lying on a grid of spacing
/// `2/per_axis`, one representative per pair `±c`.
fn cube_surface_grid(k: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let m = per_axis + 1;
    let h = 2.0 / per_axis as f64;
    let total = m.pow(k as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut t = idx;
        let mut c = vec![0.0; k];
        let mut on_face = false;
        for cj in c.iter_mut() {
            let i = t % m;
            t /= m;
            *cj = -1.0 + i as f64 * h;
            if i == 0 || i == per_axis {
                on_face = true;
            }
            if cj.abs() < 1e-15 {
                *cj = 0.0;
            }
        }
        if !on_face {
            continue;
        }
        if let Some(first) = c.iter().find(|v| **v != 0.0) {
            if *first > 0.0 {
                out.push(c);
            }
        }
    }
    out
}

struct DirectionalGap {
    lower: f64,
    upper_without_slack: f64,
    slack: f64,
    samples: usize,
}

/// A box on the face `c_face = 1` of the cube, with the distance at its centre.
struct Cell {
    bound: f64,
    face: usize,
    /// Lower corner on the dyadic grid of [`UNIT`] steps.
    corner: Vec<i64>,
    level: u32,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.bound.total_cmp(&other.bound).is_eq()
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

/// Finest subdivision depth; face coordinates are `−1 + i·2/(g·2^UNIT)`.
const UNIT: u32 = 40;

/// Cached corner evaluations for [`directional_gap`].
struct FaceSearch<'a> {
    basis: &'a [VectorP],
    prob: BallProblem,
    p: PIndex,
    k: usize,
    step: f64,
    solver_tol: f64,
    cache: std::collections::HashMap<(usize, Vec<i64>), (f64, Vec<f64>)>,
    best: (f64, usize, Vec<i64>),
}

impl FaceSearch<'_> {
    fn sphere_point(&self, face: usize, idx: &[i64]) -> Vec<f64> {
        let mut c: Vec<f64> = idx.iter().map(|&i| -1.0 + i as f64 * self.step).collect();
        c.insert(face, 1.0);
        let mut v = vec![0.0; self.prob.b.nrows()];
        for (cj, b) in c.iter().zip(self.basis) {
            for (vi, bi) in v.iter_mut().zip(&b.entries) {
                *vi += cj * bi;
            }
        }
        let nv = self.p.norm(&v);
        v.iter_mut().for_each(|e| *e /= nv);
        v
    }

    /// Upper bound on `F` at a grid point. Solves are warm-started from a
    /// neighbouring solution and stopped early.
    fn evaluate(
        &mut self,
        face: usize,
        idx: Vec<i64>,
        warm: Option<(&[f64], f64)>,
    ) -> (f64, Vec<f64>) {
        if let Some(hit) = self.cache.get(&(face, idx.clone())) {
            return hit.clone();
        }
        let v = self.sphere_point(face, &idx);
        let (value, coeffs) = if self.p == PIndex::two() {
            let d = euclidean_distance(&self.prob, &v);
            (d.value, d.coeffs)
        } else {
            let solver = Ellipsoid {
                tol: self.solver_tol,
                max_iter: 4000 * self.k,
            };
            let sol = match warm {
                Some((start, r)) => self.prob.distance_from(
                    &v,
                    start,
                    r,
                    Ellipsoid {
                        max_iter: 400 * self.k,
                        ..solver
                    },
                ),
                None => self
                    .prob
                    .distance_from(&v, &vec![0.0; self.k], self.prob.radius, solver),
            };
            (sol.upper, sol.x)
        };
        if value > self.best.0 {
            self.best = (value, face, idx.clone());
        }
        self.cache.insert((face, idx), (value, coeffs.clone()));
        (value, coeffs)
    }

    fn corners(&self, idx: &[i64], len: i64) -> Vec<Vec<i64>> {
        (0..1usize << (self.k - 1))
            .map(|bits| {
                idx.iter()
                    .enumerate()
                    .map(|(j, &i)| if bits >> j & 1 == 1 { i + len } else { i })
                    .collect()
            })
            .collect()
    }

    fn cell(
        &mut self,
        face: usize,
        corner: Vec<i64>,
        level: u32,
        warm: Option<(&[f64], f64)>,
    ) -> (Cell, Vec<f64>) {
        let len = 1i64 << (UNIT - level);
        let mut top = f64::NEG_INFINITY;
        let mut seed = Vec::new();
        let mut points = Vec::new();
        for c in self.corners(&corner, len) {
            let (value, coeffs) = self.evaluate(face, c.clone(), warm);
            top = top.max(value);
            if seed.is_empty() {
                seed = coeffs;
            }
            points.push(self.sphere_point(face, &c));
        }
        let centre: Vec<i64> = corner.iter().map(|i| i + len / 2).collect();
        let (_, phi) = norm_subgradient(&self.sphere_point(face, &centre), self.p);
        let m = points
            .iter()
            .map(|v| v.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let bound = if m > 0.0 {
            top + 1.0 - m
        } else {
            f64::INFINITY
        };
        (
            Cell {
                bound,
                face,
                corner,
                level,
            },
            seed,
        )
    }
}

/// `sup_{x ∈ S_X} dist(x, B_Y)` bracketed by branch and bound over `S_X`.
///
/// Points are parametrised by the cube surface in Auerbach coordinates of `X`;
/// by symmetry the faces `c_j = 1` suffice. Let `ĉ_i` be the normalised images
/// of a face cell's corners and `φ` a norming functional at its centre, and put
/// `m = min_i φ(ĉ_i)`. A unit vector `w` in the cone over the cell is `q/‖q‖`
/// for some `q ∈ conv{ĉ_i}`, so `‖w − q‖ = 1 − ‖q‖ ≤ 1 − m`; as `F = dist(·, B_Y)`
/// is convex and 1-Lipschitz, `max_i F(ĉ_i) + 1 − m` bounds the cell. The cell
/// with the largest bound is split until that bound is within `tol` of the best
/// value found.
///
/// Independently, with `P` the least-squares projection onto `Y` and `f_j` the
/// coordinate functionals, `F(w) ≤ ‖w − Pw‖ + (‖Pw‖ − 1)⁺ ≤ 2 Σ_j ‖f_j‖ ‖x_j − Px_j‖`.
fn directional_gap(x: &Subspace, y: &Subspace, budget: &GapBudget) -> Result<DirectionalGap> {
    let aub = auerbach_basis(x, budget.restarts, budget.seed)?;
    let k = x.dim();
    let tol = budget.tol();
    let g = budget.per_axis_for(k);
    let mut search = FaceSearch {
        basis: &aub.vectors,
        prob: BallProblem::new(y),
        p: x.ambient_p,
        k,
        step: 2.0 / (g as f64 * (1u64 << UNIT) as f64),
        solver_tol: tol / 20.0,
        cache: Default::default(),
        best: (f64::NEG_INFINITY, 0, Vec::new()),
    };
    if k == 1 {
        let d = distance_with(&search.prob, &search.sphere_point(0, &[]));
        return Ok(DirectionalGap {
            lower: d.lower,
            upper_without_slack: d.value,
            slack: 0.0,
            samples: 1,
        });
    }
    let linear = projection_bound(&aub, &search.prob);
    if linear <= tol {
        let centre = vec![1i64 << (UNIT - 1); k - 1];
        let d = distance_with(&search.prob, &search.sphere_point(0, &centre));
        let value = d.value.min(linear);
        return Ok(DirectionalGap {
            lower: d.lower,
            upper_without_slack: value,
            slack: linear - value,
            samples: 1,
        });
    }
    let mut heap = std::collections::BinaryHeap::new();
    let mut seeds: std::collections::HashMap<(usize, Vec<i64>, u32), Vec<f64>> = Default::default();
    let len0 = 1i64 << UNIT;
    for face in 0..k {
        for cell in 0..g.pow(k as u32 - 1) {
            let mut t = cell;
            let corner: Vec<i64> = (0..k - 1)
                .map(|_| {
                    let i = (t % g) as i64;
                    t /= g;
                    i * len0
                })
                .collect();
            let (c, seed) = search.cell(face, corner, 0, None);
            seeds.insert((face, c.corner.clone(), 0), seed);
            heap.push(c);
        }
    }
    loop {
        let top = heap.pop().expect("at least one cell");
        let done = top.bound - search.best.0 <= tol
            || search.cache.len() >= budget.max_evaluations()
            || top.level + 1 >= UNIT;
        if done {
            heap.push(top);
            break;
        }
        let seed = seeds
            .remove(&(top.face, top.corner.clone(), top.level))
            .unwrap_or_default();
        let len = 1i64 << (UNIT - top.level - 1);
        let reach = (8.0 * len as f64 * search.step + tol).min(search.prob.radius);
        for corner in search.corners(&top.corner, len) {
            let warm = if seed.is_empty() {
                None
            } else {
                Some((&seed[..], reach))
            };
            let (c, s) = search.cell(top.face, corner, top.level + 1, warm);
            seeds.insert((c.face, c.corner.clone(), c.level), s);
            heap.push(c);
        }
    }
    let upper = heap.peek().map_or(f64::INFINITY, |c| c.bound).min(linear);
    // Certified lower bound from a full solve at the best point found.
    let (_, face, idx) = search.best.clone();
    let d = distance_with(&search.prob, &search.sphere_point(face, &idx));
    let value = search.best.0.min(d.value).min(upper);
    Ok(DirectionalGap {
        lower: d.lower,
        upper_without_slack: value,
        slack: upper - value,
        samples: search.cache.len() + 1,
    })
}

/// `2 Σ_j ‖f_j‖ ‖x_j − Px_j‖` for the least-squares projection `P` onto `Y`.
fn projection_bound(aub: &AuerbachBasis, prob: &BallProblem) -> f64 {
    let svd = prob.b.clone().svd(true, true);
    let mut total = 0.0;
    for (xj, fj) in aub.vectors.iter().zip(&aub.functional_norms) {
        let xv = DVector::from_column_slice(&xj.entries);
        let Ok(c) = svd.solve(&xv, 1e-14) else {
            return f64::INFINITY;
        };
        let r = &xv - &prob.b * c;
        total += fj * prob.p.norm(r.as_slice());
    }
    2.0 * total * (1.0 + 1e-12) + 1e-15
}

/// Bracket for the gap `Λ(X, Y)`, the Hausdorff distance between unit balls.
pub fn gap_estimate(x: &Subspace, y: &Subspace, budget: &GapBudget) -> Result<GapEstimate> {
    if x.dim() != y.dim() {
        return Err(Error::Shape(format!(
            "dimensions differ: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if x.ambient_n != y.ambient_n || x.ambient_p != y.ambient_p {
        return Err(Error::Shape(
            "subspaces live in different ambient spaces".into(),
        ));
    }
    let xy = directional_gap(x, y, budget)?;
    let yx = directional_gap(y, x, budget)?;
    let lower = xy.lower.max(yx.lower);
    let upper = (xy.upper_without_slack + xy.slack).max(yx.upper_without_slack + yx.slack);
    Ok(GapEstimate {
        lower,
        upper: upper.max(lower),
        samples: xy.samples + yx.samples,
        slack: xy.slack.max(yx.slack),
    })
}

/// A basis of `X` that is (approximately) Auerbach: unit vectors whose
/// coordinate functionals have norm one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuerbachBasis {
    pub vectors: Vec<VectorP>,
    /// Coordinates of `vectors[j]` in the input basis, as columns.
    pub coeffs: Vec<Vec<f64>>,
    /// Certified upper bounds on the norms of the coordinate functionals.
    pub functional_norms: Vec<f64>,
    /// `max_j ‖f_j‖ − 1`, clamped at zero.
    pub defect: f64,
    /// Largest `max_j |a_j| / ‖Σ a_j x_j‖` over a sampled grid of coefficients.
    pub worst_ratio: f64,
    /// Defect and sampled ratio both within `1e−6`.
    pub verified: bool,
}

impl AuerbachBasis {
    /// `A` with `max_j |a_j| ≤ A·‖Σ a_j x_j‖` for all `a`.
    pub fn constant(&self) -> f64 {
        1.0 + self.defect
    }
}

fn det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// Max-|det| basis by coordinate ascent from `restarts` seeded starts.
///
/// Replacing one vector with a maximiser of the (linear) determinant over the
/// unit ball leaves every coordinatewise maximum Auerbach, so a converged sweep
/// suffices; the functional norms are then certified by the convex solver.
pub fn auerbach_basis(x: &Subspace, restarts: usize, seed: u64) -> Result<AuerbachBasis> {
    let k = x.dim();
    let prob = BallProblem::new(x);
    let restarts = restarts.max(1);
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for r in 0..restarts {
        let mut rng = stream_rng(seed, 0xa0e7 + r as u64);
        let mut v = if r == 0 {
            DMatrix::identity(k, k)
        } else {
            DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0))
        };
        for j in 0..k {
            let col: Vec<f64> = v.column(j).iter().copied().collect();
            let nv = x.ambient_p.norm(prob.image(&col).as_slice());
            if nv > 0.0 {
                v.column_mut(j).scale_mut(1.0 / nv);
            }
        }
        if det(&v).abs() < 1e-12 {
            continue;
        }
        let mut current = det(&v).abs();
        for _sweep in 0..60 {
            let before = current;
            for j in 0..k {
                // Cofactor vector: det is linear in column j.
                let phi: Vec<f64> = (0..k)
                    .map(|i| {
                        let mut e = v.clone();
                        e.column_mut(j).fill(0.0);
                        e[(i, j)] = 1.0;
                        det(&e)
                    })
                    .collect();
                let (val, _, c) = prob.max_linear(&phi);
                if val > current * (1.0 + 1e-13) {
                    for (i, ci) in c.iter().enumerate() {
                        v[(i, j)] = *ci;
                    }
                    current = det(&v).abs();
                }
            }
            if current <= before * (1.0 + 1e-11) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| current > *b) {
            best = Some((current, v));
        }
    }
    let (_, v) = best.ok_or_else(|| Error::Internal("no admissible starting basis".into()))?;
    finish_auerbach(x, &prob, v)
}

fn finish_auerbach(x: &Subspace, prob: &BallProblem, v: DMatrix<f64>) -> Result<AuerbachBasis> {
    let k = x.dim();
    let inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Internal("singular basis".into()))?;
    let mut functional_norms = Vec::with_capacity(k);
    for j in 0..k {
        let row: Vec<f64> = inv.row(j).iter().copied().collect();
        let (_, upper, _) = prob.max_linear(&row);
        functional_norms.push(upper);
    }
    let vectors: Vec<VectorP> = (0..k)
        .map(|j| {
            let col: Vec<f64> = v.column(j).iter().copied().collect();
            VectorP {
                entries: prob.image(&col).iter().copied().collect(),
                p: x.ambient_p,
            }
        })
        .collect();
    let defect = (functional_norms.iter().cloned().fold(0.0, f64::max) - 1.0).max(0.0);
    let mut worst_ratio: f64 = 0.0;
    let grid = if k == 1 {
        vec![vec![1.0]]
    } else {
        cube_surface_grid(k, if k == 2 { 400 } else { 24 })
    };
    for a in grid
        .iter()
        .chain(sphere_sample(k, PIndex::Infinity, 2000, 17).iter())
    {
        let mut y = vec![0.0; x.ambient_n];
        for (aj, xj) in a.iter().zip(&vectors) {
            for (yi, xi) in y.iter_mut().zip(&xj.entries) {
                *yi += aj * xi;
            }
        }
        let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst_ratio = worst_ratio.max(amax / x.ambient_p.norm(&y));
    }
    let coeffs = (0..k)
        .map(|j| v.column(j).iter().copied().collect())
        .collect();
    let verified = defect <= 1e-6 && worst_ratio <= 1.0 + 1e-6;
    Ok(AuerbachBasis {
        vectors,
        coeffs,
        functional_norms,
        defect,
        worst_ratio,
        verified,
    })
}

/// Output of [`bm_from_gap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmFromGap {
    /// Auerbach basis `x_j` of `X`.
    pub domain_basis: Vec<VectorP>,
    /// Nearest points `y_j ∈ B_Y`.
    pub images: Vec<VectorP>,
    /// `θ` in Auerbach coordinates: column `j` is `y_j`.
    pub theta: LinearMap,
    pub gap: GapEstimate,
    /// `Σ_j ‖x_j − y_j‖`.
    pub displacement: f64,
    /// Certified `‖θ‖ ≤ 1 + A·s`.
    pub norm_upper: f64,
    /// Certified `‖θ⁻¹‖ ≤ 1/(1 − A·s)`.
    pub inverse_norm_upper: f64,
    /// Certified upper bound on `log(‖θ‖‖θ⁻¹‖)`.
    pub bound: f64,
    /// `4k·Λ_upper`.
    pub target: f64,
    /// Sampled `log(‖θ‖‖θ⁻¹‖)` (a lower estimate).
    pub sampled: f64,
}

/// Builds `θ: x_j ↦ y_j` and certifies `log(‖θ‖‖θ⁻¹‖) ≤ 4k·Λ_upper`.
pub fn bm_from_gap(x: &Subspace, y: &Subspace, budget: &GapBudget) -> Result<BmFromGap> {
    let gap = gap_estimate(x, y, budget)?;
    bm_with_gap(x, y, gap, budget)
}

/// [`bm_from_gap`] for a gap bracket already computed by [`gap_estimate`].
pub fn bm_with_gap(
    x: &Subspace,
    y: &Subspace,
    gap: GapEstimate,
    budget: &GapBudget,
) -> Result<BmFromGap> {
    let k = x.dim();
    if x.dim() != y.dim() || x.ambient_n != y.ambient_n || x.ambient_p != y.ambient_p {
        return Err(Error::Shape(
            "subspaces must share dimension and ambient space".into(),
        ));
    }
    let limit = 1.0 / (2.0 * k as f64);
    if gap.upper > limit {
        return Err(Error::Precondition(format!(
            "gap upper bound {:.6} exceeds 1/(2k) = {:.6}",
            gap.upper, limit
        )));
    }
    let aub = auerbach_basis(x, budget.restarts, budget.seed)?;
    let prob = BallProblem::new(y);
    let mut images = Vec::with_capacity(k);
    let mut displacement = 0.0;
    for xj in &aub.vectors {
        let d = distance_with(&prob, &xj.entries);
        let diff: Vec<f64> = xj
            .entries
            .iter()
            .zip(&d.point)
            .map(|(a, b)| a - b)
            .collect();
        displacement += x.ambient_p.norm(&diff);
        images.push(VectorP {
            entries: d.point,
            p: y.ambient_p,
        });
    }
    let a_s = aub.constant() * displacement;
    if a_s >= 1.0 {
        return Err(Error::Internal(format!(
            "displacement {a_s} too large to invert θ"
        )));
    }
    let norm_upper = 1.0 + a_s;
    let inverse_norm_upper = 1.0 / (1.0 - a_s);
    let bound = (norm_upper * inverse_norm_upper).ln();
    let target = 4.0 * k as f64 * gap.upper;
    let theta = LinearMap::new(
        DMatrix::from_fn(x.ambient_n, k, |i, j| images[j].entries[i]),
        PIndex::Infinity,
        y.ambient_p,
    )?;
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    let grid = if k == 1 {
        vec![vec![1.0]]
    } else {
        cube_surface_grid(k, if k == 2 { 200 } else { 16 })
    };
    for a in &grid {
        let mut u = vec![0.0; x.ambient_n];
        let mut v = vec![0.0; x.ambient_n];
        for (j, aj) in a.iter().enumerate() {
            for i in 0..x.ambient_n {
                u[i] += aj * aub.vectors[j].entries[i];
                v[i] += aj * images[j].entries[i];
            }
        }
        let r = lp_norm(&v, y.ambient_p.value()) / lp_norm(&u, x.ambient_p.value());
        hi = hi.max(r);
        lo = lo.min(r);
    }
    let sampled = if lo > 0.0 {
        (hi / lo).ln()
    } else {
        f64::INFINITY
    };
    if bound > target + 1e-6 {
        return Err(Error::Internal(format!(
            "certified log-distortion {bound} exceeds 4kΛ_upper = {target}"
        )));
    }
    Ok(BmFromGap {
        domain_basis: aub.vectors,
        images,
        theta,
        gap,
        displacement,
        norm_upper,
        inverse_norm_upper,
        bound,
        target,
        sampled,
    })
}

/// Sampled estimate of `log d_BM(X, Y)` from random search over invertible
/// maps between Auerbach coordinates. Norms are sampled, so the value is an
/// estimate rather than a certified bound.
pub fn bm_estimate(x: &Subspace, y: &Subspace, iterations: usize, seed: u64) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Shape("dimensions differ".into()));
    }
    let k = x.dim();
    let ax = auerbach_basis(x, 8, seed)?;
    let ay = auerbach_basis(y, 8, seed)?;
    let sample = sphere_sample(k, PIndex::Infinity, 600, seed);
    let embed = |basis: &[VectorP], a: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; basis[0].len()];
        for (aj, b) in a.iter().zip(basis) {
            for (vi, bi) in v.iter_mut().zip(&b.entries) {
                *vi += aj * bi;
            }
        }
        v
    };
    let score = |m: &DMatrix<f64>| -> f64 {
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for a in &sample {
            let ma: Vec<f64> = (m * DVector::from_column_slice(a))
                .iter()
                .copied()
                .collect();
            let r = y.ambient_p.norm(&embed(&ay.vectors, &ma))
                / x.ambient_p.norm(&embed(&ax.vectors, a));
            hi = hi.max(r);
            lo = lo.min(r);
        }
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            (hi / lo).ln()
        }
    };
    let mut rng = stream_rng(seed, 0xb3);
    let mut best_m = DMatrix::identity(k, k);
    let mut best = score(&best_m);
    let mut step = 0.25;
    for _ in 0..iterations {
        let cand = DMatrix::from_fn(k, k, |i, j| {
            best_m[(i, j)] + step * rng.random_range(-1.0..1.0)
        });
        let s = score(&cand);
        if s < best {
            best = s;
            best_m = cand;
        } else {
            step = (step * 0.97).max(1e-4);
        }
    }
    Ok(best)
}

/// Distortion report of a map restricted to a subspace (sampled).
pub fn restricted_distortion(
    t: &LinearMap,
    x: &Subspace,
    samples: usize,
    seed: u64,
) -> DistortionReport {
    let b = x.matrix();
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for c in sphere_sample(x.dim(), PIndex::Infinity, samples, seed) {
        let v = &b * DVector::from_column_slice(&c);
        let tv = &t.matrix * &v;
        let r = t.codomain_p.norm(tv.as_slice()) / x.ambient_p.norm(v.as_slice());
        hi = hi.max(r);
        lo = lo.min(r);
    }
    let delta = if lo > 0.0 {
        (1.0 / lo - 1.0).max(hi - 1.0).max(0.0)
    } else {
        f64::INFINITY
    };
    DistortionReport {
        lower: lo,
        upper: hi,
        certified: false,
        delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1() -> PIndex {
        PIndex::one()
    }

    #[test]
    fn distance_examples() {
        let y = Subspace::new(vec![vec![1.0, 0.0]], l1()).unwrap();
        let d = dist_to_unit_ball(&VectorP::new(vec![1.0, 0.0], l1()).unwrap(), &y).unwrap();
        assert!(d.value < 1e-6 && d.certified);
        let d = dist_to_unit_ball(&VectorP::new(vec![2.0, 0.0], l1()).unwrap(), &y).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6 && d.lower <= 1.0 + 1e-12);
        let y1 = Subspace::new(vec![vec![0.0, 1.0]], l1()).unwrap();
        let d = dist_to_unit_ball(&VectorP::new(vec![1.0, 0.0], l1()).unwrap(), &y1).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn distance_is_certified_for_p_1_2_inf_in_three_dimensions() {
        for p in [
            PIndex::one(),
            PIndex::two(),
            PIndex::Infinity,
            PIndex::Finite(3.0),
        ] {
            let y = Subspace::new(
                vec![
                    vec![1.0, 0.5, 0.0, -0.2],
                    vec![0.0, 1.0, 1.0, 0.3],
                    vec![0.2, 0.0, 0.4, 1.0],
                ],
                p,
            )
            .unwrap();
            let x = VectorP::new(vec![2.0, -1.0, 0.5, 3.0], p).unwrap();
            let d = dist_to_unit_ball(&x, &y).unwrap();
            assert!(d.certified, "{p}: {d:?}");
            assert!(d.lower <= d.value + 1e-12);
            let diff: Vec<f64> = x.entries.iter().zip(&d.point).map(|(a, b)| a - b).collect();
            assert!((p.norm(&diff) - d.value).abs() < 1e-9);
            assert!(p.norm(&d.point) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn gap_of_coordinate_axes_in_l1() {
        let x = Subspace::new(vec![vec![1.0, 0.0]], l1()).unwrap();
        let y = Subspace::new(vec![vec![0.0, 1.0]], l1()).unwrap();
        let g = gap_estimate(&x, &y, &GapBudget::default()).unwrap();
        assert!((g.lower - 1.0).abs() < 1e-6, "{g:?}");
        let same = gap_estimate(&x, &x, &GapBudget::default()).unwrap();
        assert!(same.lower < 1e-6 && same.upper <= same.slack + 1e-6);
    }

    #[test]
    fn gap_is_symmetric() {
        let p = PIndex::Finite(3.0);
        let x = Subspace::new(vec![vec![1.0, 0.2, 0.0], vec![0.0, 1.0, 0.1]], p).unwrap();
        let y = Subspace::new(vec![vec![1.0, 0.25, 0.05], vec![0.0, 1.0, 0.0]], p).unwrap();
        let b = GapBudget {
            per_axis: 8,
            ..Default::default()
        };
        let a = gap_estimate(&x, &y, &b).unwrap();
        let c = gap_estimate(&y, &x, &b).unwrap();
        assert_eq!(a, c);
        assert!(a.lower <= a.upper);
    }

    #[test]
    fn gap_upper_dominates_dense_sampling() {
        // Independent check: certified distances of many unit vectors of X,
        // built from the raw basis rather than Auerbach coordinates.
        for p in [l1(), PIndex::Finite(3.0), PIndex::Infinity] {
            let x = Subspace::new(
                vec![
                    vec![1.0, 0.1, 0.0, 0.2],
                    vec![0.0, 1.0, 0.3, 0.0],
                    vec![0.1, 0.0, 1.0, 0.1],
                ],
                p,
            )
            .unwrap();
            let y = Subspace::new(
                vec![
                    vec![1.0, 0.0, 0.05, 0.2],
                    vec![0.05, 1.0, 0.3, 0.0],
                    vec![0.1, 0.1, 1.0, 0.0],
                ],
                p,
            )
            .unwrap();
            let est = gap_estimate(&x, &y, &GapBudget::default()).unwrap();
            let prob = BallProblem::new(&y);
            let mut sampled = 0.0f64;
            for a in cube_surface_grid(3, 12) {
                let mut v: Vec<f64> = (0..4)
                    .map(|i| (0..3).map(|j| a[j] * x.basis[j].entries[i]).sum())
                    .collect();
                let nv = p.norm(&v);
                v.iter_mut().for_each(|e| *e /= nv);
                sampled = sampled.max(distance_with(&prob, &v).lower);
            }
            assert!(
                sampled <= est.upper + 1e-9,
                "{p}: sampled {sampled} > {est:?}"
            );
            assert!(
                est.lower <= est.upper && est.upper - est.lower <= 2e-3,
                "{est:?}"
            );
        }
    }

    #[test]
    fn auerbach_of_l1_is_signed_unit_basis() {
        let x = Subspace::full(3, l1());
        let a = auerbach_basis(&x, 8, 3).unwrap();
        assert!(a.verified, "{a:?}");
        for v in &a.vectors {
            let nonzero = v.entries.iter().filter(|e| e.abs() > 1e-6).count();
            assert_eq!(nonzero, 1);
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn auerbach_one_dimensional_is_normalised() {
        let x = Subspace::new(vec![vec![3.0, 4.0]], PIndex::two()).unwrap();
        let a = auerbach_basis(&x, 4, 1).unwrap();
        assert!((a.vectors[0].norm() - 1.0).abs() < 1e-9);
        assert!(a.verified);
    }

    #[test]
    fn bm_from_gap_on_equal_and_distant_pairs() {
        let p = PIndex::Finite(3.0);
        let x =
            Subspace::new(vec![vec![1.0, 0.3, 0.0, 0.1], vec![0.0, 1.0, -0.5, 0.2]], p).unwrap();
        let r = bm_from_gap(&x, &x, &GapBudget::default()).unwrap();
        assert!(r.bound < 1e-5 && r.sampled < 1e-5, "{r:?}");
        let far =
            Subspace::new(vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]], p).unwrap();
        assert!(matches!(
            bm_from_gap(&x, &far, &GapBudget::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cube_grid_counts() {
        // Perimeter of the square with 4 intervals per side: 16 points, 8 up to sign.
        assert_eq!(cube_surface_grid(2, 4).len(), 8);
    }
}
