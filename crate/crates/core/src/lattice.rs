//! Maps `ℓ_∞^m → ℓ_∞^n` between finite-dimensional M-spaces: δ-predicates and
//! rounding of δ-lattice (or δ-disjoint-preserving) embeddings to exact ones.

use serde::{Deserialize, Serialize};

use crate::spaces::{sphere_sample, PIndex};
use crate::{Error, Result};

/// Columns up to this many are normed by enumerating sign patterns.
pub const SIGN_PATTERN_LIMIT: usize = 20;

/// An `n × m` matrix read as `ℓ_∞^m → ℓ_∞^n` in the atom bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MSpaceMap {
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundMode {
    Lattice,
    Disjoint,
}

impl MSpaceMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape(
                "expected a nonempty rectangular matrix".into(),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("entries must be finite".into()));
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.rows[0].len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    fn col_sup(&self, j: usize) -> f64 {
        self.rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Every row has at most one nonzero entry.
    pub fn is_column_disjoint(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.iter().filter(|v| **v != 0.0).count() <= 1)
    }

    /// Disjoint supports, nonnegative in lattice mode, every column of sup-norm exactly 1.
    pub fn is_exact(&self, mode: RoundMode) -> bool {
        self.is_column_disjoint()
            && (mode == RoundMode::Disjoint || self.rows.iter().flatten().all(|v| *v >= 0.0))
            && (0..self.m()).all(|j| self.col_sup(j) == 1.0)
    }
}

/// `max_{x ∈ {±1}^m} ‖Ax‖_∞`, the `ℓ_∞^m → ℓ_∞^n` operator norm.
pub fn operator_norm_signs(a: &MSpaceMap) -> Result<f64> {
    let m = a.m();
    if m > SIGN_PATTERN_LIMIT {
        return Err(Error::Budget(format!(
            "{m} columns exceed the sign-pattern limit {SIGN_PATTERN_LIMIT}"
        )));
    }
    let mut best: f64 = 0.0;
    // Patterns x and −x give the same norm; fix x_0 = +1.
    for bits in 0..(1u64 << (m - 1)) {
        let x: Vec<f64> = (0..m)
            .map(|j| {
                if j > 0 && bits >> (j - 1) & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect();
        best = best.max(a.apply(&x).iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    Ok(best)
}

/// The same norm by `max_i Σ_j |a_ij|`.
pub fn operator_norm_rows(a: &MSpaceMap) -> f64 {
    a.rows
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn operator_norm(a: &MSpaceMap) -> f64 {
    operator_norm_signs(a).unwrap_or_else(|_| operator_norm_rows(a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predicates {
    pub delta: f64,
    pub disjoint: bool,
    pub positive: bool,
    pub isometric: bool,
    /// Whether `isometric` is exact (column-disjoint maps) or from samples of the sphere.
    pub isometric_certified: bool,
    pub norm: f64,
    /// Least `‖γx‖` over `‖x‖_∞ = 1`, exact or the smallest sampled value.
    pub lower: f64,
}

/// Number of sphere points used for the lower norm bound of non-disjoint maps.
const LOWER_SAMPLES: usize = 4000;

pub fn predicates(g: &MSpaceMap, delta: f64, seed: u64) -> Predicates {
    let (n, m) = (g.n(), g.m());
    let disjoint = (0..m).all(|j| {
        (j + 1..m).all(|k| (0..n).all(|i| g.rows[i][j].abs().min(g.rows[i][k].abs()) <= delta))
    });
    let positive = g.rows.iter().flatten().all(|v| *v >= -delta);
    let norm = operator_norm(g);
    let (lower, certified) = if g.is_column_disjoint() {
        (
            (0..m).map(|j| g.col_sup(j)).fold(f64::INFINITY, f64::min),
            true,
        )
    } else {
        let mut low = f64::INFINITY;
        for x in sphere_sample(m, PIndex::Infinity, LOWER_SAMPLES, seed) {
            low = low.min(g.apply(&x).iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
        (low, false)
    };
    let isometric = norm <= 1.0 + delta && lower * (1.0 + delta) >= 1.0;
    Predicates {
        delta,
        disjoint,
        positive,
        isometric,
        isometric_certified: certified,
        norm,
        lower,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub xi: MSpaceMap,
    /// `‖γ − ξ‖` as an operator `ℓ_∞^m → ℓ_∞^n`.
    pub distance: f64,
    /// `3δ·m`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Drops every entry with `|entry| ≤ δ` and divides each column by its sup-norm. Exact
/// embeddings are returned unchanged.
pub fn lattice_round(g: &MSpaceMap, delta: f64, mode: RoundMode, seed: u64) -> Result<Rounding> {
    let m = g.m();
    let bound = 3.0 * delta * m as f64;
    if g.is_exact(mode) {
        return Ok(Rounding {
            xi: g.clone(),
            distance: 0.0,
            bound,
            within_bound: true,
        });
    }
    let pred = predicates(g, delta, seed);
    if !pred.disjoint || (mode == RoundMode::Lattice && !pred.positive) {
        return Err(Error::Precondition(format!(
            "not δ-{} at δ = {delta}",
            if pred.disjoint {
                "positive"
            } else {
                "disjoint preserving"
            }
        )));
    }
    let mut rows: Vec<Vec<f64>> = g
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| if v.abs() > delta { v } else { 0.0 })
                .collect()
        })
        .collect();
    let sups: Vec<f64> = (0..m)
        .map(|j| rows.iter().map(|r| r[j].abs()).fold(0.0, f64::max))
        .collect();
    if let Some(j) = sups.iter().position(|s| *s == 0.0) {
        return Err(Error::Precondition(format!(
            "column {j} vanishes after dropping entries ≤ δ"
        )));
    }
    for r in rows.iter_mut() {
        for (v, s) in r.iter_mut().zip(&sups) {
            *v /= s;
        }
    }
    let xi = MSpaceMap::new(rows)?;
    if !xi.is_column_disjoint() {
        return Err(Error::Internal(
            "surviving supports overlap although γ is δ-disjoint".into(),
        ));
    }
    if mode == RoundMode::Lattice && xi.rows.iter().flatten().any(|v| *v < 0.0) {
        return Err(Error::Internal(
            "negative entry survived although γ is δ-positive".into(),
        ));
    }
    let diff = MSpaceMap::new(
        g.rows
            .iter()
            .zip(&xi.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect(),
    )?;
    let distance = operator_norm(&diff);
    Ok(Rounding {
        xi,
        distance,
        bound,
        within_bound: distance <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::rng::stream_rng;

    fn map(rows: &[&[f64]]) -> MSpaceMap {
        MSpaceMap::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_column_example() {
        let g = map(&[&[0.98], &[0.35], &[-0.02]]);
        let p = predicates(&g, 0.05, 0);
        assert!(p.positive && p.disjoint);
        let r = lattice_round(&g, 0.05, RoundMode::Lattice, 0).unwrap();
        assert_eq!(r.xi.column(0), vec![1.0, 0.35 / 0.98, 0.0]);
        assert!((r.distance - 0.02).abs() < 1e-15);
        assert!(r.within_bound);
    }

    #[test]
    fn overlapping_columns_are_not_disjoint() {
        let g = map(&[&[0.3, 0.3], &[1.0, 0.0], &[0.0, 1.0]]);
        assert!(!predicates(&g, 0.1, 0).disjoint);
        assert!(lattice_round(&g, 0.1, RoundMode::Lattice, 0).is_err());
    }

    #[test]
    fn exact_input_is_fixed() {
        let g = map(&[&[1.0, 0.0], &[0.0, 0.5], &[0.2, 0.0], &[0.0, 1.0]]);
        let p = predicates(&g, 0.0, 0);
        assert!(p.disjoint && p.positive && p.isometric && p.isometric_certified);
        let r = lattice_round(&g, 0.05, RoundMode::Lattice, 0).unwrap();
        assert_eq!(r.xi, g);
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn sign_patterns_match_row_sums() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..200 {
            let (n, m) = (rng.random_range(1..8), rng.random_range(1..7));
            let g = MSpaceMap::new(
                (0..n)
                    .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect(),
            )
            .unwrap();
            assert!((operator_norm_signs(&g).unwrap() - operator_norm_rows(&g)).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_is_idempotent_and_exact() {
        let mut rng = stream_rng(6, 0);
        for _ in 0..300 {
            let (m, n) = (rng.random_range(1..5), rng.random_range(4..13));
            let delta = rng.random_range(0.0..0.1);
            let mut rows = vec![vec![0.0; m]; n];
            for (i, row) in rows.iter_mut().enumerate() {
                let j = i % m;
                row[j] = if i < m {
                    1.0
                } else {
                    rng.random_range(0.0..1.0)
                };
                for v in row.iter_mut() {
                    *v += rng.random_range(-delta..=delta) / (2.0 * m as f64);
                }
            }
            let g = MSpaceMap::new(rows).unwrap();
            let r = lattice_round(&g, delta, RoundMode::Lattice, 1).unwrap();
            assert!(r.xi.is_exact(RoundMode::Lattice));
            assert!(r.within_bound, "{r:?}");
            let again = lattice_round(&r.xi, delta, RoundMode::Lattice, 1).unwrap();
            assert_eq!(again.xi, r.xi);
            let p = predicates(&r.xi, 0.0, 1);
            assert!(p.disjoint && p.positive && p.isometric);
        }
    }

    #[test]
    fn disjoint_mode_keeps_signs() {
        let g = map(&[&[-0.97, 0.01], &[0.02, 1.03]]);
        assert!(lattice_round(&g, 0.05, RoundMode::Lattice, 0).is_err());
        let r = lattice_round(&g, 0.05, RoundMode::Disjoint, 0).unwrap();
        assert_eq!(r.xi.rows, vec![vec![-1.0, 0.0], vec![0.0, 1.0]]);
        assert!(r.within_bound);
    }
}
