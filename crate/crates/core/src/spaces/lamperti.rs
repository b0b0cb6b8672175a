//! Disjoint-support embeddings stored exactly.
//!
//! A column `j` is a list of `(k, sign, wpow)` meaning the coefficient at
//! coordinate `k` is `sign · wpow^{1/p}`. For `p = ∞` the weight is the
//! modulus `|c|` itself, so the isometry test becomes "the largest weight in
//! every column is one". Products of weights compose correctly in both cases.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DistortionReport, LinearMap, PIndex, VectorP};
use crate::numeric::{format_rational, parse_rational, rat, rational_to_f64};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LampertiEntry {
    pub k: usize,
    pub sign: i8,
    pub wpow: BigRational,
}

impl LampertiEntry {
    pub fn new(k: usize, sign: i8, wpow: BigRational) -> Self {
        Self { k, sign, wpow }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LampertiEmbedding {
    p: PIndex,
    d: usize,
    n: usize,
    cols: Vec<Vec<LampertiEntry>>,
}

impl LampertiEmbedding {
    /// Validates and canonicalises (entries sorted by coordinate).
    pub fn new(p: PIndex, n: usize, mut cols: Vec<Vec<LampertiEntry>>) -> Result<Self> {
        let d = cols.len();
        if d == 0 || n == 0 {
            return Err(Error::Shape("dimensions must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for (j, col) in cols.iter_mut().enumerate() {
            if col.is_empty() {
                return Err(Error::NotInjective(format!("column {j} is zero")));
            }
            col.sort_by_key(|e| e.k);
            for e in col.iter() {
                if e.k >= n {
                    return Err(Error::Shape(format!("coordinate {} outside 0..{n}", e.k)));
                }
                if e.sign != 1 && e.sign != -1 {
                    return Err(Error::Invalid(format!("sign must be ±1, got {}", e.sign)));
                }
                if !e.wpow.is_positive() {
                    return Err(Error::Invalid(format!(
                        "weight in column {j} must be positive"
                    )));
                }
                if !seen.insert(e.k) {
                    return Err(Error::Invalid(format!("coordinate {} used twice", e.k)));
                }
            }
        }
        Ok(Self { p, d, n, cols })
    }

    pub fn identity(d: usize, p: PIndex) -> Self {
        let cols = (0..d)
            .map(|j| vec![LampertiEntry::new(j, 1, BigRational::one())])
            .collect();
        Self { p, d, n: d, cols }
    }

    pub fn p(&self) -> PIndex {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Vec<LampertiEntry>] {
        &self.cols
    }

    pub fn column(&self, j: usize) -> &[LampertiEntry] {
        &self.cols[j]
    }

    /// Same data reinterpreted at another exponent (used by Mazur maps).
    pub(crate) fn with_p(&self, p: PIndex) -> Self {
        Self { p, ..self.clone() }
    }

    /// `Σ wpow` for finite `p`, `max wpow` for `p = ∞`; the `p`-th power of the column norm.
    pub fn column_mass(&self, j: usize) -> BigRational {
        let col = &self.cols[j];
        match self.p {
            PIndex::Infinity => col
                .iter()
                .map(|e| e.wpow.clone())
                .max()
                .unwrap_or_else(BigRational::zero),
            PIndex::Finite(_) => col.iter().fold(BigRational::zero(), |acc, e| acc + &e.wpow),
        }
    }

    /// Exact isometry test.
    pub fn is_isometric(&self) -> bool {
        (0..self.d).all(|j| self.column_mass(j).is_one())
    }

    pub fn support(&self, j: usize) -> BTreeSet<usize> {
        self.cols[j].iter().map(|e| e.k).collect()
    }

    /// Real coefficient represented by an entry.
    pub fn coefficient(&self, e: &LampertiEntry) -> f64 {
        let w = rational_to_f64(&e.wpow);
        let m = match self.p {
            PIndex::Infinity => w,
            PIndex::Finite(p) => w.powf(1.0 / p),
        };
        e.sign as f64 * m
    }

    pub fn to_linear_map(&self) -> LinearMap {
        let mut m = DMatrix::zeros(self.n, self.d);
        for (j, col) in self.cols.iter().enumerate() {
            for e in col {
                m[(e.k, j)] = self.coefficient(e);
            }
        }
        LinearMap {
            matrix: m,
            domain_p: self.p,
            codomain_p: self.p,
        }
    }

    pub fn apply(&self, x: &VectorP) -> Result<VectorP> {
        if x.len() != self.d {
            return Err(Error::Shape(format!(
                "vector of length {} for d = {}",
                x.len(),
                self.d
            )));
        }
        let mut y = vec![0.0; self.n];
        for (j, col) in self.cols.iter().enumerate() {
            for e in col {
                y[e.k] = self.coefficient(e) * x.entries[j];
            }
        }
        Ok(VectorP {
            entries: y,
            p: self.p,
        })
    }

    /// `self ∘ inner`; disjointness is inherited, weights multiply exactly.
    pub fn compose(&self, inner: &LampertiEmbedding) -> Result<LampertiEmbedding> {
        if self.p != inner.p {
            return Err(Error::Invalid(format!(
                "exponent mismatch {} vs {}",
                self.p, inner.p
            )));
        }
        if inner.n != self.d {
            return Err(Error::Shape(format!(
                "inner map lands in dimension {}, outer starts at {}",
                inner.n, self.d
            )));
        }
        let cols = inner
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .flat_map(|a| {
                        self.cols[a.k].iter().map(move |b| {
                            LampertiEntry::new(b.k, a.sign * b.sign, &a.wpow * &b.wpow)
                        })
                    })
                    .collect()
            })
            .collect();
        LampertiEmbedding::new(self.p, self.n, cols)
    }

    /// Certified distortion: the column norms are exactly the extreme ratios.
    pub fn distortion(&self) -> Result<DistortionReport> {
        let norms: Vec<f64> = (0..self.d)
            .map(|j| {
                let m = rational_to_f64(&self.column_mass(j));
                match self.p {
                    PIndex::Infinity => m,
                    PIndex::Finite(p) => m.powf(1.0 / p),
                }
            })
            .collect();
        let lower = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let upper = norms.iter().cloned().fold(0.0, f64::max);
        Ok(DistortionReport::from_bounds(lower, upper, true))
    }
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    k: usize,
    s: i8,
    wpow: String,
}

#[derive(Serialize, Deserialize)]
struct LampertiJson {
    p: PIndex,
    d: usize,
    n: usize,
    cols: Vec<Vec<EntryJson>>,
}

/// A random isometric embedding of `ℓ_p^d`: each column spreads over one to
/// three fresh coordinates with weights `w_i/Σw` (`w_i ∈ 1..=6`) and random
/// signs, and up to two unused coordinates are added.
pub fn random_isometric<R: Rng + ?Sized>(
    rng: &mut R,
    p: PIndex,
    d: usize,
) -> Result<LampertiEmbedding> {
    let pieces: Vec<usize> = (0..d).map(|_| rng.random_range(1..=3)).collect();
    let used: usize = pieces.iter().sum();
    let n = used + rng.random_range(0..=2);
    let mut coords: Vec<usize> = (0..n).collect();
    coords.shuffle(rng);
    let mut next = coords.into_iter();
    let cols = pieces
        .iter()
        .map(|&k| {
            let w: Vec<i64> = (0..k).map(|_| rng.random_range(1..=6)).collect();
            let total: i64 = w.iter().sum();
            let weight = |wi: i64| {
                if p.is_infinite() {
                    rat(1, 1)
                } else {
                    rat(wi, total)
                }
            };
            w.iter()
                .map(|&wi| {
                    let sign = if rng.random_bool(0.5) { 1 } else { -1 };
                    LampertiEntry::new(next.next().expect("enough coordinates"), sign, weight(wi))
                })
                .collect()
        })
        .collect();
    LampertiEmbedding::new(p, n, cols)
}

impl Serialize for LampertiEmbedding {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LampertiJson {
            p: self.p,
            d: self.d,
            n: self.n,
            cols: self
                .cols
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|e| EntryJson {
                            k: e.k,
                            s: e.sign,
                            wpow: format_rational(&e.wpow),
                        })
                        .collect()
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LampertiEmbedding {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LampertiJson::deserialize(d)?;
        if raw.cols.len() != raw.d {
            return Err(serde::de::Error::custom(format!(
                "d = {} but {} columns given",
                raw.d,
                raw.cols.len()
            )));
        }
        let mut cols = Vec::with_capacity(raw.d);
        for c in raw.cols {
            let mut col = Vec::with_capacity(c.len());
            for e in c {
                let w = parse_rational(&e.wpow).map_err(serde::de::Error::custom)?;
                col.push(LampertiEntry::new(e.k, e.s, w));
            }
            cols.push(col);
        }
        LampertiEmbedding::new(raw.p, raw.n, cols).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn example() -> LampertiEmbedding {
        LampertiEmbedding::new(
            PIndex::one(),
            3,
            vec![
                vec![
                    LampertiEntry::new(0, 1, rat(1, 2)),
                    LampertiEntry::new(1, 1, rat(1, 2)),
                ],
                vec![LampertiEntry::new(2, 1, rat(9, 10))],
            ],
        )
        .unwrap()
    }

    #[test]
    fn distortion_of_short_column() {
        let r = example().distortion().unwrap();
        assert!(r.certified);
        assert!((r.lower - 0.9).abs() < 1e-15);
        assert!((r.upper - 1.0).abs() < 1e-15);
        assert!((r.delta - 1.0 / 9.0).abs() < 1e-12);
        assert!(!example().is_isometric());
    }

    #[test]
    fn rejects_overlaps_and_zero_columns() {
        let overlap = LampertiEmbedding::new(
            PIndex::one(),
            2,
            vec![
                vec![LampertiEntry::new(0, 1, rat(1, 1))],
                vec![LampertiEntry::new(0, 1, rat(1, 1))],
            ],
        );
        assert!(overlap.is_err());
        let empty = LampertiEmbedding::new(PIndex::one(), 2, vec![vec![]]);
        assert!(matches!(empty, Err(Error::NotInjective(_))));
    }

    #[test]
    fn infinity_uses_max_weight() {
        let t = LampertiEmbedding::new(
            PIndex::Infinity,
            3,
            vec![vec![
                LampertiEntry::new(0, -1, rat(1, 1)),
                LampertiEntry::new(2, 1, rat(1, 3)),
            ]],
        )
        .unwrap();
        assert!(t.is_isometric());
        let m = t.to_linear_map();
        assert_eq!(m.matrix[(0, 0)], -1.0);
        assert!((m.matrix[(2, 0)] - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn json_round_trip() {
        let t = example();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"wpow\":\"9/10\""));
        let back: LampertiEmbedding = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn compose_with_identity() {
        let t = example();
        let id3 = LampertiEmbedding::identity(3, PIndex::one());
        let id2 = LampertiEmbedding::identity(2, PIndex::one());
        assert_eq!(id3.compose(&t).unwrap(), t);
        assert_eq!(t.compose(&id2).unwrap(), t);
    }
}
