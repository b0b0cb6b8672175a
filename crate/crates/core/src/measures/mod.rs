//! Finite discrete measures on `ℝ^k` and the tools for comparing them through
//! their `p`-characteristics `a ↦ ‖1 + ⟨a, z⟩‖_{L_p(μ)}`.

mod counterexample;
mod gp;
mod lp;
mod plateau;
mod support;

pub use counterexample::{even_p_counterexample, odd_p_search, Counterexample, OddSearch};
pub use gp::{gp, gp_literal, invert_cdf, Inversion};
pub use lp::{levy_prokhorov, levy_prokhorov_flow, LpDistance};
pub use plateau::{plateau_function, Plateau};
pub use support::{eps_full_support, FullSupport};

use std::cmp::Ordering;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::numeric::{rational_to_f64, Compensated};
use crate::{Error, Result};

/// Finite measure space with labelled atoms and exact masses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpace {
    pub atoms: Vec<SpaceAtom>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceAtom {
    pub label: String,
    #[serde(with = "crate::numeric::serde_rational")]
    pub mass: BigRational,
}

impl DiscreteSpace {
    pub fn new(atoms: Vec<(String, BigRational)>) -> Result<Self> {
        use num_traits::Signed;
        if atoms.iter().any(|(_, m)| !m.is_positive()) {
            return Err(Error::Invalid("atom masses must be positive".into()));
        }
        Ok(Self {
            atoms: atoms
                .into_iter()
                .map(|(label, mass)| SpaceAtom { label, mass })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| rational_to_f64(&a.mass))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub z: Vec<f64>,
    pub m: f64,
}

/// Finite measure `Σ m_i δ_{z_i}` on `ℝ^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

fn cmp_points(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl DiscreteMeasure {
    /// Builds a measure, merging atoms at identical points.
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        for (z, m) in &atoms {
            if z.len() != dim {
                return Err(Error::Shape(format!(
                    "atom of dimension {} in ℝ^{dim}",
                    z.len()
                )));
            }
            if !(*m > 0.0) || !m.is_finite() || z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(
                    "atoms need finite points and positive masses".into(),
                ));
            }
        }
        let mut atoms: Vec<Atom> = atoms.into_iter().map(|(z, m)| Atom { z, m }).collect();
        atoms.sort_by(|a, b| cmp_points(&a.z, &b.z));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if cmp_points(&last.z, &a.z).is_eq() => last.m += a.m,
                _ => merged.push(a),
            }
        }
        Ok(Self { dim, atoms: merged })
    }

    /// One-dimensional convenience constructor.
    pub fn on_line(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(1, atoms.iter().map(|(z, m)| (vec![*z], *m)).collect())
    }

    /// Checks a deserialised value.
    pub fn validate(&self) -> Result<()> {
        Self::new(
            self.dim,
            self.atoms.iter().map(|a| (a.z.clone(), a.m)).collect(),
        )
        .map(|_| ())
    }

    pub fn total_mass(&self) -> f64 {
        let mut s = Compensated::new();
        self.atoms.iter().for_each(|a| s.add(a.m));
        s.value()
    }

    /// `μ((−∞, a])` for a measure on the line.
    pub fn cdf(&self, a: f64) -> f64 {
        let mut s = Compensated::new();
        self.atoms
            .iter()
            .filter(|at| at.z[0] <= a)
            .for_each(|at| s.add(at.m));
        s.value()
    }

    /// `∫ φ dμ`.
    pub fn integrate(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        let mut s = Compensated::new();
        self.atoms.iter().for_each(|a| s.add(a.m * phi(&a.z)));
        s.value()
    }

    /// Same atoms with every mass multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.atoms.iter().map(|a| (a.z.clone(), a.m * c)).collect(),
        )
    }
}

/// `F_*μ` for `F = (f_0, …, f_{k−1})`, each `f_i` given by its values on the atoms.
pub fn pushforward(space: &DiscreteSpace, fs: &[Vec<f64>]) -> Result<DiscreteMeasure> {
    if fs.iter().any(|f| f.len() != space.len()) {
        return Err(Error::Shape(
            "every function needs one value per atom".into(),
        ));
    }
    let masses = space.masses();
    let atoms = (0..space.len())
        .map(|w| (fs.iter().map(|f| f[w]).collect(), masses[w]))
        .collect();
    DiscreteMeasure::new(fs.len(), atoms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    /// `|z_j|^α`.
    Coordinate(usize),
    /// `|z|^α` with the Euclidean norm.
    Euclidean,
}

/// `|z_j|^α dμ` (or `|z|^α dμ`); atoms where the weight vanishes are dropped.
pub fn density(mu: &DiscreteMeasure, alpha: f64, weight: Weight) -> Result<DiscreteMeasure> {
    if !(alpha >= 0.0) {
        return Err(Error::Invalid("α must be nonnegative".into()));
    }
    if let Weight::Coordinate(j) = weight {
        if j >= mu.dim {
            return Err(Error::Shape(format!("coordinate {j} in ℝ^{}", mu.dim)));
        }
    }
    let atoms = mu
        .atoms
        .iter()
        .filter_map(|a| {
            let r = match weight {
                Weight::Coordinate(j) => a.z[j].abs(),
                Weight::Euclidean => a.z.iter().map(|v| v * v).sum::<f64>().sqrt(),
            };
            let f = if alpha == 0.0 { 1.0 } else { r.powf(alpha) };
            (f > 0.0).then(|| (a.z.clone(), a.m * f))
        })
        .collect();
    DiscreteMeasure::new(mu.dim, atoms)
}

/// `μ̂^{(p)}(a) = (Σ m_i |1 + ⟨a, z_i⟩|^p)^{1/p}`.
pub fn p_characteristic(mu: &DiscreteMeasure, a: &[f64], p: f64) -> f64 {
    debug_assert_eq!(a.len(), mu.dim);
    let mut s = Compensated::new();
    for at in &mu.atoms {
        let t: f64 = 1.0 + a.iter().zip(&at.z).map(|(x, y)| x * y).sum::<f64>();
        s.add(at.m * t.abs().powf(p));
    }
    s.value().max(0.0).powf(1.0 / p)
}

/// Grid lower bound for the multiplicative distance between characteristics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhatBound {
    /// `max_a max(μ̂/ν̂, ν̂/μ̂)` over the grid; the true value is at least this.
    pub lower: f64,
    pub argmax: Vec<f64>,
    pub grid_size: usize,
}

pub fn dhat_p(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    grid: &[Vec<f64>],
    p: f64,
) -> Result<DhatBound> {
    if mu.dim != nu.dim || grid.iter().any(|a| a.len() != mu.dim) {
        return Err(Error::Shape(
            "measures and grid must share the dimension".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::Invalid("empty grid".into()));
    }
    let mut best = DhatBound {
        lower: 1.0,
        argmax: grid[0].clone(),
        grid_size: grid.len(),
    };
    for a in grid {
        let (x, y) = (p_characteristic(mu, a, p), p_characteristic(nu, a, p));
        let r = if x == 0.0 && y == 0.0 {
            1.0
        } else if x == 0.0 || y == 0.0 {
            f64::INFINITY
        } else {
            (x / y).max(y / x)
        };
        if r > best.lower {
            best.lower = r;
            best.argmax = a.clone();
        }
    }
    Ok(best)
}

/// Evenly spaced one-dimensional grid on `[lo, hi]`.
pub fn line_grid(lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    if count <= 1 {
        return vec![vec![lo]];
    }
    (0..count)
        .map(|i| vec![lo + (hi - lo) * i as f64 / (count - 1) as f64])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn space2() -> DiscreteSpace {
        DiscreteSpace::new(vec![("a".into(), rat(1, 2)), ("b".into(), rat(1, 2))]).unwrap()
    }

    #[test]
    fn pushforward_examples() {
        let mu = pushforward(&space2(), &[vec![1.0, -1.0]]).unwrap();
        assert_eq!(
            mu,
            DiscreteMeasure::on_line(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap()
        );
        let c = pushforward(&space2(), &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(c.atoms.len(), 1);
        assert_eq!(c.atoms[0].m, 1.0);
    }

    #[test]
    fn density_examples() {
        let mu = DiscreteMeasure::on_line(&[(2.0, 1.0), (0.0, 3.0)]).unwrap();
        assert_eq!(density(&mu, 0.0, Weight::Coordinate(0)).unwrap(), mu);
        let d = density(&mu, 3.0, Weight::Coordinate(0)).unwrap();
        assert_eq!(d, DiscreteMeasure::on_line(&[(2.0, 8.0)]).unwrap());
    }

    #[test]
    fn characteristic_examples() {
        let d0 = DiscreteMeasure::on_line(&[(0.0, 1.0)]).unwrap();
        let d1 = DiscreteMeasure::on_line(&[(1.0, 1.0)]).unwrap();
        for a in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            assert_eq!(p_characteristic(&d0, &[a], 3.0), 1.0);
            assert!((p_characteristic(&d1, &[a], 3.0) - (1.0 + a).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn dhat_of_scaled_measure() {
        let mu = DiscreteMeasure::on_line(&[(-1.0, 0.3), (0.5, 0.7)]).unwrap();
        let nu = mu.scaled(4.0).unwrap();
        let grid = line_grid(-5.0, 5.0, 101);
        let d = dhat_p(&mu, &nu, &grid, 2.0).unwrap();
        assert!((d.lower - 2.0).abs() < 1e-12);
        assert_eq!(dhat_p(&mu, &mu, &grid, 3.0).unwrap().lower, 1.0);
    }
}
