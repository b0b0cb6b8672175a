//! Equisurjections `T → S` with `T = {0..#T}`, `S = {0..#S}`, the normalised
//! Hamming distance, matching and rounding, counting, concentration, and
//! replayable sufficient-`n` certificates.

mod certificate;
mod concentration;
mod count;

pub use certificate::{
    min_n_for_concentration, sufficient_n_certificate, CertLine, Certificate, Fact, Relation,
    SearchBudget,
};
pub use concentration::{
    concentration, eq21_bound, fattening_profile, shift_rule_check, Concentration,
    ConcentrationMode, HammingCube, IsoperimetricTable, ShiftCheck, DOWNSET_BUDGET,
};
pub use count::{
    count_equi, count_equi_f64, eq22_bound, eq22_threshold, ln_miss_fraction_binary, window,
    EquiCount,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A map `T → S` recorded by its values; surjective when built through [`Equisurjection::new`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Equisurjection {
    pub map: Vec<usize>,
    pub s_size: usize,
}

impl Equisurjection {
    pub fn new(map: Vec<usize>, s_size: usize) -> Result<Self> {
        let f = Self::unchecked(map, s_size)?;
        if f.preimage_sizes().contains(&0) {
            return Err(Error::Invalid("map is not surjective".into()));
        }
        Ok(f)
    }

    /// Any map `T → S`, surjective or not.
    pub fn unchecked(map: Vec<usize>, s_size: usize) -> Result<Self> {
        if s_size == 0 || map.is_empty() {
            return Err(Error::Invalid("T and S must be nonempty".into()));
        }
        if map.iter().any(|&v| v >= s_size) {
            return Err(Error::Invalid(format!(
                "values must lie below #S = {s_size}"
            )));
        }
        Ok(Self { map, s_size })
    }

    /// The equisurjection sending consecutive blocks of `#T/#S` points to `0, 1, …`.
    pub fn canonical(t_size: usize, s_size: usize) -> Result<Self> {
        if s_size == 0 || t_size % s_size != 0 {
            return Err(Error::Invalid(format!(
                "#S = {s_size} must divide #T = {t_size}"
            )));
        }
        let block = t_size / s_size;
        Self::new((0..t_size).map(|t| t / block).collect(), s_size)
    }

    pub fn t_size(&self) -> usize {
        self.map.len()
    }

    pub fn preimage_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.s_size];
        self.map.iter().for_each(|&v| c[v] += 1);
        c
    }

    pub fn preimages(&self) -> Vec<Vec<usize>> {
        let mut c = vec![Vec::new(); self.s_size];
        self.map.iter().enumerate().for_each(|(t, &v)| c[v].push(t));
        c
    }

    /// Smallest `δ` with `#T/#S·(1−δ) ≤ #F⁻¹(s) ≤ #T/#S·(1+δ)` for all `s`.
    pub fn delta(&self) -> Result<BigRational> {
        let sizes = self.preimage_sizes();
        if sizes.contains(&0) {
            return Err(Error::Invalid("map is not surjective".into()));
        }
        let t = BigInt::from(self.t_size());
        let s = BigInt::from(self.s_size);
        Ok(sizes
            .iter()
            .map(|&k| {
                (BigRational::new(BigInt::from(k) * &s, t.clone())
                    - BigRational::from_integer(1.into()))
                .abs()
            })
            .fold(BigRational::zero(), |a, b| if b > a { b } else { a }))
    }

    /// Whether `F ∈ Equi_δ(T, S)`.
    pub fn is_delta_equi(&self, delta: &BigRational) -> bool {
        let sizes = self.preimage_sizes();
        !sizes.contains(&0)
            && sizes
                .iter()
                .all(|&k| window(self.t_size(), self.s_size, delta).contains(&k))
    }

    /// `self ∘ inner`, defined when `inner` maps into the domain of `self`.
    pub fn compose(&self, inner: &Equisurjection) -> Result<Equisurjection> {
        if inner.s_size != self.t_size() {
            return Err(Error::Shape(
                "codomain of the inner map must be the domain of the outer".into(),
            ));
        }
        Self::unchecked(
            inner.map.iter().map(|&t| self.map[t]).collect(),
            self.s_size,
        )
    }

    /// `self ∘ π` for a permutation `π` of `T`.
    pub fn permute(&self, pi: &[usize]) -> Result<Equisurjection> {
        if pi.len() != self.t_size() {
            return Err(Error::Shape("permutation of the wrong length".into()));
        }
        Self::unchecked(pi.iter().map(|&t| self.map[t]).collect(), self.s_size)
    }
}

/// `d_H(F, G) = #{t : F(t) ≠ G(t)}/#T`.
pub fn hamming(f: &Equisurjection, g: &Equisurjection) -> Result<BigRational> {
    if f.t_size() != g.t_size() {
        return Err(Error::Shape("maps must share the domain".into()));
    }
    let diff = f.map.iter().zip(&g.map).filter(|(a, b)| a != b).count();
    Ok(BigRational::new(
        BigInt::from(diff),
        BigInt::from(f.t_size()),
    ))
}

/// `(1 + δ_0)(1 + δ_1) − 1`: composing a `δ_0`- and a `δ_1`-equisurjection gives one within this.
pub fn composition_delta(d0: &BigRational, d1: &BigRational) -> BigRational {
    d0 + d1 + d0 * d1
}

/// A permutation `π` of `T` with `d_H(ψ∘π, φ) ≤ (δ_φ + δ_ψ)/2`.
///
/// Points of `A_s = φ⁻¹(s)` are matched in index order with points of
/// `B_s = ψ⁻¹(s)`; unmatched points are paired in ascending order. The number
/// of mismatches is `Σ_s max(0, #A_s − #B_s)`, the least possible.
pub fn match_permutation(phi: &Equisurjection, psi: &Equisurjection) -> Result<Vec<usize>> {
    if phi.t_size() != psi.t_size() || phi.s_size != psi.s_size {
        return Err(Error::Shape("maps must share domain and codomain".into()));
    }
    let n = phi.t_size();
    let a = phi.preimages();
    let b = psi.preimages();
    let mut pi = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (a_s, b_s) in a.iter().zip(&b) {
        for (&t, &u) in a_s.iter().zip(b_s) {
            pi[t] = u;
            used[u] = true;
        }
    }
    let mut free = (0..n).filter(|&u| !used[u]);
    for slot in pi.iter_mut().filter(|v| **v == usize::MAX) {
        *slot = free
            .next()
            .ok_or_else(|| Error::Internal("matching ran out of targets".into()))?;
    }
    Ok(pi)
}

/// `ψ∘π` for the canonical equisurjection `ψ`, within `δ_F/2` of `F`.
pub fn round_to_exact(f: &Equisurjection) -> Result<Equisurjection> {
    let psi = Equisurjection::canonical(f.t_size(), f.s_size)?;
    let pi = match_permutation(f, &psi)?;
    psi.permute(&pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    fn eq(v: &[usize], s: usize) -> Equisurjection {
        Equisurjection::new(v.to_vec(), s).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(eq(&[0, 0, 1, 1], 2).delta().unwrap(), rat(0, 1));
        assert_eq!(eq(&[0, 1, 1, 1], 2).delta().unwrap(), rat(1, 2));
        assert!(Equisurjection::new(vec![0, 0], 2).is_err());
    }

    #[test]
    fn hamming_examples() {
        let (f, g) = (eq(&[0, 0, 1, 1], 2), eq(&[0, 1, 1, 1], 2));
        assert_eq!(hamming(&f, &f).unwrap(), rat(0, 1));
        assert_eq!(hamming(&f, &g).unwrap(), rat(1, 4));
    }

    #[test]
    fn matching_example() {
        let (phi, psi) = (eq(&[0, 0, 1, 1], 2), eq(&[0, 1, 1, 1], 2));
        let pi = match_permutation(&phi, &psi).unwrap();
        assert_eq!(
            hamming(&psi.permute(&pi).unwrap(), &phi).unwrap(),
            rat(1, 4)
        );
        let pi = match_permutation(&phi, &phi).unwrap();
        assert_eq!(pi, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rounding_example() {
        let f = eq(&[0, 1, 1, 1], 2);
        let r = round_to_exact(&f).unwrap();
        assert_eq!(r.delta().unwrap(), rat(0, 1));
        assert!(hamming(&f, &r).unwrap() <= rat(1, 4));
        let exact = eq(&[1, 0, 0, 1], 2);
        assert_eq!(round_to_exact(&exact).unwrap(), exact);
        assert!(round_to_exact(&eq(&[0, 1, 1], 2)).is_err());
    }

    #[test]
    fn composition_stays_within_combined_delta() {
        let phi = eq(&[0, 1, 2, 2, 1, 0, 3, 3, 0], 4);
        let psi = eq(&[0, 1, 1, 0], 2);
        let c = psi.compose(&phi).unwrap();
        let bound = composition_delta(&phi.delta().unwrap(), &psi.delta().unwrap());
        assert!(c.delta().unwrap() <= bound);
    }
}
