//! Equipartitions as unital `ℓ_1` embeddings, rigid surjections, and the
//! `ℓ_∞`/`ℓ_1` duality between disjoint-preserving embeddings and quotients.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::{format_rational, rat};
use crate::rng::stream_rng;
use crate::spaces::{LampertiEmbedding, LampertiEntry, PIndex};
use crate::{Error, Result};

/// `γ(u_j) = (d/n) Σ_{k ∈ s_j} u_k` on `ℓ_1`, for parts `s_0, …, s_{d−1}` of equal size.
pub fn unital_from_equipartition(parts: &[Vec<usize>]) -> Result<LampertiEmbedding> {
    let d = parts.len();
    let n: usize = parts.iter().map(Vec::len).sum();
    if d == 0 || parts.iter().any(|p| p.len() != n / d || p.is_empty()) {
        return Err(Error::Invalid(
            "parts must be nonempty and of equal size".into(),
        ));
    }
    let w = BigRational::new(BigInt::from(d), BigInt::from(n));
    let cols = parts
        .iter()
        .map(|p| {
            p.iter()
                .map(|&k| LampertiEntry::new(k, 1, w.clone()))
                .collect()
        })
        .collect();
    let g = LampertiEmbedding::new(PIndex::one(), n, cols)?;
    if !g.is_isometric() || !is_unital(&g) {
        return Err(Error::Internal(
            "equipartition embedding is not unital isometric".into(),
        ));
    }
    Ok(g)
}

/// Whether `γ((1/d) Σ u_j) = (1/n) Σ u_k` exactly, for an `ℓ_1` Lamperti embedding.
pub fn is_unital(g: &LampertiEmbedding) -> bool {
    let (d, n) = (g.d(), g.n());
    let mut image = vec![BigRational::zero(); n];
    for col in g.columns() {
        for e in col {
            image[e.k] += BigRational::new(BigInt::from(e.sign), BigInt::from(d)) * &e.wpow;
        }
    }
    let target = BigRational::new(BigInt::one(), BigInt::from(n));
    g.p() == PIndex::one() && image.iter().all(|v| *v == target)
}

/// A surjection `n → R` with `min σ⁻¹(r_0) < min σ⁻¹(r_1)` whenever `r_0 < r_1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RigidSurjection {
    pub map: Vec<usize>,
    pub r: usize,
}

impl RigidSurjection {
    pub fn new(map: Vec<usize>, r: usize) -> Result<Self> {
        if !is_rigid(&map, r) {
            return Err(Error::Invalid(format!(
                "{map:?} is not a rigid surjection onto {r}"
            )));
        }
        Ok(Self { map, r })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &RigidSurjection) -> Result<RigidSurjection> {
        if inner.r != self.map.len() {
            return Err(Error::Shape(
                "codomain of the inner map must be the domain of the outer".into(),
            ));
        }
        Self::new(inner.map.iter().map(|&t| self.map[t]).collect(), self.r)
    }
}

/// A map is rigid onto `r` iff its values first appear in the order `0, 1, …, r−1`.
pub fn is_rigid(map: &[usize], r: usize) -> bool {
    let mut next = 0;
    for &v in map {
        if v > next || v >= r {
            return false;
        }
        if v == next {
            next += 1;
        }
    }
    next == r
}

/// All rigid surjections `n → r` in lexicographic order (restricted growth strings).
pub fn rigid_enumerate(n: usize, r: usize) -> Vec<RigidSurjection> {
    let mut out = Vec::new();
    if r == 0 || n < r {
        return out;
    }
    let mut cur = vec![0usize; n];
    fn rec(t: usize, max: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<RigidSurjection>) {
        let n = cur.len();
        // Values still to introduce must fit in the remaining positions.
        if r - (max + 1) > n - t {
            return;
        }
        if t == n {
            if max + 1 == r {
                out.push(RigidSurjection {
                    map: cur.clone(),
                    r,
                });
            }
            return;
        }
        for v in 0..=(max + 1).min(r - 1) {
            cur[t] = v;
            rec(t + 1, max.max(v), r, cur, out);
        }
    }
    // Position 0 always carries value 0.
    rec(1, 0, r, &mut cur, &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuoMode {
    /// `{u_k} ⊆ {±σ(u_j)} ⊆ [−1, 1]·{u_k}`.
    Disjoint,
    /// `{u_k} ⊆ {σ(u_j)} ⊆ [0, 1]·{u_k}`.
    Lattice,
}

/// A quotient `σ: ℓ_1^n → ℓ_1^d` stored by the images `σ(u_j) ∈ ℚ^d`, i.e. the rows of the
/// matrix of the dual embedding `ℓ_∞^d → ℓ_∞^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoMatrix {
    pub d: usize,
    #[serde(with = "rational_rows")]
    pub images: Vec<Vec<BigRational>>,
}

mod rational_rows {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::numeric::{format_rational, parse_rational};

    pub fn serialize<S: Serializer>(v: &[Vec<BigRational>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = v
            .iter()
            .map(|r| r.iter().map(format_rational).collect())
            .collect();
        serde::Serialize::serialize(&rows, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigRational>>, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|x| parse_rational(x).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuoCheck {
    pub holds: bool,
    /// Images not of the form `c·u_k` with `c` in the allowed interval.
    pub offending: Vec<usize>,
    /// Unit vectors `u_k` (or `±u_k`) not hit by any image.
    pub missing_units: Vec<usize>,
}

/// `Some((k, c))` when `v = c·u_k` with `c ≠ 0`; `None` for zero; `Err` otherwise.
fn as_scaled_unit(v: &[BigRational]) -> std::result::Result<Option<(usize, BigRational)>, ()> {
    let mut nz = v.iter().enumerate().filter(|(_, c)| !c.is_zero());
    match (nz.next(), nz.next()) {
        (None, _) => Ok(None),
        (Some((k, c)), None) => Ok(Some((k, c.clone()))),
        _ => Err(()),
    }
}

/// Verifies the membership chain exactly.
pub fn quo_check(images: &[Vec<BigRational>], d: usize, mode: QuoMode) -> Result<QuoCheck> {
    if images.iter().any(|v| v.len() != d) {
        return Err(Error::Shape(format!(
            "every image must have {d} coordinates"
        )));
    }
    let one = BigRational::one();
    let mut offending = Vec::new();
    let mut hit = vec![false; d];
    for (j, v) in images.iter().enumerate() {
        match as_scaled_unit(v) {
            Err(()) => offending.push(j),
            Ok(None) => {}
            Ok(Some((k, c))) => {
                let ok = match mode {
                    QuoMode::Disjoint => c.abs() <= one,
                    QuoMode::Lattice => c.is_positive() && c <= one,
                };
                if !ok {
                    offending.push(j);
                } else if c.abs() == one {
                    hit[k] = true;
                }
            }
        }
    }
    let missing_units: Vec<usize> = (0..d).filter(|&k| !hit[k]).collect();
    Ok(QuoCheck {
        holds: offending.is_empty() && missing_units.is_empty(),
        offending,
        missing_units,
    })
}

impl QuoMatrix {
    pub fn new(images: Vec<Vec<BigRational>>, d: usize, mode: QuoMode) -> Result<Self> {
        let c = quo_check(&images, d, mode)?;
        if !c.holds {
            return Err(Error::Invalid(format!(
                "membership chain fails: offending images {:?}, missing units {:?}",
                c.offending, c.missing_units
            )));
        }
        Ok(Self { d, images })
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// `σ(x)` for `x ∈ ℚ^n`.
    pub fn apply(&self, x: &[BigRational]) -> Vec<BigRational> {
        let mut y = vec![BigRational::zero(); self.d];
        for (xj, v) in x.iter().zip(&self.images) {
            for (yk, vk) in y.iter_mut().zip(v) {
                *yk += xj * vk;
            }
        }
        y
    }

    /// `(f, θ)` with `σ∘γ_{f,θ} = Id`: `f(k)` is the first `j` with `σ(u_j) = ±u_k`.
    pub fn section(&self) -> Result<(Vec<usize>, Vec<i8>)> {
        let one = BigRational::one();
        let mut f = Vec::with_capacity(self.d);
        let mut theta = Vec::with_capacity(self.d);
        for k in 0..self.d {
            let j = self
                .images
                .iter()
                .position(|v| v[k].abs() == one)
                .ok_or_else(|| Error::Precondition(format!("no image equals ±u_{k}")))?;
            f.push(j);
            theta.push(if self.images[j][k].is_positive() {
                1
            } else {
                -1
            });
        }
        Ok((f, theta))
    }
}

/// The dual of an `ℓ_∞` Lamperti embedding `γ: ℓ_∞^d → ℓ_∞^n`: `γ*(u_k)` is row `k` of `γ`.
pub fn dualize(g: &LampertiEmbedding, mode: QuoMode) -> Result<QuoMatrix> {
    if !g.p().is_infinite() {
        return Err(Error::Invalid(
            "dualize expects an embedding between ℓ_∞ spaces".into(),
        ));
    }
    let mut images = vec![vec![BigRational::zero(); g.d()]; g.n()];
    for (j, col) in g.columns().iter().enumerate() {
        for e in col {
            images[e.k][j] = BigRational::from_integer(e.sign.into()) * &e.wpow;
        }
    }
    QuoMatrix::new(images, g.d(), mode)
}

/// `γ_{f,θ}(u_k) = θ_k u_{f(k)}` as an isometric Lamperti embedding `ℓ_p^d → ℓ_p^m`.
pub fn gamma_f_theta(f: &[usize], theta: &[i8], m: usize, p: PIndex) -> Result<LampertiEmbedding> {
    if f.len() != theta.len() {
        return Err(Error::Shape("f and θ must have the same length".into()));
    }
    let cols = f
        .iter()
        .zip(theta)
        .map(|(&fk, &t)| vec![LampertiEntry::new(fk, t, BigRational::one())])
        .collect();
    LampertiEmbedding::new(p, m, cols)
}

/// `σ∘γ_{f,θ} = Id` checked exactly.
pub fn section_identity_holds(sigma: &QuoMatrix, f: &[usize], theta: &[i8]) -> bool {
    (0..sigma.d).all(|k| {
        let v = &sigma.images[f[k]];
        v.iter().enumerate().all(|(i, c)| {
            let want = if i == k {
                BigRational::from_integer(theta[k].into())
            } else {
                BigRational::zero()
            };
            *c == want
        })
    })
}

/// An element `s(l/e)u_k` of the alphabet `Δ`; `l = 0` is the single zero element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaledUnit {
    pub sign: i8,
    pub l: usize,
    pub k: usize,
}

impl ScaledUnit {
    fn vector(&self, e: usize, d: usize) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); d];
        if self.l > 0 {
            v[self.k] = rat(self.sign as i64 * self.l as i64, e as i64);
        }
        v
    }
}

/// Largest alphabet sizes replayed by [`dual_demo`].
pub const DUAL_DEMO_MAX: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualDemo {
    pub d: usize,
    pub m: usize,
    pub e: usize,
    pub eps: String,
    pub delta_size: usize,
    pub e_size: usize,
    pub lambda_size: usize,
    /// Quotients `τ ∈ Quo^⊥(ℓ_1^m, ℓ_1^d)` tested.
    pub taus: usize,
    /// All `h` built were rigid surjections `Λ → Δ`.
    pub all_rigid: bool,
    /// Largest `max_j ‖τσ(u_j) − h(g(j))‖_1` observed.
    pub worst_distance: String,
    pub within_eps: bool,
}

fn alphabet_delta(d: usize, e: usize) -> Vec<ScaledUnit> {
    let mut out = vec![ScaledUnit {
        sign: 1,
        l: 0,
        k: 0,
    }];
    for l in 1..=e {
        for sign in [1i8, -1] {
            for k in 0..d {
                out.push(ScaledUnit { sign, l, k });
            }
        }
    }
    out
}

fn injections(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(d: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for v in 0..m {
            if !cur.contains(&v) {
                cur.push(v);
                rec(d, m, cur, out);
                cur.pop();
            }
        }
    }
    rec(d, m, &mut cur, &mut out);
    out
}

fn sign_vectors(d: usize) -> Vec<Vec<i8>> {
    (0..1usize << d)
        .map(|b| {
            (0..d)
                .map(|k| if b >> k & 1 == 1 { -1 } else { 1 })
                .collect()
        })
        .collect()
}

fn l1_dist(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (x, y)| acc + (x - y).abs())
}

/// Sizes `(#Δ, #E, #Λ)` of the coding alphabets.
pub fn dual_sizes(d: usize, m: usize, e: usize) -> (u128, u128, u128) {
    let delta = 1 + 2 * (d as u128) * (e as u128);
    let inj: u128 = (0..d as u128)
        .map(|i| (m as u128).saturating_sub(i))
        .product();
    let es = inj * (1u128 << d.min(100));
    (delta, es, delta.saturating_mul(es))
}

/// Replays the coding argument for the dual Ramsey statement at tiny scale: builds
/// `Δ`, `Λ = Δ × E`, takes `g` the identity rigid surjection `Λ → Λ`, the induced
/// `σ ∈ Quo^⊥(ℓ_1^{#Λ}, ℓ_1^m)`, and for seeded `τ ∈ Quo^⊥(ℓ_1^m, ℓ_1^d)` constructs `h`,
/// checking that `h` is rigid and `‖τσ − Φ(h∘g)‖ ≤ ε`.
pub fn dual_demo(
    d: usize,
    m: usize,
    eps: &BigRational,
    taus: usize,
    seed: u64,
) -> Result<DualDemo> {
    if d == 0 || m < d || !eps.is_positive() {
        return Err(Error::Invalid("need 1 ≤ d ≤ m and ε > 0".into()));
    }
    let e = (BigRational::one() / eps).ceil().to_integer();
    let e: usize = e
        .try_into()
        .map_err(|_| Error::Invalid("ε too small".into()))?;
    if d > DUAL_DEMO_MAX || m > DUAL_DEMO_MAX || e > DUAL_DEMO_MAX {
        let (a, b, c) = dual_sizes(d, m, e);
        return Err(Error::Refused(format!(
            "dual demo limited to d, m, e ≤ {DUAL_DEMO_MAX}; here #Δ = {a}, #E = {b}, #Λ = {c}"
        )));
    }
    let delta = alphabet_delta(d, e);
    let es: Vec<(Vec<usize>, Vec<i8>)> = injections(d, m)
        .into_iter()
        .flat_map(|f| sign_vectors(d).into_iter().map(move |t| (f.clone(), t)))
        .collect();
    let lambda: Vec<(usize, usize)> = (0..delta.len())
        .flat_map(|a| (0..es.len()).map(move |b| (a, b)))
        .collect();
    let n = lambda.len();

    // σ(u_j) = γ_{f,θ}(s(l/e)u_k) for g(j) = j.
    let sigma_images: Vec<Vec<BigRational>> = lambda
        .iter()
        .map(|&(a, b)| {
            let su = &delta[a];
            let (f, t) = &es[b];
            let mut v = vec![BigRational::zero(); m];
            if su.l > 0 {
                v[f[su.k]] = rat(su.sign as i64 * t[su.k] as i64 * su.l as i64, e as i64);
            }
            v
        })
        .collect();
    QuoMatrix::new(sigma_images.clone(), m, QuoMode::Disjoint)?;

    let mut rng = stream_rng(seed, 0xd0a1);
    let mut worst = BigRational::zero();
    let mut all_rigid = true;
    for _ in 0..taus {
        let tau = random_quo(m, d, &mut rng)?;
        let (ft, tt) = tau.section()?;
        let tau_index = es
            .iter()
            .position(|(f, t)| *f == ft && *t == tt)
            .ok_or_else(|| Error::Internal("section not in E".into()))?;
        let mut h = Vec::with_capacity(n);
        for (j, &(a, b)) in lambda.iter().enumerate() {
            let image = tau.apply(&sigma_images[j]);
            let value = match as_scaled_unit(&image)
                .map_err(|_| Error::Internal("τσ(u_j) not a scaled unit".into()))?
            {
                None => 0,
                Some(_) if b == tau_index => a,
                Some((i, c)) => {
                    let lb = (c.abs() * BigRational::from_integer(e.into()))
                        .ceil()
                        .to_integer();
                    let l: usize = usize::try_from(lb)
                        .map_err(|_| Error::Internal("level overflow".into()))?
                        - 1;
                    let sign = if c.is_positive() { 1 } else { -1 };
                    if l == 0 {
                        0
                    } else {
                        delta
                            .iter()
                            .position(|x| x.l == l && x.sign == sign && x.k == i)
                            .ok_or_else(|| Error::Internal("level outside Δ".into()))?
                    }
                }
            };
            h.push(value);
        }
        all_rigid &= is_rigid(&h, delta.len());
        for (j, &hv) in h.iter().enumerate() {
            let dist = l1_dist(&tau.apply(&sigma_images[j]), &delta[hv].vector(e, d));
            if dist > worst {
                worst = dist;
            }
        }
    }
    let (ds, esz, ls) = dual_sizes(d, m, e);
    Ok(DualDemo {
        d,
        m,
        e,
        eps: format_rational(eps),
        delta_size: ds as usize,
        e_size: esz as usize,
        lambda_size: ls as usize,
        taus,
        all_rigid,
        within_eps: worst <= *eps,
        worst_distance: format_rational(&worst),
    })
}

/// A random element of `Quo^⊥(ℓ_1^m, ℓ_1^d)` with coefficients in `{c/8}`; each unit is hit once.
fn random_quo<R: Rng>(m: usize, d: usize, rng: &mut R) -> Result<QuoMatrix> {
    let mut images = vec![vec![BigRational::zero(); d]; m];
    let mut slots: Vec<usize> = (0..m).collect();
    rand::seq::SliceRandom::shuffle(slots.as_mut_slice(), rng);
    for (k, &j) in slots.iter().take(d).enumerate() {
        images[j][k] = BigRational::from_integer(if rng.random::<bool>() {
            1.into()
        } else {
            (-1).into()
        });
    }
    for &j in slots.iter().skip(d) {
        let k = rng.random_range(0..d);
        images[j][k] = rat(rng.random_range(-8..=8), 8);
    }
    QuoMatrix::new(images, d, QuoMode::Disjoint)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equipartition_embedding() {
        let g = unital_from_equipartition(&[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(
            g.column(0),
            &[
                LampertiEntry::new(0, 1, rat(1, 2)),
                LampertiEntry::new(1, 1, rat(1, 2))
            ]
        );
        assert!(g.is_isometric());
        assert!(is_unital(&g));
        assert!(g.distortion().unwrap().within(0.0));
        assert!(unital_from_equipartition(&[vec![0], vec![1, 2]]).is_err());
    }

    #[test]
    fn rigid_small() {
        let maps: Vec<Vec<usize>> = rigid_enumerate(3, 2).into_iter().map(|s| s.map).collect();
        assert_eq!(maps, vec![vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1]]);
        assert_eq!(rigid_enumerate(4, 1).len(), 1);
        assert!(rigid_enumerate(2, 3).is_empty());
        for n in 2..12 {
            assert_eq!(rigid_enumerate(n, 2).len(), (1 << (n - 1)) - 1);
        }
    }

    #[test]
    fn rigid_counts_are_stirling_numbers() {
        // S(n, r) by the recurrence S(n, r) = r·S(n−1, r) + S(n−1, r−1).
        let mut s = vec![vec![0u64; 8]; 9];
        s[0][0] = 1;
        for n in 1..9 {
            for r in 1..8 {
                s[n][r] = r as u64 * s[n - 1][r] + s[n - 1][r - 1];
            }
        }
        for n in 1..9 {
            for r in 1..=n.min(7) {
                assert_eq!(rigid_enumerate(n, r).len() as u64, s[n][r]);
            }
        }
    }

    #[test]
    fn rigid_composition_closed() {
        let outer = rigid_enumerate(4, 2);
        let inner = rigid_enumerate(6, 4);
        for o in &outer {
            for i in inner.iter().step_by(7) {
                assert!(o.compose(i).is_ok());
            }
        }
    }

    #[test]
    fn dual_of_sign_flip() {
        let g = LampertiEmbedding::new(
            PIndex::Infinity,
            2,
            vec![vec![LampertiEntry::new(1, -1, rat(1, 1))]],
        )
        .unwrap();
        let q = dualize(&g, QuoMode::Disjoint).unwrap();
        assert_eq!(q.images, vec![vec![rat(0, 1)], vec![rat(-1, 1)]]);
        assert!(dualize(&g, QuoMode::Lattice).is_err());
        let (f, t) = q.section().unwrap();
        assert_eq!((f.clone(), t.clone()), (vec![1], vec![-1]));
        assert!(section_identity_holds(&q, &f, &t));
    }

    #[test]
    fn positive_coding_map_is_lattice() {
        let g = gamma_f_theta(&[2, 0], &[1, 1], 3, PIndex::Infinity).unwrap();
        let c = quo_check(
            &dualize(&g, QuoMode::Disjoint).unwrap().images,
            2,
            QuoMode::Lattice,
        )
        .unwrap();
        assert!(c.holds);
    }

    #[test]
    fn averaging_row_fails() {
        let images = vec![
            vec![rat(1, 2), rat(1, 2)],
            vec![rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(-1, 1)],
        ];
        let c = quo_check(&images, 2, QuoMode::Disjoint).unwrap();
        assert!(!c.holds);
        assert_eq!(c.offending, vec![0]);
        assert!(c.missing_units.is_empty());
    }

    #[test]
    fn dual_demo_small() {
        let r = dual_demo(2, 2, &rat(1, 2), 50, 4).unwrap();
        assert_eq!((r.delta_size, r.e_size, r.lambda_size), (9, 8, 72));
        assert!(r.all_rigid && r.within_eps, "{r:?}");
        assert!(matches!(
            dual_demo(3, 3, &rat(1, 2), 1, 0),
            Err(Error::Refused(_))
        ));
    }
}
