//! `ℓ_p` vectors, linear maps between `ℓ_p` spaces and distortion reports.

mod amalgam;
mod lamperti;

pub use amalgam::{amalgamate, Amalgam, Coupling};
pub use lamperti::{random_isometric, LampertiEmbedding, LampertiEntry};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng::stream_rng;
use crate::{Error, Result, FLOAT_TOL};

/// Exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PIndex {
    Finite(f64),
    Infinity,
}

// Constructors reject NaN, so equality is total.
impl Eq for PIndex {}

impl PIndex {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(PIndex::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(PIndex::Finite(p))
        } else {
            Err(Error::Invalid(format!(
                "exponent must lie in [1, inf], got {p}"
            )))
        }
    }

    pub fn one() -> Self {
        PIndex::Finite(1.0)
    }

    pub fn two() -> Self {
        PIndex::Finite(2.0)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, PIndex::Infinity)
    }

    /// Numeric value, `f64::INFINITY` for `∞`.
    pub fn value(&self) -> f64 {
        match self {
            PIndex::Finite(p) => *p,
            PIndex::Infinity => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Result<f64> {
        match self {
            PIndex::Finite(p) => Ok(*p),
            PIndex::Infinity => Err(Error::Invalid("finite exponent required".into())),
        }
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        lp_norm(x, self.value())
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(PIndex::Infinity);
        }
        let v = crate::numeric::parse_rational(t)?;
        PIndex::new(crate::numeric::rational_to_f64(&v))
    }
}

impl std::fmt::Display for PIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PIndex::Finite(p) => write!(f, "{p}"),
            PIndex::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for PIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PIndex::Finite(p) => s.serialize_f64(*p),
            PIndex::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(v) => PIndex::new(v),
            Raw::Text(t) => PIndex::parse(&t),
        };
        p.map_err(serde::de::Error::custom)
    }
}

/// `ℓ_p` norm; `p = ∞` gives the max norm. Scaled to avoid overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 || p == f64::INFINITY {
        return m;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * x
        .iter()
        .map(|v| (v.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// A vector of `ℓ_p^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorP {
    pub entries: Vec<f64>,
    pub p: PIndex,
}

impl VectorP {
    pub fn new(entries: Vec<f64>, p: PIndex) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("vector entries must be finite".into()));
        }
        Ok(Self { entries, p })
    }

    pub fn unit(n: usize, j: usize, p: PIndex) -> Self {
        let mut entries = vec![0.0; n];
        entries[j] = 1.0;
        Self { entries, p }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.p.norm(&self.entries)
    }
}

/// A matrix acting from `ℓ_{domain_p}^d` to `ℓ_{codomain_p}^n` (`n` rows, `d` columns).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub matrix: DMatrix<f64>,
    pub domain_p: PIndex,
    pub codomain_p: PIndex,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>, domain_p: PIndex, codomain_p: PIndex) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::Shape("matrix dimensions must be positive".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(Self {
            matrix,
            domain_p,
            codomain_p,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], domain_p: PIndex, codomain_p: PIndex) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Self::new(
            DMatrix::from_fn(n, d, |i, j| rows[i][j]),
            domain_p,
            codomain_p,
        )
    }

    pub fn identity(d: usize, p: PIndex) -> Self {
        Self {
            matrix: DMatrix::identity(d, d),
            domain_p: p,
            codomain_p: p,
        }
    }

    /// Number of rows (codomain dimension).
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of columns (domain dimension).
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.matrix.column(j).iter().copied().collect()
    }

    pub fn apply(&self, x: &VectorP) -> Result<VectorP> {
        if x.len() != self.cols() {
            return Err(Error::Shape(format!(
                "vector of length {} applied to a map with {} columns",
                x.len(),
                self.cols()
            )));
        }
        let y = &self.matrix * nalgebra::DVector::from_column_slice(&x.entries);
        Ok(VectorP {
            entries: y.iter().copied().collect(),
            p: self.codomain_p,
        })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.cols() != other.rows() {
            return Err(Error::Shape(format!(
                "cannot compose {}x{} after {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(LinearMap {
            matrix: &self.matrix * &other.matrix,
            domain_p: other.domain_p,
            codomain_p: self.codomain_p,
        })
    }

    pub fn rows_vec(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    /// Distortion report; `samples` and `seed` drive the sphere sample used for
    /// any bound that is not computed exactly.
    pub fn distortion(&self, sampling: &Sampling) -> Result<DistortionReport> {
        distortion_linear(self, sampling)
    }

    /// Certified upper bound on the operator norm.
    ///
    /// Exact for `1 → q`, `∞ → ∞` and `2 → 2`; otherwise the smaller of the
    /// column bound `‖(‖a_j‖_q)_j‖_{p'}` and, when both exponents agree, the
    /// interpolation bound `‖A‖_{1→1}^{1/p} ‖A‖_{∞→∞}^{1−1/p}`.
    pub fn norm_upper(&self) -> f64 {
        let (p, q) = (self.domain_p, self.codomain_p);
        let col: Vec<f64> = (0..self.cols()).map(|j| q.norm(&self.column(j))).collect();
        let conj = match p {
            PIndex::Infinity => PIndex::one(),
            PIndex::Finite(v) if v == 1.0 => PIndex::Infinity,
            PIndex::Finite(v) => PIndex::Finite(v / (v - 1.0)),
        };
        let mut best = conj.norm(&col);
        let max_row = || {
            (0..self.rows())
                .map(|i| self.matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        if p.is_infinite() && q.is_infinite() {
            best = best.min(max_row());
        }
        if p == q {
            if let PIndex::Finite(v) = p {
                let one = (0..self.cols())
                    .map(|j| self.matrix.column(j).iter().map(|x| x.abs()).sum::<f64>())
                    .fold(0.0, f64::max);
                let inf = max_row();
                best = best.min(one.powf(1.0 / v) * inf.powf(1.0 - 1.0 / v));
            }
            if p == PIndex::two() {
                best = best.min(operator_norm_2(&self.matrix));
            }
        }
        best
    }

    /// Largest `‖Tx‖` over a seeded sample of the unit sphere (a lower bound).
    pub fn norm_sampled(&self, samples: usize, seed: u64) -> f64 {
        sphere_sample(self.cols(), self.domain_p, samples, seed)
            .iter()
            .map(|x| {
                let y = &self.matrix * nalgebra::DVector::from_column_slice(x);
                self.codomain_p.norm(y.as_slice())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct LinearMapJson {
    rows: usize,
    cols: usize,
    domain_p: PIndex,
    codomain_p: PIndex,
    matrix: Vec<Vec<f64>>,
}

impl Serialize for LinearMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LinearMapJson {
            rows: self.rows(),
            cols: self.cols(),
            domain_p: self.domain_p,
            codomain_p: self.codomain_p,
            matrix: self.rows_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LinearMapJson::deserialize(d)?;
        if raw.matrix.len() != raw.rows || raw.matrix.iter().any(|r| r.len() != raw.cols) {
            return Err(serde::de::Error::custom("matrix does not match rows/cols"));
        }
        LinearMap::from_rows(&raw.matrix, raw.domain_p, raw.codomain_p)
            .map_err(serde::de::Error::custom)
    }
}

/// Two-sided bounds on `‖Tx‖/‖x‖` over the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
    pub delta: f64,
}

impl DistortionReport {
    fn from_bounds(lower: f64, upper: f64, certified: bool) -> Self {
        let delta = if lower <= 0.0 {
            f64::INFINITY
        } else {
            (1.0 / lower - 1.0).max(upper - 1.0).max(0.0)
        };
        Self {
            lower,
            upper,
            certified,
            delta,
        }
    }

    /// True when the report shows a `δ`-isometry up to [`FLOAT_TOL`].
    pub fn within(&self, delta: f64) -> bool {
        self.delta <= delta + FLOAT_TOL
    }
}

/// Sphere-sampling parameters for uncertified estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

/// Seeded sample of the unit sphere of `ℓ_p^dim`.
///
/// Contains the signed unit vectors and the normalised sign vectors first
/// (the extreme points of the `ℓ_1` and `ℓ_∞` balls), then random points with
/// random supports so that faces of every dimension are visited.
pub fn sphere_sample(dim: usize, p: PIndex, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count.max(2 * dim));
    for j in 0..dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[j] = s;
            out.push(v);
        }
    }
    if dim <= 10 {
        for mask in 0..(1u32 << dim) {
            let v: Vec<f64> = (0..dim)
                .map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            out.push(normalize(v, p));
        }
    }
    let mut rng = stream_rng(seed, 0x5f3e_e1);
    while out.len() < count {
        let sparse = rng.random_bool(0.5);
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                if sparse && rng.random_bool(0.5) {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        out.push(normalize(v, p));
    }
    out
}

fn normalize(mut v: Vec<f64>, p: PIndex) -> Vec<f64> {
    let n = p.norm(&v);
    for x in &mut v {
        *x /= n;
    }
    v
}

fn distortion_linear(t: &LinearMap, sampling: &Sampling) -> Result<DistortionReport> {
    let d = t.cols();
    let column_norms: Vec<f64> = (0..d).map(|j| t.codomain_p.norm(&t.column(j))).collect();
    if let Some(j) = column_norms.iter().position(|v| *v == 0.0) {
        return Err(Error::NotInjective(format!("column {j} is zero")));
    }
    let exact_two = t.domain_p == PIndex::two() && t.codomain_p == PIndex::two();
    if exact_two {
        let sv = t.matrix.clone().svd(false, false).singular_values;
        let upper = sv.max();
        let lower = if t.rows() < d { 0.0 } else { sv.min() };
        return Ok(DistortionReport::from_bounds(lower, upper, true));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in sphere_sample(d, t.domain_p, sampling.samples, sampling.seed) {
        let y = &t.matrix * nalgebra::DVector::from_column_slice(&x);
        let r = t.codomain_p.norm(y.as_slice());
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let upper = if t.domain_p == PIndex::one() {
        // Extreme points of the ℓ_1 ball are ±u_j.
        column_norms.iter().cloned().fold(0.0, f64::max)
    } else if t.domain_p.is_infinite() && t.codomain_p.is_infinite() {
        // Maximum absolute row sum.
        (0..t.rows())
            .map(|i| t.matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    } else {
        hi
    };
    Ok(DistortionReport::from_bounds(lo.min(upper), upper, false))
}

/// Either kind of map accepted by [`distortion`].
pub enum AnyMap<'a> {
    Linear(&'a LinearMap),
    Lamperti(&'a LampertiEmbedding),
}

/// Distortion report for a general or structured map.
pub fn distortion(map: AnyMap<'_>, sampling: &Sampling) -> Result<DistortionReport> {
    match map {
        AnyMap::Linear(t) => distortion_linear(t, sampling),
        AnyMap::Lamperti(t) => t.distortion(),
    }
}

/// Polar factor of an injective map between Euclidean spaces: the isometry
/// obtained by setting all singular values to one.
pub fn hilbert_round(t: &LinearMap) -> Result<LinearMap> {
    if t.domain_p != PIndex::two() || t.codomain_p != PIndex::two() {
        return Err(Error::Invalid(
            "Hilbert rounding needs p = 2 on both sides".into(),
        ));
    }
    if t.rows() < t.cols() {
        return Err(Error::NotInjective("more columns than rows".into()));
    }
    let svd = t.matrix.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::NotInjective(format!(
            "rank deficient, smallest singular value {smin:e}"
        )));
    }
    let u = svd
        .u
        .ok_or_else(|| Error::Internal("SVD without U".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD without V^T".into()))?;
    Ok(LinearMap {
        matrix: u * vt,
        domain_p: t.domain_p,
        codomain_p: t.codomain_p,
    })
}

/// Euclidean operator norm (largest singular value).
pub fn operator_norm_2(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let x = [3.0, -4.0];
        assert_eq!(lp_norm(&x, 1.0), 7.0);
        assert!((lp_norm(&x, 2.0) - 5.0).abs() < 1e-15);
        assert_eq!(lp_norm(&x, f64::INFINITY), 4.0);
        assert!((lp_norm(&x, 3.0) - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(lp_norm(&[0.0, 0.0], 3.0), 0.0);
    }

    #[test]
    fn pindex_parsing_and_json() {
        assert_eq!(PIndex::parse("3/2").unwrap(), PIndex::Finite(1.5));
        assert_eq!(PIndex::parse("inf").unwrap(), PIndex::Infinity);
        assert!(PIndex::new(0.5).is_err());
        let s = serde_json::to_string(&PIndex::Infinity).unwrap();
        assert_eq!(s, "\"inf\"");
        let back: PIndex = serde_json::from_str("2.5").unwrap();
        assert_eq!(back, PIndex::Finite(2.5));
    }

    #[test]
    fn identity_is_an_isometry_for_every_p() {
        for p in [
            PIndex::one(),
            PIndex::two(),
            PIndex::Finite(3.0),
            PIndex::Infinity,
        ] {
            let id = LinearMap::identity(3, p);
            let r = id
                .distortion(&Sampling {
                    samples: 2000,
                    seed: 1,
                })
                .unwrap();
            assert!(
                (r.lower - 1.0).abs() < 1e-12 && (r.upper - 1.0).abs() < 1e-12,
                "{p}"
            );
            assert!(r.delta < 1e-12);
            let x = VectorP::new(vec![1.0, -2.0, 0.5], p).unwrap();
            assert_eq!(id.apply(&x).unwrap(), x);
            assert_eq!(id.compose(&id).unwrap(), id);
        }
    }

    #[test]
    fn zero_column_is_rejected() {
        let t = LinearMap::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 0.0]],
            PIndex::one(),
            PIndex::one(),
        )
        .unwrap();
        assert!(matches!(
            t.distortion(&Sampling::default()),
            Err(Error::NotInjective(_))
        ));
    }

    #[test]
    fn hilbert_round_examples() {
        let t = LinearMap::from_rows(&[vec![1.25]], PIndex::two(), PIndex::two()).unwrap();
        let r = hilbert_round(&t).unwrap();
        assert!((r.matrix[(0, 0)] - 1.0).abs() < 1e-15);
        let t = LinearMap::from_rows(
            &[vec![1.1, 0.0], vec![0.0, 1.0 / 1.1]],
            PIndex::two(),
            PIndex::two(),
        )
        .unwrap();
        let r = hilbert_round(&t).unwrap();
        assert!((&r.matrix - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
        let dist = operator_norm_2(&(&t.matrix - &r.matrix));
        assert!((dist - 0.1).abs() < 1e-12);
        let singular = LinearMap::from_rows(
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            PIndex::two(),
            PIndex::two(),
        )
        .unwrap();
        assert!(hilbert_round(&singular).is_err());
    }

    #[test]
    fn linear_map_json_round_trip() {
        let t = LinearMap::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            PIndex::one(),
            PIndex::Infinity,
        )
        .unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: LinearMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
