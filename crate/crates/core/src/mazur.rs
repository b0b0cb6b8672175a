//! Mazur maps `x ↦ sign(x)|x|^{p/q}` between `ℓ_p^n` and `ℓ_q^n`.
//!
//! On disjointly supported embeddings the map acts columnwise, and since a
//! Lamperti column stores `|c|^p` the transformed embedding has literally the
//! same data at exponent `q`.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::rational_to_f64;
use crate::ramsey::RamseyInstance;
use crate::rng::stream_rng;
use crate::spaces::{LampertiEmbedding, LinearMap, PIndex, VectorP};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MazurParams {
    pub p: PIndex,
    pub q: PIndex,
}

impl MazurParams {
    pub fn new(p: PIndex, q: PIndex) -> Result<Self> {
        if p.is_infinite() || q.is_infinite() {
            return Err(Error::Invalid("Mazur maps need finite exponents".into()));
        }
        Ok(Self { p, q })
    }

    pub fn inverse(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
        }
    }

    /// `p/q`.
    pub fn ratio(&self) -> f64 {
        self.p.value() / self.q.value()
    }
}

/// Constant used for `τ_{p,q}` when `p < q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum ModulusConstant {
    /// `2^{1−p/q}`, from `|sign(a)|a|^r − sign(b)|b|^r| ≤ 2^{1−r}|a − b|^r` for `r ≤ 1`.
    Holder,
    /// A calibrated value from [`calibrate_constant`].
    EmpiricalConstant(f64),
}

impl ModulusConstant {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Holder => "holder",
            Self::EmpiricalConstant(_) => "empirical-constant",
        }
    }
}

/// Upper bound for the modulus of continuity of `M_{p,q}` on the unit sphere.
pub fn tau(params: &MazurParams, t: f64, constant: ModulusConstant) -> f64 {
    let r = params.ratio();
    if r >= 1.0 {
        return r * t;
    }
    let c = match constant {
        ModulusConstant::Holder => 2f64.powf(1.0 - r),
        ModulusConstant::EmpiricalConstant(c) => c,
    };
    c * t.powf(r)
}

pub fn mazur_map(x: &VectorP, params: &MazurParams) -> Result<VectorP> {
    if x.p != params.p {
        return Err(Error::Invalid(format!(
            "vector lives in ℓ_{}, map starts at ℓ_{}",
            x.p, params.p
        )));
    }
    let r = params.ratio();
    let entries = x
        .entries
        .iter()
        .map(|v| v.signum() * v.abs().powf(r))
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect();
    Ok(VectorP {
        entries,
        p: params.q,
    })
}

/// Exact vector stored as `(sign, |x_i|^p)` per coordinate; `sign = 0` marks a zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerVector {
    pub p: PIndex,
    pub signs: Vec<i8>,
    #[serde(with = "crate::numeric::serde_rational_vec")]
    pub powers: Vec<BigRational>,
}

impl PowerVector {
    /// Exact representation of a rational vector for an integer exponent.
    pub fn from_rationals(x: &[BigRational], p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Invalid("exponent must be at least 1".into()));
        }
        let signs = x
            .iter()
            .map(|v| {
                if v.is_zero() {
                    0
                } else if v.is_positive() {
                    1
                } else {
                    -1
                }
            })
            .collect();
        let powers = x
            .iter()
            .map(|v| num_traits::pow(v.abs(), p as usize))
            .collect();
        Ok(Self {
            p: PIndex::Finite(p as f64),
            signs,
            powers,
        })
    }

    /// `‖x‖_p^p`.
    pub fn norm_pow(&self) -> BigRational {
        self.powers.iter().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn to_vector(&self) -> VectorP {
        let p = self.p.value();
        let entries = self
            .signs
            .iter()
            .zip(&self.powers)
            .map(|(s, w)| *s as f64 * rational_to_f64(w).powf(1.0 / p))
            .collect();
        VectorP { entries, p: self.p }
    }
}

/// Exact Mazur map: `|M(x)_i|^q = |x_i|^p`, so only the exponent changes.
pub fn mazur_map_exact(x: &PowerVector, params: &MazurParams) -> Result<PowerVector> {
    if x.p != params.p {
        return Err(Error::Invalid(format!(
            "vector lives in ℓ_{}, map starts at ℓ_{}",
            x.p, params.p
        )));
    }
    Ok(PowerVector {
        p: params.q,
        ..x.clone()
    })
}

/// `M_{p,q} ∘ γ ∘ M_{q,p}` for an isometric Lamperti embedding `γ`.
pub fn mazur_embedding(
    gamma: &LampertiEmbedding,
    params: &MazurParams,
) -> Result<LampertiEmbedding> {
    if gamma.p() != params.p {
        return Err(Error::Invalid(format!(
            "embedding at p = {}, map starts at {}",
            gamma.p(),
            params.p
        )));
    }
    if !gamma.is_isometric() {
        return Err(Error::NotIsometric(
            "Mazur transport needs an isometric embedding".into(),
        ));
    }
    Ok(gamma.with_p(params.q))
}

/// Seeded pairs on the unit sphere of `ℓ_p^dim`, mixing near pairs at all
/// scales, far pairs, antipodes and single sign flips.
pub fn sphere_pairs(dim: usize, p: PIndex, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream_rng(seed, 0x3a2);
    let normalise = |v: &mut Vec<f64>| {
        let n = p.norm(v);
        v.iter_mut().for_each(|x| *x /= n);
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut x: Vec<f64> = (0..dim)
            .map(|_| {
                let g: f64 = rng.random_range(-1.0..1.0);
                g * rng.random::<f64>().powi(3)
            })
            .collect();
        if p.norm(&x) == 0.0 {
            continue;
        }
        normalise(&mut x);
        let mut y = match out.len() % 4 {
            0 => (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            1 => x.iter().map(|v| -v).collect(),
            2 => {
                let mut y = x.clone();
                let i = rng.random_range(0..dim);
                y[i] = -y[i];
                y
            }
            _ => {
                let s = 10f64.powf(rng.random_range(-5.0..0.3));
                x.iter()
                    .map(|v| {
                        if rng.random_bool(0.5) {
                            v + s * rng.random_range(-1.0..1.0)
                        } else {
                            *v
                        }
                    })
                    .collect::<Vec<f64>>()
            }
        };
        if p.norm(&y) == 0.0 {
            continue;
        }
        normalise(&mut y);
        out.push((x, y));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub pairs: usize,
    /// `max (‖M x − M y‖_q − τ(‖x − y‖_p))`.
    pub worst_excess: f64,
    /// Pair attaining the worst excess.
    pub witness: (Vec<f64>, Vec<f64>),
    pub holds: bool,
}

/// Checks `‖M x − M y‖_q ≤ τ(‖x − y‖_p) + tol` on sampled sphere pairs of
/// dimensions `1..=max_dim`.
pub fn sampled_modulus(
    params: &MazurParams,
    constant: ModulusConstant,
    pairs: usize,
    max_dim: usize,
    seed: u64,
    tol: f64,
) -> Result<ModulusReport> {
    let mut worst = f64::NEG_INFINITY;
    let mut witness = (Vec::new(), Vec::new());
    let per = pairs.div_ceil(max_dim.max(1));
    let mut total = 0;
    for dim in 1..=max_dim.max(1) {
        for (x, y) in sphere_pairs(dim, params.p, per, seed ^ dim as u64) {
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let t = params.p.norm(&diff);
            let mx = mazur_map(
                &VectorP {
                    entries: x.clone(),
                    p: params.p,
                },
                params,
            )?;
            let my = mazur_map(
                &VectorP {
                    entries: y.clone(),
                    p: params.p,
                },
                params,
            )?;
            let dm: Vec<f64> = mx
                .entries
                .iter()
                .zip(&my.entries)
                .map(|(a, b)| a - b)
                .collect();
            let excess = params.q.norm(&dm) - tau(params, t, constant);
            if excess > worst {
                worst = excess;
                witness = (x, y);
            }
            total += 1;
        }
    }
    Ok(ModulusReport {
        pairs: total,
        worst_excess: worst,
        witness,
        holds: worst <= tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstant {
    /// Largest `‖M x − M y‖_q / ‖x − y‖_p^{p/q}` observed.
    pub observed: f64,
    /// `1.1 × observed`.
    pub constant: f64,
    pub pairs: usize,
    pub label: String,
}

/// Empirical `c_{p,q}` for `p < q` from seeded sphere pairs in dimensions `1..=max_dim`.
pub fn calibrate_constant(
    params: &MazurParams,
    pairs: usize,
    max_dim: usize,
    seed: u64,
) -> Result<CalibratedConstant> {
    let r = params.ratio();
    if r >= 1.0 {
        return Err(Error::Precondition(
            "the constant only enters for p < q".into(),
        ));
    }
    let mut observed: f64 = 0.0;
    let per = pairs.div_ceil(max_dim.max(1));
    for dim in 1..=max_dim.max(1) {
        for (x, y) in sphere_pairs(dim, params.p, per, seed ^ (dim as u64) << 8) {
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let t = params.p.norm(&diff);
            if t < 1e-8 {
                continue;
            }
            let mx = mazur_map(
                &VectorP {
                    entries: x,
                    p: params.p,
                },
                params,
            )?;
            let my = mazur_map(
                &VectorP {
                    entries: y,
                    p: params.p,
                },
                params,
            )?;
            let dm: Vec<f64> = mx
                .entries
                .iter()
                .zip(&my.entries)
                .map(|(a, b)| a - b)
                .collect();
            observed = observed.max(params.q.norm(&dm) / t.powf(r));
        }
    }
    Ok(CalibratedConstant {
        observed,
        constant: 1.1 * observed,
        pairs: per * max_dim.max(1),
        label: ModulusConstant::EmpiricalConstant(0.0).label().into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferredInstance {
    pub instance: RamseyInstance,
    pub source_eps: f64,
    /// `exact` when `p ≥ q`, otherwise the label of the constant used.
    pub constant_label: String,
    pub constant: Option<f64>,
    pub warnings: Vec<String>,
}

/// Moves a Ramsey instance from `ℓ_p` to `ℓ_q` with `ε ↦ τ_{p,q}(ε)`.
pub fn transfer_instance(
    inst: &RamseyInstance,
    q: PIndex,
    constant: ModulusConstant,
) -> Result<TransferredInstance> {
    inst.validate()?;
    let params = MazurParams::new(inst.p, q)?;
    let mut warnings = Vec::new();
    if inst.p == PIndex::two() || q == PIndex::two() {
        warnings.push(
            "transport through p = 2 or q = 2 is outside the range where embeddings transfer"
                .into(),
        );
    }
    let eps = if inst.p == q {
        inst.eps
    } else {
        tau(&params, inst.eps, constant)
    };
    let (label, c) = if params.ratio() >= 1.0 {
        ("exact".to_string(), None)
    } else {
        let c = match constant {
            ModulusConstant::Holder => 2f64.powf(1.0 - params.ratio()),
            ModulusConstant::EmpiricalConstant(c) => c,
        };
        (constant.label().to_string(), Some(c))
    };
    let mut instance = inst.clone();
    instance.p = q;
    instance.eps = eps;
    Ok(TransferredInstance {
        instance,
        source_eps: inst.eps,
        constant_label: label,
        constant: c,
        warnings,
    })
}

/// Certified bound on `‖M^d(γ) − M^d(η)‖_q` against `τ(upper bound on ‖γ − η‖_p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModulus {
    /// Sampled (lower) value of the transported distance.
    pub transported: f64,
    /// Certified upper bound on the source distance.
    pub source_upper: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn embedding_modulus(
    gamma: &LampertiEmbedding,
    eta: &LampertiEmbedding,
    params: &MazurParams,
    constant: ModulusConstant,
    samples: usize,
    seed: u64,
) -> Result<EmbeddingModulus> {
    let mg = mazur_embedding(gamma, params)?;
    let me = mazur_embedding(eta, params)?;
    let source = difference(gamma, eta)?;
    let target = difference(&mg, &me)?;
    let source_upper = source.norm_upper();
    let transported = target.norm_sampled(samples, seed);
    let bound = tau(params, source_upper, constant);
    Ok(EmbeddingModulus {
        transported,
        source_upper,
        bound,
        holds: transported <= bound + 1e-9,
    })
}

fn difference(a: &LampertiEmbedding, b: &LampertiEmbedding) -> Result<LinearMap> {
    if a.d() != b.d() || a.n() != b.n() || a.p() != b.p() {
        return Err(Error::Shape("embeddings have different shapes".into()));
    }
    let (ma, mb) = (a.to_linear_map(), b.to_linear_map());
    LinearMap::new(&ma.matrix - &mb.matrix, a.p(), a.p())
}

/// Replay of the transfer argument on a finite family of embeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportCheck {
    /// Index into the candidate family of the monochromatic witness `γ`.
    pub gamma: usize,
    pub color: usize,
    /// Smallest `ε` for which the source side has a witness.
    pub source_eps: f64,
    pub target_eps: f64,
    /// Largest target-side distance to the colour class over `σ`.
    pub worst_target: f64,
    pub holds: bool,
}

/// Colours of `Emb(ℓ_q^d, ℓ_q^n)` pulled back to `ℓ_p` through `M^d`.
///
/// `colored` lists the coloured embeddings at `p` (their transports form the
/// coloured family at `q`), `sigmas` the embeddings `ℓ_p^d → ℓ_p^m` and
/// `candidates` the maps `ℓ_p^m → ℓ_p^n`. The witness `γ` minimising the
/// source fattening is found, then `M^m(γ)∘M^d(σ)` is checked against the
/// `τ(ε)`-fattened colour class at `q` with certified norm bounds.
pub fn transport_witness(
    colored: &[LampertiEmbedding],
    colors: &[usize],
    sigmas: &[LampertiEmbedding],
    candidates: &[LampertiEmbedding],
    params: &MazurParams,
    constant: ModulusConstant,
) -> Result<TransportCheck> {
    if colored.len() != colors.len()
        || colored.is_empty()
        || sigmas.is_empty()
        || candidates.is_empty()
    {
        return Err(Error::Shape(
            "families must be nonempty and colours aligned".into(),
        ));
    }
    let ncolors = colors.iter().max().map_or(0, |c| c + 1);
    let fatten = |g: &LampertiEmbedding,
                  family: &[LampertiEmbedding],
                  sig: &[LampertiEmbedding],
                  color: usize| {
        let mut worst: f64 = 0.0;
        for s in sig {
            let gs = g.compose(s)?;
            let mut best = f64::INFINITY;
            for (psi, c) in family.iter().zip(colors) {
                if *c == color {
                    best = best.min(difference(&gs, psi)?.norm_upper());
                }
            }
            worst = worst.max(best);
        }
        Ok::<f64, Error>(worst)
    };
    let mut best = (f64::INFINITY, 0, 0);
    for (gi, g) in candidates.iter().enumerate() {
        for color in 0..ncolors {
            let e = fatten(g, colored, sigmas, color)?;
            if e < best.0 {
                best = (e, gi, color);
            }
        }
    }
    let (source_eps, gi, color) = best;
    let colored_q = colored
        .iter()
        .map(|c| mazur_embedding(c, params))
        .collect::<Result<Vec<_>>>()?;
    let sigmas_q = sigmas
        .iter()
        .map(|s| mazur_embedding(s, params))
        .collect::<Result<Vec<_>>>()?;
    let gamma_q = mazur_embedding(&candidates[gi], params)?;
    let worst_target = fatten(&gamma_q, &colored_q, &sigmas_q, color)?;
    let target_eps = tau(params, source_eps, constant);
    Ok(TransportCheck {
        gamma: gi,
        color,
        source_eps,
        target_eps,
        worst_target,
        holds: worst_target <= target_eps + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use crate::spaces::LampertiEntry;

    fn params(p: f64, q: f64) -> MazurParams {
        MazurParams::new(PIndex::Finite(p), PIndex::Finite(q)).unwrap()
    }

    #[test]
    fn identity_when_exponents_agree() {
        let x = VectorP::new(vec![0.3, -0.2, 0.0], PIndex::Finite(3.0)).unwrap();
        assert_eq!(mazur_map(&x, &params(3.0, 3.0)).unwrap(), x);
    }

    #[test]
    fn one_to_two_on_half_half() {
        let x = VectorP::new(vec![0.5, 0.5], PIndex::one()).unwrap();
        let y = mazur_map(&x, &params(1.0, 2.0)).unwrap();
        assert!((y.entries[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((y.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_round_trip_and_norm_identity() {
        let x = PowerVector::from_rationals(&[rat(1, 3), rat(-2, 7), rat(0, 1)], 3).unwrap();
        let m = params(3.0, 1.0);
        let y = mazur_map_exact(&x, &m).unwrap();
        assert_eq!(y.norm_pow(), x.norm_pow());
        assert_eq!(mazur_map_exact(&y, &m.inverse()).unwrap(), x);
    }

    #[test]
    fn embedding_keeps_weights() {
        let g = LampertiEmbedding::new(
            PIndex::one(),
            2,
            vec![vec![
                LampertiEntry::new(0, 1, rat(1, 2)),
                LampertiEntry::new(1, 1, rat(1, 2)),
            ]],
        )
        .unwrap();
        let h = mazur_embedding(&g, &params(1.0, 2.0)).unwrap();
        assert_eq!(h.p(), PIndex::two());
        assert_eq!(h.columns(), g.columns());
        assert!(h.is_isometric());
        let id = LampertiEmbedding::identity(3, PIndex::one());
        assert_eq!(
            mazur_embedding(&id, &params(1.0, 2.0)).unwrap(),
            LampertiEmbedding::identity(3, PIndex::two())
        );
    }

    #[test]
    fn tau_examples() {
        assert!((tau(&params(3.0, 1.0), 0.1, ModulusConstant::Holder) - 0.3).abs() < 1e-15);
        let t = tau(&params(1.0, 2.0), 0.25, ModulusConstant::Holder);
        assert!((t - 2f64.sqrt() * 0.5).abs() < 1e-15);
    }

    #[test]
    fn holder_constant_is_attained_by_antipodes() {
        // x = u_0, y = −u_0: ‖Mx − My‖ = 2 = 2^{1−r}·2^r.
        let m = params(1.0, 3.0);
        let bound = tau(&m, 2.0, ModulusConstant::Holder);
        assert!((bound - 2.0).abs() < 1e-12);
        let c = calibrate_constant(&m, 4000, 3, 5).unwrap();
        assert!(c.observed <= 2f64.powf(2.0 / 3.0) + 1e-9);
        assert!(c.observed >= 2f64.powf(2.0 / 3.0) - 1e-9);
    }

    #[test]
    fn transfer_examples() {
        let inst = RamseyInstance::new(PIndex::Finite(3.0), 1, 2, 2, 0.1).unwrap();
        let t = transfer_instance(&inst, PIndex::one(), ModulusConstant::Holder).unwrap();
        assert!((t.instance.eps - 0.3).abs() < 1e-15);
        assert_eq!(t.constant_label, "exact");
        let same = transfer_instance(&inst, PIndex::Finite(3.0), ModulusConstant::Holder).unwrap();
        assert_eq!(same.instance.eps, 0.1);
        let warned = transfer_instance(&inst, PIndex::two(), ModulusConstant::Holder).unwrap();
        assert_eq!(warned.warnings.len(), 1);
        assert!(transfer_instance(&inst, PIndex::Infinity, ModulusConstant::Holder).is_err());
    }
}
