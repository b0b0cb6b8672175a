//! Sufficient-`n` certificates for the approximate Ramsey property of
//! `δ`-equisurjections (labelled "derived chain").
//!
//! For `B ⊆ A = Equi_δ(n, m)` with `μ_A(B) ≥ 1/r`, the cube measure of `B` is
//! at least `a/r` where `a = μ(A)`. If `exp(−ρ²n/8) < a/r`, the shift rule and
//! the cube bound give `μ(B_{ρ+ε'}) ≥ 1 − exp(−ε'²n/8)`, hence
//! `1 − μ_A(B_{ρ+ε'}) ≤ exp(−ε'²n/8)/a`. Once this is below `1/m!`, the
//! permutation-averaging argument yields an `ε`-monochromatic `S_m∘F`, and
//! rounding `F` to an exact equisurjection gives the `(δ+ε)` conclusion.
//! Radii are kept on the grid `t/n`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::count::{count_equi, EXACT_LIMIT};
use crate::numeric::{format_rational, ln_factorials, parse_rational};
use crate::{Error, Result};

/// A fact that can be recomputed from its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fact {
    /// `r = 1`: the single colour class is the whole space.
    SingleColour { r: u64 },
    /// `m | n`.
    Divides { m: u64, n: u64 },
    /// `ln μ(Equi_δ(n, m)) ≥ ln_a`.
    EquiMass {
        n: u64,
        m: u64,
        delta: String,
        ln_a: f64,
    },
    /// `−(t_ρ/n)²·n/8 < ln_a − ln r`.
    ShiftPrecondition {
        n: u64,
        t_rho: u64,
        ln_a: f64,
        r: u64,
    },
    /// `t_ρ + t_ε ≤ ⌊εn⌋`.
    RadiusBudget {
        n: u64,
        t_rho: u64,
        t_eps: u64,
        eps: f64,
    },
    /// `−(t_ε/n)²·n/8 − ln_a < −ln m!`.
    ConditionalTail {
        n: u64,
        t_eps: u64,
        ln_a: f64,
        m: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    fn holds(self, l: f64, r: f64) -> bool {
        match self {
            Relation::Lt => l < r,
            Relation::Le => l <= r,
            Relation::Ge => l >= r,
            Relation::Eq => l == r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertLine {
    pub description: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    /// Whether `lhs`/`rhs` are natural logarithms.
    pub log_space: bool,
    pub fact: Fact,
}

fn eval(fact: &Fact) -> Result<(f64, Relation, f64, bool)> {
    let ln_m_fact = |m: u64| ln_factorials(m as usize)[m as usize];
    Ok(match fact {
        Fact::SingleColour { r } => (*r as f64, Relation::Eq, 1.0, false),
        Fact::Divides { m, n } => ((n % m) as f64, Relation::Eq, 0.0, false),
        Fact::EquiMass { n, m, delta, ln_a } => {
            let d = parse_rational(delta)?;
            (
                count_equi(*n as usize, *m as usize, &d).ln_fraction,
                Relation::Ge,
                *ln_a,
                true,
            )
        }
        Fact::ShiftPrecondition { n, t_rho, ln_a, r } => {
            let x = *t_rho as f64 / *n as f64;
            (
                -x * x * *n as f64 / 8.0,
                Relation::Lt,
                ln_a - (*r as f64).ln(),
                true,
            )
        }
        Fact::RadiusBudget {
            n,
            t_rho,
            t_eps,
            eps,
        } => (
            (t_rho + t_eps) as f64,
            Relation::Le,
            (eps * *n as f64 + 1e-9).floor(),
            false,
        ),
        Fact::ConditionalTail { n, t_eps, ln_a, m } => {
            let x = *t_eps as f64 / *n as f64;
            (
                -x * x * *n as f64 / 8.0 - ln_a,
                Relation::Lt,
                -ln_m_fact(*m),
                true,
            )
        }
    })
}

impl CertLine {
    pub fn new(description: &str, fact: Fact) -> Result<Self> {
        let (lhs, relation, rhs, log_space) = eval(&fact)?;
        Ok(Self {
            description: description.into(),
            lhs,
            relation,
            rhs,
            log_space,
            fact,
        })
    }

    pub fn holds(&self) -> bool {
        self.relation.holds(self.lhs, self.rhs)
    }

    /// Recomputes both sides from the fact alone and checks the relation and the recorded values.
    pub fn replay(&self) -> bool {
        match eval(&self.fact) {
            Ok((l, rel, r, _)) => {
                let close = |x: f64, y: f64| {
                    x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
                };
                rel == self.relation && rel.holds(l, r) && close(l, self.lhs) && close(r, self.rhs)
            }
            Err(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub label: String,
    pub d: u64,
    pub m: u64,
    pub r: u64,
    pub eps: f64,
    pub delta: String,
    pub n: u64,
    pub lines: Vec<CertLine>,
    pub verdict: bool,
}

impl Certificate {
    pub fn replay(&self) -> bool {
        self.lines.iter().all(CertLine::replay)
            && self.verdict == self.lines.iter().all(CertLine::holds)
    }

    /// Header object followed by one JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let header = serde_json::json!({
            "label": self.label, "d": self.d, "m": self.m, "r": self.r, "eps": self.eps,
            "delta": self.delta, "n": self.n, "verdict": self.verdict,
        });
        let mut out = header.to_string();
        for l in &self.lines {
            out.push('\n');
            out.push_str(&serde_json::to_string(l).unwrap_or_default());
        }
        out
    }

    pub fn from_json_lines(s: &str) -> Result<Self> {
        let mut it = s.lines().filter(|l| !l.trim().is_empty());
        let header: serde_json::Value = serde_json::from_str(it.next().unwrap_or("{}"))
            .map_err(|e| Error::Invalid(format!("certificate header: {e}")))?;
        let lines = it
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|e| Error::Invalid(format!("certificate line: {e}")))
            })
            .collect::<Result<Vec<CertLine>>>()?;
        let get = |k: &str| header.get(k).cloned().unwrap_or(serde_json::Value::Null);
        let u = |k: &str| {
            get(k)
                .as_u64()
                .ok_or_else(|| Error::Invalid(format!("missing {k}")))
        };
        Ok(Self {
            label: get("label").as_str().unwrap_or_default().into(),
            d: u("d")?,
            m: u("m")?,
            r: u("r")?,
            eps: get("eps")
                .as_f64()
                .ok_or_else(|| Error::Invalid("missing eps".into()))?,
            delta: get("delta").as_str().unwrap_or_default().into(),
            n: u("n")?,
            verdict: get("verdict").as_bool().unwrap_or(false),
            lines,
        })
    }
}

/// Smallest `n` with `exp(−ε²n/8) < θ`.
pub fn min_n_for_concentration(eps: f64, theta: f64) -> u64 {
    let x = 8.0 * (1.0 / theta).ln() / (eps * eps);
    let mut n = x.floor().max(0.0) as u64;
    while (-eps * eps * n as f64 / 8.0).exp() >= theta {
        n += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_n: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { max_n: 20_000 }
    }
}

/// Slack so that recomputation never lands below the recorded mass.
const LN_A_SLACK: f64 = 1e-9;

fn attempt(d: u64, m: u64, r: u64, eps: f64, delta: &BigRational, n: u64) -> Result<Certificate> {
    let dstr = format_rational(delta);
    let mut lines = vec![CertLine::new(
        &format!("{m} divides n = {n}"),
        Fact::Divides { m, n },
    )?];
    if r == 1 {
        lines.push(CertLine::new(
            "one colour: its class is all of Equi_δ(n, m)",
            Fact::SingleColour { r },
        )?);
    } else {
        let mass = count_equi(n as usize, m as usize, delta).ln_fraction;
        let ln_a = if mass.is_finite() {
            mass - LN_A_SLACK * mass.abs().max(1.0)
        } else {
            mass
        };
        let mode = if n as usize <= EXACT_LIMIT {
            "exact count"
        } else {
            "floating-point count"
        };
        lines.push(CertLine::new(
            &format!("a = μ(Equi_δ(n, m)) from {mode}"),
            Fact::EquiMass {
                n,
                m,
                delta: dstr.clone(),
                ln_a,
            },
        )?);
        let budget = (eps * n as f64 + 1e-9).floor() as u64;
        let target = ln_a - (r as f64).ln();
        let t_rho = (0..=budget).find(|&t| {
            let x = t as f64 / n as f64;
            -x * x * n as f64 / 8.0 < target
        });
        let t_rho = t_rho.unwrap_or(budget + 1);
        let t_eps = budget.saturating_sub(t_rho);
        lines.push(CertLine::new(
            "cube concentration at ρ = t_ρ/n is below a/r, so B_ρ has measure ≥ 1/2",
            Fact::ShiftPrecondition { n, t_rho, ln_a, r },
        )?);
        lines.push(CertLine::new(
            "ρ + ε' fits inside ε",
            Fact::RadiusBudget {
                n,
                t_rho,
                t_eps,
                eps,
            },
        )?);
        lines.push(CertLine::new(
            "conditional tail exp(−ε'²n/8)/a is below 1/m!",
            Fact::ConditionalTail { n, t_eps, ln_a, m },
        )?);
    }
    let verdict = lines.iter().all(CertLine::holds);
    Ok(Certificate {
        label: "derived chain".into(),
        d,
        m,
        r,
        eps,
        delta: dstr,
        n,
        lines,
        verdict,
    })
}

/// Smallest multiple `n` of `m` on the doubling-then-bisecting schedule whose chain certifies
/// that every `r`-colouring of `Equi_δ(n, d)` has a `(δ+ε)`-monochromatic `Equi_δ(m, d)∘R`.
pub fn sufficient_n_certificate(
    d: u64,
    m: u64,
    r: u64,
    eps: f64,
    delta: &BigRational,
    budget: SearchBudget,
) -> Result<Certificate> {
    if d == 0 || m == 0 || m % d != 0 {
        return Err(Error::Invalid(format!("d = {d} must divide m = {m}")));
    }
    if r == 0 || !(eps > 0.0) {
        return Err(Error::Invalid("need r ≥ 1 and ε > 0".into()));
    }
    if delta < &BigRational::from_integer(0.into()) {
        return Err(Error::Invalid("δ must be nonnegative".into()));
    }
    let mut k_fail = 0u64;
    let mut k = 1u64;
    let good = loop {
        let n = k * m;
        if n > budget.max_n {
            let probe = attempt(d, m, r, eps, delta, k_fail.max(1) * m)?;
            return Err(Error::Budget(format!(
                "no certified n ≤ {}; {}",
                budget.max_n,
                unmet(&probe)
            )));
        }
        let c = attempt(d, m, r, eps, delta, n)?;
        if c.verdict {
            break c;
        }
        k_fail = k;
        k *= 2;
    };
    let (mut lo, mut hi, mut best) = (k_fail, k, good);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let c = attempt(d, m, r, eps, delta, mid * m)?;
        if c.verdict {
            hi = mid;
            best = c;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

fn unmet(c: &Certificate) -> String {
    c.lines
        .iter()
        .find(|l| !l.holds())
        .map(|l| {
            format!(
                "unmet at n = {}: {} ({} {:?} {})",
                c.n, l.description, l.lhs, l.relation, l.rhs
            )
        })
        .unwrap_or_else(|| "all lines hold".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn inner_helper() {
        assert_eq!(min_n_for_concentration(0.5, 0.5), 23);
    }

    #[test]
    fn one_colour_is_trivial() {
        let c =
            sufficient_n_certificate(2, 4, 1, 0.3, &rat(1, 10), SearchBudget::default()).unwrap();
        assert_eq!(c.n, 4);
        assert!(c.verdict && c.replay());
    }

    #[test]
    fn example_chain_replays() {
        let c =
            sufficient_n_certificate(2, 4, 2, 0.4, &rat(1, 10), SearchBudget::default()).unwrap();
        assert!(c.verdict && c.replay(), "{c:?}");
        assert_eq!(c.n % 4, 0);
        let back = Certificate::from_json_lines(&c.to_json_lines()).unwrap();
        assert!(back.replay());
        let prev = attempt(2, 4, 2, 0.4, &rat(1, 10), c.n - 4).unwrap();
        assert!(!prev.verdict);
    }

    #[test]
    fn tampered_line_fails() {
        let mut c =
            sufficient_n_certificate(2, 4, 2, 0.4, &rat(1, 10), SearchBudget::default()).unwrap();
        if let Fact::ConditionalTail { ln_a, .. } = &mut c.lines[4].fact {
            *ln_a += 100.0;
        }
        assert!(!c.replay());
    }

    #[test]
    fn budget_exhaustion_reports_the_unmet_line() {
        let e = sufficient_n_certificate(1, 3, 3, 0.01, &rat(1, 10), SearchBudget { max_n: 60 })
            .unwrap_err();
        assert!(
            matches!(e, Error::Budget(ref s) if s.contains("unmet")),
            "{e:?}"
        );
    }
}
