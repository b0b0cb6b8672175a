use serde::{Deserialize, Serialize};

use crate::spaces::PIndex;
use crate::{Error, Result};

/// Parameters of an approximate Ramsey statement for `{ℓ_p^n}`: every
/// `r`-colouring of `Emb(ℓ_p^d, ℓ_p^n)` has an `ε`-monochromatic set
/// `γ∘Emb(ℓ_p^d, ℓ_p^m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RamseyInstance {
    pub p: PIndex,
    pub d: usize,
    pub m: usize,
    pub r: usize,
    pub eps: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
}

impl RamseyInstance {
    pub fn new(p: PIndex, d: usize, m: usize, r: usize, eps: f64) -> Result<Self> {
        let inst = Self {
            p,
            d,
            m,
            r,
            eps,
            delta: 0.0,
            witness_n: None,
            certificate: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.m < self.d || self.r == 0 {
            return Err(Error::Invalid(format!(
                "need 1 ≤ d ≤ m and r ≥ 1, got d = {}, m = {}, r = {}",
                self.d, self.m, self.r
            )));
        }
        if !(self.eps > 0.0) || !(self.delta >= 0.0) {
            return Err(Error::Invalid(
                "ε must be positive and δ nonnegative".into(),
            ));
        }
        Ok(())
    }
}
