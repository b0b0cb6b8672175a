//! How much of a function space can live on the zero set of `u`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::spaces::{sphere_sample, PIndex};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullSupport {
    /// `sup_{f ∈ X, ‖f‖_p = 1} ‖f·𝟙_{u=0}‖_p` (exact for `p = 2`, a sampled lower bound otherwise).
    pub value: f64,
    pub exact: bool,
    /// Coefficients of the maximiser found.
    pub argmax: Vec<f64>,
}

fn weighted_norm(f: &[f64], w: &[f64], p: f64) -> f64 {
    f.iter()
        .zip(w)
        .map(|(x, m)| m * x.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `u` and the basis functions are given by their values on the atoms, whose masses are `masses`.
pub fn eps_full_support(
    u: &[f64],
    basis: &[Vec<f64>],
    masses: &[f64],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<FullSupport> {
    let n = masses.len();
    if u.len() != n || basis.is_empty() || basis.iter().any(|b| b.len() != n) {
        return Err(Error::Shape("functions need one value per atom".into()));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Invalid("p must be a finite real ≥ 1".into()));
    }
    let k = basis.len();
    let b = DMatrix::from_fn(n, k, |i, j| basis[j][i]);
    let uv = DVector::from_column_slice(u);
    let coef = b
        .clone()
        .svd(true, true)
        .solve(&uv, 1e-14)
        .map_err(|e| Error::Internal(e.into()))?;
    if (&b * coef - &uv).amax() > 1e-9 * uv.amax().max(1.0) {
        return Err(Error::Precondition(
            "u is not in the span of the basis".into(),
        ));
    }
    let zero: Vec<bool> = u.iter().map(|v| v.abs() <= 1e-12).collect();
    let wz: Vec<f64> = masses
        .iter()
        .zip(&zero)
        .map(|(m, z)| if *z { *m } else { 0.0 })
        .collect();
    if p == 2.0 {
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(masses));
        let wzd = DMatrix::from_diagonal(&DVector::from_column_slice(&wz));
        let g = b.transpose() * &w * &b;
        let gz = b.transpose() * &wzd * &b;
        let chol = g
            .cholesky()
            .ok_or_else(|| Error::Invalid("basis is degenerate in L_2".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Internal("singular factor".into()))?;
        let m = &linv * gz * linv.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let eig = m.symmetric_eigen();
        let i = eig.eigenvalues.imax();
        let y = eig.eigenvectors.column(i).into_owned();
        let c = linv.transpose() * y;
        return Ok(FullSupport {
            value: eig.eigenvalues[i].max(0.0).sqrt(),
            exact: true,
            argmax: c.iter().copied().collect(),
        });
    }
    let mut best = FullSupport {
        value: 0.0,
        exact: false,
        argmax: vec![0.0; k],
    };
    for c in sphere_sample(k, PIndex::Infinity, samples, seed) {
        let f = &b * DVector::from_column_slice(&c);
        let total = weighted_norm(f.as_slice(), masses, p);
        if total <= 0.0 {
            continue;
        }
        let r = weighted_norm(f.as_slice(), &wz, p) / total;
        if r > best.value {
            best.value = r;
            best.argmax = c;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_support_gives_zero() {
        let u = vec![1.0, 2.0, -1.0];
        let r = eps_full_support(&u, &[u.clone()], &[1.0, 1.0, 1.0], 3.0, 500, 1).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn indicator_of_zero_set_gives_one() {
        let u = vec![1.0, 1.0, 0.0, 0.0];
        let ind = vec![0.0, 0.0, 1.0, 1.0];
        for p in [1.0, 2.0, 3.0] {
            let r = eps_full_support(&u, &[u.clone(), ind.clone()], &[0.25; 4], p, 500, 2).unwrap();
            assert!((r.value - 1.0).abs() < 1e-12, "p={p}: {r:?}");
        }
    }

    #[test]
    fn exact_l2_matches_sampling() {
        let u = vec![1.0, 0.0, 2.0, 0.0, -1.0];
        let x1 = vec![0.5, 1.0, 0.0, -0.3, 0.2];
        let basis = vec![u.clone(), x1];
        let masses = [0.1, 0.3, 0.2, 0.25, 0.15];
        let exact = eps_full_support(&u, &basis, &masses, 2.0, 0, 0).unwrap();
        let sampled = eps_full_support(&u, &basis, &masses, 2.0 + 1e-12, 200_000, 3).unwrap();
        assert!(sampled.value <= exact.value + 1e-9);
        assert!(exact.value - sampled.value < 1e-3, "{exact:?} {sampled:?}");
    }
}
