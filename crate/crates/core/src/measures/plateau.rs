//! Functions `f(z) = Σ_{j≤m} a_j |z + j|^p` that are bounded, integrable and
//! behave like `a_0|z|^p` at the origin.
//!
//! The coefficients kill the moments `Σ a_j j^k` (`k ≤ ⌊p⌋+2`) and the
//! shifted moments `Σ_{j≥1} a_j j^{p−l}` (`l ≤ ⌊p⌋+1`). The first family makes
//! the expansion of `f` at infinity start at `|z|^{p−⌊p⌋−3}`; the second
//! removes the low-order terms of the expansion at zero. Direct evaluation of
//! `f` cancels catastrophically far out and near zero, so both regions use
//! the corresponding series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::numeric::{rational_to_f64, Compensated};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub p: f64,
    pub m: usize,
    /// `a_0, …, a_m`, scaled so that `max |a_j| = 1`.
    pub coeffs: Vec<f64>,
    /// Largest residual of the row-normalised system.
    pub residual: f64,
    /// Dimension of the numerical null space.
    pub null_dim: usize,
    /// `max |f|` over the verification grid.
    pub max_abs: f64,
    /// Fitted exponents of `|f(z)|` on `[4m, 64m]` and `[−64m, −4m]`;
    /// `None` when `f` vanishes identically there.
    pub tail_slope: Option<(f64, f64)>,
    /// `f(±10⁻⁴)/10^{−4p}`.
    pub limit_ratio: (f64, f64),
    pub ok: bool,
    /// Exact coefficients (integer `p` only).
    #[serde(skip)]
    exact: Option<Vec<BigRational>>,
}

impl Plateau {
    /// `f(z)`, using series expansions where direct summation cancels.
    pub fn eval(&self, z: f64) -> f64 {
        if let Some(a) = &self.exact {
            return eval_exact(a, self.p as usize, z);
        }
        let m = self.m as f64;
        let p = self.p;
        if z.abs() > 2.0 * m {
            // |z + j|^p = |z|^p Σ_r C(p,r) (j/z)^r.
            let ratios: Vec<f64> = (0..=self.m).map(|j| j as f64 / z).collect();
            let mut pw = vec![1.0; self.m + 1];
            let mut s = Compensated::new();
            let mut c = 1.0;
            for r in 0..400 {
                let mut mr = Compensated::new();
                for (j, a) in self.coeffs.iter().enumerate() {
                    mr.add(a * pw[j]);
                    pw[j] *= ratios[j];
                }
                let term = c * mr.value();
                c *= (p - r as f64) / (r + 1) as f64;
                s.add(term);
                if r > p as usize + 4 && term.abs() < 1e-20 * s.value().abs().max(1e-300) {
                    break;
                }
            }
            return z.abs().powf(p) * s.value();
        }
        if z.abs() < 0.5 {
            // |z + j|^p = Σ_r C(p,r) j^{p−r} z^r for j ≥ 1.
            let mut s = Compensated::new();
            s.add(self.coeffs[0] * z.abs().powf(p));
            let mut zr = 1.0;
            let mut c = 1.0;
            for r in 0..400 {
                let mut nr = Compensated::new();
                for (j, a) in self.coeffs.iter().enumerate().skip(1) {
                    nr.add(a * (j as f64).powf(p - r as f64));
                }
                let term = c * nr.value() * zr;
                c *= (p - r as f64) / (r + 1) as f64;
                s.add(term);
                zr *= z;
                if r > p as usize + 4 && term.abs() < 1e-20 * s.value().abs().max(1e-300) {
                    break;
                }
            }
            return s.value();
        }
        let mut s = Compensated::new();
        for (j, a) in self.coeffs.iter().enumerate() {
            s.add(a * (z + j as f64).abs().powf(p));
        }
        s.value()
    }
}

/// `Σ a_j |z + j|^p` in exact arithmetic at the binary value of `z`.
fn eval_exact(a: &[BigRational], p: usize, z: f64) -> f64 {
    let Some(zr) = BigRational::from_float(z) else {
        return f64::NAN;
    };
    let mut s = BigRational::zero();
    for (j, aj) in a.iter().enumerate() {
        if aj.is_zero() {
            continue;
        }
        let t = (&zr + BigRational::from_integer(BigInt::from(j))).abs();
        s += aj * num_traits::pow(t, p);
    }
    rational_to_f64(&s)
}

/// Exact system for integer `p`; `j^{p−l}` is rational for `l > p`.
fn exact_null_vector(p: usize, m: usize) -> Option<Vec<BigRational>> {
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let jpow = |j: usize, e: i64| -> BigRational {
        if e >= 0 {
            num_traits::pow(int(j as i64), e as usize)
        } else {
            num_traits::pow(int(j as i64), (-e) as usize).recip()
        }
    };
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for k in 0..=p + 2 {
        rows.push(
            (0..=m)
                .map(|j| if k == 0 { int(1) } else { jpow(j, k as i64) })
                .collect(),
        );
    }
    for l in 0..=p + 1 {
        rows.push(
            (0..=m)
                .map(|j| {
                    if j == 0 {
                        int(0)
                    } else {
                        jpow(j, p as i64 - l as i64)
                    }
                })
                .collect(),
        );
    }
    // Reduced row echelon form.
    let ncols = m + 1;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(piv) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = rows[r][c].recip();
        rows[r].iter_mut().for_each(|v| *v *= &inv);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for cc in 0..ncols {
                    let d = &f * &rows[r][cc];
                    rows[i][cc] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let free = (0..ncols).rev().find(|c| !pivots.contains(c))?;
    let mut v = vec![BigRational::zero(); ncols];
    v[free] = int(1);
    for (i, &pc) in pivots.iter().enumerate() {
        v[pc] = -rows[i][free].clone();
    }
    let scale = v.iter().map(|x| x.abs()).max()?;
    Some(v.into_iter().map(|x| x / &scale).collect())
}

fn system(p: f64, m: usize) -> DMatrix<f64> {
    let fp = p.floor() as usize;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for k in 0..=fp + 2 {
        rows.push(
            (0..=m)
                .map(|j| {
                    if k == 0 {
                        1.0
                    } else {
                        (j as f64).powi(k as i32)
                    }
                })
                .collect(),
        );
    }
    for l in 0..=fp + 1 {
        rows.push(
            (0..=m)
                .map(|j| {
                    if j == 0 {
                        0.0
                    } else {
                        (j as f64).powf(p - l as f64)
                    }
                })
                .collect(),
        );
    }
    for r in rows.iter_mut() {
        let s = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        r.iter_mut().for_each(|v| *v /= s);
    }
    DMatrix::from_fn(rows.len(), m + 1, |i, j| rows[i][j])
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    num / den
}

/// Solves for the coefficients and verifies boundedness, tail decay and the
/// limit at zero on grids.
pub fn plateau_function(p: f64, m: usize) -> Result<Plateau> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Invalid("p must be a finite real ≥ 1".into()));
    }
    if p.fract() == 0.0 && (p as u64) % 2 == 0 {
        return Err(Error::Invalid(format!("p = {p} is an even integer")));
    }
    let fp = p.floor() as usize;
    if m < 2 * fp + 6 {
        return Err(Error::Invalid(format!("m must be at least {}", 2 * fp + 6)));
    }
    let a = system(p, m);
    let n = m + 1;
    let mut square = DMatrix::zeros(n, n);
    square.view_mut((0, 0), (a.nrows(), n)).copy_from(&a);
    let svd = square.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD without V^T".into()))?;
    let smax = svd.singular_values.max();
    let null: Vec<usize> = (0..n)
        .filter(|&i| svd.singular_values[i] <= 1e-11 * smax)
        .collect();
    if null.is_empty() {
        return Err(Error::Internal("numerically trivial null space".into()));
    }
    // Project e_0 onto the null space, which maximises |a_0| among unit null vectors.
    let mut v = DVector::zeros(n);
    for &i in &null {
        let row = vt.row(i).transpose();
        v += &row * row[0];
    }
    if v.amax() < 1e-12 {
        v = vt.row(null[0]).transpose();
    }
    let scale = v.amax() * if v[0] < 0.0 { -1.0 } else { 1.0 };
    let mut coeffs: Vec<f64> = v.iter().map(|x| x / scale).collect();
    let exact = if p.fract() == 0.0 {
        exact_null_vector(fp, m)
    } else {
        None
    };
    if let Some(e) = &exact {
        coeffs = e.iter().map(rational_to_f64).collect();
    }
    let residual = (&a * DVector::from_column_slice(&coeffs)).amax();
    let mut out = Plateau {
        p,
        m,
        coeffs,
        residual,
        null_dim: null.len(),
        max_abs: 0.0,
        tail_slope: None,
        limit_ratio: (0.0, 0.0),
        ok: false,
        exact,
    };
    let mf = m as f64;
    let mut max_abs: f64 = 0.0;
    for i in 0..=2000 {
        let z = -2.0 * mf + 4.0 * mf * i as f64 / 2000.0;
        max_abs = max_abs.max(out.eval(z).abs());
    }
    for i in 0..=400 {
        let z = 10f64.powf(-6.0 + (8.0 + (64.0 * mf).log10()) * i as f64 / 400.0);
        max_abs = max_abs.max(out.eval(z).abs()).max(out.eval(-z).abs());
    }
    let tail = |sign: f64| {
        let pts: Vec<(f64, f64)> = (0..32)
            .map(|i| {
                let z = 4.0 * mf * 16f64.powf(i as f64 / 31.0);
                (z.ln(), out.eval(sign * z).abs())
            })
            .collect();
        if pts.iter().all(|(_, v)| *v == 0.0) {
            return None;
        }
        let logs: Vec<(f64, f64)> = pts
            .iter()
            .filter(|(_, v)| *v > 0.0)
            .map(|(x, v)| (*x, v.ln()))
            .collect();
        Some(if logs.len() < 2 {
            f64::NEG_INFINITY
        } else {
            fit_slope(&logs)
        })
    };
    let z0 = 1e-4;
    let tails = (tail(1.0), tail(-1.0));
    let tail_slope = match tails {
        (None, None) => None,
        (a, b) => Some((
            a.unwrap_or(f64::NEG_INFINITY),
            b.unwrap_or(f64::NEG_INFINITY),
        )),
    };
    let limit_ratio = (out.eval(z0) / z0.powf(p), out.eval(-z0) / z0.powf(p));
    out.max_abs = max_abs;
    out.tail_slope = tail_slope;
    out.limit_ratio = limit_ratio;
    let a0 = out.coeffs[0];
    out.ok = max_abs.is_finite()
        && out.coeffs.iter().any(|a| *a != 0.0)
        && tail_slope.is_none_or(|(l, r)| l < -1.0 && r < -1.0)
        && (out.limit_ratio.0 - a0).abs() <= 1e-3
        && (out.limit_ratio.1 - a0).abs() <= 1e-3;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_m8_has_seven_equations_and_a_solution() {
        assert_eq!(system(1.0, 8).shape(), (7, 9));
        let f = plateau_function(1.0, 8).unwrap();
        assert!(f.ok, "{f:?}");
        assert!(f.residual < 1e-10);
    }

    #[test]
    fn odd_integer_p_is_supported_on_a_window() {
        // The moment conditions make f a polynomial identity outside [−m, 0].
        let f = plateau_function(3.0, 12).unwrap();
        assert_eq!(f.coeffs[0], 0.0);
        assert!(f.tail_slope.is_none());
        for z in [0.25, 3.0, 100.0, -12.0, -40.0] {
            assert_eq!(f.eval(z), 0.0, "z={z}");
        }
        assert!(f.eval(-5.5) != 0.0);
    }

    #[test]
    fn series_agree_with_direct_sum_where_both_are_accurate() {
        let f = plateau_function(3.0, 12).unwrap();
        for z in [0.45f64, -0.45, 24.5, -24.5] {
            let mut direct = 0.0;
            for (j, a) in f.coeffs.iter().enumerate() {
                direct += a * (z + j as f64).abs().powf(3.0);
            }
            assert!(
                (f.eval(z) - direct).abs() < 1e-6 * (1.0 + direct.abs()),
                "z={z}"
            );
        }
    }

    #[test]
    fn fractional_and_odd_exponents() {
        for (p, m) in [(1.5, 8), (3.0, 12), (5.0, 16)] {
            let f = plateau_function(p, m).unwrap();
            assert!(f.ok, "p={p}: {f:?}");
        }
        assert!(plateau_function(2.0, 10).is_err());
        let g = plateau_function(2.5, 10).unwrap();
        assert!(g.ok && g.tail_slope.is_some(), "{g:?}");
        assert!(plateau_function(3.0, 11).is_err());
    }
}
