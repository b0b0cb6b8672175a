//! Central-cut ellipsoid method for small convex programs.
//!
//! Minimises a convex `f` over `{g ≤ 0}` given a ball known to contain the
//! feasible set. Each evaluation of a subgradient `a` of `f` at the current
//! centre `x` yields the lower bound `f(x) − sqrt(aᵀPa)`, valid because the
//! current ellipsoid `{z : (z−x)ᵀP⁻¹(z−x) ≤ 1}` still contains a minimiser.
//! The returned gap `upper − lower` is therefore a certificate.

/// Value and subgradient of a convex function.
pub type Oracle<'a> = dyn FnMut(&[f64]) -> (f64, Vec<f64>) + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSolution {
    /// Best feasible point found.
    pub x: Vec<f64>,
    /// Objective at `x` (an upper bound on the optimum).
    pub upper: f64,
    /// Certified lower bound on the optimum.
    pub lower: f64,
    pub iterations: usize,
}

impl ConvexSolution {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

pub struct Ellipsoid {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Ellipsoid {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20_000,
        }
    }
}

impl Ellipsoid {
    pub fn minimize(
        &self,
        center: &[f64],
        radius: f64,
        f: &mut Oracle<'_>,
        g: &mut Oracle<'_>,
    ) -> ConvexSolution {
        let n = center.len();
        let mut x = center.to_vec();
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i * n + i] = radius * radius;
        }
        let mut best_x: Option<Vec<f64>> = None;
        let mut upper = f64::INFINITY;
        let mut lower = f64::NEG_INFINITY;
        let mut pa = vec![0.0; n];
        let mut iterations = 0;
        while iterations < self.max_iter {
            iterations += 1;
            let (gv, ga) = g(&x);
            let (fv, fa) = f(&x);
            let quad_f = quad(&p, &fa, &mut pa);
            let s = quad_f.max(0.0).sqrt();
            lower = lower.max(fv - s);
            let feasible = gv <= 0.0;
            if feasible && fv < upper {
                upper = fv;
                best_x = Some(x.clone());
            }
            if upper - lower <= self.tol {
                break;
            }
            let cut = if feasible { fa } else { ga };
            let q = quad(&p, &cut, &mut pa);
            if !(q > 0.0) || !q.is_finite() {
                if feasible {
                    // Zero subgradient: x minimises f globally.
                    lower = lower.max(fv);
                }
                break;
            }
            let sq = q.sqrt();
            let b: Vec<f64> = pa.iter().map(|v| v / sq).collect();
            if n == 1 {
                x[0] -= b[0] / 2.0;
                p[0] /= 4.0;
                continue;
            }
            let nf = n as f64;
            for i in 0..n {
                x[i] -= b[i] / (nf + 1.0);
            }
            let scale = nf * nf / (nf * nf - 1.0);
            let shrink = 2.0 / (nf + 1.0);
            for i in 0..n {
                for j in 0..n {
                    p[i * n + j] = scale * (p[i * n + j] - shrink * b[i] * b[j]);
                }
            }
            // Keep P symmetric against round-off.
            for i in 0..n {
                for j in (i + 1)..n {
                    let m = 0.5 * (p[i * n + j] + p[j * n + i]);
                    p[i * n + j] = m;
                    p[j * n + i] = m;
                }
            }
        }
        let x = best_x.unwrap_or_else(|| center.to_vec());
        ConvexSolution {
            x,
            upper,
            lower: lower.min(upper),
            iterations,
        }
    }
}

fn quad(p: &[f64], a: &[f64], pa: &mut [f64]) -> f64 {
    let n = a.len();
    let mut q = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += p[i * n + j] * a[j];
        }
        pa[i] = s;
        q += a[i] * s;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_a_shifted_quadratic_on_a_disc() {
        // min (x-2)^2 + y^2 subject to x^2 + y^2 <= 1: optimum 1 at (1, 0).
        let mut f = |x: &[f64]| {
            (
                (x[0] - 2.0).powi(2) + x[1] * x[1],
                vec![2.0 * (x[0] - 2.0), 2.0 * x[1]],
            )
        };
        let mut g = |x: &[f64]| {
            (
                x[0] * x[0] + x[1] * x[1] - 1.0,
                vec![2.0 * x[0], 2.0 * x[1]],
            )
        };
        let sol = Ellipsoid::default().minimize(&[0.0, 0.0], 1.5, &mut f, &mut g);
        assert!(sol.gap() <= 1e-9, "{sol:?}");
        assert!((sol.upper - 1.0).abs() < 1e-7 && sol.lower <= 1.0 + 1e-12);
    }

    #[test]
    fn one_dimensional_nonsmooth() {
        // min |x - 0.3| + 0.5 over [-1, 1].
        let mut f = |x: &[f64]| ((x[0] - 0.3).abs() + 0.5, vec![(x[0] - 0.3).signum()]);
        let mut g = |x: &[f64]| (x[0].abs() - 1.0, vec![x[0].signum()]);
        let sol = Ellipsoid::default().minimize(&[0.0], 2.0, &mut f, &mut g);
        assert!((sol.upper - 0.5).abs() < 1e-8 && sol.lower <= 0.5 + 1e-12);
    }
}
