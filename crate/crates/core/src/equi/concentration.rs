//! Concentration functions of the Hamming cube `({0..s}^n, d_H, counting)`.
//!
//! `α(θ, ε) = 1 − min{μ(A_ε) : μ(A) ≥ θ}` with closed fattenings and `ε`
//! floored to `t/n`. Everything reduces to the vertex-isoperimetric profile
//! `g(a, t) = min{#N_t(A) : #A = a}`, which is nondecreasing in `a`.
//!
//! Exact profiles:
//! * `n ≤ 2`: closed forms (for `n = 2`, `#N_1(A) = s² − (s−r)(s−c)` where
//!   `A` meets `r` rows and `c` columns);
//! * `s = 2`: initial segments of the simplicial order (Harper);
//! * `s^n ≤ 128` otherwise: enumeration of down-sets of the product order,
//!   which suffices because coordinate compressions do not enlarge `N_t`.
//!
//! Elsewhere the value is bracketed: below by an explicit set, above by the
//! bounded-differences inequality applied to `x ↦ d_H(x, A)`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HammingCube {
    pub n: usize,
    pub s: usize,
    pub size: usize,
}

impl HammingCube {
    pub fn new(n: usize, s: usize) -> Option<Self> {
        if n == 0 || s < 2 {
            return None;
        }
        let size = s.checked_pow(n as u32)?;
        Some(Self { n, s, size })
    }

    pub fn digits(&self, mut v: usize) -> Vec<usize> {
        (0..self.n)
            .map(|_| {
                let d = v % self.s;
                v /= self.s;
                d
            })
            .collect()
    }

    pub fn neighbours(&self, v: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut w = 1;
        for _ in 0..self.n {
            let d = (v / w) % self.s;
            let base = v - d * w;
            for e in 0..self.s {
                if e != d {
                    out.push(base + e * w);
                }
            }
            w *= self.s;
        }
    }
}

/// `#N_t(A)` for `t = 0..=n`, by breadth-first search from `A`.
pub fn fattening_profile(cube: &HammingCube, set: &[bool]) -> Vec<usize> {
    let mut dist = vec![u8::MAX; cube.size];
    let mut frontier: Vec<usize> = (0..cube.size).filter(|&v| set[v]).collect();
    frontier.iter().for_each(|&v| dist[v] = 0);
    let mut out = vec![frontier.len()];
    let mut nb = Vec::new();
    for t in 1..=cube.n {
        let mut next = Vec::new();
        for &v in &frontier {
            cube.neighbours(v, &mut nb);
            for &u in &nb {
                if dist[u] == u8::MAX {
                    dist[u] = t as u8;
                    next.push(u);
                }
            }
        }
        out.push(out[t - 1] + next.len());
        frontier = next;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcentrationMode {
    ClosedForm,
    Harper,
    DownSets,
    Exhaustive,
    Bracket,
}

/// Isoperimetric profile of one cube, exact where a method is available.
#[derive(Clone, Debug)]
pub struct IsoperimetricTable {
    pub cube: HammingCube,
    pub mode: ConcentrationMode,
    /// `table[a][t] = g(a, t)` for enumerated modes.
    table: Option<Vec<Vec<usize>>>,
    harper_order: Option<Vec<usize>>,
}

/// Largest cube searched explicitly (for Harper segments and bracket witnesses).
pub const MAX_EXPLICIT: usize = 1 << 22;
/// Down-sets enumerated before falling back to a bracket.
pub const DOWNSET_BUDGET: usize = 2_000_000;

fn masks_profile(nb: &[u128], n: usize, set: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(n + 1);
    let mut cur = set;
    out.push(cur.count_ones() as usize);
    for _ in 0..n {
        let mut next = cur;
        let mut bits = cur;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            next |= nb[v];
            bits &= bits - 1;
        }
        cur = next;
        out.push(cur.count_ones() as usize);
    }
    out
}

fn neighbour_masks(cube: &HammingCube) -> Vec<u128> {
    let mut nb = Vec::new();
    (0..cube.size)
        .map(|v| {
            cube.neighbours(v, &mut nb);
            nb.iter().fold(1u128 << v, |m, &u| m | (1u128 << u))
        })
        .collect()
}

fn record(table: &mut [Vec<usize>], profile: &[usize]) {
    let row = &mut table[profile[0]];
    for (b, p) in row.iter_mut().zip(profile) {
        *b = (*b).min(*p);
    }
}

/// `g(a, t)` over every subset; only for cubes with at most 20 points.
pub fn exhaustive_table(cube: &HammingCube) -> Option<Vec<Vec<usize>>> {
    if cube.size > 20 {
        return None;
    }
    let nb = neighbour_masks(cube);
    let mut table = vec![vec![usize::MAX; cube.n + 1]; cube.size + 1];
    for set in 0u128..(1u128 << cube.size) {
        record(&mut table, &masks_profile(&nb, cube.n, set));
    }
    Some(table)
}

/// `g(a, t)` over down-sets of the product order, or `None` past the budget.
pub fn downset_table(cube: &HammingCube, budget: usize) -> Option<Vec<Vec<usize>>> {
    if cube.size > 128 {
        return None;
    }
    let nb = neighbour_masks(cube);
    // Lower covers: decrease one nonzero digit by one.
    let covers: Vec<u128> = (0..cube.size)
        .map(|v| {
            let mut m = 0u128;
            let mut w = 1;
            for _ in 0..cube.n {
                if (v / w) % cube.s > 0 {
                    m |= 1u128 << (v - w);
                }
                w *= cube.s;
            }
            m
        })
        .collect();
    let mut table = vec![vec![usize::MAX; cube.n + 1]; cube.size + 1];
    let mut seen = 0usize;
    // Vertex indices increase along the product order, so deciding them in
    // index order only ever needs the lower covers already decided.
    let mut stack: Vec<(usize, u128)> = vec![(0, 0)];
    while let Some((v, set)) = stack.pop() {
        if v == cube.size {
            seen += 1;
            if seen > budget {
                return None;
            }
            record(&mut table, &masks_profile(&nb, cube.n, set));
            continue;
        }
        stack.push((v + 1, set));
        if covers[v] & !set == 0 {
            stack.push((v + 1, set | (1u128 << v)));
        }
    }
    Some(table)
}

/// The simplicial order on `{0,1}^n`: by weight, then lexicographically with
/// the smallest differing coordinate present in the earlier element.
fn harper_order(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..1usize << n).collect();
    v.sort_by(|x, y| {
        x.count_ones()
            .cmp(&y.count_ones())
            .then(y.reverse_bits().cmp(&x.reverse_bits()))
    });
    v
}

impl IsoperimetricTable {
    pub fn build(n: usize, s: usize, downset_budget: usize) -> Option<Self> {
        let cube = HammingCube::new(n, s)?;
        let mut out = Self {
            cube: cube.clone(),
            mode: ConcentrationMode::Bracket,
            table: None,
            harper_order: None,
        };
        if n <= 2 {
            out.mode = ConcentrationMode::ClosedForm;
        } else if s == 2 && cube.size <= MAX_EXPLICIT {
            out.mode = ConcentrationMode::Harper;
            out.harper_order = Some(harper_order(n));
        } else if let Some(t) = downset_table(&cube, downset_budget) {
            out.mode = ConcentrationMode::DownSets;
            out.table = Some(t);
        }
        Some(out)
    }

    pub fn with_exhaustive(n: usize, s: usize) -> Option<Self> {
        let cube = HammingCube::new(n, s)?;
        let table = exhaustive_table(&cube)?;
        Some(Self {
            cube,
            mode: ConcentrationMode::Exhaustive,
            table: Some(table),
            harper_order: None,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.mode != ConcentrationMode::Bracket
    }

    /// Exact `g(a, t)`, when the mode provides one.
    pub fn exact_min(&self, a: usize, t: usize) -> Option<usize> {
        let (n, s, size) = (self.cube.n, self.cube.s, self.cube.size);
        let t = t.min(n);
        if a == 0 {
            return Some(0);
        }
        if a > size {
            return None;
        }
        if t == 0 {
            return Some(a);
        }
        if t == n {
            return Some(size);
        }
        match self.mode {
            ConcentrationMode::ClosedForm => {
                // n = 2 and t = 1
                (1..=s)
                    .filter_map(|r| {
                        let c = a.div_ceil(r);
                        (c <= s).then(|| size - (s - r) * (s - c))
                    })
                    .min()
            }
            ConcentrationMode::Harper => {
                let order = self.harper_order.as_ref()?;
                let mut set = vec![false; size];
                order[..a].iter().for_each(|&v| set[v] = true);
                Some(fattening_profile(&self.cube, &set)[t])
            }
            ConcentrationMode::DownSets | ConcentrationMode::Exhaustive => {
                let table = self.table.as_ref()?;
                Some((a..=size).map(|b| table[b][t]).min().unwrap_or(size))
            }
            ConcentrationMode::Bracket => None,
        }
    }

    /// A set of size `a` close to a Hamming ball around `0`.
    fn witness_profile(&self, a: usize) -> Option<Vec<usize>> {
        if self.cube.size > MAX_EXPLICIT {
            return None;
        }
        let mut order: Vec<usize> = (0..self.cube.size).collect();
        order.sort_by_key(|&v| (self.cube.digits(v).iter().filter(|d| **d != 0).count(), v));
        let mut set = vec![false; self.cube.size];
        order[..a].iter().for_each(|&v| set[v] = true);
        Some(fattening_profile(&self.cube, &set))
    }

    /// `α` for sets of at least `a` points, fattened by `t/n`.
    pub fn alpha(&self, a: usize, t: usize) -> Concentration {
        let (n, size) = (self.cube.n, self.cube.size);
        let a = a.clamp(1, size);
        let t = t.min(n);
        let nf = size as f64;
        if let Some(g) = self.exact_min(a, t) {
            let num = size - g;
            return Concentration {
                n,
                s: self.cube.s,
                a,
                t,
                lower: num as f64 / nf,
                upper: num as f64 / nf,
                exact_numerator: Some(num),
                mode: self.mode,
            };
        }
        let lower = self
            .witness_profile(a)
            .map_or(0.0, |p| (size - p[t]) as f64 / nf);
        Concentration {
            n,
            s: self.cube.s,
            a,
            t,
            lower,
            upper: analytic_upper(n, size, a, t),
            exact_numerator: None,
            mode: ConcentrationMode::Bracket,
        }
    }
}

/// `min(1 − a/N, exp(−2n((t+1)/n − c)²))` with `c = √(ln(N/a)/(2n))`, rounded outward.
pub fn analytic_upper(n: usize, size: usize, a: usize, t: usize) -> f64 {
    if t >= n {
        return 0.0;
    }
    let trivial = (size - a) as f64 / size as f64;
    let nf = n as f64;
    let c = ((size as f64 / a as f64).ln() / (2.0 * nf)).sqrt();
    let x = (t + 1) as f64 / nf - c;
    let mcd = if x > 0.0 {
        (-2.0 * nf * x * x).exp() * (1.0 + 1e-12)
    } else {
        1.0
    };
    trivial.min(mcd)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    pub n: usize,
    pub s: usize,
    /// Minimal set size `⌈θ·s^n⌉`.
    pub a: usize,
    /// Fattening radius in coordinates.
    pub t: usize,
    pub lower: f64,
    pub upper: f64,
    /// `s^n·α` when exact.
    pub exact_numerator: Option<usize>,
    pub mode: ConcentrationMode,
}

impl Concentration {
    pub fn exact(&self) -> bool {
        self.exact_numerator.is_some()
    }
}

/// `α(θ, ε)` on `{0..s}^n`.
pub fn concentration(n: usize, s: usize, theta: f64, eps: f64) -> Option<Concentration> {
    let table = IsoperimetricTable::build(n, s, DOWNSET_BUDGET)?;
    let a = ((theta * table.cube.size as f64) - 1e-9).ceil().max(1.0) as usize;
    let t = ((eps * n as f64) + 1e-9).floor().max(0.0) as usize;
    Some(table.alpha(a, t))
}

/// `exp(−ε²n/8)`.
pub fn eq21_bound(n: usize, eps: f64) -> f64 {
    (-eps * eps * n as f64 / 8.0).exp()
}

/// One replay of `α(δ, ρ + ε) ≤ α(ε)` for `α(ρ) < δ`, in integer counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub t_rho: usize,
    pub t_eps: usize,
    /// `s^n·α(ρ)`.
    pub alpha_rho: usize,
    /// `δ = a/s^n` with `a = s^n·α(ρ) + 1`.
    pub a: usize,
    /// `s^n·α(δ, ρ + ε)` and `s^n·α(ε)`.
    pub lhs: usize,
    pub rhs: usize,
    pub holds: bool,
}

pub fn shift_rule_check(
    table: &IsoperimetricTable,
    t_rho: usize,
    t_eps: usize,
) -> Option<ShiftCheck> {
    let size = table.cube.size;
    let half = size.div_ceil(2);
    let alpha_rho = size - table.exact_min(half, t_rho)?;
    let a = alpha_rho + 1;
    if a > size {
        return None;
    }
    let lhs = size - table.exact_min(a, t_rho + t_eps)?;
    let rhs = size - table.exact_min(half, t_eps)?;
    Some(ShiftCheck {
        t_rho,
        t_eps,
        alpha_rho,
        a,
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_example() {
        let c = concentration(2, 2, 0.5, 0.5).unwrap();
        assert!(c.exact() && c.upper == 0.0);
    }

    #[test]
    fn exact_modes_agree_with_exhaustive() {
        for (n, s) in [(1, 5), (2, 2), (2, 3), (2, 4), (3, 2), (4, 2)] {
            let ex = IsoperimetricTable::with_exhaustive(n, s).unwrap();
            let fast = IsoperimetricTable::build(n, s, DOWNSET_BUDGET).unwrap();
            let size = ex.cube.size;
            for a in 1..=size {
                for t in 0..=n {
                    assert_eq!(
                        ex.exact_min(a, t),
                        fast.exact_min(a, t),
                        "n={n} s={s} a={a} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn downsets_agree_with_exhaustive() {
        for (n, s) in [(2, 3), (2, 4), (3, 2), (4, 2)] {
            let cube = HammingCube::new(n, s).unwrap();
            let ex = exhaustive_table(&cube).unwrap();
            let ds = downset_table(&cube, DOWNSET_BUDGET).unwrap();
            for a in 1..=cube.size {
                for t in 0..=n {
                    let m1 = (a..=cube.size).map(|b| ex[b][t]).min();
                    let m2 = (a..=cube.size).map(|b| ds[b][t]).min();
                    assert_eq!(m1, m2, "n={n} s={s} a={a} t={t}");
                }
            }
        }
    }

    #[test]
    fn harper_agrees_with_downsets() {
        for n in [3, 5] {
            let cube = HammingCube::new(n, 2).unwrap();
            let ds = downset_table(&cube, DOWNSET_BUDGET).unwrap();
            let h = IsoperimetricTable::build(n, 2, 0).unwrap();
            assert_eq!(h.mode, ConcentrationMode::Harper);
            for a in 1..=cube.size {
                for t in 0..=n {
                    let m = (a..=cube.size).map(|b| ds[b][t]).min();
                    assert_eq!(h.exact_min(a, t), m, "n={n} a={a} t={t}");
                }
            }
        }
    }

    #[test]
    fn brackets_contain_exact_values() {
        for (n, s) in [(3, 3), (4, 2), (3, 4)] {
            let exact = IsoperimetricTable::build(n, s, DOWNSET_BUDGET).unwrap();
            assert!(exact.is_exact());
            let mut br = exact.clone();
            br.mode = ConcentrationMode::Bracket;
            let half = exact.cube.size.div_ceil(2);
            for t in 0..=n {
                let e = exact.alpha(half, t);
                let b = br.alpha(half, t);
                assert!(
                    b.lower <= e.upper + 1e-15 && e.upper <= b.upper + 1e-15,
                    "{e:?} {b:?}"
                );
            }
        }
    }

    #[test]
    fn shift_rule_on_small_cubes() {
        for (n, s) in [(3, 3), (5, 2), (2, 5)] {
            let t = IsoperimetricTable::build(n, s, DOWNSET_BUDGET).unwrap();
            for tr in 0..=n {
                for te in 0..=n - tr {
                    if let Some(c) = shift_rule_check(&t, tr, te) {
                        assert!(c.holds, "{c:?}");
                    }
                }
            }
        }
    }
}
