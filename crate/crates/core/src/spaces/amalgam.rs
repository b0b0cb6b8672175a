//! Amalgamation of two isometric Lamperti embeddings of the same space.
//!
//! Column `k` of `γ` and of `η` are probability vectors (their weights sum to
//! one). A coupling `π` of the two gives the atoms `(a, b)` of the amalgam;
//! `i` spreads source coordinate `a` over its coupling row and `j` spreads `b`
//! over its coupling column, so that both `i∘γ(u_k)` and `j∘η(u_k)` carry weight
//! `π_ab` at atom `(a, b)` with sign `sign(c_a)·sign(d_b)`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{LampertiEmbedding, LampertiEntry};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    /// Transfer the minimum residual mass while walking both margins in index order.
    #[default]
    NorthWest,
    /// Independent coupling `π_ab = w_a·v_b`.
    Product,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amalgam {
    pub n: usize,
    pub i: LampertiEmbedding,
    pub j: LampertiEmbedding,
}

fn couple(
    rows: &[LampertiEntry],
    cols: &[LampertiEntry],
    kind: Coupling,
) -> Vec<(usize, usize, BigRational)> {
    match kind {
        Coupling::Product => rows
            .iter()
            .enumerate()
            .flat_map(|(r, a)| {
                cols.iter()
                    .enumerate()
                    .map(move |(c, b)| (r, c, &a.wpow * &b.wpow))
            })
            .collect(),
        Coupling::NorthWest => {
            let mut out = Vec::new();
            let (mut r, mut c) = (0, 0);
            let mut row_left = rows[0].wpow.clone();
            let mut col_left = cols[0].wpow.clone();
            loop {
                let t = if row_left < col_left {
                    row_left.clone()
                } else {
                    col_left.clone()
                };
                out.push((r, c, t.clone()));
                row_left -= &t;
                col_left -= &t;
                let row_done = row_left.is_zero();
                let col_done = col_left.is_zero();
                if row_done {
                    r += 1;
                }
                if col_done {
                    c += 1;
                }
                if r == rows.len() || c == cols.len() {
                    break;
                }
                if row_done {
                    row_left = rows[r].wpow.clone();
                }
                if col_done {
                    col_left = cols[c].wpow.clone();
                }
            }
            out
        }
    }
}

/// Builds `(N, i, j)` with `i∘γ = j∘η` as exact identities on the stored data.
pub fn amalgamate(
    gamma: &LampertiEmbedding,
    eta: &LampertiEmbedding,
    kind: Coupling,
) -> Result<Amalgam> {
    if gamma.p() != eta.p() {
        return Err(Error::Invalid(format!(
            "exponent mismatch {} vs {}",
            gamma.p(),
            eta.p()
        )));
    }
    if gamma.p().is_infinite() {
        return Err(Error::Invalid(
            "amalgamation is implemented for finite p".into(),
        ));
    }
    if gamma.d() != eta.d() {
        return Err(Error::Shape(format!(
            "domains differ: {} vs {}",
            gamma.d(),
            eta.d()
        )));
    }
    for (name, t) in [("first", gamma), ("second", eta)] {
        if !t.is_isometric() {
            return Err(Error::NotIsometric(format!(
                "{name} embedding has a column of mass != 1"
            )));
        }
    }
    let p = gamma.p();
    let (m, n) = (gamma.n(), eta.n());
    let mut i_cols: Vec<Vec<LampertiEntry>> = vec![Vec::new(); m];
    let mut j_cols: Vec<Vec<LampertiEntry>> = vec![Vec::new(); n];
    let mut next = 0usize;
    for k in 0..gamma.d() {
        let rows = gamma.column(k);
        let cols = eta.column(k);
        for (r, c, mass) in couple(rows, cols, kind) {
            let (a, b) = (&rows[r], &cols[c]);
            i_cols[a.k].push(LampertiEntry::new(next, b.sign, &mass / &a.wpow));
            j_cols[b.k].push(LampertiEntry::new(next, a.sign, &mass / &b.wpow));
            next += 1;
        }
    }
    for col in i_cols.iter_mut().chain(j_cols.iter_mut()) {
        if col.is_empty() {
            col.push(LampertiEntry::new(next, 1, BigRational::one()));
            next += 1;
        }
    }
    let i = LampertiEmbedding::new(p, next, i_cols)?;
    let j = LampertiEmbedding::new(p, next, j_cols)?;
    Ok(Amalgam { n: next, i, j })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;
    use crate::spaces::PIndex;

    #[test]
    fn split_column_against_identity() {
        let gamma = LampertiEmbedding::new(
            PIndex::one(),
            2,
            vec![vec![
                LampertiEntry::new(0, 1, rat(1, 2)),
                LampertiEntry::new(1, 1, rat(1, 2)),
            ]],
        )
        .unwrap();
        let eta = LampertiEmbedding::identity(1, PIndex::one());
        let am = amalgamate(&gamma, &eta, Coupling::NorthWest).unwrap();
        assert_eq!(am.n, 2);
        assert_eq!(am.i, LampertiEmbedding::identity(2, PIndex::one()));
        assert_eq!(
            am.j.column(0),
            &[
                LampertiEntry::new(0, 1, rat(1, 2)),
                LampertiEntry::new(1, 1, rat(1, 2))
            ]
        );
        assert_eq!(am.i.compose(&gamma).unwrap(), am.j.compose(&eta).unwrap());
    }

    #[test]
    fn northwest_coupling_is_minimal_and_exact() {
        let rows = vec![
            LampertiEntry::new(0, 1, rat(1, 3)),
            LampertiEntry::new(1, -1, rat(2, 3)),
        ];
        let cols = vec![
            LampertiEntry::new(5, 1, rat(1, 2)),
            LampertiEntry::new(6, 1, rat(1, 2)),
        ];
        let pi = couple(&rows, &cols, Coupling::NorthWest);
        assert_eq!(
            pi,
            vec![(0, 0, rat(1, 3)), (1, 0, rat(1, 6)), (1, 1, rat(1, 2))]
        );
        assert_eq!(couple(&rows, &cols, Coupling::Product).len(), 4);
    }

    #[test]
    fn fresh_atoms_for_unused_coordinates() {
        let gamma = LampertiEmbedding::new(
            PIndex::Finite(3.0),
            3,
            vec![vec![LampertiEntry::new(1, -1, rat(1, 1))]],
        )
        .unwrap();
        let eta = LampertiEmbedding::identity(1, PIndex::Finite(3.0));
        let am = amalgamate(&gamma, &eta, Coupling::NorthWest).unwrap();
        assert_eq!(am.n, 3);
        assert!(am.i.is_isometric() && am.j.is_isometric());
        assert_eq!(am.i.compose(&gamma).unwrap(), am.j.compose(&eta).unwrap());
    }

    #[test]
    fn rejects_mismatches() {
        let a = LampertiEmbedding::identity(1, PIndex::one());
        let b = LampertiEmbedding::identity(1, PIndex::Finite(2.0));
        assert!(amalgamate(&a, &b, Coupling::NorthWest).is_err());
        let short = LampertiEmbedding::new(
            PIndex::one(),
            1,
            vec![vec![LampertiEntry::new(0, 1, rat(1, 2))]],
        )
        .unwrap();
        assert!(matches!(
            amalgamate(&short, &a, Coupling::NorthWest),
            Err(Error::NotIsometric(_))
        ));
    }
}
