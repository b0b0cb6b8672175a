use lpfraisse::equi::{composition_delta, count_equi, hamming, match_permutation, Equisurjection};
use lpfraisse::geometry::{gap_estimate, GapBudget, Subspace, GAP_TOL};
use lpfraisse::lattice::{lattice_round, predicates, MSpaceMap, RoundMode};
use lpfraisse::mazur::{mazur_map, mazur_map_exact, MazurParams, PowerVector};
use lpfraisse::measures::{gp, invert_cdf, levy_prokhorov, p_characteristic, DiscreteMeasure};
use lpfraisse::numeric::rat;
use lpfraisse::ramsey::{
    best_spread_brute, best_spread_dp, rigid_enumerate, RigidSurjection, SpreadVector,
};
use lpfraisse::rng::stream_rng;
use lpfraisse::spaces::{
    amalgamate, hilbert_round, operator_norm_2, random_isometric, Coupling, LinearMap, PIndex,
    VectorP,
};
use nalgebra::DMatrix;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;

fn p_index() -> impl Strategy<Value = PIndex> {
    prop_oneof![
        Just(PIndex::Finite(1.0)),
        Just(PIndex::Finite(1.5)),
        Just(PIndex::Finite(2.0)),
        Just(PIndex::Finite(3.0)),
        Just(PIndex::Infinity),
    ]
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-20i64..=20, 1i64..=12).prop_map(|(n, d)| rat(n, d))
}

/// A surjection onto `s` values: every value once, then arbitrary extras, shuffled.
fn surjection(s: usize, extra: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..s, extra)
        .prop_map(move |e| (0..s).chain(e).collect::<Vec<_>>())
        .prop_shuffle()
}

fn line_measure() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-4i32..=4, 1u32..=8), 1..=5).prop_map(|v| {
        v.into_iter()
            .map(|(z, m)| (z as f64 / 2.0, m as f64 / 8.0))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn lamperti_norm_is_weighted_coefficient_norm(seed in any::<u64>(), d in 1usize..=4, p in p_index(),
                                                   a in proptest::collection::vec(-3.0f64..3.0, 4)) {
        let mut rng = stream_rng(seed, 1);
        let g = random_isometric(&mut rng, p, d).unwrap();
        let x = VectorP::new(a[..d].to_vec(), p).unwrap();
        let image = g.apply(&x).unwrap();
        prop_assert!((image.norm() - x.norm()).abs() <= 1e-9 * x.norm().max(1.0));
    }

    #[test]
    fn amalgam_commutes_exactly(seed in any::<u64>(), d in 1usize..=3, p in p_index(), product in any::<bool>()) {
        prop_assume!(!p.is_infinite());
        let mut rng = stream_rng(seed, 2);
        let gamma = random_isometric(&mut rng, p, d).unwrap();
        let eta = random_isometric(&mut rng, p, d).unwrap();
        let kind = if product { Coupling::Product } else { Coupling::NorthWest };
        let am = amalgamate(&gamma, &eta, kind).unwrap();
        prop_assert_eq!(am.i.compose(&gamma).unwrap(), am.j.compose(&eta).unwrap());
        prop_assert!(am.i.is_isometric() && am.j.is_isometric());
    }

    #[test]
    fn hilbert_rounding_stays_within_perturbation(seed in any::<u64>(), d in 1usize..=4, extra in 0usize..=2,
                                                  delta in 0.0f64..0.2) {
        let n = d + extra;
        let mut rng = stream_rng(seed, 3);
        let g: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5);
        let q = g.qr().q();
        let e: DMatrix<f64> = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5);
        let e = &e * (delta / operator_norm_2(&e).max(1e-300));
        let t = LinearMap::new(&q + &e, PIndex::two(), PIndex::two()).unwrap();
        let w = hilbert_round(&t).unwrap();
        let gram = w.matrix.transpose() * &w.matrix;
        prop_assert!((gram - DMatrix::identity(d, d)).amax() <= 1e-9);
        prop_assert!(operator_norm_2(&(&t.matrix - &w.matrix)) <= delta + 1e-9);
    }

    #[test]
    fn exact_mazur_map_is_an_involution_preserving_norm(x in proptest::collection::vec(small_rational(), 1..=6),
                                                        p in 1u32..=5, q in 1u32..=5) {
        let params = MazurParams::new(PIndex::Finite(p as f64), PIndex::Finite(q as f64)).unwrap();
        let v = PowerVector::from_rationals(&x, p).unwrap();
        let image = mazur_map_exact(&v, &params).unwrap();
        prop_assert_eq!(image.norm_pow(), v.norm_pow());
        prop_assert_eq!(mazur_map_exact(&image, &params.inverse()).unwrap(), v);
    }

    #[test]
    fn mazur_map_preserves_support_and_signs(x in proptest::collection::vec(prop_oneof![Just(0.0), -2.0f64..2.0], 1..=6),
                                             p in p_index(), q in p_index()) {
        prop_assume!(!p.is_infinite() && !q.is_infinite());
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let norm = p.norm(&x);
        let unit = VectorP::new(x.iter().map(|v| v / norm).collect(), p).unwrap();
        let params = MazurParams::new(p, q).unwrap();
        let image = mazur_map(&unit, &params).unwrap();
        for (a, b) in unit.entries.iter().zip(&image.entries) {
            prop_assert_eq!(a.signum() * (*a != 0.0) as i32 as f64, b.signum() * (*b != 0.0) as i32 as f64);
        }
        prop_assert!((image.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn gp_is_a_monotone_step(p in prop_oneof![Just(1u32), Just(3), Just(5), Just(7)], a in -3.0f64..3.0,
                             eps in 0.01f64..2.0, t in proptest::collection::vec(0.0f64..1.0, 2)) {
        let width = eps * p as f64;
        prop_assert!((gp(a - 0.5 - t[0], a, eps, p).unwrap() - 1.0).abs() <= 1e-9);
        prop_assert!(gp(a + width + t[0], a, eps, p).unwrap().abs() <= 1e-9);
        let (lo, hi) = if t[0] <= t[1] { (t[0], t[1]) } else { (t[1], t[0]) };
        let (g_lo, g_hi) = (gp(a + lo * width, a, eps, p).unwrap(), gp(a + hi * width, a, eps, p).unwrap());
        prop_assert!(g_hi <= g_lo + 1e-9);
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&g_lo));
    }

    #[test]
    fn cdf_inversion_is_sandwiched(atoms in line_measure(), p in prop_oneof![Just(1u32), Just(3)],
                                   a in -2.5f64..2.5, eps in 0.05f64..1.0) {
        let mu = DiscreteMeasure::on_line(&atoms).unwrap();
        let chi = |t: f64| p_characteristic(&mu, &[t], p as f64);
        let inv = invert_cdf(&chi, a, eps, p).unwrap();
        let (lo, hi) = (mu.cdf(inv.a_used), mu.cdf(inv.a_used + eps * p as f64));
        prop_assert!(inv.value >= lo - 1e-7 && inv.value <= hi + 1e-7, "{} not in [{lo}, {hi}]", inv.value);
    }

    #[test]
    fn levy_prokhorov_is_a_metric(a in line_measure(), b in line_measure(), c in line_measure()) {
        let norm = |v: Vec<(f64, f64)>| {
            let t: f64 = v.iter().map(|x| x.1).sum();
            DiscreteMeasure::on_line(&v.into_iter().map(|(z, m)| (z, m / t)).collect::<Vec<_>>()).unwrap()
        };
        let (mu, nu, rho) = (norm(a), norm(b), norm(c));
        let d = |x: &DiscreteMeasure, y: &DiscreteMeasure| levy_prokhorov(x, y).unwrap().value;
        prop_assert!(d(&mu, &mu) <= 1e-12);
        prop_assert!((d(&mu, &nu) - d(&nu, &mu)).abs() <= 1e-12);
        prop_assert!(d(&mu, &rho) <= d(&mu, &nu) + d(&nu, &rho) + 1e-12);
    }

    #[test]
    fn matching_meets_half_the_delta_sum(s in 1usize..=4, extra in 0usize..=12, seed in any::<u64>()) {
        let t = s + extra;
        let mut rng = stream_rng(seed, 4);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut m: Vec<usize> = (0..t).map(|i| if i < s { i } else { rng.random_range(0..s) }).collect();
            rand::seq::SliceRandom::shuffle(m.as_mut_slice(), rng);
            Equisurjection::new(m, s).unwrap()
        };
        let (phi, psi) = (draw(&mut rng), draw(&mut rng));
        let pi = match_permutation(&phi, &psi).unwrap();
        let d = hamming(&psi.permute(&pi).unwrap(), &phi).unwrap();
        prop_assert!(d <= (phi.delta().unwrap() + psi.delta().unwrap()) / rat(2, 1));
    }

    #[test]
    fn hamming_composition_is_lipschitz(phi0 in surjection(3, 9), phi1 in surjection(3, 9),
                                        psi0 in surjection(2, 1), psi1 in surjection(2, 1)) {
        let (phi0, phi1) = (Equisurjection::new(phi0, 3).unwrap(), Equisurjection::new(phi1, 3).unwrap());
        let (psi0, psi1) = (Equisurjection::new(psi0, 2).unwrap(), Equisurjection::new(psi1, 2).unwrap());
        let d0 = phi0.delta().unwrap();
        let left = hamming(&psi0.compose(&phi0).unwrap(), &psi1.compose(&phi0).unwrap()).unwrap();
        prop_assert!(left <= (rat(1, 1) + &d0) * hamming(&psi0, &psi1).unwrap());
        let right = hamming(&psi0.compose(&phi0).unwrap(), &psi0.compose(&phi1).unwrap()).unwrap();
        prop_assert!(right <= hamming(&phi0, &phi1).unwrap());
        let composed = psi0.compose(&phi0).unwrap().delta().unwrap();
        prop_assert!(composed <= composition_delta(&d0, &psi0.delta().unwrap()));
    }

    #[test]
    fn equi_fraction_grows_with_delta(n in 1usize..=40, s in 2usize..=3, a in 0i64..=10, b in 0i64..=10) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f = |k: i64| count_equi(n, s, &rat(k, 10)).fraction;
        prop_assert!(f(lo) <= f(hi) * (1.0 + 1e-12));
    }

    #[test]
    fn spread_dp_matches_brute_force(x in proptest::collection::vec(-1.0f64..1.0, 1..=9),
                                     a in proptest::collection::vec(0.05f64..1.0, 1..=3)) {
        prop_assume!(a.len() <= x.len());
        let a = SpreadVector::normalized(a).unwrap();
        let windows: Vec<usize> = (0..x.len()).collect();
        let dp = best_spread_dp(&x, &a, &windows).unwrap();
        let brute = best_spread_brute(&x, &a, &windows).unwrap();
        prop_assert!((dp.error - brute.error).abs() <= 1e-12);
    }

    #[test]
    fn lattice_rounding_is_idempotent_and_exact(seed in any::<u64>(), m in 1usize..=4, extra in 0usize..=6,
                                                delta in 0.001f64..0.1) {
        let n = m + extra;
        let mut rng = stream_rng(seed, 5);
        let owner: Vec<usize> = (0..n).map(|i| if i < m { i } else { rng.random_range(0..m) }).collect();
        let rows: Vec<Vec<f64>> = owner
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                (0..m)
                    .map(|k| {
                        let base = if k != j { 0.0 } else if i < m { 1.0 } else { rng.random_range(0.2..1.0) };
                        base + delta * (rng.random::<f64>() * 0.9)
                    })
                    .collect()
            })
            .collect();
        let g = MSpaceMap::new(rows).unwrap();
        let r = lattice_round(&g, delta, RoundMode::Lattice, seed).unwrap();
        prop_assert!(r.within_bound);
        prop_assert!(r.xi.is_exact(RoundMode::Lattice));
        let again = lattice_round(&r.xi, delta, RoundMode::Lattice, seed).unwrap();
        prop_assert_eq!(&again.xi, &r.xi);
        let pr = predicates(&r.xi, 0.0, seed);
        prop_assert!(pr.disjoint && pr.positive && pr.isometric);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gap_is_symmetric_and_vanishes_on_equal_subspaces(seed in any::<u64>(), p in p_index()) {
        let mut rng = stream_rng(seed, 6);
        let mut basis = || (0..2).map(|_| (0..3).map(|_| rng.random::<f64>() - 0.5).collect()).collect::<Vec<Vec<f64>>>();
        let (bx, by) = (basis(), basis());
        let x = Subspace::new(bx.clone(), p).unwrap();
        let y = Subspace::new(by, p).unwrap();
        let budget = GapBudget { restarts: 2, seed, ..GapBudget::default() };
        let same = gap_estimate(&x, &Subspace::new(bx, p).unwrap(), &budget).unwrap();
        prop_assert!(same.upper <= GAP_TOL + 1e-9);
        let (xy, yx) = (gap_estimate(&x, &y, &budget).unwrap(), gap_estimate(&y, &x, &budget).unwrap());
        prop_assert!(xy.lower <= yx.upper + 1e-9 && yx.lower <= xy.upper + 1e-9);
    }
}

#[test]
fn rigid_surjections_compose_to_rigid_surjections() {
    for n in 1..=6 {
        for r in 1..=n {
            let outer = rigid_enumerate(n, r);
            for q in 1..=r {
                for g in rigid_enumerate(r, q) {
                    for f in &outer {
                        let h: RigidSurjection = g.compose(f).unwrap();
                        assert_eq!(h.map.len(), n);
                    }
                }
            }
        }
    }
}
