mod common;

use common::*;
use fpplab::lattice::{LatticeBox, Vertex, WeightConfig, ORIGIN};
use fpplab::passage::{passage_between, t_to_boundary, t_to_boundary_within};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

#[test]
fn dijkstra_matches_path_enumeration_on_b2() {
    let mut r = rng(21);
    for _ in 0..300 {
        let cfg = random_rational_config(LatticeBox::new(2), &mut r);
        assert_eq!(t_to_boundary(&cfg, 2).unwrap(), saw_passage(&cfg, 2));
    }
}

#[test]
fn all_zero_and_single_cheap_edge() {
    let b = LatticeBox::new(4);
    assert!(t_to_boundary(&WeightConfig::constant(b, BigRational::zero()), 4).unwrap().is_zero());
    let mut cfg = WeightConfig::constant(b, q(5, 1));
    cfg.set(&edge(0, 0, fpplab::lattice::Dir::E), q(1, 3)).unwrap();
    // Cheapest route leaves through (1,0) and then pays 3 unit-5 edges.
    assert_eq!(t_to_boundary(&cfg, 4).unwrap(), q(1, 3) + q(15, 1));
}

fn dyadic_config(b: LatticeBox, raw: &[u8]) -> (WeightConfig<f64>, WeightConfig<BigRational>) {
    let exact: Vec<BigRational> = raw.iter().map(|&k| q(k as i64 % 9, 4)).collect();
    let float: Vec<f64> = exact.iter().map(|x| x.to_f64().unwrap()).collect();
    (
        WeightConfig::from_vec(b, float).unwrap(),
        WeightConfig::from_vec(b, exact).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn float_and_exact_agree_on_dyadic_weights(raw in prop::collection::vec(any::<u8>(), 144)) {
        let b = LatticeBox::new(4);
        let (f, e) = dyadic_config(b, &raw);
        for n in 1..=4 {
            let tf = t_to_boundary(&f, n).unwrap();
            let te = t_to_boundary(&e, n).unwrap();
            prop_assert_eq!(tf, te.to_f64().unwrap());
        }
    }

    #[test]
    fn geodesic_realises_the_passage_time(raw in prop::collection::vec(any::<u8>(), 144)) {
        let b = LatticeBox::new(4);
        let (_, e) = dyadic_config(b, &raw);
        let targets = b.boundary();
        let p = passage_between(&e, &[ORIGIN], &targets).unwrap();
        prop_assert_eq!(p.geodesic.start(), ORIGIN);
        prop_assert_eq!(p.geodesic.end().norm(), 4);
        prop_assert_eq!(p.geodesic.weight(&e).unwrap(), p.value.clone());
        prop_assert_eq!(p.value, t_to_boundary(&e, 4).unwrap());
    }

    #[test]
    fn passage_time_is_monotone_in_weights(
        raw in prop::collection::vec(any::<u8>(), 144),
        bumps in prop::collection::vec(0u8..3, 144),
    ) {
        let b = LatticeBox::new(4);
        let (_, low) = dyadic_config(b, &raw);
        let high = WeightConfig::from_vec(
            b,
            low.weights().iter().zip(&bumps).map(|(w, &k)| w + q(k as i64, 2)).collect(),
        ).unwrap();
        prop_assert!(t_to_boundary(&low, 4).unwrap() <= t_to_boundary(&high, 4).unwrap());
        // T(0, ∂B(n)) is nondecreasing in n.
        for n in 1..4 {
            prop_assert!(t_to_boundary(&low, n).unwrap() <= t_to_boundary(&low, n + 1).unwrap());
        }
    }

    #[test]
    fn bounded_search_agrees(raw in prop::collection::vec(any::<u8>(), 144), bound in 0i64..12) {
        let b = LatticeBox::new(4);
        let (_, e) = dyadic_config(b, &raw);
        let t = t_to_boundary(&e, 4).unwrap();
        let bound = q(bound, 4);
        let within = t_to_boundary_within(&e, 4, &bound).unwrap();
        if t <= bound {
            prop_assert_eq!(within, Some(t));
        } else {
            prop_assert_eq!(within, None);
        }
    }
}

#[test]
fn point_to_point_is_symmetric() {
    let mut r = rng(5);
    let b = LatticeBox::new(3);
    for _ in 0..50 {
        let cfg = random_rational_config(b, &mut r);
        let (u, v) = (Vertex::new(-2, 1), Vertex::new(3, -1));
        let there = passage_between(&cfg, &[u], &[v]).unwrap().value;
        let back = passage_between(&cfg, &[v], &[u]).unwrap().value;
        assert_eq!(there, back);
    }
}
