mod common;

use common::*;
use fpplab::circuits::{decompose, detect_ek, has_zero_circuit, innermost_zero_circuit, outermost_zero_circuit};
use fpplab::lattice::{Annulus, LatticeBox, WeightConfig};
use fpplab::passage::distance_to_set;
use fpplab::MonteCarlo;
use rand::Rng;

#[test]
fn extraction_matches_cycle_enumeration() {
    let mut r = rng(31);
    let mut seen = 0;
    for case in 0..150 {
        let ann = Annulus::new(1 + case % 2, 3).unwrap();
        let p_zero = r.random_range(0.6..0.92);
        let cfg = bernoulli_config(LatticeBox::new(3), p_zero, &mut r);
        let cycles = zero_circuits(&cfg, ann);
        assert_eq!(has_zero_circuit(&cfg, ann).unwrap(), !cycles.is_empty());
        let (Some(inner), Some(outer)) = (
            innermost_zero_circuit(&cfg, ann).unwrap(),
            outermost_zero_circuit(&cfg, ann).unwrap(),
        ) else {
            assert!(cycles.is_empty());
            continue;
        };
        seen += 1;
        let mut ie = inner.edges();
        ie.sort();
        let mut oe = outer.edges();
        oe.sort();
        let fi = enclosed_faces(&ie, 3);
        let fo = enclosed_faces(&oe, 3);
        for c in &cycles {
            let fc = enclosed_faces(c, 3);
            assert!(fi.is_subset(&fc) && fc.is_subset(&fo), "case {case}");
        }
        assert!(outer.contains_circuit(&inner));
        assert!(inner.total_weight(&cfg).unwrap() == 0.0);
    }
    assert!(seen > 20, "only {seen} configs had circuits");
}

#[test]
fn full_ring_is_both_extremes() {
    let b = LatticeBox::new(4);
    let mut cfg = WeightConfig::constant(b, 1.0);
    for e in annulus_edges(Annulus::new(2, 4).unwrap()) {
        let (u, v) = e.endpoints();
        if u.norm() == 3 && v.norm() == 3 {
            cfg.set(&e, 0.0).unwrap();
        }
    }
    let ann = Annulus::new(2, 4).unwrap();
    let inner = innermost_zero_circuit(&cfg, ann).unwrap().unwrap();
    let outer = outermost_zero_circuit(&cfg, ann).unwrap().unwrap();
    assert_eq!(inner, outer);
    assert_eq!(inner.edges().len(), 24);
    assert_eq!(inner.min_norm(), 3);
}

#[test]
fn decomposition_on_dense_configs() {
    let b = LatticeBox::new(64);
    let results = MonteCarlo::new(32, 60).map(|rng, _| {
        let w = (0..b.num_edges()).map(|_| if rng.random_bool(0.75) { 0.0 } else { 1.0 }).collect();
        let cfg = WeightConfig::from_vec(b, w).unwrap();
        let d = decompose(&cfg, 64, 2, 0).unwrap();
        for &k in &d.kappas {
            assert!(detect_ek(&cfg, k, 2).unwrap());
        }
        (d.count, d.identity_holds(), d.is_nested())
    });
    assert!(results.iter().all(|r| r.1 && r.2));
    assert!(results.iter().filter(|r| r.0 >= 1).count() > 30);
}

/// With zero rings planted on `∂B(2)` and `∂B(8)` and Bernoulli-half
/// elsewhere, `𝓘 = 1` and `C_1⁺ = ∂B(8)`. Then `T_1⁺ = T(0, C_1⁺)` reads only
/// edges inside the ring and `R_n` only edges outside it, so their empirical
/// correlation should vanish.
#[test]
fn conditional_independence_smoke() {
    let b = LatticeBox::new(16);
    let pairs = MonteCarlo::new(33, 20_000).map(|rng, _| {
        let w: Vec<f64> = (0..b.num_edges()).map(|_| if rng.random_bool(0.5) { 0.0 } else { 1.0 }).collect();
        let mut cfg = WeightConfig::from_vec(b, w).unwrap();
        for i in 0..b.num_edges() {
            let e = b.edge_at(i);
            let (u, v) = e.endpoints();
            if u.norm() == v.norm() && (u.norm() == 2 || u.norm() == 8) {
                cfg.set(&e, 0.0).unwrap();
            }
        }
        let d = decompose(&cfg, 16, 2, 0).unwrap();
        assert_eq!(d.count, 1);
        assert_eq!(d.circuits_plus[0].min_norm(), 8);
        assert!(d.identity_holds());
        let ring: Vec<_> = d.circuits_plus[0].vertices().to_vec();
        let rem = distance_to_set(&cfg, &ring, |v| v.norm() == 16);
        assert_eq!(Some(rem), d.remainder);
        (d.t_plus[0], rem)
    });
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    assert!(sxx > 0.0 && syy > 0.0, "degenerate sample");
    let corr = sxy / (sxx * syy).sqrt();
    assert!(corr.abs() <= 4.0 / n.sqrt(), "correlation {corr} over {n} samples");
}
