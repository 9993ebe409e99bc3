//! Zero-weight circuits around the origin.
//!
//! Existence and extraction use planar duality. Faces of `B(k2)` plus one
//! node for the unbounded face form the dual graph; a dual step is blocked
//! exactly when the primal edge it crosses is a zero-weight edge of the
//! annulus. A zero circuit surrounding the origin exists iff the face at the
//! origin cannot reach the unbounded face.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::exec::MonteCarlo;
use crate::lattice::{Annulus, Circuit, Edge, Face, LatticeBox, Vertex, Weight, WeightConfig};
use crate::passage::{distance_to_set, t_between_circuits};
use crate::stats::EstimateReport;
use crate::weights::WeightDistribution;

/// The face with lower-left corner at the origin.
const HOLE: Face = Face::new(0, 0);

struct DualGrid<'a, W> {
    config: &'a WeightConfig<W>,
    ann: Annulus,
    faces: LatticeBox,
}

impl<'a, W: Weight> DualGrid<'a, W> {
    fn new(config: &'a WeightConfig<W>, ann: Annulus) -> Result<Self> {
        if ann.k2 > config.region().n {
            return Err(FppError::OutOfRegion(format!(
                "Ann({}, {}) exceeds region B({})",
                ann.k1,
                ann.k2,
                config.region().n
            )));
        }
        Ok(DualGrid {
            config,
            ann,
            faces: LatticeBox::new(ann.k2),
        })
    }

    fn outer(&self) -> usize {
        self.faces.num_faces()
    }

    fn len(&self) -> usize {
        self.faces.num_faces() + 1
    }

    fn hole(&self) -> usize {
        self.faces.face_index(&HOLE).expect("k2 >= 1")
    }

    fn blocks(&self, e: &Edge) -> bool {
        self.ann.contains_edge(e) && self.config.get(e).expect("inside region").is_zero()
    }

    /// Dual neighbours of node `i` as `(node, primal edge crossed)`.
    fn neighbors(&self, i: usize, out: &mut Vec<(usize, Edge)>) {
        out.clear();
        if i == self.outer() {
            let k = self.faces.n as i32;
            for t in -k..k {
                let ring = [
                    (Face::new(t, -k), 0),
                    (Face::new(k - 1, t), 1),
                    (Face::new(t, k - 1), 2),
                    (Face::new(-k, t), 3),
                ];
                for (f, side) in ring {
                    out.push((self.faces.face_index(&f).expect("inside"), f.sides()[side]));
                }
            }
            return;
        }
        let f = self.faces.face_at(i);
        for (g, e) in f.across().into_iter().zip(f.sides()) {
            let j = self.faces.face_index(&g).unwrap_or(self.outer());
            out.push((j, e));
        }
    }

    /// Nodes reachable from `start`; `respect` selects whether blocked edges stop the search,
    /// and nodes marked in `avoid` are never entered.
    fn flood(&self, start: usize, respect: bool, avoid: Option<&[bool]>) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if avoid.is_some_and(|a| a[start]) {
            return seen;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut nbrs = Vec::with_capacity(4);
        while let Some(i) = queue.pop_front() {
            self.neighbors(i, &mut nbrs);
            for &(j, e) in &nbrs {
                if seen[j] || avoid.is_some_and(|a| a[j]) || (respect && self.blocks(&e)) {
                    continue;
                }
                seen[j] = true;
                queue.push_back(j);
            }
        }
        seen
    }

    /// Counterclockwise boundary of a simply connected face set without pinch points.
    fn trace(&self, region: &[bool]) -> Circuit {
        let inside = |f: &Face| self.faces.face_index(f).is_some_and(|i| region[i]);
        let mut next: std::collections::HashMap<Vertex, Vertex> = std::collections::HashMap::new();
        for i in 0..self.faces.num_faces() {
            if !region[i] {
                continue;
            }
            let f = self.faces.face_at(i);
            let (x, y) = (f.x, f.y);
            let corners = [
                Vertex::new(x, y),
                Vertex::new(x + 1, y),
                Vertex::new(x + 1, y + 1),
                Vertex::new(x, y + 1),
            ];
            for (k, g) in f.across().iter().enumerate() {
                if !inside(g) {
                    let prev = next.insert(corners[k], corners[(k + 1) % 4]);
                    debug_assert!(prev.is_none(), "pinch point at {}", corners[k]);
                }
            }
        }
        let start = *next.keys().min().expect("nonempty boundary");
        let mut walk = vec![start];
        let mut cur = start;
        loop {
            cur = next[&cur];
            walk.push(cur);
            if cur == start {
                break;
            }
        }
        debug_assert_eq!(walk.len() - 1, next.len(), "boundary is a single loop");
        Circuit::closed(walk, Some(self.ann)).expect("interface of a simply connected region is a circuit")
    }
}

/// True iff the zero-weight edges of the annulus contain a circuit around the origin.
pub fn has_zero_circuit<W: Weight>(config: &WeightConfig<W>, ann: Annulus) -> Result<bool> {
    let g = DualGrid::new(config, ann)?;
    Ok(!g.flood(g.hole(), true, None)[g.outer()])
}

/// The zero circuit enclosing the smallest region, if any.
pub fn innermost_zero_circuit<W: Weight>(config: &WeightConfig<W>, ann: Annulus) -> Result<Option<Circuit>> {
    let g = DualGrid::new(config, ann)?;
    let from_hole = g.flood(g.hole(), true, None);
    if from_hole[g.outer()] {
        return Ok(None);
    }
    let exterior = g.flood(g.outer(), false, Some(&from_hole));
    let region: Vec<bool> = exterior.iter().map(|&e| !e).collect();
    Ok(Some(g.trace(&region)))
}

/// The zero circuit with the smallest unbounded complement, if any.
pub fn outermost_zero_circuit<W: Weight>(config: &WeightConfig<W>, ann: Annulus) -> Result<Option<Circuit>> {
    let g = DualGrid::new(config, ann)?;
    let from_outer = g.flood(g.outer(), true, None);
    if from_outer[g.hole()] {
        return Ok(None);
    }
    let interior = g.flood(g.hole(), false, Some(&from_outer));
    Ok(Some(g.trace(&interior)))
}

fn pow(r: u32, e: u32) -> Option<u32> {
    r.checked_pow(e)
}

fn ek_annuli(k: u32, r: u32) -> Result<(Annulus, Annulus)> {
    let p = |e: u32| pow(r, e).ok_or_else(|| FppError::invalid(format!("R^{e} overflows")));
    Ok((
        Annulus::new(p(3 * k)?, p(3 * k + 1)?)?,
        Annulus::new(p(3 * k + 2)?, p(3 * k + 3)?)?,
    ))
}

/// `E_k`: zero circuits around the origin in both `Ann(R^{3k}, R^{3k+1})` and
/// `Ann(R^{3k+2}, R^{3k+3})`.
pub fn detect_ek<W: Weight>(config: &WeightConfig<W>, k: u32, r: u32) -> Result<bool> {
    if r < 2 {
        return Err(FppError::invalid("R must be at least 2"));
    }
    let (a, b) = ek_annuli(k, r)?;
    if b.k2 > config.region().n {
        return Err(FppError::OutOfRegion(format!(
            "R^(3k+3) = {} exceeds region B({})",
            b.k2,
            config.region().n
        )));
    }
    Ok(has_zero_circuit(config, a)? && has_zero_circuit(config, b)?)
}

/// The circuit decomposition of `T(0, ∂B(n))` at scale `R` from base index `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<W> {
    pub r: u32,
    pub k_base: u32,
    pub n: u32,
    /// Indices `κ_1 < κ_2 < …` of the occurring `E_k` with `R^{3κ+3} ≤ n`.
    pub kappas: Vec<u32>,
    pub circuits_minus: Vec<Circuit>,
    pub circuits_plus: Vec<Circuit>,
    /// `𝓘`, the number of usable indices.
    pub count: usize,
    pub t_minus: Vec<W>,
    pub t_plus: Vec<W>,
    /// `R_n = T(C_𝓘⁺, ∂B(n))`, absent when `𝓘 = 0`.
    pub remainder: Option<W>,
    /// `T(0, ∂B(n))`, computed directly.
    pub total: W,
}

impl<W: Weight> Decomposition<W> {
    /// `T_1⁻ + T_1⁺ + … + T_𝓘⁻ + T_𝓘⁺ + R_n`, or `None` when `𝓘 = 0`.
    pub fn sum(&self) -> Option<W> {
        let rem = self.remainder.as_ref()?;
        let mut s = W::zero();
        for (m, p) in self.t_minus.iter().zip(&self.t_plus) {
            s = s.add(m).add(p);
        }
        Some(s.add(rem))
    }

    /// Exact equality of the sum with the direct passage time; vacuous when `𝓘 = 0`.
    pub fn identity_holds(&self) -> bool {
        match self.sum() {
            Some(s) => s.total_cmp(&self.total).is_eq(),
            None => true,
        }
    }

    /// Every circuit lies on or inside the next one in the chain
    /// `C_1⁻ ⊂ C_1⁺ ⊂ C_2⁻ ⊂ …`.
    pub fn is_nested(&self) -> bool {
        let chain: Vec<&Circuit> = self
            .circuits_minus
            .iter()
            .zip(&self.circuits_plus)
            .flat_map(|(a, b)| [a, b])
            .collect();
        chain.windows(2).all(|w| w[1].contains_circuit(w[0]))
    }
}

pub fn decompose<W: Weight>(config: &WeightConfig<W>, n: u32, r: u32, k_base: u32) -> Result<Decomposition<W>> {
    if r < 2 {
        return Err(FppError::invalid("R must be at least 2"));
    }
    if n > config.region().n {
        return Err(FppError::OutOfRegion(format!("n = {n} exceeds region B({})", config.region().n)));
    }
    let fits = |k: u32| pow(r, 3 * k + 3).is_some_and(|top| top <= n);
    if !fits(k_base) {
        return Err(FppError::invalid(format!("R^(3K+3) exceeds n = {n}")));
    }
    let mut kappas = Vec::new();
    let mut k = k_base;
    while fits(k) {
        if detect_ek(config, k, r)? {
            kappas.push(k);
        }
        k += 1;
    }
    let mut circuits_minus = Vec::new();
    let mut circuits_plus = Vec::new();
    for (i, &kappa) in kappas.iter().enumerate() {
        let (inner, outer) = ek_annuli(kappa, r)?;
        circuits_minus.push(if i == 0 {
            Circuit::Trivial
        } else {
            innermost_zero_circuit(config, inner)?.expect("E_k occurred")
        });
        circuits_plus.push(outermost_zero_circuit(config, outer)?.expect("E_k occurred"));
    }
    let mut t_minus = Vec::new();
    let mut t_plus = Vec::new();
    for i in 0..kappas.len() {
        t_minus.push(if i == 0 {
            W::zero()
        } else {
            t_between_circuits(config, &circuits_plus[i - 1], &circuits_minus[i])?
        });
        t_plus.push(t_between_circuits(config, &circuits_minus[i], &circuits_plus[i])?);
    }
    let remainder = circuits_plus
        .last()
        .map(|c| distance_to_set(config, c.vertices(), |v| v.norm() == n));
    let total = distance_to_set(config, &[crate::lattice::ORIGIN], |v| v.norm() == n);
    Ok(Decomposition {
        r,
        k_base,
        n,
        count: kappas.len(),
        kappas,
        circuits_minus,
        circuits_plus,
        t_minus,
        t_plus,
        remainder,
        total,
    })
}

/// Monte Carlo estimate of `P(F(ℓ, ratio·ℓ))`, the probability of a zero circuit
/// around the origin in `Ann(ℓ, ratio·ℓ)`.
pub fn estimate_f_prob(dist: &WeightDistribution, ell: u32, ratio: u32, mc: &MonteCarlo) -> Result<EstimateReport> {
    let ann = Annulus::new(ell, ell.checked_mul(ratio).ok_or_else(|| FppError::invalid("ℓ·ratio overflows"))?)?;
    let region = LatticeBox::new(ann.k2);
    let sampler = dist.sampler();
    let hits = mc.count(|rng, _| {
        let (cfg, _) = sampler.sample_config(region, rng);
        has_zero_circuit(&cfg, ann).expect("annulus fits")
    });
    Ok(EstimateReport::from_counts(
        "F_prob",
        serde_json::json!({ "ell": ell, "ratio": ratio }),
        hits,
        mc.samples,
        mc.seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(r: i32) -> Vec<Vertex> {
        let mut v = Vec::new();
        for x in -r..r {
            v.push(Vertex::new(x, -r));
        }
        for y in -r..r {
            v.push(Vertex::new(r, y));
        }
        for x in (-r + 1..=r).rev() {
            v.push(Vertex::new(x, r));
        }
        for y in (-r + 1..=r).rev() {
            v.push(Vertex::new(-r, y));
        }
        v.push(Vertex::new(-r, -r));
        v
    }

    fn zero_on(n: u32, circuits: &[i32]) -> WeightConfig<f64> {
        let mut cfg = WeightConfig::constant(LatticeBox::new(n), 1.0);
        for &r in circuits {
            for w in square(r).windows(2) {
                cfg.set(&Edge::new(w[0], w[1]).unwrap(), 0.0).unwrap();
            }
        }
        cfg
    }

    #[test]
    fn trivial_configs() {
        let ann = Annulus::new(2, 5).unwrap();
        let zeros = WeightConfig::constant(LatticeBox::new(6), 0.0);
        let ones = WeightConfig::constant(LatticeBox::new(6), 1.0);
        assert!(has_zero_circuit(&zeros, ann).unwrap());
        assert!(!has_zero_circuit(&ones, ann).unwrap());
        assert!(innermost_zero_circuit(&ones, ann).unwrap().is_none());
        assert!(outermost_zero_circuit(&ones, ann).unwrap().is_none());
        // All-zero: innermost hugs B(k1), outermost is ∂B(k2).
        let inner = innermost_zero_circuit(&zeros, ann).unwrap().unwrap();
        let outer = outermost_zero_circuit(&zeros, ann).unwrap().unwrap();
        assert_eq!(outer.vertices().len(), 8 * 5);
        assert!(outer.vertices().iter().all(|v| v.norm() == 5));
        assert!(inner.vertices().iter().all(|v| v.norm() == 3 || v.norm() == 2));
    }

    #[test]
    fn single_square_circuit() {
        let ann = Annulus::new(1, 4).unwrap();
        let mut cfg = zero_on(4, &[3]);
        assert!(has_zero_circuit(&cfg, ann).unwrap());
        let inner = innermost_zero_circuit(&cfg, ann).unwrap().unwrap();
        let outer = outermost_zero_circuit(&cfg, ann).unwrap().unwrap();
        assert_eq!(inner, outer);
        assert_eq!(inner, Circuit::closed(square(3), Some(ann)).unwrap());
        cfg.set(&Edge::new(Vertex::new(3, 0), Vertex::new(3, 1)).unwrap(), 0.5).unwrap();
        assert!(!has_zero_circuit(&cfg, ann).unwrap());
    }

    #[test]
    fn nested_circuits() {
        let ann = Annulus::new(1, 5).unwrap();
        let cfg = zero_on(5, &[2, 4]);
        let inner = innermost_zero_circuit(&cfg, ann).unwrap().unwrap();
        let outer = outermost_zero_circuit(&cfg, ann).unwrap().unwrap();
        assert_eq!(inner.max_norm(), 2);
        assert_eq!(outer.min_norm(), 4);
        assert!(outer.contains_circuit(&inner));
    }

    #[test]
    fn ek_requires_both_annuli() {
        // R = 2, k = 1: Ann(8, 16) and Ann(32, 64).
        let mut cfg = WeightConfig::constant(LatticeBox::new(64), 1.0);
        let ann = Annulus::new(8, 16).unwrap();
        for i in 0..cfg.region().num_edges() {
            let e = cfg.region().edge_at(i);
            if ann.contains_edge(&e) {
                cfg.set(&e, 0.0).unwrap();
            }
        }
        assert!(!detect_ek(&cfg, 1, 2).unwrap());
        assert!(detect_ek(&WeightConfig::constant(LatticeBox::new(64), 0.0), 1, 2).unwrap());
        assert!(detect_ek(&cfg, 2, 2).is_err());
    }

    #[test]
    fn decomposition_of_extremes() {
        let zeros = WeightConfig::constant(LatticeBox::new(64), 0.0);
        let d = decompose(&zeros, 64, 2, 0).unwrap();
        assert_eq!(d.kappas, vec![0, 1]);
        assert_eq!(d.count, 2);
        assert!(d.identity_holds());
        assert!(d.is_nested());
        assert_eq!(d.sum(), Some(0.0));
        let ones = WeightConfig::constant(LatticeBox::new(64), 1.0);
        let d = decompose(&ones, 64, 2, 0).unwrap();
        assert_eq!(d.count, 0);
        assert_eq!(d.total, 64.0);
    }

    #[test]
    fn f_prob_extremes() {
        let mc = MonteCarlo::new(5, 50);
        let zero = WeightDistribution::point(crate::rational::int(0));
        assert_eq!(estimate_f_prob(&zero, 2, 2, &mc).unwrap().estimate, 1.0);
        let one = WeightDistribution::point(crate::rational::int(1));
        assert_eq!(estimate_f_prob(&one, 2, 2, &mc).unwrap().estimate, 0.0);
    }
}
