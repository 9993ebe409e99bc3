//! Passage times `T(A, B)` on weighted boxes, with geodesics.
//!
//! Geodesics are chosen deterministically: among minimum-weight paths, those
//! with the fewest edges, and among those the lexicographically smallest
//! vertex sequence.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{FppError, Result};
use crate::lattice::{Circuit, LatticeBox, Path, Vertex, Weight, WeightConfig, ORIGIN};

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSet {
    Vertex(Vertex),
    /// `∂B(n)`.
    Boundary(u32),
    Circuit(Circuit),
}

impl TargetSet {
    pub fn vertices(&self) -> Vec<Vertex> {
        match self {
            TargetSet::Vertex(v) => vec![*v],
            TargetSet::Boundary(n) => LatticeBox::new(*n).boundary(),
            TargetSet::Circuit(c) => c.vertices().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Passage<W> {
    pub value: W,
    pub geodesic: Path,
}

struct Key<W> {
    dist: W,
    hops: u32,
    vertex: usize,
}

impl<W: Weight> Ord for Key<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.hops.cmp(&other.hops))
            .then(self.vertex.cmp(&other.vertex))
    }
}

impl<W: Weight> PartialOrd for Key<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: Weight> PartialEq for Key<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<W: Weight> Eq for Key<W> {}

fn indices(b: LatticeBox, vs: &[Vertex], what: &str) -> Result<Vec<usize>> {
    if vs.is_empty() {
        return Err(FppError::invalid(format!("empty {what} set")));
    }
    vs.iter()
        .map(|&v| {
            b.vertex_index(v)
                .ok_or_else(|| FppError::OutOfRegion(format!("{what} {v} not in B({})", b.n)))
        })
        .collect()
}

fn cmp_label<W: Weight>(a: &(W, u32), b: &(W, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Settled `(distance, hops)` labels for every vertex whose label does not
/// exceed the best target label; `None` elsewhere.
fn settle<W: Weight>(
    config: &WeightConfig<W>,
    sources: &[usize],
    is_target: &[bool],
    bound: Option<&W>,
) -> (Vec<Option<(W, u32)>>, Option<(W, u32)>) {
    let b = config.region();
    let mut label: Vec<Option<(W, u32)>> = vec![None; b.num_vertices()];
    let mut done = vec![false; b.num_vertices()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if label[s].is_none() {
            label[s] = Some((W::zero(), 0));
            heap.push(Reverse(Key {
                dist: W::zero(),
                hops: 0,
                vertex: s,
            }));
        }
    }
    let mut best: Option<(W, u32)> = None;
    while let Some(Reverse(Key { dist, hops, vertex })) = heap.pop() {
        if done[vertex] {
            continue;
        }
        if let Some(best) = &best {
            if cmp_label(&(dist.clone(), hops), best) == Ordering::Greater {
                break;
            }
        }
        done[vertex] = true;
        if is_target[vertex] && best.is_none() {
            best = Some((dist.clone(), hops));
        }
        let v = b.vertex_at(vertex);
        for (w, e) in b.incident(v) {
            let wi = b.vertex_index(w).expect("inside");
            if done[wi] {
                continue;
            }
            let cand = (dist.add(config.at(e)), hops + 1);
            if bound.is_some_and(|b| cand.0.total_cmp(b) == Ordering::Greater) {
                continue;
            }
            let better = match &label[wi] {
                None => true,
                Some(old) => cmp_label(&cand, old) == Ordering::Less,
            };
            if better {
                heap.push(Reverse(Key {
                    dist: cand.0.clone(),
                    hops: cand.1,
                    vertex: wi,
                }));
                label[wi] = Some(cand);
            }
        }
    }
    for (l, d) in label.iter_mut().zip(&done) {
        if !d {
            *l = None;
        }
    }
    (label, best)
}

/// Minimal total weight over paths from any source vertex to any target vertex.
pub fn passage_time<W: Weight>(
    config: &WeightConfig<W>,
    source: &TargetSet,
    target: &TargetSet,
) -> Result<Passage<W>> {
    passage_between(config, &source.vertices(), &target.vertices())
}

pub fn passage_between<W: Weight>(
    config: &WeightConfig<W>,
    sources: &[Vertex],
    targets: &[Vertex],
) -> Result<Passage<W>> {
    let b = config.region();
    let src = indices(b, sources, "source")?;
    let tgt = indices(b, targets, "target")?;
    let mut is_target = vec![false; b.num_vertices()];
    for &t in &tgt {
        is_target[t] = true;
    }
    let (label, best) = settle(config, &src, &is_target, None);
    let best = best.expect("boxes are connected");

    // Optimal targets, then every settled vertex that reaches one along tight edges.
    let tight = |u: usize, e: usize, w: usize| -> bool {
        match (&label[u], &label[w]) {
            (Some(lu), Some(lw)) => {
                lu.1 + 1 == lw.1 && lu.0.add(config.at(e)).total_cmp(&lw.0) == Ordering::Equal
            }
            _ => false,
        }
    };
    let mut useful = vec![false; b.num_vertices()];
    let mut queue = VecDeque::new();
    for &t in &tgt {
        if let Some(l) = &label[t] {
            if cmp_label(l, &best) == Ordering::Equal && !useful[t] {
                useful[t] = true;
                queue.push_back(t);
            }
        }
    }
    while let Some(w) = queue.pop_front() {
        for (u, e) in b.incident(b.vertex_at(w)) {
            let ui = b.vertex_index(u).expect("inside");
            if !useful[ui] && tight(ui, e, w) {
                useful[ui] = true;
                queue.push_back(ui);
            }
        }
    }

    let start = src
        .iter()
        .copied()
        .filter(|&s| useful[s])
        .min_by_key(|&s| b.vertex_at(s))
        .expect("an optimal path starts at a source");
    let mut path = vec![b.vertex_at(start)];
    let mut cur = start;
    while label[cur].as_ref().map(|l| cmp_label(l, &best)) != Some(Ordering::Equal) || !is_target[cur] {
        let next = b
            .incident(b.vertex_at(cur))
            .filter_map(|(w, e)| {
                let wi = b.vertex_index(w).expect("inside");
                (useful[wi] && tight(cur, e, wi)).then_some((w, wi))
            })
            .min_by_key(|(w, _)| *w)
            .expect("useful vertices continue to a target");
        path.push(next.0);
        cur = next.1;
    }
    Ok(Passage {
        value: best.0,
        geodesic: Path::new(path).expect("lattice steps"),
    })
}

/// `T(0, ∂B(n))`.
pub fn t_to_boundary<W: Weight>(config: &WeightConfig<W>, n: u32) -> Result<W> {
    if n > config.region().n {
        return Err(FppError::OutOfRegion(format!(
            "B({n}) exceeds region B({})",
            config.region().n
        )));
    }
    Ok(distance_to_set(config, &[ORIGIN], |v| v.norm() == n))
}

/// Smallest passage time from `sources` to any vertex satisfying `is_target`,
/// without geodesic extraction.
pub fn distance_to_set<W: Weight>(
    config: &WeightConfig<W>,
    sources: &[Vertex],
    is_target: impl Fn(Vertex) -> bool,
) -> W {
    let b = config.region();
    let flags: Vec<bool> = (0..b.num_vertices()).map(|i| is_target(b.vertex_at(i))).collect();
    let src: Vec<usize> = sources.iter().filter_map(|&v| b.vertex_index(v)).collect();
    settle(config, &src, &flags, None).1.expect("target reachable").0
}

/// `T(0, ∂B(n))` if it is at most `bound`, without exploring beyond it.
pub fn t_to_boundary_within<W: Weight>(config: &WeightConfig<W>, n: u32, bound: &W) -> Result<Option<W>> {
    let b = config.region();
    if n > b.n {
        return Err(FppError::OutOfRegion(format!("B({n}) exceeds region B({})", b.n)));
    }
    let flags: Vec<bool> = (0..b.num_vertices()).map(|i| b.vertex_at(i).norm() == n).collect();
    let src = [b.vertex_index(ORIGIN).expect("origin")];
    Ok(settle(config, &src, &flags, Some(bound)).1.map(|l| l.0))
}

/// `T(c1, c2)` for `c1` on or inside `c2`.
pub fn t_between_circuits<W: Weight>(config: &WeightConfig<W>, c1: &Circuit, c2: &Circuit) -> Result<W> {
    if !c2.contains_circuit(c1) {
        return Err(FppError::invalid("circuits are not nested"));
    }
    let b = config.region();
    for v in c1.vertices().iter().chain(c2.vertices()) {
        if !b.contains(*v) {
            return Err(FppError::OutOfRegion(format!("circuit vertex {v} not in B({})", b.n)));
        }
    }
    let targets = c2.vertices();
    Ok(distance_to_set(config, c1.vertices(), |v| targets.contains(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Edge;
    use num_rational::BigRational;

    fn ones(n: u32) -> WeightConfig<f64> {
        WeightConfig::constant(LatticeBox::new(n), 1.0)
    }

    #[test]
    fn unit_weights_give_sup_distance() {
        let c = ones(5);
        for n in 0..=5 {
            assert_eq!(t_to_boundary(&c, n).unwrap(), n as f64);
        }
        let p = passage_time(&c, &TargetSet::Vertex(ORIGIN), &TargetSet::Boundary(2)).unwrap();
        assert_eq!(p.value, 2.0);
        // Fewest edges, then lexicographically smallest: straight to (-2, 0).
        assert_eq!(
            p.geodesic.vertices(),
            &[Vertex::new(0, 0), Vertex::new(-1, 0), Vertex::new(-2, 0)]
        );
        assert!(t_to_boundary(&c, 6).is_err());
    }

    #[test]
    fn zero_weights() {
        let c = WeightConfig::constant(LatticeBox::new(3), 0.0);
        let p = passage_time(&c, &TargetSet::Vertex(Vertex::new(-3, -3)), &TargetSet::Vertex(Vertex::new(3, 3))).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.geodesic.len(), 12);
    }

    #[test]
    fn geodesic_weight_matches_value() {
        let b = LatticeBox::new(3);
        let c = WeightConfig::from_fn(b, |e| {
            let h = (e.base().x * 7 + e.base().y * 13 + if e.dir() == crate::lattice::Dir::E { 5 } else { 0 }).rem_euclid(4);
            BigRational::new(h.into(), 3.into())
        })
        .unwrap();
        let p = passage_time(&c, &TargetSet::Vertex(Vertex::new(-2, 1)), &TargetSet::Boundary(3)).unwrap();
        assert_eq!(p.geodesic.weight(&c).unwrap(), p.value);
        assert_eq!(p.geodesic.start(), Vertex::new(-2, 1));
        assert_eq!(p.geodesic.end().norm(), 3);
    }

    #[test]
    fn outside_region_is_rejected() {
        let c = ones(2);
        assert!(passage_time(&c, &TargetSet::Vertex(Vertex::new(3, 0)), &TargetSet::Boundary(1)).is_err());
    }

    #[test]
    fn nested_squares() {
        let c = ones(6);
        let sq = |r: i32| {
            let mut v = Vec::new();
            for x in -r..r { v.push(Vertex::new(x, -r)); }
            for y in -r..r { v.push(Vertex::new(r, y)); }
            for x in (-r + 1..=r).rev() { v.push(Vertex::new(x, r)); }
            for y in (-r + 1..=r).rev() { v.push(Vertex::new(-r, y)); }
            v.push(Vertex::new(-r, -r));
            Circuit::closed(v, None).unwrap()
        };
        assert_eq!(t_between_circuits(&c, &sq(2), &sq(5)).unwrap(), 3.0);
        assert_eq!(t_between_circuits(&c, &sq(3), &sq(3)).unwrap(), 0.0);
        assert_eq!(t_between_circuits(&c, &Circuit::Trivial, &sq(4)).unwrap(), 4.0);
        assert!(t_between_circuits(&c, &sq(5), &sq(2)).is_err());
    }

    #[test]
    fn raising_a_weight_never_lowers_time() {
        let mut c = ones(4);
        let before = t_to_boundary(&c, 4).unwrap();
        let e = Edge::new(ORIGIN, Vertex::new(1, 0)).unwrap();
        c.set(&e, 10.0).unwrap();
        assert!(t_to_boundary(&c, 4).unwrap() >= before);
    }
}
