//! Brute-force oracles shared by the integration and acceptance tests. None of
//! them call into the code paths they are used to check.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use fpplab::condsum::{DiscreteVar, SumModel};
use fpplab::lattice::{Annulus, Dir, Edge, LatticeBox, Vertex, WeightConfig};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn edge(x: i32, y: i32, d: Dir) -> Edge {
    Edge::from_dir(Vertex::new(x, y), d)
}

fn nbrs(v: Vertex) -> [Vertex; 4] {
    [
        Vertex::new(v.x + 1, v.y),
        Vertex::new(v.x - 1, v.y),
        Vertex::new(v.x, v.y + 1),
        Vertex::new(v.x, v.y - 1),
    ]
}

fn norm(v: Vertex) -> u32 {
    v.x.unsigned_abs().max(v.y.unsigned_abs())
}

/// `min` over self-avoiding paths from the origin to `∂B(n)`, by depth-first
/// enumeration with a partial-sum cutoff (weights are nonnegative).
pub fn saw_passage(config: &WeightConfig<BigRational>, n: u32) -> BigRational {
    fn go(
        config: &WeightConfig<BigRational>,
        n: u32,
        v: Vertex,
        acc: BigRational,
        seen: &mut Vec<Vertex>,
        best: &mut Option<BigRational>,
    ) {
        if best.as_ref().is_some_and(|b| &acc >= b) {
            return;
        }
        if norm(v) == n {
            *best = Some(acc);
            return;
        }
        for w in nbrs(v) {
            if seen.contains(&w) {
                continue;
            }
            let e = Edge::new(v, w).unwrap();
            let t = config.get(&e).expect("inside").clone();
            seen.push(w);
            go(config, n, w, &acc + t, seen, best);
            seen.pop();
        }
    }
    let mut best = None;
    let origin = Vertex::new(0, 0);
    go(config, n, origin, BigRational::zero(), &mut vec![origin], &mut best);
    best.unwrap()
}

pub fn random_rational_config(b: LatticeBox, rng: &mut ChaCha8Rng) -> WeightConfig<BigRational> {
    let dens = [1, 2, 3, 4, 6];
    let w = (0..b.num_edges())
        .map(|_| {
            if rng.random_bool(0.3) {
                BigRational::zero()
            } else {
                q(rng.random_range(0..8), dens[rng.random_range(0..dens.len())])
            }
        })
        .collect();
    WeightConfig::from_vec(b, w).unwrap()
}

pub fn bernoulli_config(b: LatticeBox, p_zero: f64, rng: &mut ChaCha8Rng) -> WeightConfig<f64> {
    let w = (0..b.num_edges())
        .map(|_| if rng.random_bool(p_zero) { 0.0 } else { 1.0 })
        .collect();
    WeightConfig::from_vec(b, w).unwrap()
}

/// Edges of the annulus under the convention "both endpoints in `B(k2)`, one
/// of sup-norm above `k1`".
pub fn annulus_edges(ann: Annulus) -> Vec<Edge> {
    let k2 = ann.k2 as i32;
    let mut out = Vec::new();
    for x in -k2..=k2 {
        for y in -k2..=k2 {
            let v = Vertex::new(x, y);
            for w in [Vertex::new(x + 1, y), Vertex::new(x, y + 1)] {
                if norm(w) <= ann.k2 && (norm(v) > ann.k1 || norm(w) > ann.k1) {
                    out.push(Edge::new(v, w).unwrap());
                }
            }
        }
    }
    out
}

/// Crossings of the ray from `(fx + 1/2, fy + 1/2)` towards `+x` by the cycle's vertical edges.
fn encloses_face(cycle: &[Edge], fx: i32, fy: i32) -> bool {
    cycle
        .iter()
        .filter(|e| {
            let (a, b) = e.endpoints();
            a.x == b.x && a.x > fx && a.y.min(b.y) == fy
        })
        .count()
        % 2
        == 1
}

/// Faces (by lower-left corner) enclosed by a cycle.
pub fn enclosed_faces(cycle: &[Edge], radius: i32) -> BTreeSet<(i32, i32)> {
    let mut out = BTreeSet::new();
    for fx in -radius..radius {
        for fy in -radius..radius {
            if encloses_face(cycle, fx, fy) {
                out.insert((fx, fy));
            }
        }
    }
    out
}

/// All simple cycles of zero-weight annulus edges that enclose the origin,
/// each as a sorted edge list.
pub fn zero_circuits(config: &WeightConfig<f64>, ann: Annulus) -> Vec<Vec<Edge>> {
    let mut adj: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    for e in annulus_edges(ann) {
        if *config.get(&e).unwrap() == 0.0 {
            let (a, b) = e.endpoints();
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut verts: Vec<Vertex> = adj.keys().copied().collect();
    verts.sort();
    let mut found: BTreeSet<Vec<Edge>> = BTreeSet::new();
    for &s in &verts {
        // Cycles whose smallest vertex is `s`.
        let mut path = vec![s];
        fn dfs(
            adj: &HashMap<Vertex, Vec<Vertex>>,
            s: Vertex,
            path: &mut Vec<Vertex>,
            found: &mut BTreeSet<Vec<Edge>>,
        ) {
            let v = *path.last().unwrap();
            for &w in &adj[&v] {
                if w == s && path.len() >= 4 {
                    let mut edges: Vec<Edge> = path
                        .windows(2)
                        .map(|p| Edge::new(p[0], p[1]).unwrap())
                        .chain(std::iter::once(Edge::new(v, s).unwrap()))
                        .collect();
                    edges.sort();
                    if encloses_face(&edges, 0, 0) {
                        found.insert(edges);
                    }
                } else if w > s && !path.contains(&w) {
                    path.push(w);
                    dfs(adj, s, path, found);
                    path.pop();
                }
            }
        }
        dfs(&adj, s, &mut path, &mut found);
    }
    found.into_iter().collect()
}

/// The 24 edges of `B(2)` that can matter for `T(0, ∂B(2))`: those with an
/// endpoint in `B(1)`. Returned with the inner edges first.
pub fn b2_relevant_edges() -> Vec<Edge> {
    let mut inner = Vec::new();
    let mut outward = Vec::new();
    for x in -2..=2 {
        for y in -2..=2 {
            let v = Vertex::new(x, y);
            for w in [Vertex::new(x + 1, y), Vertex::new(x, y + 1)] {
                if norm(w) > 2 {
                    continue;
                }
                match (norm(v) <= 1, norm(w) <= 1) {
                    (true, true) => inner.push(Edge::new(v, w).unwrap()),
                    (true, false) | (false, true) => outward.push(Edge::new(v, w).unwrap()),
                    _ => {}
                }
            }
        }
    }
    assert_eq!((inner.len(), outward.len()), (12, 12));
    inner.extend(outward);
    inner
}

/// Bit of `e` in the masks read by [`b2_exact`].
pub fn b2_bit(e: Edge) -> u32 {
    b2_relevant_edges().iter().position(|f| *f == e).expect("relevant edge") as u32
}

/// Exact counts for `P(E | T(0, ∂B(2)) ≤ level)` under Bernoulli-half weights,
/// from all `2^24` states of the relevant edges. Each event reads the mask (bit
/// `i` set means edge `i` of [`b2_relevant_edges`] has weight 1). Returns the
/// hit count per event and the number of states meeting the condition.
pub fn b2_exact(level: u32, events: &[&dyn Fn(u32) -> bool]) -> (Vec<u64>, u64) {
    let edges = b2_relevant_edges();
    let idx = |v: Vertex| ((v.x + 1) * 3 + (v.y + 1)) as usize;
    let inner: Vec<(usize, usize)> = edges[..12]
        .iter()
        .map(|e| {
            let (a, b) = e.endpoints();
            (idx(a), idx(b))
        })
        .collect();
    let outward: Vec<usize> = edges[12..]
        .iter()
        .map(|e| {
            let (a, b) = e.endpoints();
            idx(if norm(a) <= 1 { a } else { b })
        })
        .collect();
    let mut hits = vec![0u64; events.len()];
    let mut total = 0u64;
    for mask in 0u32..(1 << 24) {
        let mut d = [u32::MAX; 9];
        d[idx(Vertex::new(0, 0))] = 0;
        loop {
            let mut changed = false;
            for (i, &(a, b)) in inner.iter().enumerate() {
                let w = (mask >> i) & 1;
                if d[a] != u32::MAX && d[a] + w < d[b] {
                    d[b] = d[a] + w;
                    changed = true;
                }
                if d[b] != u32::MAX && d[b] + w < d[a] {
                    d[a] = d[b] + w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let t = outward
            .iter()
            .enumerate()
            .map(|(i, &a)| d[a] + ((mask >> (12 + i)) & 1))
            .min()
            .unwrap();
        if t <= level {
            total += 1;
            for (h, ev) in hits.iter_mut().zip(events) {
                if ev(mask) {
                    *h += 1;
                }
            }
        }
    }
    (hits, total)
}

/// A random model whose joint outcome count `Π |supp X_k|` stays below `cap`.
pub fn random_model(rng: &mut ChaCha8Rng, max_n: u64, cap: u64) -> (SumModel, u64) {
    let n = rng.random_range(1..=max_n);
    let mut head = Vec::new();
    let mut outcomes = 1u64;
    for _ in 0..n {
        let room = (cap / outcomes).min(3);
        let size = if room <= 1 { 1 } else { rng.random_range(1..=room) };
        outcomes *= size;
        head.push(random_var(rng, size as usize));
    }
    (SumModel::new(head, fpplab::condsum::TailRule::Iid { var: DiscreteVar::point(BigRational::zero()) }).unwrap(), n)
}

/// Random law with `size` atoms on small rationals.
pub fn random_var(rng: &mut ChaCha8Rng, size: usize) -> DiscreteVar {
    let mut values = BTreeSet::new();
    while values.len() < size {
        values.insert(q(rng.random_range(0..7), [1, 2, 3][rng.random_range(0..3)]));
    }
    let raw: Vec<i64> = (0..size).map(|_| rng.random_range(1..6)).collect();
    let total: i64 = raw.iter().sum();
    DiscreteVar::new(values.into_iter().zip(raw.iter().map(|&r| q(r, total))).collect()).unwrap()
}

/// Exact joint law of `(X_1, ..., X_j)` given `S_n ≤ level` by listing every joint outcome.
pub fn brute_conditional(vars: &[DiscreteVar], level: &BigRational, j: usize) -> Option<Vec<(Vec<BigRational>, BigRational)>> {
    let mut acc: HashMap<Vec<BigRational>, BigRational> = HashMap::new();
    let mut z = BigRational::zero();
    let mut stack: Vec<(usize, BigRational, BigRational, Vec<BigRational>)> =
        vec![(0, BigRational::zero(), BigRational::one(), vec![])];
    while let Some((k, sum, p, head)) = stack.pop() {
        if k == vars.len() {
            if &sum <= level {
                z += &p;
                *acc.entry(head).or_insert_with(BigRational::zero) += p;
            }
            continue;
        }
        for (v, w) in vars[k].atoms() {
            let mut h = head.clone();
            if k < j {
                h.push(v.clone());
            }
            stack.push((k + 1, &sum + v, &p * w, h));
        }
    }
    if z.is_zero() {
        return None;
    }
    let mut out: Vec<(Vec<BigRational>, BigRational)> = acc
        .into_iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(h, p)| (h, p / &z))
        .collect();
    out.sort();
    Some(out)
}

/// Distinct-part partitions of `l` by listing the subsets of `{1, ..., l}`
/// whose partial sums stay at most `l`.
pub fn brute_q_distinct(l: u32) -> u64 {
    fn go(next: u32, l: u32, sum: u32) -> u64 {
        if sum == l {
            return 1;
        }
        (next..=l - sum).map(|k| go(k + 1, l, sum + k)).sum()
    }
    go(1, l, 0)
}

/// Whether two vertex-disjoint simple paths exist from `a` and `b` to vertices
/// with `target`, stepping along `step`, by listing all paths from `a`.
pub fn disjoint_pair<T: Copy + Ord>(
    a: T,
    b: T,
    target: impl Fn(T) -> bool + Copy,
    step: impl Fn(T) -> Vec<T> + Copy,
) -> bool {
    fn paths<T: Copy + Ord>(
        v: T,
        target: impl Fn(T) -> bool + Copy,
        step: impl Fn(T) -> Vec<T> + Copy,
        cur: &mut Vec<T>,
        out: &mut Vec<BTreeSet<T>>,
    ) {
        if target(v) {
            out.push(cur.iter().copied().collect());
            return;
        }
        for w in step(v) {
            if !cur.contains(&w) {
                cur.push(w);
                paths(w, target, step, cur, out);
                cur.pop();
            }
        }
    }
    let mut from_a = Vec::new();
    paths(a, target, step, &mut vec![a], &mut from_a);
    let mut from_b = Vec::new();
    paths(b, target, step, &mut vec![b], &mut from_b);
    from_a
        .iter()
        .any(|pa| from_b.iter().any(|pb| pa.is_disjoint(pb)))
}
