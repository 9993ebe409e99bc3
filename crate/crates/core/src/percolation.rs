//! Bernoulli percolation estimators in the uniform coupling: an edge is
//! `p`-open when its uniform label satisfies `U_e ≤ p`.

use std::collections::VecDeque;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::exec::{open_unit, MonteCarlo};
use crate::lattice::{dual_of, Annulus, Edge, Face, LatticeBox, Vertex, WeightConfig};
use crate::passage::distance_to_set;
use crate::stats::{wilson, EstimateReport, Z95};
use crate::weights::Sampler;

/// Uniform labels `U_e ∈ (0, 1)` on every edge of a box.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformConfig {
    region: LatticeBox,
    values: Vec<f64>,
}

impl UniformConfig {
    pub fn sample<R: RngCore + ?Sized>(region: LatticeBox, rng: &mut R) -> Self {
        let values = (0..region.num_edges()).map(|_| open_unit(rng)).collect();
        UniformConfig { region, values }
    }

    pub fn from_vec(region: LatticeBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.num_edges() {
            return Err(FppError::invalid("one uniform per edge required"));
        }
        if values.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
            return Err(FppError::invalid("uniform labels must lie in (0, 1)"));
        }
        Ok(UniformConfig { region, values })
    }

    pub fn constant(region: LatticeBox, u: f64) -> Self {
        UniformConfig {
            region,
            values: vec![u; region.num_edges()],
        }
    }

    pub fn region(&self) -> LatticeBox {
        self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: &Edge) -> Option<f64> {
        self.region.edge_index(e).map(|i| self.values[i])
    }

    pub fn set(&mut self, e: &Edge, u: f64) -> Result<()> {
        let i = self
            .region
            .edge_index(e)
            .ok_or_else(|| FppError::OutOfRegion(format!("edge {e} not in B({})", self.region.n)))?;
        self.values[i] = u;
        Ok(())
    }

    pub fn is_open(&self, e: &Edge, p: f64) -> bool {
        self.get(e).is_some_and(|u| u <= p)
    }

    /// The labels as weights, for passage-time computations.
    pub fn weights(&self, sampler: &Sampler) -> WeightConfig<f64> {
        sampler.weights_from(self)
    }
}

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b) as u32;
        }
    }
}

/// Domain of a left-right crossing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingShape {
    /// `B(n0)`, crossed from `x = -n0` to `x = n0`.
    Square(u32),
    /// Vertices `[0, n+1] × [0, n]` with no vertical edges on the two outer
    /// columns, crossed from `x = 0` to `x = n + 1`. Its planar dual is the
    /// same graph rotated, so left-right open and top-bottom closed dual
    /// crossings are complementary.
    Rectangle(u32),
}

/// Rectangular grid `[0, w] × [0, h]`, horizontal edges first.
#[derive(Clone, Copy, Debug)]
struct Grid {
    w: usize,
    h: usize,
    side_verticals: bool,
}

impl Grid {
    fn of(shape: CrossingShape) -> Grid {
        match shape {
            CrossingShape::Square(n) => Grid {
                w: 2 * n as usize,
                h: 2 * n as usize,
                side_verticals: true,
            },
            CrossingShape::Rectangle(n) => Grid {
                w: n as usize + 1,
                h: n as usize,
                side_verticals: false,
            },
        }
    }

    fn vertex(&self, x: usize, y: usize) -> usize {
        x * (self.h + 1) + y
    }

    fn num_vertices(&self) -> usize {
        (self.w + 1) * (self.h + 1)
    }

    fn num_horizontal(&self) -> usize {
        self.w * (self.h + 1)
    }

    fn vertical_columns(&self) -> std::ops::RangeInclusive<usize> {
        if self.side_verticals {
            0..=self.w
        } else {
            1..=self.w - 1
        }
    }

    fn num_edges(&self) -> usize {
        self.num_horizontal() + self.vertical_columns().count() * self.h
    }

    /// Endpoints of edge `i`.
    fn endpoints(&self, i: usize) -> (usize, usize) {
        if i < self.num_horizontal() {
            let (x, y) = (i / (self.h + 1), i % (self.h + 1));
            (self.vertex(x, y), self.vertex(x + 1, y))
        } else {
            let j = i - self.num_horizontal();
            let x = j / self.h + *self.vertical_columns().start();
            let y = j % self.h;
            (self.vertex(x, y), self.vertex(x, y + 1))
        }
    }

    fn horizontal(&self, x: usize, y: usize) -> usize {
        x * (self.h + 1) + y
    }

    fn vertical(&self, x: usize, y: usize) -> Option<usize> {
        let cols = self.vertical_columns();
        cols.contains(&x)
            .then(|| self.num_horizontal() + (x - cols.start()) * self.h + y)
    }
}

fn left_right_connected(g: &Grid, open: impl Fn(usize) -> bool) -> bool {
    let left = g.num_vertices();
    let right = left + 1;
    let mut dsu = Dsu::new(g.num_vertices() + 2);
    for y in 0..=g.h {
        dsu.union(g.vertex(0, y), left);
        dsu.union(g.vertex(g.w, y), right);
    }
    for i in 0..g.num_edges() {
        if open(i) {
            let (a, b) = g.endpoints(i);
            dsu.union(a, b);
        }
    }
    dsu.find(left) == dsu.find(right)
}

/// Smallest `p` at which a `p`-open left-right crossing exists: the minimax
/// label over crossing paths, found by adding edges in label order.
fn crossing_threshold(g: &Grid, u: &[f64]) -> f64 {
    let left = g.num_vertices();
    let right = left + 1;
    let mut dsu = Dsu::new(g.num_vertices() + 2);
    for y in 0..=g.h {
        dsu.union(g.vertex(0, y), left);
        dsu.union(g.vertex(g.w, y), right);
    }
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    for i in order {
        let (a, b) = g.endpoints(i);
        dsu.union(a, b);
        if dsu.find(left) == dsu.find(right) {
            return u[i];
        }
    }
    unreachable!("a fully open grid is crossed")
}

/// Top-bottom crossing of the rectangle's dual by `p`-closed dual edges.
/// Faces are `(i, j)` for `i ∈ [0, n]`, `j ∈ [0, n−1]`; the bottom and top
/// outer faces are two extra nodes.
fn rectangle_dual_crossing(g: &Grid, u: &[f64], p: f64) -> bool {
    let (fw, fh) = (g.w, g.h);
    let face = |i: usize, j: usize| i * fh + j;
    let bottom = fw * fh;
    let top = bottom + 1;
    let mut seen = vec![false; fw * fh + 2];
    let mut queue = VecDeque::new();
    seen[bottom] = true;
    queue.push_back(bottom);
    let closed = |e: usize| u[e] > p;
    while let Some(node) = queue.pop_front() {
        if node == top {
            return true;
        }
        let mut step = |next: usize, e: usize| {
            if closed(e) && !seen[next] {
                seen[next] = true;
                queue.push_back(next);
            }
        };
        if node == bottom {
            for i in 0..fw {
                step(face(i, 0), g.horizontal(i, 0));
            }
            continue;
        }
        let (i, j) = (node / fh, node % fh);
        // Across the horizontal edges below and above the face.
        step(if j == 0 { bottom } else { face(i, j - 1) }, g.horizontal(i, j));
        step(if j + 1 == fh { top } else { face(i, j + 1) }, g.horizontal(i, j + 1));
        // Across the vertical edges on its left and right, where they exist.
        if i > 0 {
            if let Some(e) = g.vertical(i, j) {
                step(face(i - 1, j), e);
            }
        }
        if i + 1 < fw {
            if let Some(e) = g.vertical(i + 1, j) {
                step(face(i + 1, j), e);
            }
        }
    }
    false
}

fn sample_labels<R: RngCore + ?Sized>(g: &Grid, rng: &mut R) -> Vec<f64> {
    (0..g.num_edges()).map(|_| open_unit(rng)).collect()
}

/// Estimate of `σ(n0, p)`, the probability of a `p`-open left-right crossing.
pub fn crossing_prob(p: f64, shape: CrossingShape, mc: &MonteCarlo) -> Result<EstimateReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(FppError::invalid(format!("p must lie in [0, 1], got {p}")));
    }
    let size = match shape {
        CrossingShape::Square(n) | CrossingShape::Rectangle(n) => n,
    };
    if size == 0 {
        return Err(FppError::invalid("crossing domain needs n >= 1"));
    }
    let g = Grid::of(shape);
    let hits = mc.count(|rng, _| {
        let u = sample_labels(&g, rng);
        left_right_connected(&g, |e| u[e] <= p)
    });
    Ok(EstimateReport::from_counts(
        "crossing_prob",
        serde_json::json!({ "p": p, "shape": shape }),
        hits,
        mc.samples,
        mc.seed,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub n: u32,
    pub p: f64,
    pub samples: u64,
    pub open_crossings: u64,
    /// Samples where both or neither crossing occurred.
    pub violations: u64,
}

/// Per-sample check that exactly one of the left-right `p`-open crossing and
/// the top-bottom `p`-closed dual crossing occurs on the rectangle.
pub fn rectangle_duality(n: u32, p: f64, mc: &MonteCarlo) -> Result<DualityReport> {
    if n == 0 {
        return Err(FppError::invalid("rectangle needs n >= 1"));
    }
    let g = Grid::of(CrossingShape::Rectangle(n));
    let results = mc.map(|rng, _| {
        let u = sample_labels(&g, rng);
        let open = left_right_connected(&g, |e| u[e] <= p);
        let closed = rectangle_dual_crossing(&g, &u, p);
        (open, open == closed)
    });
    Ok(DualityReport {
        n,
        p,
        samples: mc.samples,
        open_crossings: results.iter().filter(|r| r.0).count() as u64,
        violations: results.iter().filter(|r| r.1).count() as u64,
    })
}

/// Sorted per-sample crossing thresholds of `B(n0)`; `σ̂(n0, p)` is the
/// fraction at or below `p`, so estimates are monotone in `p`.
#[derive(Clone, Debug)]
pub struct CrossingPool {
    pub n0: u32,
    thresholds: Vec<f64>,
}

impl CrossingPool {
    fn build(n0: u32, mc: &MonteCarlo, start: u64, end: u64) -> Vec<f64> {
        let g = Grid::of(CrossingShape::Square(n0));
        let stream = mc.substream(n0 as u64);
        stream.map_range(start, end, |rng, _| crossing_threshold(&g, &sample_labels(&g, rng)))
    }

    pub fn new(n0: u32, mc: &MonteCarlo) -> Self {
        let mut thresholds = Self::build(n0, mc, 0, mc.samples);
        thresholds.sort_by(f64::total_cmp);
        CrossingPool { n0, thresholds }
    }

    /// Appends replicas `[len, len + extra)` of the same stream.
    pub fn extend(&mut self, mc: &MonteCarlo, extra: u64) {
        let len = self.thresholds.len() as u64;
        self.thresholds.extend(Self::build(self.n0, mc, len, len + extra));
        self.thresholds.sort_by(f64::total_cmp);
    }

    pub fn samples(&self) -> u64 {
        self.thresholds.len() as u64
    }

    pub fn successes(&self, p: f64) -> u64 {
        self.thresholds.partition_point(|&t| t <= p) as u64
    }

    pub fn sigma(&self, p: f64) -> f64 {
        self.successes(p) as f64 / self.samples() as f64
    }

    fn ambiguous(&self, p: f64, target: f64) -> bool {
        let (lo, hi) = wilson(self.successes(p), self.samples(), Z95);
        lo < target && target < hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationLengthEstimate {
    pub p: f64,
    pub epsilon: f64,
    /// Smallest probed `n0` with `σ̂(n0, p) ≥ 1 − ε`; `None` when it exceeds `nmax`.
    pub value: Option<u32>,
    /// Some probe's interval straddled `1 − ε` even at the largest batch.
    pub ambiguous: bool,
    pub diagnostics: Vec<EstimateReport>,
}

/// Largest batch multiplier used when resolving ambiguous probes.
pub const MAX_BATCH_DOUBLINGS: u32 = 3;

/// `L(p, ε) = min{n0 : σ(n0, p) ≥ 1 − ε}` over `n0 = 1, …, nmax`.
pub fn correlation_length(p: f64, epsilon: f64, nmax: u32, mc: &MonteCarlo) -> Result<CorrelationLengthEstimate> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(FppError::invalid(format!("correlation length needs p in (1/2, 1], got {p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(FppError::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let target = 1.0 - epsilon;
    let mut diagnostics = Vec::new();
    let mut ambiguous = false;
    for n0 in 1..=nmax {
        let mut pool = CrossingPool::new(n0, mc);
        let mut doublings = 0;
        while pool.ambiguous(p, target) && doublings < MAX_BATCH_DOUBLINGS {
            pool.extend(mc, pool.samples());
            doublings += 1;
        }
        ambiguous |= pool.ambiguous(p, target);
        let report = EstimateReport::from_counts(
            "crossing_prob",
            serde_json::json!({ "p": p, "shape": CrossingShape::Square(n0) }),
            pool.successes(p),
            pool.samples(),
            mc.seed,
        );
        let met = report.estimate >= target;
        diagnostics.push(report);
        if met {
            return Ok(CorrelationLengthEstimate {
                p,
                epsilon,
                value: Some(n0),
                ambiguous,
                diagnostics,
            });
        }
    }
    Ok(CorrelationLengthEstimate {
        p,
        epsilon,
        value: None,
        ambiguous,
        diagnostics,
    })
}

/// One evaluation of the bisection predicate `L̂(p) ≤ R^{3k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub p: f64,
    /// `L̂(p)` restricted to probes `n0 ≤ R^{3k}`; `None` when no probe qualifies.
    pub l_hat: Option<u32>,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PkEstimate {
    pub r: u32,
    pub k: u32,
    pub epsilon1: f64,
    pub p_k: f64,
    pub samples_per_probe: u64,
    pub ambiguous: bool,
    pub trace: Vec<BisectionStep>,
}

/// Default correlation-length threshold constant.
pub const EPSILON1: f64 = 0.02;

/// Bisection tolerance on `p`.
pub const PK_TOLERANCE: f64 = 1e-3;

/// `p_k = min{p ∈ (1/2, 1) : L(p) ≤ R^{3k}}` by bisection on a common pool
/// of crossing thresholds per box size.
pub fn p_k_solve(r: u32, k: u32, epsilon1: f64, mc: &MonteCarlo) -> Result<PkEstimate> {
    if r < 2 || k < 1 {
        return Err(FppError::invalid("p_k needs R >= 2 and k >= 1"));
    }
    if !(epsilon1 > 0.0 && epsilon1 < 1.0) {
        return Err(FppError::invalid("epsilon1 must lie in (0, 1)"));
    }
    let scale = r
        .checked_pow(3 * k)
        .filter(|&s| s <= 256)
        .ok_or_else(|| FppError::invalid("R^(3k) is beyond desk scale (256)"))?;
    let target = 1.0 - epsilon1;
    let mut pools: Vec<CrossingPool> = (1..=scale).map(|n0| CrossingPool::new(n0, mc)).collect();
    let l_hat = |pools: &[CrossingPool], p: f64| pools.iter().find(|pl| pl.sigma(p) >= target).map(|pl| pl.n0);

    let mut doublings = 0;
    loop {
        let mut trace = Vec::new();
        let (mut lo, mut hi) = (0.5, 1.0);
        let mut ambiguous = false;
        while hi - lo > PK_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            let l = l_hat(&pools, mid);
            let accepted = l.is_some();
            // The deciding probe is the first one at or below the threshold,
            // or the closest miss when none qualifies.
            let decisive = match l {
                Some(n0) => &pools[n0 as usize - 1],
                None => pools
                    .iter()
                    .max_by(|a, b| a.sigma(mid).total_cmp(&b.sigma(mid)))
                    .expect("pools"),
            };
            ambiguous |= decisive.ambiguous(mid, target);
            trace.push(BisectionStep { p: mid, l_hat: l, accepted });
            if accepted {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let final_ambiguous = pools.iter().any(|pl| pl.ambiguous(hi, target));
        if !final_ambiguous || doublings >= MAX_BATCH_DOUBLINGS {
            return Ok(PkEstimate {
                r,
                k,
                epsilon1,
                p_k: hi,
                samples_per_probe: pools[0].samples(),
                ambiguous: ambiguous && final_ambiguous,
                trace,
            });
        }
        for pool in &mut pools {
            let extra = pool.samples();
            pool.extend(mc, extra);
        }
        doublings += 1;
    }
}

/// Unit-capacity max flow on a vertex-split graph: are there two
/// vertex-disjoint paths, one from `a` and one from `b`, each ending in a sink?
fn two_disjoint_paths(
    nodes: usize,
    a: usize,
    b: usize,
    is_sink: impl Fn(usize) -> bool,
    mut neighbors: impl FnMut(usize, &mut Vec<usize>),
) -> bool {
    // Node v splits into 2v (in) and 2v+1 (out); S = 2·nodes, T = 2·nodes + 1.
    let s = 2 * nodes;
    let t = s + 1;
    let mut to: Vec<usize> = Vec::new();
    let mut cap: Vec<u8> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); 2 * nodes + 2];
    let mut add = |u: usize, v: usize, adj: &mut Vec<Vec<usize>>| {
        adj[u].push(to.len());
        to.push(v);
        cap.push(1);
        adj[v].push(to.len());
        to.push(u);
        cap.push(0);
    };
    let mut nbrs = Vec::new();
    for v in 0..nodes {
        add(2 * v, 2 * v + 1, &mut adj);
        if is_sink(v) {
            add(2 * v + 1, t, &mut adj);
        }
        neighbors(v, &mut nbrs);
        for &w in &nbrs {
            add(2 * v + 1, 2 * w, &mut adj);
        }
    }
    add(s, 2 * a, &mut adj);
    add(s, 2 * b, &mut adj);

    let mut flow = 0;
    while flow < 2 {
        let mut prev: Vec<Option<usize>> = vec![None; adj.len()];
        let mut seen = vec![false; adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &e in &adj[u] {
                let v = to[e];
                if cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    prev[v] = Some(e);
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return false;
        }
        let mut v = t;
        while let Some(e) = prev[v] {
            cap[e] -= 1;
            cap[e ^ 1] += 1;
            v = to[e ^ 1];
        }
        flow += 1;
    }
    true
}

/// The edge `{(0,0), (1,0)}` whose four arms are measured.
pub fn four_arm_edge() -> Edge {
    Edge::from_dir(Vertex::new(0, 0), crate::lattice::Dir::E)
}

/// Alternating four-arm event for [`four_arm_edge`] inside `B(radius)`:
/// vertex-disjoint `p`-open paths from both endpoints to `∂B(radius)`, and
/// face-disjoint `p`-closed dual paths from both dual endpoints to the outer
/// ring of faces of `B(radius)`, none using the edge itself.
pub fn four_arm_event(u: &UniformConfig, radius: u32, p: f64) -> Result<bool> {
    if radius == 0 || radius > u.region().n {
        return Err(FppError::invalid(format!("radius must lie in [1, {}]", u.region().n)));
    }
    let b = LatticeBox::new(radius);
    let e0 = four_arm_edge();
    let label = |e: &Edge| u.get(e).expect("inside");
    let (a0, a1) = e0.endpoints();
    let primal = two_disjoint_paths(
        b.num_vertices(),
        b.vertex_index(a0).expect("inside"),
        b.vertex_index(a1).expect("inside"),
        |i| b.vertex_at(i).norm() == radius,
        |i, out| {
            out.clear();
            let v = b.vertex_at(i);
            for (w, _) in b.incident(v) {
                let e = Edge::new(v, w).expect("adjacent");
                if e != e0 && label(&e) <= p {
                    out.push(b.vertex_index(w).expect("inside"));
                }
            }
        },
    );
    if !primal {
        return Ok(false);
    }
    let (f0, f1) = dual_of(e0).faces();
    let r = radius as i32;
    let dual = two_disjoint_paths(
        b.num_faces(),
        b.face_index(&f0).expect("inside"),
        b.face_index(&f1).expect("inside"),
        |i| {
            let f = b.face_at(i);
            f.x == -r || f.y == -r || f.x == r - 1 || f.y == r - 1
        },
        |i, out| {
            out.clear();
            let f = b.face_at(i);
            for (g, e) in f.across().into_iter().zip(f.sides()) {
                if e != e0 && label(&e) > p {
                    if let Some(j) = b.face_index(&g) {
                        out.push(j);
                    }
                }
            }
        },
    );
    Ok(dual)
}

/// Estimate of the alternating four-arm probability `π₄(radius)` at `p = 1/2`.
pub fn four_arm_prob(radius: u32, mc: &MonteCarlo) -> Result<EstimateReport> {
    if radius == 0 {
        return Err(FppError::invalid("radius must be positive"));
    }
    let region = LatticeBox::new(radius);
    let hits = mc.count(|rng, _| {
        let u = UniformConfig::sample(region, rng);
        four_arm_event(&u, radius, 0.5).expect("radius fits")
    });
    Ok(EstimateReport::from_counts(
        "four_arm_prob",
        serde_json::json!({ "radius": radius }),
        hits,
        mc.samples,
        mc.seed,
    ))
}

/// Edges satisfying all three conditions of the event `𝔒_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OkDetection {
    pub k: u32,
    pub r: u32,
    pub p_k: f64,
    pub edges: Vec<Edge>,
}

impl OkDetection {
    pub fn occurs(&self) -> bool {
        !self.edges.is_empty()
    }
}

fn ok_scales(k: u32, r: u32) -> Result<[u32; 4]> {
    let p = |e: u32| r.checked_pow(e).ok_or_else(|| FppError::invalid(format!("R^{e} overflows")));
    Ok([p(3 * k)?, p(3 * k + 1)?, p(3 * k + 2)?, p(3 * k + 3)?])
}

/// Detector for `𝔒_k`: an edge `e` of `Ann(R^{3k+1}, R^{3k+2})` with
/// (1) `U_e ∈ (p_k, 2p_k − 1/2)`;
/// (2) one endpoint joined to `∂B(R^{3k})` and the other to `∂B(R^{3k+3})`
/// by edge-disjoint `1/2`-open paths;
/// (3) a `(2p_k − 1/2)`-closed dual path in `Ann(R^{3k}, R^{3k+3})` between
/// the endpoints of `e*` that closes up with `e*` into a dual circuit around
/// the origin.
///
/// Condition (3) is checked first. Once it holds, the two sides of `e*` lie in
/// different components of the complement of the dual circuit, and `1/2`-open
/// paths cannot cross it, so the paths in (2) are automatically disjoint and
/// (2) reduces to two connectivity queries.
pub fn detect_o_k(u: &UniformConfig, k: u32, r: u32, p_k: f64) -> Result<OkDetection> {
    if r < 2 || !(p_k > 0.5 && p_k < 0.75) {
        return Err(FppError::invalid("need R >= 2 and p_k in (1/2, 3/4)"));
    }
    let [a1, m1, m2, a2] = ok_scales(k, r)?;
    let b = u.region();
    if a2 > b.n {
        return Err(FppError::OutOfRegion(format!("R^(3k+3) = {a2} exceeds region B({})", b.n)));
    }
    let q = 2.0 * p_k - 0.5;
    let middle = Annulus::new(m1, m2)?;

    // 1/2-open clusters of the closed annulus a1 ≤ ‖v‖ ≤ a2.
    let mut dsu = Dsu::new(b.num_vertices());
    for i in 0..b.num_edges() {
        let e = b.edge_at(i);
        let (x, y) = e.endpoints();
        let inside = |v: Vertex| (a1..=a2).contains(&v.norm());
        if inside(x) && inside(y) && u.values()[i] <= 0.5 {
            dsu.union(b.vertex_index(x).expect("inside"), b.vertex_index(y).expect("inside"));
        }
    }
    let mut touches_inner = vec![false; b.num_vertices()];
    let mut touches_outer = vec![false; b.num_vertices()];
    for v in LatticeBox::new(a2).vertices() {
        let n = v.norm();
        if n == a1 || n == a2 {
            let root = dsu.find(b.vertex_index(v).expect("inside"));
            if n == a1 {
                touches_inner[root] = true;
            } else {
                touches_outer[root] = true;
            }
        }
    }

    let mut edges = Vec::new();
    for i in 0..b.num_edges() {
        let ue = u.values()[i];
        if !(ue > p_k && ue < q) {
            continue;
        }
        let e = b.edge_at(i);
        if !middle.contains_edge(&e) {
            continue;
        }
        let (x, y) = e.endpoints();
        let rx = dsu.find(b.vertex_index(x).expect("inside"));
        let ry = dsu.find(b.vertex_index(y).expect("inside"));
        let arms = (touches_inner[rx] && touches_outer[ry]) || (touches_outer[rx] && touches_inner[ry]);
        if arms && closed_dual_circuit_through(u, e, a1, a2, q) {
            edges.push(e);
        }
    }
    Ok(OkDetection { k, r, p_k, edges })
}

/// Crossing parity of a dual step with the ray `{(x, 0) : x > 0}`: the dual
/// edges crossing it bisect the primal edges `(i, 0)–(i+1, 0)`, `i ≥ 0`.
fn crosses_ray(e: &Edge) -> bool {
    let v = e.base();
    e.dir() == crate::lattice::Dir::E && v.y == 0 && v.x >= 0
}

/// Is there a walk of `q`-closed dual edges between the faces of `e*`, through
/// faces strictly between `∂B(a1)` and `∂B(a2)`, whose union with `e*` winds an
/// odd number of times around the origin?
fn closed_dual_circuit_through(u: &UniformConfig, e: Edge, a1: u32, a2: u32, q: f64) -> bool {
    let b = LatticeBox::new(a2);
    let allowed = |f: &Face| {
        // Centre norm lies in [a1 + 1/2, a2 − 1/2].
        let m = (2 * f.x + 1).abs().max((2 * f.y + 1).abs()) as u32;
        b.contains_face(f) && m > 2 * a1
    };
    let (start, goal) = dual_of(e).faces();
    if !allowed(&start) || !allowed(&goal) {
        return false;
    }
    let want = !crosses_ray(&e);
    let idx = |f: &Face, parity: bool| 2 * b.face_index(f).expect("inside") + parity as usize;
    let mut seen = vec![false; 2 * b.num_faces()];
    seen[idx(&start, false)] = true;
    let mut queue = VecDeque::from([(start, false)]);
    while let Some((f, parity)) = queue.pop_front() {
        if f == goal && parity == want {
            return true;
        }
        for (g, side) in f.across().into_iter().zip(f.sides()) {
            if side == e || !allowed(&g) || u.get(&side).is_none_or(|x| x <= q) {
                continue;
            }
            let np = parity ^ crosses_ray(&side);
            let j = idx(&g, np);
            if !seen[j] {
                seen[j] = true;
                queue.push_back((g, np));
            }
        }
    }
    false
}

/// The passage time between `𝔉₁ = ∂B(R^{3k})` and `𝔉₂ = ∂B(R^{3k+3})` under
/// `t_e = F⁻¹(U_e)`, with the bracket `[F⁻¹(p_k), F⁻¹(2p_k − 1/2)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub time: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.time && self.time <= self.upper
    }
}

pub fn ok_sandwich(u: &UniformConfig, k: u32, r: u32, p_k: f64, sampler: &Sampler) -> Result<Sandwich> {
    let [a1, _, _, a2] = ok_scales(k, r)?;
    if a2 > u.region().n {
        return Err(FppError::OutOfRegion("R^(3k+3) exceeds region".into()));
    }
    let cfg = u.weights(sampler);
    let inner = LatticeBox::new(a1).boundary();
    let time = distance_to_set(&cfg, &inner, |v| v.norm() == a2);
    Ok(Sandwich {
        lower: sampler.quantile(p_k),
        time,
        upper: sampler.quantile(2.0 * p_k - 0.5),
    })
}
