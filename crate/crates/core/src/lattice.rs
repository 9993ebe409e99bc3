//! Geometry of the square lattice: vertices, edges, boxes, annuli, the dual
//! lattice, paths, circuits and weight configurations.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{FppError, Result};
use crate::rational::{format_rational, from_f64, parse_rational, to_f64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

pub const ORIGIN: Vertex = Vertex { x: 0, y: 0 };

impl Vertex {
    pub const fn new(x: i32, y: i32) -> Self {
        Vertex { x, y }
    }

    /// ‖v‖∞
    pub fn norm(&self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    pub fn l1(&self, other: &Vertex) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn neighbors(&self) -> [Vertex; 4] {
        let Vertex { x, y } = *self;
        [
            Vertex::new(x + 1, y),
            Vertex::new(x, y + 1),
            Vertex::new(x - 1, y),
            Vertex::new(x, y - 1),
        ]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Direction of an edge from its canonical (smaller) endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    E,
    N,
}

impl Dir {
    pub fn parse(s: &str) -> Result<Dir> {
        match s {
            "E" | "e" => Ok(Dir::E),
            "N" | "n" => Ok(Dir::N),
            _ => Err(FppError::Parse(format!("direction must be E or N, got {s:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Dir::E => "E",
            Dir::N => "N",
        }
    }
}

/// A nearest-neighbour edge, stored with the lexicographically smaller endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    a: Vertex,
    b: Vertex,
}

impl Edge {
    pub fn new(u: Vertex, v: Vertex) -> Result<Edge> {
        if u.l1(&v) != 1 {
            return Err(FppError::invalid(format!("{u} and {v} are not adjacent")));
        }
        Ok(if u <= v { Edge { a: u, b: v } } else { Edge { a: v, b: u } })
    }

    pub fn from_dir(v: Vertex, dir: Dir) -> Edge {
        let b = match dir {
            Dir::E => Vertex::new(v.x + 1, v.y),
            Dir::N => Vertex::new(v.x, v.y + 1),
        };
        Edge { a: v, b }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.a, self.b)
    }

    pub fn base(&self) -> Vertex {
        self.a
    }

    pub fn dir(&self) -> Dir {
        if self.a.y == self.b.y {
            Dir::E
        } else {
            Dir::N
        }
    }

    pub fn other(&self, v: Vertex) -> Option<Vertex> {
        if v == self.a {
            Some(self.b)
        } else if v == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn has(&self, v: Vertex) -> bool {
        self.a == v || self.b == v
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// A face of the lattice, i.e. a dual vertex, named by its lower-left corner.
/// Its centre is `(x + 1/2, y + 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub x: i32,
    pub y: i32,
}

impl Face {
    pub const fn new(x: i32, y: i32) -> Self {
        Face { x, y }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }

    /// The four primal edges bounding this face: bottom, right, top, left.
    pub fn sides(&self) -> [Edge; 4] {
        let (x, y) = (self.x, self.y);
        [
            Edge::from_dir(Vertex::new(x, y), Dir::E),
            Edge::from_dir(Vertex::new(x + 1, y), Dir::N),
            Edge::from_dir(Vertex::new(x, y + 1), Dir::E),
            Edge::from_dir(Vertex::new(x, y), Dir::N),
        ]
    }

    /// Neighbouring faces in the same order as [`Face::sides`].
    pub fn across(&self) -> [Face; 4] {
        let (x, y) = (self.x, self.y);
        [
            Face::new(x, y - 1),
            Face::new(x + 1, y),
            Face::new(x, y + 1),
            Face::new(x - 1, y),
        ]
    }
}

/// The dual edge bisecting a primal edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    primal: Edge,
}

impl DualEdge {
    /// The two faces it joins, in increasing order.
    pub fn faces(&self) -> (Face, Face) {
        let Vertex { x, y } = self.primal.a;
        match self.primal.dir() {
            Dir::E => (Face::new(x, y - 1), Face::new(x, y)),
            Dir::N => (Face::new(x - 1, y), Face::new(x, y)),
        }
    }

    /// Endpoint coordinates in the offset lattice `(ℤ + 1/2)²`.
    pub fn endpoints(&self) -> ((f64, f64), (f64, f64)) {
        let (f, g) = self.faces();
        (f.center(), g.center())
    }

    /// The dual edge joining two adjacent faces.
    pub fn between(f: Face, g: Face) -> Option<DualEdge> {
        let k = f.across().iter().position(|h| *h == g)?;
        Some(dual_of(f.sides()[k]))
    }
}

pub fn dual_of(edge: Edge) -> DualEdge {
    DualEdge { primal: edge }
}

pub fn primal_of(d: DualEdge) -> Edge {
    d.primal
}

/// The box `B(n) = [-n, n]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub n: u32,
}

impl LatticeBox {
    pub const fn new(n: u32) -> Self {
        LatticeBox { n }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.norm() <= self.n
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.contains(e.a) && self.contains(e.b)
    }

    pub fn num_vertices(&self) -> usize {
        let s = 2 * self.n as usize + 1;
        s * s
    }

    pub fn num_edges(&self) -> usize {
        let n = self.n as usize;
        4 * n * (2 * n + 1)
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        let n = self.n as i32;
        (-n..=n).flat_map(move |x| (-n..=n).map(move |y| Vertex::new(x, y)))
    }

    /// `∂B(n)`, in lexicographic order.
    pub fn boundary(&self) -> Vec<Vertex> {
        let n = self.n;
        self.vertices().filter(|v| v.norm() == n).collect()
    }

    pub fn vertex_index(&self, v: Vertex) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        let n = self.n as i32;
        let s = 2 * n + 1;
        Some(((v.x + n) * s + (v.y + n)) as usize)
    }

    pub fn vertex_at(&self, i: usize) -> Vertex {
        let n = self.n as i32;
        let s = 2 * n + 1;
        let i = i as i32;
        Vertex::new(i / s - n, i % s - n)
    }

    /// Position of `e` in [`enumerate_edges`] order.
    pub fn edge_index(&self, e: &Edge) -> Option<usize> {
        if !self.contains_edge(e) {
            return None;
        }
        let n = self.n as usize;
        let col = (e.a.x + self.n as i32) as usize;
        let j = (e.a.y + self.n as i32) as usize;
        let per_col = 4 * n + 1;
        let off = match e.dir() {
            Dir::N if col == 2 * n => j,
            Dir::N => 2 * j,
            Dir::E if j == 2 * n => 4 * n,
            Dir::E => 2 * j + 1,
        };
        Some(col * per_col + off)
    }

    pub fn edge_at(&self, i: usize) -> Edge {
        let n = self.n as usize;
        let per_col = 4 * n + 1;
        let (col, off) = (i / per_col, i % per_col);
        let x = col as i32 - self.n as i32;
        if col == 2 * n {
            return Edge::from_dir(Vertex::new(x, off as i32 - self.n as i32), Dir::N);
        }
        let (j, dir) = if off == 4 * n {
            (2 * n, Dir::E)
        } else if off % 2 == 0 {
            (off / 2, Dir::N)
        } else {
            (off / 2, Dir::E)
        };
        Edge::from_dir(Vertex::new(x, j as i32 - self.n as i32), dir)
    }

    /// Neighbours of `v` inside the box, with the index of the joining edge.
    pub fn incident(&self, v: Vertex) -> impl Iterator<Item = (Vertex, usize)> + '_ {
        v.neighbors().into_iter().filter_map(move |w| {
            let e = Edge::new(v, w).ok()?;
            Some((w, self.edge_index(&e)?))
        })
    }

    /// Faces whose four corners lie in the box.
    pub fn faces(&self) -> impl Iterator<Item = Face> {
        let n = self.n as i32;
        (-n..n).flat_map(move |x| (-n..n).map(move |y| Face::new(x, y)))
    }

    pub fn contains_face(&self, f: &Face) -> bool {
        let n = self.n as i32;
        f.x >= -n && f.x < n && f.y >= -n && f.y < n
    }

    pub fn num_faces(&self) -> usize {
        let s = 2 * self.n as usize;
        s * s
    }

    pub fn face_index(&self, f: &Face) -> Option<usize> {
        if !self.contains_face(f) {
            return None;
        }
        let n = self.n as i32;
        Some(((f.x + n) * 2 * n + (f.y + n)) as usize)
    }

    pub fn face_at(&self, i: usize) -> Face {
        let n = self.n as i32;
        let s = 2 * n;
        let i = i as i32;
        Face::new(i / s - n, i % s - n)
    }
}

/// Every edge with both endpoints in the box, once each, in increasing order.
pub fn enumerate_edges(b: LatticeBox) -> Vec<Edge> {
    (0..b.num_edges()).map(|i| b.edge_at(i)).collect()
}

/// `Ann(k1, k2) = B(k2) \ B(k1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annulus {
    pub k1: u32,
    pub k2: u32,
}

impl Annulus {
    pub fn new(k1: u32, k2: u32) -> Result<Annulus> {
        if k1 == 0 || k1 >= k2 {
            return Err(FppError::invalid(format!(
                "annulus needs 0 < k1 < k2, got ({k1}, {k2})"
            )));
        }
        Ok(Annulus { k1, k2 })
    }

    pub fn outer(&self) -> LatticeBox {
        LatticeBox::new(self.k2)
    }

    /// An edge belongs to the annulus when both endpoints lie in `B(k2)` and at
    /// least one lies outside `B(k1)`.
    pub fn contains_edge(&self, e: &Edge) -> bool {
        let (a, b) = e.endpoints();
        a.norm() <= self.k2 && b.norm() <= self.k2 && (a.norm() > self.k1 || b.norm() > self.k1)
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        v.norm() <= self.k2 && v.norm() >= self.k1
    }
}

/// An alternating vertex/edge sequence, stored as its vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    vertices: Vec<Vertex>,
}

impl Path {
    pub fn new(vertices: Vec<Vertex>) -> Result<Path> {
        if vertices.is_empty() {
            return Err(FppError::invalid("empty path"));
        }
        for w in vertices.windows(2) {
            if w[0].l1(&w[1]) != 1 {
                return Err(FppError::invalid(format!("{} and {} are not adjacent", w[0], w[1])));
            }
        }
        Ok(Path { vertices })
    }

    pub fn single(v: Vertex) -> Path {
        Path { vertices: vec![v] }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.vertices
            .windows(2)
            .map(|w| Edge::new(w[0], w[1]).expect("validated"))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn start(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn end(&self) -> Vertex {
        *self.vertices.last().expect("nonempty")
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.len() > 1 && self.start() == self.end()
    }

    /// Total weight under `config`; `None` if an edge leaves the region.
    pub fn weight<W: Weight>(&self, config: &WeightConfig<W>) -> Option<W> {
        let mut total = W::zero();
        for e in self.edges() {
            total = total.add(config.get(&e)?);
        }
        Some(total)
    }
}

/// Signed turns of a closed path about the origin, by summing angle increments.
pub fn winding_number(path: &Path) -> Result<i64> {
    if !path.is_closed() {
        return Err(FppError::invalid("winding number needs a closed path"));
    }
    if path.vertices.contains(&ORIGIN) {
        return Err(FppError::invalid("path passes through the origin"));
    }
    Ok(winding_about(path.vertices(), (0.0, 0.0)))
}

/// Winding number of the closed polyline `vertices` about a point not on it.
pub fn winding_about(vertices: &[Vertex], p: (f64, f64)) -> i64 {
    let mut total = 0.0;
    for w in vertices.windows(2) {
        let a = (w[0].y as f64 - p.1).atan2(w[0].x as f64 - p.0);
        let b = (w[1].y as f64 - p.1).atan2(w[1].x as f64 - p.0);
        let mut d = b - a;
        if d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        } else if d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

/// A circuit around the origin, or the trivial circuit `{0}` with no edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Circuit {
    Trivial,
    Closed {
        /// Traversal order; the first vertex is repeated at the end.
        vertices: Vec<Vertex>,
        annulus: Option<Annulus>,
    },
}

impl Circuit {
    /// Validates closure, vertex self-avoidance and winding ±1 about the origin.
    pub fn closed(vertices: Vec<Vertex>, annulus: Option<Annulus>) -> Result<Circuit> {
        let path = Path::new(vertices)?;
        if !path.is_closed() || path.len() < 4 {
            return Err(FppError::invalid("circuit must be a closed path"));
        }
        let body = &path.vertices[..path.vertices.len() - 1];
        let mut sorted = body.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != body.len() {
            return Err(FppError::invalid("circuit revisits a vertex"));
        }
        let w = winding_number(&path)?;
        if w.abs() != 1 {
            return Err(FppError::invalid(format!("circuit winds {w} times about the origin")));
        }
        if let Some(ann) = annulus {
            if let Some(e) = path.edges().iter().find(|e| !ann.contains_edge(e)) {
                return Err(FppError::OutOfRegion(format!(
                    "edge {e} is not in Ann({}, {})",
                    ann.k1, ann.k2
                )));
            }
        }
        Ok(Circuit::Closed {
            vertices: path.vertices,
            annulus,
        })
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Circuit::Trivial)
    }

    /// Distinct vertices (the origin for the trivial circuit).
    pub fn vertices(&self) -> &[Vertex] {
        match self {
            Circuit::Trivial => std::slice::from_ref(&ORIGIN),
            Circuit::Closed { vertices, .. } => &vertices[..vertices.len() - 1],
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        match self {
            Circuit::Trivial => Vec::new(),
            Circuit::Closed { vertices, .. } => vertices
                .windows(2)
                .map(|w| Edge::new(w[0], w[1]).expect("validated"))
                .collect(),
        }
    }

    pub fn max_norm(&self) -> u32 {
        self.vertices().iter().map(Vertex::norm).max().unwrap_or(0)
    }

    pub fn min_norm(&self) -> u32 {
        self.vertices().iter().map(Vertex::norm).min().unwrap_or(0)
    }

    pub fn is_on(&self, v: Vertex) -> bool {
        self.vertices().contains(&v)
    }

    /// True when `p` (not on the circuit) lies in the bounded component of its complement.
    pub fn encloses_point(&self, p: (f64, f64)) -> bool {
        match self {
            Circuit::Trivial => false,
            Circuit::Closed { vertices, .. } => winding_about(vertices, p) != 0,
        }
    }

    /// On the circuit or strictly inside it.
    pub fn covers(&self, v: Vertex) -> bool {
        self.is_on(v) || self.encloses_point((v.x as f64, v.y as f64))
    }

    /// True when every vertex of `inner` lies on or inside `self`.
    pub fn contains_circuit(&self, inner: &Circuit) -> bool {
        inner.vertices().iter().all(|&v| self.covers(v))
    }

    pub fn total_weight<W: Weight>(&self, config: &WeightConfig<W>) -> Option<W> {
        let mut total = W::zero();
        for e in self.edges() {
            total = total.add(config.get(&e)?);
        }
        Some(total)
    }

    pub fn to_json(&self) -> Value {
        match self {
            Circuit::Trivial => json!([[0, 0]]),
            Circuit::Closed { vertices, .. } => {
                Value::Array(vertices.iter().map(|v| json!([v.x, v.y])).collect())
            }
        }
    }
}

/// Numeric carrier for edge weights.
pub trait Weight: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn total_cmp(&self, other: &Self) -> Ordering;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn from_rational(q: &BigRational) -> Result<Self>;
    fn to_rational(&self) -> BigRational;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_rational(q: &BigRational) -> Result<Self> {
        let x = to_f64(q);
        if from_f64(x) != *q {
            return Err(FppError::Unrepresentable(format_rational(q)));
        }
        Ok(x)
    }

    fn to_rational(&self) -> BigRational {
        from_f64(*self)
    }

    fn to_json(&self) -> Value {
        json!(self)
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(x) => x
                .as_f64()
                .ok_or_else(|| FppError::Parse(format!("bad weight {v}"))),
            Value::String(s) => Ok(to_f64(&parse_rational(s)?)),
            _ => Err(FppError::Parse(format!("bad weight {v}"))),
        }
    }
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }

    fn from_rational(q: &BigRational) -> Result<Self> {
        Ok(q.clone())
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(x) if x.is_i64() => Ok(BigRational::from_integer(x.as_i64().unwrap().into())),
            _ => Err(FppError::Parse(format!("rational weights are \"p/q\" strings, got {v}"))),
        }
    }
}

/// A weight for every edge of `B(n)`, indexed as in [`enumerate_edges`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightConfig<W> {
    region: LatticeBox,
    weights: Vec<W>,
}

impl<W: Weight> WeightConfig<W> {
    pub fn from_vec(region: LatticeBox, weights: Vec<W>) -> Result<Self> {
        if weights.len() != region.num_edges() {
            return Err(FppError::invalid(format!(
                "B({}) has {} edges, got {} weights",
                region.n,
                region.num_edges(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.total_cmp(&W::zero()) == Ordering::Less) {
            return Err(FppError::invalid(format!("negative weight {w:?}")));
        }
        Ok(WeightConfig { region, weights })
    }

    pub fn constant(region: LatticeBox, w: W) -> Self {
        WeightConfig {
            region,
            weights: vec![w; region.num_edges()],
        }
    }

    pub fn from_fn(region: LatticeBox, mut f: impl FnMut(Edge) -> W) -> Result<Self> {
        let weights = (0..region.num_edges()).map(|i| f(region.edge_at(i))).collect();
        Self::from_vec(region, weights)
    }

    pub fn region(&self) -> LatticeBox {
        self.region
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn get(&self, e: &Edge) -> Option<&W> {
        self.region.edge_index(e).map(|i| &self.weights[i])
    }

    pub fn at(&self, i: usize) -> &W {
        &self.weights[i]
    }

    pub fn set(&mut self, e: &Edge, w: W) -> Result<()> {
        if w.total_cmp(&W::zero()) == Ordering::Less {
            return Err(FppError::invalid(format!("negative weight {w:?}")));
        }
        let i = self
            .region
            .edge_index(e)
            .ok_or_else(|| FppError::OutOfRegion(format!("edge {e} not in B({})", self.region.n)))?;
        self.weights[i] = w;
        Ok(())
    }

    pub fn map<V: Weight>(&self, f: impl Fn(&W) -> V) -> WeightConfig<V> {
        WeightConfig {
            region: self.region,
            weights: self.weights.iter().map(f).collect(),
        }
    }

    /// `{"n": n, "edges": [[x, y, "E"|"N", w], ...]}`.
    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let e = self.region.edge_at(i);
                json!([e.base().x, e.base().y, e.dir().as_str(), w.to_json()])
            })
            .collect();
        json!({ "n": self.region.n, "edges": edges })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |msg: &str| FppError::Parse(format!("weight config: {msg}"));
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing n"))?;
        let region = LatticeBox::new(u32::try_from(n).map_err(|_| bad("n too large"))?);
        let items = v
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing edges"))?;
        let mut slots: Vec<Option<W>> = vec![None; region.num_edges()];
        for item in items {
            let item = item.as_array().filter(|a| a.len() == 4).ok_or_else(|| bad("entry is not [x, y, dir, w]"))?;
            let coord = |k: usize| {
                item[k]
                    .as_i64()
                    .and_then(|c| i32::try_from(c).ok())
                    .ok_or_else(|| bad("bad coordinate"))
            };
            let dir = Dir::parse(item[2].as_str().ok_or_else(|| bad("bad direction"))?)?;
            let e = Edge::from_dir(Vertex::new(coord(0)?, coord(1)?), dir);
            let i = region
                .edge_index(&e)
                .ok_or_else(|| FppError::OutOfRegion(format!("edge {e} not in B({n})")))?;
            if slots[i].is_some() {
                return Err(bad(&format!("edge {e} listed twice")));
            }
            slots[i] = Some(W::from_json(&item[3])?);
        }
        let weights = slots
            .into_iter()
            .enumerate()
            .map(|(i, w)| w.ok_or_else(|| bad(&format!("edge {} has no weight", region.edge_at(i)))))
            .collect::<Result<Vec<W>>>()?;
        Self::from_vec(region, weights)
    }
}
