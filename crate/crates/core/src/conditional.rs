//! Conditional Monte Carlo under `{T(0, ∂B(n)) ≤ L}` and `{T(0, ∂B(n)) = 0}`
//! by plain rejection, with cylinder events given in a small expression
//! language:
//!
//! ```text
//! expr  := term ("or" term)*
//! term  := unary ("and" unary)*
//! unary := "not" unary | "(" expr ")" | atom
//! atom  := "true" | "false"
//!        | "edge(" int "," int "," ("E"|"N") ")" cmp rational
//!        | "ball(" int ")" cmp rational
//! cmp   := ">=" | ">" | "<=" | "<" | "==" | "!="
//! ```
//!
//! `edge(x, y, E)` is the weight of the edge from `(x, y)` to `(x+1, y)`
//! (`N`: to `(x, y+1)`); `ball(K)` is `T(0, ∂B(K))`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::exec::{open_unit, MonteCarlo};
use crate::lattice::{enumerate_edges, Dir, Edge, LatticeBox, Vertex, WeightConfig};
use crate::passage::{t_to_boundary, t_to_boundary_within};
use crate::rational::{format_rational, from_f64, parse_rational, to_f64};
use crate::stats::{binomial_se, wilson, Z95};
use crate::weights::{CriticalClass, Sampler, WeightDistribution};

/// Fewest accepted samples for a usable conditional estimate.
pub const MIN_ACCEPTED: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
    Ne,
}

impl Cmp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            Cmp::Ge => ord != Ordering::Less,
            Cmp::Gt => ord == Ordering::Greater,
            Cmp::Le => ord != Ordering::Greater,
            Cmp::Lt => ord == Ordering::Less,
            Cmp::Eq => ord == Ordering::Equal,
            Cmp::Ne => ord != Ordering::Equal,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
        }
    }
}

/// An event depending on finitely many edge weights.
#[derive(Clone, Debug, PartialEq)]
pub enum CylinderEvent {
    True,
    False,
    Edge { edge: Edge, cmp: Cmp, value: BigRational },
    /// `T(0, ∂B(k)) cmp value`.
    Ball { k: u32, cmp: Cmp, value: BigRational },
    Not(Box<CylinderEvent>),
    And(Box<CylinderEvent>, Box<CylinderEvent>),
    Or(Box<CylinderEvent>, Box<CylinderEvent>),
}

fn compare(w: f64, value: &BigRational) -> Ordering {
    from_f64(w).cmp(value)
}

impl CylinderEvent {
    pub fn parse(s: &str) -> Result<CylinderEvent> {
        Parser::new(s)?.parse_all()
    }

    pub fn edge(x: i32, y: i32, dir: Dir, cmp: Cmp, value: BigRational) -> Self {
        CylinderEvent::Edge {
            edge: Edge::from_dir(Vertex::new(x, y), dir),
            cmp,
            value,
        }
    }

    pub fn ball(k: u32, cmp: Cmp, value: BigRational) -> Self {
        CylinderEvent::Ball { k, cmp, value }
    }

    pub fn and(self, other: CylinderEvent) -> Self {
        CylinderEvent::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: CylinderEvent) -> Self {
        CylinderEvent::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        CylinderEvent::Not(Box::new(self))
    }

    /// Edges the event depends on, sorted.
    pub fn support(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        self.collect_support(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_support(&self, out: &mut Vec<Edge>) {
        match self {
            CylinderEvent::True | CylinderEvent::False => {}
            CylinderEvent::Edge { edge, .. } => out.push(*edge),
            CylinderEvent::Ball { k, .. } => out.extend(enumerate_edges(LatticeBox::new(*k))),
            CylinderEvent::Not(a) => a.collect_support(out),
            CylinderEvent::And(a, b) | CylinderEvent::Or(a, b) => {
                a.collect_support(out);
                b.collect_support(out);
            }
        }
    }

    /// Smallest box containing the support.
    pub fn radius(&self) -> u32 {
        self.support()
            .iter()
            .map(|e| {
                let (a, b) = e.endpoints();
                a.norm().max(b.norm())
            })
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, config: &WeightConfig<f64>) -> Result<bool> {
        Ok(match self {
            CylinderEvent::True => true,
            CylinderEvent::False => false,
            CylinderEvent::Edge { edge, cmp, value } => {
                let w = config.get(edge).ok_or_else(|| {
                    FppError::OutOfRegion(format!("edge {edge} not in B({})", config.region().n))
                })?;
                cmp.holds(compare(*w, value))
            }
            CylinderEvent::Ball { k, cmp, value } => cmp.holds(compare(t_to_boundary(config, *k)?, value)),
            CylinderEvent::Not(a) => !a.eval(config)?,
            CylinderEvent::And(a, b) => a.eval(config)? && b.eval(config)?,
            CylinderEvent::Or(a, b) => a.eval(config)? || b.eval(config)?,
        })
    }

    /// True when every primitive reads only the indicators `1{t_e > 0}`.
    pub fn depends_only_on_indicators(&self) -> bool {
        match self {
            CylinderEvent::True | CylinderEvent::False => true,
            CylinderEvent::Edge { cmp, value, .. } => {
                value.is_zero() && matches!(cmp, Cmp::Eq | Cmp::Ne | Cmp::Gt | Cmp::Le)
            }
            CylinderEvent::Ball { .. } => false,
            CylinderEvent::Not(a) => a.depends_only_on_indicators(),
            CylinderEvent::And(a, b) | CylinderEvent::Or(a, b) => {
                a.depends_only_on_indicators() && b.depends_only_on_indicators()
            }
        }
    }

    /// True when the event is increasing in every weight.
    pub fn is_increasing(&self) -> bool {
        match self {
            CylinderEvent::True | CylinderEvent::False => true,
            CylinderEvent::Edge { cmp, .. } | CylinderEvent::Ball { cmp, .. } => matches!(cmp, Cmp::Ge | Cmp::Gt),
            CylinderEvent::Not(_) => false,
            CylinderEvent::And(a, b) | CylinderEvent::Or(a, b) => a.is_increasing() && b.is_increasing(),
        }
    }
}

impl fmt::Display for CylinderEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CylinderEvent::True => write!(f, "true"),
            CylinderEvent::False => write!(f, "false"),
            CylinderEvent::Edge { edge, cmp, value } => write!(
                f,
                "edge({},{},{}) {} {}",
                edge.base().x,
                edge.base().y,
                edge.dir().as_str(),
                cmp.symbol(),
                format_rational(value)
            ),
            CylinderEvent::Ball { k, cmp, value } => {
                write!(f, "ball({k}) {} {}", cmp.symbol(), format_rational(value))
            }
            CylinderEvent::Not(a) => write!(f, "not ({a})"),
            CylinderEvent::And(a, b) => write!(f, "({a}) and ({b})"),
            CylinderEvent::Or(a, b) => write!(f, "({a}) or ({b})"),
        }
    }
}

impl Serialize for CylinderEvent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CylinderEvent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CylinderEvent::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Op(Cmp),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(s: &str) -> Result<Parser> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = s.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            match c {
                c if c.is_whitespace() => i += 1,
                '(' => {
                    tokens.push(Token::LParen);
                    i += 1;
                }
                ')' => {
                    tokens.push(Token::RParen);
                    i += 1;
                }
                ',' => {
                    tokens.push(Token::Comma);
                    i += 1;
                }
                '<' | '>' | '=' | '!' => {
                    let two = chars.get(i + 1) == Some(&'=');
                    let op = match (c, two) {
                        ('>', true) => Cmp::Ge,
                        ('>', false) => Cmp::Gt,
                        ('<', true) => Cmp::Le,
                        ('<', false) => Cmp::Lt,
                        ('=', true) => Cmp::Eq,
                        ('!', true) => Cmp::Ne,
                        _ => return Err(FppError::Parse(format!("bad operator at {i} in {s:?}"))),
                    };
                    tokens.push(Token::Op(op));
                    i += if two { 2 } else { 1 };
                }
                c if c.is_ascii_digit() || c == '-' || c == '.' => {
                    let start = i;
                    i += 1;
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/' || chars[i] == '.') {
                        i += 1;
                    }
                    tokens.push(Token::Number(chars[start..i].iter().collect()));
                }
                c if c.is_ascii_alphabetic() => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    tokens.push(Token::Ident(chars[start..i].iter().collect()));
                }
                _ => return Err(FppError::Parse(format!("unexpected {c:?} in {s:?}"))),
            }
        }
        Ok(Parser { tokens, pos: 0 })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| FppError::Parse("unexpected end of event".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(FppError::Parse(format!("expected {want:?}, found {got:?}")));
        }
        Ok(())
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(s)) if s == kw)
    }

    fn parse_all(mut self) -> Result<CylinderEvent> {
        let e = self.expr()?;
        if let Some(t) = self.peek() {
            return Err(FppError::Parse(format!("trailing input at {t:?}")));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<CylinderEvent> {
        let mut e = self.term()?;
        while self.keyword("or") {
            self.pos += 1;
            e = e.or(self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<CylinderEvent> {
        let mut e = self.unary()?;
        while self.keyword("and") {
            self.pos += 1;
            e = e.and(self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<CylinderEvent> {
        if self.keyword("not") {
            self.pos += 1;
            return Ok(self.unary()?.not());
        }
        if self.peek() == Some(&Token::LParen) {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(Token::RParen)?;
            return Ok(e);
        }
        self.atom()
    }

    fn int(&mut self) -> Result<i64> {
        match self.next()? {
            Token::Number(s) => s.parse().map_err(|_| FppError::Parse(format!("expected integer, found {s:?}"))),
            t => Err(FppError::Parse(format!("expected integer, found {t:?}"))),
        }
    }

    fn comparison(&mut self) -> Result<(Cmp, BigRational)> {
        let cmp = match self.next()? {
            Token::Op(c) => c,
            t => return Err(FppError::Parse(format!("expected comparison, found {t:?}"))),
        };
        let value = match self.next()? {
            Token::Number(s) => parse_rational(&s)?,
            t => return Err(FppError::Parse(format!("expected number, found {t:?}"))),
        };
        Ok((cmp, value))
    }

    fn atom(&mut self) -> Result<CylinderEvent> {
        let name = match self.next()? {
            Token::Ident(s) => s,
            t => return Err(FppError::Parse(format!("expected event, found {t:?}"))),
        };
        let coord = |v: i64| i32::try_from(v).map_err(|_| FppError::Parse("coordinate out of range".into()));
        match name.as_str() {
            "true" => Ok(CylinderEvent::True),
            "false" => Ok(CylinderEvent::False),
            "edge" => {
                self.expect(Token::LParen)?;
                let x = coord(self.int()?)?;
                self.expect(Token::Comma)?;
                let y = coord(self.int()?)?;
                self.expect(Token::Comma)?;
                let dir = match self.next()? {
                    Token::Ident(d) => Dir::parse(&d)?,
                    t => return Err(FppError::Parse(format!("expected E or N, found {t:?}"))),
                };
                self.expect(Token::RParen)?;
                let (cmp, value) = self.comparison()?;
                Ok(CylinderEvent::edge(x, y, dir, cmp, value))
            }
            "ball" => {
                self.expect(Token::LParen)?;
                let k = u32::try_from(self.int()?).map_err(|_| FppError::Parse("ball radius must be >= 0".into()))?;
                self.expect(Token::RParen)?;
                let (cmp, value) = self.comparison()?;
                Ok(CylinderEvent::ball(k, cmp, value))
            }
            _ => Err(FppError::Parse(format!("unknown primitive {name:?}"))),
        }
    }
}

/// Conditioning level `L`; `None` means no conditioning.
pub type Level = Option<BigRational>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEstimate {
    pub event: String,
    pub n: u32,
    /// `"p/q"`, or `"inf"` for no conditioning.
    pub level: String,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub hits: u64,
    pub accepted: u64,
    pub total: u64,
    pub acceptance_rate: f64,
    pub seed: u64,
}

impl ConditionalEstimate {
    fn new(event: &CylinderEvent, n: u32, level: &Level, hits: u64, accepted: u64, mc: &MonteCarlo) -> Self {
        let (ci_lo, ci_hi) = wilson(hits, accepted, Z95);
        ConditionalEstimate {
            event: event.to_string(),
            n,
            level: level.as_ref().map_or_else(|| "inf".to_string(), format_rational),
            estimate: hits as f64 / accepted as f64,
            ci_lo,
            ci_hi,
            hits,
            accepted,
            total: mc.samples,
            acceptance_rate: accepted as f64 / mc.samples as f64,
            seed: mc.seed,
        }
    }

    pub fn std_error(&self) -> f64 {
        binomial_se(self.hits, self.accepted)
    }
}

fn require_critical(dist: &WeightDistribution) -> Result<()> {
    match dist.classify() {
        CriticalClass::CriticalFinite | CriticalClass::CriticalInfinite => Ok(()),
        c => Err(FppError::invalid(format!("distribution is {c:?}; F(0) = 1/2 required"))),
    }
}

pub fn parse_level(s: &str) -> Result<Level> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(None),
        t => {
            let q = parse_rational(t)?;
            if q.is_negative() {
                return Err(FppError::invalid("L must be nonnegative"));
            }
            Ok(Some(q))
        }
    }
}

/// Does `T(0, ∂B(n)) ≤ L` hold? Passage times are float sums, compared exactly with `L`.
fn accepts(config: &WeightConfig<f64>, n: u32, level: &Level) -> bool {
    match level {
        None => true,
        Some(l) => {
            // Explore slightly past L in floats, then settle the comparison exactly.
            let bound = to_f64(l) * (1.0 + 1e-12) + 1e-300;
            match t_to_boundary_within(config, n, &bound).expect("n within region") {
                Some(t) => from_f64(t) <= *l,
                None => false,
            }
        }
    }
}

/// `P(E | T(0, ∂B(n)) ≤ L)` by rejection over `mc.samples` draws.
pub fn estimate_conditional(
    dist: &WeightDistribution,
    event: &CylinderEvent,
    n: u32,
    level: &Level,
    mc: &MonteCarlo,
) -> Result<ConditionalEstimate> {
    require_critical(dist)?;
    if event.radius() > n {
        return Err(FppError::OutOfRegion(format!("event support leaves B({n})")));
    }
    let sampler = dist.sampler();
    let region = LatticeBox::new(n);
    let outcomes = mc.map(|rng, _| {
        let (cfg, _) = sampler.sample_config(region, rng);
        if accepts(&cfg, n, level) {
            Some(event.eval(&cfg).expect("support checked"))
        } else {
            None
        }
    });
    let accepted = outcomes.iter().flatten().count() as u64;
    let hits = outcomes.iter().flatten().filter(|&&h| h).count() as u64;
    if accepted < MIN_ACCEPTED {
        return Err(FppError::ConditioningTooRare {
            accepted,
            budget: mc.samples,
        });
    }
    Ok(ConditionalEstimate::new(event, n, level, hits, accepted, mc))
}

/// Independent draws split as `t_e = t_e^B · s_e` with `t_e^B = 1{t_e > 0}`
/// and `s_e` from the law of `t_e` given `t_e > 0`.
struct ProductSampler {
    p_positive: f64,
    positive: Sampler,
}

impl ProductSampler {
    fn new(dist: &WeightDistribution) -> Result<Self> {
        let p0 = dist.zero_mass();
        Ok(ProductSampler {
            p_positive: to_f64(&(BigRational::one() - p0)),
            positive: dist.positive_part()?.sampler(),
        })
    }

    /// Indicator and positive-part configurations on `B(n)`.
    fn draw<R: RngCore + ?Sized>(&self, region: LatticeBox, rng: &mut R) -> (WeightConfig<f64>, WeightConfig<f64>) {
        let m = region.num_edges();
        let ind: Vec<f64> = (0..m)
            .map(|_| if open_unit(rng) <= self.p_positive { 1.0 } else { 0.0 })
            .collect();
        let s: Vec<f64> = (0..m).map(|_| self.positive.sample(rng)).collect();
        (
            WeightConfig::from_vec(region, ind).expect("valid"),
            WeightConfig::from_vec(region, s).expect("valid"),
        )
    }
}

fn product(ind: &WeightConfig<f64>, s: &WeightConfig<f64>) -> WeightConfig<f64> {
    let w = ind.weights().iter().zip(s.weights()).map(|(a, b)| a * b).collect();
    WeightConfig::from_vec(ind.region(), w).expect("valid")
}

fn zero_connected(ind: &WeightConfig<f64>, n: u32) -> bool {
    t_to_boundary_within(ind, n, &0.0).expect("n within region").is_some()
}

/// One draw of the finite-volume stand-in for `ν̃`: an indicator
/// configuration conditioned on `T^B(0, ∂B(n)) = 0`, multiplied entrywise by
/// independent positive parts. Returns the configuration and the number of
/// attempts it took.
pub fn sample_nu_tilde<R: RngCore + ?Sized>(
    dist: &WeightDistribution,
    proxy_n: u32,
    budget: u64,
    rng: &mut R,
) -> Result<(WeightConfig<f64>, u64)> {
    require_critical(dist)?;
    let ps = ProductSampler::new(dist)?;
    let region = LatticeBox::new(proxy_n);
    for attempt in 1..=budget {
        let (ind, s) = ps.draw(region, rng);
        if zero_connected(&ind, proxy_n) {
            return Ok((product(&ind, &s), attempt));
        }
    }
    Err(FppError::ConditioningTooRare { accepted: 0, budget })
}

/// `mc.samples` independent `ν̃` draws, one per replica stream.
pub fn nu_tilde_samples(
    dist: &WeightDistribution,
    proxy_n: u32,
    budget_per_sample: u64,
    mc: &MonteCarlo,
) -> Result<Vec<(WeightConfig<f64>, u64)>> {
    mc.map(|rng, _| sample_nu_tilde(dist, proxy_n, budget_per_sample, rng))
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub n: u32,
    pub d1: String,
    pub d2: String,
    /// `P(t^B ∈ D1, s ∈ D2 | T = 0)`.
    pub joint: f64,
    /// `P(t^B ∈ D1 | T^B = 0)`, from the same accepted draws.
    pub conditional_d1: f64,
    /// `P(s ∈ D2)`, from an independent stream.
    pub marginal_d2: f64,
    pub product: f64,
    pub difference: f64,
    /// 95% half-width for the difference; treats the two sides as independent,
    /// which overstates the variance since they share draws.
    pub half_width: f64,
    pub accepted: u64,
    pub total: u64,
}

impl FactorizationReport {
    pub fn consistent(&self) -> bool {
        self.difference.abs() <= self.half_width
    }
}

/// Compares `P(t^B ∈ D1, s ∈ D2 | T(0, ∂B(n)) = 0)` with
/// `P(s ∈ D2) · P(t^B ∈ D1 | T^B(0, ∂B(n)) = 0)`.
pub fn factorization_check(
    dist: &WeightDistribution,
    d1: &CylinderEvent,
    d2: &CylinderEvent,
    n: u32,
    mc: &MonteCarlo,
) -> Result<FactorizationReport> {
    require_critical(dist)?;
    if !d1.depends_only_on_indicators() {
        return Err(FppError::invalid("D1 must depend only on the indicators 1{t_e > 0}"));
    }
    if d1.radius() > n || d2.radius() > n {
        return Err(FppError::OutOfRegion(format!("event support leaves B({n})")));
    }
    let ps = ProductSampler::new(dist)?;
    let region = LatticeBox::new(n);
    let draws = mc.map(|rng, _| {
        let (ind, s) = ps.draw(region, rng);
        if !zero_connected(&ind, n) {
            return None;
        }
        let a = d1.eval(&ind).expect("support checked");
        let b = d2.eval(&s).expect("support checked");
        Some((a, b))
    });
    let accepted = draws.iter().flatten().count() as u64;
    if accepted < MIN_ACCEPTED {
        return Err(FppError::ConditioningTooRare {
            accepted,
            budget: mc.samples,
        });
    }
    let joint_hits = draws.iter().flatten().filter(|(a, b)| *a && *b).count() as u64;
    let d1_hits = draws.iter().flatten().filter(|(a, _)| *a).count() as u64;

    let marginal_mc = mc.substream(0xD2);
    let d2_region = LatticeBox::new(d2.radius().max(1));
    let d2_hits = marginal_mc.count(|rng, _| {
        let s: Vec<f64> = (0..d2_region.num_edges()).map(|_| ps.positive.sample(rng)).collect();
        d2.eval(&WeightConfig::from_vec(d2_region, s).expect("valid")).expect("support fits")
    });

    let frac = |h: u64, n: u64| h as f64 / n as f64;
    let joint = frac(joint_hits, accepted);
    let a = frac(d1_hits, accepted);
    let b = frac(d2_hits, marginal_mc.samples);
    let se_joint = binomial_se(joint_hits, accepted);
    let se_a = binomial_se(d1_hits, accepted);
    let se_b = binomial_se(d2_hits, marginal_mc.samples);
    let se_prod = (b * b * se_a * se_a + a * a * se_b * se_b).sqrt();
    Ok(FactorizationReport {
        n,
        d1: d1.to_string(),
        d2: d2.to_string(),
        joint,
        conditional_d1: a,
        marginal_d2: b,
        product: a * b,
        difference: joint - a * b,
        half_width: Z95 * (se_joint * se_joint + se_prod * se_prod).sqrt(),
        accepted,
        total: mc.samples,
    })
}

/// `P(T(0, ∂B(K)) ≥ F⁻¹(η) | T(0, ∂B(n)) ≤ L)` for each `n` in `n_list`.
pub fn convergence_probe(
    dist: &WeightDistribution,
    k: u32,
    eta: &BigRational,
    level: &Level,
    n_list: &[u32],
    mc: &MonteCarlo,
) -> Result<Vec<ConditionalEstimate>> {
    if dist.classify() != CriticalClass::CriticalInfinite {
        return Err(FppError::invalid("convergence probe needs a critical law with divergent a_k sum"));
    }
    if eta <= &crate::rational::rat(1, 2) || eta >= &BigRational::one() {
        return Err(FppError::invalid("eta must lie in (1/2, 1)"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FppError::invalid("n_list must be increasing"));
    }
    let delta = dist.quantile(eta)?;
    let event = CylinderEvent::ball(k, Cmp::Ge, delta);
    n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| estimate_conditional(dist, &event, n, level, &mc.substream(i as u64)))
        .collect()
}
