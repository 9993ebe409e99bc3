//! Exact laws of independent, finitely supported, nonnegative sums
//! conditioned on `S_n = X_1 + ... + X_n ≤ L`.
//!
//! Every support point and `L` are rescaled to a common integer grid, sums
//! above `L` are discarded, and the truncated law of the sum is built by
//! convolution with big-integer numerators over a shared denominator. The
//! number of grid states (`⌊L·D⌋ + 1` for common denominator `D`) is capped
//! by [`state_cap`].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::partitions::AlphaSequence;
use crate::rational::{format_rational, int, lcm_denominators, parse_rational, q_str, q_str_opt, rat};

pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Grid state cap, overridable through `FPPLAB_STATE_CAP`.
pub fn state_cap() -> u64 {
    std::env::var("FPPLAB_STATE_CAP")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_STATE_CAP)
}

/// A finitely supported law on `[0, ∞)` with rational atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DiscreteVar {
    /// `(value, prob)`, values strictly increasing, probs positive.
    atoms: Vec<(BigRational, BigRational)>,
}

impl DiscreteVar {
    pub fn new(mut atoms: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(FppError::invalid("empty support"));
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(FppError::invalid("repeated support value"));
        }
        if atoms[0].0.is_negative() {
            return Err(FppError::invalid("negative support value"));
        }
        if atoms.iter().any(|(_, p)| !p.is_positive()) {
            return Err(FppError::invalid("atom probabilities must be positive"));
        }
        let total: BigRational = atoms.iter().map(|(_, p)| p).sum();
        if !total.is_one() {
            return Err(FppError::invalid(format!("probabilities sum to {}", format_rational(&total))));
        }
        Ok(DiscreteVar { atoms })
    }

    pub fn point(v: BigRational) -> Self {
        DiscreteVar::new(vec![(v, BigRational::one())]).expect("valid point mass")
    }

    /// `0` with probability `p`, `a` otherwise.
    pub fn two_point(p: BigRational, a: BigRational) -> Result<Self> {
        if p.is_negative() || p > BigRational::one() || !a.is_positive() {
            return Err(FppError::invalid("two-point law needs p in [0,1] and a > 0"));
        }
        let q = BigRational::one() - &p;
        let atoms = [(BigRational::zero(), p), (a, q)]
            .into_iter()
            .filter(|(_, w)| w.is_positive())
            .collect();
        DiscreteVar::new(atoms)
    }

    /// `"v:p, v:p, ..."`.
    pub fn parse(s: &str) -> Result<Self> {
        let atoms = s
            .split(',')
            .map(|part| {
                let (v, p) = part
                    .split_once(':')
                    .ok_or_else(|| FppError::Parse(format!("expected value:prob, found {part:?}")))?;
                Ok((parse_rational(v)?, parse_rational(p)?))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteVar::new(atoms)
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    /// Infimum of the support.
    pub fn inf(&self) -> &BigRational {
        &self.atoms[0].0
    }

    pub fn sup(&self) -> &BigRational {
        &self.atoms[self.atoms.len() - 1].0
    }

    fn mass(&self, keep: impl Fn(&BigRational) -> bool) -> BigRational {
        self.atoms.iter().filter(|(v, _)| keep(v)).map(|(_, p)| p).sum()
    }

    pub fn prob_eq(&self, x: &BigRational) -> BigRational {
        self.mass(|v| v == x)
    }

    pub fn prob_le(&self, x: &BigRational) -> BigRational {
        self.mass(|v| v <= x)
    }

    pub fn prob_ge(&self, x: &BigRational) -> BigRational {
        self.mass(|v| v >= x)
    }

    pub fn prob_gt(&self, x: &BigRational) -> BigRational {
        self.mass(|v| v > x)
    }

    pub fn p_positive(&self) -> BigRational {
        self.mass(|v| v.is_positive())
    }

    /// `E[X 1{X ≤ d}]`.
    pub fn truncated_mean(&self, d: &BigRational) -> BigRational {
        self.atoms.iter().filter(|(v, _)| v <= d).map(|(v, p)| v * p).sum()
    }

    /// Distance from the infimum to the next support point.
    pub fn gap(&self) -> Option<BigRational> {
        self.atoms.get(1).map(|(v, _)| v - self.inf())
    }

    /// The law of `X` given `X > 0`.
    pub fn positive_part(&self) -> Result<Self> {
        let p = self.p_positive();
        if p.is_zero() {
            return Err(FppError::invalid("no mass above 0"));
        }
        DiscreteVar::new(
            self.atoms
                .iter()
                .filter(|(v, _)| v.is_positive())
                .map(|(v, w)| (v.clone(), w / &p))
                .collect(),
        )
    }
}

impl fmt::Display for DiscreteVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, p)) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", format_rational(v), format_rational(p))?;
        }
        Ok(())
    }
}

impl TryFrom<String> for DiscreteVar {
    type Error = FppError;

    fn try_from(s: String) -> Result<Self> {
        DiscreteVar::parse(&s)
    }
}

impl From<DiscreteVar> for String {
    fn from(v: DiscreteVar) -> String {
        v.to_string()
    }
}

/// A tail law given as a plain function of the (1-based) index.
#[derive(Clone, Copy)]
pub struct IndexedFn(pub fn(u64) -> DiscreteVar);

impl fmt::Debug for IndexedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexedFn(..)")
    }
}

/// How `X_k` is produced for indices past the explicit head. Indices are
/// global and 1-based.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailRule {
    Iid { var: DiscreteVar },
    /// `X_k = vars[(k - 1) % vars.len()]`.
    Periodic { vars: Vec<DiscreteVar> },
    /// `X_k` is `0` with probability `p`, `k` otherwise.
    Partition {
        #[serde(with = "q_str")]
        p: BigRational,
    },
    /// `X_k` is `0` and `k` with probability `1/2 - eps` each, `1` with probability `2 eps`.
    PerturbedPartition {
        #[serde(with = "q_str")]
        eps: BigRational,
    },
    /// `X_k` is `0` or `a_k` with probability `1/2` each, `a` the nondecreasing
    /// sequence with `alpha_n` copies of `n`; `X_k = 0` past a finite `a`.
    Alpha { alpha: AlphaSequence },
    /// `X_1 ∈ {0, 1}` and, for `k ≥ 2`, `X_k ∈ {0, a_k}` uniformly with
    /// `a_k = 2` on `[r_{2i}, r_{2i+1})` and `3` on `[r_{2i+1}, r_{2i+2})`.
    /// The last block runs forever.
    Oscillating { rblocks: Vec<u64> },
    #[serde(skip)]
    Indexed(IndexedFn),
}

impl TailRule {
    fn validate(&self) -> Result<()> {
        let half = rat(1, 2);
        match self {
            TailRule::Periodic { vars } if vars.is_empty() => Err(FppError::invalid("empty periodic tail")),
            TailRule::Partition { p } if !(p.is_positive() && p < &BigRational::one()) => {
                Err(FppError::invalid("partition tail needs p in (0,1)"))
            }
            TailRule::PerturbedPartition { eps } if !(eps.is_positive() && eps < &(&half / int(2))) => {
                Err(FppError::invalid("perturbation needs eps in (0, 1/4)"))
            }
            TailRule::Oscillating { rblocks } => {
                if rblocks.first() != Some(&2) || rblocks.windows(2).any(|w| w[0] >= w[1]) {
                    Err(FppError::invalid("rblocks must be strictly increasing and start at 2"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn var(&self, k: u64) -> DiscreteVar {
        let half = rat(1, 2);
        match self {
            TailRule::Iid { var } => var.clone(),
            TailRule::Periodic { vars } => vars[((k - 1) % vars.len() as u64) as usize].clone(),
            TailRule::Partition { p } => DiscreteVar::two_point(p.clone(), int(k as i64)).expect("validated"),
            TailRule::PerturbedPartition { eps } => {
                let outer = &half - eps;
                if k == 1 {
                    DiscreteVar::new(vec![(int(0), outer), (int(1), &half + eps)]).expect("valid")
                } else {
                    DiscreteVar::new(vec![(int(0), outer.clone()), (int(1), eps * int(2)), (int(k as i64), outer)])
                        .expect("valid")
                }
            }
            TailRule::Alpha { alpha } => match alpha.a(k) {
                Some(a) => DiscreteVar::two_point(half, int(a as i64)).expect("valid"),
                None => DiscreteVar::point(int(0)),
            },
            TailRule::Oscillating { rblocks } => {
                DiscreteVar::two_point(half, int(oscillating_value(rblocks, k) as i64)).expect("valid")
            }
            TailRule::Indexed(f) => (f.0)(k),
        }
    }
}

fn oscillating_value(rblocks: &[u64], k: u64) -> u64 {
    if k == 1 {
        return 1;
    }
    let block = rblocks.iter().filter(|&&r| r <= k).count().saturating_sub(1);
    if block % 2 == 0 {
        2
    } else {
        3
    }
}

/// `X_1, ..., X_h` given explicitly, then a tail rule.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumModel {
    #[serde(default)]
    pub head: Vec<DiscreteVar>,
    pub tail: TailRule,
}

impl SumModel {
    pub fn new(head: Vec<DiscreteVar>, tail: TailRule) -> Result<Self> {
        tail.validate()?;
        Ok(SumModel { head, tail })
    }

    pub fn iid(var: DiscreteVar) -> Self {
        SumModel { head: vec![], tail: TailRule::Iid { var } }
    }

    /// `X_1 ∈ {0, 1}`, `X_k ∈ {0, 2}` for `k ≥ 2`, each `0` with probability `p`.
    pub fn parity(p: BigRational) -> Result<Self> {
        if !(p.is_positive() && p < BigRational::one()) {
            return Err(FppError::invalid("p must lie in (0,1)"));
        }
        SumModel::new(
            vec![DiscreteVar::two_point(p.clone(), int(1))?],
            TailRule::Iid {
                var: DiscreteVar::two_point(p, int(2))?,
            },
        )
    }

    pub fn partition(p: BigRational) -> Result<Self> {
        SumModel::new(vec![], TailRule::Partition { p })
    }

    pub fn perturbed_partition(eps: BigRational) -> Result<Self> {
        SumModel::new(vec![], TailRule::PerturbedPartition { eps })
    }

    pub fn alpha(alpha: AlphaSequence) -> Result<Self> {
        SumModel::new(vec![], TailRule::Alpha { alpha })
    }

    pub fn oscillating(rblocks: Vec<u64>) -> Result<Self> {
        SumModel::new(vec![], TailRule::Oscillating { rblocks })
    }

    /// `X_k`, 1-based.
    pub fn var(&self, k: u64) -> DiscreteVar {
        assert!(k >= 1, "variables are indexed from 1");
        match self.head.get((k - 1) as usize) {
            Some(v) => v.clone(),
            None => self.tail.var(k),
        }
    }

    pub fn vars(&self, n: u64) -> Vec<DiscreteVar> {
        (1..=n).map(|k| self.var(k)).collect()
    }
}

/// The common integer grid `{0, 1/D, ..., ⌊L·D⌋/D}`.
#[derive(Clone, Debug)]
struct Grid {
    level: BigRational,
    scale: BigInt,
    top: usize,
}

impl Grid {
    fn new<'a>(vars: impl IntoIterator<Item = &'a DiscreteVar>, level: &BigRational, cap: u64) -> Result<Grid> {
        if level.is_negative() {
            return Err(FppError::EmptyConditioning(format!("S_n <= {}", format_rational(level))));
        }
        let mut dens = vec![level.clone()];
        for v in vars {
            dens.extend(v.atoms.iter().map(|(x, _)| x).filter(|x| *x <= level).cloned());
        }
        let scale = lcm_denominators(&dens);
        let top = (level * BigRational::from_integer(scale.clone())).floor().to_integer();
        let states = top.to_u128().map_or(u128::MAX, |t| t.saturating_add(1));
        if states > cap as u128 {
            return Err(FppError::GridOverflow { states, cap });
        }
        Ok(Grid {
            level: level.clone(),
            scale,
            top: states as usize - 1,
        })
    }

    fn index(&self, v: &BigRational) -> Option<usize> {
        if v > &self.level {
            return None;
        }
        (v * BigRational::from_integer(self.scale.clone())).to_integer().to_usize()
    }

    /// Atoms at or below the level as `(grid index, numerator)` over a common denominator.
    fn scale_var(&self, var: &DiscreteVar) -> ScaledVar {
        let den = lcm_denominators(var.atoms.iter().map(|(_, p)| p));
        let atoms = var
            .atoms
            .iter()
            .filter_map(|(v, p)| {
                self.index(v)
                    .map(|i| (i, (p * BigRational::from_integer(den.clone())).to_integer()))
            })
            .collect();
        ScaledVar { atoms, den }
    }
}

struct ScaledVar {
    atoms: Vec<(usize, BigInt)>,
    den: BigInt,
}

/// The law of a partial sum restricted to grid points `≤ L`:
/// `P(S = i/D) = num[i] / den`.
#[derive(Clone, Debug)]
struct Truncated {
    num: Vec<BigInt>,
    den: BigInt,
}

impl Truncated {
    fn zero_sum(top: usize) -> Self {
        let mut num = vec![BigInt::zero(); top + 1];
        num[0] = BigInt::one();
        Truncated { num, den: BigInt::one() }
    }

    fn add(&mut self, var: &ScaledVar) {
        let top = self.num.len() - 1;
        let mut next = vec![BigInt::zero(); top + 1];
        for (s, w) in self.num.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            for (v, p) in &var.atoms {
                if s + v <= top {
                    next[s + v] += w * p;
                }
            }
        }
        self.num = next;
        self.den *= &var.den;
        // Keep numerators small when a common factor appears.
        let g = self.num.iter().fold(self.den.clone(), |g, x| g.gcd(x));
        if !g.is_one() {
            for x in &mut self.num {
                *x /= &g;
            }
            self.den /= &g;
        }
    }

    fn pmf(&self, i: usize) -> BigRational {
        BigRational::new(self.num[i].clone(), self.den.clone())
    }

    /// `P(S ≤ i/D)`, zero for negative `i`.
    fn cdf(&self, i: Option<usize>) -> BigRational {
        match i {
            None => BigRational::zero(),
            Some(i) => BigRational::new(self.num[..=i.min(self.num.len() - 1)].iter().sum(), self.den.clone()),
        }
    }
}

/// Truncated law of `X_1 + ... + X_m` on the grid, for checks that need
/// `P(S = x)` or `P(S ≤ x)` with `x ≤ L`.
#[derive(Clone, Debug)]
pub struct SumLaw {
    grid: Grid,
    law: Truncated,
}

impl SumLaw {
    pub fn new(vars: &[DiscreteVar], level: &BigRational) -> Result<Self> {
        SumLaw::with_cap(vars, level, state_cap())
    }

    pub fn with_cap(vars: &[DiscreteVar], level: &BigRational, cap: u64) -> Result<Self> {
        let grid = Grid::new(vars, level, cap)?;
        let mut law = Truncated::zero_sum(grid.top);
        for v in vars {
            law.add(&grid.scale_var(v));
        }
        Ok(SumLaw { grid, law })
    }

    fn locate(&self, x: &BigRational) -> Result<Option<usize>> {
        if x.is_negative() {
            return Ok(None);
        }
        if x > &self.grid.level {
            return Err(FppError::invalid("query above the truncation level"));
        }
        Ok(Some(
            (x * BigRational::from_integer(self.grid.scale.clone())).floor().to_integer().to_usize().expect("on grid"),
        ))
    }

    pub fn prob_le(&self, x: &BigRational) -> Result<BigRational> {
        Ok(self.law.cdf(self.locate(x)?))
    }

    pub fn prob_eq(&self, x: &BigRational) -> Result<BigRational> {
        let scaled = x * BigRational::from_integer(self.grid.scale.clone());
        if !scaled.is_integer() {
            return Ok(BigRational::zero());
        }
        Ok(self.locate(x)?.map_or_else(BigRational::zero, |i| self.law.pmf(i)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(with = "crate::rational::q_str_vec")]
    pub values: Vec<BigRational>,
    #[serde(with = "q_str")]
    pub prob: BigRational,
}

/// Joint law of `(X_1, ..., X_j)` given `S_n ≤ L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLaw {
    pub n: u64,
    pub j: usize,
    #[serde(with = "q_str")]
    pub level: BigRational,
    /// `P(S_n ≤ L)`.
    #[serde(with = "q_str")]
    pub conditioning_prob: BigRational,
    /// Tuples with positive conditional probability, in lexicographic order.
    pub outcomes: Vec<Outcome>,
}

impl ConditionalLaw {
    pub fn prob(&self, pred: impl Fn(&[BigRational]) -> bool) -> BigRational {
        self.outcomes.iter().filter(|o| pred(&o.values)).map(|o| &o.prob).sum()
    }

    /// Conditional law of `X_i`, 1-based.
    pub fn marginal(&self, i: usize) -> Vec<(BigRational, BigRational)> {
        let mut out: Vec<(BigRational, BigRational)> = Vec::new();
        for o in &self.outcomes {
            let v = &o.values[i - 1];
            match out.iter_mut().find(|(x, _)| x == v) {
                Some((_, p)) => *p += &o.prob,
                None => out.push((v.clone(), o.prob.clone())),
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn total(&self) -> BigRational {
        self.outcomes.iter().map(|o| &o.prob).sum()
    }
}

const MAX_TUPLES: usize = 1 << 20;

pub fn conditional_law(model: &SumModel, n: u64, level: &BigRational, j: usize) -> Result<ConditionalLaw> {
    conditional_law_with_cap(model, n, level, j, state_cap())
}

pub fn conditional_law_with_cap(
    model: &SumModel,
    n: u64,
    level: &BigRational,
    j: usize,
    cap: u64,
) -> Result<ConditionalLaw> {
    if n == 0 || j == 0 || j as u64 > n {
        return Err(FppError::invalid(format!("need 1 <= j <= n, got j = {j}, n = {n}")));
    }
    let vars = model.vars(n);
    let grid = Grid::new(&vars, level, cap)?;
    let mut suffix = Truncated::zero_sum(grid.top);
    for v in &vars[j..] {
        suffix.add(&grid.scale_var(v));
    }

    // Depth-first over head tuples whose partial sum stays on the grid.
    let mut weighted: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    let mut stack: Vec<(Vec<BigRational>, usize, BigRational)> = vec![(vec![], 0, BigRational::one())];
    while let Some((values, used, weight)) = stack.pop() {
        let depth = values.len();
        if depth == j {
            let w = weight * suffix.cdf(Some(grid.top - used));
            if w.is_positive() {
                weighted.push((values, w));
            }
            continue;
        }
        for (v, p) in vars[depth].atoms.iter().rev() {
            if let Some(i) = grid.index(v) {
                if used + i <= grid.top {
                    let mut next = values.clone();
                    next.push(v.clone());
                    stack.push((next, used + i, &weight * p));
                }
            }
        }
        if stack.len() + weighted.len() > MAX_TUPLES {
            return Err(FppError::invalid("too many joint outcomes; reduce j"));
        }
    }
    let z: BigRational = weighted.iter().map(|(_, w)| w).sum();
    if z.is_zero() {
        return Err(FppError::EmptyConditioning(format!("S_{n} <= {}", format_rational(level))));
    }
    let outcomes = weighted
        .into_iter()
        .map(|(values, w)| Outcome { values, prob: w / &z })
        .collect();
    Ok(ConditionalLaw {
        n,
        j,
        level: level.clone(),
        conditioning_prob: z,
        outcomes,
    })
}

/// Conditional law of `X_1` given `S_n ≤ L` for every `n` in `n_list`, in
/// one pass over the variables.
pub fn first_marginals(
    model: &SumModel,
    level: &BigRational,
    n_list: &[u64],
) -> Result<Vec<Vec<(BigRational, BigRational)>>> {
    if n_list.is_empty() {
        return Ok(vec![]);
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FppError::invalid("n_list must be positive and increasing"));
    }
    let n_max = *n_list.last().expect("nonempty");
    let vars = model.vars(n_max);
    let grid = Grid::new(&vars, level, state_cap())?;
    let first: Vec<(usize, BigRational, BigRational)> = vars[0]
        .atoms
        .iter()
        .filter_map(|(v, p)| grid.index(v).map(|i| (i, v.clone(), p.clone())))
        .collect();
    let mut suffix = Truncated::zero_sum(grid.top);
    let mut out = Vec::with_capacity(n_list.len());
    let mut added = 1u64;
    for &n in n_list {
        while added < n {
            suffix.add(&grid.scale_var(&vars[added as usize]));
            added += 1;
        }
        let weights: Vec<(BigRational, BigRational)> = first
            .iter()
            .map(|(i, v, p)| (v.clone(), p * suffix.cdf(Some(grid.top - i))))
            .collect();
        let z: BigRational = weights.iter().map(|(_, w)| w).sum();
        if z.is_zero() {
            return Err(FppError::EmptyConditioning(format!("S_{n} <= {}", format_rational(level))));
        }
        out.push(
            weights
                .into_iter()
                .filter(|(_, w)| w.is_positive())
                .map(|(v, w)| (v, w / &z))
                .collect(),
        );
    }
    Ok(out)
}

fn mass_where(law: &[(BigRational, BigRational)], keep: impl Fn(&BigRational) -> bool) -> BigRational {
    law.iter().filter(|(v, _)| keep(v)).map(|(_, p)| p).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResamplingReport {
    pub n: u64,
    #[serde(with = "q_str")]
    pub level: BigRational,
    #[serde(with = "q_str")]
    pub delta: BigRational,
    #[serde(with = "q_str")]
    pub delta_prime: BigRational,
    /// `P(X_1 ≥ δ | S_n ≤ L)`.
    #[serde(with = "q_str")]
    pub lhs: BigRational,
    /// `L / (P(X_1 ≤ δ - δ') Σ_{k=2}^n E[X_k 1{X_k ≤ δ'}])`; `None` when the denominator vanishes.
    #[serde(with = "q_str_opt")]
    pub bound: Option<BigRational>,
    pub holds: bool,
}

pub fn resampling_bound(
    model: &SumModel,
    n: u64,
    level: &BigRational,
    delta: &BigRational,
    delta_prime: &BigRational,
) -> Result<ResamplingReport> {
    if !delta_prime.is_positive() || delta_prime > delta {
        return Err(FppError::invalid("need 0 < delta' <= delta"));
    }
    let law = conditional_law(model, n, level, 1)?;
    let lhs = law.prob(|x| &x[0] >= delta);
    let x1 = model.var(1);
    let tail_sum: BigRational = (2..=n).map(|k| model.var(k).truncated_mean(delta_prime)).sum();
    let den = x1.prob_le(&(delta - delta_prime)) * tail_sum;
    let bound = (!den.is_zero()).then(|| level / den);
    let holds = bound.as_ref().is_none_or(|b| &lhs <= b);
    Ok(ResamplingReport {
        n,
        level: level.clone(),
        delta: delta.clone(),
        delta_prime: delta_prime.clone(),
        lhs,
        bound,
        holds,
    })
}

/// `(P(X_1 = 1, S_n ≤ L), P(X_1 = 0, S_n ≤ L - 1))` for `X_1` uniform on `{0, 1}`;
/// flipping `X_1` maps one event onto the other.
pub fn flip_bijection(model: &SumModel, n: u64, level: &BigRational) -> Result<(BigRational, BigRational)> {
    let x1 = model.var(1);
    let half = rat(1, 2);
    if x1.atoms() != [(int(0), half.clone()), (int(1), half)] {
        return Err(FppError::invalid("X_1 must be uniform on {0, 1}"));
    }
    let vars = model.vars(n);
    let law = SumLaw::new(&vars[1..], level)?;
    let one = BigRational::one();
    let lhs = x1.prob_eq(&one) * law.prob_le(&(level - &one))?;
    let rhs = if level < &one {
        BigRational::zero()
    } else {
        let below = SumLaw::new(&vars[1..], &(level - &one))?;
        x1.prob_eq(&int(0)) * below.prob_le(&(level - &one))?
    };
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarrisReport {
    #[serde(with = "q_str")]
    pub top_value: BigRational,
    #[serde(with = "q_str")]
    pub conditional: BigRational,
    #[serde(with = "q_str")]
    pub unconditional: BigRational,
    pub holds: bool,
}

/// `P(X_1 = x⁺ | S_n ≤ L) ≤ P(X_1 = x⁺)` for `x⁺` the largest support point of `X_1`.
pub fn harris_check(model: &SumModel, n: u64, level: &BigRational) -> Result<HarrisReport> {
    let x1 = model.var(1);
    let top = x1.sup().clone();
    let law = conditional_law(model, n, level, 1)?;
    let conditional = law.prob(|x| x[0] == top);
    let unconditional = x1.prob_eq(&top);
    Ok(HarrisReport {
        holds: conditional <= unconditional,
        top_value: top,
        conditional,
        unconditional,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrivialLimitReport {
    pub family: String,
    #[serde(with = "q_str")]
    pub delta_prime: BigRational,
    pub horizon: u64,
    /// `Σ_{k ≤ K} I_k`.
    #[serde(with = "q_str")]
    pub inf_partial: BigRational,
    /// `Σ_{k ≤ K} E[X_k 1{X_k ≤ δ'}]`.
    #[serde(with = "q_str")]
    pub truncated_partial: BigRational,
    pub inf_sum_finite: bool,
    pub truncated_sum_diverges: bool,
    /// Largest `ε` with no mass in `(I_k, I_k + ε)` for every `k`.
    #[serde(with = "q_str_opt")]
    pub gap: Option<BigRational>,
    /// Divergence of `Σ E[X_k 1{X_k ≤ ε}]` at `ε = gap`.
    pub gap_sum_diverges: bool,
    pub trivial_predicted: bool,
}

/// Closed-form facts about the infinite tail past the head.
struct TailFacts {
    family: String,
    infs_zero: bool,
    diverges: bool,
    gap_diverges: bool,
    gap: Option<BigRational>,
}

fn min_opt(a: Option<BigRational>, b: Option<BigRational>) -> Option<BigRational> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn tail_facts(model: &SumModel, d: &BigRational) -> Result<TailFacts> {
    let h = model.head.len() as u64;
    let one = BigRational::one();
    let facts = match &model.tail {
        TailRule::Iid { var } => {
            let gap = var.gap();
            TailFacts {
                family: "iid".into(),
                infs_zero: var.inf().is_zero(),
                diverges: var.truncated_mean(d).is_positive(),
                gap_diverges: gap.as_ref().is_some_and(|g| var.truncated_mean(g).is_positive()),
                gap,
            }
        }
        TailRule::Periodic { vars } => {
            let gap = vars.iter().map(DiscreteVar::gap).fold(None, min_opt);
            TailFacts {
                family: "periodic".into(),
                infs_zero: vars.iter().all(|v| v.inf().is_zero()),
                diverges: vars.iter().any(|v| v.truncated_mean(d).is_positive()),
                gap_diverges: gap
                    .as_ref()
                    .is_some_and(|g| vars.iter().any(|v| v.truncated_mean(g).is_positive())),
                gap,
            }
        }
        // Only the finitely many k ≤ δ' contribute.
        TailRule::Partition { .. } => TailFacts {
            family: "partition".into(),
            infs_zero: true,
            diverges: false,
            gap_diverges: false,
            gap: Some(int(h as i64 + 1)),
        },
        TailRule::PerturbedPartition { .. } => TailFacts {
            family: "perturbed-partition".into(),
            infs_zero: true,
            diverges: d >= &one,
            gap_diverges: true,
            gap: Some(one.clone()),
        },
        // Each value has finite multiplicity, so a_k → ∞ or X_k is eventually 0.
        TailRule::Alpha { alpha } => TailFacts {
            family: format!("alpha:{alpha}"),
            infs_zero: true,
            diverges: false,
            gap_diverges: false,
            gap: alpha.a(h + 1).map(|a| int(a as i64)),
        },
        TailRule::Oscillating { rblocks } => {
            let last = rblocks.len() - 1;
            let forever = if last % 2 == 0 { 2 } else { 3 };
            let start = (h + 1).max(2);
            let two_after = (0..rblocks.len()).step_by(2).any(|i| i == last || rblocks[i + 1] > start);
            let gap = Some(match (h, two_after) {
                (0, _) => one.clone(),
                (_, true) => int(2),
                _ => int(3),
            });
            let forever = int(forever);
            TailFacts {
                family: "oscillating".into(),
                infs_zero: true,
                diverges: d >= &forever,
                gap_diverges: gap.as_ref().is_some_and(|g| g >= &forever),
                gap,
            }
        }
        TailRule::Indexed(_) => {
            return Err(FppError::UndecidableTail("indexed tails have no closed form".into()));
        }
    };
    Ok(facts)
}

/// Decides, for the closed-form tail families, whether `Σ I_k < ∞` and
/// whether `Σ E[X_k 1{X_k ≤ δ'}]` diverges, along with the gap variant.
/// Partial sums up to `horizon` are reported as evidence.
pub fn trivial_limit_check(model: &SumModel, delta_prime: &BigRational, horizon: u64) -> Result<TrivialLimitReport> {
    if !delta_prime.is_positive() {
        return Err(FppError::invalid("delta' must be positive"));
    }
    let facts = tail_facts(model, delta_prime)?;
    let mut inf_partial = BigRational::zero();
    let mut truncated_partial = BigRational::zero();
    for k in 1..=horizon {
        let v = model.var(k);
        inf_partial += v.inf();
        truncated_partial += v.truncated_mean(delta_prime);
    }
    let head_gap = model.head.iter().map(DiscreteVar::gap).fold(None, min_opt);
    let gap = min_opt(head_gap, facts.gap.clone());
    // A head variable can shrink the gap below the tail's.
    let gap_sum_diverges = match (&gap, &facts.gap) {
        (Some(g), Some(tg)) if g < tg => tail_facts(model, g)?.diverges,
        _ => facts.gap_diverges,
    };
    let inf_sum_finite = facts.infs_zero;
    Ok(TrivialLimitReport {
        family: facts.family,
        delta_prime: delta_prime.clone(),
        horizon,
        inf_partial,
        truncated_partial,
        inf_sum_finite,
        truncated_sum_diverges: facts.diverges,
        gap,
        gap_sum_diverges,
        trivial_predicted: inf_sum_finite && gap_sum_diverges,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralParityReport {
    /// `P(X_2 > 0)`.
    #[serde(with = "q_str")]
    pub p: BigRational,
    pub k_star: u64,
    /// `P(X_1 > I_1 + δ | X_1 + 𝔖_{K*} ≤ L)`.
    #[serde(with = "q_str")]
    pub limit: BigRational,
}

fn check_parity_setting(tail: &DiscreteVar, delta: &BigRational) -> Result<DiscreteVar> {
    if !delta.is_positive() {
        return Err(FppError::invalid("delta must be positive"));
    }
    if !tail.inf().is_zero() {
        return Err(FppError::invalid("tail support must start at 0"));
    }
    tail.positive_part()
        .map_err(|_| FppError::invalid("tail has no mass above 0"))
}

/// `K* = sup{k ≥ 1 : P(X_1 + 𝔖_k ≤ L) > 0}` and the limit of
/// `P(X_1 > I_1 + δ | S_n ≤ L)`, where `𝔖_k` sums `k` copies of the tail
/// conditioned positive.
pub fn general_parity_limit(
    x1: &DiscreteVar,
    tail: &DiscreteVar,
    level: &BigRational,
    delta: &BigRational,
) -> Result<GeneralParityReport> {
    let frak = check_parity_setting(tail, delta)?;
    let grid = Grid::new([x1, &frak], level, state_cap())?;
    let steps: Vec<usize> = frak.atoms.iter().filter_map(|(v, _)| grid.index(v)).collect();

    // Reachable grid sums of X_1 + 𝔖_k; the positive part has a positive minimum, so this ends.
    let mut reach = vec![false; grid.top + 1];
    for (v, _) in &x1.atoms {
        if let Some(i) = grid.index(v) {
            reach[i] = true;
        }
    }
    let mut k_star = 0u64;
    loop {
        let mut next = vec![false; grid.top + 1];
        for (s, _) in reach.iter().enumerate().filter(|(_, r)| **r) {
            for &v in &steps {
                if s + v <= grid.top {
                    next[s + v] = true;
                }
            }
        }
        if !next.iter().any(|&r| r) {
            break;
        }
        k_star += 1;
        reach = next;
    }
    if k_star == 0 {
        return Err(FppError::invalid("L is too small: P(X_1 + 𝔛_2 <= L) = 0"));
    }

    let frak_scaled = grid.scale_var(&frak);
    let mut sum = Truncated::zero_sum(grid.top);
    for _ in 0..k_star {
        sum.add(&frak_scaled);
    }
    let threshold = x1.inf() + delta;
    let mut hit = BigRational::zero();
    let mut z = BigRational::zero();
    for (v, p) in &x1.atoms {
        if let Some(i) = grid.index(v) {
            let w = p * sum.cdf(Some(grid.top - i));
            if v > &threshold {
                hit += &w;
            }
            z += w;
        }
    }
    Ok(GeneralParityReport {
        p: tail.p_positive(),
        k_star,
        limit: hit / z,
    })
}

/// Exact `P(X_1 > I_1 + δ | S_n ≤ L)` for `X_2, X_3, ...` iid, one value per `n`.
pub fn convergence_to_limit_probe(
    x1: &DiscreteVar,
    tail: &DiscreteVar,
    level: &BigRational,
    delta: &BigRational,
    n_list: &[u64],
) -> Result<Vec<BigRational>> {
    check_parity_setting(tail, delta)?;
    let model = SumModel::new(vec![x1.clone()], TailRule::Iid { var: tail.clone() })?;
    let threshold = x1.inf() + delta;
    Ok(first_marginals(&model, level, n_list)?
        .iter()
        .map(|law| mass_where(law, |v| v > &threshold))
        .collect())
}

/// Exact `P(X_1 = 1 | S_n ≤ L)` for each `n`.
pub fn prob_first_is_one(model: &SumModel, level: &BigRational, n_list: &[u64]) -> Result<Vec<BigRational>> {
    let one = BigRational::one();
    Ok(first_marginals(model, level, n_list)?
        .iter()
        .map(|law| mass_where(law, |v| v == &one))
        .collect())
}

/// `P(X_1 = 1 | S_n ≤ L)` along `n_list` for the oscillating block sequence.
pub fn oscillation_example(rblocks: &[u64], level: &BigRational, n_list: &[u64]) -> Result<Vec<BigRational>> {
    let model = SumModel::oscillating(rblocks.to_vec())?;
    prob_first_is_one(&model, level, n_list)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: i64, q: i64) -> DiscreteVar {
        DiscreteVar::two_point(rat(q - p, q), int(1)).unwrap()
    }

    #[test]
    fn var_validation() {
        assert!(DiscreteVar::parse("0:1/2, 1:1/2").is_ok());
        assert!(DiscreteVar::parse("0:1/2, 1:1/3").is_err());
        assert!(DiscreteVar::parse("0:1/2, 0:1/2").is_err());
        assert!(DiscreteVar::parse("-1:1").is_err());
        let v = DiscreteVar::parse("2:1/4, 0:3/4").unwrap();
        assert_eq!(v.inf(), &int(0));
        assert_eq!(v.to_string(), "0:3/4, 2:1/4");
        assert_eq!(DiscreteVar::parse(&v.to_string()).unwrap(), v);
    }

    #[test]
    fn bernoulli_pair() {
        let m = SumModel::iid(bern(1, 2));
        let law = conditional_law(&m, 2, &int(1), 1).unwrap();
        assert_eq!(law.prob(|x| x[0] == int(1)), rat(1, 3));
        assert_eq!(law.conditioning_prob, rat(3, 4));
        let point = conditional_law(&m, 1, &int(0), 1).unwrap();
        assert_eq!(point.marginal(1), vec![(int(0), int(1))]);
    }

    #[test]
    fn parity_odd_level() {
        let m = SumModel::parity(rat(1, 2)).unwrap();
        let law = conditional_law(&m, 50, &int(3), 1).unwrap();
        assert_eq!(law.prob(|x| x[0] == int(1)), rat(1, 2));
    }

    #[test]
    fn resampling_worked_instance() {
        let m = SumModel::iid(bern(1, 2));
        let r = resampling_bound(&m, 5, &int(1), &int(1), &int(1)).unwrap();
        assert_eq!(r.lhs, rat(1, 6));
        assert_eq!(r.bound, Some(int(1)));
        assert!(r.holds);
    }

    #[test]
    fn empty_and_overflow() {
        let m = SumModel::iid(DiscreteVar::point(int(1)));
        assert!(matches!(conditional_law(&m, 3, &int(2), 1), Err(FppError::EmptyConditioning(_))));
        let fine = SumModel::iid(DiscreteVar::parse("0:1/2, 1/1000:1/2").unwrap());
        assert!(matches!(
            conditional_law_with_cap(&fine, 3, &int(5), 1, 1000),
            Err(FppError::GridOverflow { .. })
        ));
    }

    #[test]
    fn general_parity_examples() {
        let x1 = DiscreteVar::two_point(rat(1, 2), int(1)).unwrap();
        let tail = DiscreteVar::two_point(rat(1, 2), int(2)).unwrap();
        let even = general_parity_limit(&x1, &tail, &int(4), &rat(1, 2)).unwrap();
        assert_eq!((even.k_star, even.limit), (2, int(0)));
        let odd = general_parity_limit(&x1, &tail, &int(5), &rat(1, 2)).unwrap();
        assert_eq!((odd.k_star, odd.limit), (2, rat(1, 2)));
        assert!(general_parity_limit(&x1, &DiscreteVar::point(int(0)), &int(4), &rat(1, 2)).is_err());
        assert!(general_parity_limit(&x1, &DiscreteVar::point(int(1)), &int(4), &rat(1, 2)).is_err());
    }

    #[test]
    fn flip_and_harris() {
        let m = SumModel::partition(rat(1, 2)).unwrap();
        for l in 0..6 {
            let (a, b) = flip_bijection(&m, 8, &int(l)).unwrap();
            assert_eq!(a, b);
            assert!(harris_check(&m, 8, &int(l)).unwrap().holds);
        }
    }

    #[test]
    fn trivial_limit_families() {
        let iid = trivial_limit_check(&SumModel::iid(bern(1, 2)), &int(1), 20).unwrap();
        assert!(iid.truncated_sum_diverges && iid.inf_sum_finite && iid.trivial_predicted);
        let part = trivial_limit_check(&SumModel::partition(rat(1, 2)).unwrap(), &int(1), 20).unwrap();
        assert!(!part.truncated_sum_diverges && !part.trivial_predicted);
        assert_eq!(part.truncated_partial, rat(1, 2));
        let pert = trivial_limit_check(&SumModel::perturbed_partition(rat(1, 10)).unwrap(), &int(1), 20).unwrap();
        assert!(pert.trivial_predicted);
        let parity = trivial_limit_check(&SumModel::parity(rat(1, 2)).unwrap(), &int(1), 20).unwrap();
        assert_eq!(parity.gap, Some(int(1)));
        assert!(!parity.trivial_predicted);
        let odd = SumModel::new(
            vec![],
            TailRule::Indexed(IndexedFn(|k| DiscreteVar::point(int(k as i64 % 2)))),
        )
        .unwrap();
        assert!(matches!(trivial_limit_check(&odd, &int(1), 5), Err(FppError::UndecidableTail(_))));
    }

    #[test]
    fn oscillating_values() {
        let r = [2, 5, 9];
        let a: Vec<u64> = (1..=11).map(|k| oscillating_value(&r, k)).collect();
        assert_eq!(a, vec![1, 2, 2, 2, 3, 3, 3, 3, 2, 2, 2]);
        let flat = oscillation_example(&[2], &int(4), &[5, 10]).unwrap();
        let parity = prob_first_is_one(&SumModel::parity(rat(1, 2)).unwrap(), &int(4), &[5, 10]).unwrap();
        assert_eq!(flat, parity);
    }
}
