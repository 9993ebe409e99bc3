//! Partition counts for the two-point models `X_n ∈ {0, a_n}`.
//!
//! `q(L)` counts 0/1 vectors `v` with `Σ a_i v_i = L`, where the
//! nondecreasing sequence `a` holds `alpha_n` copies of each `n`. With
//! `alpha ≡ 1` this is the number of partitions of `L` into distinct parts.
//! The cumulative count used throughout is `Q(L) = q(0) + ... + q(L)`, which
//! makes `P(S_n ≤ L) = 2^{-n} Q(L)` for `n ≥ r_L`.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::condsum::{conditional_law, DiscreteVar, SumLaw, SumModel};
use crate::error::{FppError, Result};
use crate::rational::{format_rational, int, ln_biguint, q_str, rat, to_f64};

/// A rule `n ↦ alpha_n`, the multiplicity of the value `n` in `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AlphaSequence {
    /// `alpha_n = 1`: distinct parts.
    Ones,
    Constant(u64),
    /// `alpha_n = n!`.
    Factorial,
    /// `alpha_n = 2^(n²)`.
    TwoPowerSquares,
    /// Cumulative counts `r_1 ≤ r_2 ≤ ...`; `alpha_n = r_n - r_{n-1}` and
    /// `alpha_n = 0` past the list.
    Blocks(Vec<u64>),
}

impl AlphaSequence {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let seq = match s {
            "ones" => AlphaSequence::Ones,
            "factorial" => AlphaSequence::Factorial,
            "two-power-squares" => AlphaSequence::TwoPowerSquares,
            _ => {
                let (name, arg) = s
                    .split_once(':')
                    .ok_or_else(|| FppError::Parse(format!("unknown alpha rule {s:?}")))?;
                let num = |t: &str| {
                    t.trim()
                        .parse::<u64>()
                        .map_err(|_| FppError::Parse(format!("bad integer {t:?} in {s:?}")))
                };
                match name {
                    "constant" => AlphaSequence::Constant(num(arg)?),
                    "blocks" => AlphaSequence::Blocks(arg.split(',').map(num).collect::<Result<_>>()?),
                    _ => return Err(FppError::Parse(format!("unknown alpha rule {s:?}"))),
                }
            }
        };
        seq.validate()?;
        Ok(seq)
    }

    fn validate(&self) -> Result<()> {
        match self {
            AlphaSequence::Constant(0) => Err(FppError::invalid("constant alpha must be at least 1")),
            AlphaSequence::Blocks(r) => {
                if r.first().is_none_or(|&r1| r1 == 0) || r.windows(2).any(|w| w[0] > w[1]) {
                    Err(FppError::invalid("blocks need r_1 >= 1 and nondecreasing r"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn alpha(&self, n: u64) -> BigUint {
        if n == 0 {
            return BigUint::zero();
        }
        match self {
            AlphaSequence::Ones => BigUint::one(),
            AlphaSequence::Constant(c) => BigUint::from(*c),
            AlphaSequence::Factorial => (1..=n).map(BigUint::from).product(),
            AlphaSequence::TwoPowerSquares => BigUint::one() << (n * n),
            AlphaSequence::Blocks(r) => {
                let i = (n - 1) as usize;
                match r.get(i) {
                    Some(&rn) => BigUint::from(rn - if i == 0 { 0 } else { r[i - 1] }),
                    None => BigUint::zero(),
                }
            }
        }
    }

    /// `r_n = alpha_1 + ... + alpha_n`.
    pub fn r(&self, n: u64) -> BigUint {
        (1..=n).map(|i| self.alpha(i)).sum()
    }

    /// `a_k`, 1-based; `None` when `a` has fewer than `k` terms.
    pub fn a(&self, k: u64) -> Option<u64> {
        if k == 0 {
            return None;
        }
        let k = BigUint::from(k);
        let mut total = BigUint::zero();
        let mut n = 0u64;
        loop {
            n += 1;
            if let AlphaSequence::Blocks(r) = self {
                if n as usize > r.len() {
                    return None;
                }
            }
            total += self.alpha(n);
            if total >= k {
                return Some(n);
            }
        }
    }
}

impl fmt::Display for AlphaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSequence::Ones => write!(f, "ones"),
            AlphaSequence::Constant(c) => write!(f, "constant:{c}"),
            AlphaSequence::Factorial => write!(f, "factorial"),
            AlphaSequence::TwoPowerSquares => write!(f, "two-power-squares"),
            AlphaSequence::Blocks(r) => {
                let list: Vec<String> = r.iter().map(u64::to_string).collect();
                write!(f, "blocks:{}", list.join(","))
            }
        }
    }
}

impl TryFrom<String> for AlphaSequence {
    type Error = FppError;

    fn try_from(s: String) -> Result<Self> {
        AlphaSequence::parse(&s)
    }
}

impl From<AlphaSequence> for String {
    fn from(a: AlphaSequence) -> String {
        a.to_string()
    }
}

mod big_str_vec {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionTable {
    /// `"distinct"` or `"multiplicity:<alpha rule>"`.
    pub flavor: String,
    /// `q(0), ..., q(Lmax)`.
    #[serde(with = "big_str_vec")]
    pub q: Vec<BigUint>,
}

impl PartitionTable {
    pub fn lmax(&self) -> u64 {
        self.q.len() as u64 - 1
    }

    pub fn q(&self, l: u64) -> &BigUint {
        &self.q[l as usize]
    }

    /// `Q(L) = q(0) + ... + q(L)`.
    pub fn cumulative(&self) -> Vec<BigUint> {
        self.q
            .iter()
            .scan(BigUint::zero(), |acc, x| {
                *acc += x;
                Some(acc.clone())
            })
            .collect()
    }

    /// `L,q,Q` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,q,Q\n");
        for (l, (q, big_q)) in self.q.iter().zip(self.cumulative()).enumerate() {
            writeln!(out, "{l},{q},{big_q}").expect("write to string");
        }
        out
    }
}

/// Partitions of `0..=lmax` into distinct parts, by a 0/1 knapsack over parts.
pub fn q_distinct(lmax: u64) -> PartitionTable {
    let m = lmax as usize;
    let mut q = vec![BigUint::zero(); m + 1];
    q[0] = BigUint::one();
    for part in 1..=m {
        for l in (part..=m).rev() {
            let (lo, hi) = q.split_at_mut(l);
            hi[0] += &lo[l - part];
        }
    }
    PartitionTable {
        flavor: "distinct".into(),
        q,
    }
}

/// `q(L)` for `L ≤ lmax`, choosing `j` of the `alpha_n` copies of each part
/// `n` in `C(alpha_n, j)` ways.
pub fn q_multiplicity(lmax: u64, alpha: &AlphaSequence) -> PartitionTable {
    let m = lmax as usize;
    let mut q = vec![BigUint::zero(); m + 1];
    q[0] = BigUint::one();
    for part in 1..=m {
        let count = alpha.alpha(part as u64);
        if count.is_zero() {
            continue;
        }
        // C(count, j) for j ≤ m / part.
        let jmax = m / part;
        let mut binom = vec![BigUint::one()];
        for j in 1..=jmax {
            let j_big = BigUint::from(j);
            if count < j_big {
                break;
            }
            let next = &binom[j - 1] * (&count - &j_big + 1u32) / &j_big;
            binom.push(next);
        }
        let mut next = vec![BigUint::zero(); m + 1];
        for (l, base) in q.iter().enumerate() {
            if base.is_zero() {
                continue;
            }
            for (j, c) in binom.iter().enumerate() {
                let t = l + j * part;
                if t > m {
                    break;
                }
                next[t] += base * c;
            }
        }
        q = next;
    }
    PartitionTable {
        flavor: format!("multiplicity:{alpha}"),
        q,
    }
}

/// Coefficients of `exp(Σ_n alpha_n log(1 + z^n))` up to `z^lmax`, using
/// `L f_L = Σ_{k=1}^{L} b_k f_{L-k}` with `b_k = Σ_{n | k} (-1)^{k/n + 1} n alpha_n`.
pub fn q_generating_function(lmax: u64, alpha: &AlphaSequence) -> Result<Vec<BigUint>> {
    let m = lmax as usize;
    let alphas: Vec<BigInt> = (0..=m as u64)
        .map(|n| BigInt::from_biguint(Sign::Plus, alpha.alpha(n)))
        .collect();
    let b: Vec<BigInt> = (0..=m)
        .map(|k| {
            if k == 0 {
                return BigInt::zero();
            }
            (1..=k)
                .filter(|n| k % n == 0)
                .map(|n| {
                    let term = &alphas[n] * BigInt::from(n);
                    if (k / n) % 2 == 1 {
                        term
                    } else {
                        -term
                    }
                })
                .sum()
        })
        .collect();
    let mut f = vec![BigInt::one()];
    for l in 1..=m {
        let s: BigInt = (1..=l).map(|k| &b[k] * &f[l - k]).sum();
        let l_big = BigInt::from(l);
        if !(&s % &l_big).is_zero() {
            return Err(FppError::invalid(format!("non-integral coefficient at z^{l}")));
        }
        f.push(s / l_big);
    }
    f.into_iter()
        .map(|x| {
            x.to_biguint()
                .ok_or_else(|| FppError::invalid("negative generating-function coefficient"))
        })
        .collect()
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(
        BigInt::from_biguint(Sign::Plus, num.clone()),
        BigInt::from_biguint(Sign::Plus, den.clone()),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub alpha: String,
    pub l: u64,
    pub n: u64,
    /// `Q(L-1) / (2 Q(L))`.
    #[serde(with = "q_str")]
    pub lo: BigRational,
    /// `P(X_1 = 1 | S_n ≤ L)`.
    #[serde(with = "q_str")]
    pub mid: BigRational,
    /// `Q(L-1) / Q(L)`.
    #[serde(with = "q_str")]
    pub hi: BigRational,
    pub ok: bool,
    /// `mid = P(X_1 = 0 | S_n ≤ L-1) · Q(L-1)/Q(L)`, from flipping `X_1`.
    pub identity_holds: bool,
}

/// Places the exact `P(X_1 = 1 | S_n ≤ L)` between `Q(L-1)/(2Q(L))` and `Q(L-1)/Q(L)`.
pub fn sandwich_check(alpha: &AlphaSequence, l: u64, n: u64) -> Result<SandwichReport> {
    if l == 0 {
        return Err(FppError::invalid("L must be at least 1"));
    }
    if alpha.alpha(1).is_zero() {
        return Err(FppError::invalid("a_1 = 1 requires alpha_1 >= 1"));
    }
    let r_l = alpha.r(l);
    if BigUint::from(n) < r_l {
        return Err(FppError::invalid(format!("n = {n} is below r_L = {r_l}")));
    }
    let big_q = q_multiplicity(l, alpha).cumulative();
    let hi = ratio(&big_q[l as usize - 1], &big_q[l as usize]);
    let lo = &hi * rat(1, 2);
    let model = SumModel::alpha(alpha.clone())?;
    let law = conditional_law(&model, n, &int(l as i64), 1)?;
    let mid = law.prob(|x| x[0] == int(1));
    let below = conditional_law(&model, n, &int(l as i64 - 1), 1)?;
    let zero = below.prob(|x| x[0].is_zero());
    Ok(SandwichReport {
        alpha: alpha.to_string(),
        l,
        n,
        ok: lo <= mid && mid <= hi,
        identity_holds: mid == zero * &hi,
        lo,
        mid,
        hi,
    })
}

/// `q(k) · 4 · 3^{1/4} k^{3/4} / exp(π sqrt(k/3))` with exact `q(k)`.
pub fn hardy_ramanujan_ratio(k: u64) -> Result<f64> {
    if k == 0 {
        return Err(FppError::invalid("k must be at least 1"));
    }
    let q = q_distinct(k);
    let kf = k as f64;
    let log = ln_biguint(q.q(k)) + 4f64.ln() + 0.25 * 3f64.ln() + 0.75 * kf.ln()
        - std::f64::consts::PI * (kf / 3.0).sqrt();
    Ok(log.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectiveReport {
    #[serde(with = "q_str")]
    pub p: BigRational,
    pub l: u64,
    pub n: u64,
    /// `P(X_2 + ... + X_n = L)`.
    #[serde(with = "q_str")]
    pub lhs: BigRational,
    /// `((1-p)/p) P(X_2 + ... + X_n ≤ L-1)`.
    #[serde(with = "q_str")]
    pub rhs: BigRational,
    pub ok: bool,
}

/// Both sides of the injection bound for `X_k ∈ {0, k}`, `P(X_k = 0) = p`.
pub fn injective_bound_check(p: &BigRational, l: u64, n: u64) -> Result<InjectiveReport> {
    if !(p.is_positive() && p < &BigRational::one()) {
        return Err(FppError::invalid("p must lie in (0,1)"));
    }
    if l == 0 || n < l {
        return Err(FppError::invalid("need n >= L >= 1"));
    }
    let vars = (2..=n)
        .map(|k| DiscreteVar::two_point(p.clone(), int(k as i64)))
        .collect::<Result<Vec<_>>>()?;
    let law = SumLaw::new(&vars, &int(l as i64))?;
    let lhs = law.prob_eq(&int(l as i64))?;
    let rhs = (BigRational::one() - p) / p * law.prob_le(&int(l as i64 - 1))?;
    Ok(InjectiveReport {
        p: p.clone(),
        l,
        n,
        ok: lhs <= rhs,
        lhs,
        rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthType {
    BoundedType,
    UnboundedType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub alpha: String,
    pub horizon: u64,
    /// `max_{n ≤ m} alpha_n^{1/n}` for `m = 1..=N`.
    pub alpha_root_max: Vec<f64>,
    /// `max_{L ≤ m} q(L)^{1/L}` for `m = 1..=N`.
    pub q_root_max: Vec<f64>,
    /// `Q(L-1)/Q(L)` for `L = 1..=N`.
    pub q_ratio: Vec<f64>,
    pub classification: GrowthType,
    pub note: String,
}

/// Growth factor of the running maximum over the second half of the horizon
/// that counts as still unbounded.
const GROWTH_FACTOR: f64 = 1.5;

fn running_max(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    xs.scan(0f64, |m, x| {
        *m = m.max(x);
        Some(*m)
    })
    .collect()
}

/// Empirical bounded/unbounded classification of `alpha_n^{1/n}` up to `N`.
/// `alpha` is called unbounded-type when the running maximum of
/// `alpha_n^{1/n}` over `n ≤ N` exceeds its value at `N/2` by more than
/// half (and exceeds 1). This is a horizon-`N` reading, not a decision
/// about the limsup.
pub fn criteria_classify(alpha: &AlphaSequence, horizon: u64) -> Result<CriteriaReport> {
    if horizon < 2 {
        return Err(FppError::invalid("horizon must be at least 2"));
    }
    let root = |x: &BigUint, n: u64| if x.is_zero() { 0.0 } else { (ln_biguint(x) / n as f64).exp() };
    let alpha_root_max = running_max((1..=horizon).map(|n| root(&alpha.alpha(n), n)));
    let table = q_multiplicity(horizon, alpha);
    let q_root_max = running_max((1..=horizon).map(|l| root(table.q(l), l)));
    let big_q = table.cumulative();
    let q_ratio = (1..=horizon as usize)
        .map(|l| to_f64(&ratio(&big_q[l - 1], &big_q[l])))
        .collect();
    let half = alpha_root_max[(horizon / 2) as usize - 1].max(1.0);
    let last = alpha_root_max[horizon as usize - 1];
    let classification = if last > GROWTH_FACTOR * half {
        GrowthType::UnboundedType
    } else {
        GrowthType::BoundedType
    };
    Ok(CriteriaReport {
        alpha: alpha.to_string(),
        horizon,
        alpha_root_max,
        q_root_max,
        q_ratio,
        classification,
        note: format!("empirical classification at horizon N = {horizon}; the limsup itself is not decided"),
    })
}

/// Exact `Q(L-1)/Q(L)` as a rational string, for reports.
pub fn q_ratio_exact(table: &PartitionTable, l: u64) -> Result<String> {
    if l == 0 || l > table.lmax() {
        return Err(FppError::invalid("L out of table range"));
    }
    let big_q = table.cumulative();
    Ok(format_rational(&ratio(&big_q[l as usize - 1], &big_q[l as usize])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_distinct_counts() {
        let t = q_distinct(10);
        assert_eq!(t.q(0), &BigUint::one());
        assert_eq!(t.q(6), &BigUint::from(4u32));
        assert_eq!(t.q(10), &BigUint::from(10u32));
        assert!(t.to_csv().lines().nth(11).unwrap().starts_with("10,10,"));
    }

    #[test]
    fn multiplicity_counts() {
        assert_eq!(q_multiplicity(30, &AlphaSequence::Ones).q, q_distinct(30).q);
        let two = q_multiplicity(3, &AlphaSequence::Blocks(vec![2]));
        assert_eq!(two.q(1), &BigUint::from(2u32));
        assert_eq!(two.q(2), &BigUint::one());
        assert!(two.q(3).is_zero());
    }

    #[test]
    fn generating_function_route() {
        for alpha in [
            AlphaSequence::Ones,
            AlphaSequence::Constant(3),
            AlphaSequence::Factorial,
            AlphaSequence::TwoPowerSquares,
            AlphaSequence::Blocks(vec![1, 3, 3, 6]),
        ] {
            assert_eq!(q_generating_function(25, &alpha).unwrap(), q_multiplicity(25, &alpha).q, "{alpha}");
        }
    }

    #[test]
    fn alpha_parsing_and_terms() {
        for s in ["ones", "constant:2", "factorial", "two-power-squares", "blocks:1,3,4"] {
            assert_eq!(AlphaSequence::parse(s).unwrap().to_string(), s);
        }
        assert!(AlphaSequence::parse("constant:0").is_err());
        assert!(AlphaSequence::parse("blocks:2,1").is_err());
        let a = AlphaSequence::Factorial;
        let terms: Vec<u64> = (1..=5).map(|k| a.a(k).unwrap()).collect();
        assert_eq!(terms, vec![1, 2, 2, 3, 3]);
        assert_eq!(AlphaSequence::Blocks(vec![1, 2]).a(3), None);
    }

    #[test]
    fn sandwich_small() {
        let r = sandwich_check(&AlphaSequence::Ones, 6, 10).unwrap();
        assert!(r.ok && r.identity_holds, "{r:?}");
        let one = sandwich_check(&AlphaSequence::Ones, 1, 3).unwrap();
        assert_eq!((one.mid.clone(), one.hi.clone()), (rat(1, 2), rat(1, 2)));
        assert!(sandwich_check(&AlphaSequence::Ones, 6, 5).is_err());
    }

    #[test]
    fn injective_examples() {
        assert!(injective_bound_check(&rat(1, 2), 4, 10).unwrap().ok);
        let r = injective_bound_check(&rat(9, 10), 5, 12).unwrap();
        assert!(r.ok && r.lhs.is_positive());
    }

    #[test]
    fn classification() {
        assert_eq!(criteria_classify(&AlphaSequence::Ones, 20).unwrap().classification, GrowthType::BoundedType);
        assert_eq!(
            criteria_classify(&AlphaSequence::Constant(5), 20).unwrap().classification,
            GrowthType::BoundedType
        );
        assert_eq!(
            criteria_classify(&AlphaSequence::TwoPowerSquares, 12).unwrap().classification,
            GrowthType::UnboundedType
        );
    }
}
