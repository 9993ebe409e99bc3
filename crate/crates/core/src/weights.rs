//! Edge-weight laws built from atoms and uniform pieces: the distribution
//! function `F`, its generalized inverse, the quantile sequence
//! `a_k = F⁻¹(1/2 + 2⁻ᵏ)`, sampling, and the criticality class.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::exec::open_unit;
use crate::lattice::{LatticeBox, WeightConfig};
use crate::percolation::UniformConfig;
use crate::rational::{format_rational, from_f64, parse_rational, rat, to_f64};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub value: BigRational,
    pub prob: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformPiece {
    pub lo: BigRational,
    pub hi: BigRational,
    pub prob: BigRational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalClass {
    Subcritical,
    Supercritical,
    /// `F(0) = 1/2` and `Σ a_k < ∞`.
    CriticalFinite,
    /// `F(0) = 1/2` and `Σ a_k = ∞`.
    CriticalInfinite,
}

/// Finite mixture of point masses and uniform laws on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DistSpec", into = "DistSpec")]
pub struct WeightDistribution {
    atoms: Vec<Atom>,
    pieces: Vec<UniformPiece>,
    /// Sorted distinct atom values and piece endpoints.
    breaks: Vec<BigRational>,
    /// `F(b)` at each breakpoint.
    cdf_at: Vec<BigRational>,
    /// Atom mass sitting exactly at each breakpoint.
    jump_at: Vec<BigRational>,
}

impl WeightDistribution {
    pub fn new(atoms: Vec<Atom>, pieces: Vec<UniformPiece>) -> Result<Self> {
        let mut total = BigRational::zero();
        for a in &atoms {
            if a.value.is_negative() || a.prob.is_negative() {
                return Err(FppError::invalid("atoms need nonnegative value and probability"));
            }
            total += &a.prob;
        }
        for p in &pieces {
            if p.lo.is_negative() || p.prob.is_negative() || p.lo >= p.hi {
                return Err(FppError::invalid("pieces need 0 <= lo < hi and nonnegative probability"));
            }
            total += &p.prob;
        }
        if !total.is_one() {
            return Err(FppError::invalid(format!(
                "probabilities sum to {}, not 1",
                format_rational(&total)
            )));
        }
        let atoms: Vec<Atom> = atoms.into_iter().filter(|a| !a.prob.is_zero()).collect();
        let pieces: Vec<UniformPiece> = pieces.into_iter().filter(|p| !p.prob.is_zero()).collect();
        let mut breaks: Vec<BigRational> = atoms
            .iter()
            .map(|a| a.value.clone())
            .chain(pieces.iter().flat_map(|p| [p.lo.clone(), p.hi.clone()]))
            .collect();
        breaks.sort();
        breaks.dedup();
        let mut dist = WeightDistribution {
            atoms,
            pieces,
            breaks,
            cdf_at: Vec::new(),
            jump_at: Vec::new(),
        };
        dist.cdf_at = dist.breaks.iter().map(|b| dist.cdf(b)).collect();
        dist.jump_at = dist
            .breaks
            .iter()
            .map(|b| {
                dist.atoms
                    .iter()
                    .filter(|a| &a.value == b)
                    .map(|a| a.prob.clone())
                    .sum()
            })
            .collect();
        Ok(dist)
    }

    pub fn point(v: BigRational) -> Self {
        Self::new(
            vec![Atom {
                value: v,
                prob: BigRational::one(),
            }],
            vec![],
        )
        .expect("valid")
    }

    /// `p δ₀ + (1 − p) δ_v`.
    pub fn two_point(p: BigRational, v: BigRational) -> Result<Self> {
        let q = BigRational::one() - &p;
        Self::new(
            vec![
                Atom {
                    value: BigRational::zero(),
                    prob: p,
                },
                Atom { value: v, prob: q },
            ],
            vec![],
        )
    }

    /// `½δ₀ + ½δ₁`.
    pub fn bernoulli_half() -> Self {
        Self::half_atom(BigRational::one()).expect("valid")
    }

    /// `½δ₀ + ½·Uniform[0, 1]`.
    pub fn half_uniform() -> Self {
        Self::new(
            vec![Atom {
                value: BigRational::zero(),
                prob: rat(1, 2),
            }],
            vec![UniformPiece {
                lo: BigRational::zero(),
                hi: BigRational::one(),
                prob: rat(1, 2),
            }],
        )
        .expect("valid")
    }

    /// `½δ₀ + ½δ_v`.
    pub fn half_atom(v: BigRational) -> Result<Self> {
        Self::two_point(rat(1, 2), v)
    }

    /// `"bernoulli-half"`, `"half-uniform"` or `"half-atom:v"`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "bernoulli-half" => Ok(Self::bernoulli_half()),
            "half-uniform" => Ok(Self::half_uniform()),
            _ => match name.strip_prefix("half-atom:") {
                Some(v) => Self::half_atom(parse_rational(v)?),
                None => Err(FppError::Parse(format!("unknown distribution preset {name:?}"))),
            },
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[UniformPiece] {
        &self.pieces
    }

    /// `F(x) = P(t ≤ x)`.
    pub fn cdf(&self, x: &BigRational) -> BigRational {
        let mut f = BigRational::zero();
        for a in &self.atoms {
            if &a.value <= x {
                f += &a.prob;
            }
        }
        for p in &self.pieces {
            if x >= &p.hi {
                f += &p.prob;
            } else if x > &p.lo {
                f += &p.prob * (x - &p.lo) / (&p.hi - &p.lo);
            }
        }
        f
    }

    /// `F(0)`, the mass at zero.
    pub fn zero_mass(&self) -> BigRational {
        self.cdf(&BigRational::zero())
    }

    /// `F(b⁻)` at breakpoint `i`.
    fn cdf_left(&self, i: usize) -> BigRational {
        &self.cdf_at[i] - &self.jump_at[i]
    }

    /// `F⁻¹(t) = inf{x : F(x) ≥ t}` for `t ∈ (0, 1)`.
    pub fn quantile(&self, t: &BigRational) -> Result<BigRational> {
        if !t.is_positive() || t >= &BigRational::one() {
            return Err(FppError::invalid(format!(
                "quantile level must lie in (0, 1), got {}",
                format_rational(t)
            )));
        }
        let i = self.cdf_at.partition_point(|f| f < t);
        if i == 0 {
            return Ok(self.breaks[0].clone());
        }
        // F(b_{i-1}) < t ≤ F(b_i); F is linear on (b_{i-1}, b_i).
        let f0 = &self.cdf_at[i - 1];
        let f1 = self.cdf_left(i);
        if t <= &f1 && &f1 > f0 {
            let (b0, b1) = (&self.breaks[i - 1], &self.breaks[i]);
            Ok(b0 + (t - f0) / (&f1 - f0) * (b1 - b0))
        } else {
            Ok(self.breaks[i].clone())
        }
    }

    /// `a_k = F⁻¹(1/2 + 2⁻ᵏ)` for `k ≥ 2`.
    pub fn a_k(&self, k: u32) -> Result<BigRational> {
        if k < 2 {
            return Err(FppError::invalid(format!("a_k needs k >= 2, got {k}")));
        }
        let t = rat(1, 2) + BigRational::new(BigInt::one(), BigInt::one() << k);
        self.quantile(&t)
    }

    /// `inf{x > 0 : F(x) > 1/2}` when `F(0) = 1/2`; the limit of `a_k`.
    pub fn critical_gap(&self) -> Option<BigRational> {
        let half = rat(1, 2);
        if self.zero_mass() != half {
            return None;
        }
        let i = self.cdf_at.partition_point(|f| f <= &half);
        // breaks[0] = 0 carries F = 1/2, so i ≥ 1 and F(b_{i-1}) = 1/2.
        if self.cdf_left(i) > half {
            Some(self.breaks[i - 1].clone())
        } else {
            Some(self.breaks[i].clone())
        }
    }

    pub fn classify(&self) -> CriticalClass {
        match self.zero_mass().cmp(&rat(1, 2)) {
            Ordering::Less => CriticalClass::Subcritical,
            Ordering::Greater => CriticalClass::Supercritical,
            Ordering::Equal => {
                // a_k decreases to the gap g: eventually constant g > 0, or
                // linear in 2⁻ᵏ on a uniform piece starting at 0.
                if self.critical_gap().expect("critical").is_positive() {
                    CriticalClass::CriticalInfinite
                } else {
                    CriticalClass::CriticalFinite
                }
            }
        }
    }

    /// Law of `t` given `t > 0`.
    pub fn positive_part(&self) -> Result<WeightDistribution> {
        let p0 = self.atoms.iter().filter(|a| a.value.is_zero()).map(|a| a.prob.clone()).sum::<BigRational>();
        let rest = BigRational::one() - &p0;
        if rest.is_zero() {
            return Err(FppError::invalid("distribution has no positive mass"));
        }
        let atoms = self
            .atoms
            .iter()
            .filter(|a| !a.value.is_zero())
            .map(|a| Atom {
                value: a.value.clone(),
                prob: &a.prob / &rest,
            })
            .collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| UniformPiece {
                lo: p.lo.clone(),
                hi: p.hi.clone(),
                prob: &p.prob / &rest,
            })
            .collect();
        WeightDistribution::new(atoms, pieces)
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    /// Weights `t_e = F⁻¹(U_e)` on every edge of `b`, with the uniforms kept.
    pub fn sample_config<R: RngCore + ?Sized>(
        &self,
        b: LatticeBox,
        rng: &mut R,
    ) -> (WeightConfig<f64>, UniformConfig) {
        self.sampler().sample_config(b, rng)
    }
}

/// Floating-point inverse-CDF evaluation with exact tie resolution.
#[derive(Clone, Debug)]
pub struct Sampler {
    breaks: Vec<f64>,
    cdf_at: Vec<f64>,
    cdf_left: Vec<f64>,
    exact_at: Vec<BigRational>,
    exact_left: Vec<BigRational>,
}

const TIE_WINDOW: f64 = 1e-9;

impl Sampler {
    fn new(d: &WeightDistribution) -> Sampler {
        let exact_left: Vec<BigRational> = (0..d.breaks.len()).map(|i| d.cdf_left(i)).collect();
        Sampler {
            breaks: d.breaks.iter().map(to_f64).collect(),
            cdf_at: d.cdf_at.iter().map(to_f64).collect(),
            cdf_left: exact_left.iter().map(to_f64).collect(),
            exact_at: d.cdf_at.clone(),
            exact_left,
        }
    }

    /// `approx ≥ u`, settled exactly when the float comparison is too close to call.
    fn at_least(approx: f64, exact: &BigRational, u: f64) -> bool {
        if (approx - u).abs() > TIE_WINDOW {
            approx >= u
        } else {
            exact >= &from_f64(u)
        }
    }

    /// `F⁻¹(u)`; nondecreasing in `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self
            .cdf_at
            .iter()
            .zip(&self.exact_at)
            .position(|(a, e)| Self::at_least(*a, e, u))
            .unwrap_or(self.breaks.len() - 1);
        if i == 0 {
            return self.breaks[0];
        }
        let (f0, f1) = (self.cdf_at[i - 1], self.cdf_left[i]);
        let on_slope = self.exact_left[i] > self.exact_at[i - 1]
            && Self::at_least(f1, &self.exact_left[i], u);
        if on_slope {
            let (b0, b1) = (self.breaks[i - 1], self.breaks[i]);
            let x = b0 + (u - f0) / (f1 - f0) * (b1 - b0);
            x.clamp(b0, b1)
        } else {
            self.breaks[i]
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(open_unit(rng))
    }

    pub fn sample_config<R: RngCore + ?Sized>(
        &self,
        b: LatticeBox,
        rng: &mut R,
    ) -> (WeightConfig<f64>, UniformConfig) {
        let uniforms = UniformConfig::sample(b, rng);
        (self.weights_from(&uniforms), uniforms)
    }

    pub fn weights_from(&self, u: &UniformConfig) -> WeightConfig<f64> {
        let w = u.values().iter().map(|&x| self.quantile(x)).collect();
        WeightConfig::from_vec(u.region(), w).expect("quantiles are nonnegative")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DistSpec {
    Preset(String),
    Explicit {
        #[serde(default)]
        atoms: Vec<AtomSpec>,
        #[serde(default)]
        pieces: Vec<PieceSpec>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomSpec {
    value: String,
    prob: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSpec {
    lo: String,
    hi: String,
    prob: String,
}

impl TryFrom<DistSpec> for WeightDistribution {
    type Error = FppError;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Preset(name) => WeightDistribution::preset(&name),
            DistSpec::Explicit { atoms, pieces } => {
                let atoms = atoms
                    .into_iter()
                    .map(|a| {
                        Ok(Atom {
                            value: parse_rational(&a.value)?,
                            prob: parse_rational(&a.prob)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let pieces = pieces
                    .into_iter()
                    .map(|p| {
                        Ok(UniformPiece {
                            lo: parse_rational(&p.lo)?,
                            hi: parse_rational(&p.hi)?,
                            prob: parse_rational(&p.prob)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                WeightDistribution::new(atoms, pieces)
            }
        }
    }
}

impl From<WeightDistribution> for DistSpec {
    fn from(d: WeightDistribution) -> Self {
        DistSpec::Explicit {
            atoms: d
                .atoms
                .iter()
                .map(|a| AtomSpec {
                    value: format_rational(&a.value),
                    prob: format_rational(&a.prob),
                })
                .collect(),
            pieces: d
                .pieces
                .iter()
                .map(|p| PieceSpec {
                    lo: format_rational(&p.lo),
                    hi: format_rational(&p.hi),
                    prob: format_rational(&p.prob),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::replica_rng;
    use crate::rational::int;

    #[test]
    fn quantile_examples() {
        let b = WeightDistribution::bernoulli_half();
        assert_eq!(b.quantile(&rat(7, 10)).unwrap(), int(1));
        assert_eq!(b.quantile(&rat(1, 2)).unwrap(), int(0));
        let h = WeightDistribution::half_uniform();
        for k in 2..20 {
            let t = rat(1, 2) + BigRational::new(BigInt::one(), BigInt::one() << k);
            let expect = BigRational::new(BigInt::one(), BigInt::one() << (k - 1));
            assert_eq!(h.quantile(&t).unwrap(), expect);
        }
        let d = WeightDistribution::point(int(0));
        assert_eq!(d.quantile(&rat(3, 10)).unwrap(), int(0));
        assert!(d.quantile(&int(0)).is_err());
        assert!(d.quantile(&int(1)).is_err());
    }

    #[test]
    fn a_k_examples() {
        let b = WeightDistribution::bernoulli_half();
        let five = WeightDistribution::preset("half-atom:5").unwrap();
        for k in 2..30 {
            assert_eq!(b.a_k(k).unwrap(), int(1));
            assert_eq!(five.a_k(k).unwrap(), int(5));
        }
        assert!(b.a_k(1).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(WeightDistribution::bernoulli_half().classify(), CriticalClass::CriticalInfinite);
        assert_eq!(WeightDistribution::half_uniform().classify(), CriticalClass::CriticalFinite);
        let sup = WeightDistribution::two_point(rat(3, 5), int(1)).unwrap();
        assert_eq!(sup.classify(), CriticalClass::Supercritical);
        let sub = WeightDistribution::two_point(rat(2, 5), int(1)).unwrap();
        assert_eq!(sub.classify(), CriticalClass::Subcritical);
        // Uniform piece away from zero leaves a gap.
        let gapped = WeightDistribution::new(
            vec![Atom { value: int(0), prob: rat(1, 2) }],
            vec![UniformPiece { lo: rat(1, 4), hi: int(1), prob: rat(1, 2) }],
        )
        .unwrap();
        assert_eq!(gapped.classify(), CriticalClass::CriticalInfinite);
        assert_eq!(gapped.critical_gap(), Some(rat(1, 4)));
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(WeightDistribution::two_point(rat(3, 2), int(1)).is_err());
        assert!(WeightDistribution::new(vec![Atom { value: int(1), prob: rat(1, 2) }], vec![]).is_err());
    }

    #[test]
    fn point_mass_at_zero_samples_zero() {
        let d = WeightDistribution::point(int(0));
        let mut rng = replica_rng(1, 0);
        let (cfg, _) = d.sample_config(LatticeBox::new(4), &mut rng);
        assert!(cfg.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = WeightDistribution::half_uniform();
        let a = d.sample_config(LatticeBox::new(5), &mut replica_rng(9, 3)).0;
        let b = d.sample_config(LatticeBox::new(5), &mut replica_rng(9, 3)).0;
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_matches_exact_quantile() {
        let d = WeightDistribution::new(
            vec![Atom { value: int(0), prob: rat(1, 3) }, Atom { value: int(2), prob: rat(1, 6) }],
            vec![UniformPiece { lo: int(1), hi: int(3), prob: rat(1, 2) }],
        )
        .unwrap();
        let s = d.sampler();
        for i in 1..200 {
            let t = rat(i, 200);
            let exact = to_f64(&d.quantile(&t).unwrap());
            assert!((s.quantile(to_f64(&t)) - exact).abs() < 1e-12, "t = {i}/200");
        }
    }

    #[test]
    fn serde_round_trip() {
        let d = WeightDistribution::half_uniform();
        let text = serde_json::to_string(&d).unwrap();
        let back: WeightDistribution = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let preset: WeightDistribution = serde_json::from_str("\"half-atom:3/2\"").unwrap();
        assert_eq!(preset.a_k(4).unwrap(), rat(3, 2));
    }
}
