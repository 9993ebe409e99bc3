//! Parameter structs shared by the command line and `[params]` config tables.
//!
//! Every field is optional so that command-line flags can be laid over a
//! config file; required values are enforced when a command runs.

use std::fmt;
use std::str::FromStr;

use clap::Args;
use fpplab::rational::{format_rational, parse_rational};
use num_rational::BigRational;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational, written `"p/q"` or as a bare integer.
#[derive(Clone, Debug, PartialEq)]
pub struct Q(pub BigRational);

impl FromStr for Q {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_rational(s).map(Q).map_err(|e| e.to_string())
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Q;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a rational \"p/q\" or an integer")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<Q, E> {
                s.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Q, E> {
                Ok(Q(BigRational::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Q, E> {
                Ok(Q(BigRational::from_integer(v.into())))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FppSim {
    /// Weight law: bernoulli-half, half-uniform or half-atom:v.
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FppDecompose {
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<u32>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k_base: Option<u32>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IicEstimate {
    #[arg(long)]
    pub dist: Option<String>,
    /// Cylinder event, e.g. "edge(0,0,E) == 0 and ball(2) >= 1".
    #[arg(long)]
    pub event: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Conditioning level, a rational or "inf".
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IicSample {
    #[arg(long)]
    pub dist: Option<String>,
    /// Box radius of the finite-volume proxy.
    #[arg(long)]
    pub n: Option<u32>,
    /// Rejection attempts allowed per draw.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercCrossing {
    #[arg(long)]
    pub p: Option<f64>,
    /// "rectangle" ((n+1) x n, long way) or "square" (2n x 2n).
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercCorrlen {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub nmax: Option<u32>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercFourarm {
    #[arg(long)]
    pub radius: Option<u32>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercOkEvent {
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub epsilon1: Option<f64>,
    /// Weight law for the passage-time sandwich.
    #[arg(long)]
    pub dist: Option<String>,
    /// Crossing samples per bisection probe.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Configurations scanned for the event.
    #[arg(long)]
    pub configs: Option<u64>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondsumLaw {
    /// parity:p, partition:p, perturbed-partition:eps, alpha:RULE,
    /// oscillating:r1,r2,... or iid:v:p,v:p,...
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<Q>,
    #[arg(long)]
    pub j: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondsumBound {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<Q>,
    #[arg(long)]
    pub delta: Option<Q>,
    #[arg(long)]
    pub delta_prime: Option<Q>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondsumParity {
    #[arg(long)]
    pub p: Option<Q>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<Q>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondsumGeneralParity {
    /// Law of X_1 as "v:p,v:p,...".
    #[arg(long)]
    pub x1: Option<String>,
    /// Law of X_2, X_3, ... as "v:p,v:p,...".
    #[arg(long)]
    pub tail: Option<String>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<Q>,
    #[arg(long)]
    pub delta: Option<Q>,
    /// Optional finite n at which to evaluate the exact probability.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondsumOscillate {
    #[arg(long, value_delimiter = ',')]
    pub rblocks: Option<Vec<u64>>,
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub level: Option<Q>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionQ {
    #[arg(long = "Lmax")]
    #[serde(rename = "Lmax")]
    pub lmax: Option<u64>,
    /// ones, constant:c, factorial, two-power-squares or blocks:r1,r2,...
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionCriteria {
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub horizon: Option<u64>,
}
