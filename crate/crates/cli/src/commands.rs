//! One function per experiment. Each returns the JSON payload and, for
//! table-shaped results, a CSV rendering.

use clap::Subcommand;
use fpplab::circuits::decompose;
use fpplab::conditional::{estimate_conditional, nu_tilde_samples, parse_level, CylinderEvent};
use fpplab::condsum::{
    conditional_law, convergence_to_limit_probe, general_parity_limit, oscillation_example, prob_first_is_one,
    resampling_bound, DiscreteVar, SumModel,
};
use fpplab::lattice::LatticeBox;
use fpplab::partitions::{criteria_classify, q_multiplicity, AlphaSequence};
use fpplab::passage::t_to_boundary;
use fpplab::percolation::{
    correlation_length, crossing_prob, detect_o_k, four_arm_prob, ok_sandwich, p_k_solve, CrossingShape,
    UniformConfig, EPSILON1,
};
use fpplab::rational::{format_rational, parse_rational};
use fpplab::weights::WeightDistribution;
use fpplab::{Exec, FppError, MonteCarlo};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::params::*;
use crate::Failure;

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "params")]
pub enum Experiment {
    /// Passage times T(0, ∂B(n)) for i.i.d. weights.
    #[command(name = "fpp.sim")]
    #[serde(rename = "fpp.sim")]
    FppSim(FppSim),
    /// Circuit decomposition of T(0, ∂B(n)) over sampled configurations.
    #[command(name = "fpp.decompose")]
    #[serde(rename = "fpp.decompose")]
    FppDecompose(FppDecompose),
    /// P(event | T(0, ∂B(n)) <= L) by rejection.
    #[command(name = "iic.estimate")]
    #[serde(rename = "iic.estimate")]
    IicEstimate(IicEstimate),
    /// Draws from the finite-volume zero-connected measure.
    #[command(name = "iic.sample")]
    #[serde(rename = "iic.sample")]
    IicSample(IicSample),
    /// Left-right crossing probability of a box.
    #[command(name = "perc.crossing")]
    #[serde(rename = "perc.crossing")]
    PercCrossing(PercCrossing),
    /// Finite-size correlation length L(p, epsilon).
    #[command(name = "perc.corrlen")]
    #[serde(rename = "perc.corrlen")]
    PercCorrlen(PercCorrlen),
    /// Alternating four-arm probability at p = 1/2.
    #[command(name = "perc.fourarm")]
    #[serde(rename = "perc.fourarm")]
    PercFourarm(PercFourarm),
    /// Solves p_k and scans configurations for the pivotal-edge event.
    #[command(name = "perc.ok-event")]
    #[serde(rename = "perc.ok-event")]
    PercOkEvent(PercOkEvent),
    /// Exact joint law of (X_1, ..., X_j) given S_n <= L.
    #[command(name = "condsum.law")]
    #[serde(rename = "condsum.law")]
    CondsumLaw(CondsumLaw),
    /// Exact resampling bound on P(X_1 >= delta | S_n <= L).
    #[command(name = "condsum.bound")]
    #[serde(rename = "condsum.bound")]
    CondsumBound(CondsumBound),
    /// P(X_1 = 1 | S_n <= L) with X_1 in {0,1} and X_k in {0,2}.
    #[command(name = "condsum.parity")]
    #[serde(rename = "condsum.parity")]
    CondsumParity(CondsumParity),
    /// Limit of P(X_1 > inf X_1 + delta | S_n <= L) for an i.i.d. tail.
    #[command(name = "condsum.general-parity")]
    #[serde(rename = "condsum.general-parity")]
    CondsumGeneralParity(CondsumGeneralParity),
    /// P(X_1 = 1 | S_n <= L) along n for the oscillating block model.
    #[command(name = "condsum.oscillate")]
    #[serde(rename = "condsum.oscillate")]
    CondsumOscillate(CondsumOscillate),
    /// Table of q(L) and Q(L) for L <= Lmax.
    #[command(name = "partition.q")]
    #[serde(rename = "partition.q")]
    PartitionQ(PartitionQ),
    /// Growth readings of alpha_n and q(L) up to a horizon.
    #[command(name = "partition.criteria")]
    #[serde(rename = "partition.criteria")]
    PartitionCriteria(PartitionCriteria),
}

pub struct Output {
    pub payload: Value,
    pub csv: Option<String>,
}

fn req<T>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Validation(format!("missing required parameter `{name}`")))
}

fn dist(name: Option<String>, default: &str) -> Result<(String, WeightDistribution), FppError> {
    let name = name.unwrap_or_else(|| default.to_string());
    let d = WeightDistribution::preset(&name)?;
    Ok((name, d))
}

fn parse_model(spec: &str) -> Result<SumModel, FppError> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| FppError::Parse(format!("model {spec:?} needs the form kind:argument")))?;
    match kind {
        "parity" => SumModel::parity(parse_rational(arg)?),
        "partition" => SumModel::partition(parse_rational(arg)?),
        "perturbed-partition" => SumModel::perturbed_partition(parse_rational(arg)?),
        "alpha" => SumModel::alpha(AlphaSequence::parse(arg)?),
        "oscillating" => {
            let r = arg
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| FppError::Parse(format!("bad block {t:?}"))))
                .collect::<Result<Vec<u64>, _>>()?;
            SumModel::oscillating(r)
        }
        "iid" => Ok(SumModel::iid(DiscreteVar::parse(arg)?)),
        _ => Err(FppError::Parse(format!("unknown model kind {kind:?}"))),
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload types serialize")
}

fn rationals(xs: &[num_rational::BigRational]) -> Vec<String> {
    xs.iter().map(format_rational).collect()
}

pub fn run(exp: &Experiment, seed: u64, exec: Exec) -> Result<Output, Failure> {
    let mc = |samples: u64| MonteCarlo::new(seed, samples).with_exec(exec);
    let payload = match exp.clone() {
        Experiment::FppSim(p) => {
            let (name, d) = dist(p.dist, "half-uniform")?;
            let n = req(p.n, "n")?;
            let samples = p.samples.unwrap_or(1000);
            let sampler = d.sampler();
            let region = LatticeBox::new(n);
            let ts = mc(samples).map(|rng, _| {
                let (cfg, _) = sampler.sample_config(region, rng);
                t_to_boundary(&cfg, n).expect("n is the region radius")
            });
            let (mean, sd) = mean_sd(&ts);
            json!({
                "dist": name,
                "n": n,
                "samples": samples,
                "mean": mean,
                "sd": sd,
                "zero_fraction": ts.iter().filter(|&&t| t == 0.0).count() as f64 / samples as f64,
                "max": ts.iter().cloned().fold(0.0, f64::max),
            })
        }
        Experiment::FppDecompose(p) => {
            let (name, d) = dist(p.dist, "bernoulli-half")?;
            let n = req(p.n, "n")?;
            let (r, k_base) = (p.r.unwrap_or(2), p.k_base.unwrap_or(0));
            let samples = p.samples.unwrap_or(100);
            let sampler = d.sampler();
            let region = LatticeBox::new(n);
            if r < 2 {
                return Err(Failure::Validation("R must be at least 2".into()));
            }
            let rows = mc(samples).map(|rng, _| {
                let (cfg, _) = sampler.sample_config(region, rng);
                let dec = decompose(&cfg, n, r, k_base).expect("parameters checked");
                (dec.count, dec.identity_holds(), dec.is_nested(), dec.total, dec.remainder)
            });
            let max_count = rows.iter().map(|r| r.0).max().unwrap_or(0);
            let mut histogram = vec![0u64; max_count + 1];
            for row in &rows {
                histogram[row.0] += 1;
            }
            let remainders: Vec<f64> = rows.iter().filter_map(|r| r.4).collect();
            json!({
                "dist": name,
                "n": n,
                "R": r,
                "K": k_base,
                "samples": samples,
                "index_histogram": histogram,
                "identity_failures": rows.iter().filter(|r| !r.1).count(),
                "nesting_failures": rows.iter().filter(|r| !r.2).count(),
                "mean_total": mean_sd(&rows.iter().map(|r| r.3).collect::<Vec<_>>()).0,
                "mean_remainder": (!remainders.is_empty()).then(|| mean_sd(&remainders).0),
            })
        }
        Experiment::IicEstimate(p) => {
            let (_, d) = dist(p.dist, "bernoulli-half")?;
            let event = CylinderEvent::parse(&req(p.event, "event")?)?;
            let level = parse_level(p.level.as_deref().unwrap_or("0"))?;
            let est = estimate_conditional(&d, &event, req(p.n, "n")?, &level, &mc(p.samples.unwrap_or(10_000)))?;
            to_json(&est)
        }
        Experiment::IicSample(p) => {
            let (name, d) = dist(p.dist, "bernoulli-half")?;
            let n = req(p.n, "n")?;
            let draws = nu_tilde_samples(&d, n, p.budget.unwrap_or(100_000), &mc(p.samples.unwrap_or(10)))?;
            let attempts: Vec<u64> = draws.iter().map(|d| d.1).collect();
            let zero: Vec<f64> = draws
                .iter()
                .map(|(c, _)| c.weights().iter().filter(|&&w| w == 0.0).count() as f64 / c.weights().len() as f64)
                .collect();
            json!({ "dist": name, "n": n, "attempts": attempts, "zero_fraction": zero })
        }
        Experiment::PercCrossing(p) => {
            let n = p.n.unwrap_or(16);
            let shape = match p.shape.as_deref().unwrap_or("rectangle") {
                "rectangle" => CrossingShape::Rectangle(n),
                "square" => CrossingShape::Square(n),
                s => return Err(Failure::Validation(format!("unknown shape {s:?}"))),
            };
            to_json(&crossing_prob(p.p.unwrap_or(0.5), shape, &mc(p.samples.unwrap_or(10_000)))?)
        }
        Experiment::PercCorrlen(p) => {
            let est = correlation_length(
                req(p.p, "p")?,
                p.epsilon.unwrap_or(EPSILON1),
                p.nmax.unwrap_or(32),
                &mc(p.samples.unwrap_or(2000)),
            )?;
            to_json(&est)
        }
        Experiment::PercFourarm(p) => to_json(&four_arm_prob(req(p.radius, "radius")?, &mc(p.samples.unwrap_or(10_000)))?),
        Experiment::PercOkEvent(p) => {
            let (r, k) = (p.r.unwrap_or(2), p.k.unwrap_or(1));
            let (name, d) = dist(p.dist, "half-uniform")?;
            let base = mc(p.samples.unwrap_or(2000));
            let pk = p_k_solve(r, k, p.epsilon1.unwrap_or(EPSILON1), &base)?;
            let outer = r
                .checked_pow(3 * k + 3)
                .ok_or_else(|| Failure::Validation("R^(3k+3) overflows".into()))?;
            let region = LatticeBox::new(outer);
            let sampler = d.sampler();
            let scan = base.substream(1);
            let scan = MonteCarlo { samples: p.configs.unwrap_or(100), ..scan };
            let rows = scan.map(|rng, _| {
                let u = UniformConfig::sample(region, rng);
                let det = detect_o_k(&u, k, r, pk.p_k)?;
                let sw = ok_sandwich(&u, k, r, pk.p_k, &sampler)?;
                Ok::<_, FppError>((det.occurs(), det.occurs() && sw.holds()))
            });
            let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
            json!({
                "dist": name,
                "p_k": to_json(&pk),
                "configs": rows.len(),
                "occurrences": rows.iter().filter(|r| r.0).count(),
                "sandwich_holds": rows.iter().filter(|r| r.1).count(),
            })
        }
        Experiment::CondsumLaw(p) => {
            let model = parse_model(&req(p.model, "model")?)?;
            to_json(&conditional_law(&model, req(p.n, "n")?, &req(p.level, "L")?.0, p.j.unwrap_or(1))?)
        }
        Experiment::CondsumBound(p) => {
            let model = parse_model(&req(p.model, "model")?)?;
            let delta = req(p.delta, "delta")?.0;
            let delta_prime = p.delta_prime.map_or_else(|| delta.clone(), |q| q.0);
            to_json(&resampling_bound(&model, req(p.n, "n")?, &req(p.level, "L")?.0, &delta, &delta_prime)?)
        }
        Experiment::CondsumParity(p) => {
            let prob = p.p.map_or_else(|| parse_rational("1/2").expect("literal"), |q| q.0);
            let level = req(p.level, "L")?.0;
            let ns = req(p.n, "n")?;
            let vals = prob_first_is_one(&SumModel::parity(prob.clone())?, &level, &ns)?;
            json!({
                "p": format_rational(&prob),
                "L": format_rational(&level),
                "n": ns,
                "prob_first_is_one": rationals(&vals),
            })
        }
        Experiment::CondsumGeneralParity(p) => {
            let x1 = DiscreteVar::parse(&req(p.x1, "x1")?)?;
            let tail = DiscreteVar::parse(&req(p.tail, "tail")?)?;
            let (level, delta) = (req(p.level, "L")?.0, req(p.delta, "delta")?.0);
            let limit = general_parity_limit(&x1, &tail, &level, &delta)?;
            let ns = p.n.unwrap_or_default();
            let finite = convergence_to_limit_probe(&x1, &tail, &level, &delta, &ns)?;
            json!({ "limit": to_json(&limit), "n": ns, "finite_n": rationals(&finite) })
        }
        Experiment::CondsumOscillate(p) => {
            let rblocks = req(p.rblocks, "rblocks")?;
            let level = p.level.map_or_else(|| parse_rational("1").expect("literal"), |q| q.0);
            let ns = req(p.n, "n")?;
            let vals = oscillation_example(&rblocks, &level, &ns)?;
            json!({ "rblocks": rblocks, "L": format_rational(&level), "n": ns, "prob_first_is_one": rationals(&vals) })
        }
        Experiment::PartitionQ(p) => {
            let alpha = AlphaSequence::parse(p.alpha.as_deref().unwrap_or("ones"))?;
            let table = q_multiplicity(req(p.lmax, "Lmax")?, &alpha);
            let cumulative: Vec<String> = table.cumulative().iter().map(|x| x.to_string()).collect();
            let mut payload = to_json(&table);
            payload["Q"] = json!(cumulative);
            return Ok(Output { payload, csv: Some(table.to_csv()) });
        }
        Experiment::PartitionCriteria(p) => {
            let alpha = AlphaSequence::parse(&req(p.alpha, "alpha")?)?;
            to_json(&criteria_classify(&alpha, p.horizon.unwrap_or(40))?)
        }
    };
    Ok(Output { payload, csv: None })
}
