//! Replica scheduling.
//!
//! Replica `i` of a run with master seed `s` draws from a ChaCha8 stream
//! seeded by [`stream_seed`]`(s, i)`, a splitmix64 finalizer applied to
//! `s + (i + 1) * GOLDEN`. Results are always collected in replica order and
//! folded sequentially, so aggregates do not depend on the worker count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type ReplicaRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(seed: u64, replica: u64) -> u64 {
    splitmix64(seed.wrapping_add(replica.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn replica_rng(seed: u64, replica: u64) -> ReplicaRng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, replica))
}

/// Uniform draw on the open interval (0, 1): `(m + 1/2) / 2^53` for a uniform
/// 53-bit `m`. The value is an exact dyadic rational.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// How replicas are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exec {
    /// `None` uses the ambient rayon pool; `Some(1)` forces sequential evaluation.
    pub workers: Option<usize>,
}

impl Default for Exec {
    fn default() -> Self {
        Self::parallel()
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec { workers: Some(1) }
    }

    pub fn parallel() -> Self {
        Exec { workers: None }
    }

    pub fn with_workers(workers: usize) -> Self {
        Exec {
            workers: Some(workers.max(1)),
        }
    }

    pub fn is_sequential(&self) -> bool {
        !cfg!(feature = "parallel") || self.workers == Some(1)
    }

    /// Evaluates `f(i)` for `i` in `range`, returning results in index order.
    pub fn map<T, F>(&self, range: std::ops::Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.is_sequential() {
            return range.map(f).collect();
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let run = || range.clone().into_par_iter().map(&f).collect::<Vec<T>>();
            match self.workers {
                Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
                    Ok(pool) => pool.install(run),
                    Err(_) => run(),
                },
                None => run(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            range.map(f).collect()
        }
    }
}

/// Seed, replica count and execution mode for one Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub seed: u64,
    pub samples: u64,
    #[serde(default)]
    pub exec: Exec,
}

impl MonteCarlo {
    pub fn new(seed: u64, samples: u64) -> Self {
        MonteCarlo {
            seed,
            samples,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// A derived plan whose replica streams are disjoint from this one's.
    pub fn substream(&self, tag: u64) -> MonteCarlo {
        MonteCarlo {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5EED))),
            ..*self
        }
    }

    pub fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ReplicaRng, u64) -> T + Sync + Send,
    {
        let seed = self.seed;
        self.exec.map(0..self.samples, |i| {
            let mut rng = replica_rng(seed, i);
            f(&mut rng, i)
        })
    }

    /// Replicas `[start, end)` of the same schedule.
    pub fn map_range<T, F>(&self, start: u64, end: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ReplicaRng, u64) -> T + Sync + Send,
    {
        let seed = self.seed;
        self.exec.map(start..end, |i| {
            let mut rng = replica_rng(seed, i);
            f(&mut rng, i)
        })
    }

    pub fn count<F>(&self, f: F) -> u64
    where
        F: Fn(&mut ReplicaRng, u64) -> bool + Sync + Send,
    {
        self.map(f).into_iter().filter(|&b| b).count() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_unit_stays_inside() {
        let mut rng = replica_rng(1, 2);
        for _ in 0..10_000 {
            let u = open_unit(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: Vec<u64> = (0..8).map(|i| replica_rng(7, i).next_u64()).collect();
        let b: Vec<u64> = (0..8).map(|i| replica_rng(7, i).next_u64()).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let f = |rng: &mut ReplicaRng, _| open_unit(rng);
        let seq = MonteCarlo::new(3, 500).with_exec(Exec::sequential()).map(f);
        let par = MonteCarlo::new(3, 500).with_exec(Exec::with_workers(4)).map(f);
        assert_eq!(seq, par);
    }
}
