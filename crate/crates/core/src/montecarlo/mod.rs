//! Sampling oracle for the logical BSM.
//!
//! Each sample draws one [`World`] — loss flags, completeness coins and Pauli
//! faults — and runs the protocol's decision procedure on it. Every branch of
//! the procedure reads the same world, so distinct recovery attempts use
//! disjoint photons exactly as in the analytic recursions.
//!
//! Sampling is split into `workers` chunks; chunk `i` draws from ChaCha8
//! stream `i` of `seed`, so totals depend on `(seed, workers)` only.

mod evaluate;
mod world;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{build_tree, BranchingVector, ChannelParams, ModelError, Protocol};

pub use evaluate::{evaluate, LogicalOutcome};
pub use world::{pair_states, Fault, PairState, World, FAULT_I, FAULT_X, FAULT_Y, FAULT_Z};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("{0} protocol requested but configuration says {1}")]
    WrongProtocol(Protocol, Protocol),
    #[error(
        "loss-only protocol with eps = {0}: the loss-only protocol fails to enable error \
         correction, so error estimation is unsupported"
    )]
    Unsupported(f64),
    #[error("exhaustive enumeration over {pairs} pairs is too large (cap {cap})")]
    EnumerationTooLarge { pairs: usize, cap: usize },
    #[error("exhaustive enumeration needs eps = 0")]
    EnumerationNeedsNoFaults,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub b: BranchingVector,
    pub params: ChannelParams,
    pub protocol: Protocol,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl SampleConfig {
    pub fn new(b: BranchingVector, params: ChannelParams, protocol: Protocol) -> Self {
        Self {
            b,
            params,
            protocol,
            samples: 100_000,
            seed: 0,
            workers: 1,
        }
    }

    pub fn samples(mut self, n: u64) -> Self {
        self.samples = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn workers(mut self, w: usize) -> Self {
        self.workers = w;
        self
    }
}

/// Raw tallies; all estimates are derived from these.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub samples: u64,
    /// Both logical parities obtained.
    pub complete: u64,
    /// ... and at least one of them wrong.
    pub complete_wrong: u64,
    pub xx: u64,
    pub xx_wrong: u64,
    pub zz: u64,
    pub zz_wrong: u64,
}

impl Counters {
    fn record(&mut self, o: LogicalOutcome) {
        self.samples += 1;
        if let Some(e) = o.x {
            self.xx += 1;
            self.xx_wrong += e as u64;
        }
        if let Some(e) = o.z {
            self.zz += 1;
            self.zz_wrong += e as u64;
        }
        if let Some(e) = o.complete() {
            self.complete += 1;
            self.complete_wrong += e as u64;
        }
    }

    fn merge(mut self, o: Counters) -> Counters {
        self.samples += o.samples;
        self.complete += o.complete;
        self.complete_wrong += o.complete_wrong;
        self.xx += o.xx;
        self.xx_wrong += o.xx_wrong;
        self.zz += o.zz;
        self.zz_wrong += o.zz_wrong;
        self
    }
}

/// A binomial proportion with its standard error `sqrt(p(1-p)/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Proportion {
    pub fn new(hits: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                value: 0.0,
                stderr: 0.0,
                n,
            };
        }
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// `(value - expected) / stderr`. When no spread was observed (all hits
    /// or none) the spread implied by `expected` is used instead; if that is
    /// zero too, exact agreement (to `1e-12`) gives 0 and anything else
    /// infinity.
    pub fn z_score(&self, expected: f64) -> f64 {
        let d = self.value - expected;
        let null = if self.n > 0 {
            (expected * (1.0 - expected) / self.n as f64).max(0.0).sqrt()
        } else {
            0.0
        };
        if self.stderr > 0.0 {
            d / self.stderr
        } else if null > 0.0 {
            d / null
        } else if d.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub config: SampleConfig,
    /// Probability that both `X_L X_L'` and `Z_L Z_L'` are obtained.
    pub success: Proportion,
    /// Probability that at least one of them is wrong, given success.
    pub error: Proportion,
    pub pr_xx: Proportion,
    /// `X_L X_L'` error given that it was obtained.
    pub err_xx: Proportion,
    pub pr_zz: Proportion,
    pub err_zz: Proportion,
    pub counters: Counters,
    pub wall_seconds: f64,
}

impl McEstimate {
    fn from_counters(config: SampleConfig, c: Counters, wall_seconds: f64) -> Self {
        Self {
            config,
            success: Proportion::new(c.complete, c.samples),
            error: Proportion::new(c.complete_wrong, c.complete),
            pr_xx: Proportion::new(c.xx, c.samples),
            err_xx: Proportion::new(c.xx_wrong, c.xx),
            pr_zz: Proportion::new(c.zz, c.samples),
            err_zz: Proportion::new(c.zz_wrong, c.zz),
            counters: c,
            wall_seconds,
        }
    }
}

fn check(cfg: &SampleConfig) -> Result<(), McError> {
    if cfg.samples == 0 {
        return Err(McError::NoSamples);
    }
    if cfg.workers == 0 {
        return Err(McError::NoWorkers);
    }
    if cfg.protocol == Protocol::LossOnly && cfg.params.eps > 0.0 {
        return Err(McError::Unsupported(cfg.params.eps));
    }
    Ok(())
}

fn worker_rng(seed: u64, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker as u64);
    rng
}

/// Samples `cfg.protocol`.
pub fn run(cfg: &SampleConfig) -> Result<McEstimate, McError> {
    check(cfg)?;
    let start = Instant::now();
    let tree = build_tree(&cfg.b)?;
    let workers = cfg.workers as u64;
    let counters = (0..cfg.workers)
        .into_par_iter()
        .map(|w| {
            let share = cfg.samples / workers + u64::from((w as u64) < cfg.samples % workers);
            let mut rng = worker_rng(cfg.seed, w);
            let mut world = World::new(tree.vertex_count());
            let mut audit = Vec::new();
            let mut c = Counters::default();
            for _ in 0..share {
                world.resample(&mut rng, &cfg.params);
                c.record(evaluate(cfg.protocol, &tree, &world, &mut rng, &mut audit));
            }
            c
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Counters::default(), Counters::merge);
    Ok(McEstimate::from_counters(
        cfg.clone(),
        counters,
        start.elapsed().as_secs_f64(),
    ))
}

fn run_as(expected: Protocol, cfg: &SampleConfig) -> Result<McEstimate, McError> {
    if cfg.protocol != expected {
        return Err(McError::WrongProtocol(expected, cfg.protocol));
    }
    run(cfg)
}

pub fn run_static(cfg: &SampleConfig) -> Result<McEstimate, McError> {
    run_as(Protocol::Static, cfg)
}

pub fn run_dynamic(cfg: &SampleConfig) -> Result<McEstimate, McError> {
    run_as(Protocol::Dynamic, cfg)
}

pub fn run_loss_only(cfg: &SampleConfig) -> Result<McEstimate, McError> {
    run_as(Protocol::LossOnly, cfg)
}

/// Exact success probabilities from enumerating every loss × coin world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSuccess {
    pub pr_complete: f64,
    pub pr_xx: f64,
    pub pr_zz: f64,
    pub worlds: u64,
}

/// Largest number of pairs [`enumerate_success`] accepts (`5^12` worlds).
pub const ENUMERATION_PAIR_CAP: usize = 12;

/// Enumerates all `5^(n-1)` fault-free worlds of `b` and sums their
/// weights. Requires `eps = 0` (votes then never matter).
pub fn enumerate_success(
    protocol: Protocol,
    b: &BranchingVector,
    params: &ChannelParams,
) -> Result<ExactSuccess, McError> {
    if params.eps > 0.0 {
        return Err(McError::EnumerationNeedsNoFaults);
    }
    let tree = build_tree(b)?;
    let pairs = tree.vertex_count() - 1;
    if pairs > ENUMERATION_PAIR_CAP {
        return Err(McError::EnumerationTooLarge {
            pairs,
            cap: ENUMERATION_PAIR_CAP,
        });
    }
    let states = pair_states(params.eta);
    let total = 5u64.pow(pairs as u32);
    // Chunks are summed in index order so the result does not depend on the
    // thread pool.
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<[f64; 3]> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut world = World::new(tree.vertex_count());
            let mut rng = worker_rng(0, 0);
            let mut audit = Vec::new();
            let mut acc = [0.0; 3];
            for idx in ci * CHUNK..((ci + 1) * CHUNK).min(total) {
                let mut rest = idx;
                let mut weight = 1.0;
                for p in world.pairs.iter_mut().skip(1) {
                    let (s, w) = states[(rest % 5) as usize];
                    rest /= 5;
                    *p = s;
                    weight *= w;
                }
                if weight == 0.0 {
                    continue;
                }
                let o = evaluate(protocol, &tree, &world, &mut rng, &mut audit);
                acc[0] += weight * o.complete().is_some() as u8 as f64;
                acc[1] += weight * o.x.is_some() as u8 as f64;
                acc[2] += weight * o.z.is_some() as u8 as f64;
            }
            acc
        })
        .collect();
    let sum = parts.iter().fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]]);
    Ok(ExactSuccess {
        pr_complete: sum[0],
        pr_xx: sum[1],
        pr_zz: sum[2],
        worlds: total,
    })
}

/// Flip rates of a single two-photon BSM under independent depolarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFaultEstimate {
    /// `ZZ'` reported wrong.
    pub zz: Proportion,
    /// Wrong Bell state, i.e. `XX'` reading charged with any error.
    pub xx: Proportion,
}

/// Samples the fault pair of one BSM `samples` times.
pub fn sample_pair_faults(
    params: &ChannelParams,
    samples: u64,
    seed: u64,
) -> PairFaultEstimate {
    let mut rng = worker_rng(seed, 0);
    let mut world = World::new(2);
    let lossless = ChannelParams { eta: 1.0, ..*params };
    let (mut zz, mut xx) = (0u64, 0u64);
    for _ in 0..samples {
        world.resample(&mut rng, &lossless);
        let p = world.pairs[1];
        zz += p.zz_flip() as u64;
        xx += p.xx_wrong() as u64;
    }
    PairFaultEstimate {
        zz: Proportion::new(zz, samples),
        xx: Proportion::new(xx, samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(b: &str, eta: f64, eps: f64, p: Protocol) -> SampleConfig {
        SampleConfig::new(b.parse().unwrap(), ChannelParams::new(eta, eps).unwrap(), p)
    }

    #[test]
    fn reproducible_for_fixed_seed_and_workers() {
        let c = cfg("2,2", 0.8, 0.01, Protocol::Dynamic).samples(5000).seed(7).workers(3);
        assert_eq!(run(&c).unwrap().counters, run(&c).unwrap().counters);
        let other = run(&c.clone().seed(8)).unwrap().counters;
        assert_ne!(run(&c).unwrap().counters, other);
    }

    #[test]
    fn lossless_star_gives_three_quarters() {
        let e = enumerate_success(Protocol::Static, &"2".parse().unwrap(), &ChannelParams::lossless())
            .unwrap();
        assert!((e.pr_complete - 0.75).abs() < 1e-15);
    }

    #[test]
    fn loss_only_rejects_faults() {
        let c = cfg("2,2", 0.8, 0.01, Protocol::LossOnly);
        let err = run(&c).unwrap_err();
        assert!(err.to_string().contains("fails to enable error correction"));
    }

    #[test]
    fn wrong_protocol_is_rejected() {
        let c = cfg("2", 0.8, 0.0, Protocol::Static);
        assert!(matches!(run_dynamic(&c), Err(McError::WrongProtocol(..))));
        assert!(run_static(&c.samples(10)).is_ok());
    }

    #[test]
    fn pair_faults_match_channel() {
        let p = ChannelParams::new(1.0, 0.01).unwrap();
        let est = sample_pair_faults(&p, 200_000, 1);
        assert!(est.zz.z_score(p.err_dzz()).abs() < 4.0);
        assert!(est.xx.z_score(p.eps_bsm()).abs() < 4.0);
    }

    #[test]
    fn z_score_without_observed_spread() {
        let none = Proportion::new(0, 100_000);
        assert!(none.z_score(1e-7).abs() <= 0.2);
        assert!(none.z_score(0.01) < -30.0);
        assert_eq!(Proportion::new(10, 10).z_score(1.0), 0.0);
        assert_eq!(Proportion::new(0, 10).z_score(0.0), 0.0);
    }
}
