//! Regenerative discrete-event simulation of the threshold queue.
//!
//! A cycle is an idle period followed by the busy period it ends. Each
//! service draws its duration from `b1` when the number in system, counting
//! the customer entering service, is at most `L`, and from `b2` otherwise.
//! Cycle `i` consumes random numbers only from its own counter-based stream,
//! so reports are bit-identical for a given seed however the work is split.
//!
//! `p2_hat` estimates the long-run fraction of time spent serving with `b2`,
//! which is the quantity the exact formulas give as `p2`. The fraction of
//! time with more than `L` customers present is reported as `p_above_hat`.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytics::DamModel;
use crate::distributions::ServiceDistribution;
use crate::error::{DamError, Result};
use crate::rng::{split_seed, CycleStream};

pub const DEFAULT_BATCH_COUNT: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: DamModel,
    pub n_cycles: u64,
    pub seed: u64,
    #[serde(default = "default_batch_count")]
    pub batch_count: usize,
}

fn default_batch_count() -> usize {
    DEFAULT_BATCH_COUNT
}

impl SimulationConfig {
    pub fn new(model: DamModel, n_cycles: u64, seed: u64) -> Self {
        SimulationConfig { model, n_cycles, seed, batch_count: DEFAULT_BATCH_COUNT }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.batch_count < 2 {
            return Err(DamError::invalid(format!("batch_count must be at least 2, got {}", self.batch_count)));
        }
        if self.n_cycles < self.batch_count as u64 {
            return Err(DamError::invalid(format!(
                "n_cycles ({}) must be at least batch_count ({})",
                self.n_cycles, self.batch_count
            )));
        }
        Ok(())
    }
}

/// Bookkeeping of one regeneration cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub idle: f64,
    pub services_below: u64,
    pub services_above: u64,
    pub services: u64,
    /// Service time spent under `b1`.
    pub busy_below: f64,
    /// Service time spent under `b2`.
    pub busy_above: f64,
    pub busy: f64,
    /// Time with more than `L` customers present.
    pub time_above: f64,
}

impl CycleRecord {
    pub fn length(&self) -> f64 {
        self.idle + self.busy
    }
}

enum Sampler {
    Exp(Exp<f64>),
    Gamma(Gamma<f64>),
    Fixed(f64),
    Mixture(Vec<f64>, Vec<Exp<f64>>),
}

impl Sampler {
    fn new(dist: &ServiceDistribution) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| DamError::invalid(format!("cannot sample {dist}: {e}"));
        Ok(match dist {
            ServiceDistribution::Exponential { rate } => Sampler::Exp(Exp::new(*rate).map_err(|e| bad(&e))?),
            ServiceDistribution::Erlang { shape, rate } => {
                Sampler::Gamma(Gamma::new(f64::from(*shape), 1.0 / rate).map_err(|e| bad(&e))?)
            }
            ServiceDistribution::Gamma { shape, rate } => {
                Sampler::Gamma(Gamma::new(*shape, 1.0 / rate).map_err(|e| bad(&e))?)
            }
            ServiceDistribution::Deterministic { duration } => Sampler::Fixed(*duration),
            ServiceDistribution::HyperExponential { weights, rates } => {
                let mut cumulative = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w;
                    cumulative.push(acc);
                }
                let exps = rates
                    .iter()
                    .map(|r| Exp::new(*r).map_err(|e| bad(&e)))
                    .collect::<Result<Vec<_>>>()?;
                Sampler::Mixture(cumulative, exps)
            }
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Fixed(x) => *x,
            Sampler::Mixture(cumulative, exps) => {
                let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let i = cumulative.iter().position(|c| u < *c).unwrap_or(exps.len() - 1);
                exps[i].sample(rng)
            }
        }
    }
}

struct Simulator {
    interarrival: Exp<f64>,
    below: Sampler,
    above: Sampler,
    level: u64,
    seed: u64,
}

impl Simulator {
    fn new(model: &DamModel, seed: u64) -> Result<Self> {
        model.validate()?;
        Ok(Simulator {
            interarrival: Exp::new(model.lambda).map_err(|e| DamError::invalid(e.to_string()))?,
            below: Sampler::new(&model.b1)?,
            above: Sampler::new(&model.b2)?,
            level: model.level as u64,
            seed,
        })
    }

    fn cycle(&self, index: u64) -> CycleRecord {
        let mut rng = CycleStream::new(self.seed, index);
        let mut rec = CycleRecord { idle: self.interarrival.sample(&mut rng), ..CycleRecord::default() };
        let mut n: u64 = 1;
        while n > 0 {
            let use_b2 = n > self.level;
            let s = if use_b2 { self.above.sample(&mut rng) } else { self.below.sample(&mut rng) };
            // Arrivals strictly before the service end join first; one at the
            // same instant is treated as coming after the departure. The
            // overshoot of the last interarrival is discarded, which is exact
            // by memorylessness.
            let mut t = 0.0;
            loop {
                let a = self.interarrival.sample(&mut rng);
                let end = if t + a < s { t + a } else { s };
                if n > self.level {
                    rec.time_above += end - t;
                }
                if end == s {
                    break;
                }
                t = end;
                n += 1;
            }
            n -= 1;
            rec.services += 1;
            if use_b2 {
                rec.services_above += 1;
                rec.busy_above += s;
            } else {
                rec.services_below += 1;
                rec.busy_below += s;
            }
        }
        rec.busy = rec.busy_below + rec.busy_above;
        rec
    }
}

/// Simulates cycle `index` of the run with base `seed`.
pub fn simulate_cycle(model: &DamModel, seed: u64, index: u64) -> Result<CycleRecord> {
    Ok(Simulator::new(model, seed)?.cycle(index))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Totals {
    cycles: f64,
    length: f64,
    idle: f64,
    busy_above: f64,
    time_above: f64,
    nu1: f64,
    nu2: f64,
    t1: f64,
    t2: f64,
}

impl Totals {
    fn add(&mut self, r: &CycleRecord) {
        self.cycles += 1.0;
        self.length += r.length();
        self.idle += r.idle;
        self.busy_above += r.busy_above;
        self.time_above += r.time_above;
        self.nu1 += r.services_below as f64;
        self.nu2 += r.services_above as f64;
        self.t1 += r.busy_below;
        self.t2 += r.busy_above;
    }

    fn merge(&mut self, o: &Totals) {
        self.cycles += o.cycles;
        self.length += o.length;
        self.idle += o.idle;
        self.busy_above += o.busy_above;
        self.time_above += o.time_above;
        self.nu1 += o.nu1;
        self.nu2 += o.nu2;
        self.t1 += o.t1;
        self.t2 += o.t2;
    }

    fn estimates(&self) -> [f64; 7] {
        [
            self.idle / self.length,
            self.busy_above / self.length,
            self.time_above / self.length,
            self.nu1 / self.cycles,
            self.nu2 / self.cycles,
            self.t1 / self.cycles,
            self.t2 / self.cycles,
        ]
    }
}

/// 95% confidence half-widths, one per estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfWidths {
    pub p1: f64,
    pub p2: f64,
    pub p_above: f64,
    pub e_nu1: f64,
    pub e_nu2: f64,
    pub e_t1: f64,
    pub e_t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub p1_hat: f64,
    pub p2_hat: f64,
    pub p_above_hat: f64,
    pub e_nu1_hat: f64,
    pub e_nu2_hat: f64,
    pub e_t1_hat: f64,
    pub e_t2_hat: f64,
    pub half_widths: HalfWidths,
    pub cycles: u64,
    pub seed: u64,
    pub batch_count: usize,
}

/// Runs `n_cycles` cycles. Cycles are grouped into `batch_count` contiguous
/// batches; point estimates pool all cycles and half-widths come from the
/// spread of the batch estimates with a Student-t quantile.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    let sim = Simulator::new(&config.model, config.seed)?;
    let b = config.batch_count as u64;
    let (base, extra) = (config.n_cycles / b, config.n_cycles % b);
    let bounds = |k: u64| k * base + k.min(extra);

    let batches: Vec<Totals> = (0..b)
        .into_par_iter()
        .map(|k| {
            let mut t = Totals::default();
            for i in bounds(k)..bounds(k + 1) {
                t.add(&sim.cycle(i));
            }
            t
        })
        .collect();

    let mut total = Totals::default();
    for t in &batches {
        total.merge(t);
    }
    let point = total.estimates();
    let per_batch: Vec<[f64; 7]> = batches.iter().map(Totals::estimates).collect();
    let dof = (config.batch_count - 1) as f64;
    let t_quantile = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| DamError::NumericDegeneracy(e.to_string()))?
        .inverse_cdf(0.975);
    let half = |j: usize| {
        let m = per_batch.iter().map(|e| e[j]).sum::<f64>() / b as f64;
        let var = per_batch.iter().map(|e| (e[j] - m).powi(2)).sum::<f64>() / dof;
        t_quantile * (var / b as f64).sqrt()
    };

    Ok(SimulationReport {
        p1_hat: point[0],
        p2_hat: point[1],
        p_above_hat: point[2],
        e_nu1_hat: point[3],
        e_nu2_hat: point[4],
        e_t1_hat: point[5],
        e_t2_hat: point[6],
        half_widths: HalfWidths {
            p1: half(0),
            p2: half(1),
            p_above: half(2),
            e_nu1: half(3),
            e_nu2: half(4),
            e_t1: half(5),
            e_t2: half(6),
        },
        cycles: config.n_cycles,
        seed: config.seed,
        batch_count: config.batch_count,
    })
}

/// Simulates each configuration with its own seed. Output `i` depends only on
/// `configs[i]`, so permuting the input permutes the output and a single
/// configuration reproduces [`simulate`].
pub fn sweep_simulate(configs: &[SimulationConfig]) -> Result<Vec<SimulationReport>> {
    if configs.is_empty() {
        return Err(DamError::invalid("no simulation configurations given"));
    }
    configs.par_iter().map(simulate).collect()
}

/// `count` independent replications of `config`; replication `i` runs with
/// seed [`split_seed`]`(config.seed, i)`.
pub fn replicate(config: &SimulationConfig, count: usize) -> Result<Vec<SimulationReport>> {
    let configs: Vec<SimulationConfig> = (0..count as u64)
        .map(|i| SimulationConfig { seed: split_seed(config.seed, i), ..config.clone() })
        .collect();
    sweep_simulate(&configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mm1(level: usize) -> DamModel {
        DamModel::new(
            1.0,
            ServiceDistribution::exponential(1.25).unwrap(),
            ServiceDistribution::exponential(2.0).unwrap(),
            level,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = SimulationConfig::new(mm1(5), 10, 1);
        assert!(c.validate().is_err());
        c.n_cycles = 32;
        assert!(c.validate().is_ok());
        c.batch_count = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn uneven_batches_cover_all_cycles() {
        let c = SimulationConfig { batch_count: 3, ..SimulationConfig::new(mm1(2), 10, 5) };
        let r = simulate(&c).unwrap();
        let sim = Simulator::new(&c.model, 5).unwrap();
        let nu: u64 = (0..10).map(|i| sim.cycle(i).services_below).sum();
        assert!((r.e_nu1_hat - nu as f64 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_service_counts() {
        let model = DamModel::new(
            0.5,
            ServiceDistribution::deterministic(1.0).unwrap(),
            ServiceDistribution::deterministic(0.5).unwrap(),
            1,
        )
        .unwrap();
        let rec = simulate_cycle(&model, 3, 0).unwrap();
        assert!(rec.services >= 1);
        assert_eq!(rec.busy, rec.services_below as f64 * 1.0 + rec.services_above as f64 * 0.5);
    }
}
