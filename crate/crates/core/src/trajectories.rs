//! Continuous-time jump simulation over exciton populations.
//!
//! Under the secular generator the population dynamics is an exact
//! continuous-time Markov chain with the transport-channel rates, so counted
//! jumps can be sampled with the Gillespie direct method. This module is the
//! independent check on the spectral pipeline: it never touches `θ(s)`.
//!
//! Trajectory `i` draws from its own ChaCha stream (`seed`, stream `i`), so
//! results do not depend on the order in which trajectories run.

use alloc::{collections::BTreeMap, format, string::String, vec, vec::Vec};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::generator::JumpChannel;

/// Errors of the trajectory simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    /// Bad configuration.
    #[error("invalid trajectory config: {0}")]
    InvalidConfig(String),
    /// No channels to simulate.
    #[error("no jump channels given")]
    NoChannels,
    /// A channel rate is negative or not finite.
    #[error("channel {0} has a non-finite or negative rate")]
    BadRate(usize),
    /// Nothing ever happens but a burn-in from a fixed state was requested.
    #[error("total rate is zero; a non-stationary start has no relaxation time")]
    ZeroTotalRate,
    /// The stationary distribution is not unique.
    #[error("stationary distribution is not unique (reducible rate matrix)")]
    NonUniqueStationary,
}

/// Starting point of every trajectory.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InitialState {
    /// Sampled from the stationary populations.
    Stationary,
    /// Fixed exciton index.
    Exciton(usize),
}

/// Simulation settings. Times are in cm units (1/cm⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    /// End of each trajectory.
    pub t_max: f64,
    /// Number of trajectories.
    pub n_trajectories: usize,
    /// Discarded initial time; `None` picks 0 for a stationary start and
    /// `10 / (smallest nonzero escape rate)` otherwise.
    pub burn_in: Option<f64>,
    /// Base seed.
    pub seed: u64,
    /// Initial state.
    pub initial_state: InitialState,
}

impl TrajectoryConfig {
    /// Stationary start without burn-in.
    pub fn stationary(t_max: f64, n_trajectories: usize, seed: u64) -> Self {
        Self {
            t_max,
            n_trajectories,
            burn_in: None,
            seed,
            initial_state: InitialState::Stationary,
        }
    }

    fn validate(&self) -> Result<(), TrajectoryError> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(TrajectoryError::InvalidConfig(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.n_trajectories == 0 {
            return Err(TrajectoryError::InvalidConfig(String::from(
                "n_trajectories must be at least 1",
            )));
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && b < self.t_max) {
                return Err(TrajectoryError::InvalidConfig(format!(
                    "burn_in must lie in [0, t_max), got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Counted jumps observed after burn-in.
    pub counted_jumps: u64,
    /// Jumps per channel (same order as the channel list).
    pub channel_jumps: Vec<u64>,
    /// Time spent in each state after burn-in.
    pub occupation: Vec<f64>,
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Estimate {
    /// Point estimate.
    pub value: f64,
    /// Standard error.
    pub se: f64,
}

impl Estimate {
    /// `(value − reference) / se`; zero when both the difference and the
    /// error vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.value - reference;
        if self.se > 0.0 {
            diff / self.se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}

/// Empirical counting statistics of an ensemble.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CountStatistics {
    /// Observation window `t_max − burn_in`.
    pub observation_time: f64,
    /// Number of trajectories.
    pub n_trajectories: usize,
    /// `⟨K⟩ / t`.
    pub mean_rate: Estimate,
    /// `Var(K) / t`.
    pub variance_rate: Estimate,
    /// `Var(K)/⟨K⟩ − 1`; `None` when no jump was counted.
    pub mandel: Option<Estimate>,
    /// Trajectories per counted-jump number `K`.
    pub histogram: BTreeMap<u64, u64>,
    /// Mean jump rate of every channel.
    pub channel_rates: Vec<Estimate>,
    /// Mean fraction of time spent in each state.
    pub occupation: Vec<Estimate>,
    /// Non-fatal diagnostics.
    pub warnings: Vec<String>,
}

struct Chain {
    n_states: usize,
    // outgoing (channel index, rate) per state
    out: Vec<Vec<(usize, f64)>>,
    escape: Vec<f64>,
}

impl Chain {
    fn new(channels: &[JumpChannel]) -> Result<Self, TrajectoryError> {
        if channels.is_empty() {
            return Err(TrajectoryError::NoChannels);
        }
        let n_states = channels.iter().map(|c| c.from.max(c.to)).max().unwrap() + 1;
        let mut out = vec![Vec::new(); n_states];
        for (i, c) in channels.iter().enumerate() {
            if !(c.rate.is_finite() && c.rate >= 0.0) {
                return Err(TrajectoryError::BadRate(i));
            }
            if !c.is_dephasing() && c.rate > 0.0 {
                out[c.from].push((i, c.rate));
            }
        }
        let escape = out.iter().map(|o| o.iter().map(|x| x.1).sum()).collect();
        Ok(Self {
            n_states,
            out,
            escape,
        })
    }

    fn has_transitions(&self) -> bool {
        self.escape.iter().any(|&e| e > 0.0)
    }

    // π with Qπ = 0, Σπ = 1 by a direct solve
    fn stationary(&self, channels: &[JumpChannel]) -> Result<Vec<f64>, TrajectoryError> {
        let n = self.n_states;
        if !self.has_transitions() {
            // every distribution is stationary without transitions
            return Ok(vec![1.0 / n as f64; n]);
        }
        let mut q = DMatrix::<f64>::zeros(n, n);
        for c in channels.iter().filter(|c| !c.is_dephasing()) {
            q[(c.to, c.from)] += c.rate;
            q[(c.from, c.from)] -= c.rate;
        }
        for j in 0..n {
            q[(0, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(n);
        rhs[0] = 1.0;
        let pi = q
            .lu()
            .solve(&rhs)
            .ok_or(TrajectoryError::NonUniqueStationary)?;
        if pi.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(TrajectoryError::NonUniqueStationary);
        }
        Ok(pi.iter().map(|p| p.max(0.0)).collect())
    }
}

fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Prepared simulation: validated chain, start distribution and burn-in.
pub struct Simulator<'a> {
    channels: &'a [JumpChannel],
    chain: Chain,
    start: Vec<f64>,
    burn_in: f64,
    config: TrajectoryConfig,
    warnings: Vec<String>,
}

impl<'a> Simulator<'a> {
    /// Validates `channels` and `config`.
    pub fn new(
        channels: &'a [JumpChannel],
        config: &TrajectoryConfig,
    ) -> Result<Self, TrajectoryError> {
        config.validate()?;
        let chain = Chain::new(channels)?;
        let n = chain.n_states;
        let stationary = chain.stationary(channels)?;
        let (start, default_burn) = match config.initial_state {
            InitialState::Stationary => (stationary.clone(), 0.0),
            InitialState::Exciton(k) => {
                if k >= n {
                    return Err(TrajectoryError::InvalidConfig(format!(
                        "initial exciton {k} out of range for {n} states"
                    )));
                }
                let slowest = chain
                    .escape
                    .iter()
                    .copied()
                    .filter(|&e| e > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if !slowest.is_finite() {
                    return Err(TrajectoryError::ZeroTotalRate);
                }
                let mut p = vec![0.0; n];
                p[k] = 1.0;
                (p, 10.0 / slowest)
            }
        };
        let burn_in = config.burn_in.unwrap_or(default_burn);
        if burn_in >= config.t_max {
            return Err(TrajectoryError::InvalidConfig(format!(
                "burn-in {burn_in} is not shorter than t_max {}",
                config.t_max
            )));
        }
        let mut warnings = Vec::new();
        let expected: f64 = channels
            .iter()
            .filter(|c| c.counted && !c.is_dephasing())
            .map(|c| c.rate * stationary[c.from])
            .sum::<f64>()
            * (config.t_max - burn_in);
        if expected < 1.0 {
            warnings.push(format!(
                "fewer than one counted jump expected per trajectory ({expected:.3e})"
            ));
        }
        Ok(Self {
            channels,
            chain,
            start,
            burn_in,
            config: config.clone(),
            warnings,
        })
    }

    /// Number of trajectories configured.
    pub fn n_trajectories(&self) -> usize {
        self.config.n_trajectories
    }

    /// Runs trajectory `index` on its own random stream.
    pub fn run(&self, index: usize) -> TrajectoryRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index as u64);
        let n = self.chain.n_states;
        let mut state = sample_index(&mut rng, &self.start);
        let mut t = 0.0;
        let t_max = self.config.t_max;
        let mut record = TrajectoryRecord {
            counted_jumps: 0,
            channel_jumps: vec![0; self.channels.len()],
            occupation: vec![0.0; n],
        };
        loop {
            let escape = self.chain.escape[state];
            let dwell = if escape > 0.0 {
                -libm::log1p(-rng.random::<f64>()) / escape
            } else {
                f64::INFINITY
            };
            let t_next = t + dwell;
            let seg_start = t.max(self.burn_in);
            let seg_end = t_next.min(t_max);
            if seg_end > seg_start {
                record.occupation[state] += seg_end - seg_start;
            }
            if t_next >= t_max {
                break;
            }
            let out = &self.chain.out[state];
            let weights: Vec<f64> = out.iter().map(|x| x.1).collect();
            let (channel, _) = out[sample_index(&mut rng, &weights)];
            if t_next >= self.burn_in {
                record.channel_jumps[channel] += 1;
                if self.channels[channel].counted {
                    record.counted_jumps += 1;
                }
            }
            state = self.channels[channel].to;
            t = t_next;
        }
        record
    }

    /// Aggregates records (in trajectory order) into statistics.
    pub fn collect(&self, records: &[TrajectoryRecord]) -> CountStatistics {
        let t = self.config.t_max - self.burn_in;
        let n = records.len() as f64;
        let counts: Vec<f64> = records.iter().map(|r| r.counted_jumps as f64).collect();
        let m = Moments::of(&counts);

        let mean_rate = Estimate {
            value: m.mean / t,
            se: libm::sqrt(m.var / n) / t,
        };
        let var_se = libm::sqrt(((m.m4 - m.var * m.var) / n).max(0.0));
        let variance_rate = Estimate {
            value: m.var / t,
            se: var_se / t,
        };
        let mandel = (m.mean > 0.0).then(|| {
            // delta method on g(μ, v) = v/μ
            let dg_dmu = -m.var / (m.mean * m.mean);
            let dg_dv = 1.0 / m.mean;
            let var_g = (dg_dmu * dg_dmu * m.var
                + dg_dv * dg_dv * (m.m4 - m.var * m.var)
                + 2.0 * dg_dmu * dg_dv * m.m3)
                / n;
            Estimate {
                value: m.var / m.mean - 1.0,
                se: libm::sqrt(var_g.max(0.0)),
            }
        });

        let mut histogram = BTreeMap::new();
        for r in records {
            *histogram.entry(r.counted_jumps).or_insert(0) += 1;
        }
        let channel_rates = (0..self.channels.len())
            .map(|c| {
                let xs: Vec<f64> = records.iter().map(|r| r.channel_jumps[c] as f64).collect();
                let m = Moments::of(&xs);
                Estimate {
                    value: m.mean / t,
                    se: libm::sqrt(m.var / n) / t,
                }
            })
            .collect();
        let occupation = (0..self.chain.n_states)
            .map(|k| {
                let xs: Vec<f64> = records.iter().map(|r| r.occupation[k] / t).collect();
                let m = Moments::of(&xs);
                Estimate {
                    value: m.mean,
                    se: libm::sqrt(m.var / n),
                }
            })
            .collect();
        CountStatistics {
            observation_time: t,
            n_trajectories: records.len(),
            mean_rate,
            variance_rate,
            mandel,
            histogram,
            channel_rates,
            occupation,
            warnings: self.warnings.clone(),
        }
    }
}

struct Moments {
    mean: f64,
    var: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    // central moments with the unbiased variance
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            s2 += d2;
            s3 += d2 * d;
            s4 += d2 * d2;
        }
        let var = if xs.len() > 1 { s2 / (n - 1.0) } else { 0.0 };
        Self {
            mean,
            var,
            m3: s3 / n,
            m4: s4 / n,
        }
    }
}

/// Runs every trajectory sequentially and aggregates the statistics.
pub fn simulate(
    channels: &[JumpChannel],
    config: &TrajectoryConfig,
) -> Result<CountStatistics, TrajectoryError> {
    let sim = Simulator::new(channels, config)?;
    let records: Vec<TrajectoryRecord> = (0..sim.n_trajectories()).map(|i| sim.run(i)).collect();
    Ok(sim.collect(&records))
}

/// `φ̂(k) = −ln P̂_t(K) / t` on the observed bins, with `k = K/t`.
pub fn empirical_rate_function(
    stats: &CountStatistics,
    t: f64,
) -> Vec<crate::lds::RateFunctionPoint> {
    let n = stats.n_trajectories as f64;
    stats
        .histogram
        .iter()
        .filter(|(_, &count)| count > 0)
        .map(|(&k, &count)| crate::lds::RateFunctionPoint {
            k: k as f64 / t,
            phi: -libm::log(count as f64 / n) / t,
        })
        .collect()
}
