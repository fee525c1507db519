//! Monte-Carlo sweeps over SNR and receiver configurations.
//!
//! Trial `(snr_index, trial_index)` draws its bits, channel, noise and
//! synthetic beliefs from streams keyed by the master seed and those two
//! indices only, so every receiver configuration sees the same received grid
//! (paired comparison). Per-trial outcomes are collected in trial order and
//! reduced sequentially, which makes results independent of worker count.

pub mod ga;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    draw_channel, modulate_frame, noise_power_from_snr_db, random_info_bits, transmit,
    ChannelError, ChannelRealization, FrameConfig, FrameLayout, ReceivedGrid, TxFrame,
};
use crate::ldpc::LdpcCode;
use crate::rng::{self, Purpose, SimRng};
use crate::turbo::{run_receiver_seeded, IterationTrace, ReceiverConfig, TurboError};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("receiver {config} failed at snr {snr_db} dB, trial {trial}: {source}")]
    Receiver {
        config: String,
        snr_db: f64,
        trial: usize,
        #[source]
        source: TurboError,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Receiver configuration with the label used in output tables.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedConfig {
    pub label: String,
    pub receiver: ReceiverConfig,
}

impl NamedConfig {
    pub fn new(receiver: ReceiverConfig) -> Self {
        Self {
            label: receiver.estimator_kind.name().to_string(),
            receiver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_frame_errors: usize,
    pub max_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub frame: FrameConfig,
    pub taps: usize,
    pub snr_points_db: Vec<f64>,
    /// Trial count without a stop rule; batch size with one.
    pub trials_per_point: usize,
    pub configs: Vec<NamedConfig>,
    pub master_seed: u64,
    pub stop_rule: Option<StopRule>,
}

impl SweepSpec {
    pub fn validate(&self, code: &LdpcCode) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        self.frame.validate()?;
        FrameLayout::new(&self.frame, code.n())?;
        let n_used = self.frame.n_used();
        if self.taps == 0 || self.taps > n_used {
            return Err(ChannelError::TapsOutOfRange {
                taps: self.taps,
                n_used,
            }
            .into());
        }
        if self.snr_points_db.is_empty() {
            return fail("no SNR points".into());
        }
        if self.snr_points_db.iter().any(|s| s.is_nan()) {
            return fail("SNR point is NaN".into());
        }
        if self.snr_points_db.windows(2).any(|w| w[0] >= w[1]) {
            return fail("SNR points must be strictly increasing".into());
        }
        if self.trials_per_point == 0 {
            return fail("trials_per_point must be at least 1".into());
        }
        if self.configs.is_empty() {
            return fail("no receiver configurations".into());
        }
        for (i, c) in self.configs.iter().enumerate() {
            if self.configs[..i].iter().any(|d| d.label == c.label) {
                return fail(format!("duplicate configuration label {}", c.label));
            }
            c.receiver
                .validate(n_used)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", c.label)))?;
        }
        if let Some(rule) = self.stop_rule {
            if rule.max_trials == 0 {
                return fail("stop_rule.max_trials must be at least 1".into());
            }
        }
        Ok(())
    }
}

/// Everything one trial feeds to the receivers.
#[derive(Debug, Clone)]
pub struct TrialInputs {
    pub tx: TxFrame,
    pub channel: ChannelRealization,
    pub grid: ReceivedGrid,
    /// Seed for synthetic belief streams inside the receiver.
    pub aux_seed: u64,
}

/// Draws the inputs of trial `(snr_index, trial_index)`.
pub fn draw_trial(
    spec: &SweepSpec,
    code: &LdpcCode,
    snr_index: usize,
    trial_index: usize,
) -> Result<TrialInputs, HarnessError> {
    let key = |p| rng::stream(spec.master_seed, snr_index as u64, trial_index as u64, p);
    let noise_power = noise_power_from_snr_db(spec.snr_points_db[snr_index]);
    let info = random_info_bits(&spec.frame, code, &mut key(Purpose::Bits))?;
    let tx = modulate_frame(&spec.frame, code, &info, &mut key(Purpose::Filler))?;
    let channel = draw_channel(&spec.frame, spec.taps, noise_power, &mut key(Purpose::Channel))?;
    let grid = transmit(&tx, &channel, &mut key(Purpose::Noise))?;
    let aux_seed = key(Purpose::Beliefs).random();
    Ok(TrialInputs {
        tx,
        channel,
        grid,
        aux_seed,
    })
}

/// Runs every configuration on one trial's inputs.
pub fn run_configs(
    spec: &SweepSpec,
    code: &LdpcCode,
    inputs: &TrialInputs,
    snr_index: usize,
    trial_index: usize,
) -> Result<Vec<IterationTrace>, HarnessError> {
    spec.configs
        .iter()
        .map(|c| {
            run_receiver_seeded(
                &inputs.grid,
                &inputs.tx,
                &inputs.channel,
                code,
                &c.receiver,
                inputs.aux_seed,
            )
            .map_err(|source| HarnessError::Receiver {
                config: c.label.clone(),
                snr_db: spec.snr_points_db[snr_index],
                trial: trial_index,
                source,
            })
        })
        .collect()
}

/// Traces of trials `range` at one SNR point, in trial order; one inner
/// vector per trial holding one trace per configuration.
pub fn collect_traces(
    spec: &SweepSpec,
    code: &LdpcCode,
    snr_index: usize,
    range: std::ops::Range<usize>,
) -> Result<Vec<Vec<IterationTrace>>, HarnessError> {
    range
        .into_par_iter()
        .map(|t| {
            let inputs = draw_trial(spec, code, snr_index, t)?;
            run_configs(spec, code, &inputs, snr_index, t)
        })
        .collect()
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub frame_errors: usize,
    pub fer: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    pub mean_mse: f64,
}

/// Aggregate for one (SNR, configuration) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub label: String,
    pub trials_run: usize,
    /// Index `i` holds outer iteration `i`.
    pub iterations: Vec<IterationStats>,
}

impl PointResult {
    pub fn final_stats(&self) -> &IterationStats {
        self.iterations.last().expect("at least one iteration")
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub master_seed: u64,
    /// SNR-major, configuration-minor.
    pub points: Vec<PointResult>,
    pub wall_time: Duration,
}

/// Equality ignores `wall_time`.
impl PartialEq for SweepResult {
    fn eq(&self, other: &Self) -> bool {
        self.master_seed == other.master_seed && self.points == other.points
    }
}

impl SweepResult {
    pub fn point(&self, snr_index: usize, config_index: usize, n_configs: usize) -> &PointResult {
        &self.points[snr_index * n_configs + config_index]
    }
}

fn aggregate(spec: &SweepSpec, snr_db: f64, traces: &[Vec<IterationTrace>]) -> Vec<PointResult> {
    spec.configs
        .iter()
        .enumerate()
        .map(|(c, named)| {
            let n_iter = named.receiver.outer_iterations + 1;
            let trials = traces.len();
            let iterations = (0..n_iter)
                .map(|i| {
                    let mut errors = 0;
                    let mut mse = 0.0;
                    for trial in traces {
                        let rec = &trial[c].records[i];
                        errors += usize::from(rec.frame_error);
                        mse += rec.channel_mse;
                    }
                    let (fer_lo, fer_hi) = wilson_interval(errors, trials, Z_95);
                    IterationStats {
                        frame_errors: errors,
                        fer: errors as f64 / trials as f64,
                        fer_lo,
                        fer_hi,
                        mean_mse: mse / trials as f64,
                    }
                })
                .collect();
            PointResult {
                snr_db,
                label: named.label.clone(),
                trials_run: trials,
                iterations,
            }
        })
        .collect()
}

fn stop_reached(spec: &SweepSpec, rule: StopRule, traces: &[Vec<IterationTrace>]) -> bool {
    if traces.len() >= rule.max_trials {
        return true;
    }
    (0..spec.configs.len()).all(|c| {
        traces
            .iter()
            .filter(|t| t[c].final_record().frame_error)
            .count()
            >= rule.min_frame_errors
    })
}

/// Runs the sweep on a pool of `workers` threads (0 = rayon default).
pub fn run_sweep(
    spec: &SweepSpec,
    code: &LdpcCode,
    workers: usize,
) -> Result<SweepResult, HarnessError> {
    spec.validate(code)?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let points = pool.install(|| -> Result<Vec<PointResult>, HarnessError> {
        let mut points = Vec::new();
        for (s, &snr_db) in spec.snr_points_db.iter().enumerate() {
            let traces = match spec.stop_rule {
                None => collect_traces(spec, code, s, 0..spec.trials_per_point)?,
                Some(rule) => {
                    let mut traces = Vec::new();
                    while !stop_reached(spec, rule, &traces) {
                        let start = traces.len();
                        let end = (start + spec.trials_per_point).min(rule.max_trials);
                        traces.extend(collect_traces(spec, code, s, start..end)?);
                    }
                    traces
                }
            };
            points.extend(aggregate(spec, snr_db, &traces));
        }
        Ok(points)
    })?;

    Ok(SweepResult {
        master_seed: spec.master_seed,
        points,
        wall_time: started.elapsed(),
    })
}

/// Paired bootstrap of `mean(a - b)`: returns the point estimate and the
/// percentile interval at `confidence`.
pub fn paired_bootstrap(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> (f64, f64, f64) {
    assert_eq!(a.len(), b.len(), "paired samples");
    assert!(!a.is_empty() && resamples > 0);
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let mut rng = SimRng::seed_from_u64(seed);
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let idx = |q: f64| ((q * resamples as f64).floor() as usize).min(resamples - 1);
    (mean, stats[idx(tail)], stats[idx(1.0 - tail)])
}
