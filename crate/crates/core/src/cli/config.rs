//! Sectioned `key = value` run configuration.
//!
//! Grammar (see `docs/config.md`): blank lines and lines starting with `#`
//! are ignored; `[section]` opens a section; every other line is
//! `key = value` inside a section. Keys are addressed as `section.key`, both
//! in files and in `--set` overrides. Unknown or repeated keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::channel::FrameConfig;
use crate::estimation::EstimatorKind;
use crate::harness::ga::{FitnessKind, GaParams, GaSpec};
use crate::harness::{NamedConfig, StopRule, SweepSpec};
use crate::ldpc::MinSumConfig;
use crate::turbo::{BeliefSource, DemapMode, ReceiverConfig, SigmaMode};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key {key}")]
    UnknownKey { key: String },
    #[error("key {key} set twice")]
    Duplicate { key: String },
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Io(String),
}

/// Every tunable of a run, with documented defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frame: FrameConfig,
    pub taps: usize,
    /// `None` selects the bundled (288, 144) code.
    pub code_path: Option<PathBuf>,
    pub decoder: MinSumConfig,
    pub estimators: Vec<EstimatorKind>,
    pub outer_iterations: usize,
    pub c_param: f64,
    /// File holding a calibrated `C`; overrides `c_param` when set.
    pub c_from: Option<PathBuf>,
    pub sigma_mode: SigmaMode,
    pub dft_denoise: bool,
    pub tap_cutoff: usize,
    pub demap_mode: DemapMode,
    pub belief_source: BeliefSource,
    /// Wrong-sign rate of corrupted beliefs.
    pub flip_prob: f64,
    pub snr_points_db: Vec<f64>,
    pub trials_per_point: usize,
    pub master_seed: u64,
    /// 0 disables early stopping.
    pub min_frame_errors: usize,
    pub max_trials: usize,
    pub ga: GaParams,
    pub ga_fitness: FitnessKind,
    pub ga_snr_db: f64,
    pub ga_trials: usize,
    pub ga_flip_prob: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let receiver = ReceiverConfig::default();
        Self {
            frame: FrameConfig::default(),
            taps: 4,
            code_path: None,
            decoder: receiver.decoder,
            estimators: vec![
                EstimatorKind::PilotOnly,
                EstimatorKind::Hard,
                EstimatorKind::SoftParam,
            ],
            outer_iterations: receiver.outer_iterations,
            c_param: receiver.c_param,
            c_from: None,
            sigma_mode: receiver.sigma_mode,
            dft_denoise: receiver.dft_denoise,
            tap_cutoff: receiver.tap_cutoff,
            demap_mode: receiver.demap_mode,
            belief_source: receiver.belief_source,
            flip_prob: 0.1,
            snr_points_db: vec![-2.0, 0.0, 2.0],
            trials_per_point: 200,
            master_seed: 1,
            min_frame_errors: 0,
            max_trials: 0,
            ga: GaParams::default(),
            ga_fitness: FitnessKind::MeanMse,
            ga_snr_db: 1.0,
            ga_trials: 200,
            ga_flip_prob: 0.1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn list<T>(value: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn opt_path(s: &str) -> Option<PathBuf> {
    (!s.is_empty()).then(|| PathBuf::from(s))
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn sigma_name(m: SigmaMode) -> &'static str {
    match m {
        SigmaMode::TrueSigma => "true_sigma",
        SigmaMode::CTimesAvgVariance => "c_times_avg_variance",
    }
}

fn demap_name(m: DemapMode) -> &'static str {
    match m {
        DemapMode::ExactLogSumExp => "exact",
        DemapMode::MaxLog => "max_log",
    }
}

fn fitness_name(f: FitnessKind) -> &'static str {
    match f {
        FitnessKind::MeanMse => "mean_mse",
        FitnessKind::Fer => "fer",
        FitnessKind::Synthetic => "synthetic",
    }
}

/// All keys in canonical order.
pub const KEYS: &[&str] = &[
    "frame.n_data",
    "frame.n_pilot",
    "frame.rb_size",
    "frame.rb_num",
    "frame.n_rx",
    "frame.pilot_amp",
    "frame.pilot_positions",
    "frame.modulation_order",
    "channel.taps",
    "code.path",
    "decoder.max_iters",
    "decoder.scale",
    "receiver.estimators",
    "receiver.outer_iterations",
    "receiver.c_param",
    "receiver.c_from",
    "receiver.sigma_mode",
    "receiver.dft_denoise",
    "receiver.tap_cutoff",
    "receiver.demap_mode",
    "receiver.belief_source",
    "receiver.flip_prob",
    "harness.snr_points_db",
    "harness.trials_per_point",
    "harness.master_seed",
    "harness.min_frame_errors",
    "harness.max_trials",
    "ga.population",
    "ga.generations",
    "ga.c_low",
    "ga.c_high",
    "ga.mutation_sigma",
    "ga.mutation_prob",
    "ga.tournament_size",
    "ga.seed",
    "ga.fitness",
    "ga.snr_db",
    "ga.trials",
    "ga.flip_prob",
    "output.dir",
];

impl RunConfig {
    /// Sets one `section.key`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let result: Result<(), String> = (|| {
            match key {
                "frame.n_data" => self.frame.n_data = num(v)?,
                "frame.n_pilot" => self.frame.n_pilot = num(v)?,
                "frame.rb_size" => self.frame.rb_size = num(v)?,
                "frame.rb_num" => self.frame.rb_num = num(v)?,
                "frame.n_rx" => self.frame.n_rx = num(v)?,
                "frame.pilot_amp" => self.frame.pilot_amp = num(v)?,
                "frame.pilot_positions" => self.frame.pilot_positions = list(v, num)?,
                "frame.modulation_order" => self.frame.modulation_order = num(v)?,
                "channel.taps" => self.taps = num(v)?,
                "code.path" => self.code_path = opt_path(v),
                "decoder.max_iters" => self.decoder.max_iters = num(v)?,
                "decoder.scale" => self.decoder.scale = num(v)?,
                "receiver.estimators" => {
                    let kinds = list(v, |s| {
                        EstimatorKind::from_name(s).ok_or_else(|| {
                            let names: Vec<_> = EstimatorKind::ALL.iter().map(|k| k.name()).collect();
                            format!("unknown estimator {s}; expected one of {}", names.join(", "))
                        })
                    })?;
                    if kinds.is_empty() {
                        return Err("at least one estimator required".into());
                    }
                    self.estimators = kinds;
                }
                "receiver.outer_iterations" => self.outer_iterations = num(v)?,
                "receiver.c_param" => self.c_param = num(v)?,
                "receiver.c_from" => self.c_from = opt_path(v),
                "receiver.sigma_mode" => {
                    self.sigma_mode = match v {
                        "true_sigma" => SigmaMode::TrueSigma,
                        "c_times_avg_variance" => SigmaMode::CTimesAvgVariance,
                        _ => return Err("expected true_sigma or c_times_avg_variance".into()),
                    }
                }
                "receiver.dft_denoise" => self.dft_denoise = boolean(v)?,
                "receiver.tap_cutoff" => self.tap_cutoff = num(v)?,
                "receiver.demap_mode" => {
                    self.demap_mode = match v {
                        "exact" => DemapMode::ExactLogSumExp,
                        "max_log" => DemapMode::MaxLog,
                        _ => return Err("expected exact or max_log".into()),
                    }
                }
                "receiver.belief_source" => {
                    let flip = self.flip_prob;
                    self.belief_source = match v {
                        "decoder" => BeliefSource::Decoder,
                        "oracle" => BeliefSource::Oracle,
                        "corrupted" => BeliefSource::Corrupted { flip_prob: flip },
                        _ => return Err("expected decoder, oracle or corrupted".into()),
                    }
                }
                "receiver.flip_prob" => {
                    let p: f64 = num(v)?;
                    if !(p > 0.0 && p < 0.5) {
                        return Err("must lie in (0, 0.5)".into());
                    }
                    self.flip_prob = p;
                    if let BeliefSource::Corrupted { flip_prob } = &mut self.belief_source {
                        *flip_prob = p;
                    }
                }
                "harness.snr_points_db" => self.snr_points_db = list(v, num)?,
                "harness.trials_per_point" => self.trials_per_point = num(v)?,
                "harness.master_seed" => self.master_seed = num(v)?,
                "harness.min_frame_errors" => self.min_frame_errors = num(v)?,
                "harness.max_trials" => self.max_trials = num(v)?,
                "ga.population" => self.ga.population = num(v)?,
                "ga.generations" => self.ga.generations = num(v)?,
                "ga.c_low" => self.ga.c_low = num(v)?,
                "ga.c_high" => self.ga.c_high = num(v)?,
                "ga.mutation_sigma" => self.ga.mutation_sigma = num(v)?,
                "ga.mutation_prob" => self.ga.mutation_prob = num(v)?,
                "ga.tournament_size" => self.ga.tournament_size = num(v)?,
                "ga.seed" => self.ga.seed = num(v)?,
                "ga.fitness" => {
                    self.ga_fitness = match v {
                        "mean_mse" => FitnessKind::MeanMse,
                        "fer" => FitnessKind::Fer,
                        "synthetic" => FitnessKind::Synthetic,
                        _ => return Err("expected mean_mse, fer or synthetic".into()),
                    }
                }
                "ga.snr_db" => self.ga_snr_db = num(v)?,
                "ga.trials" => self.ga_trials = num(v)?,
                "ga.flip_prob" => {
                    let p: f64 = num(v)?;
                    if !(p > 0.0 && p < 0.5) {
                        return Err("must lie in (0, 0.5)".into());
                    }
                    self.ga_flip_prob = p;
                }
                "output.dir" => self.out_dir = PathBuf::from(v),
                _ => return Err(String::new()),
            }
            Ok(())
        })();
        result.map_err(|reason| {
            if reason.is_empty() && !KEYS.contains(&key) {
                ConfigError::UnknownKey { key: key.into() }
            } else {
                ConfigError::InvalidValue {
                    key: key.into(),
                    value: v.into(),
                    reason,
                }
            }
        })
    }

    /// `KEY=VALUE` as given to `--set`.
    pub fn apply_override(&mut self, text: &str) -> Result<(), ConfigError> {
        let (key, value) = text.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            message: format!("override {text:?} is not KEY=VALUE"),
        })?;
        self.set(key.trim(), value)
    }

    /// Applies every assignment of a config document.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section: Option<String> = None;
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: line_no,
                    message: format!("unterminated section header {line:?}"),
                })?;
                section = Some(name.trim().to_string());
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let sect = section.as_ref().ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("key {:?} outside any section", k.trim()),
            })?;
            let key = format!("{sect}.{}", k.trim());
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate { key });
            }
            self.set(&key, v)?;
            seen.push(key);
        }
        Ok(())
    }

    /// Canonical document listing every key; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for key in KEYS {
            let (sect, name) = key.split_once('.').expect("dotted key");
            if sect != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sect}]");
                section = sect;
            }
            let _ = writeln!(out, "{name} = {}", self.value_text(key));
        }
        out
    }

    fn value_text(&self, key: &str) -> String {
        match key {
            "frame.n_data" => self.frame.n_data.to_string(),
            "frame.n_pilot" => self.frame.n_pilot.to_string(),
            "frame.rb_size" => self.frame.rb_size.to_string(),
            "frame.rb_num" => self.frame.rb_num.to_string(),
            "frame.n_rx" => self.frame.n_rx.to_string(),
            "frame.pilot_amp" => self.frame.pilot_amp.to_string(),
            "frame.pilot_positions" => join(&self.frame.pilot_positions),
            "frame.modulation_order" => self.frame.modulation_order.to_string(),
            "channel.taps" => self.taps.to_string(),
            "code.path" => path_text(&self.code_path),
            "decoder.max_iters" => self.decoder.max_iters.to_string(),
            "decoder.scale" => self.decoder.scale.to_string(),
            "receiver.estimators" => {
                let names: Vec<_> = self.estimators.iter().map(|k| k.name()).collect();
                names.join(", ")
            }
            "receiver.outer_iterations" => self.outer_iterations.to_string(),
            "receiver.c_param" => self.c_param.to_string(),
            "receiver.c_from" => path_text(&self.c_from),
            "receiver.sigma_mode" => sigma_name(self.sigma_mode).into(),
            "receiver.dft_denoise" => self.dft_denoise.to_string(),
            "receiver.tap_cutoff" => self.tap_cutoff.to_string(),
            "receiver.demap_mode" => demap_name(self.demap_mode).into(),
            "receiver.belief_source" => match self.belief_source {
                BeliefSource::Decoder => "decoder".into(),
                BeliefSource::Oracle => "oracle".into(),
                BeliefSource::Corrupted { .. } => "corrupted".into(),
            },
            "receiver.flip_prob" => self.flip_prob.to_string(),
            "harness.snr_points_db" => join(&self.snr_points_db),
            "harness.trials_per_point" => self.trials_per_point.to_string(),
            "harness.master_seed" => self.master_seed.to_string(),
            "harness.min_frame_errors" => self.min_frame_errors.to_string(),
            "harness.max_trials" => self.max_trials.to_string(),
            "ga.population" => self.ga.population.to_string(),
            "ga.generations" => self.ga.generations.to_string(),
            "ga.c_low" => self.ga.c_low.to_string(),
            "ga.c_high" => self.ga.c_high.to_string(),
            "ga.mutation_sigma" => self.ga.mutation_sigma.to_string(),
            "ga.mutation_prob" => self.ga.mutation_prob.to_string(),
            "ga.tournament_size" => self.ga.tournament_size.to_string(),
            "ga.seed" => self.ga.seed.to_string(),
            "ga.fitness" => fitness_name(self.ga_fitness).into(),
            "ga.snr_db" => self.ga_snr_db.to_string(),
            "ga.trials" => self.ga_trials.to_string(),
            "ga.flip_prob" => self.ga_flip_prob.to_string(),
            "output.dir" => self.out_dir.display().to_string(),
            _ => unreachable!("KEYS and value_text agree"),
        }
    }

    /// Receiver settings shared by every configured estimator.
    pub fn receiver(&self, kind: EstimatorKind, c_param: f64) -> ReceiverConfig {
        ReceiverConfig {
            estimator_kind: kind,
            outer_iterations: self.outer_iterations,
            c_param,
            sigma_mode: self.sigma_mode,
            dft_denoise: self.dft_denoise,
            tap_cutoff: self.tap_cutoff,
            demap_mode: self.demap_mode,
            belief_source: self.belief_source,
            decoder: self.decoder,
        }
    }

    pub fn sweep_spec(&self, c_param: f64) -> Result<SweepSpec, ConfigError> {
        let stop_rule = match (self.min_frame_errors, self.max_trials) {
            (0, 0) => None,
            (e, m) if e > 0 && m > 0 => Some(StopRule {
                min_frame_errors: e,
                max_trials: m,
            }),
            _ => {
                return Err(ConfigError::InvalidValue {
                    key: "harness.max_trials".into(),
                    value: self.max_trials.to_string(),
                    reason: "early stopping needs both min_frame_errors and max_trials > 0"
                        .into(),
                })
            }
        };
        Ok(SweepSpec {
            frame: self.frame.clone(),
            taps: self.taps,
            snr_points_db: self.snr_points_db.clone(),
            trials_per_point: self.trials_per_point,
            configs: self
                .estimators
                .iter()
                .map(|&k| NamedConfig::new(self.receiver(k, c_param)))
                .collect(),
            master_seed: self.master_seed,
            stop_rule,
        })
    }

    /// Calibration run: soft-param receiver with one outer iteration, fed
    /// corrupted beliefs at `ga.flip_prob`, evaluated at `ga.snr_db`.
    pub fn ga_spec(&self) -> GaSpec {
        let base = ReceiverConfig {
            outer_iterations: self.outer_iterations.max(1),
            belief_source: BeliefSource::Corrupted {
                flip_prob: self.ga_flip_prob,
            },
            sigma_mode: SigmaMode::CTimesAvgVariance,
            ..self.receiver(EstimatorKind::SoftParam, self.c_param)
        };
        GaSpec {
            params: self.ga,
            fitness: self.ga_fitness,
            eval: SweepSpec {
                frame: self.frame.clone(),
                taps: self.taps,
                snr_points_db: vec![self.ga_snr_db],
                trials_per_point: self.ga_trials,
                configs: vec![NamedConfig::new(base.clone())],
                master_seed: self.master_seed,
                stop_rule: None,
            },
            base,
        }
    }
}
