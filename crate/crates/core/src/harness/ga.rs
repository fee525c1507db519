//! Genetic-algorithm search for the soft-param constant `C`.
//!
//! Real-coded GA over one scalar: tournament selection, blend crossover
//! (child uniform on the parents' span widened by half the span on each
//! side), Gaussian mutation clipped to the search range, elitism of one.
//! The elite keeps its fitness from the generation it was evaluated in, so
//! the best-fitness history never increases.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{draw_trial, HarnessError, SweepSpec, TrialInputs};
use crate::estimation::EstimatorKind;
use crate::ldpc::LdpcCode;
use crate::rng::{self, Purpose};
use crate::turbo::{run_receiver_seeded, ReceiverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub c_low: f64,
    pub c_high: f64,
    pub mutation_sigma: f64,
    /// Probability that a child is mutated.
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 16,
            generations: 20,
            c_low: 0.0,
            c_high: 50.0,
            mutation_sigma: 5.0,
            mutation_prob: 0.25,
            tournament_size: 3,
            seed: 1,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.population < 4 {
            return fail("ga.population must be at least 4");
        }
        if !(self.c_low.is_finite() && self.c_high.is_finite() && self.c_low >= 0.0) {
            return fail("ga.c_low must be finite and non-negative, ga.c_high finite");
        }
        if self.c_low > self.c_high {
            return fail("ga.c_low must not exceed ga.c_high");
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma >= 0.0) {
            return fail("ga.mutation_sigma must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return fail("ga.mutation_prob must lie in [0, 1]");
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return fail("ga.tournament_size must lie in 1..=population");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    /// 1-based.
    pub generation: usize,
    pub best_c: f64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub c_best: f64,
    pub history: Vec<GenerationStats>,
}

/// Minimises `fitness` over `[c_low, c_high]`. `fitness` receives a whole
/// population and returns one value per candidate (lower is better).
pub fn calibrate_with<F>(params: &GaParams, mut fitness: F) -> Result<Calibration, HarnessError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, HarnessError>,
{
    params.validate()?;
    if params.c_low == params.c_high {
        return Ok(Calibration {
            c_best: params.c_low,
            history: Vec::new(),
        });
    }
    let mut rng = rng::stream(params.seed, 0, 0, Purpose::Ga);
    let (lo, hi) = (params.c_low, params.c_high);
    let mutation = Normal::new(0.0, params.mutation_sigma).expect("validated sigma");

    let mut pop: Vec<f64> = (0..params.population)
        .map(|_| rng.random_range(lo..=hi))
        .collect();
    // Elite and its fitness, carried into the next population at index 0.
    let mut elite: Option<(f64, f64)> = None;
    let mut history = Vec::with_capacity(params.generations);

    for generation in 1..=params.generations {
        let fresh = if elite.is_some() { &pop[1..] } else { &pop[..] };
        let mut fit = fitness(fresh)?;
        if fit.len() != fresh.len() {
            return Err(HarnessError::Config(format!(
                "fitness returned {} values for {} candidates",
                fit.len(),
                fresh.len()
            )));
        }
        if let Some((_, f)) = elite {
            fit.insert(0, f);
        }
        let best = (0..pop.len())
            .min_by(|&a, &b| fit[a].total_cmp(&fit[b]))
            .expect("non-empty population");
        elite = Some((pop[best], fit[best]));
        history.push(GenerationStats {
            generation,
            best_c: pop[best],
            best_fitness: fit[best],
            mean_fitness: fit.iter().sum::<f64>() / fit.len() as f64,
        });
        if generation == params.generations {
            break;
        }

        let indices: Vec<usize> = (0..pop.len()).collect();
        let tournament = |rng: &mut rng::SimRng| -> f64 {
            let winner = indices
                .choose_multiple(rng, params.tournament_size)
                .copied()
                .min_by(|&a, &b| fit[a].total_cmp(&fit[b]))
                .expect("tournament size >= 1");
            pop[winner]
        };
        let mut next = Vec::with_capacity(params.population);
        next.push(pop[best]);
        while next.len() < params.population {
            let (a, b) = (tournament(&mut rng), tournament(&mut rng));
            let (pmin, pmax) = (a.min(b), a.max(b));
            let span = pmax - pmin;
            let mut child = if span > 0.0 {
                rng.random_range(pmin - 0.5 * span..=pmax + 0.5 * span)
            } else {
                pmin
            };
            if rng.random::<f64>() < params.mutation_prob {
                child += mutation.sample(&mut rng);
            }
            next.push(child.clamp(lo, hi));
        }
        pop = next;
    }

    let (c_best, _) = elite.expect("at least one generation");
    Ok(Calibration { c_best, history })
}

/// Objective evaluated on the evaluation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitnessKind {
    /// Mean channel MSE after the last outer iteration.
    MeanMse,
    /// Frame error rate after the last outer iteration.
    Fer,
    /// `|C - 5|`, a known-optimum check of the optimiser itself.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaSpec {
    pub params: GaParams,
    pub fitness: FitnessKind,
    /// Evaluation trials at `eval.snr_points_db[0]`.
    pub eval: SweepSpec,
    /// Receiver whose `c_param` is varied; forced to the soft-param estimator.
    pub base: ReceiverConfig,
}

/// Trial inputs shared by all candidates (paired evaluation).
pub struct FitnessSet<'a> {
    code: &'a LdpcCode,
    base: ReceiverConfig,
    kind: FitnessKind,
    trials: Vec<TrialInputs>,
}

impl<'a> FitnessSet<'a> {
    pub fn new(
        spec: &SweepSpec,
        code: &'a LdpcCode,
        base: &ReceiverConfig,
        kind: FitnessKind,
    ) -> Result<Self, HarnessError> {
        spec.validate(code)?;
        let base = ReceiverConfig {
            estimator_kind: EstimatorKind::SoftParam,
            ..base.clone()
        };
        base.validate(spec.frame.n_used())
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let trials = if kind == FitnessKind::Synthetic {
            Vec::new()
        } else {
            (0..spec.trials_per_point)
                .into_par_iter()
                .map(|t| draw_trial(spec, code, 0, t))
                .collect::<Result<_, _>>()?
        };
        Ok(Self {
            code,
            base,
            kind,
            trials,
        })
    }

    /// Fitness of one candidate `c`.
    pub fn evaluate(&self, c: f64) -> Result<f64, HarnessError> {
        if self.kind == FitnessKind::Synthetic {
            return Ok((c - 5.0).abs());
        }
        let cfg = ReceiverConfig {
            c_param: c,
            ..self.base.clone()
        };
        let values: Vec<f64> = self
            .trials
            .par_iter()
            .enumerate()
            .map(|(t, inp)| {
                let trace = run_receiver_seeded(
                    &inp.grid,
                    &inp.tx,
                    &inp.channel,
                    self.code,
                    &cfg,
                    inp.aux_seed,
                )
                .map_err(|source| HarnessError::Receiver {
                    config: format!("soft_param(C={c})"),
                    snr_db: f64::NAN,
                    trial: t,
                    source,
                })?;
                let rec = trace.final_record();
                Ok(match self.kind {
                    FitnessKind::MeanMse => rec.channel_mse,
                    _ => f64::from(u8::from(rec.frame_error)),
                })
            })
            .collect::<Result<_, HarnessError>>()?;
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Runs the GA with paired-seed fitness evaluations.
pub fn calibrate_c(spec: &GaSpec, code: &LdpcCode) -> Result<Calibration, HarnessError> {
    let set = FitnessSet::new(&spec.eval, code, &spec.base, spec.fitness)?;
    calibrate_with(&spec.params, |cands| {
        cands.iter().map(|&c| set.evaluate(c)).collect()
    })
}
