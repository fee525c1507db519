//! Iterative receiver: channel estimation, MRC equalisation, soft demapping,
//! LDPC decoding and data-aided re-estimation.
//!
//! Iteration 0 estimates the channel from pilots only. Every further outer
//! iteration turns the latest posterior LLRs into symbol beliefs, re-estimates
//! each (subcarrier, antenna) coefficient with the configured estimator,
//! re-equalises and re-decodes.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};
use thiserror::Error;

use crate::channel::{BitSource, ChannelRealization, FrameLayout, ReceivedGrid, TxFrame};
use crate::constellation::{Constellation, ConstellationError, LlrVector, SymbolBelief};
use crate::estimation::{
    band_avg_variance, combining_weights, EstimationError, EstimatorInputs, EstimatorKind,
    FrameSlotSequence, NoiseContext, Slot, SIGMA_SQ_FLOOR,
};
use crate::ldpc::{LdpcCode, MinSumConfig};
use crate::rng;

/// Floor on the post-combining noise variance used by the demapper.
const MIN_DEMAP_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TurboError {
    #[error("estimator {kind} failed on subcarrier {subcarrier}: {source}")]
    Estimation {
        kind: EstimatorKind,
        subcarrier: usize,
        #[source]
        source: EstimationError,
    },
    #[error("invalid receiver configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// `noise_power / mean |h_hat|^2` from the latest channel estimate.
    TrueSigma,
    /// `C * band_avg_variance`.
    CTimesAvgVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemapMode {
    ExactLogSumExp,
    MaxLog,
}

/// Where the re-estimation beliefs come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeliefSource {
    /// Posterior LLRs of the LDPC decoder.
    Decoder,
    /// True coded bits with infinite-magnitude LLRs.
    Oracle,
    /// Synthetic consistent-Gaussian LLRs around the true bits, with the mean
    /// chosen so that a fraction `flip_prob` of bits has the wrong sign.
    Corrupted { flip_prob: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub estimator_kind: EstimatorKind,
    /// 0 gives the non-turbo receiver.
    pub outer_iterations: usize,
    pub c_param: f64,
    pub sigma_mode: SigmaMode,
    pub dft_denoise: bool,
    pub tap_cutoff: usize,
    pub demap_mode: DemapMode,
    pub belief_source: BeliefSource,
    pub decoder: MinSumConfig,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            estimator_kind: EstimatorKind::SoftParam,
            outer_iterations: 1,
            c_param: 17.0,
            sigma_mode: SigmaMode::TrueSigma,
            dft_denoise: false,
            tap_cutoff: 4,
            demap_mode: DemapMode::ExactLogSumExp,
            belief_source: BeliefSource::Decoder,
            decoder: MinSumConfig::default(),
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self, n_used: usize) -> Result<(), TurboError> {
        if self.dft_denoise && (self.tap_cutoff == 0 || self.tap_cutoff > n_used) {
            return Err(TurboError::Config(format!(
                "tap_cutoff {} outside 1..={n_used}",
                self.tap_cutoff
            )));
        }
        if !(self.c_param.is_finite() && self.c_param >= 0.0) {
            return Err(TurboError::Config(format!(
                "c_param must be finite and non-negative, got {}",
                self.c_param
            )));
        }
        if self.decoder.max_iters == 0 || !(self.decoder.scale > 0.0 && self.decoder.scale <= 1.0)
        {
            return Err(TurboError::Config(
                "decoder needs max_iters >= 1 and scale in (0, 1]".into(),
            ));
        }
        if let BeliefSource::Corrupted { flip_prob } = self.belief_source {
            if !(flip_prob > 0.0 && flip_prob < 0.5) {
                return Err(TurboError::Config(format!(
                    "flip_prob must lie in (0, 0.5), got {flip_prob}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-iteration observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// `mean |h_hat - h|^2 / mean |h|^2` over the grid.
    pub channel_mse: f64,
    /// Mean |LLR| at the decoder input over coded bits.
    pub mean_abs_llr: f64,
    /// Every codeword converged.
    pub converged: bool,
    /// Some decoded information bit differs from the transmitted one.
    pub frame_error: bool,
    /// Subcarriers whose combined channel energy was zero.
    pub degenerate_subcarriers: usize,
}

/// One record per iteration, `outer_iterations + 1` in total.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("trace is never empty")
    }
}

/// Channel estimate `[f][antenna]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub n_used: usize,
    pub n_rx: usize,
    pub h: Vec<Complex64>,
}

impl ChannelEstimate {
    #[inline]
    pub fn at(&self, f: usize, a: usize) -> Complex64 {
        self.h[f * self.n_rx + a]
    }

    pub fn mean_power(&self) -> f64 {
        self.h.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.h.len() as f64
    }

    /// Normalised MSE against the true channel.
    pub fn mse(&self, truth: &ChannelRealization) -> f64 {
        let err: f64 = self
            .h
            .iter()
            .zip(&truth.h)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let power: f64 = truth.h.iter().map(|h| h.norm_sqr()).sum();
        err / power
    }
}

/// Projects `row` (one antenna across subcarriers) onto its first
/// `tap_cutoff` delay taps: inverse DFT, zero the taps at and beyond the
/// cutoff, forward DFT.
pub fn dft_denoise(row: &[Complex64], tap_cutoff: usize) -> Vec<Complex64> {
    let n = row.len();
    assert!(tap_cutoff >= 1 && tap_cutoff <= n, "tap_cutoff out of range");
    if tap_cutoff == n {
        return row.to_vec();
    }
    let mut planner = FftPlanner::new();
    let mut buf = row.to_vec();
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for (l, v) in buf.iter_mut().enumerate() {
        if l >= tap_cutoff {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= scale;
        }
    }
    planner.plan_fft_forward(n).process(&mut buf);
    buf
}

fn denoise_estimate(est: &mut ChannelEstimate, tap_cutoff: usize) {
    for a in 0..est.n_rx {
        let row: Vec<Complex64> = (0..est.n_used).map(|f| est.at(f, a)).collect();
        for (f, v) in dft_denoise(&row, tap_cutoff).into_iter().enumerate() {
            est.h[f * est.n_rx + a] = v;
        }
    }
}

/// Bit LLRs `ln(P(0)/P(1))` for one equalised sample `z` with noise
/// variance `nu`, uniform symbol prior.
pub fn demap_symbol(c: &Constellation, z: Complex64, nu: f64, mode: DemapMode) -> Vec<f64> {
    let nu = nu.max(MIN_DEMAP_VARIANCE);
    let metrics: Vec<f64> = c.points().iter().map(|q| -(z - q).norm_sqr() / nu).collect();
    (0..c.order())
        .map(|k| {
            let mut zero = Vec::with_capacity(c.size() / 2);
            let mut one = Vec::with_capacity(c.size() / 2);
            for (j, &m) in metrics.iter().enumerate() {
                if c.label_bit(j, k) == 0 {
                    zero.push(m);
                } else {
                    one.push(m);
                }
            }
            match mode {
                DemapMode::ExactLogSumExp => log_sum_exp(&zero) - log_sum_exp(&one),
                DemapMode::MaxLog => max(&zero) - max(&one),
            }
        })
        .collect()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = max(v);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Output of one equalise-and-demap pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DemapOutput {
    /// Channel LLRs per codeword.
    pub codeword_llrs: Vec<Vec<f64>>,
    pub mean_abs_llr: f64,
    pub degenerate_subcarriers: usize,
}

/// Maximum-ratio combining across antennas followed by soft demapping.
///
/// Per data resource element: `z = sum_a conj(h_a) y_a / sum_a |h_a|^2` with
/// post-combining noise variance `noise_power / sum_a |h_a|^2`. Subcarriers
/// with zero channel energy yield neutral (zero) LLRs.
pub fn equalize_and_demap(
    grid: &ReceivedGrid,
    est: &ChannelEstimate,
    noise_power: f64,
    layout: &FrameLayout,
    constellation: &Constellation,
    mode: DemapMode,
) -> DemapOutput {
    let mut codeword_llrs = vec![vec![0.0; layout.codeword_len]; layout.n_codewords];
    let energy: Vec<f64> = (0..est.n_used)
        .map(|f| (0..est.n_rx).map(|a| est.at(f, a).norm_sqr()).sum())
        .collect();
    let degenerate_subcarriers = energy.iter().filter(|&&e| e <= 0.0).count();

    let mut abs_sum = 0.0;
    let mut abs_count = 0usize;
    for (re, &(t, f)) in layout.data_res.iter().enumerate() {
        if layout.is_untracked(re) {
            continue;
        }
        let bit_llrs = if energy[f] > 0.0 {
            let z: Complex64 = (0..grid.n_rx)
                .map(|a| est.at(f, a).conj() * grid.at(t, f, a))
                .sum::<Complex64>()
                / energy[f];
            demap_symbol(constellation, z, noise_power / energy[f], mode)
        } else {
            vec![0.0; constellation.order()]
        };
        for (src, llr) in layout.re_bits(re).iter().zip(bit_llrs) {
            if let BitSource::Coded { codeword, index } = *src {
                codeword_llrs[codeword][index] = llr;
                abs_sum += llr.abs();
                abs_count += 1;
            }
        }
    }
    DemapOutput {
        codeword_llrs,
        mean_abs_llr: if abs_count > 0 {
            abs_sum / abs_count as f64
        } else {
            0.0
        },
        degenerate_subcarriers,
    }
}

/// Mean of the consistent Gaussian LLR model `N(mu, 2 mu)` whose sign is
/// wrong with probability `flip_prob`.
pub fn consistent_llr_mean(flip_prob: f64) -> f64 {
    let z = StatNormal::standard().inverse_cdf(1.0 - flip_prob);
    2.0 * z * z
}

/// Per-bit LLRs driving belief construction; `None` marks an untracked
/// resource element.
fn belief_llrs<R: Rng>(
    source: BeliefSource,
    layout: &FrameLayout,
    tx: &TxFrame,
    constellation: &Constellation,
    posteriors: &[Vec<f64>],
    rng: &mut R,
) -> Vec<Option<Vec<f64>>> {
    let corrupted = match source {
        BeliefSource::Corrupted { flip_prob } => {
            let mu = consistent_llr_mean(flip_prob);
            Some(Normal::new(mu, (2.0 * mu).sqrt()).expect("positive spread"))
        }
        _ => None,
    };
    (0..layout.data_res.len())
        .map(|re| {
            if layout.is_untracked(re) {
                return None;
            }
            let llrs = layout
                .re_bits(re)
                .iter()
                .enumerate()
                .map(|(k, src)| match *src {
                    BitSource::Filler => 0.0,
                    BitSource::Coded { codeword, index } => {
                        let sign = if tx.re_bit(re, k, constellation) == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        match source {
                            BeliefSource::Decoder => posteriors[codeword][index],
                            BeliefSource::Oracle => sign * f64::INFINITY,
                            BeliefSource::Corrupted { .. } => {
                                let dist = corrupted.as_ref().expect("set above");
                                sign * dist.sample(rng)
                            }
                        }
                    }
                })
                .collect();
            Some(llrs)
        })
        .collect()
}

/// Symbol beliefs for every data resource element (`None` if untracked).
pub fn beliefs_from_llrs(
    constellation: &Constellation,
    llrs: &[Option<Vec<f64>>],
) -> Result<Vec<Option<SymbolBelief>>, TurboError> {
    llrs.iter()
        .map(|l| match l {
            None => Ok(None),
            Some(v) => {
                let lv = LlrVector::new(v.clone())?;
                Ok(Some(constellation.symbol_belief(&lv)?))
            }
        })
        .collect()
}

/// Band-average data-symbol variance; untracked elements contribute
/// `uninformative_variance`.
pub fn frame_avg_variance(beliefs: &[Option<SymbolBelief>], uninformative_variance: f64) -> f64 {
    if beliefs.is_empty() {
        return 0.0;
    }
    let tracked = beliefs.iter().filter(|b| b.is_some()).count();
    let untracked = beliefs.len() - tracked;
    let mean = band_avg_variance(beliefs.iter().flatten());
    (mean * tracked as f64 + uninformative_variance * untracked as f64) / beliefs.len() as f64
}

/// Runs one estimator over the grid. Pilots are always included; data
/// resource elements join when they have a belief. Untracked elements count
/// towards the band-average variance with the uninformative variance.
pub fn estimate_channel(
    grid: &ReceivedGrid,
    layout: &FrameLayout,
    pilot_amp: f64,
    beliefs: Option<&[Option<SymbolBelief>]>,
    kind: EstimatorKind,
    noise: NoiseContext,
    uninformative_variance: f64,
) -> Result<ChannelEstimate, TurboError> {
    let (n_used, n_rx) = (grid.n_used, grid.n_rx);

    let avg_variance = beliefs
        .map(|b| frame_avg_variance(b, uninformative_variance))
        .unwrap_or(0.0);
    let inputs = EstimatorInputs {
        noise,
        avg_variance,
    };

    // Data resource elements of each subcarrier, in time order.
    let mut per_subcarrier: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_used];
    if let Some(b) = beliefs {
        for (re, &(t, f)) in layout.data_res.iter().enumerate() {
            if b[re].is_some() {
                per_subcarrier[f].push((t, re));
            }
        }
    }

    let mut h = vec![Complex64::new(0.0, 0.0); n_used * n_rx];
    for (f, data) in per_subcarrier.iter().enumerate() {
        let mut entries: Vec<(usize, Slot)> = layout
            .pilot_positions
            .iter()
            .map(|&t| (t, Slot::Pilot { amplitude: pilot_amp }))
            .collect();
        if let Some(b) = beliefs {
            entries.extend(
                data.iter()
                    .map(|&(t, re)| (t, Slot::Data(b[re].clone().expect("filtered")))),
            );
        }
        entries.sort_by_key(|(t, _)| *t);
        let times: Vec<usize> = entries.iter().map(|(t, _)| *t).collect();
        let wrap = |source| TurboError::Estimation {
            kind,
            subcarrier: f,
            source,
        };
        let slots =
            FrameSlotSequence::new(entries.into_iter().map(|(_, s)| s).collect()).map_err(wrap)?;
        let weights = combining_weights(kind, &slots, &inputs).map_err(wrap)?;
        for a in 0..n_rx {
            h[f * n_rx + a] = times
                .iter()
                .zip(&weights)
                .map(|(&t, w)| w * grid.at(t, f, a))
                .sum();
        }
    }
    Ok(ChannelEstimate { n_used, n_rx, h })
}

/// Pilot-only estimate for every (subcarrier, antenna).
pub fn pilot_estimate(
    grid: &ReceivedGrid,
    layout: &FrameLayout,
    pilot_amp: f64,
) -> Result<ChannelEstimate, TurboError> {
    let noise = NoiseContext::new(0.0, 0.0).expect("valid");
    estimate_channel(grid, layout, pilot_amp, None, EstimatorKind::PilotOnly, noise, 1.0)
}

/// Runs the full receiver with the decoder (or oracle) as belief source.
pub fn run_receiver(
    grid: &ReceivedGrid,
    tx: &TxFrame,
    ch: &ChannelRealization,
    code: &LdpcCode,
    cfg: &ReceiverConfig,
) -> Result<IterationTrace, TurboError> {
    run_receiver_seeded(grid, tx, ch, code, cfg, 0)
}

/// As [`run_receiver`]; `aux_seed` keys the synthetic-LLR stream of
/// [`BeliefSource::Corrupted`].
pub fn run_receiver_seeded(
    grid: &ReceivedGrid,
    tx: &TxFrame,
    ch: &ChannelRealization,
    code: &LdpcCode,
    cfg: &ReceiverConfig,
    aux_seed: u64,
) -> Result<IterationTrace, TurboError> {
    let layout = &tx.layout;
    if grid.n_ofdm != layout.n_ofdm || grid.n_used != layout.n_used || grid.n_rx != ch.n_rx {
        return Err(TurboError::Shape(format!(
            "grid {}x{}x{} vs frame {}x{} / channel {} antennas",
            grid.n_ofdm, grid.n_used, grid.n_rx, layout.n_ofdm, layout.n_used, ch.n_rx
        )));
    }
    if layout.codeword_len != code.n() {
        return Err(TurboError::Shape(format!(
            "frame codeword length {} vs code length {}",
            layout.codeword_len,
            code.n()
        )));
    }
    cfg.validate(layout.n_used)?;
    let constellation = Constellation::new(layout.order)?;
    let uninformative_variance = SymbolBelief::uninformative(&constellation).variance;

    let mut est = pilot_estimate(grid, layout, tx.pilot_amp)?;
    if cfg.dft_denoise {
        denoise_estimate(&mut est, cfg.tap_cutoff);
    }

    let mut records = Vec::with_capacity(cfg.outer_iterations + 1);
    let mut posteriors: Vec<Vec<f64>> = Vec::new();
    for iter in 0..=cfg.outer_iterations {
        if iter > 0 {
            let mut belief_rng = rng::stream(aux_seed, iter as u64, 0, rng::Purpose::Beliefs);
            let llrs = belief_llrs(
                cfg.belief_source,
                layout,
                tx,
                &constellation,
                &posteriors,
                &mut belief_rng,
            );
            let beliefs = beliefs_from_llrs(&constellation, &llrs)?;
            let sigma_sq = match cfg.sigma_mode {
                SigmaMode::TrueSigma => {
                    let p = est.mean_power();
                    if p > 0.0 {
                        ch.noise_power / p
                    } else {
                        ch.noise_power
                    }
                }
                SigmaMode::CTimesAvgVariance => {
                    cfg.c_param * frame_avg_variance(&beliefs, uninformative_variance)
                }
            };
            // Floored so that certain beliefs on a noiseless grid keep the
            // MMSE system non-singular.
            let sigma_sq = sigma_sq.max(SIGMA_SQ_FLOOR);
            let noise = NoiseContext::new(sigma_sq, cfg.c_param).map_err(|source| {
                TurboError::Estimation {
                    kind: cfg.estimator_kind,
                    subcarrier: 0,
                    source,
                }
            })?;
            est = estimate_channel(
                grid,
                layout,
                tx.pilot_amp,
                Some(&beliefs),
                cfg.estimator_kind,
                noise,
                uninformative_variance,
            )?;
            if cfg.dft_denoise {
                denoise_estimate(&mut est, cfg.tap_cutoff);
            }
        }

        let demapped = equalize_and_demap(
            grid,
            &est,
            ch.noise_power,
            layout,
            &constellation,
            cfg.demap_mode,
        );
        let mut converged = true;
        let mut frame_error = false;
        posteriors.clear();
        for (cw, llrs) in demapped.codeword_llrs.iter().enumerate() {
            let res = code.decode_min_sum(llrs, &cfg.decoder);
            converged &= res.converged;
            frame_error |= code.extract_info(&res.hard_bits) != tx.info_bits[cw];
            posteriors.push(res.posterior_llrs);
        }
        records.push(IterationRecord {
            channel_mse: est.mse(ch),
            mean_abs_llr: demapped.mean_abs_llr,
            converged,
            frame_error,
            degenerate_subcarriers: demapped.degenerate_subcarriers,
        });
    }
    Ok(IterationTrace { records })
}
