//! Oracle-equivalence checks run by `turboce selftest`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::channel::FrameConfig;
use crate::constellation::{Constellation, LlrVector};
use crate::estimation::{
    estimate, EstimatorInputs, EstimatorKind, FrameSlotSequence, NoiseContext, Observation, Slot,
};
use crate::ldpc::{self, LdpcCode};
use crate::rng::{seeded, SimRng};
use crate::turbo::dft_denoise;

use super::config::RunConfig;

pub struct Outcome {
    pub name: &'static str,
    pub result: Result<(), String>,
}

/// Runs every property; the code under test comes from `code.path`.
pub fn run_all(cfg: &RunConfig) -> Vec<Outcome> {
    vec![
        Outcome {
            name: "gf2_encoder",
            result: gf2_encoder(cfg),
        },
        Outcome {
            name: "soft_modulator_enumeration",
            result: soft_modulator_enumeration(),
        },
        Outcome {
            name: "closed_form_vs_matrix_mmse",
            result: closed_form_vs_matrix(1000),
        },
        Outcome {
            name: "reduction_chain",
            result: reduction_chain(),
        },
        Outcome {
            name: "dft_denoise_projection",
            result: dft_projection(),
        },
    ]
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gf2_encoder(cfg: &RunConfig) -> Result<(), String> {
    let code = match &cfg.code_path {
        None => LdpcCode::shipped(),
        Some(p) => ldpc::load_code(p)
            .map_err(|e| format!("cannot load code from {}: {e}", p.display()))?,
    };
    let mut rng = seeded(11);
    for trial in 0..50 {
        let info: Vec<u8> = (0..code.k()).map(|_| u8::from(rng.random::<bool>())).collect();
        let cw = code.encode(&info).map_err(|e| e.to_string())?;
        // Dense syndrome from the column lists.
        let mut syndrome = vec![0u8; code.m()];
        for (col, checks) in code.vars().iter().enumerate() {
            for &r in checks {
                syndrome[r] ^= cw[col];
            }
        }
        check(syndrome.iter().all(|&s| s == 0), || {
            format!("codeword {trial} has a non-zero syndrome")
        })?;
        check(code.extract_info(&cw) == info, || {
            format!("codeword {trial} does not carry its information bits")
        })?;
    }
    Ok(())
}

fn enumerate_belief(c: &Constellation, llrs: &[f64]) -> (Complex64, f64) {
    let p0 = |l: f64| 1.0 / (1.0 + (-l).exp());
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second = 0.0;
    let mut total = 0.0;
    for (j, q) in c.points().iter().enumerate() {
        let p: f64 = llrs
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                if c.label_bit(j, k) == 0 {
                    p0(l)
                } else {
                    1.0 - p0(l)
                }
            })
            .product();
        mean += q * p;
        second += p * q.norm_sqr();
        total += p;
    }
    (mean / total, second / total)
}

pub(crate) fn random_llrs(rng: &mut SimRng, q: usize) -> Vec<f64> {
    let spread = Normal::new(0.0, 4.0).expect("valid");
    (0..q)
        .map(|_| match rng.random_range(0..10) {
            0 => f64::INFINITY,
            1 => f64::NEG_INFINITY,
            _ => spread.sample(rng),
        })
        .collect()
}

fn soft_modulator_enumeration() -> Result<(), String> {
    let mut rng = seeded(12);
    for q in [2, 4, 6] {
        let c = Constellation::new(q).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let llrs = random_llrs(&mut rng, q);
            let b = c
                .symbol_belief(&LlrVector::new(llrs.clone()).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let (mean, second) = enumerate_belief(&c, &llrs);
            check(
                (b.mean - mean).norm() <= 1e-12 && (b.second_moment - second).abs() <= 1e-12,
                || format!("order {q}, llrs {llrs:?}: belief differs from enumeration"),
            )?;
        }
    }
    Ok(())
}

fn random_frame(rng: &mut SimRng, c: &Constellation) -> (FrameSlotSequence, Observation) {
    let frame = FrameConfig::default();
    let slots: Vec<Slot> = (0..frame.n_ofdm())
        .map(|t| {
            if frame.is_pilot(t) {
                Slot::Pilot {
                    amplitude: frame.pilot_amp,
                }
            } else {
                let llrs = random_llrs(rng, c.order());
                Slot::Data(
                    c.symbol_belief(&LlrVector::new(llrs).expect("no NaN"))
                        .expect("finite belief"),
                )
            }
        })
        .collect();
    let y = (0..slots.len())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    (
        FrameSlotSequence::new(slots).expect("valid frame"),
        Observation(y),
    )
}

fn closed_form_vs_matrix(frames: usize) -> Result<(), String> {
    let mut rng = seeded(13);
    let c = Constellation::new(4).map_err(|e| e.to_string())?;
    for i in 0..frames {
        let (slots, obs) = random_frame(&mut rng, &c);
        let sigma_sq = 10f64.powf(rng.random_range(-3.0..=1.0));
        let inputs = EstimatorInputs {
            noise: NoiseContext::new(sigma_sq, 0.0).map_err(|e| e.to_string())?,
            avg_variance: 0.0,
        };
        let fast = estimate(EstimatorKind::SoftClosedForm, &slots, &obs, &inputs)
            .map_err(|e| format!("frame {i}: {e}"))?
            .h_hat;
        let oracle = estimate(EstimatorKind::SoftGeneral, &slots, &obs, &inputs)
            .map_err(|e| format!("frame {i}: {e}"))?
            .h_hat;
        check((fast - oracle).norm() <= 1e-10 * (1.0 + oracle.norm()), || {
            format!("frame {i} (sigma^2 = {sigma_sq}): closed form {fast} vs matrix {oracle}")
        })?;
    }
    Ok(())
}

fn reduction_chain() -> Result<(), String> {
    let mut rng = seeded(14);
    for q in [2, 4, 6] {
        let c = Constellation::new(q).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let amp = if q == 2 { 1.0 } else { std::f64::consts::SQRT_2 };
            let certain: Vec<Slot> = (0..14)
                .map(|t| {
                    if t == 2 || t == 11 {
                        Slot::Pilot { amplitude: amp }
                    } else {
                        Slot::Data(c.certain_belief(rng.random_range(0..c.size())))
                    }
                })
                .collect();
            let slots = FrameSlotSequence::new(certain).map_err(|e| e.to_string())?;
            let obs = Observation(
                (0..14)
                    .map(|_| Complex64::new(rng.random(), rng.random()))
                    .collect(),
            );
            let inputs = EstimatorInputs {
                noise: NoiseContext::new(0.0, rng.random_range(0.0..20.0))
                    .map_err(|e| e.to_string())?,
                avg_variance: 0.0,
            };
            let run = |k| {
                estimate(k, &slots, &obs, &inputs)
                    .map(|e| e.h_hat)
                    .map_err(|e| e.to_string())
            };
            let hw = run(EstimatorKind::HardWeighted)?;
            let sp = run(EstimatorKind::SoftParam)?;
            check((hw - sp).norm() <= 1e-12 * (1.0 + hw.norm()), || {
                format!("order {q}: soft_param {sp} vs hard_weighted {hw}")
            })?;
            if q == 2 {
                let h = run(EstimatorKind::Hard)?;
                check((hw - h).norm() <= 1e-12 * (1.0 + hw.norm()), || {
                    format!("QPSK: hard {h} vs hard_weighted {hw}")
                })?;
            }
        }
    }
    Ok(())
}

fn dft_projection() -> Result<(), String> {
    let mut rng = seeded(15);
    for _ in 0..100 {
        let row: Vec<Complex64> = (0..24)
            .map(|_| Complex64::new(rng.random(), rng.random()))
            .collect();
        let cutoff = rng.random_range(1..=24);
        let once = dft_denoise(&row, cutoff);
        let twice = dft_denoise(&once, cutoff);
        check(
            once.iter().zip(&twice).all(|(a, b)| (a - b).norm() <= 1e-12),
            || format!("denoising with cutoff {cutoff} is not idempotent"),
        )?;
    }
    Ok(())
}
