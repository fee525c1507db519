//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use turboce::constellation::{Constellation, LlrVector, SymbolBelief};
use turboce::estimation::{FrameSlotSequence, Observation, Slot};

pub const PILOT_AMP: f64 = std::f64::consts::SQRT_2;
pub const PILOTS: [usize; 2] = [2, 11];
pub const N_OFDM: usize = 14;

/// Direct 2^Q enumeration: node probabilities, mean and second moment.
pub fn enumerate_belief(c: &Constellation, llrs: &[f64]) -> (Vec<f64>, Complex64, f64) {
    let p_zero = |l: f64| {
        if l == f64::INFINITY {
            1.0
        } else if l == f64::NEG_INFINITY {
            0.0
        } else {
            1.0 / (1.0 + (-l).exp())
        }
    };
    let probs: Vec<f64> = (0..c.size())
        .map(|j| {
            let bits = c.label(j);
            bits.iter()
                .zip(llrs)
                .map(|(&b, &l)| if b == 0 { p_zero(l) } else { 1.0 - p_zero(l) })
                .product()
        })
        .collect();
    let mean = probs.iter().zip(c.points()).map(|(p, q)| q * p).sum();
    let second = probs.iter().zip(c.points()).map(|(p, q)| p * q.norm_sqr()).sum();
    (probs, mean, second)
}

/// LLRs with occasional infinite entries.
pub fn random_llrs<R: Rng>(rng: &mut R, q: usize) -> Vec<f64> {
    let spread = Normal::new(0.0, 4.0).unwrap();
    (0..q)
        .map(|_| match rng.random_range(0..10) {
            0 => f64::INFINITY,
            1 => f64::NEG_INFINITY,
            _ => spread.sample(rng),
        })
        .collect()
}

pub fn random_belief<R: Rng>(rng: &mut R, c: &Constellation) -> SymbolBelief {
    let llrs = random_llrs(rng, c.order());
    c.symbol_belief(&LlrVector::new(llrs).unwrap()).unwrap()
}

pub fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// 14-slot frame with pilots at symbols 2 and 11 and random data beliefs.
pub fn random_frame<R: Rng>(rng: &mut R, c: &Constellation) -> (FrameSlotSequence, Observation) {
    let slots: Vec<Slot> = (0..N_OFDM)
        .map(|t| {
            if PILOTS.contains(&t) {
                Slot::Pilot { amplitude: PILOT_AMP }
            } else {
                Slot::Data(random_belief(rng, c))
            }
        })
        .collect();
    let y = (0..N_OFDM).map(|_| cgauss(rng)).collect();
    (FrameSlotSequence::new(slots).unwrap(), Observation(y))
}

/// `(mean, second moment)` of every slot, pilots included.
pub fn moments(slots: &FrameSlotSequence) -> Vec<(Complex64, f64)> {
    slots
        .slots()
        .iter()
        .map(|s| (s.mean(), s.second_moment()))
        .collect()
}
