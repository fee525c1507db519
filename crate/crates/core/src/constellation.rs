//! Square QAM constellations and the soft modulator.
//!
//! A [`Constellation`] stores its points indexed by label: `points[j]` carries
//! the bit pattern of `j`, most significant bit first. The first `Q/2` bits
//! select the in-phase level and the last `Q/2` bits the quadrature level, each
//! through a per-axis Gray code. Bit value 0 on the leading bit of an axis maps
//! to the positive half plane, so QPSK comes out as
//! `[(1+i), (1-i), (-1+i), (-1-i)] / sqrt(2)` for labels `00, 01, 10, 11`.
//!
//! LLRs everywhere in this crate follow `ln(P(bit = 0) / P(bit = 1))`:
//! positive values favour bit 0.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstellationError {
    #[error("unsupported modulation order {0} (expected 2, 4 or 6)")]
    UnsupportedOrder(usize),
    #[error("LLR is NaN")]
    NanLlr,
    #[error("LLR vector has length {got}, constellation order is {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// QAM lattice with bit labels and unit average power.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    /// Builds a square Gray-labelled QAM constellation with `order` bits per symbol.
    pub fn new(order: usize) -> Result<Self, ConstellationError> {
        if !matches!(order, 2 | 4 | 6) {
            return Err(ConstellationError::UnsupportedOrder(order));
        }
        let axis_bits = order / 2;
        let size = 1usize << order;
        let axis_mask = (1u32 << axis_bits) - 1;

        let raw: Vec<Complex64> = (0..size as u32)
            .map(|label| {
                let i_bits = label >> axis_bits;
                let q_bits = label & axis_mask;
                Complex64::new(
                    gray_axis_level(i_bits, axis_bits),
                    gray_axis_level(q_bits, axis_bits),
                )
            })
            .collect();

        // Mean of squared odd levels 1, 3, .., 2^m - 1 is (4^m - 1) / 3 per axis.
        let levels = (1u64 << axis_bits) as f64;
        let mean_power = 2.0 * (levels * levels - 1.0) / 3.0;
        let scale = mean_power.recip().sqrt();
        let points = raw.into_iter().map(|p| p * scale).collect();

        Ok(Self { order, points })
    }

    /// Bits per symbol (Q).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of lattice nodes (2^Q).
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Lattice nodes; `points()[j]` is labelled with the bits of `j`.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit `k` (0 = first / most significant) of label `j`.
    #[inline]
    pub fn label_bit(&self, label: usize, k: usize) -> u8 {
        ((label >> (self.order - 1 - k)) & 1) as u8
    }

    /// Bit pattern of node `j`, first bit first.
    pub fn label(&self, label: usize) -> Vec<u8> {
        (0..self.order).map(|k| self.label_bit(label, k)).collect()
    }

    /// Maps `Q` bits (first bit first) to a lattice index.
    pub fn index_of_bits(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.order);
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1))
    }

    /// Maps `Q` bits to their lattice point.
    pub fn map_bits(&self, bits: &[u8]) -> Complex64 {
        self.points[self.index_of_bits(bits)]
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Posterior lattice-node probabilities `P_j` for the given LLRs.
    pub fn node_probabilities(&self, llrs: &LlrVector) -> Result<Vec<f64>, ConstellationError> {
        self.check_len(llrs)?;
        let p_one: Vec<f64> = llrs.values().iter().map(|&l| prob_one_unchecked(l)).collect();
        let p_zero: Vec<f64> = llrs.values().iter().map(|&l| prob_one_unchecked(-l)).collect();

        Ok((0..self.size())
            .map(|j| {
                (0..self.order)
                    .map(|k| {
                        if self.label_bit(j, k) == 1 {
                            p_one[k]
                        } else {
                            p_zero[k]
                        }
                    })
                    .product()
            })
            .collect())
    }

    /// Soft modulator: posterior mean, second moment, variance and hard decision.
    pub fn symbol_belief(&self, llrs: &LlrVector) -> Result<SymbolBelief, ConstellationError> {
        let node_probs = self.node_probabilities(llrs)?;

        let mut mean = Complex64::new(0.0, 0.0);
        let mut second_moment = 0.0;
        for (&p, q) in node_probs.iter().zip(&self.points) {
            mean += q * p;
            second_moment += p * q.norm_sqr();
        }
        // Centred sum keeps the variance non-negative and accurate near certainty.
        let variance = node_probs
            .iter()
            .zip(&self.points)
            .map(|(&p, q)| p * (q - mean).norm_sqr())
            .sum();

        let hard_index = argmax_lowest(&node_probs);
        Ok(SymbolBelief {
            mean,
            second_moment,
            variance,
            hard_point: self.points[hard_index],
            node_probs,
        })
    }

    /// Belief of a symbol known with certainty (e.g. a correctly decoded one).
    pub fn certain_belief(&self, index: usize) -> SymbolBelief {
        let mut node_probs = vec![0.0; self.size()];
        node_probs[index] = 1.0;
        let point = self.points[index];
        SymbolBelief {
            mean: point,
            second_moment: point.norm_sqr(),
            variance: 0.0,
            hard_point: point,
            node_probs,
        }
    }

    fn check_len(&self, llrs: &LlrVector) -> Result<(), ConstellationError> {
        if llrs.len() != self.order {
            return Err(ConstellationError::LengthMismatch {
                expected: self.order,
                got: llrs.len(),
            });
        }
        Ok(())
    }
}

/// Convenience wrapper for [`Constellation::new`].
pub fn make_constellation(order: usize) -> Result<Constellation, ConstellationError> {
    Constellation::new(order)
}

/// Per-axis amplitude (unnormalised odd integer) for an `m`-bit Gray label.
///
/// Leading bit is the sign, remaining bits pick the magnitude so that
/// neighbouring levels differ in one bit.
fn gray_axis_level(bits: u32, m: usize) -> f64 {
    let bit = |k: usize| ((bits >> (m - 1 - k)) & 1) as f64;
    let mut magnitude = 1.0;
    // Build from the least significant magnitude bit outwards.
    for k in (1..m).rev() {
        let span = (1u32 << (m - k)) as f64;
        magnitude = span - (1.0 - 2.0 * bit(k)) * magnitude;
    }
    (1.0 - 2.0 * bit(0)) * magnitude
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// `P(bit = 1) = 1 / (1 + e^llr)`, stable for any magnitude including infinities.
pub fn bit_prob_one(llr: f64) -> Result<f64, ConstellationError> {
    if llr.is_nan() {
        return Err(ConstellationError::NanLlr);
    }
    Ok(prob_one_unchecked(llr))
}

#[inline]
fn prob_one_unchecked(llr: f64) -> f64 {
    if llr >= 0.0 {
        let e = (-llr).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + llr.exp())
    }
}

/// Per-bit LLRs for one symbol. NaN is rejected, infinities are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ConstellationError> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(ConstellationError::NanLlr);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<&[f64]> for LlrVector {
    type Error = ConstellationError;

    fn try_from(values: &[f64]) -> Result<Self, Self::Error> {
        Self::new(values.to_vec())
    }
}

/// Posterior statistics of one transmitted symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBelief {
    pub mean: Complex64,
    pub second_moment: f64,
    pub variance: f64,
    /// Most probable lattice node, ties resolved to the lowest index.
    pub hard_point: Complex64,
    pub node_probs: Vec<f64>,
}

impl SymbolBelief {
    /// Belief carrying no information: all nodes equally likely.
    pub fn uninformative(c: &Constellation) -> Self {
        let zeros = LlrVector(vec![0.0; c.order()]);
        c.symbol_belief(&zeros).expect("length matches by construction")
    }
}
