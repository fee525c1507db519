//! Binary LDPC codes: alist loading, systematic encoding and normalised
//! min-sum decoding.
//!
//! Decoder LLRs use the same convention as the soft modulator,
//! `ln(P(bit = 0) / P(bit = 1))`, so posterior LLRs can be fed straight into
//! [`crate::constellation::Constellation::symbol_belief`].

pub mod alist;
mod decoder;
pub mod gf2;
pub mod peg;

use std::path::Path;

use thiserror::Error;

pub use alist::AlistMatrix;
pub use decoder::{DecodeResult, MinSumConfig};
use gf2::BitRow;

/// The (288, 144) regular (3,6) PEG code shipped with the crate.
pub const SHIPPED_288_144: &str = include_str!("../../data/ldpc_288_144.alist");

#[derive(Debug, Error)]
pub enum LdpcError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed alist: {0}")]
    Alist(String),
    #[error("parity-check matrix is rank deficient over GF(2): rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("column {col} has weight {weight}, expected at least 2")]
    LowColumnWeight { col: usize, weight: usize },
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Parity-check code with a precomputed systematic encoder.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    k: usize,
    /// Column indices of each check.
    checks: Vec<Vec<usize>>,
    /// Check indices of each variable.
    vars: Vec<Vec<usize>>,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Reduced parity rows; row `t` determines the bit at `parity_positions[t]`.
    parity_rows: Vec<BitRow>,
}

impl LdpcCode {
    pub fn from_matrix(h: &AlistMatrix) -> Result<Self, LdpcError> {
        for (col, list) in h.cols.iter().enumerate() {
            if list.len() < 2 {
                return Err(LdpcError::LowColumnWeight {
                    col,
                    weight: list.len(),
                });
            }
        }
        let dense: Vec<BitRow> = h
            .rows
            .iter()
            .map(|r| BitRow::from_ones(h.n_cols, r))
            .collect();
        let ech = gf2::reduce(dense, h.n_cols);
        if ech.rank() < h.n_rows {
            return Err(LdpcError::RankDeficient {
                rank: ech.rank(),
                rows: h.n_rows,
            });
        }
        let mut is_parity = vec![false; h.n_cols];
        for &c in &ech.pivot_cols {
            is_parity[c] = true;
        }
        let info_positions = (0..h.n_cols).filter(|&c| !is_parity[c]).collect();

        Ok(Self {
            n: h.n_cols,
            k: h.n_cols - h.n_rows,
            checks: h.rows.clone(),
            vars: h.cols.clone(),
            info_positions,
            parity_positions: ech.pivot_cols,
            parity_rows: ech.rows,
        })
    }

    pub fn from_alist_str(text: &str) -> Result<Self, LdpcError> {
        Self::from_matrix(&alist::parse(text)?)
    }

    /// The bundled (288, 144) code.
    pub fn shipped() -> Self {
        Self::from_alist_str(SHIPPED_288_144).expect("bundled code is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.n - self.k
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }

    pub fn vars(&self) -> &[Vec<usize>] {
        &self.vars
    }

    /// Codeword positions that carry the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, LdpcError> {
        if info.len() != self.k {
            return Err(LdpcError::LengthMismatch {
                expected: self.k,
                got: info.len(),
            });
        }
        let mut word = BitRow::zeros(self.n);
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            word.set(pos, b & 1 == 1);
        }
        let parity: Vec<bool> = self.parity_rows.iter().map(|row| row.dot(&word)).collect();
        for (&pos, bit) in self.parity_positions.iter().zip(parity) {
            word.set(pos, bit);
        }
        Ok((0..self.n).map(|i| u8::from(word.get(i))).collect())
    }

    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }

    /// Whether every parity check is satisfied.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.checks
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) == 0)
    }

    /// Normalised min-sum decoding with a flooding schedule.
    pub fn decode_min_sum(&self, channel_llrs: &[f64], cfg: &MinSumConfig) -> DecodeResult {
        decoder::decode(self, channel_llrs, cfg)
    }
}

pub fn load_code(path: impl AsRef<Path>) -> Result<LdpcCode, LdpcError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LdpcError::Io {
        path: path.display().to_string(),
        source,
    })?;
    LdpcCode::from_alist_str(&text)
}
