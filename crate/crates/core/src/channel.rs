//! Synthetic frequency-selective channel, frame construction and AWGN.
//!
//! Grids are stored row-major: symbol grids as `[t][f]`, received grids as
//! `[t][f][antenna]`, channel matrices as `[f][antenna]`.
//!
//! SNR is per receive antenna on data symbols: with unit channel power and
//! unit data power, `snr_db = 10 log10(1 / noise_power)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::constellation::{Constellation, ConstellationError};
use crate::ldpc::{LdpcCode, LdpcError};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid frame configuration: {0}")]
    Config(String),
    #[error("tap count {taps} outside 1..={n_used}")]
    TapsOutOfRange { taps: usize, n_used: usize },
    #[error("bit capacity mismatch: {required} info bits required, {available} supplied")]
    CapacityMismatch { required: usize, available: usize },
    #[error("grid holds {capacity} coded bits, fewer than one codeword of {codeword} bits")]
    NoCodewordFits { capacity: usize, codeword: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Ldpc(#[from] LdpcError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    pub n_data: usize,
    pub n_pilot: usize,
    pub rb_size: usize,
    pub rb_num: usize,
    pub n_rx: usize,
    pub pilot_amp: f64,
    pub pilot_positions: Vec<usize>,
    pub modulation_order: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            n_data: 12,
            n_pilot: 2,
            rb_size: 12,
            rb_num: 1,
            n_rx: 8,
            pilot_amp: SQRT_2,
            pilot_positions: vec![2, 11],
            modulation_order: 4,
        }
    }
}

impl FrameConfig {
    pub fn n_ofdm(&self) -> usize {
        self.n_data + self.n_pilot
    }

    pub fn n_used(&self) -> usize {
        self.rb_num * self.rb_size
    }

    pub fn is_pilot(&self, t: usize) -> bool {
        self.pilot_positions.contains(&t)
    }

    /// OFDM symbol indices carrying data, ascending.
    pub fn data_symbols(&self) -> Vec<usize> {
        (0..self.n_ofdm()).filter(|&t| !self.is_pilot(t)).collect()
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let fail = |m: String| Err(ChannelError::Config(m));
        if self.n_used() == 0 {
            return fail("rb_num * rb_size must be at least 1".into());
        }
        if self.n_rx == 0 {
            return fail("n_rx must be at least 1".into());
        }
        if self.pilot_positions.len() != self.n_pilot {
            return fail(format!(
                "{} pilot positions given for n_pilot = {}",
                self.pilot_positions.len(),
                self.n_pilot
            ));
        }
        if self.pilot_positions.windows(2).any(|w| w[0] >= w[1]) {
            return fail("pilot positions must be strictly increasing".into());
        }
        if let Some(&p) = self.pilot_positions.iter().find(|&&p| p >= self.n_ofdm()) {
            return fail(format!("pilot position {p} outside 0..{}", self.n_ofdm()));
        }
        if !(self.pilot_amp.is_finite() && self.pilot_amp > 0.0) {
            return fail(format!("pilot_amp must be positive, got {}", self.pilot_amp));
        }
        Constellation::new(self.modulation_order)?;
        Ok(())
    }
}

/// Noise power per complex sample for a per-antenna SNR in dB.
pub fn noise_power_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn snr_db_from_noise_power(noise_power: f64) -> f64 {
    10.0 * (1.0 / noise_power).log10()
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Ground-truth channel coefficients and noise level for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub n_used: usize,
    pub n_rx: usize,
    /// `[f][antenna]`
    pub h: Vec<Complex64>,
    pub noise_power: f64,
    pub taps: usize,
}

impl ChannelRealization {
    #[inline]
    pub fn at(&self, f: usize, a: usize) -> Complex64 {
        self.h[f * self.n_rx + a]
    }

    pub fn mean_power(&self) -> f64 {
        self.h.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.h.len() as f64
    }
}

/// Tapped-delay-line channel: `taps` i.i.d. CN(0, 1/taps) taps per antenna,
/// transformed to the `n_used` subcarriers with
/// `h[f] = sum_l g_l exp(-2 pi i f l / n_used)`, so `E|h|^2 = 1`.
pub fn draw_channel<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    taps: usize,
    noise_power: f64,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    let n_used = cfg.n_used();
    if taps == 0 || taps > n_used {
        return Err(ChannelError::TapsOutOfRange { taps, n_used });
    }
    if !(noise_power.is_finite() && noise_power >= 0.0) {
        return Err(ChannelError::Config(format!(
            "noise power must be finite and non-negative, got {noise_power}"
        )));
    }
    let n_rx = cfg.n_rx;
    let tap_power = 1.0 / taps as f64;
    let mut h = vec![Complex64::new(0.0, 0.0); n_used * n_rx];
    for a in 0..n_rx {
        let gains: Vec<Complex64> = (0..taps).map(|_| complex_gaussian(rng, tap_power)).collect();
        for f in 0..n_used {
            h[f * n_rx + a] = gains
                .iter()
                .enumerate()
                .map(|(l, g)| {
                    let phase = -2.0 * PI * (f * l) as f64 / n_used as f64;
                    g * Complex64::from_polar(1.0, phase)
                })
                .sum();
        }
    }
    Ok(ChannelRealization {
        n_used,
        n_rx,
        h,
        noise_power,
        taps,
    })
}

/// Source of one coded bit carried by a data resource element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitSource {
    Coded { codeword: usize, index: usize },
    Filler,
}

/// Where the coded bits of each codeword sit on the grid.
///
/// Data resource elements are filled in order of OFDM symbol, then
/// subcarrier; each carries `Q` consecutive bits of the concatenated
/// codewords. Positions past the last whole codeword carry random filler.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayout {
    pub n_ofdm: usize,
    pub n_used: usize,
    pub order: usize,
    pub n_codewords: usize,
    pub codeword_len: usize,
    pub pilot_positions: Vec<usize>,
    /// `(t, f)` of each data resource element in fill order.
    pub data_res: Vec<(usize, usize)>,
    /// `Q` entries per data resource element.
    pub bit_sources: Vec<BitSource>,
}

impl FrameLayout {
    pub fn new(cfg: &FrameConfig, codeword_len: usize) -> Result<Self, ChannelError> {
        cfg.validate()?;
        let order = cfg.modulation_order;
        let n_used = cfg.n_used();
        let data_res: Vec<(usize, usize)> = cfg
            .data_symbols()
            .into_iter()
            .flat_map(|t| (0..n_used).map(move |f| (t, f)))
            .collect();
        let capacity = data_res.len() * order;
        let n_codewords = capacity / codeword_len;
        if n_codewords == 0 {
            return Err(ChannelError::NoCodewordFits {
                capacity,
                codeword: codeword_len,
            });
        }
        let coded = n_codewords * codeword_len;
        let bit_sources = (0..capacity)
            .map(|b| {
                if b < coded {
                    BitSource::Coded {
                        codeword: b / codeword_len,
                        index: b % codeword_len,
                    }
                } else {
                    BitSource::Filler
                }
            })
            .collect();
        Ok(Self {
            n_ofdm: cfg.n_ofdm(),
            n_used,
            order,
            n_codewords,
            codeword_len,
            pilot_positions: cfg.pilot_positions.clone(),
            data_res,
            bit_sources,
        })
    }

    pub fn re_bits(&self, re: usize) -> &[BitSource] {
        &self.bit_sources[re * self.order..(re + 1) * self.order]
    }

    /// A resource element carrying only filler bits.
    pub fn is_untracked(&self, re: usize) -> bool {
        self.re_bits(re).iter().all(|b| *b == BitSource::Filler)
    }
}

/// Transmitted frame with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    pub layout: FrameLayout,
    pub pilot_amp: f64,
    /// Information bits of each codeword.
    pub info_bits: Vec<Vec<u8>>,
    pub coded_bits: Vec<Vec<u8>>,
    /// Lattice index of each data resource element, in layout order.
    pub symbol_indices: Vec<usize>,
    /// `[t][f]` transmitted symbols, pilots included.
    pub symbols: Vec<Complex64>,
}

impl TxFrame {
    #[inline]
    pub fn symbol(&self, t: usize, f: usize) -> Complex64 {
        self.symbols[t * self.layout.n_used + f]
    }

    /// Value of bit `k` of data resource element `re`.
    pub fn re_bit(&self, re: usize, k: usize, constellation: &Constellation) -> u8 {
        constellation.label_bit(self.symbol_indices[re], k)
    }
}

/// Draws `k * n_codewords` uniform information bits for the layout.
pub fn random_info_bits<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    code: &LdpcCode,
    rng: &mut R,
) -> Result<Vec<u8>, ChannelError> {
    let layout = FrameLayout::new(cfg, code.n())?;
    Ok((0..layout.n_codewords * code.k())
        .map(|_| u8::from(rng.random::<bool>()))
        .collect())
}

/// Encodes `info_bits` (all codewords concatenated) and maps them on the grid.
/// `rng` only draws filler bits.
pub fn modulate_frame<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    code: &LdpcCode,
    info_bits: &[u8],
    rng: &mut R,
) -> Result<TxFrame, ChannelError> {
    let layout = FrameLayout::new(cfg, code.n())?;
    let required = layout.n_codewords * code.k();
    if info_bits.len() != required {
        return Err(ChannelError::CapacityMismatch {
            required,
            available: info_bits.len(),
        });
    }
    let constellation = Constellation::new(cfg.modulation_order)?;

    let info: Vec<Vec<u8>> = info_bits.chunks(code.k()).map(<[u8]>::to_vec).collect();
    let coded = info
        .iter()
        .map(|i| code.encode(i))
        .collect::<Result<Vec<_>, _>>()?;

    let q = layout.order;
    let mut symbols = vec![Complex64::new(0.0, 0.0); layout.n_ofdm * layout.n_used];
    for &t in &cfg.pilot_positions {
        for f in 0..layout.n_used {
            symbols[t * layout.n_used + f] = Complex64::new(cfg.pilot_amp, 0.0);
        }
    }
    let mut symbol_indices = Vec::with_capacity(layout.data_res.len());
    let mut bits = vec![0u8; q];
    for (re, &(t, f)) in layout.data_res.iter().enumerate() {
        for (k, src) in layout.re_bits(re).iter().enumerate() {
            bits[k] = match *src {
                BitSource::Coded { codeword, index } => coded[codeword][index],
                BitSource::Filler => u8::from(rng.random::<bool>()),
            };
        }
        let idx = constellation.index_of_bits(&bits);
        symbol_indices.push(idx);
        symbols[t * layout.n_used + f] = constellation.points()[idx];
    }

    Ok(TxFrame {
        layout,
        pilot_amp: cfg.pilot_amp,
        info_bits: info,
        coded_bits: coded,
        symbol_indices,
        symbols,
    })
}

/// Received samples `[t][f][antenna]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedGrid {
    pub n_ofdm: usize,
    pub n_used: usize,
    pub n_rx: usize,
    pub y: Vec<Complex64>,
}

impl ReceivedGrid {
    #[inline]
    pub fn at(&self, t: usize, f: usize, a: usize) -> Complex64 {
        self.y[(t * self.n_used + f) * self.n_rx + a]
    }

    /// Order-sensitive hash of the exact sample bits.
    pub fn checksum(&self) -> u64 {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let mut hasher = DefaultHasher::new();
        (self.n_ofdm, self.n_used, self.n_rx).hash(&mut hasher);
        for v in &self.y {
            v.re.to_bits().hash(&mut hasher);
            v.im.to_bits().hash(&mut hasher);
        }
        hasher.finish()
    }
}

/// `y[t,f,a] = h[f,a] s[t,f] + e` with circular Gaussian `e` of variance
/// `ch.noise_power`, independent across all indices.
pub fn transmit<R: Rng + ?Sized>(
    tx: &TxFrame,
    ch: &ChannelRealization,
    rng: &mut R,
) -> Result<ReceivedGrid, ChannelError> {
    let (n_ofdm, n_used) = (tx.layout.n_ofdm, tx.layout.n_used);
    if ch.n_used != n_used {
        return Err(ChannelError::Dimension(format!(
            "channel has {} subcarriers, frame has {n_used}",
            ch.n_used
        )));
    }
    let n_rx = ch.n_rx;
    let mut y = Vec::with_capacity(n_ofdm * n_used * n_rx);
    for t in 0..n_ofdm {
        for f in 0..n_used {
            let s = tx.symbol(t, f);
            for a in 0..n_rx {
                let mut v = ch.at(f, a) * s;
                if ch.noise_power > 0.0 {
                    v += complex_gaussian(rng, ch.noise_power);
                }
                y.push(v);
            }
        }
    }
    Ok(ReceivedGrid {
        n_ofdm,
        n_used,
        n_rx,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn default_config_is_valid() {
        let cfg = FrameConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_ofdm(), 14);
        assert_eq!(cfg.data_symbols().len(), 12);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = FrameConfig::default();
        cfg.pilot_positions = vec![2];
        assert!(cfg.validate().is_err());
        let mut cfg = FrameConfig::default();
        cfg.pilot_positions = vec![11, 2];
        assert!(cfg.validate().is_err());
        let mut cfg = FrameConfig::default();
        cfg.pilot_positions = vec![2, 14];
        assert!(cfg.validate().is_err());
        let mut cfg = FrameConfig::default();
        cfg.modulation_order = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = FrameConfig::default();
        cfg.n_rx = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_tap_is_flat() {
        let cfg = FrameConfig::default();
        let ch = draw_channel(&cfg, 1, 0.1, &mut rng::seeded(3)).unwrap();
        for a in 0..cfg.n_rx {
            for f in 1..cfg.n_used() {
                assert!((ch.at(f, a) - ch.at(0, a)).norm() == 0.0);
            }
        }
    }

    #[test]
    fn taps_out_of_range() {
        let cfg = FrameConfig::default();
        assert!(matches!(
            draw_channel(&cfg, 0, 0.1, &mut rng::seeded(0)),
            Err(ChannelError::TapsOutOfRange { .. })
        ));
        assert!(matches!(
            draw_channel(&cfg, 13, 0.1, &mut rng::seeded(0)),
            Err(ChannelError::TapsOutOfRange { taps: 13, n_used: 12 })
        ));
    }

    #[test]
    fn layout_tiles_default_grids() {
        let mut cfg = FrameConfig::default();
        for (q, cws) in [(2, 1), (4, 2), (6, 3)] {
            cfg.modulation_order = q;
            let layout = FrameLayout::new(&cfg, 288).unwrap();
            assert_eq!(layout.n_codewords, cws);
            assert!(layout.bit_sources.iter().all(|b| *b != BitSource::Filler));
        }
    }

    #[test]
    fn layout_with_filler() {
        let mut cfg = FrameConfig::default();
        cfg.rb_num = 2;
        cfg.modulation_order = 2;
        // 288 REs * 2 bits = 576 = 2 codewords of 288; force filler with 250-bit words.
        let layout = FrameLayout::new(&cfg, 250).unwrap();
        assert_eq!(layout.n_codewords, 2);
        assert_eq!(
            layout.bit_sources.iter().filter(|b| **b == BitSource::Filler).count(),
            576 - 500
        );
        assert!(layout.is_untracked(287));
        assert!(!layout.is_untracked(0));
    }

    #[test]
    fn capacity_mismatch_reports_counts() {
        let cfg = FrameConfig::default();
        let code = LdpcCode::shipped();
        let err = modulate_frame(&cfg, &code, &[0; 10], &mut rng::seeded(0)).unwrap_err();
        assert!(matches!(
            err,
            ChannelError::CapacityMismatch { required: 288, available: 10 }
        ));
    }

    #[test]
    fn zero_codeword_qpsk_and_pilots() {
        let mut cfg = FrameConfig::default();
        cfg.modulation_order = 2;
        let code = LdpcCode::shipped();
        let tx = modulate_frame(&cfg, &code, &vec![0; 144], &mut rng::seeded(0)).unwrap();
        let qpsk = Constellation::new(2).unwrap();
        for &(t, f) in &tx.layout.data_res {
            assert_eq!(tx.symbol(t, f), qpsk.points()[0]);
        }
        for &t in &cfg.pilot_positions {
            for f in 0..cfg.n_used() {
                assert_eq!(tx.symbol(t, f), Complex64::new(SQRT_2, 0.0));
            }
        }
    }

    #[test]
    fn noiseless_transmit_is_product() {
        let cfg = FrameConfig::default();
        let code = LdpcCode::shipped();
        let mut r = rng::seeded(11);
        let info = random_info_bits(&cfg, &code, &mut r).unwrap();
        let tx = modulate_frame(&cfg, &code, &info, &mut r).unwrap();
        let ch = draw_channel(&cfg, 4, 0.0, &mut r).unwrap();
        let grid = transmit(&tx, &ch, &mut r).unwrap();
        for t in 0..cfg.n_ofdm() {
            for f in 0..cfg.n_used() {
                for a in 0..cfg.n_rx {
                    assert_eq!(grid.at(t, f, a), ch.at(f, a) * tx.symbol(t, f));
                }
            }
        }
    }

    #[test]
    fn snr_conversion() {
        assert!((noise_power_from_snr_db(10.0) - 0.1).abs() < 1e-15);
        assert!((snr_db_from_noise_power(0.2) - 6.989700043360188).abs() < 1e-12);
    }
}
