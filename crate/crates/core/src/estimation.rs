//! Data-aided least-squares channel estimators for one (subcarrier, antenna)
//! coefficient.
//!
//! Every estimator here is linear in the observation: `h_hat = sum_i c_i * y_i`
//! where the combining coefficients `c_i` depend only on the slot sequence
//! (pilots and symbol beliefs) and the noise context. [`combining_weights`]
//! exposes the coefficients so a receiver can compute them once per subcarrier
//! and reuse them across antennas.
//!
//! Model: `y_i = h x_i + e_i`. Pilot slots have `x_i = p` known exactly, data
//! slots carry a [`SymbolBelief`] with posterior mean `m_i`, second moment
//! `s_i` and variance `v_i = s_i - |m_i|^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::constellation::SymbolBelief;

/// Floor for sigma^2 when zero noise meets a zero-variance slot in the closed form.
pub const SIGMA_SQ_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("no pilots")]
    NoPilots,
    #[error("degenerate hard symbol at slot {0}")]
    DegenerateHardSymbol(usize),
    #[error("hard-weighted estimator undefined: zero total hard-symbol energy")]
    HardWeightedUndefined,
    #[error("unbiased estimator undefined: all symbol means are zero")]
    UnbiasedUndefined,
    #[error("singular correlation matrix")]
    SingularCorrelation,
    #[error("zero effective variance with zero noise at slot {0}")]
    ZeroEffectiveVariance(usize),
    #[error("non-positive soft-param denominator at slot {0}")]
    NonPositiveDenominator(usize),
    #[error("observation length {got} does not match {expected} slots")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid noise context: {0}")]
    InvalidNoise(String),
}

/// One OFDM symbol position within the frame, as seen by the estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Pilot { amplitude: f64 },
    Data(SymbolBelief),
}

impl Slot {
    pub fn mean(&self) -> Complex64 {
        match self {
            Slot::Pilot { amplitude } => Complex64::new(*amplitude, 0.0),
            Slot::Data(b) => b.mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Slot::Pilot { amplitude } => amplitude * amplitude,
            Slot::Data(b) => b.second_moment,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Slot::Pilot { .. } => 0.0,
            Slot::Data(b) => b.variance,
        }
    }

    pub fn hard_point(&self) -> Complex64 {
        match self {
            Slot::Pilot { amplitude } => Complex64::new(*amplitude, 0.0),
            Slot::Data(b) => b.hard_point,
        }
    }

    pub fn is_pilot(&self) -> bool {
        matches!(self, Slot::Pilot { .. })
    }
}

/// Mixed pilot / data description of one frame for a single coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSlotSequence {
    slots: Vec<Slot>,
    n_pilot: usize,
}

impl FrameSlotSequence {
    pub fn new(slots: Vec<Slot>) -> Result<Self, EstimationError> {
        if slots.is_empty() {
            return Err(EstimationError::InvalidFrame("empty slot sequence".into()));
        }
        let mut amplitude = None;
        let mut n_pilot = 0;
        for s in &slots {
            if let Slot::Pilot { amplitude: a } = s {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(EstimationError::InvalidFrame(format!(
                        "pilot amplitude must be positive, got {a}"
                    )));
                }
                match amplitude {
                    None => amplitude = Some(*a),
                    Some(first) if first != *a => {
                        return Err(EstimationError::InvalidFrame(
                            "pilot amplitudes differ within one frame".into(),
                        ))
                    }
                    _ => {}
                }
                n_pilot += 1;
            }
        }
        Ok(Self { slots, n_pilot })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn n_pilot(&self) -> usize {
        self.n_pilot
    }

    pub fn n_data(&self) -> usize {
        self.slots.len() - self.n_pilot
    }

    pub fn pilot_amplitude(&self) -> Option<f64> {
        self.slots.iter().find_map(|s| match s {
            Slot::Pilot { amplitude } => Some(*amplitude),
            _ => None,
        })
    }
}

/// Received samples `y_i` for one (subcarrier, antenna) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<Complex64>);

impl Observation {
    pub fn y(&self) -> &[Complex64] {
        &self.0
    }
}

/// `sigma_sq = E|e|^2 / E|h|^2` and the soft-param constant `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseContext {
    sigma_sq: f64,
    c_param: f64,
}

impl NoiseContext {
    pub fn new(sigma_sq: f64, c_param: f64) -> Result<Self, EstimationError> {
        for (name, v) in [("sigma_sq", sigma_sq), ("c_param", c_param)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EstimationError::InvalidNoise(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self { sigma_sq, c_param })
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn c_param(&self) -> f64 {
        self.c_param
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    PilotOnly,
    Hard,
    HardWeighted,
    SoftUnbiased,
    /// General linear MMSE via an explicit matrix solve.
    SoftGeneral,
    /// Same estimate as `SoftGeneral`, via the rank-one-update closed form.
    SoftClosedForm,
    SoftParam,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::PilotOnly,
        EstimatorKind::Hard,
        EstimatorKind::HardWeighted,
        EstimatorKind::SoftUnbiased,
        EstimatorKind::SoftGeneral,
        EstimatorKind::SoftClosedForm,
        EstimatorKind::SoftParam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::PilotOnly => "pilot_only",
            EstimatorKind::Hard => "hard",
            EstimatorKind::HardWeighted => "hard_weighted",
            EstimatorKind::SoftUnbiased => "soft_unbiased",
            EstimatorKind::SoftGeneral => "soft_general",
            EstimatorKind::SoftClosedForm => "soft_closed_form",
            EstimatorKind::SoftParam => "soft_param",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the estimator consumes noise information (sigma^2 or C).
    pub fn uses_noise(self) -> bool {
        matches!(
            self,
            EstimatorKind::SoftGeneral | EstimatorKind::SoftClosedForm | EstimatorKind::SoftParam
        )
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCoefEstimate {
    pub h_hat: Complex64,
    pub estimator_kind: EstimatorKind,
}

fn check_obs(slots: &FrameSlotSequence, obs: &Observation) -> Result<(), EstimationError> {
    if obs.0.len() != slots.len() {
        return Err(EstimationError::LengthMismatch {
            expected: slots.len(),
            got: obs.0.len(),
        });
    }
    Ok(())
}

fn apply(weights: &[Complex64], y: &[Complex64]) -> Complex64 {
    weights.iter().zip(y).map(|(c, y)| c * y).sum()
}

fn finish(
    kind: EstimatorKind,
    slots: &FrameSlotSequence,
    obs: &Observation,
    weights: Result<Vec<Complex64>, EstimationError>,
) -> Result<ChannelCoefEstimate, EstimationError> {
    check_obs(slots, obs)?;
    let weights = weights?;
    Ok(ChannelCoefEstimate {
        h_hat: apply(&weights, obs.y()),
        estimator_kind: kind,
    })
}

/// Parameters beyond the slots that some estimators need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorInputs {
    pub noise: NoiseContext,
    /// Band-wide average data-symbol variance, used by soft-param only.
    pub avg_variance: f64,
}

/// Combining coefficients `c_i` such that `h_hat = sum_i c_i y_i`.
pub fn combining_weights(
    kind: EstimatorKind,
    slots: &FrameSlotSequence,
    inputs: &EstimatorInputs,
) -> Result<Vec<Complex64>, EstimationError> {
    match kind {
        EstimatorKind::PilotOnly => pilot_only_weights(slots),
        EstimatorKind::Hard => hard_weights(slots),
        EstimatorKind::HardWeighted => hard_weighted_weights(slots),
        EstimatorKind::SoftUnbiased => soft_unbiased_weights(slots),
        EstimatorKind::SoftGeneral => soft_general_weights(slots, &inputs.noise),
        EstimatorKind::SoftClosedForm => soft_closed_form_weights(slots, &inputs.noise),
        EstimatorKind::SoftParam => soft_param_weights(slots, &inputs.noise, inputs.avg_variance),
    }
}

/// Dispatches to the estimator named by `kind`.
pub fn estimate(
    kind: EstimatorKind,
    slots: &FrameSlotSequence,
    obs: &Observation,
    inputs: &EstimatorInputs,
) -> Result<ChannelCoefEstimate, EstimationError> {
    if kind == EstimatorKind::SoftGeneral {
        return estimate_soft_general(slots, obs, &inputs.noise);
    }
    finish(kind, slots, obs, combining_weights(kind, slots, inputs))
}

fn pilot_only_weights(slots: &FrameSlotSequence) -> Result<Vec<Complex64>, EstimationError> {
    let p = slots.pilot_amplitude().ok_or(EstimationError::NoPilots)?;
    let w = 1.0 / (slots.n_pilot() as f64 * p);
    Ok(slots
        .slots()
        .iter()
        .map(|s| {
            if s.is_pilot() {
                Complex64::new(w, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect())
}

/// Average of the pilot observations divided by the pilot amplitude.
pub fn estimate_pilot_only(
    slots: &FrameSlotSequence,
    obs: &Observation,
) -> Result<ChannelCoefEstimate, EstimationError> {
    finish(EstimatorKind::PilotOnly, slots, obs, pilot_only_weights(slots))
}

fn hard_weights(slots: &FrameSlotSequence) -> Result<Vec<Complex64>, EstimationError> {
    let n = slots.len() as f64;
    slots
        .slots()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let x = s.hard_point();
            let e = x.norm_sqr();
            if e <= 0.0 {
                return Err(EstimationError::DegenerateHardSymbol(i));
            }
            Ok(x.conj() / (n * e))
        })
        .collect()
}

/// Per-slot normalised average `(1/N) sum conj([x_i]) y_i / |[x_i]|^2`.
pub fn estimate_hard(
    slots: &FrameSlotSequence,
    obs: &Observation,
) -> Result<ChannelCoefEstimate, EstimationError> {
    finish(EstimatorKind::Hard, slots, obs, hard_weights(slots))
}

fn hard_weighted_weights(slots: &FrameSlotSequence) -> Result<Vec<Complex64>, EstimationError> {
    let energy: f64 = slots.slots().iter().map(|s| s.hard_point().norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(EstimationError::HardWeightedUndefined);
    }
    Ok(slots
        .slots()
        .iter()
        .map(|s| s.hard_point().conj() / energy)
        .collect())
}

/// Least-squares fit of `y_i ~ h [x_i]`: `sum conj([x_i]) y_i / sum |[x_i]|^2`.
pub fn estimate_hard_weighted(
    slots: &FrameSlotSequence,
    obs: &Observation,
) -> Result<ChannelCoefEstimate, EstimationError> {
    finish(EstimatorKind::HardWeighted, slots, obs, hard_weighted_weights(slots))
}

fn soft_unbiased_weights(slots: &FrameSlotSequence) -> Result<Vec<Complex64>, EstimationError> {
    let energy: f64 = slots.slots().iter().map(|s| s.mean().norm_sqr()).sum();
    if energy <= 0.0 {
        return Err(EstimationError::UnbiasedUndefined);
    }
    Ok(slots.slots().iter().map(|s| s.mean().conj() / energy).collect())
}

/// Generalised LS on the soft means: `sum conj(E x_i) y_i / sum |E x_i|^2`.
pub fn estimate_soft_unbiased(
    slots: &FrameSlotSequence,
    obs: &Observation,
) -> Result<ChannelCoefEstimate, EstimationError> {
    finish(EstimatorKind::SoftUnbiased, slots, obs, soft_unbiased_weights(slots))
}

/// `E(x x^H) + sigma^2 I` with `E(x x^H) = E x E x^H + diag(v_i)`.
fn correlation_matrix(slots: &FrameSlotSequence, sigma_sq: f64) -> DMatrix<Complex64> {
    let n = slots.len();
    let means: Vec<Complex64> = slots.slots().iter().map(Slot::mean).collect();
    DMatrix::from_fn(n, n, |r, c| {
        let mut v = means[r] * means[c].conj();
        if r == c {
            v += slots.slots()[r].variance() + sigma_sq;
        }
        v
    })
}

/// Solves `M u = rhs` by LU with partial pivoting, rejecting numerically
/// singular systems (pivot below `n * eps * max|M|`).
fn solve_dense(
    m: DMatrix<Complex64>,
    rhs: DVector<Complex64>,
) -> Result<DVector<Complex64>, EstimationError> {
    let n = m.nrows();
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let lu = m.lu();
    let tol = n as f64 * f64::EPSILON * scale;
    if lu.u().diagonal().iter().any(|d| d.norm() <= tol) {
        return Err(EstimationError::SingularCorrelation);
    }
    lu.solve(&rhs).ok_or(EstimationError::SingularCorrelation)
}

fn soft_general_weights(
    slots: &FrameSlotSequence,
    noise: &NoiseContext,
) -> Result<Vec<Complex64>, EstimationError> {
    let m = correlation_matrix(slots, noise.sigma_sq());
    let means = DVector::from_iterator(slots.len(), slots.slots().iter().map(Slot::mean));
    // M is Hermitian, so (E x^H M^-1)_i = conj((M^-1 E x)_i).
    let u = solve_dense(m, means)?;
    Ok(u.iter().map(|v| v.conj()).collect())
}

/// General linear MMSE estimate `E x^H (E(x x^H) + sigma^2 I)^-1 y` through an
/// explicit dense solve. O(N^3); serves as the reference for the closed form.
pub fn estimate_soft_general(
    slots: &FrameSlotSequence,
    obs: &Observation,
    noise: &NoiseContext,
) -> Result<ChannelCoefEstimate, EstimationError> {
    check_obs(slots, obs)?;
    let m = correlation_matrix(slots, noise.sigma_sq());
    let y = DVector::from_column_slice(obs.y());
    let w = solve_dense(m, y)?;
    let h_hat = slots
        .slots()
        .iter()
        .zip(w.iter())
        .map(|(s, w)| s.mean().conj() * w)
        .sum();
    Ok(ChannelCoefEstimate {
        h_hat,
        estimator_kind: EstimatorKind::SoftGeneral,
    })
}

fn soft_closed_form_weights(
    slots: &FrameSlotSequence,
    noise: &NoiseContext,
) -> Result<Vec<Complex64>, EstimationError> {
    let mut sigma_sq = noise.sigma_sq();
    if sigma_sq == 0.0 && slots.slots().iter().any(|s| s.variance() <= 0.0) {
        sigma_sq = SIGMA_SQ_FLOOR;
    }
    // A_jj = v_j + sigma^2
    let diag: Vec<f64> = slots.slots().iter().map(|s| s.variance() + sigma_sq).collect();
    if let Some(j) = diag.iter().position(|&a| a <= 0.0 || !a.is_finite()) {
        return Err(EstimationError::ZeroEffectiveVariance(j));
    }
    // S = sum_j |E x_j|^2 / A_jj, so that sum_{j != i} |E x_j|^2 A_ii / A_jj = A_ii S - |E x_i|^2.
    let total: f64 = slots
        .slots()
        .iter()
        .zip(&diag)
        .map(|(s, a)| s.mean().norm_sqr() / a)
        .sum();

    Ok(slots
        .slots()
        .iter()
        .zip(&diag)
        .map(|(s, &a)| {
            let m = s.mean();
            let cross = a * total - m.norm_sqr();
            let denom = s.second_moment() + sigma_sq + cross;
            m.conj() / denom
        })
        .collect())
}

/// Rank-one-update closed form of the soft MMSE estimate, O(N):
///
/// `h_hat = sum_i conj(E x_i) y_i / (E|x_i|^2 + sigma^2 + sum_{j!=i} |E x_j|^2 (v_i + sigma^2) / (v_j + sigma^2))`.
///
/// When `sigma^2 == 0` and some slot is certain, sigma^2 is floored at
/// [`SIGMA_SQ_FLOOR`].
pub fn estimate_soft_closed_form(
    slots: &FrameSlotSequence,
    obs: &Observation,
    noise: &NoiseContext,
) -> Result<ChannelCoefEstimate, EstimationError> {
    finish(
        EstimatorKind::SoftClosedForm,
        slots,
        obs,
        soft_closed_form_weights(slots, noise),
    )
}

fn soft_param_weights(
    slots: &FrameSlotSequence,
    noise: &NoiseContext,
    avg_variance: f64,
) -> Result<Vec<Complex64>, EstimationError> {
    let mean_energy: f64 = slots.slots().iter().map(|s| s.mean().norm_sqr()).sum();
    let floor = noise.c_param() * avg_variance;
    slots
        .slots()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = s.mean();
            let others = mean_energy - m.norm_sqr();
            let denom = s.second_moment() + others + floor;
            if !(denom > 0.0) {
                return Err(EstimationError::NonPositiveDenominator(i));
            }
            Ok(m.conj() / denom)
        })
        .collect()
}

/// Soft-param approximation with the ratio terms set to one and
/// `sigma^2 ~ C * avg_variance`:
///
/// `h_hat = sum_i conj(E x_i) y_i / (E|x_i|^2 + sum_{j!=i} |E x_j|^2 + C avg_variance)`.
///
/// `avg_variance` is the band-wide average data-symbol variance
/// ([`band_avg_variance`]), supplied by the caller.
pub fn estimate_soft_param(
    slots: &FrameSlotSequence,
    obs: &Observation,
    noise: &NoiseContext,
    avg_variance: f64,
) -> Result<ChannelCoefEstimate, EstimationError> {
    finish(
        EstimatorKind::SoftParam,
        slots,
        obs,
        soft_param_weights(slots, noise, avg_variance),
    )
}

/// Mean variance over the data-symbol beliefs of the whole band; 0 when empty.
pub fn band_avg_variance<'a, I>(beliefs: I) -> f64
where
    I: IntoIterator<Item = &'a SymbolBelief>,
{
    let (sum, count) = beliefs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), b| (s + b.variance, n + 1));
    if count == 0 {
        return 0.0;
    }
    (sum / count as f64).max(0.0)
}
