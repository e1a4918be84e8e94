//! Short-time power laws, hang-time and limiting cases.
//!
//! At large `s` the Laplace transform of mass `j` behaves like
//! `-(Π_{i=2..j} α_i) / s^{2j+1}`, so near release
//!
//! ```text
//! z_j(t) ≈ -Q_j t^{2j} / (2j)!,   Q_j = (Π_{i<j} k_i) (Σ m) g / Π_{i<=j} m_i
//! ```
//!
//! Keeping the next power of `s` in `det A` gives the two-term series
//! `1 - tr_j τ² / ((2j+2)(2j+1))`, where `tr_j` is the trace of the leading
//! `j × j` block of `A(0)`.

use serde::Serialize;

use crate::spectral::leading_block_trace;
use crate::{ChainConfig, Error, Result};

/// Correction-to-leading ratio at which [`AsymptoticPrediction::validity_hint`]
/// is placed.
pub const VALIDITY_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    /// Mass index, 1-based.
    pub j: usize,
    /// `Q_j` in cm/s^(2j).
    pub prefactor: f64,
    /// `2j`.
    pub power: u32,
    /// Nondimensional coefficient of the `τ²` correction (`a_{2n-2}` for
    /// the bottom mass).
    pub correction_coeff: f64,
    /// Time in seconds at which the correction reaches 10% of the leading
    /// term.
    pub validity_hint: f64,
}

impl AsymptoticPrediction {
    /// Leading-order displacement `-Q t^{2j} / (2j)!`.
    pub fn leading(&self, t: f64) -> f64 {
        -self.prefactor * t.powi(self.power as i32) / factorial(self.power)
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn check_index(config: &ChainConfig, j: usize) -> Result<()> {
    if j == 0 || j > config.n() {
        return Err(Error::IndexOutOfRange {
            index: j,
            n: config.n(),
        });
    }
    Ok(())
}

/// `Q_j = (Π_{i=1..j-1} k_i)(Σ m) g / Π_{i=1..j} m_i` computed directly from
/// the dimensional parameters.
pub fn prefactor(config: &ChainConfig, j: usize) -> Result<f64> {
    check_index(config, j)?;
    let m = config.effective_masses()?;
    let total: f64 = m.iter().sum();
    let springs: f64 = config.spring_constants()[..j - 1].iter().product();
    let masses: f64 = m[..j].iter().product();
    Ok(springs * total * config.g() / masses)
}

pub fn short_time_prefactor(config: &ChainConfig, j: usize) -> Result<AsymptoticPrediction> {
    let q = prefactor(config, j)?;
    let sys = config.nondimensionalize()?;
    let correction_coeff = leading_block_trace(&sys, j)?;
    let power = 2 * j as u32;
    let denom = f64::from((power + 2) * (power + 1));
    let tau = (VALIDITY_RATIO * denom / correction_coeff).sqrt();
    Ok(AsymptoticPrediction {
        j,
        prefactor: q,
        power,
        correction_coeff,
        validity_hint: sys.to_dimensional_time(tau),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesOrder {
    Leading,
    TwoTerm,
}

/// A displacement law for one mass, built in nondimensional form and
/// evaluated in seconds and centimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortTimeLaw {
    pub prediction: AsymptoticPrediction,
    pub order: SeriesOrder,
    /// `Π_{i=2..j} α_i`
    pub alpha_product: f64,
    pub time_scale: f64,
    pub length_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    /// Displacement in cm.
    pub displacement: f64,
    /// `t` lies past the validity hint; beyond the bracket root the two-term
    /// series even predicts the mass rising.
    pub beyond_validity: bool,
}

impl ShortTimeLaw {
    /// `(1 - c τ² / ((2j+2)(2j+1)))`, or one at leading order.
    pub fn bracket(&self, t: f64) -> f64 {
        match self.order {
            SeriesOrder::Leading => 1.0,
            SeriesOrder::TwoTerm => {
                let tau = t / self.time_scale;
                let p = f64::from(self.prediction.power);
                1.0 - self.prediction.correction_coeff * tau * tau / ((p + 2.0) * (p + 1.0))
            }
        }
    }

    /// Nondimensional value `-(Π α) τ^{2j} / (2j)! · bracket`.
    pub fn eval_nondim(&self, tau: f64) -> f64 {
        let p = self.prediction.power;
        -self.alpha_product * tau.powi(p as i32) / factorial(p)
            * self.bracket(tau * self.time_scale)
    }

    pub fn evaluate(&self, t: f64) -> SeriesValue {
        SeriesValue {
            displacement: self.length_scale * self.eval_nondim(t / self.time_scale),
            beyond_validity: t > self.prediction.validity_hint,
        }
    }

    /// Time where the two-term bracket vanishes.
    pub fn bracket_root(&self) -> f64 {
        let p = f64::from(self.prediction.power);
        self.time_scale * ((p + 2.0) * (p + 1.0) / self.prediction.correction_coeff).sqrt()
    }
}

pub fn short_time_series(
    config: &ChainConfig,
    j: usize,
    order: SeriesOrder,
) -> Result<ShortTimeLaw> {
    let prediction = short_time_prefactor(config, j)?;
    let sys = config.nondimensionalize()?;
    Ok(ShortTimeLaw {
        prediction,
        order,
        alpha_product: sys.alpha_product(j),
        time_scale: sys.time_scale,
        length_scale: sys.length_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HangTimeReport {
    /// Detection threshold `L_p` in cm.
    pub detection_threshold: f64,
    /// Predicted hang-time in s.
    pub hang_time: f64,
    /// Bottom-mass prefactor `Q = Q_n`.
    pub prefactor: f64,
    pub n: usize,
}

/// `t_h = (L_p (2n)! / Q)^{1/(2n)}`.
pub fn hang_time(config: &ChainConfig, detection_threshold: f64) -> Result<HangTimeReport> {
    if !(detection_threshold.is_finite() && detection_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "detection threshold L_p = {detection_threshold} must be > 0"
        )));
    }
    let n = config.n();
    let q = prefactor(config, n)?;
    let power = 2 * n as u32;
    let hang_time = (detection_threshold * factorial(power) / q).powf(1.0 / f64::from(power));
    Ok(HangTimeReport {
        detection_threshold,
        hang_time,
        prefactor: q,
        n,
    })
}

/// Long-time fall of the bottom mass, `-g t² / 2`.
pub fn long_time_asymptote(config: &ChainConfig, t: f64) -> f64 {
    -0.5 * config.g() * t * t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoulderSweep {
    /// `(m1, Q(m1))` pairs.
    pub samples: Vec<(f64, f64)>,
    /// `Q` as `m1 → ∞`.
    pub limit: f64,
}

/// Closed form for `m_j = m` (j ≥ 2) and equal springs `k`:
/// `Q(m1) = (1 + (n-1) m / m1) k^{n-1} g / m^{n-1}`.
pub fn boulder_limit_equal(n: usize, m: f64, k: f64, g: f64, top_masses: &[f64]) -> BoulderSweep {
    let limit = (k / m).powi(n as i32 - 1) * g;
    let samples = top_masses
        .iter()
        .map(|&m1| (m1, (1.0 + (n as f64 - 1.0) * m / m1) * limit))
        .collect();
    BoulderSweep { samples, limit }
}

/// Bottom-mass prefactor of `config` with the effective top mass replaced by
/// each grid value.
pub fn boulder_limit(config: &ChainConfig, top_masses: &[f64]) -> Result<BoulderSweep> {
    let n = config.n();
    let samples = top_masses
        .iter()
        .map(|&m1| Ok((m1, prefactor(&config.with_top_mass(m1)?, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let m = config.effective_masses()?;
    let springs: f64 = config.spring_constants().iter().product();
    let lower: f64 = m[1..].iter().product();
    Ok(BoulderSweep {
        samples,
        limit: springs * config.g() / lower,
    })
}

/// What remains once a vanishing top mass is dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedChain {
    Chain(ChainConfig),
    /// Only one mass is left; it falls freely.
    FreeFall {
        mass: f64,
    },
}

/// Deletes mass 1 and spring 1. The lower masses keep their own lumping, so
/// the reduced chain's effective masses are the original `[m2, .., mn]`.
pub fn vanishing_mass_reduction(config: &ChainConfig) -> Result<ReducedChain> {
    if config.n() == 2 {
        return Ok(ReducedChain::FreeFall {
            mass: config.effective_masses()?[1],
        });
    }
    let reduced = ChainConfig::new(
        config.bare_masses()[1..].to_vec(),
        config.spring_constants()[1..].to_vec(),
        config.spring_masses()[1..].to_vec(),
        config.lumping_policy(),
        config.g(),
    )?;
    Ok(ReducedChain::Chain(match config.natural_lengths() {
        Some(lengths) => reduced.with_natural_lengths(lengths[1..].to_vec())?,
        None => reduced,
    }))
}
