//! Multinomial-logit mode choice.
//!
//! Utilities are linear in the level-of-service attributes. Coefficient
//! defaults are the stated-preference estimates used for prediction; the
//! transit constant defaults to its calibrated value.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

/// Travel alternatives. The declaration order is the fixed order used for
/// inverse-CDF draws and report columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    /// Capacity-1 MoD tier.
    RideHailing,
    /// Capacity-4 MoD tier.
    Ridepooling,
    /// Capacity-10 MoD tier.
    MicroTransit,
    Transit,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::RideHailing, Mode::Ridepooling, Mode::MicroTransit, Mode::Transit];

    pub fn name(self) -> &'static str {
        match self {
            Mode::RideHailing => "ride_hailing",
            Mode::Ridepooling => "ridepooling",
            Mode::MicroTransit => "micro_transit",
            Mode::Transit => "transit",
        }
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChoiceError {
    #[error("no alternative-specific constant for mode {0}")]
    UnknownMode(Mode),
    #[error("choice set is empty")]
    EmptyChoiceSet,
    #[error("utility of mode {0} is not finite")]
    NonFiniteUtility(Mode),
    #[error("invalid attributes: {0}")]
    InvalidAttributes(&'static str),
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(&'static str),
}

/// Marginal utilities (per minute, per dollar) and mode constants.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ChoiceCoefficients {
    pub beta_ovtt: f64,
    pub beta_ivtt: f64,
    pub beta_cost: f64,
    pub beta_parking: f64,
    pub beta_electric: f64,
    pub beta_automation: f64,
    pub asc: BTreeMap<Mode, f64>,
}

impl Default for ChoiceCoefficients {
    fn default() -> Self {
        Self {
            beta_ovtt: -0.032,
            beta_ivtt: -0.023,
            beta_cost: -0.074,
            beta_parking: -0.057,
            beta_electric: -0.041,
            beta_automation: -0.182,
            asc: BTreeMap::from([
                (Mode::RideHailing, -0.821),
                (Mode::Ridepooling, -1.266),
                (Mode::MicroTransit, -1.266),
                (Mode::Transit, -3.0),
            ]),
        }
    }
}

impl ChoiceCoefficients {
    pub fn validate(&self) -> Result<(), ChoiceError> {
        if !(self.beta_ovtt < 0.0 && self.beta_ivtt < 0.0 && self.beta_cost < 0.0) {
            return Err(ChoiceError::InvalidCoefficients("time and cost coefficients must be negative"));
        }
        Ok(())
    }

    pub fn asc(&self, mode: Mode) -> Result<f64, ChoiceError> {
        self.asc.get(&mode).copied().ok_or(ChoiceError::UnknownMode(mode))
    }

    /// Seconds of out-of-vehicle time worth one currency unit.
    pub fn fare_to_seconds(&self) -> f64 {
        self.beta_cost / self.beta_ovtt * 60.0
    }
}

/// Level of service of one alternative for one traveler.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeAttributes {
    /// Walking and waiting, minutes.
    pub ovtt: f64,
    /// Minutes.
    pub ivtt: f64,
    pub cost: f64,
    pub parking_cost: f64,
    pub is_electric: bool,
    pub is_automated: bool,
}

/// `asc[mode] + Σ β·attribute + dummies + discount_penalty`.
pub fn utility(
    attrs: &ModeAttributes,
    coef: &ChoiceCoefficients,
    mode: Mode,
    discount_penalty: f64,
) -> Result<f64, ChoiceError> {
    if attrs.ovtt < 0.0 || attrs.ivtt < 0.0 || attrs.cost < 0.0 || attrs.parking_cost < 0.0 {
        return Err(ChoiceError::InvalidAttributes("attributes must be non-negative"));
    }
    let mut u = coef.asc(mode)?
        + coef.beta_ovtt * attrs.ovtt
        + coef.beta_ivtt * attrs.ivtt
        + coef.beta_cost * attrs.cost
        + coef.beta_parking * attrs.parking_cost;
    if attrs.is_electric {
        u += coef.beta_electric;
    }
    if attrs.is_automated {
        u += coef.beta_automation;
    }
    Ok(u + discount_penalty)
}

/// Shares (or probabilities) per mode.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeShareVector {
    pub share: BTreeMap<Mode, f64>,
}

impl ModeShareVector {
    pub fn get(&self, mode: Mode) -> f64 {
        self.share.get(&mode).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.share.values().sum()
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.share.keys().copied()
    }

    /// Shares from per-mode counts; all-zero when `counts` sums to zero.
    pub fn from_counts(counts: &BTreeMap<Mode, usize>) -> Self {
        let total: usize = counts.values().sum();
        let share = counts
            .iter()
            .map(|(&m, &c)| (m, if total == 0 { 0.0 } else { c as f64 / total as f64 }))
            .collect();
        Self { share }
    }
}

/// Logit probabilities, stabilized by subtracting the largest utility.
pub fn choice_probabilities(utilities: &BTreeMap<Mode, f64>) -> Result<ModeShareVector, ChoiceError> {
    if utilities.is_empty() {
        return Err(ChoiceError::EmptyChoiceSet);
    }
    if let Some((&m, _)) = utilities.iter().find(|(_, u)| !u.is_finite()) {
        return Err(ChoiceError::NonFiniteUtility(m));
    }
    let max = utilities.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<(Mode, f64)> = utilities.iter().map(|(&m, &u)| (m, libm::exp(u - max))).collect();
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    Ok(ModeShareVector { share: weights.into_iter().map(|(m, w)| (m, w / total)).collect() })
}

/// Inverse-CDF draw in fixed mode order.
pub fn draw_mode<R: Rng + ?Sized>(probs: &ModeShareVector, rng: &mut R) -> Mode {
    draw_mode_at(probs, rng.gen::<f64>())
}

/// Inverse-CDF lookup of a given uniform `u ∈ [0, 1)`.
pub fn draw_mode_at(probs: &ModeShareVector, u: f64) -> Mode {
    let mut acc = 0.0;
    let mut last = None;
    for (&m, &p) in &probs.share {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(m);
        if u < acc {
            return m;
        }
    }
    // Rounding left `acc` a hair below 1.
    last.or_else(|| probs.share.keys().next().copied()).expect("non-empty share vector")
}

/// Parameters of `f(γ) = min(0, a + b·e^{−cγ})`, the extra disutility of a
/// shared tier at discount γ.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscountFunctionParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DiscountFunctionParams {
    /// (ridepooling, micro-transit) functions of the low, medium and high
    /// disutility scenarios, numbered 1 to 3.
    pub fn scenario(n: u8) -> Option<(Self, Self)> {
        let p = |a, b, c| Self { a, b, c };
        match n {
            1 => Some((p(0.08, -3.0, 12.4), p(0.2, -5.2, 6.5))),
            2 => Some((p(0.5, -4.5, 5.5), p(0.3, -6.3, 5.0))),
            3 => Some((p(0.4, -7.9, 5.8), p(0.3, -10.3, 4.9))),
            _ => None,
        }
    }
}

pub fn discount_penalty(gamma: f64, p: &DiscountFunctionParams) -> f64 {
    (p.a + p.b * libm::exp(-p.c * gamma)).min(0.0)
}

/// Utility of an MoD mode after mixing in the penalized transit fallback
/// for the share of requests it failed to serve.
pub fn blended_utility(u_served: f64, u_transit: f64, service_rate: f64, c_m: f64) -> f64 {
    if service_rate >= 1.0 {
        return u_served;
    }
    service_rate * u_served + (1.0 - service_rate) * c_m * u_transit
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError<E> {
    #[error("ASC grid is empty")]
    EmptyGrid,
    #[error("target share range is invalid")]
    BadRange,
    #[error("harness failed at ASC {asc}: {source}")]
    Harness { asc: f64, source: E },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscCalibration {
    pub asc: f64,
    /// (asc, resulting transit share) for every grid point, in grid order.
    pub table: Vec<(f64, f64)>,
    /// False when no grid point reached the target range and the closest
    /// one was returned instead.
    pub within_target: bool,
}

/// Sweeps the transit constant over `grid` and returns the first value
/// whose transit share falls inside `[lo, hi]`.
pub fn calibrate_transit_asc<E, F>(
    target: (f64, f64),
    grid: &[f64],
    mut harness: F,
) -> Result<AscCalibration, CalibrationError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if grid.is_empty() {
        return Err(CalibrationError::EmptyGrid);
    }
    let (lo, hi) = target;
    if !(lo <= hi) {
        return Err(CalibrationError::BadRange);
    }
    let mut table = Vec::with_capacity(grid.len());
    for &asc in grid {
        let share = harness(asc).map_err(|source| CalibrationError::Harness { asc, source })?;
        table.push((asc, share));
    }
    if let Some(&(asc, _)) = table.iter().find(|(_, s)| (lo..=hi).contains(s)) {
        return Ok(AscCalibration { asc, table, within_target: true });
    }
    let gap = |s: f64| if s < lo { lo - s } else { s - hi };
    let mut best = table[0];
    for &row in &table[1..] {
        if gap(row.1) < gap(best.1) {
            best = row;
        }
    }
    Ok(AscCalibration { asc: best.0, table, within_target: false })
}
