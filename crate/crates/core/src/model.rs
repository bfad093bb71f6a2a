//! Physical parameters of the OPO and detector, and the forward model for
//! the shot-noise-normalized output variances.
//!
//! Conventions: all variances are linear, normalized so that vacuum is 1.
//! The `+` quadrature is the anti-squeezed (amplified) one and carries
//! `(1 - x)²` in its Lorentzian denominator; `-` is the squeezed quadrature.

use thiserror::Error;

use crate::units::to_db;
use crate::Real;

/// Exact SI speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Closest approach to threshold accepted for the pump parameter.
pub const THRESHOLD_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} must be {expected}, got {value}")]
    OutOfRange {
        field: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("output-coupler transmission plus loss must be < 1, got T + L = {0}")]
    LossBudget(f64),
    #[error(
        "classical gain G = {0} is below 1; supply the amplification gain measured at the amplified phase, not a deamplification reading"
    )]
    Deamplification(f64),
    #[error("pump power {power} W is at or above the threshold {threshold} W; the model is valid only below threshold")]
    AboveThreshold { power: f64, threshold: f64 },
    #[error("pump parameter x = {0} is at or above threshold (x must be <= 1 - 1e-9)")]
    PumpAtThreshold(f64),
    #[error("linear power must be positive and finite to convert to dB, got {0}")]
    NonPositiveLinear(f64),
}

fn check<T: Real>(
    ok: bool,
    field: &'static str,
    expected: &'static str,
    value: T,
) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            field,
            expected,
            value: value.as_f64(),
        })
    }
}

/// Largest pump parameter the model accepts for scalar type `T`.
pub fn max_pump_parameter<T: Real>() -> T {
    T::one() - T::lit(THRESHOLD_MARGIN).max(T::epsilon() * T::lit(4.0))
}

/// OPO cavity: output-coupler transmission `T`, intracavity round-trip loss
/// `L` and optical round-trip length in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoCavity<T> {
    transmission: T,
    loss: T,
    round_trip_length: T,
}

impl<T: Real> OpoCavity<T> {
    pub fn new(transmission: T, loss: T, round_trip_length: T) -> Result<Self, ModelError> {
        check(
            transmission > T::zero() && transmission < T::one(),
            "transmission",
            "in (0, 1)",
            transmission,
        )?;
        check(
            loss >= T::zero() && loss < T::one(),
            "loss",
            "in [0, 1)",
            loss,
        )?;
        if !(transmission + loss < T::one()) {
            return Err(ModelError::LossBudget((transmission + loss).as_f64()));
        }
        check(
            round_trip_length > T::zero() && round_trip_length.is_finite(),
            "round_trip_length",
            "> 0 m",
            round_trip_length,
        )?;
        Ok(Self {
            transmission,
            loss,
            round_trip_length,
        })
    }

    pub fn transmission(&self) -> T {
        self.transmission
    }

    pub fn loss(&self) -> T {
        self.loss
    }

    pub fn round_trip_length(&self) -> T {
        self.round_trip_length
    }

    /// Output-coupler decay rate `cT/l` in rad/s.
    pub fn output_rate(&self) -> T {
        T::lit(SPEED_OF_LIGHT) * self.transmission / self.round_trip_length
    }

    /// Intracavity loss rate `cL/l` in rad/s.
    pub fn loss_rate(&self) -> T {
        T::lit(SPEED_OF_LIGHT) * self.loss / self.round_trip_length
    }
}

/// Homodyne detection chain. `dark_clearance` is the detector circuit noise
/// power relative to shot noise (linear), absent for an ideal detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain<T> {
    zeta: T,
    eta: T,
    xi: T,
    dark_clearance: Option<T>,
}

impl<T: Real> DetectionChain<T> {
    /// `zeta`: propagation efficiency, `eta`: photodiode quantum efficiency,
    /// `xi`: homodyne visibility.
    pub fn new(zeta: T, eta: T, xi: T) -> Result<Self, ModelError> {
        for (name, v) in [("zeta", zeta), ("eta", eta), ("xi", xi)] {
            check(v > T::zero() && v <= T::one(), name, "in (0, 1]", v)?;
        }
        Ok(Self {
            zeta,
            eta,
            xi,
            dark_clearance: None,
        })
    }

    pub fn with_dark_clearance(mut self, clearance: T) -> Result<Self, ModelError> {
        check(
            clearance >= T::zero() && clearance < T::one(),
            "dark_clearance",
            "in [0, 1)",
            clearance,
        )?;
        self.dark_clearance = Some(clearance);
        Ok(self)
    }

    pub fn zeta(&self) -> T {
        self.zeta
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    pub fn dark_clearance(&self) -> Option<T> {
        self.dark_clearance
    }
}

/// How the pump strength is specified. Every variant normalizes to the pump
/// parameter `x ∈ [0, 1)` through [`pump_parameter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpOperatingPoint<T> {
    /// Pump parameter directly.
    Parameter(T),
    /// Classical parametric amplification gain `G = 1/(1 - x)²`.
    Gain(T),
    /// Pump power and oscillation threshold, both in watts. Maps through
    /// `x = sqrt(P / P_th)`, the standard below-threshold OPO relation (an
    /// assumption external to the measured gain).
    Power { power: T, threshold: T },
}

/// Angular sideband (measurement) frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandPoint<T> {
    omega: T,
}

impl<T: Real> SidebandPoint<T> {
    pub fn new(omega: T) -> Result<Self, ModelError> {
        check(
            omega >= T::zero() && omega.is_finite(),
            "omega",
            ">= 0 rad/s",
            omega,
        )?;
        Ok(Self { omega })
    }

    /// From a measurement frequency in Hz.
    pub fn from_hz(hz: T) -> Result<Self, ModelError> {
        Self::new(T::TAU() * hz)
    }

    pub fn omega(&self) -> T {
        self.omega
    }
}

/// Shot-noise-normalized linear variances of the anti-squeezed (`plus`) and
/// squeezed (`minus`) quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureVariances<T> {
    r_plus: T,
    r_minus: T,
}

impl<T: Real> QuadratureVariances<T> {
    pub fn new(r_plus: T, r_minus: T) -> Result<Self, ModelError> {
        check(
            r_plus > T::zero() && r_plus.is_finite(),
            "r_plus",
            "> 0",
            r_plus,
        )?;
        check(
            r_minus > T::zero() && r_minus.is_finite(),
            "r_minus",
            "> 0",
            r_minus,
        )?;
        Ok(Self { r_plus, r_minus })
    }

    pub(crate) fn new_unchecked(r_plus: T, r_minus: T) -> Self {
        Self { r_plus, r_minus }
    }

    /// Shot-noise level in both quadratures.
    pub fn vacuum() -> Self {
        Self::new_unchecked(T::one(), T::one())
    }

    pub fn r_plus(&self) -> T {
        self.r_plus
    }

    pub fn r_minus(&self) -> T {
        self.r_minus
    }

    pub fn plus_db(&self) -> T {
        to_db(self.r_plus).expect("validated positive")
    }

    pub fn minus_db(&self) -> T {
        to_db(self.r_minus).expect("validated positive")
    }

    pub fn product(&self) -> T {
        self.r_plus * self.r_minus
    }
}

/// `ρ = T / (T + L)`.
pub fn escape_efficiency<T: Real>(cavity: &OpoCavity<T>) -> T {
    cavity.transmission / (cavity.transmission + cavity.loss)
}

/// `α = ζ·η·ξ²`.
pub fn detection_efficiency<T: Real>(chain: &DetectionChain<T>) -> T {
    chain.zeta * chain.eta * chain.xi * chain.xi
}

/// `γ = c(T + L)/l` in rad/s.
pub fn cavity_decay_rate<T: Real>(cavity: &OpoCavity<T>) -> T {
    T::lit(SPEED_OF_LIGHT) * (cavity.transmission + cavity.loss) / cavity.round_trip_length
}

/// `Ω = ω / γ`.
pub fn detuning<T: Real>(point: &SidebandPoint<T>, cavity: &OpoCavity<T>) -> T {
    point.omega / cavity_decay_rate(cavity)
}

/// Normalizes any pump representation to the pump parameter `x`.
///
/// Gain inverts `G = 1/(1 - x)²` on the physical branch `x = 1 - 1/sqrt(G)`;
/// `G < 1` is rejected. Power uses `x = sqrt(P / P_th)` and requires
/// `P < P_th`.
pub fn pump_parameter<T: Real>(op: &PumpOperatingPoint<T>) -> Result<T, ModelError> {
    let x = match *op {
        PumpOperatingPoint::Parameter(x) => {
            check(
                x >= T::zero() && x.is_finite(),
                "pump parameter x",
                "in [0, 1)",
                x,
            )?;
            x
        }
        PumpOperatingPoint::Gain(g) => {
            if g.is_nan() || g < T::one() {
                return Err(ModelError::Deamplification(g.as_f64()));
            }
            check(g.is_finite(), "gain", "finite", g)?;
            T::one() - g.sqrt().recip()
        }
        PumpOperatingPoint::Power { power, threshold } => {
            check(
                threshold > T::zero() && threshold.is_finite(),
                "threshold power",
                "> 0 W",
                threshold,
            )?;
            check(
                power >= T::zero() && power.is_finite(),
                "pump power",
                ">= 0 W",
                power,
            )?;
            if power >= threshold {
                return Err(ModelError::AboveThreshold {
                    power: power.as_f64(),
                    threshold: threshold.as_f64(),
                });
            }
            (power / threshold).sqrt()
        }
    };
    if x > max_pump_parameter::<T>() {
        return Err(ModelError::PumpAtThreshold(x.as_f64()));
    }
    Ok(x)
}

/// Classical amplification gain `1/(1 - x)²` for a pump parameter.
pub fn gain_from_pump<T: Real>(x: T) -> T {
    let d = T::one() - x;
    (d * d).recip()
}

/// Threshold power implied by one measured `(P, G)` pair under
/// `x = sqrt(P / P_th)`.
pub fn threshold_from_anchor<T: Real>(power: T, gain: T) -> Result<T, ModelError> {
    let x = pump_parameter(&PumpOperatingPoint::Gain(gain))?;
    check(
        power > T::zero() && power.is_finite(),
        "anchor pump power",
        "> 0 W",
        power,
    )?;
    check(x > T::zero(), "anchor gain", "> 1", gain)?;
    Ok(power / (x * x))
}

/// Output variances of the OPO seen through the detection chain:
///
/// `R+ = 1 + αρ·4x / ((1 - x)² + 4Ω²)`,
/// `R- = 1 - αρ·4x / ((1 + x)² + 4Ω²)`.
pub fn forward_variances<T: Real>(
    alpha: T,
    rho: T,
    x: T,
    detuning: T,
) -> Result<QuadratureVariances<T>, ModelError> {
    check(
        alpha >= T::zero() && alpha <= T::one(),
        "alpha",
        "in [0, 1]",
        alpha,
    )?;
    check(rho >= T::zero() && rho <= T::one(), "rho", "in [0, 1]", rho)?;
    check(
        x >= T::zero() && x.is_finite(),
        "pump parameter x",
        "in [0, 1)",
        x,
    )?;
    if x > max_pump_parameter::<T>() {
        return Err(ModelError::PumpAtThreshold(x.as_f64()));
    }
    check(
        detuning >= T::zero() && detuning.is_finite(),
        "detuning",
        ">= 0",
        detuning,
    )?;
    let four = T::lit(4.0);
    let w2 = four * detuning * detuning;
    let below = T::one() - x;
    let above = T::one() + x;
    let lorentz_plus = below * below + w2;
    let lorentz_minus = above * above + w2;
    // R- written as a ratio of non-negative terms,
    // (1+x)² - 4αρx = (1-x)² + 4x(1-αρ), so it stays accurate near threshold
    let minus_num = below * below + four * x * (T::one() - alpha * rho) + w2;
    Ok(QuadratureVariances::new_unchecked(
        T::one() + alpha * rho * four * x / lorentz_plus,
        minus_num / lorentz_minus,
    ))
}
