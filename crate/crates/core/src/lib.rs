//! Squeezed-vacuum generation in sub-threshold optical parametric oscillators.
//!
//! The crate covers the full chain from cavity and detector parameters to
//! shot-noise-normalized quadrature variances:
//!
//! * [`model`]: escape efficiency, detection efficiency, cavity decay rate,
//!   sideband detuning, pump parameter and the forward variances `R±`.
//! * [`phase_noise`]: degradation of `R±` by Gaussian phase jitter of the
//!   locked local oscillator, in closed form, small-angle form and by
//!   Gauss-Hermite quadrature.
//! * [`calibration`]: detector dark-noise correction and fits of the rms
//!   phase jitter (and optionally the pump parameter) to measured levels.
//! * [`oracle`]: an Euler-Maruyama simulation of the intracavity quadrature
//!   Langevin equations with Welch spectral estimation, used to validate the
//!   forward model without reusing its algebra.
//!
//! All math is generic over [`Real`] (`f32` or `f64`). The `f64` aliases at
//! the crate root are what the command-line tool uses.

// `!(a < b)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod phase_noise;
pub mod quadrature;
pub mod units;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub use calibration::{
    dark_noise_correct, dark_noise_uncorrect, fit_joint, fit_theta, FitError, FitOptions,
    FitResult, FitStatus, MeasuredLevels, PhaseForm,
};
pub use model::{
    cavity_decay_rate, detection_efficiency, detuning, escape_efficiency, forward_variances,
    pump_parameter, DetectionChain, ModelError, OpoCavity, PumpOperatingPoint, QuadratureVariances,
    SidebandPoint, SPEED_OF_LIGHT,
};
pub use oracle::{simulate_output_spectrum, LangevinConfig, OracleError, SpectrumEstimate};
pub use phase_noise::{degrade_approx, degrade_exact, degrade_quadrature_oracle, PhaseNoiseModel};
pub use units::{from_db, to_db};

/// Floating-point scalar used throughout the crate. Implemented for `f32`
/// and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    /// Lossy conversion to `f64`, used for diagnostics and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cavity = OpoCavity<f64>;
pub type Detection = DetectionChain<f64>;
pub type Pump = PumpOperatingPoint<f64>;
pub type Sideband = SidebandPoint<f64>;
pub type Variances = QuadratureVariances<f64>;
pub type PhaseNoise = PhaseNoiseModel<f64>;
pub type Measured = MeasuredLevels<f64>;
pub type Fit = FitResult<f64>;
pub type Langevin = LangevinConfig<f64>;
pub type Spectrum = SpectrumEstimate<f64>;

pub type Cavity32 = OpoCavity<f32>;
pub type Detection32 = DetectionChain<f32>;
pub type Variances32 = QuadratureVariances<f32>;
pub type PhaseNoise32 = PhaseNoiseModel<f32>;
