//! Degradation of squeezing by residual phase jitter.
//!
//! With the relative phase `θ` between local oscillator and the squeezed
//! quadrature normally distributed with rms `θ̃`, the observed variances are
//! the Gaussian average of `R± cos²θ + R∓ sin²θ`. Three evaluations of that
//! average are provided:
//!
//! * [`degrade_exact`]: closed form via `E[cos²θ] = (1 + exp(-2θ̃²))/2`.
//! * [`degrade_approx`]: the small-angle surrogate `R± cos²θ̃ + R∓ sin²θ̃`,
//!   i.e. a fixed phase offset of `θ̃`.
//! * [`degrade_quadrature_oracle`]: the integral evaluated numerically with
//!   Gauss-Hermite nodes, independent of the closed form.

use thiserror::Error;

use crate::model::{ModelError, QuadratureVariances};
use crate::quadrature::GaussHermite;
use crate::Real;

/// Minimum node count accepted by the quadrature oracle.
pub const MIN_ORACLE_NODES: usize = 16;
/// Largest rule the oracle refines to before reporting non-convergence.
pub const MAX_ORACLE_NODES: usize = 128;
/// Relative agreement required between successive refinements.
pub const ORACLE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseNoiseError {
    #[error("quadrature oracle needs at least {MIN_ORACLE_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error(
        "quadrature did not converge: successive refinements up to {nodes} nodes differ by {rel_diff:e} relative"
    )]
    NonConvergence { nodes: usize, rel_diff: f64 },
}

/// Gaussian phase jitter with rms `theta_rms` in radians.
///
/// The small-angle surrogate and the fits assume `θ̃ <= π/4`; larger values
/// are accepted but [`PhaseNoiseModel::beyond_small_angle`] flags them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNoiseModel<T> {
    theta_rms: T,
}

impl<T: Real> PhaseNoiseModel<T> {
    pub fn new(theta_rms: T) -> Result<Self, ModelError> {
        if !(theta_rms >= T::zero()) || !theta_rms.is_finite() {
            return Err(ModelError::OutOfRange {
                field: "theta_rms",
                expected: ">= 0 rad",
                value: theta_rms.as_f64(),
            });
        }
        Ok(Self { theta_rms })
    }

    pub fn from_degrees(deg: T) -> Result<Self, ModelError> {
        Self::new(deg.to_radians())
    }

    pub fn none() -> Self {
        Self {
            theta_rms: T::zero(),
        }
    }

    pub fn theta_rms(&self) -> T {
        self.theta_rms
    }

    pub fn theta_rms_deg(&self) -> T {
        self.theta_rms.to_degrees()
    }

    pub fn beyond_small_angle(&self) -> bool {
        self.theta_rms > T::FRAC_PI_4()
    }
}

fn mix<T: Real>(r: &QuadratureVariances<T>, keep: T, swap: T) -> QuadratureVariances<T> {
    QuadratureVariances::new_unchecked(
        r.r_plus() * keep + r.r_minus() * swap,
        r.r_minus() * keep + r.r_plus() * swap,
    )
}

/// Closed-form Gaussian average.
pub fn degrade_exact<T: Real>(
    r: &QuadratureVariances<T>,
    model: &PhaseNoiseModel<T>,
) -> QuadratureVariances<T> {
    let half = T::lit(0.5);
    let a = -T::lit(2.0) * model.theta_rms * model.theta_rms;
    // sin² weight as -expm1 keeps precision for tiny jitter
    let swap = -half * a.exp_m1();
    let keep = half * (T::one() + a.exp());
    mix(r, keep, swap)
}

/// Small-angle surrogate: a fixed phase offset equal to the rms jitter.
pub fn degrade_approx<T: Real>(
    r: &QuadratureVariances<T>,
    model: &PhaseNoiseModel<T>,
) -> QuadratureVariances<T> {
    let (s, c) = model.theta_rms.sin_cos();
    mix(r, c * c, s * s)
}

/// Numerical Gauss-Hermite evaluation of the Gaussian average.
///
/// Starts from `nodes` points and doubles the rule until two successive
/// refinements agree to [`ORACLE_REL_TOL`] in both quadratures.
pub fn degrade_quadrature_oracle<T: Real>(
    r: &QuadratureVariances<T>,
    model: &PhaseNoiseModel<T>,
    nodes: usize,
) -> Result<QuadratureVariances<T>, PhaseNoiseError> {
    if nodes < MIN_ORACLE_NODES {
        return Err(PhaseNoiseError::TooFewNodes(nodes));
    }
    if model.theta_rms == T::zero() {
        // degenerate Gaussian: the average is the integrand at θ = 0
        return Ok(*r);
    }
    let rp = r.r_plus().as_f64();
    let rm = r.r_minus().as_f64();
    let sigma = model.theta_rms.as_f64();
    let eval = |n: usize| {
        let gh = GaussHermite::new(n);
        let plus = gh.normal_expectation(sigma, |t| {
            let (s, c) = t.sin_cos();
            rp * c * c + rm * s * s
        });
        let minus = gh.normal_expectation(sigma, |t| {
            let (s, c) = t.sin_cos();
            rm * c * c + rp * s * s
        });
        (plus, minus)
    };
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());

    let mut n = nodes.min(MAX_ORACLE_NODES / 2);
    let mut prev = eval(n);
    let mut last_diff;
    loop {
        let next_n = n * 2;
        let next = eval(next_n);
        last_diff = rel(prev.0, next.0).max(rel(prev.1, next.1));
        if last_diff <= ORACLE_REL_TOL {
            return Ok(QuadratureVariances::new_unchecked(
                T::lit(next.0),
                T::lit(next.1),
            ));
        }
        if next_n >= MAX_ORACLE_NODES {
            break;
        }
        n = next_n;
        prev = next;
    }
    Err(PhaseNoiseError::NonConvergence {
        nodes: n * 2,
        rel_diff: last_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::to_db;

    fn operating_point() -> QuadratureVariances<f64> {
        QuadratureVariances::new(21.24, 0.149).unwrap()
    }

    fn deg(d: f64) -> PhaseNoiseModel<f64> {
        PhaseNoiseModel::from_degrees(d).unwrap()
    }

    #[test]
    fn zero_jitter_is_identity() {
        let r = operating_point();
        let z = PhaseNoiseModel::none();
        assert_eq!(degrade_exact(&r, &z), r);
        assert_eq!(degrade_approx(&r, &z), r);
        assert_eq!(degrade_quadrature_oracle(&r, &z, 16).unwrap(), r);
    }

    #[test]
    fn exact_at_reference_jitter() {
        let d = degrade_exact(&operating_point(), &deg(4.3));
        assert!((d.minus_db() + 5.68).abs() <= 0.1, "{}", d.minus_db());
        assert!((d.plus_db() - 13.25).abs() <= 0.1, "{}", d.plus_db());
    }

    #[test]
    fn exact_full_scrambling() {
        let r = operating_point();
        let d = degrade_exact(&r, &PhaseNoiseModel::new(10.0).unwrap());
        let mean = 0.5 * (r.r_plus() + r.r_minus());
        assert!((d.r_plus() - mean).abs() < 1e-6);
        assert!((d.r_minus() - mean).abs() < 1e-6);
    }

    #[test]
    fn approx_examples() {
        let r = operating_point();
        let d = degrade_approx(&r, &deg(90.0));
        assert!((d.r_plus() - r.r_minus()).abs() < 1e-12);
        assert!((d.r_minus() - r.r_plus()).abs() < 1e-12);

        // hand evaluation: 0.149 cos²(4.3°) + 21.24 sin²(4.3°)
        // sin²(4.3°) = 0.0056195..., so R'- = 0.148163 + 0.119358 = 0.26752
        let d = degrade_approx(&r, &deg(4.3));
        assert!((d.r_minus() - 0.2676).abs() < 5e-4, "{}", d.r_minus());
        assert!((to_db(d.r_minus()).unwrap() + 5.72).abs() < 0.01);
        let e = degrade_exact(&r, &deg(4.3));
        assert!((e.minus_db() - d.minus_db()).abs() < 0.05);
    }

    #[test]
    fn oracle_matches_closed_form() {
        let r = operating_point();
        let m = PhaseNoiseModel::new(0.075).unwrap();
        let q = degrade_quadrature_oracle(&r, &m, 16).unwrap();
        let e = degrade_exact(&r, &m);
        assert!((q.r_plus() - e.r_plus()).abs() / e.r_plus() < 1e-9);
        assert!((q.r_minus() - e.r_minus()).abs() / e.r_minus() < 1e-9);
    }

    #[test]
    fn oracle_fixed_point_and_errors() {
        let one = QuadratureVariances::<f64>::vacuum();
        let q = degrade_quadrature_oracle(&one, &PhaseNoiseModel::new(0.4).unwrap(), 16).unwrap();
        assert!((q.r_plus() - 1.0).abs() < 1e-14 && (q.r_minus() - 1.0).abs() < 1e-14);
        assert_eq!(
            degrade_quadrature_oracle(&one, &PhaseNoiseModel::new(0.1).unwrap(), 8),
            Err(PhaseNoiseError::TooFewNodes(8))
        );
        // huge jitter: cos(2√2·σ·t) oscillates far beyond what 128 nodes resolve
        let r = operating_point();
        assert!(matches!(
            degrade_quadrature_oracle(&r, &PhaseNoiseModel::new(200.0).unwrap(), 16),
            Err(PhaseNoiseError::NonConvergence { .. })
        ));
    }

    #[test]
    fn exact_mixes_less_than_approx() {
        let r = operating_point();
        for k in 1..90 {
            let m = PhaseNoiseModel::new(k as f64 * std::f64::consts::FRAC_PI_2 / 90.0).unwrap();
            let e = degrade_exact(&r, &m);
            let a = degrade_approx(&r, &m);
            assert!(e.r_minus() < a.r_minus(), "k={k}");
            assert!(e.r_plus() > a.r_plus(), "k={k}");
        }
    }

    #[test]
    fn small_angle_flag() {
        assert!(!deg(45.0).beyond_small_angle());
        assert!(deg(46.0).beyond_small_angle());
        assert!(PhaseNoiseModel::new(-0.1_f64).is_err());
    }
}
