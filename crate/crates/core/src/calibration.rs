//! Inverse problems: removing detector circuit noise from measured levels,
//! and fitting phase jitter (and optionally the pump parameter) to measured
//! squeezing and anti-squeezing.
//!
//! Residuals are squared differences in dB. Fits are deterministic: a fixed
//! seeding grid scanned in `(x, θ̃)` order with strict improvement, followed
//! by a bounded local search.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{forward_variances, max_pump_parameter, ModelError, QuadratureVariances};
use crate::optimize::{golden_section, nelder_mead, NelderMeadOptions};
use crate::phase_noise::{degrade_approx, degrade_exact, PhaseNoiseModel};
use crate::units::{from_db, to_db};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError<T: Real> {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(
        "measured level {level_db} dB is at or below the detector dark-noise floor (clearance {clearance} linear)"
    )]
    BelowDarkNoise { level_db: f64, clearance: f64 },
    #[error("dark-noise clearance must be in [0, 1), got {0}")]
    Clearance(f64),
    #[error("{0}")]
    InvalidMeasurement(&'static str),
    #[error("no phase jitter in [0, π/4] explains the measured squeezing; best boundary value θ̃ = {:.4}°", .best.theta_rms.as_f64().to_degrees())]
    Infeasible { best: FitResult<T> },
    #[error("fit did not converge within {} iterations; best residual {:e} dB²", .best.iterations, .best.residual.as_f64())]
    NonConvergence { best: FitResult<T> },
}

/// Which evaluation of the phase-jitter average the fits use as their model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseForm {
    #[default]
    Exact,
    /// Small-angle surrogate, reproducing the fixed-offset arithmetic.
    Approx,
}

impl PhaseForm {
    pub fn apply<T: Real>(
        self,
        r: &QuadratureVariances<T>,
        m: &PhaseNoiseModel<T>,
    ) -> QuadratureVariances<T> {
        match self {
            PhaseForm::Exact => degrade_exact(r, m),
            PhaseForm::Approx => degrade_approx(r, m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    Infeasible,
    NotConverged,
}

impl FitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::Infeasible => "infeasible",
            FitStatus::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    /// Fitted rms phase jitter, radians.
    pub theta_rms: T,
    /// Fitted pump parameter (joint fit only).
    pub x: Option<T>,
    /// Sum of squared dB residuals at the reported point.
    pub residual: T,
    pub iterations: usize,
    pub status: FitStatus,
}

impl<T: Real> FitResult<T> {
    pub fn theta_rms_deg(&self) -> T {
        self.theta_rms.to_degrees()
    }

    pub fn gain(&self) -> Option<T> {
        self.x.map(crate::model::gain_from_pump)
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions<T> {
    pub form: PhaseForm,
    /// Seeding grid step for the pump parameter (joint fit).
    pub x_step: T,
    /// Seeding grid step for the phase jitter, radians.
    pub theta_step: T,
    pub max_iter: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            form: PhaseForm::Exact,
            x_step: T::lit(0.01),
            theta_step: T::lit(0.5_f64.to_radians()),
            max_iter: 5000,
        }
    }
}

/// Measured noise levels relative to shot noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredLevels<T> {
    squeezing_db: T,
    anti_squeezing_db: Option<T>,
    pub pump_power: Option<T>,
    pub uncertainty_db: Option<T>,
}

impl<T: Real> MeasuredLevels<T> {
    pub fn new(squeezing_db: T, anti_squeezing_db: T) -> Result<Self, FitError<T>> {
        let mut m = Self::squeezing_only(squeezing_db)?;
        if !(anti_squeezing_db > T::zero()) || !anti_squeezing_db.is_finite() {
            return Err(FitError::InvalidMeasurement(
                "anti-squeezing level must be above shot noise (> 0 dB)",
            ));
        }
        m.anti_squeezing_db = Some(anti_squeezing_db);
        Ok(m)
    }

    pub fn squeezing_only(squeezing_db: T) -> Result<Self, FitError<T>> {
        if !(squeezing_db < T::zero()) || !squeezing_db.is_finite() {
            return Err(FitError::InvalidMeasurement(
                "squeezing level must be below shot noise (< 0 dB)",
            ));
        }
        Ok(Self {
            squeezing_db,
            anti_squeezing_db: None,
            pump_power: None,
            uncertainty_db: None,
        })
    }

    pub fn squeezing_db(&self) -> T {
        self.squeezing_db
    }

    pub fn anti_squeezing_db(&self) -> Option<T> {
        self.anti_squeezing_db
    }

    /// Both levels with detector dark noise of the given clearance removed.
    pub fn dark_corrected(&self, clearance: T) -> Result<Self, FitError<T>> {
        let sq = dark_noise_correct(self.squeezing_db, clearance)?;
        let mut out = Self::squeezing_only(sq)?;
        if let Some(a) = self.anti_squeezing_db {
            out = Self::new(sq, dark_noise_correct(a, clearance)?)?;
        }
        out.pump_power = self.pump_power;
        out.uncertainty_db = self.uncertainty_db;
        Ok(out)
    }
}

fn check_clearance<T: Real>(clearance: T) -> Result<(), FitError<T>> {
    if clearance >= T::zero() && clearance < T::one() {
        Ok(())
    } else {
        Err(FitError::Clearance(clearance.as_f64()))
    }
}

/// Removes detector circuit noise of linear power `clearance` (relative to
/// shot noise) from a measured level. The same dark power sits under both
/// the measurement and the shot-noise reference, so the corrected level is
/// `(P - d) / (1 - d)`.
pub fn dark_noise_correct<T: Real>(level_db: T, clearance: T) -> Result<T, FitError<T>> {
    check_clearance(clearance)?;
    let measured = from_db(level_db);
    if !(measured > clearance) {
        return Err(FitError::BelowDarkNoise {
            level_db: level_db.as_f64(),
            clearance: clearance.as_f64(),
        });
    }
    Ok(to_db((measured - clearance) / (T::one() - clearance))?)
}

/// Adds detector dark noise back onto a corrected level; inverse of
/// [`dark_noise_correct`].
pub fn dark_noise_uncorrect<T: Real>(level_db: T, clearance: T) -> Result<T, FitError<T>> {
    check_clearance(clearance)?;
    let corrected = from_db(level_db);
    Ok(to_db(corrected * (T::one() - clearance) + clearance)?)
}

fn squared<T: Real>(v: T) -> T {
    v * v
}

/// Fits the rms phase jitter to the measured squeezing level, given the
/// jitter-free prediction.
///
/// Only the squeezed quadrature enters the residual. The jitter is
/// bracketed on a coarse grid over `[0, π/4]` and refined by golden-section
/// search. A measurement below the prediction's floor (or above what `π/4`
/// of jitter produces) is reported as [`FitError::Infeasible`] carrying the
/// best boundary fit.
pub fn fit_theta<T: Real>(
    measured: &MeasuredLevels<T>,
    predicted: &QuadratureVariances<T>,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>, FitError<T>> {
    let target = measured.squeezing_db;
    let upper = T::FRAC_PI_4();
    let model_db = |theta: T| {
        // θ is within [0, π/4], so the model is always constructible
        let m = PhaseNoiseModel::new(theta).expect("non-negative jitter");
        opts.form.apply(predicted, &m).minus_db()
    };
    let residual = |theta: T| squared(model_db(theta) - target);

    let boundary = |theta: T| FitResult {
        theta_rms: theta,
        x: None,
        residual: residual(theta),
        iterations: 0,
        status: FitStatus::Infeasible,
    };
    if target < predicted.minus_db() {
        return Err(FitError::Infeasible {
            best: boundary(T::zero()),
        });
    }
    if target > model_db(upper) {
        return Err(FitError::Infeasible {
            best: boundary(upper),
        });
    }

    let steps = (upper / opts.theta_step)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(2);
    let grid_at = |i: usize| upper * T::from_usize(i).unwrap() / T::from_usize(steps).unwrap();
    let mut best_i = 0;
    let mut best_r = residual(T::zero());
    for i in 1..=steps {
        let r = residual(grid_at(i));
        if r < best_r {
            best_i = i;
            best_r = r;
        }
    }
    let lo = grid_at(best_i.saturating_sub(1));
    let hi = grid_at((best_i + 1).min(steps));
    let min = golden_section(
        residual,
        lo,
        hi,
        T::epsilon().sqrt() * T::lit(1e-3),
        opts.max_iter,
    );
    let (theta, value) = if best_r <= min.value {
        (grid_at(best_i), best_r)
    } else {
        (min.point, min.value)
    };
    let result = FitResult {
        theta_rms: theta,
        x: None,
        residual: value,
        iterations: min.iterations,
        status: if min.converged {
            FitStatus::Converged
        } else {
            FitStatus::NotConverged
        },
    };
    if min.converged {
        Ok(result)
    } else {
        Err(FitError::NonConvergence { best: result })
    }
}

/// Seeding grid used by [`fit_joint`], in evaluation order: pump parameter
/// major, jitter minor.
pub fn joint_seed_grid<T: Real>(opts: &FitOptions<T>) -> Vec<(T, T)> {
    let x_max = max_pump_parameter::<T>();
    let theta_max = T::FRAC_PI_4();
    let nx = (x_max / opts.x_step).floor().to_usize().unwrap_or(0);
    let nt = (theta_max / opts.theta_step)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let mut grid = Vec::with_capacity((nx + 1) * (nt + 1));
    for i in 0..=nx {
        let x = (opts.x_step * T::from_usize(i).unwrap()).min(x_max);
        for j in 0..=nt {
            let theta = theta_max * T::from_usize(j).unwrap() / T::from_usize(nt).unwrap();
            grid.push((x, theta));
        }
    }
    grid
}

/// Joint residual of both quadratures at `(x, θ̃)`.
#[allow(clippy::too_many_arguments)]
pub fn joint_residual<T: Real>(
    measured_sq_db: T,
    measured_asq_db: T,
    alpha: T,
    rho: T,
    detuning: T,
    x: T,
    theta: T,
    form: PhaseForm,
) -> Result<T, ModelError> {
    let r = forward_variances(alpha, rho, x, detuning)?;
    let d = form.apply(&r, &PhaseNoiseModel::new(theta)?);
    Ok(squared(d.minus_db() - measured_sq_db) + squared(d.plus_db() - measured_asq_db))
}

/// Fits pump parameter and phase jitter together to both measured levels.
///
/// The best point of [`joint_seed_grid`] (ties broken by lowest `x`, then
/// lowest `θ̃`) seeds a box-constrained Nelder-Mead descent over
/// `[0, 1) × [0, π/4]`.
pub fn fit_joint<T: Real>(
    measured: &MeasuredLevels<T>,
    alpha: T,
    rho: T,
    detuning: T,
    opts: &FitOptions<T>,
) -> Result<FitResult<T>, FitError<T>> {
    let sq = measured.squeezing_db;
    let asq = measured
        .anti_squeezing_db
        .ok_or(FitError::InvalidMeasurement(
            "joint fit needs both squeezing and anti-squeezing levels",
        ))?;
    // validates alpha, rho and detuning once up front
    forward_variances(alpha, rho, T::zero(), detuning)?;
    let x_max = max_pump_parameter::<T>();
    let residual = |x: T, theta: T| {
        joint_residual(sq, asq, alpha, rho, detuning, x, theta, opts.form).unwrap_or(T::infinity())
    };

    let grid = joint_seed_grid(opts);
    let values: Vec<T> = grid.par_iter().map(|&(x, t)| residual(x, t)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let (x0, t0) = grid[best];

    let nm = NelderMeadOptions {
        step: vec![opts.x_step * T::lit(0.5), opts.theta_step * T::lit(0.5)],
        lower: vec![T::zero(), T::zero()],
        upper: vec![x_max, T::FRAC_PI_4()],
        f_tol: T::epsilon() * T::epsilon() * T::lit(1e8),
        x_tol: T::epsilon().sqrt() * T::lit(1e-4),
        max_iter: opts.max_iter,
        restarts: 3,
    };
    let min = nelder_mead(|p: &[T]| residual(p[0], p[1]), &[x0, t0], &nm);
    let (x, theta, value) = if min.value <= values[best] {
        (min.point[0], min.point[1], min.value)
    } else {
        (x0, t0, values[best])
    };
    let result = FitResult {
        theta_rms: theta,
        x: Some(x),
        residual: value,
        iterations: min.iterations,
        status: if min.converged {
            FitStatus::Converged
        } else {
            FitStatus::NotConverged
        },
    };
    if min.converged {
        Ok(result)
    } else {
        Err(FitError::NonConvergence { best: result })
    }
}
