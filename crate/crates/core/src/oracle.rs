//! Stochastic oracle for the output squeezing spectrum.
//!
//! Each quadrature of the intracavity field obeys the linearized Langevin
//! equation
//!
//! ```text
//! dX± = -(γ/2)(1 ∓ x) X± dt + sqrt(γ_out) dW_out + sqrt(γ_loss) dW_loss
//! ```
//!
//! with independent unit-intensity Wiener increments for the output-coupler
//! port and the loss port. The field leaving the output coupler is
//! `X_out = sqrt(γ_out) X - X_in`, where `X_in` is the vacuum entering that
//! same port. The equation is stepped with explicit Euler-Maruyama; the
//! output over a step uses the trapezoidal average of the intracavity field.
//!
//! Spectra are estimated with Welch's method on independent segments: each
//! segment is its own simulation (after a burn-in of ten relaxation times),
//! Hann windowed and normalized so that unit white noise has level 1. With
//! that normalization the vacuum (`x = 0`) spectrum is exactly shot noise.
//! Nothing here evaluates the closed-form variances; [`compare_with_model`]
//! is the only place the two meet.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use thiserror::Error;

use crate::model::{forward_variances, ModelError, OpoCavity};
use crate::units::to_db;
use crate::Real;

/// Default Euler step as a fraction of `1/γ_total`.
pub const DEFAULT_DT_GAMMA: f64 = 0.02;
/// Default periodogram bin spacing as a fraction of `γ_total`.
pub const DEFAULT_BIN_GAMMA: f64 = 0.02;
/// Euler stability bound on `dt·γ_total(1 + x)/2`.
pub const STABILITY_LIMIT: f64 = 0.1;
pub const MIN_SEGMENTS: usize = 8;
/// Burn-in per segment, in relaxation times of the slowest quadrature.
const BURN_IN_RELAXATIONS: f64 = 10.0;

const STREAM_OUTPUT_PORT: u64 = 0;
const STREAM_LOSS_PORT: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("Euler step too large: dt·γ(1+x)/2 = {0} must be < {STABILITY_LIMIT}")]
    Unstable(f64),
    #[error("need at least {MIN_SEGMENTS} segments for a standard error, got {0}")]
    TooFewSegments(usize),
    #[error("duration {duration} s is shorter than 100/γ = {min} s")]
    TooShort { duration: f64, min: f64 },
    #[error("segments of {0} samples are too short for a periodogram")]
    SegmentTooShort(usize),
    #[error("{field} must be {expected}, got {value}")]
    Invalid {
        field: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("requested ω = {omega} rad/s lies above the Nyquist frequency {nyquist} rad/s")]
    BeyondNyquist { omega: f64, nyquist: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Simulation settings. Rates in rad/s, times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinConfig<T> {
    /// Output-coupler rate `cT/l`.
    pub gamma_out: T,
    /// Intracavity loss rate `cL/l`.
    pub gamma_loss: T,
    /// Pump parameter.
    pub x: T,
    pub dt: T,
    /// Total simulated time over all segments, burn-in excluded.
    pub duration: T,
    pub seed: u64,
    pub segments: usize,
}

impl<T: Real> LangevinConfig<T> {
    /// Rates taken from a cavity, with the default step and bin spacing.
    pub fn for_cavity(cavity: &OpoCavity<T>, x: T, seed: u64, segments: usize) -> Self {
        Self::from_rates(cavity.output_rate(), cavity.loss_rate(), x, seed, segments)
    }

    pub fn from_rates(gamma_out: T, gamma_loss: T, x: T, seed: u64, segments: usize) -> Self {
        let gamma = gamma_out + gamma_loss;
        let segment_time = T::TAU() / (T::lit(DEFAULT_BIN_GAMMA) * gamma);
        Self {
            gamma_out,
            gamma_loss,
            x,
            dt: T::lit(DEFAULT_DT_GAMMA) / gamma,
            duration: segment_time * T::from_usize(segments).unwrap(),
            seed,
            segments,
        }
    }

    pub fn gamma_total(&self) -> T {
        self.gamma_out + self.gamma_loss
    }

    /// Escape efficiency implied by the rates.
    pub fn escape_efficiency(&self) -> T {
        self.gamma_out / self.gamma_total()
    }

    pub fn samples_per_segment(&self) -> usize {
        let seg = self.duration / T::from_usize(self.segments.max(1)).unwrap();
        (seg / self.dt).round().to_usize().unwrap_or(0)
    }

    /// Periodogram bin spacing, rad/s.
    pub fn bin_spacing(&self) -> T {
        T::TAU() / (T::from_usize(self.samples_per_segment()).unwrap() * self.dt)
    }

    pub fn nyquist(&self) -> T {
        T::PI() / self.dt
    }

    fn burn_in_steps(&self) -> usize {
        let slowest = self.gamma_total() * (T::one() - self.x) / T::lit(2.0);
        (T::lit(BURN_IN_RELAXATIONS) / (slowest * self.dt))
            .ceil()
            .to_usize()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let invalid = |field, expected, value: T| OracleError::Invalid {
            field,
            expected,
            value: value.as_f64(),
        };
        if !(self.gamma_out > T::zero()) || !self.gamma_out.is_finite() {
            return Err(invalid("gamma_out", "> 0", self.gamma_out));
        }
        if !(self.gamma_loss >= T::zero()) || !self.gamma_loss.is_finite() {
            return Err(invalid("gamma_loss", ">= 0", self.gamma_loss));
        }
        if !(self.x >= T::zero()) || !(self.x < T::one()) {
            return Err(invalid("x", "in [0, 1)", self.x));
        }
        if !(self.dt > T::zero()) {
            return Err(invalid("dt", "> 0", self.dt));
        }
        let margin = self.dt * self.gamma_total() * (T::one() + self.x) / T::lit(2.0);
        if !(margin < T::lit(STABILITY_LIMIT)) {
            return Err(OracleError::Unstable(margin.as_f64()));
        }
        let min = T::lit(100.0) / self.gamma_total();
        if !(self.duration >= min) {
            return Err(OracleError::TooShort {
                duration: self.duration.as_f64(),
                min: min.as_f64(),
            });
        }
        if self.segments < MIN_SEGMENTS {
            return Err(OracleError::TooFewSegments(self.segments));
        }
        let n = self.samples_per_segment();
        if n < 16 {
            return Err(OracleError::SegmentTooShort(n));
        }
        Ok(())
    }
}

/// Estimated normalized spectrum of both quadratures at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate<T> {
    pub omega: T,
    pub r_plus: T,
    pub r_minus: T,
    pub stderr_plus: T,
    pub stderr_minus: T,
}

/// Result of one oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpectrum<T> {
    pub points: Vec<SpectrumEstimate<T>>,
    /// Periodogram bin spacing, rad/s.
    pub bin_spacing: T,
    pub samples_per_segment: usize,
    pub segments: usize,
    pub seed: u64,
}

fn segment_rng(seed: u64, segment: usize, stream: u64) -> ChaCha8Rng {
    let mixed = seed ^ (segment as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(stream);
    rng
}

fn hann<T: Real>(n: usize) -> Vec<T> {
    let nf = T::from_usize(n).unwrap();
    (0..n)
        .map(|i| {
            let s = (T::PI() * T::from_usize(i).unwrap() / nf).sin();
            s * s
        })
        .collect()
}

struct Welch<T: FftNum> {
    fft: Arc<dyn Fft<T>>,
    window: Vec<T>,
    window_power: T,
}

impl<T: Real + FftNum> Welch<T> {
    fn new(n: usize) -> Self {
        let window = hann::<T>(n);
        let window_power = window.iter().map(|w| *w * *w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self {
            fft,
            window,
            window_power,
        }
    }

    fn periodogram(&self, samples: &[T]) -> Vec<T> {
        let mut buf: Vec<Complex<T>> = samples
            .iter()
            .zip(&self.window)
            .map(|(s, w)| Complex::new(*s * *w, T::zero()))
            .collect();
        self.fft.process(&mut buf);
        buf[..samples.len() / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr() / self.window_power)
            .collect()
    }
}

fn interpolate<T: Real>(spectrum: &[T], position: T) -> T {
    let lo = position
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(spectrum.len() - 1);
    let hi = (lo + 1).min(spectrum.len() - 1);
    let frac = position - T::from_usize(lo).unwrap();
    spectrum[lo] + (spectrum[hi] - spectrum[lo]) * frac
}

/// Simulates one segment and returns the normalized output samples of the
/// `+` and `-` quadratures.
fn simulate_segment<T>(cfg: &LangevinConfig<T>, segment: usize) -> (Vec<T>, Vec<T>)
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    let n = cfg.samples_per_segment();
    let mut out_rng = segment_rng(cfg.seed, segment, STREAM_OUTPUT_PORT);
    let mut loss_rng = segment_rng(cfg.seed, segment, STREAM_LOSS_PORT);
    let half = T::lit(0.5);
    let sqrt_dt = cfg.dt.sqrt();
    let amp_out = cfg.gamma_out.sqrt();
    let amp_loss = cfg.gamma_loss.sqrt();
    let decay_plus = cfg.gamma_total() * half * (T::one() - cfg.x) * cfg.dt;
    let decay_minus = cfg.gamma_total() * half * (T::one() + cfg.x) * cfg.dt;
    let lossy = cfg.gamma_loss > T::zero();

    let mut state = [T::zero(), T::zero()];
    let decay = [decay_plus, decay_minus];
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    let burn_in = cfg.burn_in_steps();
    for step in 0..burn_in + n {
        for q in 0..2 {
            let dw_out: T = out_rng.sample::<T, _>(StandardNormal) * sqrt_dt;
            let dw_loss: T = if lossy {
                loss_rng.sample::<T, _>(StandardNormal) * sqrt_dt
            } else {
                T::zero()
            };
            let prev = state[q];
            let next = prev - decay[q] * prev + amp_out * dw_out + amp_loss * dw_loss;
            state[q] = next;
            if step >= burn_in {
                let y = amp_out * half * (prev + next) * cfg.dt - dw_out;
                let s = y / sqrt_dt;
                if q == 0 {
                    plus.push(s);
                } else {
                    minus.push(s);
                }
            }
        }
    }
    (plus, minus)
}

/// Runs the oracle and estimates the normalized output spectrum of both
/// quadratures at each requested angular frequency.
///
/// Segments run in parallel but each draws from its own deterministic
/// random streams, and the averages are accumulated in segment order, so the
/// result is bit-identical for a given configuration.
pub fn simulate_output_spectrum<T>(
    cfg: &LangevinConfig<T>,
    omegas: &[T],
) -> Result<OracleSpectrum<T>, OracleError>
where
    T: Real + FftNum,
    StandardNormal: Distribution<T>,
{
    cfg.validate()?;
    let nyquist = cfg.nyquist();
    for &w in omegas {
        if !(w >= T::zero()) || w > nyquist {
            return Err(OracleError::BeyondNyquist {
                omega: w.as_f64(),
                nyquist: nyquist.as_f64(),
            });
        }
    }
    let n = cfg.samples_per_segment();
    let bin = cfg.bin_spacing();
    let positions: Vec<T> = omegas.iter().map(|w| *w / bin).collect();
    let welch = Welch::<T>::new(n);

    let per_segment: Vec<Vec<(T, T)>> = (0..cfg.segments)
        .into_par_iter()
        .map(|seg| {
            let (plus, minus) = simulate_segment(cfg, seg);
            let sp = welch.periodogram(&plus);
            let sm = welch.periodogram(&minus);
            positions
                .iter()
                .map(|&p| (interpolate(&sp, p), interpolate(&sm, p)))
                .collect()
        })
        .collect();

    let count = T::from_usize(cfg.segments).unwrap();
    let points = omegas
        .iter()
        .enumerate()
        .map(|(k, &omega)| {
            let (mut sum_p, mut sum_m) = (T::zero(), T::zero());
            for seg in &per_segment {
                sum_p = sum_p + seg[k].0;
                sum_m = sum_m + seg[k].1;
            }
            let (mean_p, mean_m) = (sum_p / count, sum_m / count);
            let (mut var_p, mut var_m) = (T::zero(), T::zero());
            for seg in &per_segment {
                var_p = var_p + (seg[k].0 - mean_p).powi(2);
                var_m = var_m + (seg[k].1 - mean_m).powi(2);
            }
            let denom = (count - T::one()) * count;
            SpectrumEstimate {
                omega,
                r_plus: mean_p,
                r_minus: mean_m,
                stderr_plus: (var_p / denom).sqrt(),
                stderr_minus: (var_m / denom).sqrt(),
            }
        })
        .collect();

    Ok(OracleSpectrum {
        points,
        bin_spacing: bin,
        samples_per_segment: n,
        segments: cfg.segments,
        seed: cfg.seed,
    })
}

/// One simulated point set against the closed-form prediction with unit
/// detection efficiency and the rates' escape efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelComparison<T> {
    pub estimate: SpectrumEstimate<T>,
    pub detuning: T,
    pub model_plus: T,
    pub model_minus: T,
}

impl<T: Real> ModelComparison<T> {
    /// Deviation in dB, `(plus, minus)`.
    pub fn deviation_db(&self) -> (T, T) {
        let db = |v: T| to_db(v).unwrap_or(T::nan());
        (
            db(self.estimate.r_plus) - db(self.model_plus),
            db(self.estimate.r_minus) - db(self.model_minus),
        )
    }

    /// Deviation in standard errors, `(plus, minus)`.
    pub fn deviation_sigma(&self) -> (T, T) {
        (
            (self.estimate.r_plus - self.model_plus).abs() / self.estimate.stderr_plus,
            (self.estimate.r_minus - self.model_minus).abs() / self.estimate.stderr_minus,
        )
    }

    /// Both quadratures within `tol_db` of the model and within `n_sigma`
    /// standard errors of it.
    pub fn agrees(&self, tol_db: T, n_sigma: T) -> bool {
        let (dp, dm) = self.deviation_db();
        let (sp, sm) = self.deviation_sigma();
        dp.abs() <= tol_db && dm.abs() <= tol_db && sp <= n_sigma && sm <= n_sigma
    }
}

pub fn compare_with_model<T: Real>(
    cfg: &LangevinConfig<T>,
    spectrum: &OracleSpectrum<T>,
) -> Result<Vec<ModelComparison<T>>, ModelError> {
    let rho = cfg.escape_efficiency();
    spectrum
        .points
        .iter()
        .map(|e| {
            let detuning = e.omega / cfg.gamma_total();
            let m = forward_variances(T::one(), rho, cfg.x, detuning)?;
            Ok(ModelComparison {
                estimate: *e,
                detuning,
                model_plus: m.r_plus(),
                model_minus: m.r_minus(),
            })
        })
        .collect()
}
