//! Decibel conversions relative to the shot-noise level (0 dB = linear 1).

use crate::model::ModelError;
use crate::Real;

/// `10·log10(linear)`. Non-positive or non-finite input is rejected.
pub fn to_db<T: Real>(linear: T) -> Result<T, ModelError> {
    if !(linear > T::zero()) || !linear.is_finite() {
        return Err(ModelError::NonPositiveLinear(linear.as_f64()));
    }
    Ok(T::lit(10.0) * linear.log10())
}

/// `10^(db/10)`. `-inf` maps to 0.
pub fn from_db<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn deg_to_rad<T: Real>(deg: T) -> T {
    deg.to_radians()
}

pub fn rad_to_deg<T: Real>(rad: T) -> T {
    rad.to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_points() {
        assert_eq!(to_db(1.0_f64).unwrap(), 0.0);
        assert_relative_eq!(to_db(0.1_f64).unwrap(), -10.0, epsilon = 1e-12);
        assert_relative_eq!(to_db(21.24_f64).unwrap(), 13.27, epsilon = 0.005);
        assert_eq!(from_db(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(to_db(0.0_f64).is_err());
        assert!(to_db(-1.0_f64).is_err());
        assert!(to_db(f64::NAN).is_err());
    }

    #[test]
    fn roundtrip_grid() {
        for k in -60..=60 {
            let v = 10f64.powf(k as f64 / 10.0) * 1.2345;
            let back = from_db(to_db(v).unwrap());
            assert_relative_eq!(back, v, max_relative = 1e-12);
        }
    }

    #[test]
    fn works_in_f32() {
        assert!((to_db(0.5_f32).unwrap() + 3.0103).abs() < 1e-4);
    }
}
