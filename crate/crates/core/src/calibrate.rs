//! Mapping measured device figures onto the dimensionless noise model.
//!
//! Device frequencies are taken as one consistent angular unit ("GHz"). The
//! model's relaxation rate of a bare `Delta sigma_x` qubit is
//! `1/T1 = S(2 Delta) / pi`, which fixes `alpha` once `T` is known.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{spectral_function, NoiseModel, WEAK_COUPLING_LIMIT};
use crate::purity::relax_time_check;

/// Boltzmann constant over Planck constant, GHz per kelvin.
pub const KB_OVER_H_GHZ_PER_K: f64 = 20.836_619_123_327_57;

fn d_cutoff() -> f64 {
    20.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Device {
    pub delta_ghz: f64,
    pub j_ghz: f64,
    pub inv_t1_ghz: f64,
    pub temperature_k: f64,
    /// Bath cutoff in units of `pi/tau` of the resulting model.
    #[serde(default = "d_cutoff")]
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub noise: NoiseModel<f64>,
    pub alpha: f64,
    /// `alpha` from `1/T1 = (pi/2) S(Delta)` taken literally.
    pub alpha_quoted_formula: f64,
    pub temperature_ghz: f64,
    /// `Delta` of the target construction in units of `pi/tau`.
    pub delta_param: f64,
    /// Size of `1/tau` in device units (`Delta_GHz / (pi Delta_param)`).
    pub ghz_per_inv_tau: f64,
    /// `J` in units of `pi/tau`.
    pub j_param: f64,
    pub warnings: Vec<String>,
}

impl Calibration {
    /// Converts a rate in `1/tau` into device units.
    pub fn rate_to_ghz(&self, r: f64) -> f64 {
        r * self.ghz_per_inv_tau
    }
}

/// Calibrates against a construction whose single-qubit splitting parameter
/// is `delta_param` (units `pi/tau`).
pub fn calibrate(device: &Device, delta_param: f64) -> Result<Calibration> {
    let Device { delta_ghz, j_ghz, inv_t1_ghz, temperature_k, cutoff } = *device;
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if !positive(delta_ghz) || !positive(delta_param) || !(j_ghz >= 0.0) {
        return Err(Error::InvalidParameter("Delta must be > 0 and J >= 0".into()));
    }
    if !(inv_t1_ghz >= 0.0) || !(temperature_k >= 0.0) || !inv_t1_ghz.is_finite() || !temperature_k.is_finite() {
        return Err(Error::InvalidParameter("1/T1 and temperature must be finite and >= 0".into()));
    }
    let temperature_ghz = temperature_k * KB_OVER_H_GHZ_PER_K;
    let unit = NoiseModel::new(1.0, temperature_ghz, f64::INFINITY);
    let alpha = inv_t1_ghz * std::f64::consts::PI / spectral_function(2.0 * delta_ghz, &unit);
    let alpha_quoted_formula = inv_t1_ghz / (std::f64::consts::FRAC_PI_2 * spectral_function(delta_ghz, &unit));
    let noise = NoiseModel::new(alpha, temperature_ghz / delta_ghz * delta_param, cutoff);
    noise.validate()?;
    let mut warnings = noise.warnings();
    if alpha > WEAK_COUPLING_LIMIT {
        warnings.push("inputs imply strong coupling".into());
    }
    Ok(Calibration {
        noise,
        alpha,
        alpha_quoted_formula,
        temperature_ghz,
        delta_param,
        ghz_per_inv_tau: delta_ghz / (std::f64::consts::PI * delta_param),
        j_param: j_ghz / delta_ghz * delta_param,
        warnings,
    })
}

/// `1/T1` in device units reproduced by propagating the calibrated model.
pub fn round_trip_inv_t1(cal: &Calibration) -> Result<f64> {
    let rc = relax_time_check(cal.delta_param, &cal.noise)?;
    Ok(cal.rate_to_ghz(rc.fitted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device(inv_t1: f64, t: f64) -> Device {
        Device { delta_ghz: 10.0, j_ghz: 20.0, inv_t1_ghz: inv_t1, temperature_k: t, cutoff: 20.0 }
    }

    #[test]
    fn zero_rate_gives_zero_alpha() {
        assert_eq!(calibrate(&device(0.0, 0.1), 1.0).unwrap().alpha, 0.0);
    }

    #[test]
    fn zero_temperature_closed_form() {
        let c = calibrate(&device(0.1, 0.0), 1.0).unwrap();
        assert!((c.alpha - 0.1 * std::f64::consts::PI / 20.0).abs() < 1e-15);
        assert!((c.alpha_quoted_formula - 0.1 / (std::f64::consts::FRAC_PI_2 * 10.0)).abs() < 1e-15);
        assert_eq!(c.j_param, 2.0);
    }

    #[test]
    fn round_trip_reproduces_rate() {
        let c = calibrate(&device(0.1, 0.1), 1.0).unwrap();
        let back = round_trip_inv_t1(&c).unwrap();
        assert!((back / 0.1 - 1.0).abs() < 0.05, "{back}");
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(calibrate(&device(-0.1, 0.1), 1.0).is_err());
        assert!(calibrate(&device(0.1, 0.1), 0.0).is_err());
    }
}
