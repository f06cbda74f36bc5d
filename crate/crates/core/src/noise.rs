//! Ohmic bath model shared by both qubits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Two independent, identical Ohmic reservoirs coupled through `sigma_z` of
/// each qubit. `temperature` and `cutoff` are in units of `pi/tau`, like the
/// Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct NoiseModel<T: Real> {
    #[serde(default = "default_alpha")]
    pub alpha: T,
    #[serde(default = "default_temperature")]
    pub temperature: T,
    #[serde(default = "default_cutoff")]
    pub cutoff: T,
    /// Imaginary (Lamb-shift) parts of the partial rates. Not implemented.
    #[serde(default)]
    pub include_lamb_shift: bool,
}

fn default_alpha<T: Real>() -> T {
    T::lit(0.01)
}
fn default_temperature<T: Real>() -> T {
    T::lit(0.2)
}
fn default_cutoff<T: Real>() -> T {
    T::lit(20.0)
}

/// Coupling above which the weak-coupling treatment is flagged.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        NoiseModel {
            alpha: default_alpha(),
            temperature: default_temperature(),
            cutoff: default_cutoff(),
            include_lamb_shift: false,
        }
    }
}

impl<T: Real> NoiseModel<T> {
    pub fn new(alpha: T, temperature: T, cutoff: T) -> Self {
        NoiseModel { alpha, temperature, cutoff, include_lamb_shift: false }
    }

    pub fn noiseless() -> Self {
        Self::new(T::zero(), T::zero(), default_cutoff())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < T::zero() {
            return Err(Error::InvalidParameter("alpha must be finite and >= 0".into()));
        }
        if !self.temperature.is_finite() || self.temperature < T::zero() {
            return Err(Error::InvalidParameter("temperature must be finite and >= 0".into()));
        }
        if self.cutoff.is_nan() || self.cutoff <= T::zero() {
            return Err(Error::InvalidParameter("cutoff must be > 0".into()));
        }
        if self.include_lamb_shift {
            return Err(Error::Unsupported("Lamb-shift terms are not implemented".into()));
        }
        Ok(())
    }

    /// Human-readable warnings (currently only the weak-coupling check).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.alpha > T::lit(WEAK_COUPLING_LIMIT) {
            w.push(format!(
                "alpha = {} exceeds {WEAK_COUPLING_LIMIT}; weak-coupling results are unreliable",
                self.alpha
            ));
        }
        w
    }

    /// Same bath with every energy scale multiplied by `s`.
    pub fn scaled(&self, s: T) -> Self {
        NoiseModel { temperature: self.temperature * s, cutoff: self.cutoff * s, ..*self }
    }

    pub fn cast<U: Real>(&self) -> NoiseModel<U> {
        let c = |x: T| U::lit(x.to_f64().unwrap());
        NoiseModel {
            alpha: c(self.alpha),
            temperature: c(self.temperature),
            cutoff: c(self.cutoff),
            include_lamb_shift: self.include_lamb_shift,
        }
    }
}

/// `S(w) = alpha w coth(w / 2T) Theta(wc - w)` with `Theta(0) = 1`.
///
/// `w`, `T` and `wc` must share one unit. The cutoff only acts on the positive
/// side, so inside the cutoff the function is even in `w`.
pub fn spectral_function<T: Real>(omega: T, nm: &NoiseModel<T>) -> T {
    if omega > nm.cutoff || nm.alpha == T::zero() {
        return T::zero();
    }
    let two = T::lit(2.0);
    if nm.temperature == T::zero() {
        return nm.alpha * omega.abs();
    }
    let x = omega / (two * nm.temperature);
    // w coth(w/2T) = 2T * x coth x
    let xcothx = if x.abs() < T::lit(1e-4) { T::one() + x * x / T::lit(3.0) } else { x / x.tanh() };
    nm.alpha * two * nm.temperature * xcothx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_frequency_limit() {
        let nm = NoiseModel::<f64>::new(0.01, 0.5, 10.0);
        assert!((spectral_function(0.0, &nm) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_is_linear() {
        let nm = NoiseModel::new(0.01, 0.0, 10.0);
        assert_eq!(spectral_function(1.0, &nm), 0.01);
        assert_eq!(spectral_function(-1.0, &nm), 0.01);
    }

    #[test]
    fn even_inside_cutoff_and_cut_above() {
        let nm = NoiseModel::<f64>::new(0.02, 0.3, 5.0);
        for w in [0.01, 0.5, 1.0, 4.9] {
            assert!((spectral_function(w, &nm) - spectral_function(-w, &nm)).abs() < 1e-15);
        }
        assert_eq!(spectral_function(5.0 + 1e-12, &nm), 0.0);
        assert!(spectral_function(5.0, &nm) > 0.0);
        // no cutoff on the negative side
        assert!(spectral_function(-50.0, &nm) > 0.0);
    }

    #[test]
    fn series_branch_matches_direct_formula() {
        let nm = NoiseModel::<f64>::new(1.0, 1.0, 100.0);
        for x in [1e-6f64, 5e-5, 0.99e-4] {
            let direct = 2.0 * x / x.tanh();
            assert!((spectral_function(2.0 * x, &nm) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn lamb_shift_is_unsupported() {
        let nm = NoiseModel::<f64> { include_lamb_shift: true, ..Default::default() };
        assert!(matches!(nm.validate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn strong_coupling_warns() {
        assert!(NoiseModel::new(0.2, 0.0, 1.0).warnings().len() == 1);
        assert!(NoiseModel::<f64>::default().warnings().is_empty());
    }
}
