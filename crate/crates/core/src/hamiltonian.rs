//! Two-qubit control Hamiltonian: local fields `B_i = (Delta_i, 0, eps_i)` plus
//! anisotropic exchange `sum_a J_a sigma^a_1 sigma^a_2`.
//!
//! All energies are in units of `pi/tau` and times in units of `tau`, so the
//! noiseless propagator of a constant pulse is `exp(-i pi H t0)`.
//!
//! Basis ordering is `|up,up>, |up,down>, |down,up>, |down,down>` with qubit 1
//! as the major index and `sigma_z |up> = +|up>`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat4, Mat2};
use crate::scalar::{cr, Real, C};

/// The seven tunable controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Control {
    Delta1,
    Delta2,
    Eps1,
    Eps2,
    Jx,
    Jy,
    Jz,
}

impl Control {
    pub const ALL: [Control; 7] =
        [Control::Delta1, Control::Delta2, Control::Eps1, Control::Eps2, Control::Jx, Control::Jy, Control::Jz];

    pub fn name(self) -> &'static str {
        match self {
            Control::Delta1 => "delta1",
            Control::Delta2 => "delta2",
            Control::Eps1 => "eps1",
            Control::Eps2 => "eps2",
            Control::Jx => "jx",
            Control::Jy => "jy",
            Control::Jz => "jz",
        }
    }

    pub fn index(self) -> usize {
        Control::ALL.iter().position(|&c| c == self).unwrap()
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Control {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Control::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown control `{s}`")))
    }
}

/// Parameters of a constant (one-step) pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
/// Omitted fields deserialize to zero (`t0` to one).
#[serde(default, deny_unknown_fields, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct HamiltonianParams<T: Real> {
    pub delta1: T,
    pub delta2: T,
    pub eps1: T,
    pub eps2: T,
    pub jx: T,
    pub jy: T,
    pub jz: T,
    /// Gate duration in units of `tau`.
    pub t0: T,
    /// Optional amplitude bounds `|x_i| <= a_i`, in [`Control::ALL`] order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[T; 7]>,
}

impl<T: Real> Default for HamiltonianParams<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> HamiltonianParams<T> {
    pub fn zero() -> Self {
        HamiltonianParams {
            delta1: T::zero(),
            delta2: T::zero(),
            eps1: T::zero(),
            eps2: T::zero(),
            jx: T::zero(),
            jy: T::zero(),
            jz: T::zero(),
            t0: T::one(),
            bounds: None,
        }
    }

    pub fn from_array(x: [T; 7]) -> Self {
        let mut p = Self::zero();
        p.set_controls(x);
        p
    }

    pub fn with_t0(mut self, t0: T) -> Self {
        self.t0 = t0;
        self
    }

    pub fn controls(&self) -> [T; 7] {
        [self.delta1, self.delta2, self.eps1, self.eps2, self.jx, self.jy, self.jz]
    }

    pub fn set_controls(&mut self, x: [T; 7]) {
        [self.delta1, self.delta2, self.eps1, self.eps2, self.jx, self.jy, self.jz] = x;
    }

    pub fn get(&self, c: Control) -> T {
        self.controls()[c.index()]
    }

    pub fn set(&mut self, c: Control, v: T) {
        let mut x = self.controls();
        x[c.index()] = v;
        self.set_controls(x);
    }

    /// Length of the exchange vector `sqrt(Jx^2 + Jy^2 + Jz^2)`.
    pub fn coupling_norm(&self) -> T {
        (self.jx * self.jx + self.jy * self.jy + self.jz * self.jz).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (c, v) in Control::ALL.iter().zip(self.controls()) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{c} is not finite")));
            }
        }
        if !self.t0.is_finite() || self.t0 <= T::zero() {
            return Err(Error::InvalidParameter("t0 must be finite and positive".into()));
        }
        if let Some(bounds) = self.bounds {
            for ((c, v), a) in Control::ALL.iter().zip(self.controls()).zip(bounds) {
                if v.abs() > a {
                    return Err(Error::InvalidParameter(format!("{c} = {v} exceeds its amplitude bound {a}")));
                }
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> HamiltonianParams<U> {
        let c = |x: T| U::lit(x.to_f64().unwrap());
        HamiltonianParams {
            delta1: c(self.delta1),
            delta2: c(self.delta2),
            eps1: c(self.eps1),
            eps2: c(self.eps2),
            jx: c(self.jx),
            jy: c(self.jy),
            jz: c(self.jz),
            t0: c(self.t0),
            bounds: self.bounds.map(|b| b.map(c)),
        }
    }
}

/// Single-qubit Pauli axis; `I` is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

pub fn pauli<T: Real>(a: Axis) -> Mat2<T> {
    let (o, z) = (C::<T>::one(), C::<T>::zero());
    let i = Complex::<T>::i();
    match a {
        Axis::I => Mat2([[o, z], [z, o]]),
        Axis::X => Mat2([[z, o], [o, z]]),
        Axis::Y => Mat2([[z, -i], [i, z]]),
        Axis::Z => Mat2([[o, z], [z, -o]]),
    }
}

/// `sigma^a (x) sigma^b`.
pub fn pauli_tensor<T: Real>(a: Axis, b: Axis) -> CMat4<T> {
    CMat4::kron(&pauli(a), &pauli(b))
}

/// The 4x4 noiseless Hamiltonian in units of `pi/tau`.
pub fn build_hamiltonian<T: Real>(p: &HamiltonianParams<T>) -> Result<CMat4<T>> {
    for (c, v) in Control::ALL.iter().zip(p.controls()) {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{c} is not finite")));
        }
    }
    let HamiltonianParams { delta1: d1, delta2: d2, eps1: e1, eps2: e2, jx, jy, jz, .. } = *p;
    let rows = [
        [jz + e1 + e2, d2, d1, jx - jy],
        [d2, e1 - e2 - jz, jx + jy, d1],
        [d1, jx + jy, e2 - e1 - jz, d2],
        [jx - jy, d1, d2, -e1 - e2 + jz],
    ];
    let mut h = CMat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            h.0[r][c] = cr(rows[r][c]);
        }
    }
    Ok(h)
}

/// Closed-form spectrum at the qubits' optimal points (`eps_1 = eps_2 = 0`),
/// in the order `(Jx - A, Jx + A, -Jx + B, -Jx - B)` with
/// `A = sqrt((D1+D2)^2 + (Jy-Jz)^2)` and `B = sqrt((D1-D2)^2 + (Jy+Jz)^2)`.
pub fn spectrum_optimal_point<T: Real>(delta1: T, delta2: T, jx: T, jy: T, jz: T) -> [T; 4] {
    let a = ((delta1 + delta2).powi(2) + (jy - jz).powi(2)).sqrt();
    let b = ((delta1 - delta2).powi(2) + (jy + jz).powi(2)).sqrt();
    [jx - a, jx + a, -jx + b, -jx - b]
}
