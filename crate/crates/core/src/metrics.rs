//! Distance to a target unitary, Makhlin local invariants and the aggregated
//! gate report.

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::Result;
use crate::hamiltonian::{build_hamiltonian, HamiltonianParams};
use crate::linalg::{expm_hermitian, require_unitary, CMat4};
use crate::noise::NoiseModel;
use crate::purity::{gate_purity, PurityOptions};
use crate::scalar::{clit, Real, C};

/// Default tolerance on invariant differences for local equivalence.
pub const DEFAULT_EQUIVALENCE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MakhlinInvariants<T: Real> {
    pub g1: C<T>,
    pub g2: C<T>,
}

impl<T: Real> MakhlinInvariants<T> {
    pub fn new(g1: C<T>, g2: C<T>) -> Self {
        MakhlinInvariants { g1, g2 }
    }

    /// `|G1 - G1'|^2 + |G2 - G2'|^2`.
    pub fn gap_sq(&self, other: &Self) -> T {
        (self.g1 - other.g1).norm_sqr() + (self.g2 - other.g2).norm_sqr()
    }

    pub fn to_f64(&self) -> MakhlinInvariants<f64> {
        let c = |z: C<T>| Complex::new(z.re.to_f64().unwrap(), z.im.to_f64().unwrap());
        MakhlinInvariants { g1: c(self.g1), g2: c(self.g2) }
    }
}

/// A named target gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTarget<T: Real> {
    pub name: String,
    pub matrix: CMat4<T>,
    pub invariants: MakhlinInvariants<T>,
}

impl<T: Real> GateTarget<T> {
    pub fn new(name: impl Into<String>, matrix: CMat4<T>) -> Result<Self> {
        require_unitary(&matrix, T::lit(1e-10).max(T::epsilon() * T::lit(64.0)))?;
        let invariants = makhlin_invariants(&matrix);
        Ok(GateTarget { name: name.into(), matrix, invariants })
    }
}

fn magic_basis<T: Real>() -> CMat4<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (clit(s, 0.0), C::zero(), clit(0.0, s));
    CMat4([[o, z, z, i], [z, i, o, z], [z, i, -o, z], [o, z, z, -i]])
}

/// `G1 = tr^2(m) / (16 det X)`, `G2 = (tr^2(m) - tr(m^2)) / (4 det X)` with
/// `m = X_B^T X_B` and `X_B = Q^dag X Q` in the magic basis.
pub fn makhlin_invariants<T: Real>(x: &CMat4<T>) -> MakhlinInvariants<T> {
    let q = magic_basis::<T>();
    let xb = q.adjoint() * *x * q;
    let m = xb.transpose() * xb;
    let det = x.det();
    let tr = m.trace();
    let tr2 = tr * tr;
    let g1 = tr2 / (det * T::lit(16.0));
    let g2 = (tr2 - (m * m).trace()) / (det * T::lit(4.0));
    MakhlinInvariants { g1, g2 }
}

/// `(||X - U||_F, min_phi ||X - e^{i phi} U||_F)`.
pub fn gate_distance<T: Real>(u: &CMat4<T>, x: &CMat4<T>) -> Result<(T, T)> {
    let tol = T::lit(1e-8).max(T::check_tol());
    require_unitary(u, tol)?;
    require_unitary(x, tol)?;
    Ok(distances(u, x))
}

/// Like [`gate_distance`] without the unitarity checks.
pub(crate) fn distances<T: Real>(u: &CMat4<T>, x: &CMat4<T>) -> (T, T) {
    let raw = (*x - *u).frobenius_norm();
    let overlap = (x.adjoint() * *u).trace();
    // Evaluated elementwise: the closed form sqrt(8 - 2|tr|) cancels badly
    // near zero distance.
    let phase = if overlap.is_zero() { C::from(T::one()) } else { overlap.conj() / overlap.norm() };
    let opt = (*x - u.scale_c(phase)).frobenius_norm();
    (raw, opt.min(raw))
}

pub fn is_equivalent<T: Real>(u: &CMat4<T>, x: &GateTarget<T>, tol: T) -> bool {
    let g = makhlin_invariants(u);
    (g.g1 - x.invariants.g1).norm() < tol && (g.g2 - x.invariants.g2).norm() < tol
}

/// `exp(-i pi H t0)` for the pulse described by `p`.
pub fn pulse_unitary<T: Real>(p: &HamiltonianParams<T>) -> Result<CMat4<T>> {
    let h = build_hamiltonian(p)?;
    Ok(expm_hermitian(&h, T::PI() * p.t0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateReport {
    pub target: String,
    pub raw_distance: f64,
    pub phase_distance: f64,
    /// `|Tr(X^dag U)| / 4`.
    pub fidelity: f64,
    /// `[Re, Im]` of `G1` and `G2`.
    pub g1: [f64; 2],
    pub g2: [f64; 2],
    pub target_g1: [f64; 2],
    pub target_g2: [f64; 2],
    pub invariant_gap: f64,
    pub equivalent: bool,
    pub purity_loss: f64,
    pub decay_rate: f64,
}

/// Distances, invariants and purity figures of the pulse `p` run for `p.t0`.
pub fn report(
    p: &HamiltonianParams<f64>,
    target: &GateTarget<f64>,
    nm: &NoiseModel<f64>,
    opts: &PurityOptions<f64>,
) -> Result<GateReport> {
    let u = pulse_unitary(p)?;
    let (raw, opt) = gate_distance(&u, &target.matrix)?;
    let g = makhlin_invariants(&u);
    let trace = gate_purity(p, nm, p.t0, opts)?;
    let pair = |z: C<f64>| [z.re, z.im];
    Ok(GateReport {
        target: target.name.clone(),
        raw_distance: raw,
        phase_distance: opt,
        fidelity: (target.matrix.adjoint() * u).trace().norm() / 4.0,
        g1: pair(g.g1),
        g2: pair(g.g2),
        target_g1: pair(target.invariants.g1),
        target_g2: pair(target.invariants.g2),
        invariant_gap: g.gap_sq(&target.invariants).sqrt(),
        equivalent: is_equivalent(&u, target, DEFAULT_EQUIVALENCE_TOL),
        purity_loss: trace.loss(),
        decay_rate: trace.decay_rate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cr;

    fn cnot() -> CMat4<f64> {
        CMat4::permutation([0, 1, 3, 2])
    }

    #[test]
    fn magic_basis_is_unitary() {
        assert!(magic_basis::<f64>().unitarity_error() < 1e-15);
    }

    #[test]
    fn known_invariants() {
        let g = makhlin_invariants(&cnot());
        assert!(g.g1.norm() < 1e-14 && (g.g2 - cr(1.0)).norm() < 1e-14);
        let g = makhlin_invariants(&CMat4::<f64>::identity());
        assert!((g.g1 - cr(1.0)).norm() < 1e-14 && (g.g2 - cr(3.0)).norm() < 1e-14);
        let g = makhlin_invariants(&CMat4::<f64>::permutation([0, 2, 1, 3]));
        assert!((g.g1 - cr(-1.0)).norm() < 1e-14 && (g.g2 - cr(-3.0)).norm() < 1e-14);
    }

    #[test]
    fn distance_removes_global_phase() {
        let x = cnot();
        let u = x.scale_c(Complex::from_polar(1.0, std::f64::consts::FRAC_PI_4));
        let (raw, opt) = gate_distance(&u, &x).unwrap();
        assert!(raw > 1.0);
        assert!(opt < 1e-15);
        assert_eq!(gate_distance(&x, &x).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn non_unitary_is_rejected() {
        assert!(gate_distance(&CMat4::<f64>::zeros(), &cnot()).is_err());
    }

    #[test]
    fn cnot_not_equivalent_to_swap() {
        let swap = GateTarget::new("SWAP", CMat4::<f64>::permutation([0, 2, 1, 3])).unwrap();
        assert!(!is_equivalent(&cnot(), &swap, 1e-6));
        assert!(is_equivalent(&swap.matrix, &swap, 1e-6));
    }
}
