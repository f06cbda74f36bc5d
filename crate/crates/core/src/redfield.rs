//! Bloch-Redfield relaxation tensor and master-equation propagation.
//!
//! Internally everything runs in angular units: a Hamiltonian `H` given in
//! units of `pi/tau` generates `exp(-i pi H t)` with `t` in units of `tau`,
//! and the bath temperature and cutoff are scaled by `pi` the same way.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, pauli_tensor, Axis, HamiltonianParams};
use crate::linalg::{hermitian_eigen, CMat4, SuperOp};
use crate::noise::{spectral_function, NoiseModel};
use crate::scalar::{ci, cr, Real, C};
use crate::spectrum::{eigensystem, EigenSystem, DEFAULT_DEGENERACY_TOL};

/// Contraction used for the second term of the relaxation tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorConvention {
    /// `delta_nk sum_r Lambda*_mrrl`: trace and Hermiticity preserving.
    #[default]
    Standard,
    /// `delta_nk sum_r Lambda*_lrrm`: kept for comparison only, it breaks
    /// both conservation laws.
    Printed,
}

#[inline]
fn i4(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

/// Partial rates `Lambda_lmnk` in the Hamiltonian eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialRates<T: Real> {
    data: Box<[C<T>; 256]>,
}

impl<T: Real> PartialRates<T> {
    pub fn zeros() -> Self {
        PartialRates { data: Box::new([C::zero(); 256]) }
    }

    #[inline]
    pub fn get(&self, l: usize, m: usize, n: usize, k: usize) -> C<T> {
        self.data[i4(l, m, n, k)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, m: usize, n: usize, k: usize, v: C<T>) {
        self.data[i4(l, m, n, k)] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, x| a.max(x.norm()))
    }
}

/// `Re Lambda_lmnk = S(w_nk) (z1_lm z1_nk + z2_lm z2_nk) / (4 pi)` with
/// `z_i` the eigenbasis matrix elements of the bath coupling operators.
/// Frequencies, temperature and cutoff enter in angular units.
pub fn lambda_rates<T: Real>(es: &EigenSystem<T>, nm: &NoiseModel<T>) -> Result<PartialRates<T>> {
    nm.validate()?;
    let mut out = PartialRates::zeros();
    if nm.alpha == T::zero() {
        return Ok(out);
    }
    let pi = T::PI();
    let ang = nm.scaled(pi);
    let z1 = es.in_eigenbasis(&pauli_tensor(Axis::Z, Axis::I));
    let z2 = es.in_eigenbasis(&pauli_tensor(Axis::I, Axis::Z));
    let norm = T::one() / (T::lit(4.0) * pi);
    for n in 0..4 {
        for k in 0..4 {
            let s = spectral_function(pi * es.gap(n, k), &ang) * norm;
            if s == T::zero() {
                continue;
            }
            for l in 0..4 {
                for m in 0..4 {
                    let v = z1[(l, m)] * z1[(n, k)] + z2[(l, m)] * z2[(n, k)];
                    out.set(l, m, n, k, v * s);
                }
            }
        }
    }
    Ok(out)
}

/// Relaxation tensor `R_nmkl` plus the angular transition frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct RedfieldTensor<T: Real> {
    data: Box<[C<T>; 256]>,
    /// `omega[n][m] = pi (E_n - E_m)`.
    pub omega: [[T; 4]; 4],
    pub convention: TensorConvention,
}

impl<T: Real> RedfieldTensor<T> {
    #[inline]
    pub fn get(&self, n: usize, m: usize, k: usize, l: usize) -> C<T> {
        self.data[i4(n, m, k, l)]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |a, x| a.max(x.norm()))
    }

    /// Superoperator of `drho_nm/dt = -i w_nm rho_nm - sum_kl R_nmkl rho_kl`
    /// acting on eigenbasis matrices vectorized row-major.
    pub fn generator(&self) -> SuperOp<T> {
        let mut g = SuperOp::zeros();
        for n in 0..4 {
            for m in 0..4 {
                let row = 4 * n + m;
                for k in 0..4 {
                    for l in 0..4 {
                        g.m[row][4 * k + l] = -self.get(n, m, k, l);
                    }
                }
                g.m[row][row] = g.m[row][row] - ci(self.omega[n][m]);
            }
        }
        g
    }
}

pub fn redfield_tensor<T: Real>(
    lambda: &PartialRates<T>,
    es: &EigenSystem<T>,
    convention: TensorConvention,
) -> RedfieldTensor<T> {
    let pi = T::PI();
    let mut omega = [[T::zero(); 4]; 4];
    for (n, row) in omega.iter_mut().enumerate() {
        for (m, w) in row.iter_mut().enumerate() {
            *w = pi * es.gap(n, m);
        }
    }
    // Partial traces sum_r Lambda_arrb.
    let mut tr = [[C::<T>::zero(); 4]; 4];
    for (a, row) in tr.iter_mut().enumerate() {
        for (b, x) in row.iter_mut().enumerate() {
            *x = (0..4).fold(C::zero(), |acc, r| acc + lambda.get(a, r, r, b));
        }
    }
    let mut data = Box::new([C::zero(); 256]);
    for n in 0..4 {
        for m in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut v = -lambda.get(l, m, n, k) - lambda.get(k, n, m, l).conj();
                    if l == m {
                        v = v + tr[n][k];
                    }
                    if n == k {
                        v = v + match convention {
                            TensorConvention::Standard => tr[m][l].conj(),
                            TensorConvention::Printed => tr[l][m].conj(),
                        };
                    }
                    data[i4(n, m, k, l)] = v;
                }
            }
        }
    }
    RedfieldTensor { data, omega, convention }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Standard,
    Eigen,
}

/// A 4x4 density matrix tagged with the basis it is written in.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    pub m: CMat4<T>,
    pub basis: Basis,
}

impl<T: Real> DensityMatrix<T> {
    /// `|psi><psi|` in the standard basis; `psi` is normalized here.
    pub fn pure(psi: [C<T>; 4]) -> Self {
        let n = psi.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt();
        let psi = psi.map(|x| x / n);
        let mut m = CMat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = psi[r] * psi[c].conj();
            }
        }
        DensityMatrix { m, basis: Basis::Standard }
    }

    pub fn to_eigen(&self, es: &EigenSystem<T>) -> Self {
        match self.basis {
            Basis::Eigen => self.clone(),
            Basis::Standard => DensityMatrix { m: self.m.to_basis(&es.vectors), basis: Basis::Eigen },
        }
    }

    pub fn to_standard(&self, es: &EigenSystem<T>) -> Self {
        match self.basis {
            Basis::Standard => self.clone(),
            Basis::Eigen => DensityMatrix { m: self.m.from_basis(&es.vectors), basis: Basis::Standard },
        }
    }

    pub fn trace(&self) -> C<T> {
        self.m.trace()
    }

    /// `Tr rho^2` (basis independent).
    pub fn purity(&self) -> T {
        (self.m * self.m).trace().re
    }

    pub fn min_eigenvalue(&self) -> T {
        let (w, _) = hermitian_eigen(&self.m);
        w.into_iter().fold(T::infinity(), T::min)
    }

    /// Checks Hermiticity, unit trace and positivity down to `-1e-6`.
    pub fn validate(&self, time: T) -> Result<()> {
        self.validate_with(time, T::lit(1e-6))
    }

    /// As [`Self::validate`] with an explicit negativity floor.
    pub fn validate_with(&self, time: T, negativity: T) -> Result<()> {
        let tol = T::check_tol();
        let fail = |reason: String| Error::StateValidity { time: time.to_f64().unwrap(), reason };
        let herm = self.m.hermiticity_error();
        if !(herm <= tol) {
            return Err(fail(format!("Hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if !((tr - C::<T>::from(T::one())).norm() <= tol) {
            return Err(fail(format!("trace {tr} differs from 1")));
        }
        let neg = negativity.max(tol);
        let lo = self.min_eigenvalue();
        if !(lo >= -neg) {
            return Err(fail(format!("eigenvalue {lo:e} below -{neg:e}")));
        }
        Ok(())
    }
}

/// Default integration step as a fraction of the gate time.
pub const DEFAULT_STEPS_PER_GATE: u32 = 2000;

/// Eigensystem, relaxation tensor and generator for one constant Hamiltonian
/// under one noise model.
#[derive(Clone, Debug)]
pub struct Dynamics<T: Real> {
    pub eigen: EigenSystem<T>,
    pub tensor: RedfieldTensor<T>,
    pub generator: SuperOp<T>,
    /// Negativity accepted by the validity checks, see [`positivity_floor`].
    pub negativity: T,
}

/// Non-secular Redfield evolution of a pure state dips below zero at first
/// order in the coupling (about `-3.6e-3 alpha` for the one-pulse CNOT and
/// under `-0.05 alpha` over random pulses), so the floor grows with `alpha`
/// on top of the fixed `1e-6`.
pub fn positivity_floor<T: Real>(nm: &NoiseModel<T>) -> T {
    T::lit(1e-6) + T::lit(0.1) * nm.alpha
}

impl<T: Real> Dynamics<T> {
    /// `h` in units of `pi/tau`.
    pub fn new(h: &CMat4<T>, nm: &NoiseModel<T>, convention: TensorConvention) -> Result<Self> {
        let eigen = eigensystem(h, T::lit(DEFAULT_DEGENERACY_TOL))?;
        let lambda = lambda_rates(&eigen, nm)?;
        let tensor = redfield_tensor(&lambda, &eigen, convention);
        let generator = tensor.generator();
        Ok(Dynamics { eigen, tensor, generator, negativity: positivity_floor(nm) })
    }

    pub fn from_params(p: &HamiltonianParams<T>, nm: &NoiseModel<T>) -> Result<Self> {
        Self::new(&build_hamiltonian(p)?, nm, TensorConvention::Standard)
    }

    /// `drho/dt` in the eigenbasis.
    pub fn rhs(&self, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
        let r = rho.to_eigen(&self.eigen);
        let d = self.generator.apply(&r.m.to_vec16());
        DensityMatrix { m: CMat4::from_vec16(&d), basis: Basis::Eigen }
    }

    /// `d Tr(rho^2)/dt = 2 Re Tr(rho rho_dot)` at this state. The coherent
    /// part contributes nothing, so only the relaxation tensor is summed;
    /// this keeps the rate exactly zero without coupling.
    pub fn purity_rate(&self, rho: &DensityMatrix<T>) -> T {
        let r = rho.to_eigen(&self.eigen).m;
        let mut acc = T::zero();
        for n in 0..4 {
            for m in 0..4 {
                let mut d = cr(T::zero());
                for k in 0..4 {
                    for l in 0..4 {
                        d = d + self.tensor.get(n, m, k, l) * r.0[k][l];
                    }
                }
                acc = acc + (r.0[m][n] * d).re;
            }
        }
        -T::lit(2.0) * acc
    }

    /// Propagator over `steps` fixed RK4 steps of length `dt`.
    pub fn propagator(&self, dt: T, steps: u64) -> SuperOp<T> {
        self.generator.rk4_step(dt).pow(steps)
    }
}

type CacheKey = ([u64; 16], [u64; 3], TensorConvention);

/// Thread-safe memo of [`Dynamics`] keyed by Hamiltonian and noise model.
#[derive(Default)]
pub struct DynamicsCache {
    map: Mutex<HashMap<CacheKey, Arc<Dynamics<f64>>>>,
}

impl DynamicsCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        h: &CMat4<f64>,
        nm: &NoiseModel<f64>,
        convention: TensorConvention,
    ) -> Result<Arc<Dynamics<f64>>> {
        let mut hk = [0u64; 16];
        for (i, x) in h.to_vec16().iter().enumerate() {
            // Hamiltonians are real symmetric in this model except in tests;
            // mix both parts into the key.
            hk[i] = x.re.to_bits() ^ x.im.to_bits().rotate_left(17);
        }
        let key = (hk, [nm.alpha.to_bits(), nm.temperature.to_bits(), nm.cutoff.to_bits()], convention);
        if let Some(d) = self.map.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let d = Arc::new(Dynamics::new(h, nm, convention)?);
        self.map.lock().unwrap().insert(key, d.clone());
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagateOptions<T: Real> {
    /// Upper bound on the RK4 step; the actual step divides each sampling
    /// interval evenly.
    pub dt: T,
    /// Number of sampling intervals on `[0, t_final]`.
    pub samples: usize,
    pub check_convergence: bool,
    pub check_validity: bool,
}

impl<T: Real> PropagateOptions<T> {
    pub fn for_gate_time(t0: T) -> Self {
        PropagateOptions {
            dt: t0 / T::lit(DEFAULT_STEPS_PER_GATE as f64),
            samples: 100,
            check_convergence: true,
            check_validity: true,
        }
    }
}

/// Sampled states in the standard basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
}

/// Propagates several initial states on a common grid, sharing propagators.
/// Errors carry the index of the failing state.
pub fn propagate_many<T: Real>(
    rho0: &[DensityMatrix<T>],
    dynamics: &Dynamics<T>,
    t_final: T,
    opts: &PropagateOptions<T>,
) -> Result<Vec<Trajectory<T>>> {
    if !(t_final >= T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidParameter("t_final must be finite and >= 0".into()));
    }
    if !(opts.dt > T::zero()) || opts.samples == 0 {
        return Err(Error::InvalidParameter("dt must be > 0 and samples >= 1".into()));
    }
    let n = opts.samples;
    let interval = t_final / T::lit(n as f64);
    let steps = (interval / opts.dt).ceil().to_u64().unwrap_or(1).max(1);
    let h = interval / T::lit(steps as f64);
    let p = dynamics.propagator(h, steps);
    let p_half = opts.check_convergence.then(|| dynamics.propagator(h / T::lit(2.0), 2 * steps));
    let tol = T::check_tol();

    let mut out = Vec::with_capacity(rho0.len());
    for (index, r0) in rho0.iter().enumerate() {
        let wrap = |e: Error| Error::PerState { index, source: Box::new(e) };
        if opts.check_validity {
            r0.validate_with(T::zero(), dynamics.negativity).map_err(wrap)?;
        }
        let mut v = r0.to_eigen(&dynamics.eigen).m.to_vec16();
        let mut w = v;
        let mut times = Vec::with_capacity(n + 1);
        let mut states = Vec::with_capacity(n + 1);
        times.push(T::zero());
        states.push(r0.to_standard(&dynamics.eigen));
        for j in 1..=n {
            v = p.apply(&v);
            if let Some(ph) = &p_half {
                w = ph.apply(&w);
                let change = v.iter().zip(&w).fold(T::zero(), |a, (x, y)| a.max((*x - *y).norm()));
                if !(change <= tol) {
                    return Err(wrap(Error::Integration {
                        change: change.to_f64().unwrap(),
                        tol: tol.to_f64().unwrap(),
                    }));
                }
            }
            let t = interval * T::lit(j as f64);
            let rho = DensityMatrix { m: CMat4::from_vec16(&v), basis: Basis::Eigen }.to_standard(&dynamics.eigen);
            if opts.check_validity {
                rho.validate_with(t, dynamics.negativity).map_err(wrap)?;
            }
            times.push(t);
            states.push(rho);
        }
        out.push(Trajectory { times, states });
    }
    Ok(out)
}

pub fn propagate<T: Real>(
    rho0: &DensityMatrix<T>,
    dynamics: &Dynamics<T>,
    t_final: T,
    opts: &PropagateOptions<T>,
) -> Result<Trajectory<T>> {
    propagate_many(std::slice::from_ref(rho0), dynamics, t_final, opts).map(|mut v| v.remove(0)).map_err(|e| match e {
        Error::PerState { source, .. } => *source,
        e => e,
    })
}

/// Zero-temperature relaxation of a bare `Delta sigma_x` qubit is used by the
/// calibration; this helper builds that pair Hamiltonian (qubit 2 idle).
pub fn single_qubit_hamiltonian<T: Real>(delta: T) -> CMat4<T> {
    pauli_tensor(Axis::X, Axis::I).scale(delta)
}

pub(crate) fn real_vec<T: Real>(v: [f64; 4]) -> [C<T>; 4] {
    v.map(|x| cr(T::lit(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng) -> HamiltonianParams<f64> {
        HamiltonianParams::from_array(std::array::from_fn(|_| rng.gen_range(-1.5..1.5)))
    }

    fn random_density(rng: &mut ChaCha8Rng) -> CMat4<f64> {
        let mut a = CMat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                a[(r, c)] = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let m = a * a.adjoint();
        let t = m.trace().re;
        m.scale(1.0 / t)
    }

    #[test]
    fn zero_rates_give_zero_tensor() {
        let es = eigensystem(&build_hamiltonian(&HamiltonianParams::<f64>::zero()).unwrap(), 1e-8).unwrap();
        let l = lambda_rates(&es, &NoiseModel::noiseless()).unwrap();
        assert_eq!(l.max_abs(), 0.0);
        let r = redfield_tensor(&l, &es, TensorConvention::Standard);
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn standard_contraction_preserves_trace_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let p = random_params(&mut rng);
            let nm = NoiseModel::new(0.05, rng.gen_range(0.0..1.0), 20.0);
            let d = Dynamics::from_params(&p, &nm).unwrap();
            let rho = DensityMatrix { m: random_density(&mut rng), basis: Basis::Eigen };
            let drho = d.rhs(&rho);
            assert!(drho.trace().norm() < 1e-12);
            assert!(drho.m.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn printed_contraction_breaks_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng);
        let nm = NoiseModel::new(0.05, 0.3, 20.0);
        let h = build_hamiltonian(&p).unwrap();
        let d = Dynamics::new(&h, &nm, TensorConvention::Printed).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let rho = DensityMatrix { m: random_density(&mut rng), basis: Basis::Eigen };
            let drho = d.rhs(&rho);
            worst = worst.max(drho.trace().norm()).max(drho.m.hermiticity_error());
        }
        assert!(worst > 1e-6, "{worst}");
    }

    #[test]
    fn unitary_evolution_keeps_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_params(&mut rng);
        let d = Dynamics::from_params(&p, &NoiseModel::noiseless()).unwrap();
        let rho = DensityMatrix::pure(real_vec([0.6, 0.0, 0.8, 0.0]));
        let tr = propagate(&rho, &d, 1.0, &PropagateOptions::for_gate_time(1.0)).unwrap();
        for s in &tr.states {
            assert!((s.purity() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenstates_are_stationary_without_noise() {
        let p = HamiltonianParams::<f64> { delta1: 0.3, jz: 0.7, ..Default::default() };
        let d = Dynamics::from_params(&p, &NoiseModel::noiseless()).unwrap();
        let mut m = CMat4::zeros();
        m[(0, 0)] = cr(0.25);
        m[(2, 2)] = cr(0.75);
        let rho = DensityMatrix { m, basis: Basis::Eigen };
        let tr = propagate(&rho, &d, 2.0, &PropagateOptions::for_gate_time(1.0)).unwrap();
        let first = tr.states[0].to_eigen(&d.eigen);
        for s in &tr.states {
            assert!((s.to_eigen(&d.eigen).m - first.m).max_abs() < 1e-12);
        }
    }

    #[test]
    fn step_halving_failure_is_reported() {
        let p = HamiltonianParams::<f64> { delta1: 1.0, jz: 1.0, ..Default::default() };
        let d = Dynamics::from_params(&p, &NoiseModel::default()).unwrap();
        let rho = DensityMatrix::pure(real_vec([1.0, 0.0, 0.0, 0.0]));
        let opts = PropagateOptions { dt: 0.2, samples: 1, check_convergence: true, check_validity: false };
        assert!(matches!(propagate(&rho, &d, 1.0, &opts), Err(Error::Integration { .. })));
    }

    #[test]
    fn invalid_initial_state_carries_index() {
        let p = HamiltonianParams::<f64>::zero();
        let d = Dynamics::from_params(&p, &NoiseModel::default()).unwrap();
        let good = DensityMatrix::pure(real_vec([1.0, 0.0, 0.0, 0.0]));
        let bad = DensityMatrix { m: CMat4::identity(), basis: Basis::Standard };
        let err = propagate_many(&[good, bad], &d, 1.0, &PropagateOptions::for_gate_time(1.0)).unwrap_err();
        assert!(matches!(err, Error::PerState { index: 1, .. }));
    }

    #[test]
    fn cache_reuses_entries() {
        let cache = DynamicsCache::new();
        let h = build_hamiltonian(&HamiltonianParams::<f64> { jz: 1.0, ..Default::default() }).unwrap();
        let a = cache.get(&h, &NoiseModel::default(), TensorConvention::Standard).unwrap();
        let b = cache.get(&h, &NoiseModel::default(), TensorConvention::Standard).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }
}
