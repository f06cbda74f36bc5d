//! Gate purity averaged over 16 product initial states, and the single-qubit
//! relaxation check that pins the rate normalization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, HamiltonianParams};
use crate::linalg::CMat4;
use crate::noise::{spectral_function, NoiseModel};
use crate::redfield::{
    propagate_many, real_vec, single_qubit_hamiltonian, DensityMatrix, Dynamics, PropagateOptions, TensorConvention,
    DEFAULT_STEPS_PER_GATE,
};
use crate::scalar::{clit, cr, Real, C};

/// Single-qubit states in the order down, up, `(down+up)/sqrt2`,
/// `(down+i up)/sqrt2`, as vectors over `(up, down)`.
fn single_qubit_states<T: Real>() -> [[C<T>; 2]; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        [clit(0.0, 0.0), clit(1.0, 0.0)],
        [clit(1.0, 0.0), clit(0.0, 0.0)],
        [clit(h, 0.0), clit(h, 0.0)],
        [clit(0.0, h), clit(h, 0.0)],
    ]
}

const SINGLE_LABELS: [&str; 4] = ["down", "up", "x", "y"];

/// The 16 product states `|a> (x) |b>`, qubit-1 state varying slowest.
#[derive(Clone, Debug)]
pub struct InitialStateSet<T: Real> {
    pub states: Vec<DensityMatrix<T>>,
    pub labels: Vec<String>,
}

impl<T: Real> InitialStateSet<T> {
    pub fn standard() -> Self {
        let s = single_qubit_states::<T>();
        let mut states = Vec::with_capacity(16);
        let mut labels = Vec::with_capacity(16);
        for (i, a) in s.iter().enumerate() {
            for (j, b) in s.iter().enumerate() {
                let psi = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
                states.push(DensityMatrix::pure(psi));
                labels.push(format!("{}_{}", SINGLE_LABELS[i], SINGLE_LABELS[j]));
            }
        }
        InitialStateSet { states, labels }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PurityTrace<T: Real> {
    pub times: Vec<T>,
    /// Ensemble purity `P(t)`.
    pub purity: Vec<T>,
    /// `Tr rho_j(t)^2` for each of the 16 initial states, per sample.
    pub per_state: Vec<[T; 16]>,
    /// Analytic `dP/dt` at `t = 0` (non-positive under noise).
    pub initial_slope: T,
    #[serde(skip)]
    pub final_states: Vec<DensityMatrix<T>>,
}

impl<T: Real> PurityTrace<T> {
    /// `|dP/dt|` at `t = 0`.
    pub fn decay_rate(&self) -> T {
        self.initial_slope.abs()
    }

    /// `1 - P(t_final)`.
    pub fn loss(&self) -> T {
        T::one() - *self.purity.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurityOptions<T: Real> {
    /// RK4 step; `None` means `t0 / 2000` (or `tau / 2000` for sequences).
    pub dt: Option<T>,
    /// Sampling intervals over the whole run.
    pub samples: usize,
    pub check_convergence: bool,
    pub check_validity: bool,
    pub convention: TensorConvention,
}

impl<T: Real> Default for PurityOptions<T> {
    fn default() -> Self {
        PurityOptions {
            dt: None,
            samples: 100,
            check_convergence: true,
            check_validity: true,
            convention: TensorConvention::Standard,
        }
    }
}

/// `(1/16) sum_j 2 Re Tr(rho_j rho_j_dot)` at the initial states.
pub fn initial_purity_slope<T: Real>(dynamics: &Dynamics<T>, set: &InitialStateSet<T>) -> T {
    let sum: T = set.states.iter().map(|r| dynamics.purity_rate(r)).sum();
    sum / T::lit(set.len() as f64)
}

/// Purity trace of a constant pulse over `[0, t_final]`.
pub fn gate_purity<T: Real>(
    p: &HamiltonianParams<T>,
    nm: &NoiseModel<T>,
    t_final: T,
    opts: &PurityOptions<T>,
) -> Result<PurityTrace<T>> {
    p.validate()?;
    let h = build_hamiltonian(p)?;
    let dt = opts.dt.unwrap_or(p.t0 / T::lit(DEFAULT_STEPS_PER_GATE as f64));
    sequence_purity_with_dt(&[(h, t_final)], nm, dt, opts)
}

/// Purity trace of piecewise-constant pulses `(H in pi/tau, duration)`,
/// sampled on one absolute time axis.
pub fn sequence_purity<T: Real>(
    segments: &[(CMat4<T>, T)],
    nm: &NoiseModel<T>,
    opts: &PurityOptions<T>,
) -> Result<PurityTrace<T>> {
    let dt = opts.dt.unwrap_or(T::one() / T::lit(DEFAULT_STEPS_PER_GATE as f64));
    sequence_purity_with_dt(segments, nm, dt, opts)
}

fn sequence_purity_with_dt<T: Real>(
    segments: &[(CMat4<T>, T)],
    nm: &NoiseModel<T>,
    dt: T,
    opts: &PurityOptions<T>,
) -> Result<PurityTrace<T>> {
    if segments.is_empty() {
        return Err(Error::InvalidParameter("empty pulse sequence".into()));
    }
    let total = segments.iter().fold(T::zero(), |a, s| a + s.1);
    if !(total > T::zero()) {
        return Err(Error::InvalidParameter("total duration must be > 0".into()));
    }
    let spacing = total / T::lit(opts.samples.max(1) as f64);
    let set = InitialStateSet::<T>::standard();
    let mut states = set.states.clone();
    let mut times = vec![T::zero()];
    let mut purity = vec![T::one()];
    let mut per_state = vec![purities(&states)];
    purity[0] = mean(&per_state[0]);
    let mut offset = T::zero();
    let mut initial_slope = T::zero();
    for (i, (h, dur)) in segments.iter().enumerate() {
        let dynamics = Dynamics::new(h, nm, opts.convention)?;
        if i == 0 {
            initial_slope = initial_purity_slope(&dynamics, &set);
        }
        let n = ((*dur / spacing) - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
        let popts = PropagateOptions {
            dt,
            samples: n,
            check_convergence: opts.check_convergence,
            check_validity: opts.check_validity,
        };
        let trajs = propagate_many(&states, &dynamics, *dur, &popts)?;
        for j in 1..=n {
            let snap: Vec<_> = trajs.iter().map(|t| t.states[j].clone()).collect();
            let ps = purities(&snap);
            times.push(offset + trajs[0].times[j]);
            purity.push(mean(&ps));
            per_state.push(ps);
        }
        states = trajs.into_iter().map(|mut t| t.states.pop().unwrap()).collect();
        offset = offset + *dur;
    }
    Ok(PurityTrace { times, purity, per_state, initial_slope, final_states: states })
}

fn purities<T: Real>(states: &[DensityMatrix<T>]) -> [T; 16] {
    let mut out = [T::zero(); 16];
    for (o, s) in out.iter_mut().zip(states) {
        *o = s.purity();
    }
    out
}

fn mean<T: Real>(x: &[T; 16]) -> T {
    x.iter().copied().sum::<T>() / T::lit(16.0)
}

/// `(1/16) sum_j Tr(U rho_j(0) U^dag rho_j(t))` against an ideal unitary.
pub fn mean_target_overlap<T: Real>(final_states: &[DensityMatrix<T>], u: &CMat4<T>) -> T {
    let set = InitialStateSet::<T>::standard();
    let sum: T = set.states.iter().zip(final_states).map(|(r0, r)| (*u * r0.m * u.adjoint() * r.m).trace().re).sum();
    sum / T::lit(set.len() as f64)
}

/// Result of fitting the population decay of a single driven qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelaxCheck {
    /// Fitted `1/T1` in units of `1/tau`.
    pub fitted: f64,
    /// `(pi/2) S(Delta)` with angular `Delta`, in units of `1/tau`.
    pub analytic: f64,
    /// Model prediction for `fitted / analytic`.
    pub normalization: f64,
    /// `fitted / (normalization * analytic)`; `None` when both rates vanish.
    pub ratio: Option<f64>,
}

/// Ratio of the model's `1/T1` for `H = Delta sigma_x` to `(pi/2) S(Delta)`:
/// `(2/pi^2) S(2 Delta) / S(Delta)`, which tends to `4/pi^2` at zero
/// temperature.
pub fn relaxation_normalization<T: Real>(delta: T, nm: &NoiseModel<T>) -> T {
    let s1 = spectral_function(delta, nm);
    let s2 = spectral_function(T::lit(2.0) * delta, nm);
    if s1 == T::zero() {
        return T::lit(4.0) / (T::PI() * T::PI());
    }
    T::lit(2.0) / (T::PI() * T::PI()) * s2 / s1
}

/// Propagates `H = Delta sigma_x (x) 1` from the upper eigenstate of qubit 1
/// and fits the exponential approach of its population to equilibrium.
pub fn relax_time_check(delta: f64, nm: &NoiseModel<f64>) -> Result<RelaxCheck> {
    nm.validate()?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter("delta must be finite and > 0".into()));
    }
    let pi = std::f64::consts::PI;
    let analytic = pi / 2.0 * spectral_function(pi * delta, &nm.scaled(pi));
    let normalization = relaxation_normalization(delta, nm);
    let expected = normalization * analytic;
    if expected == 0.0 {
        return Ok(RelaxCheck { fitted: 0.0, analytic, normalization, ratio: None });
    }

    let dynamics = Dynamics::new(&single_qubit_hamiltonian(delta), nm, TensorConvention::Standard)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = real_vec::<f64>([s, 0.0, s, 0.0]);
    let rho0 = DensityMatrix::pure(psi).to_eigen(&dynamics.eigen);
    let projector = DensityMatrix::pure(psi).m.to_basis(&dynamics.eigen.vectors);
    let population = |v: &[C<f64>; 16]| (projector * CMat4::from_vec16(v)).trace().re;

    let omega = 2.0 * pi * delta;
    let dt = (0.01 / omega).min(1.0 / DEFAULT_STEPS_PER_GATE as f64);
    let step = dynamics.generator.rk4_step(dt);
    let v0 = rho0.m.to_vec16();

    let long_steps = (40.0 / expected / dt).ceil() as u64;
    let p_inf = population(&step.pow(long_steps).apply(&v0));

    let samples = 40usize;
    let window = 2.0 / expected;
    let k = (window / samples as f64 / dt).ceil().max(1.0) as u64;
    let hop = step.pow(k);
    let mut v = v0;
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for j in 0..=samples {
        if j > 0 {
            v = hop.apply(&v);
        }
        let gap = population(&v) - p_inf;
        if gap <= 0.0 {
            return Err(Error::Fit(format!("population crossed equilibrium at sample {j}")));
        }
        ts.push(j as f64 * k as f64 * dt);
        ys.push(gap.ln());
    }
    let n = ts.len() as f64;
    let (mt, my) = (ts.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let resid = ts.iter().zip(&ys).map(|(t, y)| (y - (my + slope * (t - mt))).abs()).fold(0.0, f64::max);
    if resid > 0.02 {
        return Err(Error::Fit(format!("log-population residual {resid:e} exceeds 0.02")));
    }
    let fitted = -slope;
    Ok(RelaxCheck { fitted, analytic, normalization, ratio: Some(fitted / expected) })
}

/// Purity of the pure product state `|up,up>` (used as a sanity anchor).
pub fn pure_state_purity<T: Real>() -> T {
    DensityMatrix::<T>::pure([cr(T::one()), cr(T::zero()), cr(T::zero()), cr(T::zero())]).purity()
}
