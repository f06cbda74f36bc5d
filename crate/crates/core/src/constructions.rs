//! Target gates, the CNOT matrix-logarithm family, the five-pulse reference
//! protocol and the degeneracy-tuned one-pulse constructions.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, pauli_tensor, Axis, HamiltonianParams};
use crate::linalg::{expm_hermitian, require_hermitian, CMat4, Mat2};
use crate::metrics::{makhlin_invariants, GateTarget, MakhlinInvariants};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::scalar::{clit, cr, Real, C};
use crate::spectrum::Degeneracy;

/// Gates addressable by name.
pub const TARGET_NAMES: [&str; 7] = ["CNOT", "B", "SWAP", "SQRT_SWAP", "IDENTITY", "RNOT", "QFT"];

/// `exp(i (pi/4) XX + i (pi/8) YY)`, the canonical representative of the
/// class with `G1 = G2 = 0`.
pub fn bgate_matrix<T: Real>() -> CMat4<T> {
    let h = pauli_tensor::<T>(Axis::X, Axis::X).scale(T::lit(FRAC_PI_4))
        + pauli_tensor::<T>(Axis::Y, Axis::Y).scale(T::lit(PI / 8.0));
    expm_hermitian(&h, -T::one())
}

pub fn target_matrix<T: Real>(name: &str) -> Result<CMat4<T>> {
    let z = C::<T>::from(T::zero());
    let o = C::<T>::from(T::one());
    let m = match name.to_ascii_uppercase().as_str() {
        "CNOT" => CMat4::permutation([0, 1, 3, 2]),
        "SWAP" => CMat4::permutation([0, 2, 1, 3]),
        "IDENTITY" | "I" => CMat4::identity(),
        "B" | "BGATE" => bgate_matrix(),
        "SQRT_SWAP" | "SQRTSWAP" => {
            let (p, q) = (clit(0.5, 0.5), clit(0.5, -0.5));
            CMat4([[o, z, z, z], [z, p, q, z], [z, q, p, z], [z, z, z, o]])
        }
        // Controlled square root of NOT.
        "RNOT" => {
            let (p, q) = (clit(0.5, 0.5), clit(0.5, -0.5));
            CMat4([[o, z, z, z], [z, o, z, z], [z, z, p, q], [z, z, q, p]])
        }
        // Two-qubit discrete Fourier transform on basis indices 0..3.
        "QFT" => {
            let mut m = CMat4::zeros();
            for r in 0..4 {
                for c in 0..4 {
                    m[(r, c)] = Complex::from_polar(T::lit(0.5), T::lit(FRAC_PI_2 * (r * c) as f64));
                }
            }
            m
        }
        _ => return Err(Error::UnknownGate(name.to_string())),
    };
    Ok(m)
}

pub fn target_gate<T: Real>(name: &str) -> Result<GateTarget<T>> {
    let m = target_matrix(name)?;
    GateTarget::new(name.to_ascii_uppercase(), m)
}

/// One branch of the CNOT logarithm `C (A + B) C^-1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBranch {
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub phi0: f64,
    /// Rotation vector of the SU(2) factor on the upper block.
    pub phi: [f64; 3],
    /// `sigma_x` rotation angle on the lower block.
    pub phi1: f64,
}

impl LogBranch {
    pub fn principal() -> Self {
        LogBranch { n1: 0, n2: 0, n3: 0, phi0: 0.0, phi: [0.0; 3], phi1: 0.0 }
    }
}

fn block_diag<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> CMat4<T> {
    let mut m = CMat4::zeros();
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = a.0[r][c];
            m[(r + 2, c + 2)] = b.0[r][c];
        }
    }
    m
}

/// The two commuting pieces `(A, B)` of a branch, before the `C` rotation.
pub fn cnot_log_parts<T: Real>(b: &LogBranch) -> (CMat4<T>, CMat4<T>) {
    let h = T::lit(FRAC_PI_2);
    let mut a = CMat4::<T>::from_real([[0.0; 4]; 4]);
    a[(2, 2)] = cr(-h);
    a[(2, 3)] = cr(h);
    a[(3, 2)] = cr(h);
    a[(3, 3)] = cr(-h);
    a = a + CMat4::identity().scale(T::lit(b.phi0));
    let two_pi = T::lit(2.0 * PI);
    let mut bm = CMat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let same_block = (r < 2) == (c < 2);
            let w = if same_block { b.n1 } else { b.n2 };
            bm[(r, c)] = cr(two_pi * T::lit(w as f64));
        }
    }
    bm = bm + CMat4::identity().scale(two_pi * T::lit(b.n3 as f64));
    (a, bm)
}

/// Hermitian generator `H` (angular, units `1/tau`) with
/// `exp(-i t0 H) = exp(-i phi0) CNOT`.
pub fn cnot_log_family<T: Real>(b: &LogBranch, t0: T) -> Result<CMat4<T>> {
    if !(t0 > T::zero()) {
        return Err(Error::InvalidParameter("t0 must be > 0".into()));
    }
    let (a, bm) = cnot_log_parts::<T>(b);
    let c = block_diag(
        &Mat2::su2_rotation(T::one(), b.phi.map(T::lit)),
        &Mat2::su2_rotation(T::lit(b.phi1), [T::one(), T::zero(), T::zero()]),
    );
    let h = (c * (a + bm) * c.adjoint()).scale(T::one() / t0);
    require_hermitian(&h, T::lit(1e-10))?;
    Ok(h)
}

/// A one-pulse construction with its bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneStep {
    pub label: String,
    pub params: HamiltonianParams<f64>,
    /// `phi0` with `exp(i phi0) exp(-i pi H t0)` equal to the target (exact
    /// constructions only).
    pub global_phase: f64,
    pub target: String,
    pub expected: Degeneracy,
}

impl OneStep {
    pub fn unitary(&self) -> Result<CMat4<f64>> {
        let u = crate::metrics::pulse_unitary(&self.params)?;
        Ok(u.scale_c(Complex::from_polar(1.0, self.global_phase)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CnotVariant {
    /// `eps2 = Jz = -0.66` as published.
    Printed,
    /// `eps2 = Jz = -sqrt(7)/4`, exact.
    Refined,
}

pub fn onestep_cnot(variant: CnotVariant) -> OneStep {
    let r = match variant {
        CnotVariant::Printed => -0.66,
        CnotVariant::Refined => -(7f64.sqrt()) / 4.0,
    };
    OneStep {
        label: format!("cnot-{}", if variant == CnotVariant::Printed { "printed" } else { "refined" }),
        params: HamiltonianParams { delta2: 1.5, eps1: -0.25, eps2: r, jz: r, ..HamiltonianParams::zero() },
        global_phase: -FRAC_PI_4,
        target: "CNOT".into(),
        expected: Degeneracy::Single,
    }
}

/// Amplitude used to convert rotation angles of the five-pulse protocol into
/// durations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AmplitudeConvention {
    /// Every pulse runs at angular amplitude `1/tau`.
    Unit,
    /// Every pulse runs at the largest `|E|` (angular) of the refined one-step
    /// CNOT Hamiltonian, `2.25 pi / tau`.
    EqualSpectralNorm,
    /// Explicit angular amplitude in units of `1/tau`.
    Custom(f64),
}

impl AmplitudeConvention {
    pub fn amplitude(self) -> f64 {
        match self {
            AmplitudeConvention::Unit => 1.0,
            AmplitudeConvention::EqualSpectralNorm => 2.25 * PI,
            AmplitudeConvention::Custom(a) => a,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseStep {
    pub label: String,
    /// Unit-norm generator `G` of `exp(-i angle G)`.
    pub generator: CMat4<f64>,
    pub angle: f64,
    /// Hamiltonian in units of `pi/tau` that realizes the step.
    pub hamiltonian: CMat4<f64>,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    pub steps: Vec<PulseStep>,
    /// Angular amplitude in units of `1/tau`.
    pub amplitude: f64,
}

impl PulseSequence {
    /// Appends `exp(-i angle G)` run at the sequence amplitude.
    pub fn push(&mut self, label: &str, generator: CMat4<f64>, angle: f64) -> Result<()> {
        require_hermitian(&generator, 1e-12)?;
        if angle == 0.0 {
            return Err(Error::InvalidParameter("zero-angle pulse".into()));
        }
        let duration = angle.abs() / self.amplitude;
        let hamiltonian = generator.scale(angle.signum() * self.amplitude / PI);
        self.steps.push(PulseStep { label: label.into(), generator, angle, hamiltonian, duration });
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    /// Time-ordered product `U_n ... U_1`.
    pub fn unitary(&self) -> CMat4<f64> {
        self.steps.iter().fold(CMat4::identity(), |u, s| expm_hermitian(&s.hamiltonian, PI * s.duration) * u)
    }

    /// `(H, duration)` pairs for [`crate::purity::sequence_purity`].
    pub fn segments(&self) -> Vec<(CMat4<f64>, f64)> {
        self.steps.iter().map(|s| (s.hamiltonian, s.duration)).collect()
    }
}

/// Hadamard-like rotation on qubit 2, two-qubit `ZZ` phase and local `Z`
/// corrections, in time order. The product equals CNOT up to a global phase.
pub fn standard_cnot_protocol(convention: AmplitudeConvention) -> Result<PulseSequence> {
    let amplitude = convention.amplitude();
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter("amplitude bound must be > 0".into()));
    }
    let mut seq = PulseSequence { steps: Vec::with_capacity(5), amplitude };
    let had = (pauli_tensor(Axis::I, Axis::X) + pauli_tensor(Axis::I, Axis::Z)).scale(FRAC_1_SQRT_2);
    seq.push("h2", had, FRAC_PI_2)?;
    seq.push("zz", pauli_tensor(Axis::Z, Axis::Z), FRAC_PI_4)?;
    seq.push("z2", pauli_tensor(Axis::I, Axis::Z), -FRAC_PI_4)?;
    seq.push("z1", pauli_tensor(Axis::Z, Axis::I), -FRAC_PI_4)?;
    seq.push("h2", had, FRAC_PI_2)?;
    Ok(seq)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeSign {
    /// `Jy, Jz = (sqrt(J^2+D^2) +- sqrt(J^2-D^2)) / sqrt2`, so `Jy Jz = D^2`.
    #[default]
    Corrected,
    /// Both couplings with the minus sign, as typeset.
    Printed,
}

/// Couplings of a doubly degenerate exchange pulse with `|J| = j`.
pub fn class_pulse_couplings(j: f64, delta: f64, sign: ExchangeSign) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !(j >= delta) || !j.is_finite() {
        return Err(Error::Domain(format!("need J >= Delta > 0, got J = {j}, Delta = {delta}")));
    }
    let a = (j * j + delta * delta).sqrt();
    let b = (j * j - delta * delta).sqrt();
    let jz = (a - b) * FRAC_1_SQRT_2;
    let jy = match sign {
        ExchangeSign::Corrected => (a + b) * FRAC_1_SQRT_2,
        ExchangeSign::Printed => jz,
    };
    Ok((jy, jz))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassPulse {
    /// Parameters with `t0` set to the best duration found.
    pub params: HamiltonianParams<f64>,
    /// `sqrt(|G1 - G1*|^2 + |G2 - G2*|^2)` at that duration.
    pub invariant_gap: f64,
    /// Local minima of the gap over the scanned durations, `(t0, gap)`.
    pub candidates: Vec<(f64, f64)>,
}

/// Scans `t0` over `[t_min, t_max]` for the duration whose invariants are
/// closest to `target`, refining each local minimum by golden-section search.
/// Results are sorted by gap, then duration.
pub fn search_duration(
    p: &HamiltonianParams<f64>,
    target: &MakhlinInvariants<f64>,
    t_min: f64,
    t_max: f64,
    grid: usize,
) -> Result<Vec<(f64, f64)>> {
    let h = build_hamiltonian(p)?;
    let gap = |t: f64| makhlin_invariants(&expm_hermitian(&h, PI * t)).gap_sq(target);
    let ts: Vec<f64> = (0..=grid).map(|i| t_min + (t_max - t_min) * i as f64 / grid as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| gap(t)).collect();
    let mut out = Vec::new();
    for i in 0..vals.len() {
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = if i + 1 == vals.len() { f64::INFINITY } else { vals[i + 1] };
        if vals[i] <= left && vals[i] < right {
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(ts.len() - 1)];
            let t = golden_section(&gap, lo, hi, 1e-13);
            out.push((t, gap(t).sqrt()));
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    Ok(out)
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Doubly degenerate exchange pulse (`Jx = 0`, `Jy Jz = Delta^2`,
/// `Delta_1 = Delta_2 = Delta`, zero bias) with the duration that brings it
/// closest to the CNOT class. On this manifold the class is approached only
/// as `J / Delta` grows, so the residual gap is reported rather than assumed
/// to vanish.
pub fn cnot_class_pulse(j: f64, delta: f64, sign: ExchangeSign) -> Result<ClassPulse> {
    let (jy, jz) = class_pulse_couplings(j, delta, sign)?;
    let p = HamiltonianParams { delta1: delta, delta2: delta, jy, jz, ..HamiltonianParams::zero() };
    let target = makhlin_invariants(&target_matrix::<f64>("CNOT")?);
    let candidates = search_duration(&p, &target, 0.01, 3.0, 3000)?;
    // The gap is periodic in t0, so equal minima recur; take the shortest.
    let best = candidates[0].1;
    let (t0, invariant_gap) = candidates
        .iter()
        .filter(|c| c.1 <= best * (1.0 + 1e-6) + 1e-12)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .copied()
        .unwrap();
    Ok(ClassPulse { params: p.with_t0(t0), invariant_gap, candidates })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BGateVariant {
    /// `Jy = 0.58`, `Jz = 1.71`, `t0 = 1` as published.
    Printed,
    /// `Jy = 0.58`, `Jz = 1/0.58` (exact double degeneracy), `t0 = 1`.
    Refined,
    /// `Jz = 1/Jy` with `(Jy, t0)` re-optimized onto the B class.
    Optimized,
}

/// Starting point of the B-class refinement, accurate to about 1e-8.
pub const BGATE_OPTIMUM: (f64, f64) = (0.64359425, 1.08083842);

/// Minimizes the invariant gap to the B class over `(Jy, t0)` with
/// `Delta_1 = Delta_2 = 1`, `Jz = 1/Jy`.
pub fn refine_bclass(jy0: f64, t00: f64) -> Result<(f64, f64, f64)> {
    let b = makhlin_invariants(&bgate_matrix::<f64>());
    let f = |x: &[f64]| {
        let p = HamiltonianParams {
            delta1: 1.0,
            delta2: 1.0,
            jy: x[0],
            jz: 1.0 / x[0],
            t0: x[1],
            ..HamiltonianParams::zero()
        };
        match crate::metrics::pulse_unitary(&p) {
            Ok(u) => makhlin_invariants(&u).gap_sq(&b),
            Err(_) => f64::INFINITY,
        }
    };
    let opts = NelderMeadOptions { max_iter: 4000, xtol: 1e-14, ftol: 1e-30, initial_step: 0.01 };
    let m = nelder_mead(f, &[jy0, t00], &[0.05, 0.05], &[20.0, 5.0], &opts);
    Ok((m.x[0], m.x[1], m.f.sqrt()))
}

pub fn onestep_bgate(variant: BGateVariant) -> Result<OneStep> {
    let (jy, jz, t0) = match variant {
        BGateVariant::Printed => (0.58, 1.71, 1.0),
        BGateVariant::Refined => (0.58, 1.0 / 0.58, 1.0),
        BGateVariant::Optimized => {
            let (jy, t0, _) = refine_bclass(BGATE_OPTIMUM.0, BGATE_OPTIMUM.1)?;
            (jy, 1.0 / jy, t0)
        }
    };
    let label = match variant {
        BGateVariant::Printed => "bgate-printed",
        BGateVariant::Refined => "bgate-refined",
        BGateVariant::Optimized => "bgate-optimized",
    };
    Ok(OneStep {
        label: label.into(),
        params: HamiltonianParams { delta1: 1.0, delta2: 1.0, jy, jz, t0, ..HamiltonianParams::zero() },
        global_phase: 0.0,
        target: "B".into(),
        expected: Degeneracy::Double,
    })
}
