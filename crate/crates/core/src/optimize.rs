//! Degeneracy-constrained search over pulse parameters: a bounded
//! Nelder-Mead simplex restarted from a shifted Halton sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::target_gate;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, Control, HamiltonianParams};
use crate::linalg::{expm_hermitian, CMat4};
use crate::metrics::{distances, makhlin_invariants, report, GateReport, GateTarget};
use crate::noise::NoiseModel;
use crate::purity::{gate_purity, PurityOptions};
use crate::spectrum::{classify_energies, eigensystem, DegeneracyReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the simplex diameter falls below this.
    pub xtol: f64,
    /// Stop when the spread of objective values falls below this.
    pub ftol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { max_iter: 2000, xtol: 1e-12, ftol: 1e-24, initial_step: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead with standard coefficients; trial points are clamped into
/// `[lower, upper]`. Non-finite objective values count as `+inf`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    simplex.push(start.clone());
    for i in 0..n {
        let mut v = start.clone();
        let width = upper[i] - lower[i];
        let h = if width.is_finite() && width > 0.0 { opts.initial_step * width } else { opts.initial_step };
        v[i] = if v[i] + h <= upper[i] { v[i] + h } else { v[i] - h };
        clamp(&mut v);
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        fv = idx.iter().map(|&i| fv[i]).collect();

        let diam = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diam < opts.xtol || (fv[n] - fv[0]).abs() <= opts.ftol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut c = vec![0.0; n];
        for v in &simplex[..n] {
            for i in 0..n {
                c[i] += v[i] / n as f64;
            }
        }
        let along = |t: f64| {
            let mut x: Vec<f64> = (0..n).map(|i| c[i] + t * (simplex[n][i] - c[i])).collect();
            clamp(&mut x);
            x
        };
        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < fv[0] {
            let xe = along(-gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let x = along(-rho);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(rho);
            let v = eval(&x);
            (x, v)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for k in 1..=n {
            let mut x: Vec<f64> = (0..n).map(|i| simplex[0][i] + sigma * (simplex[k][i] - simplex[0][i])).collect();
            clamp(&mut x);
            fv[k] = eval(&x);
            simplex[k] = x;
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap();
    Minimum { x: simplex[best].clone(), f: fv[best], iterations, converged }
}

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// First `count` points of the Halton sequence in `[0,1)^dim` (index 1
/// onward), shifted modulo 1 by a seeded random vector.
pub fn shifted_halton(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} search dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64).map(|i| (0..dim).map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract()).collect()).collect()
}

/// What a free variable drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarTarget {
    Control(Control),
    T0,
}

impl std::str::FromStr for VarTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "t0" {
            Ok(VarTarget::T0)
        } else {
            s.parse().map(VarTarget::Control)
        }
    }
}

/// A search variable; listing several controls ties them to one value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeVar {
    pub controls: Vec<String>,
    pub lower: f64,
    pub upper: f64,
}

impl FreeVar {
    pub fn new(controls: &[&str], lower: f64, upper: f64) -> Self {
        FreeVar { controls: controls.iter().map(|s| s.to_string()).collect(), lower, upper }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Phase-optimized distance to the target matrix.
    #[default]
    Exact,
    /// Distance between Makhlin invariants (local-equivalence class).
    Class,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneracyConstraint {
    #[default]
    None,
    Single,
    Double,
}

impl DegeneracyConstraint {
    /// Squared gap of the constrained level pair(s).
    pub fn measure(self, rep: &DegeneracyReport) -> f64 {
        match self {
            DegeneracyConstraint::None => 0.0,
            DegeneracyConstraint::Single => rep.single_gap_measure(),
            DegeneracyConstraint::Double => rep.double_gap_measure(),
        }
    }
}

fn d_one() -> f64 {
    1.0
}
fn d_penalty() -> f64 {
    100.0
}
fn d_restarts() -> usize {
    16
}
fn d_iter() -> usize {
    3000
}
fn d_threshold() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    /// Values of the frozen controls (and `t0` unless it is free).
    #[serde(default)]
    pub base: HamiltonianParams<f64>,
    pub free: Vec<FreeVar>,
    pub target: String,
    #[serde(default)]
    pub match_mode: MatchMode,
    #[serde(default)]
    pub constraint: DegeneracyConstraint,
    /// Fixed `sqrt(Jx^2 + Jy^2 + Jz^2)`, enforced by penalty.
    #[serde(default)]
    pub coupling_norm: Option<f64>,
    #[serde(default = "d_one")]
    pub distance_weight: f64,
    /// Weight of `1 - P(t0)`; zero skips the noisy propagation.
    #[serde(default)]
    pub purity_weight: f64,
    #[serde(default = "d_penalty")]
    pub penalty_weight: f64,
    #[serde(default)]
    pub noise: NoiseModel<f64>,
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default = "d_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    /// Success threshold on the distance (or invariant gap).
    #[serde(default = "d_threshold")]
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeResult {
    pub params: HamiltonianParams<f64>,
    pub objective: f64,
    /// Phase-optimized distance (exact mode) or invariant gap (class mode).
    pub distance: f64,
    pub invariant_gap: f64,
    pub degeneracy: DegeneracyReport,
    pub degeneracy_measure: f64,
    pub converged: bool,
    /// Best objective after each restart (non-increasing).
    pub best_by_restart: Vec<f64>,
    pub report: GateReport,
}

struct Problem {
    targets: Vec<Vec<VarTarget>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    target: GateTarget<f64>,
}

impl SearchSpec {
    fn problem(&self) -> Result<Problem> {
        if self.free.is_empty() {
            return Err(Error::Infeasible("no free variables".into()));
        }
        let mut targets = Vec::new();
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for v in &self.free {
            if !(v.lower.is_finite() && v.upper.is_finite() && v.lower <= v.upper) {
                return Err(Error::Infeasible(format!("bad bounds [{}, {}]", v.lower, v.upper)));
            }
            if v.controls.is_empty() {
                return Err(Error::Infeasible("free variable without controls".into()));
            }
            let t = v.controls.iter().map(|s| s.parse()).collect::<Result<Vec<VarTarget>>>()?;
            if t.contains(&VarTarget::T0) && v.lower <= 0.0 {
                return Err(Error::Infeasible("t0 lower bound must be > 0".into()));
            }
            targets.push(t);
            lower.push(v.lower);
            upper.push(v.upper);
        }
        if let Some(j) = self.coupling_norm {
            if !(j >= 0.0) {
                return Err(Error::Infeasible("coupling norm must be >= 0".into()));
            }
        }
        let target = target_gate(&self.target)?;
        Ok(Problem { targets, lower, upper, target })
    }

    fn apply(&self, prob: &Problem, x: &[f64]) -> HamiltonianParams<f64> {
        let mut p = self.base;
        p.bounds = None;
        for (ts, &v) in prob.targets.iter().zip(x) {
            for t in ts {
                match *t {
                    VarTarget::Control(c) => p.set(c, v),
                    VarTarget::T0 => p.t0 = v,
                }
            }
        }
        p
    }

    fn objective(&self, prob: &Problem, x: &[f64]) -> Option<(f64, f64, f64)> {
        let p = self.apply(prob, x);
        let h = build_hamiltonian(&p).ok()?;
        let u = expm_hermitian(&h, std::f64::consts::PI * p.t0);
        let gap = makhlin_invariants(&u).gap_sq(&prob.target.invariants).sqrt();
        let dist = match self.match_mode {
            MatchMode::Exact => distances(&u, &prob.target.matrix).1,
            MatchMode::Class => gap,
        };
        let mut obj = self.distance_weight * dist * dist;
        if self.constraint != DegeneracyConstraint::None {
            let es = eigensystem(&h, 1e-8).ok()?;
            obj += self.penalty_weight * self.constraint.measure(&classify_energies(&es.energies, 1e-8));
        }
        if let Some(j) = self.coupling_norm {
            obj += self.penalty_weight * (p.coupling_norm() - j).powi(2);
        }
        if self.purity_weight > 0.0 {
            let opts =
                PurityOptions { samples: 1, check_convergence: false, check_validity: false, ..Default::default() };
            let tr = gate_purity(&p, &self.noise, p.t0, &opts).ok()?;
            obj += self.purity_weight * tr.loss();
        }
        Some((obj, dist, gap))
    }
}

fn polish(f: impl Fn(&[f64]) -> f64, x0: &[f64], lo: &[f64], hi: &[f64], max_iter: usize) -> Minimum {
    let mut best = nelder_mead(&f, x0, lo, hi, &NelderMeadOptions { max_iter, ..Default::default() });
    let mut step = 0.01;
    for _ in 0..4 {
        let m =
            nelder_mead(&f, &best.x, lo, hi, &NelderMeadOptions { max_iter, initial_step: step, ..Default::default() });
        let improved = m.f < best.f;
        if improved {
            best = Minimum { iterations: best.iterations + m.iterations, ..m };
        }
        if !improved || best.f == 0.0 {
            break;
        }
        step *= 0.1;
    }
    best
}

/// Runs the restarted search. Restarts are evaluated in parallel but combined
/// in index order, so the result depends only on the spec and its seed.
pub fn optimize(spec: &SearchSpec) -> Result<OptimizeResult> {
    spec.noise.validate()?;
    let prob = spec.problem()?;
    let dim = prob.lower.len();
    let starts = shifted_halton(spec.restarts.max(1), dim, spec.seed);
    let f = |x: &[f64]| spec.objective(&prob, x).map_or(f64::INFINITY, |v| v.0);
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|u| {
            let x0: Vec<f64> = (0..dim).map(|i| prob.lower[i] + u[i] * (prob.upper[i] - prob.lower[i])).collect();
            polish(f, &x0, &prob.lower, &prob.upper, spec.max_iter)
        })
        .collect();

    let mut best: Option<&Minimum> = None;
    let mut best_by_restart = Vec::with_capacity(runs.len());
    for m in &runs {
        if best.is_none_or(|b| m.f < b.f) {
            best = Some(m);
        }
        best_by_restart.push(best.unwrap().f);
    }
    let best = best.unwrap();
    if !best.f.is_finite() {
        return Err(Error::Infeasible("objective is not finite anywhere on the starts".into()));
    }
    let params = spec.apply(&prob, &best.x);
    let (objective, distance, invariant_gap) = spec.objective(&prob, &best.x).unwrap();
    let es = eigensystem(&build_hamiltonian(&params)?, 1e-8)?;
    let degeneracy = classify_energies(&es.energies, 1e-6);
    let degeneracy_measure = spec.constraint.measure(&degeneracy);
    let converged =
        distance < spec.threshold && (spec.constraint == DegeneracyConstraint::None || degeneracy_measure < 1e-6);
    let rep = report(&params, &prob.target, &spec.noise, &PurityOptions::default())?;
    Ok(OptimizeResult {
        params,
        objective,
        distance,
        invariant_gap,
        degeneracy,
        degeneracy_measure,
        converged,
        best_by_restart,
        report: rep,
    })
}

/// Unitary of a parameter set (helper for callers that post-process results).
pub fn unitary_of(p: &HamiltonianParams<f64>) -> Result<CMat4<f64>> {
    crate::metrics::pulse_unitary(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(
            f,
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &NelderMeadOptions { initial_step: 0.05, ..Default::default() },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let m = nelder_mead(|x: &[f64]| x[0], &[0.5], &[0.2], &[1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 0.2).abs() < 1e-10);
    }

    #[test]
    fn halton_is_deterministic_and_in_range() {
        let a = shifted_halton(20, 3, 7);
        assert_eq!(a, shifted_halton(20, 3, 7));
        assert_ne!(a, shifted_halton(20, 3, 8));
        assert!(a.iter().flatten().all(|&x| (0.0..1.0).contains(&x)));
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn bad_spec_is_infeasible() {
        let spec = SearchSpec {
            base: HamiltonianParams::zero(),
            free: vec![FreeVar::new(&["jx"], 1.0, 0.0)],
            target: "CNOT".into(),
            match_mode: MatchMode::Exact,
            constraint: DegeneracyConstraint::None,
            coupling_norm: None,
            distance_weight: 1.0,
            purity_weight: 0.0,
            penalty_weight: 100.0,
            noise: NoiseModel::default(),
            restarts: 2,
            max_iter: 10,
            seed: 0,
            threshold: 1e-6,
        };
        assert!(matches!(optimize(&spec), Err(Error::Infeasible(_))));
    }
}
