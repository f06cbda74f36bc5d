//! Detuning tolerance around a gate optimum.
//!
//! The response is the excess target-referenced loss
//! `E(d) = L(p (1 + d)) - L(p)`, with `L = 1 - (1/16) sum_j Tr(U rho_j U^dag rho_j(t0))`
//! and `U` the ideal gate (the target, or the pulse's own noiseless unitary for
//! class-equivalent constructions). Under noise `L(p)` itself is finite, so
//! only the excess is meaningful. `L` ignores global phases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Control, HamiltonianParams};
use crate::linalg::CMat4;
use crate::metrics::{distances, pulse_unitary};
use crate::noise::NoiseModel;
use crate::purity::{gate_purity, mean_target_overlap, PurityOptions};

fn d_step() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityOptions {
    /// Allowed excess loss.
    pub budget: f64,
    /// Relative detuning used for the finite differences.
    #[serde(default = "d_step")]
    pub step: f64,
    /// Controls to probe; empty means every nonzero control.
    #[serde(default)]
    pub controls: Vec<Control>,
}

impl SensitivityOptions {
    pub fn with_budget(budget: f64) -> Self {
        SensitivityOptions { budget, step: d_step(), controls: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSensitivity {
    pub control: Control,
    pub value: f64,
    /// `c` in `E(d) ~ c d^2` (noisy response).
    pub loss_quadratic: f64,
    /// Odd part of the noisy response, `(E(h) - E(-h)) / 2h`.
    pub loss_linear: f64,
    /// First derivative of the noiseless loss; vanishes at an exact optimum.
    pub noiseless_linear: f64,
    /// `k` in `dist(d)^2 ~ k d^2`, distance to the optimum's unitary.
    pub distance_quadratic: f64,
    /// Relative detuning `sqrt(budget / c)`.
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub budget: f64,
    pub baseline_loss: f64,
    pub controls: Vec<ControlSensitivity>,
    /// Smallest radius over the probed controls.
    pub radius: f64,
    pub limiting_control: Control,
    /// `(E(r) + E(-r)) / (E(r/2) + E(-r/2))` for the limiting control; 4 for a
    /// purely quadratic response.
    pub halving_ratio: f64,
    /// Linear terms are negligible against the budget at the radius.
    pub optimal: bool,
}

struct Probe<'a> {
    p: HamiltonianParams<f64>,
    ideal: CMat4<f64>,
    nm: &'a NoiseModel<f64>,
    opts: PurityOptions<f64>,
}

impl Probe<'_> {
    fn detuned(&self, c: Control, d: f64) -> HamiltonianParams<f64> {
        let mut q = self.p;
        q.set(c, self.p.get(c) * (1.0 + d));
        q
    }

    fn loss(&self, q: &HamiltonianParams<f64>, nm: &NoiseModel<f64>) -> Result<f64> {
        let tr = gate_purity(q, nm, q.t0, &self.opts)?;
        Ok(1.0 - mean_target_overlap(&tr.final_states, &self.ideal))
    }
}

/// `ideal = None` measures against the noiseless unitary of `p` itself.
pub fn sensitivity(
    p: &HamiltonianParams<f64>,
    ideal: Option<&CMat4<f64>>,
    nm: &NoiseModel<f64>,
    opts: &SensitivityOptions,
) -> Result<SensitivityReport> {
    if !(opts.budget > 0.0) || !(opts.step > 0.0) {
        return Err(Error::InvalidParameter("budget and step must be > 0".into()));
    }
    let controls: Vec<Control> = if opts.controls.is_empty() {
        Control::ALL.into_iter().filter(|&c| p.get(c) != 0.0).collect()
    } else {
        opts.controls.clone()
    };
    if controls.is_empty() {
        return Err(Error::InvalidParameter("no nonzero control to detune".into()));
    }
    let probe = Probe {
        p: *p,
        ideal: match ideal {
            Some(u) => *u,
            None => pulse_unitary(p)?,
        },
        nm,
        opts: PurityOptions { samples: 1, ..Default::default() },
    };
    let quiet = NoiseModel::noiseless();
    let base = probe.loss(p, nm)?;
    let d0 = distances(&pulse_unitary(p)?, &probe.ideal).1;
    let h = opts.step;
    let excess = |c: Control, d: f64| -> Result<f64> { Ok(probe.loss(&probe.detuned(c, d), probe.nm)? - base) };

    let mut out = Vec::with_capacity(controls.len());
    for c in controls {
        let (ep, em) = (excess(c, h)?, excess(c, -h)?);
        let (qp, qm) = (probe.detuned(c, h), probe.detuned(c, -h));
        let lin0 = (probe.loss(&qp, &quiet)? - probe.loss(&qm, &quiet)?) / (2.0 * h);
        let dp = distances(&pulse_unitary(&qp)?, &probe.ideal).1;
        let dm = distances(&pulse_unitary(&qm)?, &probe.ideal).1;
        let quad = (ep + em) / (2.0 * h * h);
        out.push(ControlSensitivity {
            control: c,
            value: p.get(c),
            loss_quadratic: quad,
            loss_linear: (ep - em) / (2.0 * h),
            noiseless_linear: lin0,
            distance_quadratic: (dp * dp + dm * dm - 2.0 * d0 * d0) / (2.0 * h * h),
            radius: if quad > 0.0 { (opts.budget / quad).sqrt() } else { f64::INFINITY },
        });
    }
    let lim = out.iter().min_by(|a, b| a.radius.total_cmp(&b.radius)).unwrap();
    let (limiting_control, radius) = (lim.control, lim.radius);
    let halving_ratio = if radius.is_finite() {
        let full = excess(limiting_control, radius)? + excess(limiting_control, -radius)?;
        let half = excess(limiting_control, radius / 2.0)? + excess(limiting_control, -radius / 2.0)?;
        full / half
    } else {
        f64::NAN
    };
    let optimal = out.iter().all(|s| !s.radius.is_finite() || s.noiseless_linear.abs() * radius <= 1e-3 * opts.budget);
    Ok(SensitivityReport {
        budget: opts.budget,
        baseline_loss: base,
        controls: out,
        radius,
        limiting_control,
        halving_ratio,
        optimal,
    })
}

/// Excess loss at a given relative detuning of one control.
pub fn excess_loss(p: &HamiltonianParams<f64>, nm: &NoiseModel<f64>, c: Control, d: f64) -> Result<f64> {
    let probe = Probe { p: *p, ideal: pulse_unitary(p)?, nm, opts: PurityOptions { samples: 1, ..Default::default() } };
    Ok(probe.loss(&probe.detuned(c, d), nm)? - probe.loss(p, nm)?)
}
