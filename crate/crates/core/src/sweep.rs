//! Two-parameter landscape of the initial purity-decay rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, Control, HamiltonianParams};
use crate::noise::NoiseModel;
use crate::purity::{initial_purity_slope, InitialStateSet};
use crate::redfield::{Dynamics, TensorConvention};
use crate::spectrum::{classify_energies, eigensystem, Degeneracy};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub control: Control,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SweepAxis {
    pub fn value(&self, i: usize) -> f64 {
        if self.points == 1 {
            return self.min;
        }
        // Endpoint-exact so symmetric grids contain 0 exactly.
        let f = i as f64 / (self.points - 1) as f64;
        self.min * (1.0 - f) + self.max * f
    }
}

/// How a third coupling is fixed from the swept pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", deny_unknown_fields)]
pub enum Closure {
    #[default]
    None,
    /// `control = +sqrt(norm^2 - (other couplings)^2)`; cells where the
    /// radicand is negative are infeasible.
    Norm { control: Control, norm: f64 },
}

fn d_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub x: SweepAxis,
    pub y: SweepAxis,
    #[serde(default)]
    pub base: HamiltonianParams<f64>,
    #[serde(default)]
    pub closure: Closure,
    #[serde(default = "d_tol")]
    pub degeneracy_tol: f64,
}

impl SweepGrid {
    /// `(Jy, Jz)` over `[-1, 1]^2` on 41x41 points with `|J| = 1`,
    /// `Delta_1 = Delta_2 = sqrt(0.48)` and zero bias. The exact double
    /// degeneracies `(Jy, Jz) = (+-0.6, +-0.8), (+-0.8, +-0.6)` are grid
    /// points.
    pub fn fig1() -> Self {
        let d = 0.48f64.sqrt();
        SweepGrid {
            x: SweepAxis { control: Control::Jy, min: -1.0, max: 1.0, points: 41 },
            y: SweepAxis { control: Control::Jz, min: -1.0, max: 1.0, points: 41 },
            base: HamiltonianParams { delta1: d, delta2: d, ..HamiltonianParams::zero() },
            closure: Closure::Norm { control: Control::Jx, norm: 1.0 },
            degeneracy_tol: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in [&self.x, &self.y] {
            if a.points == 0 || !a.min.is_finite() || !a.max.is_finite() || a.min > a.max {
                return Err(Error::InvalidParameter(format!("bad sweep axis for {}", a.control)));
            }
        }
        if self.x.control == self.y.control {
            return Err(Error::InvalidParameter("swept controls must differ".into()));
        }
        if let Closure::Norm { control, norm } = self.closure {
            let couplings = [Control::Jx, Control::Jy, Control::Jz];
            if !couplings.contains(&control) || control == self.x.control || control == self.y.control {
                return Err(Error::InvalidParameter("closure control must be an unswept coupling".into()));
            }
            if !(norm >= 0.0) {
                return Err(Error::InvalidParameter("closure norm must be >= 0".into()));
            }
        }
        if !(self.degeneracy_tol > 0.0) {
            return Err(Error::InvalidParameter("degeneracy tolerance must be > 0".into()));
        }
        self.base.validate()
    }

    /// Parameters at a cell, or `None` if the closure has no real solution.
    pub fn params_at(&self, ix: usize, iy: usize) -> Option<HamiltonianParams<f64>> {
        let mut p = self.base;
        p.set(self.x.control, self.x.value(ix));
        p.set(self.y.control, self.y.value(iy));
        if let Closure::Norm { control, norm } = self.closure {
            let others: f64 = [Control::Jx, Control::Jy, Control::Jz]
                .into_iter()
                .filter(|&c| c != control)
                .map(|c| p.get(c).powi(2))
                .sum();
            let r = norm * norm - others;
            if r < -1e-12 {
                return None;
            }
            p.set(control, r.max(0.0).sqrt());
        }
        Some(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    pub feasible: bool,
    /// `|dP/dt|` at `t = 0`; NaN when infeasible or failed.
    pub rate: f64,
    pub class: Option<Degeneracy>,
    pub min_gap: f64,
    /// `(E2 - E1)^2 + (E4 - E3)^2`.
    pub double_gap: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub cells: Vec<SweepCell>,
}

fn eval_cell(grid: &SweepGrid, nm: &NoiseModel<f64>, set: &InitialStateSet<f64>, ix: usize, iy: usize) -> SweepCell {
    let mut cell = SweepCell {
        ix,
        iy,
        x: grid.x.value(ix),
        y: grid.y.value(iy),
        feasible: false,
        rate: f64::NAN,
        class: None,
        min_gap: f64::NAN,
        double_gap: f64::NAN,
        error: None,
    };
    let Some(p) = grid.params_at(ix, iy) else {
        cell.error = Some("infeasible".into());
        return cell;
    };
    cell.feasible = true;
    let run = || -> Result<(f64, crate::spectrum::DegeneracyReport)> {
        let h = build_hamiltonian(&p)?;
        let es = eigensystem(&h, grid.degeneracy_tol)?;
        let rep = classify_energies(&es.energies, grid.degeneracy_tol);
        let d = Dynamics::new(&h, nm, TensorConvention::Standard)?;
        Ok((initial_purity_slope(&d, set).abs(), rep))
    };
    match run() {
        Ok((rate, rep)) => {
            cell.rate = rate;
            cell.class = Some(rep.classification);
            cell.min_gap = rep.min_gap;
            cell.double_gap = rep.double_gap_measure();
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Evaluates every cell (in parallel on the current rayon pool); cells are
/// returned in row-major `(ix, iy)` order regardless of scheduling.
pub fn sweep(grid: &SweepGrid, nm: &NoiseModel<f64>) -> Result<SweepResult> {
    grid.validate()?;
    nm.validate()?;
    let set = InitialStateSet::standard();
    let ny = grid.y.points;
    let cells = (0..grid.x.points * ny).into_par_iter().map(|k| eval_cell(grid, nm, &set, k / ny, k % ny)).collect();
    Ok(SweepResult { grid: grid.clone(), cells })
}

/// Serial reference implementation (used to check scheduling independence).
pub fn sweep_serial(grid: &SweepGrid, nm: &NoiseModel<f64>) -> Result<SweepResult> {
    grid.validate()?;
    nm.validate()?;
    let set = InitialStateSet::standard();
    let ny = grid.y.points;
    let cells = (0..grid.x.points * ny).map(|k| eval_cell(grid, nm, &set, k / ny, k % ny)).collect();
    Ok(SweepResult { grid: grid.clone(), cells })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub min_rate: f64,
    /// Cells within relative `1e-9` of the minimal rate.
    pub argmin: Vec<(usize, usize)>,
    /// Cells within `1e-12` of the minimal double-gap measure.
    pub min_double_gap_cells: Vec<(usize, usize)>,
    pub argmin_matches_double: bool,
    pub single_cells: usize,
    pub nondegenerate_cells: usize,
    pub single_max_rate: f64,
    pub single_mean_rate: f64,
    pub nondegenerate_median_rate: f64,
    /// Every singly degenerate cell beats the non-degenerate median.
    pub single_beats_median: bool,
}

pub fn summarize(res: &SweepResult) -> SweepSummary {
    let ok: Vec<&SweepCell> = res.cells.iter().filter(|c| c.rate.is_finite()).collect();
    let min_rate = ok.iter().map(|c| c.rate).fold(f64::INFINITY, f64::min);
    let min_dg = ok.iter().map(|c| c.double_gap).fold(f64::INFINITY, f64::min);
    let argmin: Vec<_> =
        ok.iter().filter(|c| c.rate <= min_rate * (1.0 + 1e-9) + 1e-300).map(|c| (c.ix, c.iy)).collect();
    let min_double_gap_cells: Vec<_> =
        ok.iter().filter(|c| c.double_gap <= min_dg + 1e-12).map(|c| (c.ix, c.iy)).collect();
    let single: Vec<f64> = ok.iter().filter(|c| c.class == Some(Degeneracy::Single)).map(|c| c.rate).collect();
    let mut non: Vec<f64> = ok.iter().filter(|c| c.class == Some(Degeneracy::None)).map(|c| c.rate).collect();
    non.sort_by(f64::total_cmp);
    let median = match non.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => non[n / 2],
        n => 0.5 * (non[n / 2 - 1] + non[n / 2]),
    };
    let single_max = single.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let single_mean = single.iter().sum::<f64>() / single.len() as f64;
    SweepSummary {
        min_rate,
        argmin_matches_double: !argmin.is_empty() && argmin == min_double_gap_cells,
        argmin,
        min_double_gap_cells,
        single_cells: single.len(),
        nondegenerate_cells: non.len(),
        single_max_rate: single_max,
        single_mean_rate: single_mean,
        nondegenerate_median_rate: median,
        single_beats_median: !single.is_empty() && single_max < median,
    }
}
