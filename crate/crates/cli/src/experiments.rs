//! One function per experiment kind. Each returns the files to write; nothing
//! here touches the filesystem.

use degengate::calibrate::{round_trip_inv_t1, Calibration};
use degengate::constructions::{target_gate, TARGET_NAMES};
use degengate::optimize::{optimize, OptimizeResult};
use degengate::purity::sequence_purity;
use degengate::sensitivity::{sensitivity, SensitivityOptions, SensitivityReport};
use degengate::spectrum::classify_energies;
use degengate::sweep::{summarize, sweep, SweepSummary};
use degengate::{
    build_hamiltonian, eigensystem, gate_distance, gate_purity, makhlin_invariants, DegeneracyReport, Error,
    InitialStateSet, Mat4, Noise, Params, PurityOptions, Trace,
};
use serde::Serialize;

use crate::config::{Experiment, Resolved, RunConfig};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Format, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Human-readable summary for stdout.
    pub summary: String,
    /// Set when files were produced but the run must still exit nonzero.
    pub failure: Option<CliError>,
}

#[derive(Serialize)]
struct Envelope<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    seed: u64,
    config: &'a RunConfig,
    result: R,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    experiment: Experiment,
    format: Format,
    stem: &'a str,
}

impl Ctx<'_> {
    fn report<R: Serialize>(&self, suffix: &str, result: R) -> CliResult<Artifact> {
        let env = Envelope {
            tool: "degengate",
            version: degengate::VERSION,
            experiment: self.experiment.name(),
            seed: self.cfg.seed,
            config: self.cfg,
            result,
        };
        let mut contents =
            serde_json::to_string_pretty(&env).map_err(|e| CliError::Numeric(format!("json encoding: {e}")))?;
        contents.push('\n');
        Ok(Artifact { name: format!("{}_{suffix}.json", self.stem), contents })
    }

    fn table(&self, suffix: &str, t: &Table) -> CliResult<Artifact> {
        Ok(Artifact {
            name: format!("{}_{suffix}.{}", self.stem, self.format.extension()),
            contents: t.render(self.format)?,
        })
    }

    fn first_pulse(&self) -> CliResult<Resolved> {
        self.cfg
            .all_pulses()
            .first()
            .ok_or_else(|| CliError::Config("this experiment needs a [pulse]".into()))?
            .resolve()
    }

    fn purity_options(&self) -> PurityOptions<f64> {
        PurityOptions { dt: self.cfg.time.dt, samples: self.cfg.time.samples, ..Default::default() }
    }
}

/// Runs a resolved config. `stem` prefixes every file name.
pub fn run(cfg: &RunConfig, format: Format, stem: &str) -> CliResult<Outcome> {
    let experiment = cfg.experiment.ok_or_else(|| CliError::Config("no experiment selected".into()))?;
    let ctx = Ctx { cfg, experiment, format, stem };
    match experiment {
        Experiment::Spectrum => spectrum(&ctx),
        Experiment::Purity => purity(&ctx),
        Experiment::Compare => compare(&ctx),
        Experiment::Sweep => run_sweep(&ctx),
        Experiment::Optimize => run_optimize(&ctx),
        Experiment::Invariants => invariants(&ctx),
        Experiment::Sensitivity => run_sensitivity(&ctx),
        Experiment::Calibrate => run_calibrate(&ctx),
        Experiment::Gates => gates(&ctx),
    }
}

fn done(artifacts: Vec<Artifact>, summary: String) -> CliResult<Outcome> {
    Ok(Outcome { artifacts, summary, failure: None })
}

#[derive(Serialize)]
struct GapRow {
    n: usize,
    m: usize,
    /// `E_m - E_n`, units `pi/tau`.
    gap: f64,
}

#[derive(Serialize)]
struct SpectrumResult {
    label: String,
    params: Params,
    energies: [f64; 4],
    gaps: Vec<GapRow>,
    degeneracy: DegeneracyReport,
}

fn degeneracy_of(p: &Params, tol: f64) -> CliResult<(degengate::Eigen, DegeneracyReport)> {
    let es = eigensystem(&build_hamiltonian(p)?, 1e-8)?;
    let rep = classify_energies(&es.energies, tol);
    Ok((es, rep))
}

fn spectrum(ctx: &Ctx) -> CliResult<Outcome> {
    let r = ctx.first_pulse()?;
    let p = r.single()?;
    let (es, rep) = degeneracy_of(&p, ctx.cfg.degeneracy_tol)?;
    let mut t = Table::new(["n", "energy"]);
    let mut summary = format!("{}\n", r.label);
    for (n, e) in es.energies.iter().enumerate() {
        t.push(vec![Cell::Int(n as i64 + 1), Cell::Num(*e)]);
        summary.push_str(&format!("E{} = {:>24.16e}\n", n + 1, e));
    }
    let mut gaps = Vec::new();
    for n in 0..4 {
        for m in n + 1..4 {
            gaps.push(GapRow { n: n + 1, m: m + 1, gap: es.energies[m] - es.energies[n] });
        }
    }
    for g in &gaps {
        summary.push_str(&format!("E{}-E{} = {:>24.16e}\n", g.m, g.n, g.gap));
    }
    summary.push_str(&format!("degeneracy: {}\n", rep.classification.as_str()));
    let res = SpectrumResult { label: r.label, params: p, energies: es.energies, gaps, degeneracy: rep };
    done(vec![ctx.table("spectrum", &t)?, ctx.report("spectrum", res)?], summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct GateSummary {
    pub target: String,
    pub raw_distance: f64,
    pub phase_distance: f64,
    pub g1: [f64; 2],
    pub g2: [f64; 2],
    pub invariant_gap: f64,
    pub equivalent: bool,
}

fn gate_summary(r: &Resolved) -> CliResult<Option<GateSummary>> {
    let Some(name) = &r.target else { return Ok(None) };
    let target = target_gate::<f64>(name)?;
    let u = r.unitary();
    let (raw, opt) = gate_distance(&u, &target.matrix)?;
    let g = makhlin_invariants(&u);
    let gap = g.gap_sq(&target.invariants).sqrt();
    Ok(Some(GateSummary {
        target: target.name,
        raw_distance: raw,
        phase_distance: opt,
        g1: [g.g1.re, g.g1.im],
        g2: [g.g2.re, g.g2.im],
        invariant_gap: gap,
        equivalent: gap < degengate::metrics::DEFAULT_EQUIVALENCE_TOL,
    }))
}

fn trace_of(r: &Resolved, nm: &Noise, t_final: Option<f64>, opts: &PurityOptions<f64>) -> degengate::Result<Trace> {
    match r.params {
        Some(p) => gate_purity(&p, nm, t_final.unwrap_or(p.t0), opts),
        None => {
            if t_final.is_some_and(|t| t != r.duration) {
                return Err(Error::InvalidParameter("time.t_final is fixed by a pulse sequence".into()));
            }
            sequence_purity(&r.segments, nm, opts)
        }
    }
}

fn state_columns() -> Vec<String> {
    let mut cols = vec!["t".to_string(), "P".to_string()];
    cols.extend(InitialStateSet::<f64>::standard().labels.iter().map(|l| format!("P_{l}")));
    cols
}

fn trace_table(tr: &Trace, upto: Option<f64>) -> Table {
    let mut t = Table::new(state_columns());
    for (i, &time) in tr.times.iter().enumerate() {
        if upto.is_some_and(|u| time >= u) {
            break;
        }
        let mut row = vec![Cell::Num(time), Cell::Num(tr.purity[i])];
        row.extend(tr.per_state[i].iter().map(|&x| Cell::Num(x)));
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct PuritySummary {
    label: String,
    duration: f64,
    t_final: f64,
    /// `|dP/dt|` at `t = 0`, units `1/tau`.
    decay_rate: f64,
    /// `1 - P(t_final)`.
    loss: f64,
    gate: Option<GateSummary>,
}

fn failure_time(e: &Error) -> Option<f64> {
    match e {
        Error::StateValidity { time, .. } => Some(*time),
        Error::PerState { source, .. } => failure_time(source),
        _ => None,
    }
}

fn purity(ctx: &Ctx) -> CliResult<Outcome> {
    let r = ctx.first_pulse()?;
    let opts = ctx.purity_options();
    match trace_of(&r, &ctx.cfg.noise, ctx.cfg.time.t_final, &opts) {
        Ok(tr) => {
            let res = PuritySummary {
                label: r.label.clone(),
                duration: r.duration,
                t_final: *tr.times.last().unwrap(),
                decay_rate: tr.decay_rate(),
                loss: tr.loss(),
                gate: gate_summary(&r)?,
            };
            let summary = format!("{}: |dP/dt|0 = {:.6e}, 1-P = {:.6e}\n", r.label, res.decay_rate, res.loss);
            done(vec![ctx.table("trace", &trace_table(&tr, None))?, ctx.report("summary", res)?], summary)
        }
        Err(e) => {
            let e = match e {
                Error::InvalidParameter(_) | Error::UnknownGate(_) | Error::Unsupported(_) | Error::Infeasible(_) => {
                    return Err(e.into())
                }
                e => e,
            };
            // Flush what an unchecked run gives up to the failure.
            let loose = PurityOptions { check_convergence: false, check_validity: false, ..opts };
            let mut t = match trace_of(&r, &ctx.cfg.noise, ctx.cfg.time.t_final, &loose) {
                Ok(tr) => trace_table(&tr, Some(failure_time(&e).unwrap_or(0.0).max(f64::MIN_POSITIVE))),
                Err(_) => Table::new(state_columns()),
            };
            t.failure = Some(e.to_string());
            Ok(Outcome {
                artifacts: vec![ctx.table("trace", &t)?],
                summary: format!("{}: failed\n", r.label),
                failure: Some(e.into()),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolEntry {
    pub label: String,
    pub duration: f64,
    pub decay_rate: f64,
    pub loss: f64,
    /// `loss / loss` of the first protocol.
    pub loss_ratio: f64,
    /// Duration of the first protocol over this one's.
    pub duration_ratio: f64,
}

fn compare(ctx: &Ctx) -> CliResult<Outcome> {
    let pulses = ctx.cfg.all_pulses();
    if pulses.len() < 2 {
        return Err(CliError::Config("compare needs at least two pulses".into()));
    }
    let opts = ctx.purity_options();
    let mut t = Table::new(["protocol", "t", "P"]);
    let mut entries: Vec<ProtocolEntry> = Vec::new();
    for p in pulses {
        let r = p.resolve()?;
        let tr = trace_of(&r, &ctx.cfg.noise, None, &opts)?;
        for (time, pu) in tr.times.iter().zip(&tr.purity) {
            t.push(vec![Cell::Text(r.label.clone()), Cell::Num(*time), Cell::Num(*pu)]);
        }
        let (l0, d0) = entries.first().map_or((tr.loss(), r.duration), |e| (e.loss, e.duration));
        entries.push(ProtocolEntry {
            label: r.label,
            duration: r.duration,
            decay_rate: tr.decay_rate(),
            loss: tr.loss(),
            loss_ratio: tr.loss() / l0,
            duration_ratio: d0 / r.duration,
        });
    }
    let mut summary = String::new();
    for e in &entries {
        summary.push_str(&format!(
            "{:<16} duration {:.6}  1-P {:.6e}  loss ratio {:.4}  duration ratio {:.4}\n",
            e.label, e.duration, e.loss, e.loss_ratio, e.duration_ratio
        ));
    }
    done(vec![ctx.table("traces", &t)?, ctx.report("summary", &entries)?], summary)
}

#[derive(Serialize)]
struct SweepReport {
    cells: usize,
    feasible: usize,
    failed: usize,
    summary: SweepSummary,
}

fn run_sweep(ctx: &Ctx) -> CliResult<Outcome> {
    let grid = ctx.cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs a [sweep] table".into()))?;
    let res = sweep(grid, &ctx.cfg.noise)?;
    let mut t = Table::new([
        grid.x.control.name(),
        grid.y.control.name(),
        "feasible",
        "dPdt0",
        "degeneracy_class",
        "min_gap",
        "double_gap",
        "reason",
    ]);
    for c in &res.cells {
        t.push(vec![
            Cell::Num(c.x),
            Cell::Num(c.y),
            Cell::Bool(c.feasible),
            Cell::Num(c.rate),
            Cell::Text(c.class.map_or("", |k| k.as_str()).into()),
            Cell::Num(c.min_gap),
            Cell::Num(c.double_gap),
            Cell::Text(c.error.clone().unwrap_or_default()),
        ]);
    }
    let s = summarize(&res);
    let rep = SweepReport {
        cells: res.cells.len(),
        feasible: res.cells.iter().filter(|c| c.feasible).count(),
        failed: res.cells.iter().filter(|c| c.feasible && c.error.is_some()).count(),
        summary: s.clone(),
    };
    let summary = format!(
        "{} cells, min |dP/dt|0 = {:.6e} at {} cell(s); argmin matches double degeneracy: {}\n",
        rep.cells,
        s.min_rate,
        s.argmin.len(),
        s.argmin_matches_double
    );
    done(vec![ctx.table("grid", &t)?, ctx.report("summary", rep)?], summary)
}

fn run_optimize(ctx: &Ctx) -> CliResult<Outcome> {
    let spec =
        ctx.cfg.optimize.as_ref().ok_or_else(|| CliError::Config("optimize needs an [optimize] table".into()))?;
    let res: OptimizeResult = optimize(spec)?;
    let summary =
        format!("objective {:.6e}, distance {:.6e}, converged {}\n", res.objective, res.distance, res.converged);
    let failure = (!res.converged).then(|| {
        CliError::NonConvergence(format!("best distance {:e} above threshold {:e}", res.distance, spec.threshold))
    });
    Ok(Outcome { artifacts: vec![ctx.report("result", &res)?], summary, failure })
}

#[derive(Serialize)]
struct InvariantResult {
    label: String,
    #[serde(rename = "G1")]
    g1: [f64; 2],
    #[serde(rename = "G2")]
    g2: [f64; 2],
    /// Named gates sharing these invariants.
    equivalent_to: Vec<String>,
}

fn invariants(ctx: &Ctx) -> CliResult<Outcome> {
    let (label, u): (String, Mat4) = if !ctx.cfg.all_pulses().is_empty() {
        let r = ctx.first_pulse()?;
        (r.label.clone(), r.unitary())
    } else if let Some(name) = &ctx.cfg.target {
        let g = target_gate::<f64>(name)?;
        (g.name, g.matrix)
    } else {
        return Err(CliError::Config("invariants needs a pulse or a target".into()));
    };
    let g = makhlin_invariants(&u);
    let tol = degengate::metrics::DEFAULT_EQUIVALENCE_TOL;
    let mut equivalent_to = Vec::new();
    for n in TARGET_NAMES {
        let t = target_gate::<f64>(n)?;
        if (t.invariants.g1 - g.g1).norm() < tol && (t.invariants.g2 - g.g2).norm() < tol {
            equivalent_to.push(n.to_string());
        }
    }
    // Round-off noise below 1e-15 is reported as zero.
    let clean = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
    let res = InvariantResult {
        label,
        g1: [clean(g.g1.re), clean(g.g1.im)],
        g2: [clean(g.g2.re), clean(g.g2.im)],
        equivalent_to,
    };
    let summary = format!("{}: G1 = {:?}, G2 = {:?}\n", res.label, res.g1, res.g2);
    done(vec![ctx.report("invariants", res)?], summary)
}

#[derive(Serialize)]
struct SensitivityResult {
    label: String,
    /// Losses are measured against the target itself (exact constructions)
    /// or the pulse's own noiseless unitary.
    reference: String,
    report: SensitivityReport,
}

fn sensitivity_of(r: &Resolved, nm: &Noise, opts: &SensitivityOptions) -> CliResult<SensitivityResult> {
    let p = r.single()?;
    let ideal = match (&r.target, r.exact) {
        (Some(name), true) => Some(target_gate::<f64>(name)?.matrix),
        _ => None,
    };
    let reference = match (&r.target, &ideal) {
        (Some(name), Some(_)) => name.clone(),
        _ => "self".into(),
    };
    let report = sensitivity(&p, ideal.as_ref(), nm, opts)?;
    Ok(SensitivityResult { label: r.label.clone(), reference, report })
}

fn sens_options(ctx: &Ctx) -> SensitivityOptions {
    ctx.cfg.sensitivity.clone().unwrap_or_else(|| SensitivityOptions::with_budget(1e-4))
}

fn run_sensitivity(ctx: &Ctx) -> CliResult<Outcome> {
    let r = ctx.first_pulse()?;
    let res = sensitivity_of(&r, &ctx.cfg.noise, &sens_options(ctx))?;
    let summary = format!(
        "{}: radius {:.4e} (limited by {}), halving ratio {:.3}, optimal {}\n",
        res.label, res.report.radius, res.report.limiting_control, res.report.halving_ratio, res.report.optimal
    );
    done(vec![ctx.report("sensitivity", res)?], summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviceGate {
    pub label: String,
    pub duration: f64,
    pub loss: f64,
    pub decay_rate: f64,
    /// `|dP/dt|0` in device frequency units.
    pub decay_rate_ghz: f64,
}

#[derive(Serialize)]
struct CalibrateResult {
    calibration: Calibration,
    round_trip_inv_t1_ghz: f64,
    gates: Vec<DeviceGate>,
}

fn run_calibrate(ctx: &Ctx) -> CliResult<Outcome> {
    let d = ctx.cfg.device.as_ref().ok_or_else(|| CliError::Config("calibrate needs a [device] table".into()))?;
    let cal = d.calibration()?;
    let back = round_trip_inv_t1(&cal)?;
    let opts = ctx.purity_options();
    let mut gates = Vec::new();
    for p in ctx.cfg.all_pulses() {
        let r = p.resolve()?;
        let tr = trace_of(&r, &cal.noise, None, &opts)?;
        gates.push(DeviceGate {
            label: r.label,
            duration: r.duration,
            loss: tr.loss(),
            decay_rate: tr.decay_rate(),
            decay_rate_ghz: cal.rate_to_ghz(tr.decay_rate()),
        });
    }
    let mut summary = format!(
        "alpha {:.6e}, T {:.6e} (pi/tau), round-trip 1/T1 {:.6e} GHz\n",
        cal.alpha, cal.noise.temperature, back
    );
    for w in &cal.warnings {
        summary.push_str(&format!("warning: {w}\n"));
    }
    for g in &gates {
        summary.push_str(&format!("{:<18} 1-P {:.6e}\n", g.label, g.loss));
    }
    let res = CalibrateResult { calibration: cal, round_trip_inv_t1_ghz: back, gates };
    done(vec![ctx.report("calibration", res)?], summary)
}

#[derive(Serialize)]
struct GateEntry {
    label: String,
    duration: f64,
    params: Option<Params>,
    degeneracy: Option<DegeneracyReport>,
    gate: Option<GateSummary>,
    decay_rate: f64,
    loss: f64,
    sensitivity: Option<SensitivityResult>,
}

fn gates(ctx: &Ctx) -> CliResult<Outcome> {
    let pulses = ctx.cfg.all_pulses();
    if pulses.is_empty() {
        return Err(CliError::Config("gates needs at least one pulse".into()));
    }
    let opts = ctx.purity_options();
    let mut entries = Vec::new();
    let mut summary = String::new();
    for p in pulses {
        let r = p.resolve()?;
        let degeneracy = match r.params {
            Some(q) => Some(degeneracy_of(&q, ctx.cfg.degeneracy_tol)?.1),
            None => None,
        };
        let tr = trace_of(&r, &ctx.cfg.noise, None, &opts)?;
        let sens = match (&ctx.cfg.sensitivity, r.params) {
            (Some(o), Some(_)) => Some(sensitivity_of(&r, &ctx.cfg.noise, o)?),
            _ => None,
        };
        let gate = gate_summary(&r)?;
        summary.push_str(&format!(
            "{:<18} dist {:.3e}  inv-gap {:.3e}  1-P {:.6e}{}\n",
            r.label,
            gate.as_ref().map_or(f64::NAN, |g| g.phase_distance),
            gate.as_ref().map_or(f64::NAN, |g| g.invariant_gap),
            tr.loss(),
            sens.as_ref().map_or(String::new(), |s| format!("  radius {:.4e}", s.report.radius)),
        ));
        entries.push(GateEntry {
            label: r.label.clone(),
            duration: r.duration,
            params: r.params,
            degeneracy,
            gate,
            decay_rate: tr.decay_rate(),
            loss: tr.loss(),
            sensitivity: sens,
        });
    }
    done(vec![ctx.report("gates", entries)?], summary)
}
