//! Strict TOML run configuration and the bundled named experiments.

use std::f64::consts::PI;

use degengate::calibrate::{calibrate, Calibration, Device};
use degengate::constructions::{
    cnot_class_pulse, onestep_bgate, onestep_cnot, standard_cnot_protocol, AmplitudeConvention, BGateVariant,
    CnotVariant, ExchangeSign,
};
use degengate::optimize::SearchSpec;
use degengate::sensitivity::SensitivityOptions;
use degengate::sweep::SweepGrid;
use degengate::{build_hamiltonian, expm_hermitian, Mat4, Noise, Params};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Spectrum,
    Purity,
    /// Several pulses on one absolute time axis.
    Compare,
    Sweep,
    Optimize,
    Invariants,
    Sensitivity,
    Calibrate,
    /// Gate, spectrum and sensitivity reports for a list of pulses.
    Gates,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Purity => "purity",
            Experiment::Compare => "compare",
            Experiment::Sweep => "sweep",
            Experiment::Optimize => "optimize",
            Experiment::Invariants => "invariants",
            Experiment::Sensitivity => "sensitivity",
            Experiment::Calibrate => "calibrate",
            Experiment::Gates => "gates",
        }
    }
}

fn one() -> f64 {
    1.0
}

/// A named construction or explicit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Pulse {
    CnotRefined,
    CnotPrinted,
    BgatePrinted,
    BgateRefined,
    BgateOptimized,
    /// Doubly degenerate exchange pulse closest to the CNOT class.
    CnotClass {
        j: f64,
        #[serde(default = "one")]
        delta: f64,
        #[serde(default)]
        sign: ExchangeSign,
    },
    /// Five-pulse reference CNOT; `amplitude` is the angular drive in `1/tau`.
    FiveStep {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Custom {
        params: Params,
        #[serde(default)]
        target: Option<String>,
        #[serde(default)]
        label: Option<String>,
    },
}

/// A pulse turned into Hamiltonian segments.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub label: String,
    /// `(H in pi/tau, duration in tau)`.
    pub segments: Vec<(Mat4, f64)>,
    /// Parameters of a single constant pulse.
    pub params: Option<Params>,
    pub target: Option<String>,
    /// The pulse realizes `target` exactly (up to phase), not only its class.
    pub exact: bool,
    pub duration: f64,
}

impl Resolved {
    pub fn unitary(&self) -> Mat4 {
        self.segments.iter().fold(Mat4::identity(), |u, (h, t)| expm_hermitian(h, PI * t) * u)
    }

    pub fn single(&self) -> CliResult<Params> {
        self.params.ok_or_else(|| CliError::Config(format!("{} is not a single constant pulse", self.label)))
    }
}

fn single(label: &str, p: Params, target: Option<&str>, exact: bool) -> CliResult<Resolved> {
    Ok(Resolved {
        label: label.into(),
        segments: vec![(build_hamiltonian(&p)?, p.t0)],
        params: Some(p),
        target: target.map(str::to_string),
        exact,
        duration: p.t0,
    })
}

impl Pulse {
    pub fn resolve(&self) -> CliResult<Resolved> {
        match self {
            Pulse::CnotRefined | Pulse::CnotPrinted => {
                let v = if *self == Pulse::CnotRefined { CnotVariant::Refined } else { CnotVariant::Printed };
                let c = onestep_cnot(v);
                single(&c.label, c.params, Some("CNOT"), true)
            }
            Pulse::BgatePrinted | Pulse::BgateRefined | Pulse::BgateOptimized => {
                let v = match self {
                    Pulse::BgatePrinted => BGateVariant::Printed,
                    Pulse::BgateRefined => BGateVariant::Refined,
                    _ => BGateVariant::Optimized,
                };
                let b = onestep_bgate(v)?;
                single(&b.label, b.params, Some("B"), false)
            }
            Pulse::CnotClass { j, delta, sign } => {
                let c = cnot_class_pulse(*j, *delta, *sign)?;
                single(&format!("cnot-class-j{j}"), c.params, Some("CNOT"), false)
            }
            Pulse::FiveStep { amplitude } => {
                let seq = standard_cnot_protocol(AmplitudeConvention::Custom(*amplitude))?;
                Ok(Resolved {
                    label: "five-step".into(),
                    segments: seq.segments(),
                    params: None,
                    target: Some("CNOT".into()),
                    exact: true,
                    duration: seq.total_duration(),
                })
            }
            Pulse::Custom { params, target, label } => {
                params.validate()?;
                single(label.as_deref().unwrap_or("custom"), *params, target.as_deref(), true)
            }
        }
    }
}

fn d_samples() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Run length; defaults to the pulse duration.
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// RK4 step; defaults to 1/2000 of the gate time.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { t_final: None, samples: d_samples(), dt: None }
    }
}

fn d_cutoff() -> f64 {
    20.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub delta_ghz: f64,
    pub j_ghz: f64,
    pub inv_t1_ghz: f64,
    pub temperature_k: f64,
    #[serde(default = "d_cutoff")]
    pub cutoff: f64,
    /// Splitting parameter of the constructions, units `pi/tau`.
    #[serde(default = "one")]
    pub delta_param: f64,
}

impl DeviceConfig {
    pub fn device(&self) -> Device {
        Device {
            delta_ghz: self.delta_ghz,
            j_ghz: self.j_ghz,
            inv_t1_ghz: self.inv_t1_ghz,
            temperature_k: self.temperature_k,
            cutoff: self.cutoff,
        }
    }

    pub fn calibration(&self) -> CliResult<Calibration> {
        Ok(calibrate(&self.device(), self.delta_param)?)
    }
}

fn d_degeneracy_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<Pulse>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<Pulse>,
    /// Replaced by the calibrated model when `device` is given.
    #[serde(default)]
    pub noise: Noise,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default = "d_degeneracy_tol")]
    pub degeneracy_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<SearchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Pulses of the run: `pulse` first, then `pulses`.
    pub fn all_pulses(&self) -> Vec<&Pulse> {
        self.pulse.iter().chain(&self.pulses).collect()
    }

    /// Applies the seed override and folds derived values into the config so
    /// the embedded copy is complete.
    pub fn resolve(mut self, seed: Option<u64>, experiment: Option<Experiment>) -> CliResult<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if experiment.is_some() {
            self.experiment = experiment;
        }
        if self.experiment.is_none() {
            return Err(CliError::Config("no experiment selected".into()));
        }
        if let Some(o) = &mut self.optimize {
            o.seed = self.seed;
        }
        if let (Some(d), Some(e)) = (&self.device, self.experiment) {
            if e != Experiment::Calibrate {
                self.noise = d.calibration()?.noise;
            }
        }
        self.noise.validate()?;
        if self.degeneracy_tol.is_nan() || self.degeneracy_tol <= 0.0 {
            return Err(CliError::Config("degeneracy_tol must be > 0".into()));
        }
        if self.time.samples == 0 {
            return Err(CliError::Config("time.samples must be >= 1".into()));
        }
        Ok(self)
    }
}

/// Configs shipped with the binary, addressed as `paper:<name>`.
pub const BUNDLED: [(&str, &str); 5] = [
    ("fig1", include_str!("../configs/fig1.toml")),
    ("fig2", include_str!("../configs/fig2.toml")),
    ("cnot", include_str!("../configs/cnot.toml")),
    ("bgate", include_str!("../configs/bgate.toml")),
    ("calibration", include_str!("../configs/calibration.toml")),
];

pub fn bundled(name: &str) -> CliResult<RunConfig> {
    let key = name.strip_prefix("paper:").unwrap_or(name);
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| CliError::Config(format!("unknown named experiment {name}")))?;
    RunConfig::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        for (n, _) in BUNDLED {
            let c = bundled(n).unwrap();
            assert!(c.experiment.is_some(), "{n}");
            c.resolve(None, None).unwrap();
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("sede = 3").is_err());
        assert!(RunConfig::parse("[noise]\nalpha = 0.01\ntemp = 1").is_err());
        assert!(RunConfig::parse("[pulse]\nkind = \"cnot-class\"\nj = 2.0\nfoo = 1").is_err());
    }

    #[test]
    fn errors_name_the_line() {
        let e = RunConfig::parse("seed = 1\n[noise]\nalpah = 0.01\n").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("alpah"), "{e}");
    }

    #[test]
    fn pulses_resolve() {
        let c = RunConfig::parse("[pulse]\nkind = \"five-step\"\n").unwrap();
        let r = c.pulse.unwrap().resolve().unwrap();
        assert_eq!(r.segments.len(), 5);
        assert!(r.params.is_none());
        let c = RunConfig::parse("[pulse]\nkind = \"custom\"\nparams = { jz = 0.5, t0 = 2.0 }\n").unwrap();
        assert_eq!(c.pulse.unwrap().resolve().unwrap().duration, 2.0);
    }

    #[test]
    fn device_replaces_noise() {
        let c = bundled("cnot").unwrap().resolve(None, None).unwrap();
        assert!((c.noise.alpha - 0.0157).abs() < 1e-3);
    }
}
