use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::derivatives::{Method, Sampling, DEFAULT_TROTTER_STEPS};
use crate::error::{Error, Result};
use crate::hamiltonian::{GeneratorSpec, DEFAULT_QUAD_STEPS};
use crate::qcore::{ghz, Axis, CVector, StateVector, C64};
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Custom,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Fig2 => "fig2",
            Experiment::Fig3a => "fig3a",
            Experiment::Fig3b => "fig3b",
            Experiment::Fig4 => "fig4",
            Experiment::Custom => "custom",
        }
    }

    fn allowed_methods(self) -> &'static [Method] {
        match self {
            Experiment::Fig2 => &[Method::Exact, Method::Stoc, Method::Stand],
            Experiment::Fig3a | Experiment::Fig3b | Experiment::Custom => {
                &[Method::Exact, Method::Stoc, Method::Fd]
            }
            Experiment::Fig4 => &[Method::Stoc, Method::Fd],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fig2" => Ok(Experiment::Fig2),
            "fig3a" => Ok(Experiment::Fig3a),
            "fig3b" => Ok(Experiment::Fig3b),
            "fig4" => Ok(Experiment::Fig4),
            "custom" => Ok(Experiment::Custom),
            other => Err(Error::InvalidArgument(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

/// Initial state of a `custom` run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeState {
    #[default]
    Ghz,
    /// `|+⟩` on every qubit.
    Plus,
    /// `|0…0⟩`.
    Zero,
}

impl ProbeState {
    pub fn state(self, n_qubits: usize) -> Result<StateVector> {
        match self {
            ProbeState::Ghz => ghz(n_qubits),
            ProbeState::Zero => StateVector::basis(n_qubits, 0),
            ProbeState::Plus => {
                let dim = 1usize << n_qubits;
                let amp = C64::new((dim as f64).sqrt().recip(), 0.0);
                StateVector::new(CVector::from_element(dim, amp))
            }
        }
    }
}

/// Contents of a config file. Every key is optional; missing keys take
/// per-experiment defaults in [`ConfigFile::resolve`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    #[serde(alias = "N")]
    pub samples: Option<usize>,
    pub mu: Option<f64>,
    pub sampling: Option<Sampling>,
    pub batches: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub phi_values: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub n_qubits: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub trotter_steps: Option<usize>,
    pub quad_steps: Option<usize>,
    pub fd_eps: Option<f64>,
    pub cutoff: Option<f64>,
    pub p_values: Option<Vec<usize>>,
    pub repetitions: Option<usize>,
    pub quench_time: Option<f64>,
    pub x_floor: Option<f64>,
    pub generators: Option<Vec<String>>,
    pub params: Option<Vec<f64>>,
    pub probe: Option<ProbeState>,
    pub output_path: Option<String>,
    pub format: Option<OutputFormat>,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    /// Fills defaults for `experiment` (which overrides the file's own
    /// `experiment` key when given) and validates the result.
    pub fn resolve(&self, experiment: Option<Experiment>) -> Result<ExperimentConfig> {
        let experiment = experiment
            .or(self.experiment)
            .ok_or_else(|| Error::Config(vec!["experiment: not set".into()]))?;
        let mut errors = Vec::new();
        let methods = match &self.methods {
            Some(list) => list
                .iter()
                .filter_map(|m| match m.parse::<Method>() {
                    Ok(m) => Some(m),
                    Err(e) => {
                        errors.push(format!("methods: {e}"));
                        None
                    }
                })
                .collect(),
            None => experiment.allowed_methods().to_vec(),
        };
        let d = Defaults::of(experiment);
        let custom = experiment == Experiment::Custom;
        let generators = match (&self.generators, custom) {
            (Some(list), _) => list
                .iter()
                .filter_map(|g| match g.parse::<GeneratorSpec>() {
                    Ok(g) => Some(g),
                    Err(e) => {
                        errors.push(format!("generators: {e}"));
                        None
                    }
                })
                .collect(),
            (None, true) => [Axis::X, Axis::Y, Axis::Z]
                .into_iter()
                .map(|axis| GeneratorSpec::Collective { axis })
                .collect(),
            (None, false) => Vec::new(),
        };
        let params = match (&self.params, custom) {
            (Some(p), _) => p.clone(),
            (None, true) => vec![0.1, 0.2, 0.3],
            (None, false) => Vec::new(),
        };
        let cfg = ExperimentConfig {
            experiment,
            seed: self.seed.unwrap_or(0),
            samples: self.samples.unwrap_or(1000),
            mu: self.mu.unwrap_or(d.mu),
            sampling: self.sampling.unwrap_or_default(),
            batches: self.batches.unwrap_or(10),
            t_grid: self.t_grid.clone().unwrap_or(d.t_grid),
            phi_values: self.phi_values.clone().unwrap_or(d.phi_values),
            gammas: self.gammas.clone().unwrap_or(d.gammas),
            n_qubits: self.n_qubits.unwrap_or(d.n_qubits),
            methods,
            trotter_steps: self.trotter_steps.unwrap_or(DEFAULT_TROTTER_STEPS),
            quad_steps: self.quad_steps.unwrap_or(DEFAULT_QUAD_STEPS),
            fd_eps: self.fd_eps.unwrap_or(1e-5),
            cutoff: self.cutoff.unwrap_or(tol::EIGEN_CUTOFF),
            p_values: self.p_values.clone().unwrap_or_else(|| (2..=20).collect()),
            repetitions: self.repetitions.unwrap_or(10),
            quench_time: self.quench_time.unwrap_or(1.0),
            x_floor: self.x_floor.unwrap_or(crate::tomography::DEFAULT_X_FLOOR),
            generators,
            params,
            probe: self.probe.unwrap_or_default(),
            output_path: self.output_path.clone(),
            format: self.format.unwrap_or_default(),
        };
        cfg.collect_errors(&mut errors);
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }
}

struct Defaults {
    mu: f64,
    t_grid: Vec<f64>,
    phi_values: Vec<f64>,
    gammas: Vec<f64>,
    n_qubits: usize,
}

/// `first/scale, (first+1)/scale, …, last/scale`, built from integers so
/// grid points are the nearest doubles to their decimal values.
fn decimal_grid(first: u32, last: u32, scale: f64) -> Vec<f64> {
    (first..=last).map(|k| k as f64 / scale).collect()
}

impl Defaults {
    fn of(experiment: Experiment) -> Self {
        use std::f64::consts::PI;
        match experiment {
            Experiment::Fig2 => Defaults {
                mu: PI / 4.0,
                t_grid: decimal_grid(1, 31, 10.0),
                phi_values: vec![0.0, PI / 7.0, PI / 4.0, PI / 3.0],
                gammas: vec![0.0],
                n_qubits: 1,
            },
            Experiment::Fig3a => Defaults {
                mu: PI / 4.0,
                t_grid: decimal_grid(3, 30, 10.0),
                phi_values: vec![PI / 20.0, PI / 10.0, PI / 5.0],
                gammas: vec![0.0],
                n_qubits: 3,
            },
            // the mixed rule has a pole at 2tμ = π, which μ = π/4 would hit at t = 2
            Experiment::Fig3b => Defaults {
                mu: PI / 8.0,
                t_grid: decimal_grid(3, 30, 10.0),
                phi_values: vec![PI / 10.0],
                gammas: vec![0.0, 0.05, 0.1, 0.2],
                n_qubits: 3,
            },
            Experiment::Fig4 => Defaults {
                mu: PI / 4.0,
                t_grid: vec![1.0],
                phi_values: vec![],
                gammas: vec![0.0],
                n_qubits: 1,
            },
            Experiment::Custom => Defaults {
                mu: PI / 4.0,
                t_grid: decimal_grid(3, 30, 10.0),
                phi_values: vec![],
                gammas: vec![],
                n_qubits: 3,
            },
        }
    }
}

/// A fully resolved and validated experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub samples: usize,
    pub mu: f64,
    pub sampling: Sampling,
    /// Independent-seed repeats used for the Stoc.PSR error bars.
    pub batches: usize,
    pub t_grid: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub gammas: Vec<f64>,
    pub n_qubits: usize,
    pub methods: Vec<Method>,
    pub trotter_steps: usize,
    pub quad_steps: usize,
    pub fd_eps: f64,
    pub cutoff: f64,
    pub p_values: Vec<usize>,
    pub repetitions: usize,
    pub quench_time: f64,
    pub x_floor: f64,
    /// Hamiltonian terms of a `custom` run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<GeneratorSpec>,
    /// Parameter vector of a `custom` run, one entry per generator.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default)]
    pub probe: ProbeState,
    pub output_path: Option<String>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        ConfigFile::default()
            .resolve(Some(experiment))
            .expect("built-in defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.collect_errors(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    fn collect_errors(&self, errors: &mut Vec<String>) {
        let e = self.experiment;
        if self.samples == 0 {
            errors.push("samples: N must be >= 1".into());
        }
        if self.batches == 0 {
            errors.push("batches: must be >= 1".into());
        }
        if !self.mu.is_finite() {
            errors.push("mu: must be finite".into());
        }
        if self.methods.is_empty() {
            errors.push("methods: must not be empty".into());
        }
        for m in &self.methods {
            if !e.allowed_methods().contains(m) {
                errors.push(format!("methods: '{m}' is not available for {e}"));
            }
        }
        if self.t_grid.is_empty() {
            errors.push("t_grid: must not be empty".into());
        }
        if self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            errors.push("t_grid: times must be positive and finite".into());
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            errors.push("t_grid: must be strictly increasing".into());
        }
        if self.phi_values.iter().any(|p| !p.is_finite()) {
            errors.push("phi_values: must be finite".into());
        }
        if self.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            errors.push("gammas: decay rates must be >= 0".into());
        }
        if !(self.fd_eps > 0.0 && self.fd_eps.is_finite()) {
            errors.push("fd_eps: must be positive".into());
        }
        if self.quad_steps < 2 {
            errors.push("quad_steps: must be >= 2".into());
        }
        if !(self.cutoff >= 0.0) {
            errors.push("cutoff: must be >= 0".into());
        }
        match e {
            Experiment::Fig2 => {
                if self.n_qubits != 1 {
                    errors.push("n_qubits: fig2 is a single-qubit experiment".into());
                }
                if self.phi_values.is_empty() {
                    errors.push("phi_values: must not be empty".into());
                }
                if self.trotter_steps < 5 || self.trotter_steps % 4 != 1 {
                    errors.push("trotter_steps: must be 4k+1 with k >= 1".into());
                }
            }
            Experiment::Fig3a | Experiment::Fig3b => {
                if !(1..=6).contains(&self.n_qubits) {
                    errors.push("n_qubits: must be between 1 and 6".into());
                }
                if self.phi_values.is_empty() {
                    errors.push("phi_values: must not be empty".into());
                }
                if e == Experiment::Fig3b && self.gammas.is_empty() {
                    errors.push("gammas: must not be empty".into());
                }
            }
            Experiment::Fig4 => {
                if self.p_values.is_empty() {
                    errors.push("p_values: must not be empty".into());
                }
                if self.p_values.iter().any(|p| *p < 2) {
                    errors.push("p_values: need p >= d-1 = 2".into());
                }
                if self.p_values.windows(2).any(|w| w[1] <= w[0]) {
                    errors.push("p_values: must be strictly increasing".into());
                }
                if self.repetitions == 0 {
                    errors.push("repetitions: must be >= 1".into());
                }
                if !(self.quench_time > 0.0 && self.quench_time.is_finite()) {
                    errors.push("quench_time: must be positive".into());
                }
            }
            Experiment::Custom => {
                if !(1..=6).contains(&self.n_qubits) {
                    errors.push("n_qubits: must be between 1 and 6".into());
                }
                if self.generators.is_empty() {
                    errors.push("generators: must not be empty".into());
                }
                for g in &self.generators {
                    if let Err(e) = g.build(self.n_qubits) {
                        errors.push(format!("generators: '{g}': {e}"));
                    }
                }
                if self.params.len() != self.generators.len() {
                    errors.push(format!(
                        "params: expected {} values (one per generator), got {}",
                        self.generators.len(),
                        self.params.len()
                    ));
                }
                if self.params.iter().any(|p| !p.is_finite()) {
                    errors.push("params: must be finite".into());
                }
            }
        }
        if self.methods.contains(&Method::Stoc) {
            self.check_poles(errors);
        }
    }

    fn check_poles(&self, errors: &mut Vec<String>) {
        // pure rule divides by sin tμ, mixed rule by sin 2tμ
        let pure = match self.experiment {
            Experiment::Fig2 | Experiment::Fig3a => true,
            Experiment::Fig3b | Experiment::Fig4 => false,
            Experiment::Custom => self.gammas.is_empty(),
        };
        let (factor, rule) = if pure { (1.0, "sin(t*mu)") } else { (2.0, "sin(2*t*mu)") };
        let times: Vec<f64> = match self.experiment {
            Experiment::Fig4 => vec![self.quench_time],
            _ => self.t_grid.clone(),
        };
        for t in times {
            if (factor * t * self.mu).sin().abs() <= tol::SHIFT_POLE {
                errors.push(format!("mu: {rule} vanishes at t = {t}"));
            }
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring where output goes.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_path = None;
        canonical.format = OutputFormat::Csv;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_for_every_experiment() {
        for e in [Experiment::Fig2, Experiment::Fig3a, Experiment::Fig3b, Experiment::Fig4, Experiment::Custom] {
            let cfg = ExperimentConfig::defaults(e);
            assert!(cfg.validate().is_ok(), "{e}");
        }
        let f2 = ExperimentConfig::defaults(Experiment::Fig2);
        assert_eq!(f2.t_grid.len(), 31);
        assert_eq!(f2.t_grid[0], 0.1);
        assert_eq!(f2.t_grid[30], 3.1);
        assert_eq!(ExperimentConfig::defaults(Experiment::Fig4).p_values.len(), 19);
    }

    #[test]
    fn parses_flat_toml() {
        let text = r#"
            experiment = "fig2"
            seed = 7
            N = 200
            t_grid = [0.5, 1.0]
            phi_values = [0.0]
            methods = ["exact", "stoc"]
        "#;
        let cfg = ConfigFile::from_toml(text).unwrap().resolve(None).unwrap();
        assert_eq!(cfg.samples, 200);
        assert_eq!(cfg.methods, vec![Method::Exact, Method::Stoc]);
    }

    #[test]
    fn field_level_diagnostics() {
        let text = r#"
            t_grid = [1.0, 0.5]
            methods = ["fd", "adjoint"]
            samples = 0
        "#;
        let err = ConfigFile::from_toml(text).unwrap().resolve(Some(Experiment::Fig2)).unwrap_err();
        let Error::Config(lines) = err else { panic!("expected config error") };
        let all = lines.join("\n");
        assert!(all.contains("t_grid"));
        assert!(all.contains("adjoint"));
        assert!(all.contains("'fd' is not available"));
        assert!(all.contains("samples"));
    }

    #[test]
    fn unknown_keys_and_missing_experiment() {
        assert!(ConfigFile::from_toml("colour = 1").is_err());
        assert!(ConfigFile::default().resolve(None).is_err());
    }

    #[test]
    fn pole_detection() {
        let text = "mu = 0.7853981633974483\nt_grid = [1.0, 2.0]";
        let err = ConfigFile::from_toml(text).unwrap().resolve(Some(Experiment::Fig3b));
        assert!(err.is_err());
        let ok = ConfigFile::from_toml(text).unwrap().resolve(Some(Experiment::Fig3a));
        assert!(ok.is_ok());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::defaults(Experiment::Fig2);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn custom_generators_from_toml() {
        let text = r#"
            experiment = "custom"
            n_qubits = 1
            generators = ["pauli:x:0", "projector:1,1j"]
            params = [0.3, 0.7]
            probe = "zero"
        "#;
        let cfg = ConfigFile::from_toml(text).unwrap().resolve(None).unwrap();
        assert_eq!(cfg.generators.len(), 2);
        assert_eq!(cfg.probe, ProbeState::Zero);

        let bad = r#"
            experiment = "custom"
            n_qubits = 1
            generators = ["pauli:x:3", "spin:x"]
            params = [0.3]
        "#;
        let Err(Error::Config(errs)) = ConfigFile::from_toml(bad).unwrap().resolve(None) else {
            panic!("expected config errors");
        };
        assert!(errs.iter().any(|e| e.contains("unknown generator kind")));
        assert!(errs.iter().any(|e| e.contains("out of range")));
    }

    #[test]
    fn probe_states_are_normalised() {
        for p in [ProbeState::Ghz, ProbeState::Plus, ProbeState::Zero] {
            assert!((p.state(3).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}
