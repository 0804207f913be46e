//! Flat `key = value` run configuration.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` file,
//! `--set` overrides in command-line order. `#` starts a comment; blank
//! lines are ignored; a key may appear only once per file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use hhgq::dipole::{Envelope, PulseConfig, SFA_EPSILON};
use hhgq::C64;

/// Where a key's value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: usize },
    Set,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Set => write!(f, "--set"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub field: Option<String>,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.origin, &self.field) {
            (Some(o), Some(k)) => write!(f, "{o}: field '{k}': {}", self.msg),
            (Some(o), None) => write!(f, "{o}: {}", self.msg),
            (None, Some(k)) => write!(f, "field '{k}': {}", self.msg),
            (None, None) => write!(f, "{}", self.msg),
        }
    }
}

/// Every recognised key with its default (empty = unset).
pub const KEYS: &[(&str, &str)] = &[
    ("scenario", "two-level"),
    ("dipole_file", ""),
    ("omega", "0.2"),
    ("e0", "0.1"),
    ("envelope", "sin2"),
    ("ramp_cycles", "2"),
    ("fwhm_cycles", "4"),
    ("cycles", "10"),
    ("cep", "0"),
    ("second_color_amplitude", "0"),
    ("second_color_phase", "0"),
    ("points_per_cycle", "800"),
    ("dipole_matrix_element", "1"),
    ("level_splitting", "1"),
    ("ionization_potential", "0.5"),
    ("sfa_epsilon", ""),
    ("g", "0.005"),
    ("modes", "8"),
    ("alpha_re", "2"),
    ("alpha_im", "0"),
    ("chi1_override", ""),
    ("tail_sum", ""),
    ("use_exact_m", "false"),
    ("fock_dim", "64"),
    ("wigner_half_width", "6"),
    ("wigner_points", "201"),
    ("quadrature_phases", "0,0.78539816339744828,1.5707963267948966"),
    ("quadrature_half_width", "6"),
    ("quadrature_points", "401"),
    ("q_max", "7"),
    ("spectrum_base_time", ""),
    ("spectrum_lag_cycles", "32"),
    ("points_per_omega", "8"),
    ("correlation_base_time", ""),
    ("correlation_harmonic", "3"),
    ("correlation_points", "200"),
    ("correlation_tau_cycles", "4"),
    ("two_color_sweep", "0"),
    ("sweep_amplitude", "0.1"),
    ("sweep_phase_max", "1.5707963267948966"),
    ("squeeze_modes", "1,3"),
    ("mean_field", "false"),
    ("phase_avg_alpha", "1.5"),
    ("field_samples", "64"),
    ("output_dir", "hhgq-out"),
    ("seed", "0"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    TwoLevel,
    Sfa,
    Ingest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

/// Typed, validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub dipole_file: Option<PathBuf>,
    pub pulse: PulseConfig,
    pub points_per_cycle: usize,
    pub dipole_matrix_element: f64,
    pub level_splitting: f64,
    pub ionization_potential: f64,
    pub sfa_epsilon: f64,
    pub g: f64,
    pub modes: usize,
    pub alpha: C64,
    pub chi1_override: Option<C64>,
    /// Harmonic tail sum used with `chi1_override` (otherwise computed).
    pub tail_sum: Option<f64>,
    pub use_exact_m: bool,
    pub fock_dim: usize,
    pub wigner: GridSpec,
    pub quadrature_phases: Vec<f64>,
    pub quadrature: GridSpec,
    pub q_max: usize,
    pub spectrum_base_time: Option<f64>,
    pub spectrum_lag_cycles: f64,
    pub points_per_omega: usize,
    pub correlation_base_time: Option<f64>,
    pub correlation_harmonic: usize,
    pub correlation_points: usize,
    pub correlation_tau_cycles: f64,
    pub two_color_sweep: usize,
    pub sweep_amplitude: f64,
    pub sweep_phase_max: f64,
    pub squeeze_modes: Vec<usize>,
    pub mean_field: bool,
    pub phase_avg_alpha: f64,
    pub field_samples: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Resolved `key -> value` strings, echoed into the manifest.
    pub echo: BTreeMap<String, String>,
}

/// Raw key/value layer before typing.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl RawConfig {
    pub fn defaults() -> Self {
        let entries = KEYS
            .iter()
            .map(|(k, v)| (k.to_string(), (v.to_string(), Origin::Default)))
            .collect();
        RawConfig { entries }
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: None,
            field: None,
            msg: format!("cannot read config file {}: {e}", path.display()),
        })?;
        self.merge_text(&text, path)
    }

    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let origin = Origin::File {
                path: path.to_path_buf(),
                line,
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = split_pair(content).ok_or_else(|| ConfigError {
                origin: Some(origin.clone()),
                field: None,
                msg: format!("expected 'key = value', got '{content}'"),
            })?;
            if !known(key) {
                return Err(ConfigError {
                    origin: Some(origin),
                    field: Some(key.into()),
                    msg: "unknown key".into(),
                });
            }
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(ConfigError {
                    origin: Some(origin),
                    field: Some(key.into()),
                    msg: format!("duplicate key (first set on line {first})"),
                });
            }
            self.entries.insert(key.into(), (value.into(), origin));
        }
        Ok(())
    }

    pub fn merge_set(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (key, value) = split_pair(pair).ok_or_else(|| ConfigError {
            origin: Some(Origin::Set),
            field: None,
            msg: format!("expected 'key=value', got '{pair}'"),
        })?;
        if !known(key) {
            return Err(ConfigError {
                origin: Some(Origin::Set),
                field: Some(key.into()),
                msg: "unknown key".into(),
            });
        }
        self.entries.insert(key.into(), (value.into(), Origin::Set));
        Ok(())
    }

    fn value(&self, key: &str) -> (&str, &Origin) {
        let (v, o) = self.entries.get(key).expect("every key has a default");
        (v.as_str(), o)
    }

    fn err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: Some(self.value(key).1.clone()),
            field: Some(key.into()),
            msg: msg.into(),
        }
    }

    fn opt_str(&self, key: &str) -> Option<&str> {
        Some(self.value(key).0).filter(|v| !v.is_empty())
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.value(key).0;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(self.err(key, format!("expected a finite number, got '{v}'"))),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.opt_str(key).map(|_| self.f64(key)).transpose()
    }

    fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        let v = self.value(key).0;
        v.parse()
            .map_err(|_| self.err(key, format!("expected a nonnegative integer, got '{v}'")))
    }

    fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        match self.value(key).0 {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(self.err(key, format!("expected true or false, got '{v}'"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        self.value(key)
            .0
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| self.err(key, format!("cannot parse list entry '{s}'"))))
            .collect()
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.f64(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be > 0, got {v}")))
        }
    }

    fn nonnegative(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.f64(key)?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be >= 0, got {v}")))
        }
    }

    fn at_least(&self, key: &str, min: usize) -> Result<usize, ConfigError> {
        let v = self.usize(key)?;
        if v >= min {
            Ok(v)
        } else {
            Err(self.err(key, format!("must be >= {min}, got {v}")))
        }
    }

    fn complex(&self, key: &str) -> Result<Option<C64>, ConfigError> {
        let Some(v) = self.opt_str(key) else { return Ok(None) };
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok().filter(|x: &f64| x.is_finite())).collect();
        match parsed.as_deref() {
            Some([re]) => Ok(Some(C64::new(*re, 0.0))),
            Some([re, im]) => Ok(Some(C64::new(*re, *im))),
            _ => Err(self.err(key, format!("expected 're' or 're,im', got '{v}'"))),
        }
    }

    fn grid(&self, half: &str, points: &str) -> Result<GridSpec, ConfigError> {
        Ok(GridSpec {
            half_width: self.positive(half)?,
            points: self.at_least(points, 2)?,
        })
    }

    /// Types and range-checks every key.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let scenario = match self.value("scenario").0 {
            "two-level" => Scenario::TwoLevel,
            "sfa" => Scenario::Sfa,
            "ingest" => Scenario::Ingest,
            v => return Err(self.err("scenario", format!("expected two-level, sfa or ingest, got '{v}'"))),
        };
        let dipole_file = self.opt_str("dipole_file").map(PathBuf::from);
        if scenario == Scenario::Ingest {
            match &dipole_file {
                None => return Err(self.err("dipole_file", "required by the ingest scenario")),
                Some(p) if !p.is_file() => {
                    return Err(self.err("dipole_file", format!("file {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        let cycles = self.f64("cycles")?;
        if !(cycles >= 1.0) {
            return Err(self.err("cycles", format!("must be >= 1, got {cycles}")));
        }
        let envelope = match self.value("envelope").0 {
            "flat" => Envelope::Flat {
                ramp_cycles: self.nonnegative("ramp_cycles")?,
            },
            "sin2" => Envelope::Sin2,
            "gaussian" => Envelope::Gaussian {
                fwhm_cycles: self.positive("fwhm_cycles")?,
            },
            v => return Err(self.err("envelope", format!("expected flat, sin2 or gaussian, got '{v}'"))),
        };
        let mut pulse = PulseConfig::new(self.positive("omega")?, self.nonnegative("e0")?, envelope, cycles);
        pulse.cep = self.f64("cep")?;
        let r = self.nonnegative("second_color_amplitude")?;
        if r > 0.0 {
            pulse = pulse.with_second_color(r, self.f64("second_color_phase")?);
        }
        let sfa_epsilon = self.opt_f64("sfa_epsilon")?.unwrap_or(SFA_EPSILON);
        if !(sfa_epsilon > 0.0) {
            return Err(self.err("sfa_epsilon", "must be > 0"));
        }
        let squeeze_modes: Vec<usize> = self.list("squeeze_modes")?;
        if squeeze_modes.iter().any(|q| *q == 0) {
            return Err(self.err("squeeze_modes", "harmonic orders start at 1"));
        }
        let mut sorted = squeeze_modes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != squeeze_modes.len() {
            return Err(self.err("squeeze_modes", "harmonic orders must be distinct"));
        }
        let quadrature_phases: Vec<f64> = self.list("quadrature_phases")?;
        if quadrature_phases.iter().any(|p| !p.is_finite()) {
            return Err(self.err("quadrature_phases", "phases must be finite"));
        }
        let seed = self
            .value("seed")
            .0
            .parse()
            .map_err(|_| self.err("seed", "expected a nonnegative integer"))?;
        let sweep_phase_max = self.f64("sweep_phase_max")?;
        if sweep_phase_max.abs() > 2.0 * PI {
            return Err(self.err("sweep_phase_max", "must lie within [-2 pi, 2 pi]"));
        }
        Ok(RunConfig {
            scenario,
            dipole_file,
            pulse,
            points_per_cycle: self.at_least("points_per_cycle", 8)?,
            dipole_matrix_element: self.f64("dipole_matrix_element")?,
            level_splitting: self.nonnegative("level_splitting")?,
            ionization_potential: self.positive("ionization_potential")?,
            sfa_epsilon,
            g: self.positive("g")?,
            modes: self.at_least("modes", 2)?,
            alpha: C64::new(self.f64("alpha_re")?, self.f64("alpha_im")?),
            chi1_override: self.complex("chi1_override")?,
            tail_sum: self.opt_str("tail_sum").map(|_| self.nonnegative("tail_sum")).transpose()?,
            use_exact_m: self.bool("use_exact_m")?,
            fock_dim: self.at_least("fock_dim", 2)?,
            wigner: self.grid("wigner_half_width", "wigner_points")?,
            quadrature_phases,
            quadrature: self.grid("quadrature_half_width", "quadrature_points")?,
            q_max: self.at_least("q_max", 1)?,
            spectrum_base_time: self.opt_f64("spectrum_base_time")?,
            spectrum_lag_cycles: self.positive("spectrum_lag_cycles")?,
            points_per_omega: self.at_least("points_per_omega", 1)?,
            correlation_base_time: self.opt_f64("correlation_base_time")?,
            correlation_harmonic: self.at_least("correlation_harmonic", 1)?,
            correlation_points: self.at_least("correlation_points", 2)?,
            correlation_tau_cycles: self.nonnegative("correlation_tau_cycles")?,
            two_color_sweep: self.usize("two_color_sweep")?,
            sweep_amplitude: self.positive("sweep_amplitude")?,
            sweep_phase_max,
            squeeze_modes,
            mean_field: self.bool("mean_field")?,
            phase_avg_alpha: self.nonnegative("phase_avg_alpha")?,
            field_samples: self.at_least("field_samples", 1)?,
            output_dir: PathBuf::from(self.value("output_dir").0),
            seed,
            echo: self.entries.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect(),
        })
    }

    /// Key validation that depends on the subcommand.
    pub fn check_squeeze(&self, cfg: &RunConfig) -> Result<(), ConfigError> {
        if cfg.squeeze_modes.len() < 2 {
            return Err(self.err(
                "squeeze_modes",
                format!("need at least 2 modes, got {}", cfg.squeeze_modes.len()),
            ));
        }
        Ok(())
    }

    pub fn check_two_color(&self, cfg: &RunConfig) -> Result<(), ConfigError> {
        if cfg.two_color_sweep == 1 {
            return Err(self.err("two_color_sweep", "a sweep needs 0 (off) or at least 2 phases"));
        }
        if cfg.two_color_sweep > 0 && cfg.scenario == Scenario::Ingest {
            return Err(self.err("two_color_sweep", "needs a dipole model, not an ingested file"));
        }
        Ok(())
    }

    pub fn check_cat(&self, cfg: &RunConfig) -> Result<(), ConfigError> {
        if cfg.quadrature_phases.is_empty() {
            return Err(self.err("quadrature_phases", "need at least one phase"));
        }
        Ok(())
    }

    pub fn override_output_dir(&mut self, dir: &Path) {
        self.entries
            .insert("output_dir".into(), (dir.display().to_string(), Origin::Set));
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}
