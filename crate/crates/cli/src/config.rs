//! Flat `key = value` scenario files.
//!
//! ```text
//! # ratio 2, bp pulses at two spacings
//! ratio = 2
//! sequence = bp
//! dt_over_tauc = 2^-3, 2^-4
//! initial_state = plus_i
//! output = out/ratio2.csv
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use pulsedd::evolve::{CoherenceModel, EvolveOptions, QubitState};
use pulsedd::model::{params_from_tau, Axis, PhysicalParams, PulseEvent, PulseSchedule};
use pulsedd::quadrature::QuadratureSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value for `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Invalid(#[from] pulsedd::Error),
}

fn value_error(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sequence {
    None,
    Bb,
    Bp,
    /// Event file with lines `<time / tau_c> <X|Z>`.
    Custom(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Plus,
    PlusI,
    Custom { rho11: f64, re: f64, im: f64 },
}

impl InitialState {
    pub fn state(&self) -> pulsedd::Result<QubitState> {
        match *self {
            InitialState::Plus => Ok(QubitState::plus()),
            InitialState::PlusI => Ok(QubitState::plus_i()),
            InitialState::Custom { rho11, re, im } => QubitState::new(rho11, Complex64::new(re, im)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub tau_c: f64,
    /// `tau_c_lambda / tau_c_theta`; infinite for pure dephasing.
    pub ratio: f64,
    pub omega0: f64,
    /// `k_B T` in units of the cutoff frequency.
    pub temperature: f64,
    pub dt_over_tauc: Vec<f64>,
    pub sequence: Sequence,
    pub initial_state: InitialState,
    pub t_max_over_tauc: f64,
    pub steps_per_interval: usize,
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub omega_max: f64,
    /// Override the coupling derived from `tau_c` and `ratio`.
    pub g_theta: Option<f64>,
    pub g_lambda: Option<f64>,
    pub coherence: CoherenceModel,
    pub output: Option<PathBuf>,
    /// Directory that relative `custom:` paths are resolved against; not serialized.
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let opts = EvolveOptions::default();
        Self {
            tau_c: 0.4 * 2.0 * PI,
            ratio: 2.0,
            omega0: 0.1,
            temperature: 0.001,
            dt_over_tauc: vec![0.125],
            sequence: Sequence::Bb,
            initial_state: InitialState::PlusI,
            t_max_over_tauc: 10.0,
            steps_per_interval: opts.steps_per_interval,
            max_step: opts.max_step,
            rel_tol: opts.quad.rel_tol,
            abs_tol: opts.quad.abs_tol,
            omega_max: opts.quad.omega_max,
            g_theta: None,
            g_lambda: None,
            coherence: opts.coherence,
            output: None,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Accepts plain numbers, `inf`, and powers of two written `2^-3`.
pub fn parse_number(key: &str, text: &str) -> Result<f64, ConfigError> {
    let t = text.trim();
    if let Some(exp) = t.strip_prefix("2^") {
        let e: i32 = exp
            .trim()
            .parse()
            .map_err(|_| value_error(key, format!("bad exponent in `{t}`")))?;
        return Ok(2f64.powi(e));
    }
    match t {
        "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        _ => t
            .parse::<f64>()
            .map_err(|_| value_error(key, format!("`{t}` is not a number"))),
    }
}

fn format_number(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else {
        // Shortest representation that parses back to the same value.
        format!("{x:?}")
    }
}

const KEYS: &[&str] = &[
    "tau_c",
    "ratio",
    "omega0",
    "temperature",
    "dt_over_tauc",
    "sequence",
    "initial_state",
    "t_max_over_tauc",
    "steps_per_interval",
    "max_step",
    "rel_tol",
    "abs_tol",
    "omega_max",
    "g_theta",
    "g_lambda",
    "coherence",
    "output",
];

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg = ScenarioConfig {
            base_dir: base_dir.to_path_buf(),
            ..Default::default()
        };
        let mut seen: Vec<&str> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            if seen.contains(known) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(known);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let num = |v: &str| parse_number(key, v);
        match key {
            "tau_c" => self.tau_c = num(value)?,
            "ratio" => self.ratio = num(value)?,
            "omega0" => self.omega0 = num(value)?,
            "temperature" => self.temperature = num(value)?,
            "dt_over_tauc" => {
                self.dt_over_tauc = value
                    .split(',')
                    .map(|v| num(v))
                    .collect::<Result<_, _>>()?;
            }
            "sequence" => {
                self.sequence = match value {
                    "none" => Sequence::None,
                    "bb" => Sequence::Bb,
                    "bp" => Sequence::Bp,
                    _ => match value.strip_prefix("custom:") {
                        Some(path) if !path.trim().is_empty() => Sequence::Custom(PathBuf::from(path.trim())),
                        _ => return Err(value_error(key, format!("expected none, bb, bp or custom:<file>, got `{value}`"))),
                    },
                }
            }
            "initial_state" => {
                self.initial_state = match value {
                    "plus" => InitialState::Plus,
                    "plus_i" => InitialState::PlusI,
                    _ => {
                        let inner = value
                            .strip_prefix("custom(")
                            .and_then(|v| v.strip_suffix(')'))
                            .ok_or_else(|| {
                                value_error(key, format!("expected plus, plus_i or custom(r11, re, im), got `{value}`"))
                            })?;
                        let parts: Vec<f64> = inner.split(',').map(|v| num(v)).collect::<Result<_, _>>()?;
                        match parts[..] {
                            [rho11, re, im] => InitialState::Custom { rho11, re, im },
                            _ => return Err(value_error(key, "custom state needs three numbers")),
                        }
                    }
                }
            }
            "t_max_over_tauc" => self.t_max_over_tauc = num(value)?,
            "steps_per_interval" => {
                self.steps_per_interval = value
                    .parse()
                    .map_err(|_| value_error(key, format!("`{value}` is not a positive integer")))?
            }
            "max_step" => self.max_step = num(value)?,
            "rel_tol" => self.rel_tol = num(value)?,
            "abs_tol" => self.abs_tol = num(value)?,
            "omega_max" => self.omega_max = num(value)?,
            "g_theta" => self.g_theta = Some(num(value)?),
            "g_lambda" => self.g_lambda = Some(num(value)?),
            "coherence" => {
                self.coherence = match value {
                    "complex" => CoherenceModel::Complex,
                    "real" => CoherenceModel::RealPart,
                    _ => return Err(value_error(key, format!("expected complex or real, got `{value}`"))),
                }
            }
            "output" => self.output = Some(PathBuf::from(value)),
            _ => unreachable!("key list and setter disagree on `{key}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(value_error(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("tau_c", self.tau_c)?;
        positive("omega0", self.omega0)?;
        positive("temperature", self.temperature)?;
        positive("t_max_over_tauc", self.t_max_over_tauc)?;
        if !(self.ratio > 0.0) {
            return Err(value_error("ratio", format!("must be positive, got {}", self.ratio)));
        }
        if self.dt_over_tauc.is_empty() {
            return Err(value_error("dt_over_tauc", "needs at least one value"));
        }
        for &dt in &self.dt_over_tauc {
            positive("dt_over_tauc", dt)?;
        }
        for (key, g) in [("g_theta", self.g_theta), ("g_lambda", self.g_lambda)] {
            if let Some(g) = g {
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(value_error(key, format!("must be non-negative, got {g}")));
                }
            }
        }
        self.initial_state.state()?;
        self.options().validate()?;
        self.params()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("tau_c", format_number(self.tau_c));
        line("ratio", format_number(self.ratio));
        line("omega0", format_number(self.omega0));
        line("temperature", format_number(self.temperature));
        line(
            "dt_over_tauc",
            self.dt_over_tauc.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(", "),
        );
        line(
            "sequence",
            match &self.sequence {
                Sequence::None => "none".to_string(),
                Sequence::Bb => "bb".to_string(),
                Sequence::Bp => "bp".to_string(),
                Sequence::Custom(p) => format!("custom:{}", p.display()),
            },
        );
        line(
            "initial_state",
            match self.initial_state {
                InitialState::Plus => "plus".to_string(),
                InitialState::PlusI => "plus_i".to_string(),
                InitialState::Custom { rho11, re, im } => format!(
                    "custom({}, {}, {})",
                    format_number(rho11),
                    format_number(re),
                    format_number(im)
                ),
            },
        );
        line("t_max_over_tauc", format_number(self.t_max_over_tauc));
        line("steps_per_interval", self.steps_per_interval.to_string());
        line("max_step", format_number(self.max_step));
        line("rel_tol", format_number(self.rel_tol));
        line("abs_tol", format_number(self.abs_tol));
        line("omega_max", format_number(self.omega_max));
        if let Some(g) = self.g_theta {
            line("g_theta", format_number(g));
        }
        if let Some(g) = self.g_lambda {
            line("g_lambda", format_number(g));
        }
        line(
            "coherence",
            match self.coherence {
                CoherenceModel::Complex => "complex".to_string(),
                CoherenceModel::RealPart => "real".to_string(),
            },
        );
        if let Some(out) = &self.output {
            line("output", out.display().to_string());
        }
        s
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn t_max(&self) -> f64 {
        self.t_max_over_tauc * self.tau_c
    }

    pub fn params(&self) -> pulsedd::Result<PhysicalParams> {
        let c = params_from_tau(self.tau_c, self.ratio)?;
        PhysicalParams::new(
            self.omega0,
            self.beta(),
            self.g_theta.unwrap_or(c.g_theta),
            self.g_lambda.unwrap_or(c.g_lambda),
        )
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            omega_max: self.omega_max,
            ..QuadratureSpec::default()
        }
    }

    pub fn options(&self) -> EvolveOptions {
        EvolveOptions {
            steps_per_interval: self.steps_per_interval,
            max_step: self.max_step,
            quad: self.quadrature(),
            coherence: self.coherence,
        }
    }

    /// Pulse schedule for one spacing; `dt_over_tauc` is ignored for `none` and custom sequences.
    pub fn schedule(&self, dt_over_tauc: f64) -> Result<PulseSchedule, ConfigError> {
        let dt = dt_over_tauc * self.tau_c;
        Ok(match &self.sequence {
            Sequence::None => PulseSchedule::empty(),
            Sequence::Bb => PulseSchedule::bb(dt, self.t_max())?,
            Sequence::Bp => PulseSchedule::bp(dt, self.t_max())?,
            Sequence::Custom(path) => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    self.base_dir.join(path)
                };
                load_schedule(&path, self.tau_c)?
            }
        })
    }

    /// Spacings to run: one entry per `dt_over_tauc` value for periodic sequences, a single run otherwise.
    pub fn sweep(&self) -> Vec<Option<f64>> {
        match self.sequence {
            Sequence::Bb | Sequence::Bp => self.dt_over_tauc.iter().map(|&d| Some(d)).collect(),
            Sequence::None | Sequence::Custom(_) => vec![None],
        }
    }
}

/// Reads `<time / tau_c> <X|Z>` lines (with `#` comments) into a schedule.
pub fn load_schedule(path: &Path, tau_c: f64) -> Result<PulseSchedule, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_schedule(&text, tau_c)
}

pub fn parse_schedule(text: &str, tau_c: f64) -> Result<PulseSchedule, ConfigError> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let (Some(time), Some(axis), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("expected `<time_over_tauc> <X|Z>`, got `{content}`"),
            });
        };
        let time = parse_number("schedule time", time)? * tau_c;
        let axis = match axis {
            "X" | "x" => Axis::X,
            "Z" | "z" => Axis::Z,
            _ => {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("axis must be X or Z, got `{axis}`"),
                })
            }
        };
        events.push(PulseEvent { time, axis });
    }
    Ok(PulseSchedule::new(events)?)
}
