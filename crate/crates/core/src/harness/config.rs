//! Scenario files: flat `key = value` lines, `#` comments.
//!
//! ```text
//! coupling = rabi
//! lambda = 0.02
//! alpha = 10
//! field = displaced_fock:1
//! engines = exact, fbrwa
//! t_end = 282.84
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fbrwa::{DiagonalTerms, QcfdOptions};
use crate::floquet::{DEFAULT_HARMONIC_CUTOFF, DEFAULT_SAMPLES_PER_PERIOD};
use crate::fockspace::FieldStateSpec;
use crate::fullmodel::{Coupling, ModelParams};

/// Environment variable that overrides every Fock truncation.
pub const FOCK_DIM_ENV: &str = "QCFD_FOCK_DIM";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Exact,
    Fbrwa,
    ClosedForm,
    Qcfd,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Exact, Engine::Fbrwa, Engine::ClosedForm, Engine::Qcfd];

    pub fn label(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::Fbrwa => "fbrwa",
            Engine::ClosedForm => "closed_form",
            Engine::Qcfd => "qcfd",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.label() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown engine '{s}' (exact, fbrwa, closed_form, qcfd)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::Config(format!("unknown format '{other}' (csv, svg)"))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Svg => "svg",
        }
    }
}

/// Uniform grid `t_start..=t_end` with `n_points` samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    /// A single point is allowed only for `t_start == t_end`.
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self> {
        let g = Self {
            t_start,
            t_end,
            n_points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_start < 0.0 {
            return Err(Error::Config("time grid needs finite 0 <= t_start <= t_end".into()));
        }
        if self.t_end == self.t_start {
            if self.n_points != 1 && self.n_points != 2 {
                return Err(Error::Config("degenerate time grid takes a single point".into()));
            }
            return Ok(());
        }
        if self.t_end < self.t_start {
            return Err(Error::Config("t_end must be >= t_start".into()));
        }
        if self.n_points < 2 {
            return Err(Error::Config("n_points must be >= 2".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        if self.t_end == self.t_start {
            return vec![self.t_start];
        }
        let span = self.t_end - self.t_start;
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|j| {
                if j + 1 == self.n_points {
                    self.t_end
                } else {
                    self.t_start + span * j as f64 / last
                }
            })
            .collect()
    }
}

/// How the frame displacement `alpha` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// `<phi_0|a|phi_0>`.
    Mean,
    /// The displacement parameter of the field specification.
    Field,
}

/// Initial field as given in a scenario, before the reference is fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldKind {
    Coherent,
    DisplacedFock(usize),
    /// `(D(beta)|0> + e^{-i xi} D(beta)|1>)/sqrt(2)`.
    Superposition { xi: f64 },
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "coherent" {
            return Ok(FieldKind::Coherent);
        }
        if s == "superposition" {
            return Ok(FieldKind::Superposition { xi: 0.0 });
        }
        if let Some(n) = s.strip_prefix("displaced_fock:") {
            let n = n
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad Fock index in '{s}'")))?;
            return Ok(FieldKind::DisplacedFock(n));
        }
        Err(Error::Config(format!(
            "unknown field '{s}' (coherent, displaced_fock:N, superposition)"
        )))
    }
}

/// Source of the Floquet states used by the fbrwa and qcfd engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloquetBackend {
    /// Closed form for the JCM, propagator-based otherwise.
    Auto,
    Numerical,
    Shirley,
}

impl FromStr for FloquetBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(FloquetBackend::Auto),
            "numerical" => Ok(FloquetBackend::Numerical),
            "shirley" => Ok(FloquetBackend::Shirley),
            other => Err(Error::Config(format!(
                "floquet_backend: expected auto, numerical or shirley, got '{other}'"
            ))),
        }
    }
}

/// Everything needed to run and emit one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: ModelParams,
    /// Displacement `alpha` (or `beta`) of the initial field.
    pub field_alpha: Complex64,
    pub field_kind: FieldKind,
    pub initial_spin: [Complex64; 2],
    pub grid: TimeGrid,
    pub engines: Vec<Engine>,
    pub fock_dim_override: Option<usize>,
    pub floquet_backend: FloquetBackend,
    pub harmonic_cutoff: usize,
    pub samples_per_period: usize,
    pub qcfd: QcfdOptions,
    pub output: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
}

const KEYS: &[&str] = &[
    "name",
    "coupling",
    "omega0",
    "omega_spin",
    "lambda",
    "alpha",
    "alpha_phase",
    "field",
    "xi",
    "reference",
    "spin",
    "t_start",
    "t_end",
    "n_points",
    "engines",
    "fock_dim",
    "floquet_backend",
    "harmonic_cutoff",
    "samples_per_period",
    "qcfd_off_diagonal",
    "qcfd_diagonal",
    "qcfd_rtol",
    "output",
    "format",
];

/// Parses `key = value` text into a map; later lines override earlier ones.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn num<T: FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'"))),
    }
}

fn boolean(map: &BTreeMap<String, String>, key: &str, default: bool) -> Result<bool> {
    match map.get(key).map(|s| s.as_str()) {
        None => Ok(default),
        Some("true" | "yes" | "1" | "on") => Ok(true),
        Some("false" | "no" | "0" | "off") => Ok(false),
        Some(v) => Err(Error::Config(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

fn parse_spin(s: &str) -> Result<[Complex64; 2]> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    match s.trim() {
        "up" => Ok([one, zero]),
        "down" => Ok([zero, one]),
        other => {
            let angles = other
                .strip_prefix("bloch:")
                .ok_or_else(|| Error::Config(format!("spin: expected up, down or bloch:theta,phi, got '{other}'")))?;
            let (th, ph) = angles
                .split_once(',')
                .ok_or_else(|| Error::Config("spin: bloch needs theta,phi".into()))?;
            let th: f64 = th.trim().parse().map_err(|_| Error::Config("spin: bad theta".into()))?;
            let ph: f64 = ph.trim().parse().map_err(|_| Error::Config("spin: bad phi".into()))?;
            Ok([
                Complex64::new((0.5 * th).cos(), 0.0),
                Complex64::from_polar((0.5 * th).sin(), ph),
            ])
        }
    }
}

fn list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        out.push(item.parse()?);
    }
    Ok(out)
}

impl ScenarioConfig {
    /// Parses scenario text, then applies `overrides` as extra `key = value` pairs.
    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = parse_pairs(text)?;
        for (k, v) in overrides {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown override '{k}'")));
            }
            map.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&map)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_text(&text, overrides)?;
        if cfg.name.is_empty() {
            cfg.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        let coupling: Coupling = map
            .get("coupling")
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(Coupling::Jcm);
        let omega0 = num(map, "omega0", 1.0)?;
        let omega_spin = num(map, "omega_spin", omega0)?;
        let lambda: f64 = num(map, "lambda", 0.05)?;
        let amp: f64 = num(map, "alpha", 10.0)?;
        let phase: f64 = num(map, "alpha_phase", 0.0)?;
        let mut field_kind: FieldKind = map
            .get("field")
            .map(|s| s.parse())
            .transpose()?
            .unwrap_or(FieldKind::Coherent);
        if let FieldKind::Superposition { xi } = &mut field_kind {
            *xi = num(map, "xi", 0.0)?;
        } else if map.contains_key("xi") {
            return Err(Error::Config("xi applies only to field = superposition".into()));
        }
        let reference = match map.get("reference").map(|s| s.as_str()) {
            None | Some("mean") => Reference::Mean,
            Some("field") => Reference::Field,
            Some(v) => return Err(Error::Config(format!("reference: expected mean or field, got '{v}'"))),
        };
        if !(amp.is_finite() && amp >= 0.0 && phase.is_finite()) {
            return Err(Error::Config("alpha must be finite and >= 0".into()));
        }
        let field_alpha = Complex64::from_polar(amp, phase);
        let field = field_spec(field_kind, field_alpha);
        let reference_alpha = match reference {
            Reference::Field => field_alpha,
            Reference::Mean => field.mean_displacement()?,
        };
        let params = ModelParams::new(
            omega0,
            omega_spin,
            lambda,
            coupling,
            reference_alpha.norm(),
            reference_alpha.arg(),
        )
        .map_err(|e| Error::Config(e.to_string()))?;

        let t_start = num(map, "t_start", 0.0)?;
        let default_end = if lambda > 0.0 {
            4.0 * std::f64::consts::SQRT_2 / lambda
        } else {
            100.0
        };
        let t_end = num(map, "t_end", default_end)?;
        let n_points = num(map, "n_points", 2001usize)?;
        let n_points = if t_end == t_start && !map.contains_key("n_points") {
            1
        } else {
            n_points
        };
        let grid = TimeGrid::new(t_start, t_end, n_points)?;

        let engines = match map.get("engines") {
            None => vec![Engine::Exact, Engine::Fbrwa],
            Some(s) => list::<Engine>(s)?,
        };
        if engines.is_empty() {
            return Err(Error::Config("at least one engine must be selected".into()));
        }
        let mut engines_dedup = Vec::new();
        for e in engines {
            if !engines_dedup.contains(&e) {
                engines_dedup.push(e);
            }
        }

        let fock_dim_override = map
            .get("fock_dim")
            .map(|v| {
                v.parse::<usize>()
                    .ok()
                    .filter(|&d| d >= 2)
                    .ok_or_else(|| Error::Config(format!("fock_dim: expected an integer >= 2, got '{v}'")))
            })
            .transpose()?;
        let diagonal = match map.get("qcfd_diagonal").map(|s| s.as_str()) {
            None | Some("full") => DiagonalTerms::Full,
            Some("static") => DiagonalTerms::Static,
            Some(v) => return Err(Error::Config(format!("qcfd_diagonal: expected full or static, got '{v}'"))),
        };
        let qcfd = QcfdOptions {
            off_diagonal: boolean(map, "qcfd_off_diagonal", true)?,
            diagonal,
            rtol: num(map, "qcfd_rtol", 1e-10)?,
        };
        let formats = match map.get("format") {
            None => vec![OutputFormat::Csv],
            Some(s) => list::<OutputFormat>(s)?,
        };
        Ok(Self {
            name: map.get("name").cloned().unwrap_or_default(),
            params,
            field_alpha,
            field_kind,
            initial_spin: parse_spin(map.get("spin").map(|s| s.as_str()).unwrap_or("up"))?,
            grid,
            engines: engines_dedup,
            fock_dim_override,
            floquet_backend: map
                .get("floquet_backend")
                .map(|s| s.parse())
                .transpose()?
                .unwrap_or(FloquetBackend::Auto),
            harmonic_cutoff: num(map, "harmonic_cutoff", DEFAULT_HARMONIC_CUTOFF)?,
            samples_per_period: num(map, "samples_per_period", DEFAULT_SAMPLES_PER_PERIOD)?,
            qcfd,
            output: map.get("output").map(PathBuf::from),
            formats,
        })
    }

    pub fn field(&self) -> FieldStateSpec {
        field_spec(self.field_kind, self.field_alpha)
    }

    /// Canonical text of the physical content (model, field, spin), hashed into CSV rows.
    pub fn canonical_physics(&self) -> String {
        format!(
            "{:?}|{:?}|{:?}|{:?}",
            self.params, self.field_kind, self.field_alpha, self.initial_spin
        )
    }
}

fn field_spec(kind: FieldKind, alpha: Complex64) -> FieldStateSpec {
    match kind {
        FieldKind::Coherent => FieldStateSpec::coherent(alpha),
        FieldKind::DisplacedFock(n) => FieldStateSpec::displaced_fock(alpha, n),
        FieldKind::Superposition { xi } => FieldStateSpec::two_level_superposition(alpha, xi),
    }
}

/// `QCFD_FOCK_DIM`, if set.
pub fn fock_dim_from_env() -> Result<Option<usize>> {
    match std::env::var(FOCK_DIM_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{FOCK_DIM_ENV}: {e}"))),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d >= 2)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{FOCK_DIM_ENV}: expected an integer >= 2, got '{v}'"))),
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../../presets/fig1a.cfg")),
    ("fig1b", include_str!("../../presets/fig1b.cfg")),
    ("fig1c", include_str!("../../presets/fig1c.cfg")),
    ("fig1d", include_str!("../../presets/fig1d.cfg")),
    ("fig2a", include_str!("../../presets/fig2a.cfg")),
    ("fig2b", include_str!("../../presets/fig2b.cfg")),
    ("fig2c", include_str!("../../presets/fig2c.cfg")),
    ("fig3", include_str!("../../presets/fig3.cfg")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Text of a named figure preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// A named figure preset with optional overrides.
pub fn preset(name: &str, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
    let text = preset_text(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown figure '{name}' (available: {})",
            preset_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    ScenarioConfig::from_text(text, overrides)
}
