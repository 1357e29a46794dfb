//! Batch front end: sectioned `key = value` run files, command dispatch,
//! CSV and gnuplot outputs, and a checksummed manifest.
//!
//! A run file is TOML restricted to one level of sections:
//!
//! ```text
//! [run]
//! command = "fdt"
//! [model]
//! kind = "ohmic"
//! gamma = 1.0
//! [bath]
//! temperature = 2.0
//! mode = "classical"
//! [grid]
//! min = 0.1
//! max = 10.0
//! points = 50
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{Matrix3, Rotation3};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::cherenkov::{self, ChargedParticle, CherenkovConfig, Permittivity};
use crate::dynamics::{propagators, MsdEvaluator, ParticleSpec};
use crate::error::Error;
use crate::langevin_sim::{ensemble_msd, simulate, SimulationConfig};
use crate::medium::{LorentzAxis, SusceptibilityModel};
use crate::noise::{noise_spectrum, regulator, BathMode, BathState};
use crate::numerics::{InverseLaplaceSpec, QuadratureSpec};
use crate::rates::{self, OscillatorState, TwoLevelAtom};
use crate::tensor::{upper, Vec3};
use crate::units::UnitSystem;

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fdt,
    Kk,
    Msd,
    Propagators,
    Simulate,
    Rates,
    Decay,
    Cherenkov,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Fdt,
        Command::Kk,
        Command::Msd,
        Command::Propagators,
        Command::Simulate,
        Command::Rates,
        Command::Decay,
        Command::Cherenkov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Fdt => "fdt",
            Command::Kk => "kk",
            Command::Msd => "msd",
            Command::Propagators => "propagators",
            Command::Simulate => "simulate",
            Command::Rates => "rates",
            Command::Decay => "decay",
            Command::Cherenkov => "cherenkov",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Command::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s))
    }

    fn required_blocks(self) -> &'static [&'static str] {
        match self {
            Command::Fdt => &["model", "bath", "grid"],
            Command::Kk => &["model", "grid"],
            Command::Msd => &["model", "bath", "particle", "grid"],
            Command::Propagators => &["model", "particle", "grid"],
            Command::Simulate => &["model", "bath", "particle", "grid"],
            Command::Rates => &["model", "bath", "oscillator"],
            Command::Decay => &["model", "atom"],
            Command::Cherenkov => &["charge", "grid"],
        }
    }
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["command", "seed", "output"]),
    ("units", &["hbar", "kb", "c", "eps0", "mu0"]),
    ("model", &["kind", "gamma", "beta", "nu", "euler", "table"]),
    ("bath", &["temperature", "mode", "cutoff"]),
    ("particle", &["mass", "omega0", "q0", "p0"]),
    (
        "grid",
        &["min", "max", "points", "spacing", "nodes", "dt", "steps", "paths", "record_every", "window"],
    ),
    ("oscillator", &["mode", "levels", "mass", "omega0"]),
    ("atom", &["omega0", "dipole", "dipole_im"]),
    (
        "charge",
        &["mass", "charge", "speed", "direction", "k_max", "quantum_correction", "include_recoil", "phi_nodes"],
    ),
    ("permittivity", &["index", "loss"]),
];

const MODEL_KEYS: &[(&str, &[&str])] = &[
    ("ohmic", &["kind", "gamma", "euler"]),
    ("lorentz", &["kind", "beta", "nu", "gamma", "euler"]),
    ("tabulated", &["kind", "table"]),
];

/// Failure of a CLI run, mapped to the process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Configuration problems, all reported together.
    Config(Vec<String>),
    Library(Error),
}

impl RunError {
    /// 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Library(e) if e.is_validation() => 1,
            RunError::Library(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(errs) => {
                for (i, e) in errs.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "config error: {e}")?;
                }
                Ok(())
            }
            RunError::Library(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Library(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Library(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    File,
    Override,
}

/// Flat `section.key → value` view of a run file after overrides.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, toml::Value>,
    origin: BTreeMap<String, Origin>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| RunError::Config(vec![format!("parse error: {}", e.message())]))?;
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (section, body) in table {
            match body {
                toml::Value::Table(t) => {
                    for (k, v) in t {
                        if v.is_table() {
                            errors.push(format!("nested table `{section}.{k}` is not allowed"));
                            continue;
                        }
                        let key = format!("{section}.{k}");
                        raw.origin.insert(key.clone(), Origin::File);
                        raw.values.insert(key, v);
                    }
                }
                _ => errors.push(format!("key `{section}` must sit inside a [section]")),
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(RunError::Config(errors))
        }
    }

    /// Applies `section.key=value`; later overrides of the same key win.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), RunError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(RunError::Config(vec![format!("override `{assignment}` must have the form section.key=value")]));
        };
        let key = key.trim();
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(RunError::Config(vec![format!("override key `{key}` must have the form section.key")]));
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .filter(|v| !v.is_table())
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        self.origin.insert(key.to_string(), Origin::Override);
        self.values.insert(key.to_string(), parsed);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&toml::Value> {
        self.values.get(key)
    }

    fn has_section(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        self.values.keys().any(|k| k.starts_with(&prefix))
    }

    fn keys_in<'a>(&'a self, section: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let prefix = format!("{section}.");
        self.values
            .keys()
            .filter_map(move |k| k.strip_prefix(prefix.as_str()))
    }

    /// Sorted `section.key = value` lines.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    fn describe(&self, key: &str) -> String {
        match self.origin.get(key) {
            Some(Origin::Override) => format!("`{key}` (from override)"),
            _ => format!("`{key}`"),
        }
    }
}

/// Typed, error-collecting access to a `RawConfig`.
struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn number(&mut self, key: &str) -> Option<f64> {
        match self.raw.get(key) {
            None => {
                self.errors.push(format!("missing key `{key}`"));
                None
            }
            Some(v) => self.as_number(key, v),
        }
    }

    fn as_number(&mut self, key: &str, v: &toml::Value) -> Option<f64> {
        let x = match v {
            toml::Value::Float(x) => Some(*x),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => None,
        };
        if x.is_none() {
            self.errors.push(format!("{} must be a number, got {v}", self.raw.describe(key)));
        }
        x
    }

    fn number_or(&mut self, key: &str, default: f64) -> Option<f64> {
        match self.raw.get(key) {
            None => Some(default),
            Some(v) => self.as_number(key, v),
        }
    }

    fn checked(&mut self, key: &str, x: Option<f64>, ok: fn(f64) -> bool, what: &str) -> Option<f64> {
        let x = x?;
        if ok(x) {
            Some(x)
        } else {
            self.errors.push(format!("{} must be {what}, got {x}", self.raw.describe(key)));
            None
        }
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let x = self.number(key);
        self.checked(key, x, |x| x > 0.0 && x.is_finite(), "> 0")
    }

    fn positive_or(&mut self, key: &str, default: f64) -> Option<f64> {
        let x = self.number_or(key, default);
        self.checked(key, x, |x| x > 0.0 && x.is_finite(), "> 0")
    }

    fn nonnegative(&mut self, key: &str) -> Option<f64> {
        let x = self.number(key);
        self.checked(key, x, |x| x >= 0.0 && x.is_finite(), ">= 0")
    }

    fn nonnegative_or(&mut self, key: &str, default: f64) -> Option<f64> {
        let x = self.number_or(key, default);
        self.checked(key, x, |x| x >= 0.0 && x.is_finite(), ">= 0")
    }

    fn integer_or(&mut self, key: &str, default: Option<u64>) -> Option<u64> {
        match (self.raw.get(key), default) {
            (None, Some(d)) => Some(d),
            (None, None) => {
                self.errors.push(format!("missing key `{key}`"));
                None
            }
            (Some(toml::Value::Integer(i)), _) if *i >= 0 => Some(*i as u64),
            (Some(v), _) => {
                self.errors.push(format!("{} must be a non-negative integer, got {v}", self.raw.describe(key)));
                None
            }
        }
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        self.integer_or(key, None)
    }

    fn flag_or(&mut self, key: &str, default: bool) -> Option<bool> {
        match self.raw.get(key) {
            None => Some(default),
            Some(toml::Value::Boolean(b)) => Some(*b),
            Some(v) => {
                self.errors.push(format!("{} must be true or false, got {v}", self.raw.describe(key)));
                None
            }
        }
    }

    fn text(&mut self, key: &str) -> Option<String> {
        match self.raw.get(key) {
            None => {
                self.errors.push(format!("missing key `{key}`"));
                None
            }
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(v) => {
                self.errors.push(format!("{} must be a string, got {v}", self.raw.describe(key)));
                None
            }
        }
    }

    /// One number, or a list of three.
    fn triple(&mut self, key: &str) -> Option<[f64; 3]> {
        match self.raw.get(key) {
            None => {
                self.errors.push(format!("missing key `{key}`"));
                None
            }
            Some(toml::Value::Array(a)) => {
                let xs: Vec<Option<f64>> = a.iter().map(|v| self.as_number(key, v)).collect();
                if xs.len() != 3 {
                    self.errors.push(format!("{} must list 3 numbers, got {}", self.raw.describe(key), xs.len()));
                    return None;
                }
                Some([xs[0]?, xs[1]?, xs[2]?])
            }
            Some(v) => self.as_number(key, v).map(|x| [x; 3]),
        }
    }

    fn vector_or(&mut self, key: &str, default: Vec3) -> Option<Vec3> {
        match self.raw.get(key) {
            None => Some(default),
            Some(toml::Value::Array(_)) => self.triple(key).map(Vec3::from),
            Some(v) => {
                self.errors.push(format!("{} must list 3 numbers, got {v}", self.raw.describe(key)));
                None
            }
        }
    }

    fn module(&mut self, block: &str, r: crate::error::Result<()>) -> bool {
        match r {
            Ok(()) => true,
            Err(e) => {
                self.errors.push(format!("[{block}] {e}"));
                false
            }
        }
    }
}

/// Sampling grid from `[grid] min, max, points, spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub logarithmic: bool,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let u = i as f64 / n;
                if i + 1 == self.points {
                    self.max
                } else if self.logarithmic {
                    (self.min.ln() + u * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + u * (self.max - self.min)
                }
            })
            .collect()
    }
}

/// Validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub units: UnitSystem,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub model: Option<SusceptibilityModel>,
    pub bath: Option<BathState>,
    pub cutoff: Option<f64>,
    pub particle: Option<ParticleSpec>,
    pub grid: Option<Grid>,
    pub inversion_nodes: usize,
    pub simulation: Option<SimulationConfig>,
    pub oscillator: Option<(OscillatorState, u32)>,
    pub atom: Option<TwoLevelAtom>,
    pub cherenkov: Option<CherenkovConfig>,
    pub config_hash: String,
    pub canonical: String,
}

impl RunConfig {
    /// Reads `path` and applies `overrides` in order.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, RunError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base, overrides)
    }

    /// `base_dir` resolves relative table paths.
    pub fn from_text(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self, RunError> {
        let mut raw = RawConfig::parse(text)?;
        let mut errors = Vec::new();
        for o in overrides {
            if let Err(RunError::Config(e)) = raw.apply_override(o) {
                errors.extend(e);
            }
        }
        if !errors.is_empty() {
            return Err(RunError::Config(errors));
        }
        build(&raw, base_dir)
    }
}

/// Dry-run validation; every problem found is returned.
pub fn validate(path: &Path, overrides: &[String]) -> Vec<String> {
    match RunConfig::load(path, overrides) {
        Ok(_) => Vec::new(),
        Err(RunError::Config(e)) => e,
        Err(e) => vec![e.to_string()],
    }
}

fn check_keys(raw: &RawConfig, errors: &mut Vec<String>) {
    let sections: BTreeSet<&str> = raw.values.keys().filter_map(|k| k.split_once('.').map(|p| p.0)).collect();
    for section in sections {
        let Some((_, allowed)) = SCHEMA.iter().find(|(s, _)| *s == section) else {
            let keys: Vec<String> = raw.keys_in(section).map(|k| format!("{section}.{k}")).collect();
            errors.push(format!("unknown section [{section}] (keys: {})", keys.join(", ")));
            continue;
        };
        let unknown: Vec<String> = raw
            .keys_in(section)
            .filter(|k| !allowed.contains(k))
            .map(|k| format!("{section}.{k}"))
            .collect();
        if !unknown.is_empty() {
            errors.push(format!("unknown keys: {}", unknown.join(", ")));
        }
    }
}

fn build(raw: &RawConfig, base_dir: &Path) -> Result<RunConfig, RunError> {
    let mut errors = Vec::new();
    check_keys(raw, &mut errors);
    let mut r = Reader { raw, errors };

    let command = match raw.get("run.command") {
        None => {
            r.errors.push("missing [run] block with `run.command`".into());
            None
        }
        Some(toml::Value::String(s)) => {
            let c = Command::parse(s);
            if c.is_none() {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                r.errors.push(format!("unknown command `{s}`; expected one of {}", names.join(", ")));
            }
            c
        }
        Some(v) => {
            r.errors.push(format!("`run.command` must be a single command name, got {v}"));
            None
        }
    };
    let seed = r.integer_or("run.seed", Some(0)).unwrap_or(0);
    let output = match raw.get("run.output") {
        None => None,
        Some(_) => r.text("run.output").map(|s| base_dir.join(s)),
    };

    let units = read_units(&mut r);
    let model = raw.has_section("model").then(|| read_model(&mut r, base_dir)).flatten();
    let (bath, cutoff) = if raw.has_section("bath") {
        read_bath(&mut r, &units)
    } else {
        (None, None)
    };
    let particle = raw.has_section("particle").then(|| read_particle(&mut r)).flatten();

    if let Some(c) = command {
        for block in c.required_blocks() {
            if !raw.has_section(block) {
                r.errors.push(format!("missing [{block}] block required by `{}`", c.name()));
            }
        }
        if c == Command::Cherenkov && !raw.has_section("model") && !raw.has_section("permittivity") {
            r.errors.push("missing [model] or [permittivity] block required by `cherenkov`".into());
        }
        if c == Command::Cherenkov && raw.has_section("model") && raw.has_section("permittivity") {
            r.errors.push("[model] and [permittivity] conflict: give only one for `cherenkov`".into());
        }
    }

    let mut cfg = RunConfig {
        command: command.unwrap_or(Command::Fdt),
        units,
        seed,
        output,
        model,
        bath,
        cutoff,
        particle,
        grid: None,
        inversion_nodes: 32,
        simulation: None,
        oscillator: None,
        atom: None,
        cherenkov: None,
        config_hash: raw.hash(),
        canonical: raw.canonical(),
    };

    if raw.has_section("grid") {
        match command {
            Some(Command::Simulate) => read_simulation(&mut r, &mut cfg),
            Some(Command::Cherenkov) | Some(Command::Fdt) | Some(Command::Kk) | Some(Command::Msd)
            | Some(Command::Propagators) => {
                cfg.grid = read_grid(&mut r, command.unwrap());
                if command == Some(Command::Propagators) {
                    cfg.inversion_nodes = r.integer_or("grid.nodes", Some(32)).unwrap_or(32) as usize;
                    let spec = InverseLaplaceSpec {
                        node_count: cfg.inversion_nodes,
                        ..Default::default()
                    };
                    r.module("grid", spec.validate());
                }
            }
            _ => {}
        }
    }
    if raw.has_section("oscillator") {
        cfg.oscillator = read_oscillator(&mut r);
    }
    if raw.has_section("atom") {
        cfg.atom = read_atom(&mut r, &units);
    }
    if raw.has_section("charge") {
        cfg.cherenkov = read_cherenkov(&mut r, &cfg);
    }
    if raw.has_section("permittivity") && !raw.has_section("charge") {
        read_permittivity(&mut r);
    }

    if r.errors.is_empty() && command.is_some() {
        Ok(cfg)
    } else {
        Err(RunError::Config(r.errors))
    }
}

fn read_units(r: &mut Reader) -> UnitSystem {
    let d = UnitSystem::default();
    let u = UnitSystem {
        hbar: r.positive_or("units.hbar", d.hbar).unwrap_or(d.hbar),
        kb: r.positive_or("units.kb", d.kb).unwrap_or(d.kb),
        c: r.positive_or("units.c", d.c).unwrap_or(d.c),
        eps0: r.positive_or("units.eps0", d.eps0).unwrap_or(d.eps0),
        mu0: r.positive_or("units.mu0", d.mu0).unwrap_or(d.mu0),
    };
    if let Err(e) = u.validate() {
        r.errors.push(format!("[units] {e}"));
    }
    u
}

fn rotation(r: &mut Reader) -> Option<Matrix3<f64>> {
    if r.raw.get("model.euler").is_none() {
        return Some(Matrix3::identity());
    }
    let [a, b, c] = r.triple("model.euler")?;
    Some(Rotation3::from_euler_angles(a, b, c).into_inner())
}

fn read_model(r: &mut Reader, base_dir: &Path) -> Option<SusceptibilityModel> {
    let kind = r.text("model.kind")?.to_ascii_lowercase();
    let Some((_, allowed)) = MODEL_KEYS.iter().find(|(k, _)| *k == kind) else {
        r.errors.push(format!(
            "{} must be one of ohmic, lorentz, tabulated, got `{kind}`",
            r.raw.describe("model.kind")
        ));
        return None;
    };
    let conflicting: Vec<String> = r
        .raw
        .keys_in("model")
        .filter(|k| !allowed.contains(k) && SCHEMA[2].1.contains(k))
        .map(|k| r.raw.describe(&format!("model.{k}")))
        .collect();
    if !conflicting.is_empty() {
        r.errors.push(format!("keys {} conflict with model.kind = {kind}", conflicting.join(", ")));
        return None;
    }
    let result = match kind.as_str() {
        "ohmic" => {
            let g = r.triple("model.gamma");
            let rot = rotation(r);
            let (g, rot) = (g?, rot?);
            SusceptibilityModel::ohmic(rot * Matrix3::from_diagonal(&Vec3::from(g)) * rot.transpose())
        }
        "lorentz" => {
            let b = r.triple("model.beta");
            let n = r.triple("model.nu");
            let g = r.triple("model.gamma");
            let rot = rotation(r);
            let (b, n, g, rot) = (b?, n?, g?, rot?);
            let axes = [0, 1, 2].map(|i| LorentzAxis::new(b[i], n[i], g[i]));
            SusceptibilityModel::lorentz(axes, rot)
        }
        _ => {
            let path = base_dir.join(r.text("model.table")?);
            SusceptibilityModel::tabulated_from_csv(&path)
        }
    };
    match result {
        Ok(m) => Some(m),
        Err(e) => {
            r.errors.push(format!("[model] {e}"));
            None
        }
    }
}

fn read_bath(r: &mut Reader, units: &UnitSystem) -> (Option<BathState>, Option<f64>) {
    let t = r.nonnegative("bath.temperature");
    let mode = match r.raw.get("bath.mode") {
        None => Some(BathMode::Quantum),
        Some(_) => match r.text("bath.mode").map(|s| s.to_ascii_lowercase()) {
            Some(s) if s == "quantum" => Some(BathMode::Quantum),
            Some(s) if s == "classical" => Some(BathMode::Classical),
            Some(s) => {
                r.errors.push(format!("{} must be quantum or classical, got `{s}`", r.raw.describe("bath.mode")));
                None
            }
            None => None,
        },
    };
    let cutoff = match r.raw.get("bath.cutoff") {
        None => None,
        Some(_) => r.positive("bath.cutoff"),
    };
    let bath = match (t, mode) {
        (Some(t), Some(mode)) => match BathState::new(t, mode, units) {
            Ok(b) => Some(b),
            Err(e) => {
                r.errors.push(format!("[bath] {e}"));
                None
            }
        },
        _ => None,
    };
    (bath, cutoff)
}

fn read_particle(r: &mut Reader) -> Option<ParticleSpec> {
    let mass = r.positive("particle.mass");
    let omega0 = r.nonnegative_or("particle.omega0", 0.0);
    let q0 = r.vector_or("particle.q0", Vec3::zeros());
    let p0 = r.vector_or("particle.p0", Vec3::zeros());
    let p = ParticleSpec {
        q0: q0?,
        p0: p0?,
        ..ParticleSpec::oscillator(mass?, omega0?)
    };
    r.module("particle", p.validate()).then_some(p)
}

fn read_grid(r: &mut Reader, command: Command) -> Option<Grid> {
    let min = r.positive("grid.min");
    let max = r.positive("grid.max");
    let points = r.integer("grid.points");
    let logarithmic = match r.raw.get("grid.spacing") {
        None => Some(false),
        Some(_) => match r.text("grid.spacing").map(|s| s.to_ascii_lowercase()) {
            Some(s) if s == "linear" => Some(false),
            Some(s) if s == "log" => Some(true),
            Some(s) => {
                r.errors.push(format!("{} must be linear or log, got `{s}`", r.raw.describe("grid.spacing")));
                None
            }
            None => None,
        },
    };
    let (min, max, points, logarithmic) = (min?, max?, points?, logarithmic?);
    if points == 0 || (points > 1 && max <= min) {
        r.errors.push(format!(
            "`grid` for `{}` needs points >= 1 and max > min, got min={min}, max={max}, points={points}",
            command.name()
        ));
        return None;
    }
    Some(Grid {
        min,
        max,
        points: points as usize,
        logarithmic,
    })
}

fn read_simulation(r: &mut Reader, cfg: &mut RunConfig) {
    let dt = r.positive("grid.dt");
    let steps = r.integer("grid.steps");
    let paths = r.integer("grid.paths");
    let record_every = r.integer_or("grid.record_every", Some(1));
    let window = match r.raw.get("grid.window") {
        None => Some(None),
        Some(_) => r.positive("grid.window").map(Some),
    };
    let (Some(dt), Some(steps), Some(paths), Some(record_every), Some(window)) = (dt, steps, paths, record_every, window)
    else {
        return;
    };
    let (Some(model), Some(particle), Some(bath)) = (&cfg.model, &cfg.particle, &cfg.bath) else {
        return;
    };
    let mut sim = SimulationConfig::new(
        model.clone(),
        particle.clone(),
        *bath,
        dt,
        steps as usize,
        paths as usize,
        cfg.seed,
    );
    sim.record_every = record_every as usize;
    if let Some(w) = window {
        sim.kernel_truncation_window = w;
    }
    if r.module("grid", sim.validate()) {
        cfg.simulation = Some(sim);
    }
}

fn read_oscillator(r: &mut Reader) -> Option<(OscillatorState, u32)> {
    let mode = r.integer("oscillator.mode");
    let levels = r.integer_or("oscillator.levels", Some(4));
    let mass = r.positive("oscillator.mass");
    let omega0 = r.positive("oscillator.omega0");
    let s = OscillatorState {
        mode: mode? as usize,
        quantum_number: 0,
        mass: mass?,
        omega0: omega0?,
    };
    let levels = levels?;
    if levels > u32::MAX as u64 {
        r.errors.push("`oscillator.levels` is too large".into());
        return None;
    }
    r.module("oscillator", s.validate()).then_some((s, levels as u32))
}

fn read_atom(r: &mut Reader, units: &UnitSystem) -> Option<TwoLevelAtom> {
    let w = r.positive("atom.omega0");
    let re = r.triple("atom.dipole");
    let im = if r.raw.get("atom.dipole_im").is_some() {
        r.triple("atom.dipole_im")
    } else {
        Some([0.0; 3])
    };
    let (w, re, im) = (w?, re?, im?);
    let q = [0, 1, 2].map(|i| Complex64::new(re[i], im[i]));
    match TwoLevelAtom::new(w, q.into(), units) {
        Ok(a) => Some(a),
        Err(e) => {
            r.errors.push(format!("[atom] {e}"));
            None
        }
    }
}

fn read_permittivity(r: &mut Reader) -> Option<Permittivity> {
    let n = r.positive("permittivity.index");
    let loss = r.nonnegative_or("permittivity.loss", 0.0);
    Some(Permittivity::nondispersive(n?, loss?))
}

fn read_cherenkov(r: &mut Reader, cfg: &RunConfig) -> Option<CherenkovConfig> {
    let mass = r.positive("charge.mass");
    let charge = r.number_or("charge.charge", 1.0);
    let speed = r.positive("charge.speed");
    let direction = r.vector_or("charge.direction", Vec3::z());
    let k_max = match r.raw.get("charge.k_max") {
        None => Some(None),
        Some(_) => r.positive("charge.k_max").map(Some),
    };
    let quantum = r.flag_or("charge.quantum_correction", false);
    let recoil = r.flag_or("charge.include_recoil", false);
    let phi = r.integer_or("charge.phi_nodes", Some(16));
    let permittivity = if r.raw.has_section("permittivity") {
        read_permittivity(r)
    } else {
        cfg.model.clone().map(Permittivity::Medium)
    };
    let particle = ChargedParticle {
        mass: mass?,
        charge: charge?,
        speed: speed?,
        direction: direction?,
    };
    let omega = cfg.grid.as_ref()?.values();
    let mut c = CherenkovConfig::new(particle, permittivity?, omega);
    c.k_max = k_max?;
    c.quantum_correction = quantum?;
    c.include_recoil = recoil?;
    c.phi_nodes = phi? as usize;
    c.units = cfg.units;
    r.module("charge", c.validate()).then_some(c)
}

/// Record of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub library_version: String,
    pub wall_clock_seconds: f64,
    /// File name and SHA-256 of each output.
    pub files: Vec<(String, String)>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "config_sha256={}\nlibrary_version={}\nwall_clock_seconds={:.3}\n",
            self.config_hash, self.library_version, self.wall_clock_seconds
        );
        for (name, sum) in &self.files {
            s.push_str(&format!("file={name} sha256={sum}\n"));
        }
        s
    }

    /// Names of listed files whose checksum no longer matches.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(name, sum)| match fs::read(dir.join(name)) {
                Ok(bytes) => hex::encode(Sha256::digest(&bytes)) != *sum,
                Err(_) => true,
            })
            .map(|(name, _)| name.clone())
            .collect()
    }
}

struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    notes: Vec<(String, String)>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn render(&self, cfg: &RunConfig) -> Vec<u8> {
        let mut out = Vec::new();
        for line in header_lines(cfg) {
            out.extend_from_slice(line.as_bytes());
        }
        for (k, v) in &self.notes {
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:e}"))).expect("in-memory write");
        }
        out.extend(w.into_inner().expect("in-memory write"));
        out
    }
}

fn header_lines(cfg: &RunConfig) -> Vec<String> {
    let u = &cfg.units;
    vec![
        format!("# dissipon={}\n", env!("CARGO_PKG_VERSION")),
        format!("# command={}\n", cfg.command.name()),
        format!("# config_sha256={}\n", cfg.config_hash),
        format!("# units=hbar:{},kb:{},c:{},eps0:{},mu0:{}\n", u.hbar, u.kb, u.c, u.eps0, u.mu0),
    ]
}

fn plot_script(csv_name: &str, png_name: &str, xlabel: &str, columns: &[(usize, &str)], log: bool) -> String {
    let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png_name}'\nset xlabel '{xlabel}'\nset grid\n"));
    if log {
        s.push_str("set logscale x\n");
    }
    let plots: Vec<String> = columns
        .iter()
        .map(|(c, t)| format!("'{csv_name}' using 1:{c} skip 1 with lines title '{t}'"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

const UPPER: [&str; 6] = ["xx", "xy", "xz", "yy", "yz", "zz"];

fn tensor_columns(prefix: &str) -> Vec<String> {
    UPPER.iter().map(|c| format!("{prefix}_{c}")).collect()
}

/// Output files, name and bytes, in write order.
type Outputs = Vec<(String, Vec<u8>)>;

fn need<'a, T>(x: &'a Option<T>, block: &str) -> Result<&'a T, RunError> {
    x.as_ref()
        .ok_or_else(|| RunError::Config(vec![format!("missing [{block}] block")]))
}

fn table_outputs(cfg: &RunConfig, table: Table, plot: Vec<(usize, &str)>, xlabel: &str, log: bool) -> Outputs {
    let name = cfg.command.name();
    let csv_name = format!("{name}.csv");
    let gp = plot_script(&csv_name, &format!("{name}.png"), xlabel, &plot, log);
    vec![(csv_name, table.render(cfg)), (format!("{name}.gp"), gp.into_bytes())]
}

fn compute(cfg: &RunConfig) -> Result<(Outputs, Vec<String>), RunError> {
    let mut warnings = Vec::new();
    let log = cfg.grid.as_ref().is_some_and(|g| g.logarithmic);
    let outputs = match cfg.command {
        Command::Fdt => {
            let model = need(&cfg.model, "model")?;
            let bath = need(&cfg.bath, "bath")?;
            let grid = need(&cfg.grid, "grid")?;
            let cols: Vec<String> = std::iter::once("omega".to_string()).chain(tensor_columns("zeta")).collect();
            let mut t = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
            for w in grid.values() {
                let mut z = noise_spectrum(model, bath, w)?;
                if let Some(l) = cfg.cutoff {
                    z *= regulator(w, l);
                }
                t.rows.push(std::iter::once(w).chain(upper(&z)).collect());
            }
            t.notes.push(("temperature".into(), bath.temperature.to_string()));
            table_outputs(cfg, t, vec![(2, "zeta_xx"), (5, "zeta_yy"), (7, "zeta_zz")], "omega", log)
        }
        Command::Kk => {
            let model = need(&cfg.model, "model")?;
            let grid = need(&cfg.grid, "grid")?;
            let cols: Vec<String> = std::iter::once("omega".to_string())
                .chain(tensor_columns("re_chi"))
                .chain(tensor_columns("im_chi"))
                .collect();
            let mut t = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
            for w in grid.values() {
                let re = model.re_chi_kk(w)?;
                let im = model.im_chi(w)?;
                t.rows.push(std::iter::once(w).chain(upper(&re)).chain(upper(&im)).collect());
            }
            table_outputs(cfg, t, vec![(2, "re_chi_xx"), (8, "im_chi_xx")], "omega", log)
        }
        Command::Msd => {
            let model = need(&cfg.model, "model")?;
            let bath = need(&cfg.bath, "bath")?;
            let particle = need(&cfg.particle, "particle")?;
            let grid = need(&cfg.grid, "grid")?;
            let mut spec = QuadratureSpec::default();
            if let Some(l) = cfg.cutoff {
                spec = spec.with_cutoff(l);
            }
            let times = grid.values();
            let eval = MsdEvaluator::new(model, bath, particle, grid.max, &spec)?;
            let mut t = Table::new(&["t", "msd"]);
            for &s in &times {
                t.rows.push(vec![s, eval.msd(s, 0.0)?]);
            }
            if let Some(slope) = late_slope(&t.rows) {
                t.notes.push(("late_slope".into(), format!("{slope:e}")));
            }
            table_outputs(cfg, t, vec![(2, "msd")], "t", log)
        }
        Command::Propagators => {
            let model = need(&cfg.model, "model")?;
            let particle = need(&cfg.particle, "particle")?;
            let grid = need(&cfg.grid, "grid")?;
            let spec = InverseLaplaceSpec {
                node_count: cfg.inversion_nodes,
                ..Default::default()
            };
            let times = grid.values();
            let set = propagators(model, particle, &times, &spec)?;
            let mean = set.mean_position();
            let cols: Vec<String> = std::iter::once("t".to_string())
                .chain(tensor_columns("eta"))
                .chain(tensor_columns("eta_dot"))
                .chain(["mean_x", "mean_y", "mean_z"].map(String::from))
                .collect();
            let mut t = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
            for i in 0..times.len() {
                let e = (set.eta[i] + set.eta[i].transpose()) * 0.5;
                let d = (set.eta_dot[i] + set.eta_dot[i].transpose()) * 0.5;
                t.rows.push(
                    std::iter::once(times[i])
                        .chain(upper(&e))
                        .chain(upper(&d))
                        .chain(mean[i].iter().copied())
                        .collect(),
                );
            }
            table_outputs(cfg, t, vec![(2, "eta_xx"), (5, "eta_yy"), (7, "eta_zz")], "t", log)
        }
        Command::Simulate => {
            let sim = need(&cfg.simulation, "grid")?;
            let ens = simulate(sim)?;
            let mut t = Table::new(&["t", "mean_x", "mean_y", "mean_z", "msd", "msd_std_error"]);
            for (i, s) in ens.times().into_iter().enumerate() {
                let mut mean = Vec3::zeros();
                for p in 0..ens.n_paths {
                    mean += ens.position(p, i);
                }
                mean /= ens.n_paths as f64;
                let m = ensemble_msd(&ens, s, 0.0)?;
                t.rows.push(vec![s, mean.x, mean.y, mean.z, m.mean, m.std_error]);
            }
            t.notes.push(("paths".into(), ens.n_paths.to_string()));
            t.notes.push(("seed".into(), sim.seed.to_string()));
            table_outputs(cfg, t, vec![(5, "msd")], "t", false)
        }
        Command::Rates => {
            let model = need(&cfg.model, "model")?;
            let bath = need(&cfg.bath, "bath")?;
            let (state, levels) = need(&cfg.oscillator, "oscillator")?;
            let mut t = Table::new(&["n", "up_rate", "down_rate"]);
            for n in 0..=*levels {
                let s = OscillatorState {
                    quantum_number: n,
                    ..*state
                };
                let r = rates::oscillator_rates(model, &s, bath)?;
                t.rows.push(vec![n as f64, r.up_rate, r.down_rate]);
            }
            table_outputs(cfg, t, vec![(2, "up"), (3, "down")], "n", false)
        }
        Command::Decay => {
            let model = need(&cfg.model, "model")?;
            let atom = need(&cfg.atom, "atom")?;
            let mut t = Table::new(&["route", "decay_rate", "level_shift"]);
            let gamma = rates::decay_constant(model, atom)?;
            let shift = rates::level_shift(model, atom)?;
            t.rows.push(vec![0.0, gamma, shift]);
            let (gk, sk) = rates::decay_and_shift_from_kernel(model, atom)?;
            t.rows.push(vec![1.0, gk, sk]);
            t.notes.push(("route".into(), "0=direct,1=kernel".into()));
            table_outputs(cfg, t, vec![(2, "decay_rate"), (3, "level_shift")], "route", false)
        }
        Command::Cherenkov => {
            let c = need(&cfg.cherenkov, "charge")?;
            let s = cherenkov::radiation_intensity(c)?;
            warnings.extend(s.warnings.iter().cloned());
            let mut body = Vec::new();
            for line in header_lines(cfg) {
                body.extend_from_slice(line.as_bytes());
            }
            body.extend_from_slice(format!("# total_power={:e}\n", s.total_power).as_bytes());
            s.write_csv(&mut body)?;
            vec![
                ("cherenkov.csv".to_string(), body),
                (
                    "cherenkov.gp".to_string(),
                    plot_script("cherenkov.csv", "cherenkov.png", "omega", &[(2, "dW/dt domega")], log).into_bytes(),
                ),
            ]
        }
    };
    Ok((outputs, warnings))
}

/// Least-squares slope over the points with `t >= t_max/10`.
fn late_slope(rows: &[Vec<f64>]) -> Option<f64> {
    let t_max = rows.last()?[0];
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r[0] >= 0.1 * t_max).map(|r| (r[0], r[1])).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the command, writes outputs into `out_dir`, then the manifest.
/// Warnings from the library are returned alongside the manifest.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<(RunManifest, Vec<String>), RunError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let manifest_path = out_dir.join(MANIFEST_NAME);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| Error::Io(format!("{}: {e}", manifest_path.display())))?;
    }
    let (outputs, warnings) = compute(cfg)?;
    let mut files = Vec::new();
    for (name, bytes) in &outputs {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        files.push((name.clone(), hex::encode(Sha256::digest(bytes))));
    }
    let config_name = "config.resolved.toml".to_string();
    let resolved = cfg.canonical.as_bytes();
    fs::write(out_dir.join(&config_name), resolved)?;
    files.push((config_name, hex::encode(Sha256::digest(resolved))));
    let manifest = RunManifest {
        config_hash: cfg.config_hash.clone(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files,
    };
    let mut f = fs::File::create(&manifest_path)?;
    f.write_all(manifest.to_text().as_bytes())?;
    Ok((manifest, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FDT: &str = r#"
[run]
command = "fdt"
[model]
kind = "ohmic"
gamma = 0.5
[bath]
temperature = 2.0
mode = "classical"
[grid]
min = 0.1
max = 10.0
points = 7
spacing = "log"
"#;

    fn load(text: &str, overrides: &[&str]) -> Result<RunConfig, RunError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        RunConfig::from_text(text, Path::new("."), &o)
    }

    fn errors(r: Result<RunConfig, RunError>) -> Vec<String> {
        match r {
            Err(RunError::Config(e)) => e,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn fdt_classical_ohmic_is_flat() {
        let cfg = load(FDT, &[]).unwrap();
        let (out, _) = compute(&cfg).unwrap();
        let text = String::from_utf8(out[0].1.clone()).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 7);
        for r in rows {
            assert!((r[1] - 2.0 * 2.0 * 0.5).abs() < 1e-12);
            assert_eq!(r[2], 0.0);
        }
    }

    #[test]
    fn missing_block_is_named() {
        let text = FDT.replace("[model]\nkind = \"ohmic\"\ngamma = 0.5\n", "");
        let e = errors(load(&text, &[]));
        assert!(e.iter().any(|m| m.contains("[model]")), "{e:?}");
    }

    #[test]
    fn negative_temperature_is_one_error() {
        let e = errors(load(FDT, &["bath.temperature=-1"]));
        assert_eq!(e.len(), 1, "{e:?}");
        assert!(e[0].contains("bath.temperature"));
    }

    #[test]
    fn unknown_keys_are_listed() {
        let e = errors(load(FDT, &["bath.tempreature=1", "grid.pionts=3"]));
        let all = e.join("\n");
        assert!(all.contains("bath.tempreature") && all.contains("grid.pionts"), "{all}");
    }

    #[test]
    fn conflicting_override() {
        let e = errors(load(FDT, &["model.nu=2"]));
        assert!(e[0].contains("model.nu") && e[0].contains("override"), "{e:?}");
    }

    #[test]
    fn override_precedence_is_last_wins() {
        let cfg = load(FDT, &["bath.temperature=3", "bath.temperature=5"]).unwrap();
        assert_eq!(cfg.bath.unwrap().temperature, 5.0);
        let cfg = load(FDT, &["bath.mode=Quantum"]).unwrap();
        assert_eq!(cfg.bath.unwrap().mode, BathMode::Quantum);
    }

    #[test]
    fn malformed_override() {
        assert!(matches!(load(FDT, &["temperature=3"]), Err(RunError::Config(_))));
        assert!(matches!(load(FDT, &["bath.temperature"]), Err(RunError::Config(_))));
    }

    #[test]
    fn non_psd_table_cites_omega() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("t.csv"),
            "omega,ImChi_xx,ImChi_xy,ImChi_xz,ImChi_yy,ImChi_yz,ImChi_zz\n1,1,0,0,1,0,1\n2.5,1,3,0,1,0,1\n",
        )
        .unwrap();
        let text = FDT.replace("kind = \"ohmic\"\ngamma = 0.5", "kind = \"tabulated\"\ntable = \"t.csv\"");
        let e = errors(RunConfig::from_text(&text, dir.path(), &[]));
        assert!(e.iter().any(|m| m.contains("2.5")), "{e:?}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Config(vec![]).exit_code(), 1);
        assert_eq!(RunError::Library(Error::Domain("x".into())).exit_code(), 1);
        assert_eq!(RunError::Library(Error::Divergence("x".into())).exit_code(), 2);
    }

    #[test]
    fn grid_values() {
        let g = Grid {
            min: 1.0,
            max: 100.0,
            points: 3,
            logarithmic: true,
        };
        let v = g.values();
        assert!((v[1] - 10.0).abs() < 1e-12 && v[2] == 100.0);
    }

    #[test]
    fn run_writes_manifest_last() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = load(FDT, &[]).unwrap();
        let (m, _) = run(&cfg, dir.path()).unwrap();
        assert!(dir.path().join(MANIFEST_NAME).exists());
        assert!(m.verify(dir.path()).is_empty());
        fs::write(dir.path().join("fdt.csv"), "tampered").unwrap();
        assert_eq!(m.verify(dir.path()), vec!["fdt.csv".to_string()]);
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = load(FDT, &[]).unwrap();
        let b = load(&FDT.replace("gamma = 0.5", "gamma   =   0.5"), &[]).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        let c = load(FDT, &["model.gamma=0.6"]).unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }
}
