//! Flat `key = value` configuration files.
//!
//! Lines are `key = value`; blank lines and `#` comments are ignored. Pairs
//! apply in order onto defaults, and command-line overrides go through the same
//! [`AnalysisConfig::set`] entry point so both surfaces accept the same syntax.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::decision::DecisionRule;
use crate::isotonic::{MonoMethod, MonoTarget, TailBoundaries};
use crate::null_model::{FamilyKind, FitControls, NullRegion};
use crate::pipeline::PipelineConfig;
use crate::simulation::{ScenarioKind, ScenarioSpec, StudyConfig};
use crate::stats_numerics::DEFAULT_CLAMP_Z;

/// Config problems; the binary reports these as usage errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// Parse `key = value` lines into ordered pairs.
pub fn parse_pairs(text: &str) -> ConfigResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        out.push((normalize_key(key), v.trim().to_string()));
    }
    Ok(out)
}

fn normalize_key(k: &str) -> String {
    k.to_ascii_lowercase().replace('-', "_")
}

fn read_file(path: &Path) -> ConfigResult<String> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> ConfigResult<f64> {
    let x: f64 = v.trim().parse().map_err(|_| bad(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(bad(key, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> ConfigResult<usize> {
    v.trim().parse().map_err(|_| bad(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_u64(key: &str, v: &str) -> ConfigResult<u64> {
    v.trim().parse().map_err(|_| bad(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> ConfigResult<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(key, format!("`{v}` is not a boolean"))),
    }
}

fn parse_list(key: &str, v: &str) -> ConfigResult<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// `lo,hi` (brackets and whitespace tolerated).
pub fn parse_interval(key: &str, v: &str) -> ConfigResult<(f64, f64)> {
    let trimmed = v.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']);
    let xs = parse_list(key, trimmed)?;
    match xs.as_slice() {
        [lo, hi] if lo < hi => Ok((*lo, *hi)),
        [_, _] => Err(bad(key, "needs lo < hi")),
        _ => Err(bad(key, format!("expected `lo,hi`, got `{v}`"))),
    }
}

/// Which tails get monotonized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sides {
    #[default]
    Both,
    Left,
    Right,
    None,
}

impl std::str::FromStr for Sides {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "both" => Ok(Sides::Both),
            "left" => Ok(Sides::Left),
            "right" => Ok(Sides::Right),
            "none" => Ok(Sides::None),
            other => Err(format!("unknown sides `{other}` (both, left, right, none)")),
        }
    }
}

impl std::fmt::Display for Sides {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sides::Both => "both",
            Sides::Left => "left",
            Sides::Right => "right",
            Sides::None => "none",
        })
    }
}

/// Local-fdr step-up over all hypotheses, or separately on each side of the
/// null region midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionMode {
    #[default]
    Joint,
    PerTail,
}

impl std::str::FromStr for DecisionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "joint" => Ok(DecisionMode::Joint),
            "per-tail" => Ok(DecisionMode::PerTail),
            other => Err(format!("unknown decision mode `{other}` (joint, per-tail)")),
        }
    }
}

impl std::fmt::Display for DecisionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecisionMode::Joint => "joint",
            DecisionMode::PerTail => "per-tail",
        })
    }
}

/// Input column, by header name or zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSel {
    Index(usize),
    Name(String),
}

impl Default for ColumnSel {
    fn default() -> Self {
        ColumnSel::Index(0)
    }
}

impl std::str::FromStr for ColumnSel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty column selector".into());
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSel::Index(i),
            Err(_) => ColumnSel::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnSel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnSel::Index(i) => write!(f, "{i}"),
            ColumnSel::Name(n) => f.write_str(n),
        }
    }
}

fn parse_family(key: &str, v: &str) -> ConfigResult<FamilyKind> {
    v.trim().parse::<FamilyKind>().map_err(|e| bad(key, e.to_string()))
}

fn parse_method(key: &str, v: &str) -> ConfigResult<MonoMethod> {
    v.trim().parse::<MonoMethod>().map_err(|e| bad(key, e.to_string()))
}

fn parse_target(key: &str, v: &str) -> ConfigResult<MonoTarget> {
    match v.trim().to_ascii_lowercase().as_str() {
        "local" | "fdr" => Ok(MonoTarget::LocalFdr),
        "tail" | "tail-fdr" => Ok(MonoTarget::TailFdr),
        "both" => Ok(MonoTarget::Both),
        other => Err(bad(key, format!("unknown target `{other}` (local, tail, both)"))),
    }
}

fn target_name(t: MonoTarget) -> &'static str {
    match t {
        MonoTarget::LocalFdr => "local",
        MonoTarget::TailFdr => "tail",
        MonoTarget::Both => "both",
    }
}

fn check_alphas(alphas: &[f64]) -> ConfigResult<()> {
    if alphas.is_empty() {
        return Err(ConfigError::Invalid("at least one alpha level is required".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(ConfigError::Invalid(format!("alpha levels must lie in (0, 1), got {a}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub width: f64,
    /// Histogram range; has no default.
    pub range: Option<(f64, f64)>,
    pub null_region: (f64, f64),
    pub family: FamilyKind,
    pub sides: Sides,
    pub method: MonoMethod,
    pub monotonize: MonoTarget,
    pub alphas: Vec<f64>,
    pub column: ColumnSel,
    /// When set, inputs are t-statistics with this many degrees of freedom
    /// and get mapped to z-values first.
    pub df: Option<f64>,
    pub clamp_z: f64,
    pub out_dir: PathBuf,
    pub decision_mode: DecisionMode,
    pub controls: FitControls,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            width: 0.05,
            range: None,
            null_region: (-1.2, 1.2),
            family: FamilyKind::Normal,
            sides: Sides::Both,
            method: MonoMethod::Pava,
            monotonize: MonoTarget::Both,
            alphas: vec![0.05, 0.1, 0.15],
            column: ColumnSel::default(),
            df: None,
            clamp_z: DEFAULT_CLAMP_Z,
            out_dir: PathBuf::from("."),
            decision_mode: DecisionMode::Joint,
            controls: FitControls::default(),
        }
    }
}

impl AnalysisConfig {
    pub const KEYS: &'static [&'static str] = &[
        "width",
        "range",
        "null_region",
        "family",
        "sides",
        "method",
        "monotonize",
        "alpha",
        "column",
        "df",
        "clamp_z",
        "out_dir",
        "decision_mode",
        "tol",
        "max_iter",
    ];

    pub fn from_text(text: &str) -> ConfigResult<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> ConfigResult<Self> {
        Self::from_text(&read_file(path)?)
    }

    /// Apply one setting. Keys are case-insensitive and `-`/`_` agnostic.
    pub fn set(&mut self, key: &str, value: &str) -> ConfigResult<()> {
        let key = normalize_key(key);
        let k = key.as_str();
        match k {
            "width" => self.width = parse_f64(k, value)?,
            "range" => self.range = Some(parse_interval(k, value)?),
            "null_region" => self.null_region = parse_interval(k, value)?,
            "family" => self.family = parse_family(k, value)?,
            "sides" => self.sides = value.parse().map_err(|e: String| bad(k, e))?,
            "method" => self.method = parse_method(k, value)?,
            "monotonize" => self.monotonize = parse_target(k, value)?,
            "alpha" | "alphas" => self.alphas = parse_list(k, value)?,
            "column" => self.column = value.parse().map_err(|e: String| bad(k, e))?,
            "df" => {
                self.df = match value.trim().to_ascii_lowercase().as_str() {
                    "" | "none" => None,
                    _ => Some(parse_f64(k, value)?),
                }
            }
            "clamp_z" => self.clamp_z = parse_f64(k, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "decision_mode" => self.decision_mode = value.parse().map_err(|e: String| bad(k, e))?,
            "tol" => self.controls.tol = parse_f64(k, value)?,
            "max_iter" => self.controls.max_iter = parse_usize(k, value)?,
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    pub fn validate(&self) -> ConfigResult<()> {
        let (lo, hi) = self.range.ok_or(ConfigError::Missing("range"))?;
        if !(self.width > 0.0) {
            return Err(ConfigError::Invalid(format!("bin width must be positive, got {}", self.width)));
        }
        let (a, b) = self.null_region;
        if !(a >= lo && b <= hi && a < b) {
            return Err(ConfigError::Invalid(format!(
                "null region [{a}, {b}] must lie inside the histogram range [{lo}, {hi}]"
            )));
        }
        check_alphas(&self.alphas)?;
        if let Some(df) = self.df {
            if !(df > 0.0) {
                return Err(ConfigError::Invalid(format!("df must be positive, got {df}")));
            }
        }
        if !(self.clamp_z > 0.0) {
            return Err(ConfigError::Invalid("clamp_z must be positive".into()));
        }
        if !(self.controls.tol > 0.0) || self.controls.max_iter == 0 {
            return Err(ConfigError::Invalid("tol and max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn boundaries(&self) -> ConfigResult<TailBoundaries> {
        let region = self.region()?;
        Ok(match self.sides {
            Sides::Both => TailBoundaries::from_region(&region, true, true),
            Sides::Left => TailBoundaries::from_region(&region, true, false),
            Sides::Right => TailBoundaries::from_region(&region, false, true),
            Sides::None => TailBoundaries::from_region(&region, false, false),
        })
    }

    pub fn region(&self) -> ConfigResult<NullRegion> {
        NullRegion::new(self.null_region.0, self.null_region.1).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn pipeline_config(&self) -> ConfigResult<PipelineConfig> {
        self.validate()?;
        Ok(PipelineConfig {
            width: self.width,
            range: self.range.ok_or(ConfigError::Missing("range"))?,
            region: self.region()?,
            family: self.family,
            boundaries: self.boundaries()?,
            method: self.method,
            which: self.monotonize,
            controls: self.controls,
        })
    }

    /// Settings echoed into `summary.txt`, in the same syntax as the file.
    pub fn render(&self) -> String {
        let range = match self.range {
            Some((a, b)) => format!("{a},{b}"),
            None => String::new(),
        };
        let alphas: Vec<String> = self.alphas.iter().map(|a| a.to_string()).collect();
        let mut s = String::new();
        s.push_str(&format!("width = {}\n", self.width));
        s.push_str(&format!("range = {range}\n"));
        s.push_str(&format!("null_region = {},{}\n", self.null_region.0, self.null_region.1));
        s.push_str(&format!("family = {}\n", self.family));
        s.push_str(&format!("sides = {}\n", self.sides));
        s.push_str(&format!("method = {}\n", self.method));
        s.push_str(&format!("monotonize = {}\n", target_name(self.monotonize)));
        s.push_str(&format!("alpha = {}\n", alphas.join(",")));
        s.push_str(&format!("column = {}\n", self.column));
        s.push_str(&format!(
            "df = {}\n",
            self.df.map(|d| d.to_string()).unwrap_or_else(|| "none".into())
        ));
        s.push_str(&format!("clamp_z = {}\n", self.clamp_z));
        s.push_str(&format!("decision_mode = {}\n", self.decision_mode));
        s.push_str(&format!("tol = {:e}\n", self.controls.tol));
        s.push_str(&format!("max_iter = {}\n", self.controls.max_iter));
        s
    }
}

/// Scenario plus study settings for `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub preset: String,
    pub spec: ScenarioSpec,
    pub study: StudyConfig,
    pub out_dir: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            preset: "normal-sec4".into(),
            spec: ScenarioSpec::normal_preset(),
            study: StudyConfig::default(),
            out_dir: PathBuf::from("."),
        }
    }
}

impl SimulateConfig {
    pub fn from_preset(name: &str) -> ConfigResult<Self> {
        let spec = ScenarioSpec::preset(name)
            .ok_or_else(|| bad("preset", format!("unknown preset `{name}` (normal-sec4, chisq-sec4)")))?;
        Ok(Self {
            preset: name.to_string(),
            spec,
            ..Self::default()
        })
    }

    /// A `preset` key anywhere in the file is applied before the other keys.
    pub fn from_text(text: &str) -> ConfigResult<Self> {
        let pairs = parse_pairs(text)?;
        let mut cfg = match pairs.iter().rev().find(|(k, _)| k == "preset") {
            Some((_, v)) => Self::from_preset(v.trim())?,
            None => Self::default(),
        };
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> ConfigResult<Self> {
        Self::from_text(&read_file(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> ConfigResult<()> {
        let key = normalize_key(key);
        let k = key.as_str();
        match k {
            "preset" => {
                let out_dir = self.out_dir.clone();
                let study = self.study.clone();
                *self = Self::from_preset(value.trim())?;
                self.out_dir = out_dir;
                self.study = study;
            }
            "kind" | "scenario" => {
                self.spec.kind = match value.trim().to_ascii_lowercase().as_str() {
                    "normal" | "normalmix" => ScenarioKind::NormalMix,
                    "chisq" | "chisqmix" => ScenarioKind::ChisqMix,
                    other => return Err(bad(k, format!("unknown scenario `{other}` (normal, chisq)"))),
                }
            }
            "p0" => self.spec.p0 = parse_f64(k, value)?,
            "fitting_interval" | "null_region" => self.spec.fitting_interval = parse_interval(k, value)?,
            "iso_boundary" => self.spec.iso_boundary = parse_f64(k, value)?,
            "n" => self.spec.n = parse_usize(k, value)?,
            "reps" => self.spec.reps = parse_usize(k, value)?,
            "base_seed" | "seed" => self.spec.base_seed = parse_u64(k, value)?,
            "width" => self.spec.width = parse_f64(k, value)?,
            "range" => self.spec.range = parse_interval(k, value)?,
            "method" => self.study.method = parse_method(k, value)?,
            "alpha" | "alphas" => self.study.alphas = parse_list(k, value)?,
            "parallel" => self.study.parallel = parse_bool(k, value)?,
            "tol" => self.study.controls.tol = parse_f64(k, value)?,
            "max_iter" => self.study.controls.max_iter = parse_usize(k, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    pub fn validate(&self) -> ConfigResult<()> {
        self.spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        check_alphas(&self.study.alphas)?;
        let (lo, hi) = self.spec.range;
        if !(self.spec.iso_boundary >= lo && self.spec.iso_boundary < hi) {
            return Err(ConfigError::Invalid(format!(
                "iso_boundary {} must lie inside the histogram range",
                self.spec.iso_boundary
            )));
        }
        Ok(())
    }
}

/// Rule label used in tables.
pub fn rule_label(rule: DecisionRule, adjusted: bool) -> &'static str {
    match (rule, adjusted) {
        (DecisionRule::LocalFdrStepUp, true) => "local_iso",
        (DecisionRule::LocalFdrStepUp, false) => "local_raw",
        (DecisionRule::TailFdrThreshold, _) => "tail_iso",
    }
}
