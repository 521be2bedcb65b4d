//! Run configuration: flat `key = value` text.
//!
//! `#` starts a comment. Keys marked as lists (`lambda`, `t_s`, `t_d`, `k_t`,
//! `delta`) may repeat, one value per line; every other key may appear once.
//!
//! ```text
//! experiment = hysteresis
//! lambda = 0
//! lambda = 10
//! t_s = 1000
//! t_d = 10
//! k_t = 1
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::energetics::GroundReference;
use crate::experiments::{ExperimentKind, ExperimentSpec, LogGrid};

/// Configuration failure. [`ConfigError::code`] gives a stable identifier.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate {
        line: usize,
        key: String,
        first: usize,
    },

    #[error("line {line}: `{key}`: cannot parse `{value}`")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
    },

    #[error("{}`{key}` out of range: {message}", at(*.line))]
    Range {
        line: Option<usize>,
        key: String,
        message: String,
    },

    #[error("{message}")]
    Conflict { message: String },

    #[error("cannot read {}: {message}", path.display())]
    Read { path: PathBuf, message: String },
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Syntax { .. } => "syntax",
            Self::UnknownKey { .. } => "unknown_key",
            Self::Duplicate { .. } => "duplicate_key",
            Self::InvalidValue { .. } => "invalid_value",
            Self::Range { .. } => "out_of_range",
            Self::Conflict { .. } => "conflict",
            Self::Read { .. } => "read",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Syntax { line, .. }
            | Self::UnknownKey { line, .. }
            | Self::Duplicate { line, .. }
            | Self::InvalidValue { line, .. } => Some(*line),
            Self::Range { line, .. } => *line,
            Self::Conflict { .. } | Self::Read { .. } => None,
        }
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            spec: ExperimentSpec::new(kind),
            out_dir: PathBuf::from("."),
        }
    }

    /// Canonical text form; `parse_config(&c.render()) == Ok(c)`.
    pub fn render(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("experiment", s.kind.name().into());
        for x in &s.lambda {
            kv("lambda", num(*x));
        }
        match &s.ts_grid {
            Some(g) => {
                kv("ts_min", num(g.min));
                kv("ts_max", num(g.max));
                kv("ts_per_decade", g.per_decade.to_string());
            }
            None => {
                for x in &s.t_s {
                    kv("t_s", num(*x));
                }
            }
        }
        for x in &s.t_d {
            kv("t_d", num(*x));
        }
        for x in &s.k_t {
            kv("k_t", num(*x));
        }
        kv("delta_min", num(s.delta_min));
        kv("delta_max", num(s.delta_max));
        kv("delta_amp", num(s.delta_amp));
        if let Some(x) = s.t_hold {
            kv("t_hold", num(x));
        }
        if let Some(x) = s.t_write {
            kv("t_write", num(x));
        }
        for x in &s.deltas {
            kv("delta", num(*x));
        }
        if let Some(n) = s.n_points {
            kv("n_points", n.to_string());
        }
        kv("n_starts", s.n_starts.to_string());
        kv("seed", s.seed.to_string());
        kv(
            "ground_reference",
            match s.ground_reference {
                GroundReference::Realized => "realized",
                GroundReference::SelfConsistent => "self_consistent",
            }
            .into(),
        );
        if let Some(x) = s.rel_tol {
            kv("rel_tol", num(x));
        }
        if let Some(x) = s.abs_tol {
            kv("abs_tol", num(x));
        }
        if let Some(x) = s.dt_max {
            kv("dt_max", num(x));
        }
        kv("trajectory_stride", s.trajectory_stride.to_string());
        kv("workers", s.workers.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        out
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

const LIST_KEYS: [&str; 5] = ["lambda", "t_s", "t_d", "k_t", "delta"];
const SCALAR_KEYS: [&str; 19] = [
    "experiment",
    "ts_min",
    "ts_max",
    "ts_per_decade",
    "delta_min",
    "delta_max",
    "delta_amp",
    "t_hold",
    "t_write",
    "n_points",
    "n_starts",
    "seed",
    "ground_reference",
    "rel_tol",
    "abs_tol",
    "dt_max",
    "trajectory_stride",
    "workers",
    "out_dir",
];

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn invalid(&self) -> ConfigError {
        ConfigError::InvalidValue {
            line: self.line,
            key: self.key.into(),
            value: self.value.into(),
        }
    }

    fn range(&self, message: &str) -> ConfigError {
        ConfigError::Range {
            line: Some(self.line),
            key: self.key.into(),
            message: message.into(),
        }
    }

    fn float(&self) -> CResult<f64> {
        let x: f64 = self.value.parse().map_err(|_| self.invalid())?;
        if x.is_nan() {
            return Err(self.invalid());
        }
        Ok(x)
    }

    fn finite(&self) -> CResult<f64> {
        let x = self.float()?;
        if !x.is_finite() {
            return Err(self.range("must be finite"));
        }
        Ok(x)
    }

    fn non_negative(&self) -> CResult<f64> {
        let x = self.finite()?;
        if x < 0.0 {
            return Err(self.range("must be >= 0"));
        }
        Ok(x)
    }

    fn positive(&self) -> CResult<f64> {
        let x = self.finite()?;
        if x <= 0.0 {
            return Err(self.range("must be > 0"));
        }
        Ok(x)
    }

    fn uint(&self) -> CResult<u64> {
        self.value.parse().map_err(|_| self.invalid())
    }

    fn count(&self, min: usize) -> CResult<usize> {
        let n = self.uint()? as usize;
        if n < min {
            return Err(self.range(&format!("must be >= {min}")));
        }
        Ok(n)
    }
}

fn tokenize(text: &str) -> CResult<Vec<Entry<'_>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, found `{body}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        out.push(Entry { line, key, value });
    }
    Ok(out)
}

/// Parses and validates a configuration. Without an `experiment` key the
/// kind defaults to `hysteresis`.
pub fn parse_config(text: &str) -> CResult<RunConfig> {
    parse_config_as(text, None)
}

/// Like [`parse_config`] but for a known experiment kind: the file may omit
/// `experiment`, and naming a different one is a conflict.
pub fn parse_config_as(text: &str, kind: Option<ExperimentKind>) -> CResult<RunConfig> {
    let entries = tokenize(text)?;
    let mut first_line: HashMap<&str, usize> = HashMap::new();
    for e in &entries {
        if LIST_KEYS.contains(&e.key) {
            continue;
        }
        if !SCALAR_KEYS.contains(&e.key) {
            return Err(ConfigError::UnknownKey {
                line: e.line,
                key: e.key.into(),
            });
        }
        if let Some(&first) = first_line.get(e.key) {
            return Err(ConfigError::Duplicate {
                line: e.line,
                key: e.key.into(),
                first,
            });
        }
        first_line.insert(e.key, e.line);
    }

    let file_kind = entries
        .iter()
        .find(|e| e.key == "experiment")
        .map(|e| e.value.parse::<ExperimentKind>().map_err(|_| e.invalid()))
        .transpose()?;
    let kind = match (kind, file_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Conflict {
                message: format!("config is for `{b}` but `{a}` was requested"),
            })
        }
        (a, b) => a.or(b).unwrap_or(ExperimentKind::Hysteresis),
    };

    let mut cfg = RunConfig::new(kind);
    let s = &mut cfg.spec;
    let mut lists: HashMap<&str, Vec<f64>> = HashMap::new();
    let (mut ts_min, mut ts_max, mut ts_per_decade) = (None, None, None);
    for e in &entries {
        match e.key {
            "experiment" => {}
            "lambda" | "k_t" => lists.entry(e.key).or_default().push(e.non_negative()?),
            "t_s" => lists.entry(e.key).or_default().push(e.positive()?),
            "t_d" => {
                let x = e.float()?;
                if !(x > 0.0) {
                    return Err(e.range("must be > 0 (or inf for an isolated system)"));
                }
                lists.entry(e.key).or_default().push(x);
            }
            "delta" => lists.entry(e.key).or_default().push(e.finite()?),
            "ts_min" => ts_min = Some((e.positive()?, e.line)),
            "ts_max" => ts_max = Some((e.positive()?, e.line)),
            "ts_per_decade" => ts_per_decade = Some(e.count(1)?),
            "delta_min" => s.delta_min = e.finite()?,
            "delta_max" => s.delta_max = e.finite()?,
            "delta_amp" => s.delta_amp = e.non_negative()?,
            "t_hold" => s.t_hold = Some(e.non_negative()?),
            "t_write" => s.t_write = Some(e.non_negative()?),
            "n_points" => s.n_points = Some(e.count(2)?),
            "n_starts" => s.n_starts = e.count(1)?,
            "seed" => s.seed = e.uint()?,
            "ground_reference" => {
                s.ground_reference = match e.value {
                    "realized" => GroundReference::Realized,
                    "self_consistent" => GroundReference::SelfConsistent,
                    _ => return Err(e.invalid()),
                }
            }
            "rel_tol" => s.rel_tol = Some(e.positive()?),
            "abs_tol" => s.abs_tol = Some(e.positive()?),
            "dt_max" => s.dt_max = Some(e.positive()?),
            "trajectory_stride" => s.trajectory_stride = e.count(0)?,
            "workers" => s.workers = e.count(0)?,
            "out_dir" => cfg.out_dir = PathBuf::from(e.value),
            _ => unreachable!("key set checked above"),
        }
    }
    let s = &mut cfg.spec;
    for (key, target) in [
        ("lambda", &mut s.lambda),
        ("t_s", &mut s.t_s),
        ("t_d", &mut s.t_d),
        ("k_t", &mut s.k_t),
        ("delta", &mut s.deltas),
    ] {
        if let Some(v) = lists.remove(key) {
            *target = v;
        }
    }

    match (ts_min, ts_max) {
        (None, None) => {
            if ts_per_decade.is_some() {
                return Err(ConfigError::Conflict {
                    message: "`ts_per_decade` needs `ts_min` and `ts_max`".into(),
                });
            }
        }
        (Some((min, _)), Some((max, line))) => {
            if first_line.contains_key("ts_min") && entries.iter().any(|e| e.key == "t_s") {
                return Err(ConfigError::Conflict {
                    message: "give either `t_s` values or a `ts_min`/`ts_max` grid, not both"
                        .into(),
                });
            }
            if !(max > min) {
                return Err(ConfigError::Range {
                    line: Some(line),
                    key: "ts_max".into(),
                    message: "must exceed ts_min".into(),
                });
            }
            s.ts_grid = Some(LogGrid {
                min,
                max,
                per_decade: ts_per_decade.unwrap_or(40),
            });
        }
        _ => {
            return Err(ConfigError::Conflict {
                message: "`ts_min` and `ts_max` must be given together".into(),
            })
        }
    }

    validate(&cfg, &first_line)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, lines: &HashMap<&str, usize>) -> CResult<()> {
    let s = &cfg.spec;
    let range = |key: &str, message: &str| ConfigError::Range {
        line: lines.get(key).copied(),
        key: key.into(),
        message: message.into(),
    };
    if !(s.delta_max > s.delta_min) {
        return Err(range("delta_max", "must exceed delta_min"));
    }
    if s.kind == ExperimentKind::Hysteresis && !(s.delta_min < 0.0 && s.delta_max > 0.0) {
        return Err(range(
            if s.delta_min >= 0.0 {
                "delta_min"
            } else {
                "delta_max"
            },
            "hysteresis sweep must cross zero bias",
        ));
    }
    let needs_hold = matches!(s.kind, ExperimentKind::Hysteresis | ExperimentKind::Memory);
    if needs_hold && s.t_d.iter().any(|t| t.is_infinite()) {
        if s.t_hold.is_none() {
            return Err(range("t_d", "infinite t_d needs an explicit t_hold"));
        }
        if s.kind == ExperimentKind::Memory && s.t_write.is_none() {
            return Err(range("t_d", "infinite t_d needs an explicit t_write"));
        }
    }
    if s.kind == ExperimentKind::Memory && s.t_hold == Some(0.0) {
        return Err(range("t_hold", "memory hold must be > 0"));
    }
    Ok(())
}
