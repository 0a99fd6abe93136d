//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment. Every key is typed and
//! scoped to the experiment kinds that read it; unknown keys, duplicates,
//! type mismatches and missing required keys are reported with line numbers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Heat,
    Cns,
    Kinetic,
    Inequalities,
    Fit,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Heat => "heat",
            Kind::Cns => "cns",
            Kind::Kinetic => "kinetic",
            Kind::Inequalities => "inequalities",
            Kind::Fit => "fit",
        }
    }

    const ALL: [Kind; 5] = [Kind::Heat, Kind::Cns, Kind::Kinetic, Kind::Inequalities, Kind::Fit];
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown kind `{s}` (expected heat, cns, kinetic, inequalities or fit)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Type {
    Int,
    Float,
    FloatList,
    Bool,
    Str,
}

impl Type {
    fn name(&self) -> &'static str {
        match self {
            Type::Int => "a non-negative integer",
            Type::Float => "a number",
            Type::FloatList => "a comma-separated list of numbers",
            Type::Bool => "true or false",
            Type::Str => "a string",
        }
    }
}

/// Default value of a key: required, optional without default, or a literal.
#[derive(Debug, Clone, Copy)]
enum Default {
    Required,
    Optional,
    Value(&'static str),
}

struct KeySpec {
    key: &'static str,
    ty: Type,
    kinds: &'static [Kind],
    default: Default,
}

use Kind::*;

const ANY: &[Kind] = &[Heat, Cns, Kinetic, Inequalities, Fit];

const TWO_PI: &str = "6.283185307179586";

#[rustfmt::skip]
const KEYS: &[KeySpec] = &[
    KeySpec { key: "seed", ty: Type::Int, kinds: ANY, default: Default::Value("1") },
    KeySpec { key: "label", ty: Type::Str, kinds: ANY, default: Default::Value("run") },
    KeySpec { key: "out_dir", ty: Type::Str, kinds: ANY, default: Default::Optional },
    KeySpec { key: "grid.n", ty: Type::Int, kinds: &[Heat], default: Default::Required },
    KeySpec { key: "grid.L", ty: Type::Float, kinds: &[Heat], default: Default::Required },
    KeySpec { key: "grid.n", ty: Type::Int, kinds: &[Cns, Inequalities], default: Default::Value("32") },
    KeySpec { key: "grid.L", ty: Type::Float, kinds: &[Cns, Inequalities], default: Default::Value(TWO_PI) },
    KeySpec { key: "s", ty: Type::FloatList, kinds: &[Heat], default: Default::Required },
    KeySpec { key: "s", ty: Type::FloatList, kinds: &[Cns], default: Default::Value("0.5, 1") },
    KeySpec { key: "s", ty: Type::FloatList, kinds: &[Inequalities], default: Default::Value("0.5, 1, 1.4") },
    KeySpec { key: "ell_list", ty: Type::FloatList, kinds: &[Heat, Inequalities], default: Default::Value("0, 1, 2") },
    KeySpec { key: "times.start", ty: Type::Float, kinds: &[Heat], default: Default::Required },
    KeySpec { key: "times.stop", ty: Type::Float, kinds: &[Heat], default: Default::Required },
    KeySpec { key: "times.count", ty: Type::Int, kinds: &[Heat], default: Default::Required },
    KeySpec { key: "times.zero", ty: Type::Bool, kinds: &[Heat], default: Default::Value("true") },
    KeySpec { key: "heat.initial", ty: Type::Str, kinds: &[Heat], default: Default::Value("gaussian") },
    KeySpec { key: "heat.sigma", ty: Type::Float, kinds: &[Heat], default: Default::Value("0") },
    KeySpec { key: "heat.width", ty: Type::Float, kinds: &[Heat], default: Default::Value("1") },
    KeySpec { key: "heat.eta", ty: Type::Float, kinds: &[Heat], default: Default::Value("0.02") },
    KeySpec { key: "heat.band_lo", ty: Type::Float, kinds: &[Heat], default: Default::Value("1") },
    KeySpec { key: "heat.band_hi", ty: Type::Float, kinds: &[Heat], default: Default::Value("4") },
    KeySpec { key: "fit.start", ty: Type::Float, kinds: &[Heat], default: Default::Value("100") },
    KeySpec { key: "fit.sharp", ty: Type::Bool, kinds: &[Heat], default: Default::Value("true") },
    KeySpec { key: "fit.tol", ty: Type::Float, kinds: &[Heat, Fit], default: Default::Value("0.03") },
    KeySpec { key: "cns.initial", ty: Type::Str, kinds: &[Cns], default: Default::Value("random") },
    KeySpec { key: "cns.amplitude", ty: Type::Float, kinds: &[Cns], default: Default::Value("0.01") },
    KeySpec { key: "cns.band_lo", ty: Type::Float, kinds: &[Cns], default: Default::Value("1") },
    KeySpec { key: "cns.band_hi", ty: Type::Float, kinds: &[Cns], default: Default::Value("1.5") },
    KeySpec { key: "cns.t_final", ty: Type::Float, kinds: &[Cns], default: Default::Value("10") },
    KeySpec { key: "cns.cfl", ty: Type::Float, kinds: &[Cns], default: Default::Value("0.5") },
    KeySpec { key: "cns.beta", ty: Type::Float, kinds: &[Cns], default: Default::Value("0.1") },
    KeySpec { key: "cns.mu", ty: Type::Float, kinds: &[Cns], default: Default::Value("1") },
    KeySpec { key: "cns.lambda", ty: Type::Float, kinds: &[Cns], default: Default::Value("0") },
    KeySpec { key: "cns.rho_bar", ty: Type::Float, kinds: &[Cns], default: Default::Value("1") },
    KeySpec { key: "cns.pressure_coefficient", ty: Type::Float, kinds: &[Cns], default: Default::Value("1") },
    KeySpec { key: "cns.pressure_exponent", ty: Type::Float, kinds: &[Cns], default: Default::Value("1.4") },
    KeySpec { key: "cns.energy_ell", ty: Type::FloatList, kinds: &[Cns], default: Default::Value("0, 1") },
    KeySpec { key: "cns.energy_m", ty: Type::Int, kinds: &[Cns], default: Default::Value("3") },
    KeySpec { key: "cns.sobolev_ell", ty: Type::FloatList, kinds: &[Cns], default: Default::Value("0, 1") },
    KeySpec { key: "cns.sample_every", ty: Type::Int, kinds: &[Cns], default: Default::Value("1") },
    KeySpec { key: "kinetic.nv", ty: Type::Int, kinds: &[Kinetic], default: Default::Value("17") },
    KeySpec { key: "kinetic.v_max", ty: Type::Float, kinds: &[Kinetic], default: Default::Value("8") },
    KeySpec { key: "kinetic.nv_center", ty: Type::Int, kinds: &[Kinetic], default: Default::Value("129") },
    KeySpec { key: "kinetic.profile_points", ty: Type::Int, kinds: &[Kinetic], default: Default::Value("16") },
    KeySpec { key: "ineq.band_lo", ty: Type::Float, kinds: &[Inequalities], default: Default::Value("2") },
    KeySpec { key: "ineq.band_hi", ty: Type::Float, kinds: &[Inequalities], default: Default::Value("4") },
    KeySpec { key: "ineq.count", ty: Type::Int, kinds: &[Inequalities], default: Default::Value("32") },
    KeySpec { key: "ineq.phases", ty: Type::Str, kinds: &[Inequalities], default: Default::Value("mixed") },
    KeySpec { key: "ineq.jitter", ty: Type::Float, kinds: &[Inequalities], default: Default::Value("0.5") },
    KeySpec { key: "ineq.slope", ty: Type::Float, kinds: &[Inequalities], default: Default::Value("0") },
    KeySpec { key: "ineq.doubling", ty: Type::Bool, kinds: &[Inequalities], default: Default::Value("true") },
    KeySpec { key: "fit.input", ty: Type::Str, kinds: &[Fit], default: Default::Required },
    KeySpec { key: "fit.quantity", ty: Type::Str, kinds: &[Fit], default: Default::Required },
    KeySpec { key: "fit.label", ty: Type::Str, kinds: &[Fit], default: Default::Optional },
    KeySpec { key: "fit.window_start", ty: Type::Float, kinds: &[Fit], default: Default::Required },
    KeySpec { key: "fit.window_stop", ty: Type::Float, kinds: &[Fit], default: Default::Required },
    KeySpec { key: "fit.predicted", ty: Type::Float, kinds: &[Fit], default: Default::Required },
    KeySpec { key: "fit.mode", ty: Type::Str, kinds: &[Fit], default: Default::Value("two_sided") },
];

/// Allowed values of enumerated string keys.
const CHOICES: &[(&str, &[&str])] = &[
    ("heat.initial", &["gaussian", "power_gaussian", "field"]),
    ("cns.initial", &["random", "equilibrium"]),
    ("ineq.phases", &["random", "coherent", "mixed"]),
    ("fit.mode", &["two_sided", "one_sided"]),
];

/// A configuration error, located at a line when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    FloatList(Vec<f64>),
    Bool(bool),
    Str(String),
}

impl Value {
    /// Canonical text; the run id hashes these strings.
    pub fn canonical(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_float(*x),
            Value::FloatList(v) => v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(", "),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => s.clone(),
        }
    }
}

/// Shortest round-trip representation.
fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn parse_value(ty: Type, raw: &str) -> Option<Value> {
    match ty {
        Type::Int => raw.parse::<u64>().ok().map(Value::Int),
        Type::Float => parse_float(raw).map(Value::Float),
        Type::FloatList => {
            let items: Option<Vec<f64>> = raw.split(',').map(|p| parse_float(p.trim())).collect();
            items.filter(|v| !v.is_empty()).map(Value::FloatList)
        }
        Type::Bool => match raw {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => None,
        },
        Type::Str => (!raw.is_empty()).then(|| Value::Str(raw.to_string())),
    }
}

fn parse_float(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// A typed, fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    values: BTreeMap<String, Value>,
    lines: BTreeMap<String, usize>,
}

impl ExperimentConfig {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    /// Line on which `key` was set, if it was set explicitly.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.values.get(key) {
            Some(Value::Int(i)) => *i,
            other => panic!("key {key} is not a resolved integer: {other:?}"),
        }
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Float(x)) => *x,
            other => panic!("key {key} is not a resolved number: {other:?}"),
        }
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::FloatList(v)) => v,
            other => panic!("key {key} is not a resolved list: {other:?}"),
        }
    }

    pub fn boolean(&self, key: &str) -> bool {
        match self.values.get(key) {
            Some(Value::Bool(b)) => *b,
            other => panic!("key {key} is not a resolved boolean: {other:?}"),
        }
    }

    pub fn string(&self, key: &str) -> Option<&str> {
        match self.values.get(key) {
            Some(Value::Str(s)) => Some(s),
            _ => None,
        }
    }

    /// `key = value` lines in key order, `kind` first.
    pub fn canonical_text(&self) -> String {
        let mut out = format!("kind = {}\n", self.kind.as_str());
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {}\n", v.canonical()));
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| ConfigError::general(format!("{} is not valid UTF-8", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut raw: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::at(n, format!("expected `key = value`, found `{body}`")));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::at(n, "missing key before `=`"));
        }
        if let Some((_, first)) = raw.get(k) {
            return Err(ConfigError::at(
                n,
                format!("duplicate key `{k}` (first set on line {first}, again on line {n})"),
            ));
        }
        raw.insert(k.to_string(), (v.to_string(), n));
    }

    let Some((kind_raw, kind_line)) = raw.remove("kind") else {
        return Err(ConfigError::general("missing required key `kind`"));
    };
    let kind: Kind = kind_raw.parse().map_err(|e: String| ConfigError::at(kind_line, e))?;

    let mut values = BTreeMap::new();
    let mut lines = BTreeMap::new();
    for (k, (v, n)) in &raw {
        let Some(spec) = KEYS.iter().find(|s| s.key == k && s.kinds.contains(&kind)) else {
            let other = KEYS.iter().any(|s| s.key == k);
            let msg = if other {
                format!("key `{k}` does not apply to kind = {}", kind.as_str())
            } else {
                format!("unknown key `{k}`")
            };
            return Err(ConfigError::at(*n, msg));
        };
        let value = parse_value(spec.ty, v)
            .ok_or_else(|| ConfigError::at(*n, format!("`{k}` must be {}, found `{v}`", spec.ty.name())))?;
        if let (Value::Str(s), Some((_, allowed))) = (&value, CHOICES.iter().find(|(key, _)| key == k)) {
            if !allowed.contains(&s.as_str()) {
                return Err(ConfigError::at(
                    *n,
                    format!("`{k}` must be one of {}, found `{s}`", allowed.join(", ")),
                ));
            }
        }
        values.insert(k.clone(), value);
        lines.insert(k.clone(), *n);
    }
    for spec in KEYS.iter().filter(|s| s.kinds.contains(&kind)) {
        if values.contains_key(spec.key) {
            continue;
        }
        match spec.default {
            Default::Required => {
                return Err(ConfigError::at(
                    kind_line,
                    format!("kind = {} requires key `{}`", kind.as_str(), spec.key),
                ))
            }
            Default::Optional => {}
            Default::Value(v) => {
                let value = parse_value(spec.ty, v).expect("built-in defaults parse");
                values.insert(spec.key.to_string(), value);
            }
        }
    }
    let cfg = ExperimentConfig { kind, values, lines };
    validate(&cfg)?;
    Ok(cfg)
}

/// Range checks that need more than the type of a single key.
fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let at = |key: &str, msg: String| ConfigError {
        line: cfg.line_of(key),
        message: msg,
    };
    if cfg.kind == Kind::Cns {
        for &s in cfg.floats("s") {
            if s >= 1.5 {
                return Err(at(
                    "s",
                    format!("s = {s} is not allowed: the compressible decay estimate requires s<3/2"),
                ));
            }
            if s <= 0.0 {
                return Err(at("s", format!("s = {s} must be positive")));
            }
        }
        let beta = cfg.float("cns.beta");
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(at("cns.beta", format!("cns.beta = {beta} must lie in (0, 1/2]")));
        }
        let m = cfg.int("cns.energy_m") as f64;
        for &l in cfg.floats("cns.energy_ell") {
            if l < 0.0 || l.fract() != 0.0 || l >= m {
                return Err(at(
                    "cns.energy_ell",
                    format!("energy level ℓ = {l} must be an integer with 0 <= ℓ < cns.energy_m = {m}"),
                ));
            }
        }
        if cfg.int("cns.sample_every") == 0 {
            return Err(at("cns.sample_every", "cns.sample_every must be at least 1".into()));
        }
    }
    if cfg.kind == Kind::Heat {
        let s = cfg.floats("s");
        if s.len() != 1 {
            return Err(at("s", format!("heat runs take a single s, found {}", s.len())));
        }
        if !(0.0..1.5).contains(&s[0]) {
            return Err(at("s", format!("s = {} must lie in [0, 3/2)", s[0])));
        }
        if cfg.int("times.count") < 2 {
            return Err(at("times.count", "times.count must be at least 2".into()));
        }
        if !(cfg.float("times.start") > 0.0 && cfg.float("times.stop") > cfg.float("times.start")) {
            return Err(at("times.stop", "need 0 < times.start < times.stop".into()));
        }
    }
    if cfg.kind == Kind::Inequalities && cfg.int("ineq.count") == 0 {
        return Err(at("ineq.count", "ineq.count must be at least 1".into()));
    }
    if cfg.kind == Kind::Fit && !(cfg.float("fit.window_stop") > cfg.float("fit.window_start")) {
        return Err(at("fit.window_stop", "need fit.window_start < fit.window_stop".into()));
    }
    for key in ["grid.n", "kinetic.nv", "kinetic.nv_center", "times.count", "kinetic.profile_points"] {
        if let Some(Value::Int(0)) = cfg.get(key) {
            return Err(at(key, format!("`{key}` must be positive")));
        }
    }
    Ok(())
}
