//! Key-value run configuration.
//!
//! Configs are TOML documents with a flat set of keys plus an optional
//! `[geometry]` table. Values are layered: config file, then `RISQR_*`
//! environment variables, then `--set key=value` overrides, then dedicated
//! command-line flags. Every layer goes through the same typed extraction,
//! so an override can never smuggle in a key or type the file could not.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::harness::{ExperimentSpec, GeometrySpec, IntensityConvention, Scheme, TruthPolicy};
use crate::optics::ChannelGeometry;
use crate::quantum_rx::Retention;

/// Prefix of environment-variable overrides, e.g. `RISQR_TRIALS=500`.
pub const ENV_PREFIX: &str = "RISQR_";

/// Top-level keys accepted in a config.
pub const KEYS: &[&str] = &[
    "series",
    "scheme",
    "m",
    "modes",
    "k",
    "visibility",
    "n0_total",
    "symbol_duration_us",
    "time_bin_divisor",
    "feedback_delay_us",
    "max_steps",
    "accel_threshold",
    "efficiency_central",
    "efficiency_other",
    "convention",
    "truth",
    "retention",
    "trials",
    "seed",
    "trajectories",
    "heatmap_bin_us",
    "geometry",
];

/// Keys of the `[geometry]` table; all are required when it is present.
pub const GEOMETRY_KEYS: &[&str] = &["l_ris", "a_tx", "a_rx", "z0", "z1", "lambda"];

/// Configuration failures, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    MissingFile { path: PathBuf, source: std::io::Error },
    #[error("config {path} is not valid TOML: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("key `{key}`: expected {expected}, found {found}")]
    TypeMismatch { key: String, expected: &'static str, found: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("inconsistent sweep axes: {0}")]
    InconsistentAxes(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("malformed override `{0}`, expected key=value")]
    BadOverride(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ConfigError::MissingFile { .. } => 3,
            ConfigError::Malformed { .. } | ConfigError::TypeMismatch { .. } => 4,
            ConfigError::BadOverride(_) => 4,
            ConfigError::UnknownKey(_) => 5,
            ConfigError::InconsistentAxes(_) => 6,
            ConfigError::InvalidValue { .. } => 7,
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

/// Reads a config file into a table.
pub fn load_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::MissingFile { path: path.to_path_buf(), source })?;
    text.parse::<Table>()
        .map_err(|e| ConfigError::Malformed { path: path.to_path_buf(), message: e.message().to_string() })
}

/// Parses an override value. Anything that is not a TOML literal is taken as
/// a bare string, so `scheme=ris-sql` and `n0_total=[0.5, 1.0]` both work.
pub fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Splits `key=value`; dotted keys address `[geometry]` entries.
pub fn parse_override(raw: &str) -> Result<(String, Value)> {
    let (key, value) = raw.split_once('=').ok_or_else(|| ConfigError::BadOverride(raw.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(raw.to_string()));
    }
    Ok((key.to_string(), parse_value(value)))
}

/// Sets `key` (possibly `geometry.x`) in `table`.
pub fn set_key(table: &mut Table, key: &str, value: Value) -> Result<()> {
    match key.split_once('.') {
        None => {
            table.insert(key.to_string(), value);
        }
        Some((outer, inner)) => {
            let entry = table.entry(outer.to_string()).or_insert_with(|| Value::Table(Table::new()));
            match entry {
                Value::Table(t) => {
                    t.insert(inner.to_string(), value);
                }
                other => {
                    return Err(ConfigError::TypeMismatch {
                        key: outer.to_string(),
                        expected: "a table",
                        found: type_name(other).to_string(),
                    })
                }
            }
        }
    }
    Ok(())
}

/// Collects `RISQR_<KEY>` variables for every known key from `vars`.
/// Geometry keys are addressed as `RISQR_GEOMETRY_<KEY>`.
pub fn env_overrides<I>(vars: I) -> Vec<(String, Value)>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut out = Vec::new();
    for (name, raw) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let rest = rest.to_ascii_lowercase();
        let key = if let Some(g) = rest.strip_prefix("geometry_") {
            if !GEOMETRY_KEYS.contains(&g) {
                continue;
            }
            format!("geometry.{g}")
        } else if KEYS.contains(&rest.as_str()) && rest != "geometry" {
            rest
        } else {
            continue;
        };
        out.push((key, parse_value(&raw)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "a string",
        Value::Integer(_) => "an integer",
        Value::Float(_) => "a float",
        Value::Boolean(_) => "a boolean",
        Value::Datetime(_) => "a datetime",
        Value::Array(_) => "an array",
        Value::Table(_) => "a table",
    }
}

fn mismatch(key: &str, expected: &'static str, v: &Value) -> ConfigError {
    ConfigError::TypeMismatch { key: key.to_string(), expected, found: type_name(v).to_string() }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.to_string(), reason: reason.into() }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(mismatch(key, "a number", other)),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(invalid(key, format!("must be non-negative, got {i}"))),
        other => Err(mismatch(key, "an integer", other)),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    match v {
        Value::String(s) => Ok(s),
        other => Err(mismatch(key, "a string", other)),
    }
}

/// A scalar or an array of scalars.
fn list<T>(key: &str, v: &Value, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        Value::Array(items) => items.iter().map(|x| item(key, x)).collect(),
        scalar => Ok(vec![item(key, scalar)?]),
    }
}

fn scheme(key: &str, v: &Value) -> Result<Scheme> {
    match as_str(key, v)? {
        "ris-quantum" => Ok(Scheme::RisQuantum),
        "ris-sql" => Ok(Scheme::RisSql),
        "psk-sql" => Ok(Scheme::PskSql),
        other => Err(invalid(key, format!("unknown scheme `{other}` (ris-quantum, ris-sql, psk-sql)"))),
    }
}

fn convention(key: &str, v: &Value) -> Result<IntensityConvention> {
    match as_str(key, v)? {
        "source" => Ok(IntensityConvention::Source),
        "received" => Ok(IntensityConvention::Received),
        "detected" => Ok(IntensityConvention::Detected),
        other => Err(invalid(key, format!("unknown convention `{other}` (source, received, detected)"))),
    }
}

fn retention(key: &str, v: &Value) -> Result<Retention> {
    match as_str(key, v)? {
        "best-mode" => Ok(Retention::BestMode),
        "elementwise-max" => Ok(Retention::ElementwiseMax),
        other => Err(invalid(key, format!("unknown retention `{other}` (best-mode, elementwise-max)"))),
    }
}

/// `"uniform"` or a 1-based symbol index.
fn truth(key: &str, v: &Value) -> Result<TruthPolicy> {
    match v {
        Value::String(s) if s == "uniform" => Ok(TruthPolicy::Uniform),
        Value::String(s) => Err(invalid(key, format!("expected \"uniform\" or a symbol index, got `{s}`"))),
        Value::Integer(i) if *i >= 1 => Ok(TruthPolicy::Fixed(*i as usize - 1)),
        Value::Integer(i) => Err(invalid(key, format!("symbol indices are 1-based, got {i}"))),
        other => Err(mismatch(key, "\"uniform\" or an integer", other)),
    }
}

fn geometry(v: &Value) -> Result<GeometrySpec> {
    let Value::Table(t) = v else {
        return Err(mismatch("geometry", "a table", v));
    };
    if let Some(k) = t.keys().find(|k| !GEOMETRY_KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(format!("geometry.{k}")));
    }
    let get = |name: &str| -> Result<f64> {
        let key = format!("geometry.{name}");
        let v = t.get(name).ok_or_else(|| invalid(&key, "missing; the geometry table needs every key"))?;
        as_f64(&key, v)
    };
    Ok(GeometrySpec {
        channel: ChannelGeometry {
            l_ris: get("l_ris")?,
            a_tx: get("a_tx")?,
            a_rx: get("a_rx")?,
            z0: get("z0")?,
            z1: get("z1")?,
        },
        lambda: get("lambda")?,
    })
}

/// Resolves a merged table into a validated spec with every default applied.
pub fn spec_from_table(table: &Table) -> Result<ExperimentSpec> {
    if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    let scheme = match table.get("scheme") {
        Some(v) => scheme("scheme", v)?,
        None => Scheme::RisQuantum,
    };
    let m = match table.get("m") {
        Some(v) => as_u64("m", v)? as usize,
        None => 16,
    };
    let mut spec = ExperimentSpec::new(scheme, m);
    for (key, v) in table {
        let key = key.as_str();
        match key {
            "series" => spec.series = as_str(key, v)?.to_string(),
            "scheme" | "m" => {}
            "modes" => spec.modes = list(key, v, |k, x| as_u64(k, x).map(|s| s as usize))?,
            "k" => spec.k = list(key, v, as_u64)?,
            "visibility" => spec.visibility = as_f64(key, v)?,
            "n0_total" => spec.n0 = list(key, v, as_f64)?,
            "symbol_duration_us" => spec.symbol_duration_us = list(key, v, as_f64)?,
            "time_bin_divisor" => spec.time_bin_divisor = as_f64(key, v)?,
            "feedback_delay_us" => spec.feedback_delay_us = as_f64(key, v)?,
            "max_steps" => spec.max_steps = as_u64(key, v)? as usize,
            "accel_threshold" => spec.accel_threshold = as_f64(key, v)?,
            "efficiency_central" => spec.efficiency_central = as_f64(key, v)?,
            "efficiency_other" => spec.efficiency_other = as_f64(key, v)?,
            "convention" => spec.convention = convention(key, v)?,
            "truth" => spec.truth = truth(key, v)?,
            "retention" => spec.retention = retention(key, v)?,
            "trials" => spec.trials = as_u64(key, v)?,
            "seed" => spec.master_seed = as_u64(key, v)?,
            "trajectories" => match v {
                Value::Boolean(b) => spec.trajectories = *b,
                other => return Err(mismatch(key, "a boolean", other)),
            },
            "heatmap_bin_us" => spec.heatmap_bin_us = as_f64(key, v)?,
            "geometry" => spec.geometry = Some(geometry(v)?),
            _ => unreachable!("unknown keys rejected above"),
        }
    }
    if !table.contains_key("series") {
        spec.series = scheme.as_str().to_string();
    }
    check(&spec)?;
    Ok(spec)
}

/// Domain validation, mapping library errors onto config exit codes.
pub fn check(spec: &ExperimentSpec) -> Result<()> {
    use crate::Error;
    match spec.validate() {
        Ok(()) => Ok(()),
        Err(Error::InvalidSweep(msg)) => Err(ConfigError::InconsistentAxes(msg)),
        Err(Error::InvalidParameter { name, reason }) => Err(invalid(name, reason)),
        Err(Error::UnsupportedOrder(m)) => Err(invalid("m", format!("unsupported modulation order {m}"))),
        Err(Error::EmptyInput(what)) => Err(invalid(what, "must not be empty")),
        Err(other) => Err(invalid("config", other.to_string())),
    }
}

/// Layers command defaults, `file`, environment, `--set` overrides and flag
/// overrides, then resolves the result.
pub fn parse_config(
    defaults: &[(String, Value)],
    file: Option<&Path>,
    env: &[(String, Value)],
    sets: &[String],
    flags: &[(String, Value)],
) -> Result<ExperimentSpec> {
    let mut table = match file {
        Some(p) => load_file(p)?,
        None => Table::new(),
    };
    for (k, v) in defaults {
        if !table.contains_key(k) {
            table.insert(k.clone(), v.clone());
        }
    }
    for (k, v) in env {
        set_key(&mut table, k, v.clone())?;
    }
    for raw in sets {
        let (k, v) = parse_override(raw)?;
        set_key(&mut table, &k, v)?;
    }
    for (k, v) in flags {
        set_key(&mut table, k, v.clone())?;
    }
    spec_from_table(&table)
}
