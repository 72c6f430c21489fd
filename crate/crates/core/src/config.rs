//! Flat `key = value` experiment configs.
//!
//! ```text
//! # two reservoirs at the poles
//! experiment = custom
//! seed = 7
//! reservoir.1.theta = 0
//! reservoir.1.coupling = 0.00737
//! reservoir.2.theta = pi
//! reservoir.2.coupling = 0.00263
//! schedule.k_mean = 18000
//! ```
//!
//! Lines starting with `#` are comments. Angles accept `pi` multiples
//! (`pi`, `2pi/3`, `-pi/2`). List-valued keys take comma-separated values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::collision::MAX_RESERVOIRS;
use crate::error::{Error, Result};
use crate::experiments::ExperimentId;

pub const SEED_ENV: &str = "COLLISIM_SEED";
pub const DEFAULT_SEED: u64 = 42;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parsed lines of a config file, in key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| config_err(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(config_err(format!("line {}: bad key `{k}`", n + 1)));
            }
            if v.is_empty() {
                return Err(config_err(format!("line {}: `{k}` has no value", n + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(config_err(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// A resolved run: the experiment, its seed, where to write, and the
/// effective parameters (registry defaults with overrides applied).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub params: Params,
}

impl ExperimentConfig {
    /// Builds the effective config for `raw`. `seed_override` (the `--seed`
    /// flag) beats the `seed` key, which beats [`SEED_ENV`].
    pub fn resolve(raw: &RawConfig, seed_override: Option<u64>) -> Result<Self> {
        let mut entries = raw.entries.clone();
        let experiment: ExperimentId =
            entries.remove("experiment").ok_or_else(|| config_err("missing `experiment` key"))?.parse()?;
        let seed_key = entries.remove("seed").map(|s| parse_seed(&s)).transpose()?;
        let output = entries.remove("output").map(PathBuf::from);
        let seed = match (seed_override, seed_key) {
            (Some(s), _) | (None, Some(s)) => s,
            (None, None) => env_seed()?,
        };

        let mut params: BTreeMap<String, String> =
            experiment.defaults().iter().map(|&(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in entries {
            let known = params.contains_key(&k) || (experiment == ExperimentId::Custom && is_reservoir_key(&k));
            if !known {
                return Err(config_err(format!("unknown key `{k}` for experiment {experiment}")));
            }
            params.insert(k, v);
        }
        Ok(Self { experiment, seed, output, params: Params(params) })
    }

    /// Config for a registry entry with no overrides.
    pub fn preset(experiment: ExperimentId, seed: u64) -> Self {
        let raw = RawConfig { entries: BTreeMap::from([("experiment".to_string(), experiment.to_string())]) };
        Self::resolve(&raw, Some(seed)).expect("registry defaults are valid")
    }

    /// Canonical `key = value` text of the effective config.
    pub fn canonical(&self) -> String {
        let mut out = format!("experiment = {}\nseed = {}\n", self.experiment, self.seed);
        for (k, v) in &self.params.0 {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn parse_seed(s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| config_err(format!("seed `{s}` is not a non-negative integer")))
}

fn env_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => parse_seed(&s),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn is_reservoir_key(k: &str) -> bool {
    let mut parts = k.split('.');
    let (Some("reservoir"), Some(n), Some(field), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return false;
    };
    matches!(n.parse::<usize>(), Ok(i) if (1..=MAX_RESERVOIRS).contains(&i))
        && matches!(field, "theta" | "phi" | "coupling")
}

/// Effective parameters with typed accessors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params(pub BTreeMap<String, String>);

impl Params {
    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.0.get(key).map(String::as_str).ok_or_else(|| config_err(format!("missing key `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let s = self.str(key)?;
        parse_number(s).ok_or_else(|| config_err(format!("`{key}`: `{s}` is not a number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let s = self.str(key)?;
        s.parse().map_err(|_| config_err(format!("`{key}`: `{s}` is not a non-negative integer")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.str(key)?
            .split(',')
            .map(|s| parse_number(s.trim()).ok_or_else(|| config_err(format!("`{key}`: `{s}` is not a number"))))
            .collect()
    }

    pub fn parse<T: std::str::FromStr<Err = Error>>(&self, key: &str) -> Result<T> {
        self.str(key)?.parse().map_err(|e: Error| config_err(format!("`{key}`: {e}")))
    }
}

/// A float, or a multiple of `pi` such as `pi/2`, `2pi/3`, `-pi`, `0.5*pi`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let lower = s.to_ascii_lowercase().replace('π', "pi");
    let (left, right) = lower.split_once("pi")?;
    let left = left.trim().trim_end_matches('*').trim();
    let coef = match left {
        "" | "+" => 1.0,
        "-" => -1.0,
        l => l.parse::<f64>().ok()?,
    };
    let den = match right.trim() {
        "" => 1.0,
        r => r.strip_prefix('/')?.trim().parse::<f64>().ok()?,
    };
    let v = coef * std::f64::consts::PI / den;
    v.is_finite().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("2e-5"), Some(2e-5));
        assert_eq!(parse_number("pi"), Some(PI));
        assert_eq!(parse_number("-pi/2"), Some(-PI / 2.0));
        assert_eq!(parse_number("2pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_number("0.5*pi"), Some(0.5 * PI));
        assert_eq!(parse_number("π/12"), Some(PI / 12.0));
        assert_eq!(parse_number("pie"), None);
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn parse_lines() {
        let raw = RawConfig::parse("# c\n\nexperiment = fig2a\n schedule.k_mean=100 \n").unwrap();
        assert_eq!(raw.entries["schedule.k_mean"], "100");
        assert!(RawConfig::parse("a = 1\na = 2").is_err());
        assert!(RawConfig::parse("no equals").is_err());
        assert!(RawConfig::parse("a =").is_err());
        assert!(RawConfig::parse("a b = 1").is_err());
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let raw = RawConfig::parse("experiment = fig2a\nseed = 3\nschedule.k_mean = 100").unwrap();
        let cfg = ExperimentConfig::resolve(&raw, None).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.params.usize("schedule.k_mean").unwrap(), 100);
        assert_eq!(ExperimentConfig::resolve(&raw, Some(9)).unwrap().seed, 9);

        let raw = RawConfig::parse("experiment = fig2a\nschedule.kmean = 100").unwrap();
        assert!(matches!(ExperimentConfig::resolve(&raw, None), Err(Error::Config(_))));
        let raw = RawConfig::parse("experiment = fig2a\nreservoir.2.theta = 1").unwrap();
        assert!(ExperimentConfig::resolve(&raw, None).is_err());
        let raw = RawConfig::parse("experiment = custom\nreservoir.2.theta = 1").unwrap();
        assert!(ExperimentConfig::resolve(&raw, None).is_ok());
        let raw = RawConfig::parse("experiment = custom\nreservoir.5.theta = 1").unwrap();
        assert!(ExperimentConfig::resolve(&raw, None).is_err());
        let raw = RawConfig::parse("experiment = fig99").unwrap();
        assert!(ExperimentConfig::resolve(&raw, None).is_err());
        assert!(ExperimentConfig::resolve(&RawConfig::default(), None).is_err());
        let raw = RawConfig::parse("experiment = fig2a\nseed = -1").unwrap();
        assert!(ExperimentConfig::resolve(&raw, None).is_err());
    }

    #[test]
    fn canonical_is_sorted_and_complete() {
        let cfg = ExperimentConfig::preset(ExperimentId::Fig2a, 1);
        let text = cfg.canonical();
        assert!(text.starts_with("experiment = fig2a\nseed = 1\n"));
        let keys: Vec<_> = text.lines().skip(2).map(|l| l.split(" = ").next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(RawConfig::parse(&text).is_ok());
    }

    #[test]
    fn typed_accessors() {
        let p =
            Params(BTreeMap::from([("a".to_string(), "1, 2pi, 3".to_string()), ("b".to_string(), "x".to_string())]));
        assert_eq!(p.list("a").unwrap(), vec![1.0, 2.0 * PI, 3.0]);
        assert!(p.f64("b").is_err());
        assert!(p.usize("b").is_err());
        assert!(p.str("c").is_err());
    }
}
