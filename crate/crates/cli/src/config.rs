//! Sweep configuration parsing: the flat `key = value` config file and the
//! equivalent command-line tokens.
//!
//! Recognized keys: `dims` (semicolon-separated `NxCxHxW` quadruples),
//! `stages`, `directions`, `precision`, `repeats`, `warmup`, `kchunk`,
//! `c_slice`, `c_proxy`, `seed`, `out`. Unknown keys and malformed values
//! are usage errors that name the offending token.

use std::fmt;
use std::path::{Path, PathBuf};

use linescan_core::{Stage, DEFAULT_PROXY_CHANNELS};

use crate::bench::{BenchConfig, DirectionSpec, Precision};

/// A usage/config error; maps to process exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub token: String,
    pub message: String,
}

impl ConfigError {
    fn new(token: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            token: token.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.message, self.token)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_dims_list(s: &str) -> Result<Vec<[usize; 4]>, ConfigError> {
    let mut out = Vec::new();
    for quad in s.split(';').filter(|q| !q.trim().is_empty()) {
        out.push(parse_dims(quad.trim())?);
    }
    if out.is_empty() {
        return Err(ConfigError::new(s, "dims list is empty"));
    }
    Ok(out)
}

pub fn parse_dims(s: &str) -> Result<[usize; 4], ConfigError> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    if parts.len() != 4 {
        return Err(ConfigError::new(s, "dims must be NxCxHxW"));
    }
    let mut dims = [0usize; 4];
    for (i, p) in parts.iter().enumerate() {
        dims[i] = p
            .trim()
            .parse::<usize>()
            .map_err(|_| ConfigError::new(*p, "dims component is not a positive integer"))?;
        if dims[i] == 0 {
            return Err(ConfigError::new(*p, "dims component must be >= 1"));
        }
    }
    Ok(dims)
}

pub fn parse_stages(s: &str) -> Result<Vec<Stage>, ConfigError> {
    let mut out = Vec::new();
    for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match Stage::parse_token(token) {
            Some(stage) => out.push(stage),
            None => return Err(ConfigError::new(token, "unknown stage (expected S0..S5)")),
        }
    }
    Ok(out)
}

pub fn parse_directions(s: &str) -> Result<Vec<DirectionSpec>, ConfigError> {
    let mut out = Vec::new();
    for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match DirectionSpec::parse_token(token) {
            Some(d) => out.push(d),
            None => {
                return Err(ConfigError::new(
                    token,
                    "unknown direction (expected T2B, B2T, L2R, R2L or ALL)",
                ))
            }
        }
    }
    if out.is_empty() {
        return Err(ConfigError::new(s, "directions list is empty"));
    }
    Ok(out)
}

pub fn parse_precision(s: &str) -> Result<Precision, ConfigError> {
    Precision::parse_token(s.trim())
        .ok_or_else(|| ConfigError::new(s, "unknown precision (expected f32 or f64)"))
}

fn parse_count(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| ConfigError::new(v, format!("{key} must be a non-negative integer")))
}

/// `c_proxy` accepts an integer or the word `default` (= 8).
pub fn parse_c_proxy(v: &str) -> Result<usize, ConfigError> {
    let t = v.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("default") {
        return Ok(DEFAULT_PROXY_CHANNELS);
    }
    let cp = t
        .parse::<usize>()
        .map_err(|_| ConfigError::new(v, "c_proxy must be an integer or 'default'"))?;
    if cp == 0 {
        return Err(ConfigError::new(v, "c_proxy must be >= 1"));
    }
    Ok(cp)
}

/// Parse a config file's text. `defaults` seeds every field the file leaves
/// unset (notably seed and workers, which also have CLI flags).
pub fn parse_config_str(text: &str, defaults: BenchConfig) -> Result<BenchConfig, ConfigError> {
    let mut cfg = defaults;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(
                line,
                format!("line {}: expected 'key = value'", lineno + 1),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "dims" => cfg.dims = parse_dims_list(value)?,
            "stages" => cfg.stages = parse_stages(value)?,
            "directions" => cfg.directions = parse_directions(value)?,
            "precision" => cfg.precision = parse_precision(value)?,
            "repeats" => cfg.repeats = parse_count("repeats", value)?,
            "warmup" => cfg.warmup = parse_count("warmup", value)?,
            "kchunk" => cfg.kchunk = parse_count("kchunk", value)?,
            "c_slice" => cfg.c_slice = parse_count("c_slice", value)?,
            "c_proxy" => cfg.c_proxy = Some(parse_c_proxy(value)?),
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| ConfigError::new(value, "seed must be a u64"))?
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::new(key, "unknown config key")),
        }
    }
    Ok(cfg)
}

pub fn parse_config_file(path: &Path, defaults: BenchConfig) -> Result<BenchConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigError::new(
            path.display().to_string(),
            format!("cannot read config file ({e})"),
        )
    })?;
    parse_config_str(&text, defaults)
}

#[cfg(test)]
mod tests {
    use super::*;
    use linescan_core::Direction;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# sweep over two shapes
dims = 4x8x256x256; 2x4x64x64
stages = S0, S1, S2
directions = L2R, ALL
precision = f64
repeats = 7
warmup = 3
kchunk = 16
c_slice = 2
c_proxy = default
seed = 99
out = results.csv
";
        let cfg = parse_config_str(text, BenchConfig::with_defaults()).unwrap();
        assert_eq!(cfg.dims, vec![[4, 8, 256, 256], [2, 4, 64, 64]]);
        assert_eq!(cfg.stages.len(), 3);
        assert_eq!(
            cfg.directions,
            vec![
                DirectionSpec::One(Direction::LeftToRight),
                DirectionSpec::All
            ]
        );
        assert_eq!(cfg.precision, Precision::F64);
        assert_eq!(cfg.repeats, 7);
        assert_eq!(cfg.warmup, 3);
        assert_eq!(cfg.kchunk, 16);
        assert_eq!(cfg.c_slice, 2);
        assert_eq!(cfg.c_proxy, Some(8));
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.out.as_deref(), Some(Path::new("results.csv")));
    }

    #[test]
    fn unknown_key_names_the_token() {
        let err = parse_config_str("bogus = 1\n", BenchConfig::with_defaults()).unwrap_err();
        assert_eq!(err.token, "bogus");
    }

    #[test]
    fn malformed_dims_names_the_token() {
        let err = parse_config_str("dims = 4x8x256\n", BenchConfig::with_defaults()).unwrap_err();
        assert_eq!(err.token, "4x8x256");
        let err = parse_dims("4xax2x2").unwrap_err();
        assert_eq!(err.token, "a");
    }

    #[test]
    fn c_proxy_default_and_explicit() {
        assert_eq!(parse_c_proxy("default").unwrap(), 8);
        assert_eq!(parse_c_proxy("").unwrap(), 8);
        assert_eq!(parse_c_proxy("4").unwrap(), 4);
        assert!(parse_c_proxy("0").is_err());
        assert!(parse_c_proxy("x").is_err());
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let err = parse_config_file(
            Path::new("/nonexistent/cfg.txt"),
            BenchConfig::with_defaults(),
        )
        .unwrap_err();
        assert!(err.token.contains("/nonexistent/cfg.txt"));
    }
}
