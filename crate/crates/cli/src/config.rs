//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # Scenario B with a shorter sweep
//! scenario = B
//! lambda1_sweep = 1e5:5e5:1e5
//! replications = 10
//! ```
//!
//! `scenario` is required and selects the defaults (`A`–`D`, or `custom`
//! for the common baseline); every other key overrides one field. List
//! keys take comma-separated values. Sweeps are either a list or
//! `start:stop:step`. An arrival SCV item is `x` (both classes) or `x+y`
//! (class 0, class 1).

use std::collections::HashMap;
use std::fmt::Write as _;

use routerq::scenario::{builtin_scenario, ScenarioSpec};
use routerq::{Discipline, Security};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const KEYS: &[&str] = &[
    "scenario",
    "lambda1_sweep",
    "lambda2",
    "mu",
    "scv_s",
    "capacity",
    "servers",
    "discipline",
    "security",
    "scv_a",
    "scv_a1",
    "scv_a2",
    "accept_prob",
    "acl_rate",
    "acl_scv",
    "replications",
    "arrivals",
    "warmup_fraction",
];

struct Entry<'a> {
    line: usize,
    column: usize,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        parse_f64(self.value).ok_or_else(|| self.err(format!("malformed number `{}`", self.value)))
    }

    fn int<T: std::str::FromStr>(&self) -> Result<T, ConfigError> {
        let v = self.value.replace('_', "");
        v.parse()
            .ok()
            .or_else(|| {
                // allow 1e6-style integers
                parse_f64(&v)
                    .filter(|x| x.fract() == 0.0 && *x >= 0.0)
                    .and_then(|x| format!("{x}").parse().ok())
            })
            .ok_or_else(|| self.err(format!("malformed integer `{}`", self.value)))
    }

    fn list(&self) -> Vec<&str> {
        self.value.split(',').map(str::trim).collect()
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().replace('_', "").parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_sweep(entry: &Entry<'_>) -> Result<Vec<f64>, ConfigError> {
    if entry.value.contains(':') {
        let parts: Vec<&str> = entry.value.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(entry.err("sweep range must be start:stop:step"));
        }
        let nums: Option<Vec<f64>> = parts.iter().map(|p| parse_f64(p)).collect();
        let [start, stop, step] = nums
            .ok_or_else(|| entry.err(format!("malformed number in sweep `{}`", entry.value)))?[..]
        else {
            unreachable!()
        };
        if step <= 0.0 || stop < start {
            return Err(entry.err("sweep needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        entry
            .list()
            .iter()
            .map(|v| parse_f64(v).ok_or_else(|| entry.err(format!("malformed number `{v}`"))))
            .collect()
    }
}

/// Parse and validate a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioSpec, ConfigError> {
    let mut entries: HashMap<&str, Entry<'_>> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let column = content.len() - content.trim_start().len() + 1;
            return Err(ConfigError {
                line,
                column,
                message: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim();
        let key_column = content.len() - content.trim_start().len() + 1;
        let value_part = &content[eq + 1..];
        let value = value_part.trim();
        let value_column = eq + 2 + (value_part.len() - value_part.trim_start().len());
        if !KEYS.contains(&key) {
            return Err(ConfigError {
                line,
                column: key_column,
                message: format!("unknown key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                line,
                column: value_column,
                message: format!("missing value for `{key}`"),
            });
        }
        if entries.contains_key(key) {
            return Err(ConfigError {
                line,
                column: key_column,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.insert(
            key,
            Entry {
                line,
                column: value_column,
                value,
            },
        );
        order.push(key);
    }

    let scenario = entries.get("scenario").ok_or(ConfigError {
        line: 1,
        column: 1,
        message: "missing required key `scenario`".into(),
    })?;
    let mut spec = if scenario.value.eq_ignore_ascii_case("custom") {
        ScenarioSpec::default()
    } else {
        builtin_scenario(scenario.value)
            .ok_or_else(|| scenario.err(format!("unknown scenario `{}` (expected A, B, C, D or custom)", scenario.value)))?
    };

    for key in &order {
        let e = &entries[key];
        match *key {
            "scenario" => {}
            "lambda1_sweep" => spec.lambda1_sweep = parse_sweep(e)?,
            "lambda2" => spec.lambda2 = e.f64()?,
            "mu" => spec.mu = e.f64()?,
            "scv_s" => spec.scv_s = e.f64()?,
            "capacity" => spec.capacity = e.int()?,
            "servers" => {
                spec.servers = e
                    .list()
                    .iter()
                    .map(|v| {
                        Entry {
                            line: e.line,
                            column: e.column,
                            value: v,
                        }
                        .int()
                    })
                    .collect::<Result<_, _>>()?
            }
            "discipline" => {
                spec.disciplines = e
                    .list()
                    .iter()
                    .map(|v| v.parse::<Discipline>().map_err(|err| e.err(err.to_string())))
                    .collect::<Result<_, _>>()?
            }
            "security" => {
                spec.security = e
                    .list()
                    .iter()
                    .map(|v| v.parse::<Security>().map_err(|err| e.err(err.to_string())))
                    .collect::<Result<_, _>>()?
            }
            "scv_a" => {
                spec.arrival_scv = e
                    .list()
                    .iter()
                    .map(|item| {
                        let mut parts = item.split('+').map(parse_f64);
                        match (parts.next(), parts.next(), parts.next()) {
                            (Some(Some(a)), None, None) => Ok((a, a)),
                            (Some(Some(a)), Some(Some(b)), None) => Ok((a, b)),
                            _ => Err(e.err(format!("malformed SCV item `{item}`"))),
                        }
                    })
                    .collect::<Result<_, _>>()?
            }
            "scv_a1" | "scv_a2" => {}
            "accept_prob" => spec.accept_prob = e.f64()?,
            "acl_rate" => spec.acl_rate = Some(e.f64()?),
            "acl_scv" => spec.acl_scv = e.f64()?,
            "replications" => spec.replications = e.int()?,
            "arrivals" => spec.arrivals_per_replication = e.int()?,
            "warmup_fraction" => spec.warmup_fraction = e.f64()?,
            other => unreachable!("key list covers {other}"),
        }
    }
    // per-class overrides apply after the scv_a list
    for (key, first) in [("scv_a1", true), ("scv_a2", false)] {
        if let Some(e) = entries.get(key) {
            let v = e.f64()?;
            if v < 1.0 {
                return Err(e.err(format!("{key} must be >= 1 (GE requires SCV >= 1), got {v}")));
            }
            for pair in &mut spec.arrival_scv {
                if first {
                    pair.0 = v;
                } else {
                    pair.1 = v;
                }
            }
        }
    }

    spec.validate().map_err(|err| {
        let e = entries.get("scenario").expect("checked");
        ConfigError {
            line: e.line,
            column: 1,
            message: format!("invalid scenario: {err}"),
        }
    })?;
    Ok(spec)
}

/// Canonical text form of a spec: every key, fixed order, shortest
/// round-trip number formatting. Parsing it yields the same spec.
pub fn to_config_text(spec: &ScenarioSpec) -> String {
    let join = |items: Vec<String>| items.join(", ");
    let mut out = String::new();
    let scenario = if matches!(spec.id.as_str(), "A" | "B" | "C" | "D") {
        spec.id.as_str()
    } else {
        "custom"
    };
    let _ = writeln!(out, "scenario = {scenario}");
    let _ = writeln!(out, "lambda1_sweep = {}", join(spec.lambda1_sweep.iter().map(|v| format!("{v:e}")).collect()));
    let _ = writeln!(out, "lambda2 = {:e}", spec.lambda2);
    let _ = writeln!(out, "mu = {:e}", spec.mu);
    let _ = writeln!(out, "scv_s = {}", spec.scv_s);
    let _ = writeln!(out, "capacity = {}", spec.capacity);
    let _ = writeln!(out, "servers = {}", join(spec.servers.iter().map(|v| v.to_string()).collect()));
    let _ = writeln!(out, "discipline = {}", join(spec.disciplines.iter().map(|v| v.to_string()).collect()));
    let _ = writeln!(out, "security = {}", join(spec.security.iter().map(|v| v.to_string()).collect()));
    let _ = writeln!(
        out,
        "scv_a = {}",
        join(
            spec.arrival_scv
                .iter()
                .map(|&(a, b)| if a == b { format!("{a}") } else { format!("{a}+{b}") })
                .collect()
        )
    );
    let _ = writeln!(out, "accept_prob = {}", spec.accept_prob);
    if let Some(rate) = spec.acl_rate {
        let _ = writeln!(out, "acl_rate = {rate:e}");
    }
    let _ = writeln!(out, "acl_scv = {}", spec.acl_scv);
    let _ = writeln!(out, "replications = {}", spec.replications);
    let _ = writeln!(out, "arrivals = {}", spec.arrivals_per_replication);
    let _ = writeln!(out, "warmup_fraction = {}", spec.warmup_fraction);
    out
}

/// SHA-256 (hex) of the canonical text.
pub fn config_hash(spec: &ScenarioSpec) -> String {
    hex::encode(Sha256::digest(to_config_text(spec).as_bytes()))
}
