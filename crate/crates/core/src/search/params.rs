use std::fmt;
use std::time::Duration;

use crate::subsolve::{Backend, Limits};

/// Tuning knobs of the matheuristics. Defaults are the published settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Window size as a fraction of the makespan.
    pub rho: f64,
    /// Batches freed per relocate iteration, as a fraction of the available ones.
    pub phi: f64,
    /// Swaps per perturbation, as a fraction of the available batches.
    pub omega: f64,
    /// Slack for accepting a worse solution in ILS.
    pub delta: f64,
    /// Greediness of the randomized construction (0 = greedy).
    pub rcl_alpha: f64,
    /// Iterations without improvement before stopping.
    pub omega_max: u32,
    /// Wall-clock budget of one sub-solve, in seconds; `None` disables it.
    pub sub_time_limit: Option<f64>,
    /// Node budget of one sub-solve.
    pub sub_node_limit: Option<u64>,
    /// Wall-clock budget of a whole run, in seconds, checked between sub-solves.
    pub time_limit: Option<f64>,
    pub backend: Backend,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            rho: 0.20,
            phi: 0.30,
            omega: 0.10,
            delta: 0.00,
            rcl_alpha: 0.10,
            omega_max: 10,
            sub_time_limit: Some(1.0),
            sub_node_limit: None,
            time_limit: None,
            backend: Backend::BranchAndBound,
        }
    }
}

/// Node budget used when wall-clock limits are switched off and none is set.
pub const DETERMINISTIC_NODE_LIMIT: u64 = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
}

fn fraction(key: &str, value: &str) -> Result<f64, ParamError> {
    let bad = |reason: &str| ParamError::Value { key: key.into(), value: value.into(), reason: reason.into() };
    let v: f64 = value.parse().map_err(|_| bad("not a number"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(bad("must lie in [0, 1]"));
    }
    Ok(v)
}

fn optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>, ParamError> {
    if value.eq_ignore_ascii_case("none") || value.eq_ignore_ascii_case("off") {
        return Ok(None);
    }
    value.parse().map(Some).map_err(|_| ParamError::Value {
        key: key.into(),
        value: value.into(),
        reason: "not a number (or `none`)".into(),
    })
}

impl Params {
    /// Sets one parameter from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ParamError> {
        let value = value.trim();
        let positive = |v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ParamError::Value {
                key: key.into(),
                value: value.into(),
                reason: "must be positive".into(),
            }),
            _ => Ok(v),
        };
        match key.trim() {
            "rho" => self.rho = fraction(key, value)?,
            "phi" => self.phi = fraction(key, value)?,
            "omega" => self.omega = fraction(key, value)?,
            "delta" => self.delta = fraction(key, value)?,
            "rcl_alpha" | "alpha" => self.rcl_alpha = fraction(key, value)?,
            "omega_max" => {
                let v: u32 = value.parse().map_err(|_| ParamError::Value {
                    key: key.into(),
                    value: value.into(),
                    reason: "not a whole number".into(),
                })?;
                if v == 0 {
                    return Err(ParamError::Value { key: key.into(), value: value.into(), reason: "must be at least 1".into() });
                }
                self.omega_max = v;
            }
            "sub_time_limit" => self.sub_time_limit = positive(optional(key, value)?)?,
            "sub_node_limit" => self.sub_node_limit = optional(key, value)?,
            "time_limit" => self.time_limit = positive(optional(key, value)?)?,
            "backend" => {
                self.backend = value.parse().map_err(|reason| ParamError::Value { key: key.into(), value: value.into(), reason })?
            }
            other => return Err(ParamError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ParamError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ParamError::Syntax { line: n + 1 })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Switches off every wall-clock limit so runs depend on the seed only.
    pub fn make_deterministic(&mut self) {
        self.sub_time_limit = None;
        self.time_limit = None;
        if self.sub_node_limit.is_none() {
            self.sub_node_limit = Some(DETERMINISTIC_NODE_LIMIT);
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.sub_time_limit.is_none() && self.time_limit.is_none()
    }

    pub fn sub_limits(&self) -> Limits {
        Limits { time: self.sub_time_limit.map(Duration::from_secs_f64), nodes: self.sub_node_limit }
    }
}

impl fmt::Display for Params {
    /// The `key = value` form read by [`Params::apply_text`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        writeln!(f, "rho = {}", self.rho)?;
        writeln!(f, "phi = {}", self.phi)?;
        writeln!(f, "omega = {}", self.omega)?;
        writeln!(f, "delta = {}", self.delta)?;
        writeln!(f, "rcl_alpha = {}", self.rcl_alpha)?;
        writeln!(f, "omega_max = {}", self.omega_max)?;
        writeln!(f, "sub_time_limit = {}", opt(self.sub_time_limit.map(|v| v.to_string())))?;
        writeln!(f, "sub_node_limit = {}", opt(self.sub_node_limit.map(|v| v.to_string())))?;
        writeln!(f, "time_limit = {}", opt(self.time_limit.map(|v| v.to_string())))?;
        writeln!(f, "backend = {}", self.backend)
    }
}
