//! Time-boxed solving of (restricted) batch models.
//!
//! The built-in backend is a depth-first branch and bound that reads the
//! model's variable bounds as a partial schedule: fixed batches stay put and
//! free operations are inserted into the open slot runs. Models can also be
//! written as LP files and handed to a linked or external MIP solver.

mod bnb;
mod bridge;
pub mod lp;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::mip::{BatchModel, EncodeError};
use crate::schedule::{check_feasibility, evaluate, Schedule};

pub use bnb::{solve_bnb, Unsupported};
pub use bridge::{parse_solution, run_command, BridgeError};
#[cfg(feature = "microlp")]
pub use bridge::solve_microlp;
pub use lp::{export_model, parse_lp, write_lp, LpError, LpProblem};

/// Default wall-clock budget of one sub-solve.
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    FeasibleTimeLimit,
    InfeasibleProven,
    Unknown,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::FeasibleTimeLimit => "feasible (limit reached)",
            Status::InfeasibleProven => "infeasible",
            Status::Unknown => "unknown",
        })
    }
}

/// Stopping rules. With `time == None` a solve depends on nodes only and
/// is reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { time: Some(DEFAULT_TIME_LIMIT), nodes: None }
    }
}

impl Limits {
    pub fn unlimited() -> Self {
        Limits { time: None, nodes: None }
    }

    pub fn nodes(n: u64) -> Self {
        Limits { time: None, nodes: Some(n) }
    }
}

/// Which engine runs a solve.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    BranchAndBound,
    /// The linked pure-Rust MIP solver.
    #[cfg(feature = "microlp")]
    Microlp,
    /// An external program. `{lp}` and `{sol}` in the template are replaced
    /// by the model and solution file paths; the command runs under `sh -c`.
    Command(String),
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(template) = s.strip_prefix("command:") {
            if !template.contains("{lp}") || !template.contains("{sol}") {
                return Err("command backend needs both {lp} and {sol} in its template".into());
            }
            return Ok(Backend::Command(template.to_string()));
        }
        match s {
            "bnb" => Ok(Backend::BranchAndBound),
            #[cfg(feature = "microlp")]
            "microlp" => Ok(Backend::Microlp),
            _ => Err(format!("unknown backend `{s}` (expected bnb, microlp or command:<template>)")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::BranchAndBound => f.write_str("bnb"),
            #[cfg(feature = "microlp")]
            Backend::Microlp => f.write_str("microlp"),
            Backend::Command(t) => write!(f, "command:{t}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveRequest<'m, 'a> {
    pub model: &'m BatchModel<'a>,
    /// Must be a feasible point of `model`.
    pub warm_start: Option<&'m Schedule>,
    pub limits: Limits,
    pub backend: Backend,
}

impl<'m, 'a> SolveRequest<'m, 'a> {
    pub fn new(model: &'m BatchModel<'a>) -> Self {
        SolveRequest { model, warm_start: None, limits: Limits::default(), backend: Backend::default() }
    }

    pub fn warm_start(mut self, sched: &'m Schedule) -> Self {
        self.warm_start = Some(sched);
        self
    }

    pub fn limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: Status,
    pub incumbent: Option<Schedule>,
    pub objective: Option<i64>,
    /// Lower bound on the model optimum; `i64::MAX` when proven infeasible.
    pub bound: i64,
    pub nodes: u64,
}

impl SolveResult {
    fn from_warm(warm: Option<(Schedule, i64)>, status_if_some: Status, bound: i64, nodes: u64) -> Self {
        match warm {
            Some((s, obj)) => {
                SolveResult { status: status_if_some, incumbent: Some(s), objective: Some(obj), bound, nodes }
            }
            None => SolveResult { status: Status::Unknown, incumbent: None, objective: None, bound, nodes },
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("warm start is not a feasible point of the model: {0}")]
    WarmStart(#[from] EncodeError),
    #[error("warm start violates model constraint {0}")]
    WarmStartConstraint(String),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// Solves `req.model` within its limits. The returned incumbent is never
/// worse than the warm start and always passes the feasibility check.
pub fn solve(req: &SolveRequest<'_, '_>) -> Result<SolveResult, SolveError> {
    let model = req.model;
    let inst = model.instance();
    let warm = match req.warm_start {
        Some(s) => {
            if model.feasible_point(s).is_none() {
                let values = model.encode(s)?;
                let name = model.check(&values).into_iter().next().map_or_else(|| "slot layout".to_string(), |v| v.name);
                return Err(SolveError::WarmStartConstraint(name));
            }
            Some((s.clone(), evaluate(inst, s).expect("feasible").twct))
        }
        None => None,
    };
    let result = match &req.backend {
        Backend::BranchAndBound => match solve_bnb(model, warm.as_ref().map(|w| &w.0), req.limits) {
            Ok(r) => r,
            Err(Unsupported(_)) => SolveResult::from_warm(warm.clone(), Status::FeasibleTimeLimit, 0, 0),
        },
        #[cfg(feature = "microlp")]
        Backend::Microlp => {
            let values = warm.as_ref().and_then(|w| model.feasible_point(&w.0));
            bridge::solve_model_microlp(model, values.as_deref(), req.limits)?
        }
        Backend::Command(template) => bridge::solve_model_command(model, template, req.limits)?,
    };
    Ok(dominate(model, result, warm))
}

/// Falls back to the warm start whenever the backend returned something
/// worse, missing or infeasible.
fn dominate(model: &BatchModel<'_>, mut r: SolveResult, warm: Option<(Schedule, i64)>) -> SolveResult {
    let inst = model.instance();
    if let Some(s) = &r.incumbent {
        let ok = check_feasibility(inst, s).is_empty() && model.feasible_point(s).is_some();
        if ok {
            r.objective = Some(evaluate(inst, s).expect("feasible").twct);
        } else {
            r.incumbent = None;
            r.objective = None;
            if r.status == Status::Optimal {
                r.status = Status::Unknown;
            }
        }
    }
    if let Some((ws, wobj)) = warm {
        if r.objective.map_or(true, |o| o > wobj) {
            let status = match r.status {
                Status::Optimal if r.bound >= wobj => Status::Optimal,
                Status::InfeasibleProven | Status::Optimal | Status::Unknown => Status::FeasibleTimeLimit,
                s => s,
            };
            r.incumbent = Some(ws);
            r.objective = Some(wobj);
            r.status = status;
        }
    }
    if let Some(o) = r.objective {
        r.bound = r.bound.min(o);
        if r.status == Status::Optimal {
            r.bound = o;
        }
    }
    r
}
