//! Hand-off of models to general MIP solvers: the linked `microlp` crate or
//! any external program that reads an LP file and writes `name value`
//! solution lines.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use super::lp::{write_lp, LpProblem};
use super::{Limits, SolveResult, Status};
use crate::mip::BatchModel;

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("solver command `{command}` exited with {status}: {stderr}")]
    Command { command: String, status: String, stderr: String },
    #[error("i/o error around the solver call: {0}")]
    Io(#[from] std::io::Error),
    #[error("solution line {line}: {message}")]
    Solution { line: usize, message: String },
}

/// Column values returned by a MIP solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    pub values: Vec<f64>,
}

#[cfg(feature = "microlp")]
/// Solves `p` with the linked solver. `warm` seeds the incumbent.
pub fn solve_microlp(p: &LpProblem, warm: Option<&[f64]>, limits: Limits) -> Result<LpSolution, BridgeError> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOptions};

    let dir = if p.minimize { OptimizationDirection::Minimize } else { OptimizationDirection::Maximize };
    let mut prob = Problem::new(dir);
    let mut obj = vec![0.0; p.num_vars()];
    for &(v, c) in &p.objective {
        obj[v] += c;
    }
    let vars: Vec<microlp::Variable> = (0..p.num_vars())
        .map(|n| {
            if p.integer[n] {
                let clamp = |x: f64| x.clamp(i32::MIN as f64, i32::MAX as f64) as i32;
                prob.add_integer_var(obj[n], (clamp(p.lower[n]), clamp(p.upper[n])))
            } else {
                prob.add_var(obj[n], (p.lower[n], p.upper[n]))
            }
        })
        .collect();
    for row in &p.rows {
        let mut expr = microlp::LinearExpr::empty();
        for &(v, a) in &row.terms {
            expr.add(vars[v], a);
        }
        let op = match row.sense {
            crate::mip::Sense::Le => ComparisonOp::Le,
            crate::mip::Sense::Ge => ComparisonOp::Ge,
            crate::mip::Sense::Eq => ComparisonOp::Eq,
        };
        prob.add_constraint(expr, op, row.rhs);
    }
    let mut options = SolveOptions::default();
    options.time_limit = limits.time;
    options.node_limit = limits.nodes;
    options.warm_start = warm.map(|w| vars.iter().zip(w).map(|(&v, &x)| (v, x)).collect());
    match prob.solve_with(options) {
        Ok(outcome) => match outcome.solution() {
            Some(sol) => Ok(LpSolution {
                status: if outcome.is_optimal() { Status::Optimal } else { Status::FeasibleTimeLimit },
                values: vars.iter().map(|&v| sol.var_value(v)).collect(),
            }),
            None => Ok(LpSolution { status: Status::Unknown, values: Vec::new() }),
        },
        Err(microlp::Error::Infeasible) => Ok(LpSolution { status: Status::InfeasibleProven, values: Vec::new() }),
        Err(e) => Err(BridgeError::Solver(e.to_string())),
    }
}

#[cfg(feature = "microlp")]
pub(super) fn solve_model_microlp(
    model: &BatchModel<'_>,
    warm: Option<&[i64]>,
    limits: Limits,
) -> Result<SolveResult, BridgeError> {
    let p = LpProblem::from_model(model);
    let warm: Option<Vec<f64>> = warm.map(|w| w.iter().map(|&x| x as f64).collect());
    let sol = solve_microlp(&p, warm.as_deref(), limits)?;
    Ok(to_result(model, sol))
}

fn to_result(model: &BatchModel<'_>, sol: LpSolution) -> SolveResult {
    let incumbent = match sol.status {
        Status::Optimal | Status::FeasibleTimeLimit => model.decode(&sol.values).ok(),
        _ => None,
    };
    let status = match (&incumbent, sol.status) {
        (None, Status::Optimal | Status::FeasibleTimeLimit) => Status::Unknown,
        (_, s) => s,
    };
    let bound = if status == Status::InfeasibleProven { i64::MAX } else { 0 };
    // objective, and the bound of an optimal result, are filled in by the caller
    SolveResult { status, incumbent, objective: None, bound, nodes: 0 }
}

/// Runs `template` through `sh -c` after substituting `{lp}` and `{sol}`
/// with fresh file paths; returns the solution file contents.
pub fn run_command(template: &str, lp_text: &str) -> Result<String, BridgeError> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let stem = format!("batchsched-{}-{}", std::process::id(), COUNTER.fetch_add(1, Ordering::Relaxed));
    let dir = std::env::temp_dir();
    let lp_path: PathBuf = dir.join(format!("{stem}.lp"));
    let sol_path: PathBuf = dir.join(format!("{stem}.sol"));
    std::fs::write(&lp_path, lp_text)?;
    let command = template
        .replace("{lp}", &lp_path.display().to_string())
        .replace("{sol}", &sol_path.display().to_string());
    let output = Command::new("sh").arg("-c").arg(&command).output();
    let _ = std::fs::remove_file(&lp_path);
    let output = output?;
    if !output.status.success() {
        let _ = std::fs::remove_file(&sol_path);
        return Err(BridgeError::Command {
            command,
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    let text = std::fs::read_to_string(&sol_path);
    let _ = std::fs::remove_file(&sol_path);
    Ok(text?)
}

/// Reads `name value` lines (blank lines and `#` comments skipped). An
/// optional `status <optimal|feasible|infeasible|unknown>` line sets the
/// status, which defaults to feasible. Unlisted columns are zero.
pub fn parse_solution(text: &str, p: &LpProblem) -> Result<LpSolution, BridgeError> {
    let index = p.index_of();
    let mut values = vec![0.0; p.num_vars()];
    let mut status = Status::FeasibleTimeLimit;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split(|c: char| c.is_whitespace() || c == '=').filter(|s| !s.is_empty());
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(BridgeError::Solution { line, message: format!("expected `name value`, got `{content}`") });
        };
        if name.eq_ignore_ascii_case("status") {
            status = match value.to_ascii_lowercase().as_str() {
                "optimal" => Status::Optimal,
                "feasible" => Status::FeasibleTimeLimit,
                "infeasible" => Status::InfeasibleProven,
                "unknown" => Status::Unknown,
                other => return Err(BridgeError::Solution { line, message: format!("unknown status `{other}`") }),
            };
            continue;
        }
        let Some(&col) = index.get(name) else {
            return Err(BridgeError::Solution { line, message: format!("unknown variable `{name}`") });
        };
        values[col] = value
            .parse()
            .map_err(|_| BridgeError::Solution { line, message: format!("bad value `{value}` for `{name}`") })?;
    }
    Ok(LpSolution { status, values })
}

pub(super) fn solve_model_command(
    model: &BatchModel<'_>,
    template: &str,
    _limits: Limits,
) -> Result<SolveResult, BridgeError> {
    let p = LpProblem::from_model(model);
    let text = run_command(template, &write_lp(&p))?;
    let sol = parse_solution(&text, &p)?;
    Ok(to_result(model, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsolve::lp::parse_lp;

    #[test]
    fn solution_lines() {
        let p = parse_lp("Minimize\n x + y\nSubject To\n c: x + y >= 1\nEnd\n").unwrap();
        let s = parse_solution("# header\nstatus optimal\nx 1\ny = 0.5\n", &p).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.values, vec![1.0, 0.5]);
        assert!(matches!(parse_solution("z 1\n", &p), Err(BridgeError::Solution { line: 1, .. })));
        assert!(matches!(parse_solution("x\n", &p), Err(BridgeError::Solution { .. })));
    }

    #[test]
    fn command_failure_is_reported() {
        let err = run_command("exit 3 # {lp} {sol}", "Minimize\n x\nEnd\n").unwrap_err();
        assert!(matches!(err, BridgeError::Command { .. }), "{err}");
    }

    #[cfg(feature = "microlp")]
    #[test]
    fn microlp_small_mip() {
        let p = parse_lp("Maximize\n x + 2 y\nSubject To\n c: 2 x + 2 y <= 3\nBinaries\n x y\nEnd\n").unwrap();
        let s = solve_microlp(&p, None, Limits::unlimited()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!((s.values[0].round(), s.values[1].round()), (0.0, 1.0));
    }
}
