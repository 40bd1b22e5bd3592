//! Schedules, their evaluation and feasibility checking.

use std::fmt;

use crate::instance::{Instance, Time};

/// One family setup followed by operations processed back to back.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Batch {
    pub family: usize,
    pub ops: Vec<usize>,
}

impl Batch {
    pub fn new(family: usize, ops: Vec<usize>) -> Self {
        Batch { family, ops }
    }

    pub fn load(&self, inst: &Instance) -> i64 {
        self.ops.iter().map(|&i| inst.op(i).load).sum()
    }

    pub fn work(&self, inst: &Instance) -> Time {
        self.ops.iter().map(|&i| inst.op(i).processing).sum()
    }
}

/// Ordered batches per machine.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Schedule {
    pub machines: Vec<Vec<Batch>>,
}

impl Schedule {
    pub fn empty(num_machines: usize) -> Self {
        Schedule { machines: vec![Vec::new(); num_machines] }
    }

    pub fn num_batches(&self) -> usize {
        self.machines.iter().map(Vec::len).sum()
    }

    /// Drops empty batches (they may exist transiently during search).
    pub fn compact(&mut self) {
        for m in &mut self.machines {
            m.retain(|b| !b.ops.is_empty());
        }
    }

    /// `(machine, batch position)` of every operation, if present.
    pub fn positions(&self, num_ops: usize) -> Vec<Option<(usize, usize)>> {
        let mut pos = vec![None; num_ops];
        for (k, batches) in self.machines.iter().enumerate() {
            for (b, batch) in batches.iter().enumerate() {
                for &i in &batch.ops {
                    if i < num_ops {
                        pos[i] = Some((k, b));
                    }
                }
            }
        }
        pos
    }
}

/// Timing of a structurally valid schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalResult {
    /// `batch_start[k][b]`
    pub batch_start: Vec<Vec<Time>>,
    /// Setup plus processing of every batch, same shape as `batch_start`.
    pub batch_processing: Vec<Vec<Time>>,
    pub op_completion: Vec<Time>,
    pub job_completion: Vec<Time>,
    pub twct: i64,
    pub cmax: Time,
}

impl EvalResult {
    pub fn batch_end(&self, k: usize, b: usize) -> Time {
        self.batch_start[k][b] + self.batch_processing[k][b]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("schedule has {found} machines, instance has {expected}")]
    MachineCount { expected: usize, found: usize },
    #[error("operation {} is not scheduled", .0 + 1)]
    MissingOperation(usize),
    #[error("operation {} is scheduled more than once", .0 + 1)]
    DuplicateOperation(usize),
    #[error("unknown operation index {0}")]
    UnknownOperation(usize),
    #[error("batch {} on machine {} is empty", .batch + 1, .machine + 1)]
    EmptyBatch { machine: usize, batch: usize },
}

/// Checks the structural conditions `evaluate` relies on: machine count,
/// every operation exactly once, no empty batch.
pub fn check_structure(inst: &Instance, sched: &Schedule) -> Result<(), EvalError> {
    if sched.machines.len() != inst.num_machines() {
        return Err(EvalError::MachineCount { expected: inst.num_machines(), found: sched.machines.len() });
    }
    let mut seen = vec![false; inst.num_ops()];
    for (k, batches) in sched.machines.iter().enumerate() {
        for (b, batch) in batches.iter().enumerate() {
            if batch.ops.is_empty() {
                return Err(EvalError::EmptyBatch { machine: k, batch: b });
            }
            for &i in &batch.ops {
                match seen.get_mut(i) {
                    None => return Err(EvalError::UnknownOperation(i)),
                    Some(true) => return Err(EvalError::DuplicateOperation(i)),
                    Some(s) => *s = true,
                }
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(EvalError::MissingOperation(i)),
        None => Ok(()),
    }
}

/// Computes batch starts, completion times and the objective.
///
/// A batch starts at the latest of the machine release date, the end of the
/// previous batch and the release dates of its operations. Its operations
/// complete one after another after the family setup.
pub fn evaluate(inst: &Instance, sched: &Schedule) -> Result<EvalResult, EvalError> {
    check_structure(inst, sched)?;
    let mut op_completion = vec![0; inst.num_ops()];
    let mut batch_start = Vec::with_capacity(sched.machines.len());
    let mut batch_processing = Vec::with_capacity(sched.machines.len());
    for (k, batches) in sched.machines.iter().enumerate() {
        let mut t = inst.machines()[k].release;
        let mut starts = Vec::with_capacity(batches.len());
        let mut procs = Vec::with_capacity(batches.len());
        for batch in batches {
            let ready = batch.ops.iter().map(|&i| inst.op(i).release).max().unwrap_or(0);
            let start = t.max(ready);
            let setup = inst.families()[batch.family].setup;
            let mut c = start + setup;
            for &i in &batch.ops {
                c += inst.op(i).processing;
                op_completion[i] = c;
            }
            starts.push(start);
            procs.push(c - start);
            t = c;
        }
        batch_start.push(starts);
        batch_processing.push(procs);
    }
    let job_completion: Vec<Time> = inst
        .jobs()
        .iter()
        .map(|job| job.ops.iter().map(|&i| op_completion[i]).max().unwrap_or(0))
        .collect();
    let twct = inst.jobs().iter().zip(&job_completion).map(|(job, &c)| job.weight * c).sum();
    let cmax = op_completion.iter().copied().max().unwrap_or(0);
    Ok(EvalResult { batch_start, batch_processing, op_completion, job_completion, twct, cmax })
}

/// Objective value only. Panics on a structurally invalid schedule.
pub fn twct(inst: &Instance, sched: &Schedule) -> i64 {
    evaluate(inst, sched).expect("structurally valid schedule").twct
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MachineCount { expected: usize, found: usize },
    UnknownOperation { op: usize },
    Missing { op: usize },
    Duplicated { op: usize },
    EmptyBatch { machine: usize, batch: usize },
    FamilyMismatch { machine: usize, batch: usize, op: usize },
    Capacity { machine: usize, batch: usize, load: i64, capacity: i64 },
    Ineligible { machine: usize, op: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::MachineCount { expected, found } => {
                write!(f, "coverage: schedule has {found} machines, instance has {expected}")
            }
            Violation::UnknownOperation { op } => write!(f, "coverage: unknown operation index {op}"),
            Violation::Missing { op } => write!(f, "coverage: operation {} not scheduled", op + 1),
            Violation::Duplicated { op } => write!(f, "coverage: operation {} scheduled twice", op + 1),
            Violation::EmptyBatch { machine, batch } => {
                write!(f, "coverage: batch {} on machine {} is empty", batch + 1, machine + 1)
            }
            Violation::FamilyMismatch { machine, batch, op } => write!(
                f,
                "family homogeneity: operation {} in batch {} on machine {}",
                op + 1,
                batch + 1,
                machine + 1
            ),
            Violation::Capacity { machine, batch, load, capacity } => write!(
                f,
                "capacity: batch {} on machine {} loads {load} > {capacity}",
                batch + 1,
                machine + 1
            ),
            Violation::Ineligible { machine, op } => {
                write!(f, "eligibility: operation {} on machine {}", op + 1, machine + 1)
            }
        }
    }
}

/// Lists every coverage, family, capacity and eligibility violation.
pub fn check_feasibility(inst: &Instance, sched: &Schedule) -> Vec<Violation> {
    let mut out = Vec::new();
    if sched.machines.len() != inst.num_machines() {
        out.push(Violation::MachineCount { expected: inst.num_machines(), found: sched.machines.len() });
    }
    let mut count = vec![0usize; inst.num_ops()];
    for (k, batches) in sched.machines.iter().enumerate() {
        let capacity = inst.machines().get(k).map(|m| m.capacity);
        for (b, batch) in batches.iter().enumerate() {
            if batch.ops.is_empty() {
                out.push(Violation::EmptyBatch { machine: k, batch: b });
            }
            let mut load = 0;
            for &i in &batch.ops {
                let Some(c) = count.get_mut(i) else {
                    out.push(Violation::UnknownOperation { op: i });
                    continue;
                };
                *c += 1;
                let op = inst.op(i);
                load += op.load;
                if op.family != batch.family {
                    out.push(Violation::FamilyMismatch { machine: k, batch: b, op: i });
                }
                if capacity.is_some() && !inst.is_eligible(i, k) {
                    out.push(Violation::Ineligible { machine: k, op: i });
                }
            }
            if let Some(q) = capacity {
                if load > q {
                    out.push(Violation::Capacity { machine: k, batch: b, load, capacity: q });
                }
            }
        }
    }
    for (i, &c) in count.iter().enumerate() {
        match c {
            0 => out.push(Violation::Missing { op: i }),
            1 => {}
            _ => out.push(Violation::Duplicated { op: i }),
        }
    }
    out
}

/// Builds a schedule from one-based `(family, ops)` lists per machine.
pub fn schedule_from_ids(machines: &[&[(usize, &[usize])]]) -> Schedule {
    Schedule {
        machines: machines
            .iter()
            .map(|bs| {
                bs.iter().map(|(f, ops)| Batch::new(f - 1, ops.iter().map(|i| i - 1).collect())).collect()
            })
            .collect(),
    }
}

/// Reference schedule for [`crate::instance::example_instance`]
/// (TWCT 7,634).
pub fn example_schedule() -> Schedule {
    schedule_from_ids(&[
        &[(2, &[4]), (1, &[10]), (1, &[1])],
        &[(3, &[9, 8]), (1, &[5]), (1, &[11])],
        &[(1, &[12]), (3, &[3]), (2, &[13]), (1, &[2])],
        &[(1, &[14]), (2, &[6]), (3, &[15, 7])],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_instance, Family, Job, Machine, Operation};

    fn single(r_op: Time, p: Time, s: Time, r_m: Time) -> Instance {
        Instance::new(
            vec![Operation { processing: p, release: r_op, load: 10, family: 0, eligible: vec![0] }],
            vec![Job { weight: 2, ops: vec![0] }],
            vec![Machine { release: r_m, capacity: 90 }],
            vec![Family { setup: s }],
        )
        .unwrap()
    }

    #[test]
    fn example_job_completions() {
        let inst = example_instance();
        let ev = evaluate(&inst, &example_schedule()).unwrap();
        assert_eq!(ev.job_completion, vec![35, 60, 68, 54, 90]);
        assert_eq!(ev.twct, 7634);
        assert_eq!(ev.cmax, 90);
        assert!(check_feasibility(&inst, &example_schedule()).is_empty());
    }

    #[test]
    fn single_operation_waits_for_release() {
        let inst = single(5, 23, 5, 1);
        let s = Schedule { machines: vec![vec![Batch::new(0, vec![0])]] };
        let ev = evaluate(&inst, &s).unwrap();
        assert_eq!(ev.batch_start[0][0], 5);
        assert_eq!(ev.op_completion[0], 33);
        assert_eq!(ev.twct, 66);
    }

    #[test]
    fn swapping_inside_batch_keeps_batch_times() {
        let inst = example_instance();
        let mut s = example_schedule();
        let a = evaluate(&inst, &s).unwrap();
        s.machines[3][2].ops.reverse();
        let b = evaluate(&inst, &s).unwrap();
        assert_eq!(a.batch_start, b.batch_start);
        assert_eq!(a.batch_processing, b.batch_processing);
        assert_eq!(a.cmax, b.cmax);
        // ops 15 and 7 trade places
        assert_eq!(b.op_completion[6], 34 + 9 + 29);
        assert_eq!(b.op_completion[14], 90);
    }

    #[test]
    fn structural_errors() {
        let inst = example_instance();
        let mut s = example_schedule();
        s.machines[0][0].ops.push(9);
        assert_eq!(evaluate(&inst, &s), Err(EvalError::DuplicateOperation(9)));
        let mut s = example_schedule();
        s.machines[0].remove(0);
        assert_eq!(evaluate(&inst, &s), Err(EvalError::MissingOperation(3)));
        let mut s = example_schedule();
        s.machines[2].push(Batch::new(0, vec![]));
        assert!(matches!(evaluate(&inst, &s), Err(EvalError::EmptyBatch { machine: 2, batch: 4 })));
    }

    #[test]
    fn feasibility_violations() {
        let inst = example_instance();
        // ops 10 (family 1) and 4 (family 2) in one batch
        let mut s = example_schedule();
        let moved = s.machines[0].remove(1);
        s.machines[0][0].ops.extend(moved.ops);
        let v = check_feasibility(&inst, &s);
        assert_eq!(v, vec![Violation::FamilyMismatch { machine: 0, batch: 0, op: 9 }]);
        assert!(v[0].to_string().starts_with("family homogeneity"));

        // ops 10 (l=40) and 14 (l=90) share a batch on machine 1
        let mut s = example_schedule();
        s.machines[0][1].ops.push(13);
        s.machines[3].remove(0);
        let v = check_feasibility(&inst, &s);
        assert_eq!(v, vec![Violation::Capacity { machine: 0, batch: 1, load: 130, capacity: 90 }]);

        // op 8 only runs on machine 2
        let mut s = example_schedule();
        s.machines[1][0].ops.retain(|&i| i != 7);
        s.machines[2][1].ops.push(7);
        let v = check_feasibility(&inst, &s);
        assert_eq!(v, vec![Violation::Ineligible { machine: 2, op: 7 }]);
    }
}
