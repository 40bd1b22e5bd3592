//! Exhaustive optimum for tiny instances, used to certify the solvers.
//!
//! Operations are inserted one at a time, in index order, at every
//! feasible place: into any existing compatible batch at any inner
//! position, or as a new batch at any position on an eligible machine.
//! Every schedule is generated exactly once.

use crate::instance::Instance;
use crate::precedence::Precedence;
use crate::schedule::{evaluate, Batch, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_ops: usize,
    pub max_machines: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_ops: 7, max_machines: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("instance too large to enumerate: {ops} operations on {machines} machines (limit {} / {})", .limits.max_ops, .limits.max_machines)]
pub struct TooLarge {
    pub ops: usize,
    pub machines: usize,
    pub limits: OracleLimits,
}

/// Minimum TWCT over all feasible schedules and one schedule attaining it.
pub fn brute_force_optimum(inst: &Instance) -> Result<(i64, Schedule), TooLarge> {
    brute_force_with(inst, OracleLimits::default(), None)
}

/// As [`brute_force_optimum`]; with `order` given, operations inside a
/// batch are always sequenced by that order.
pub fn brute_force_with(
    inst: &Instance,
    limits: OracleLimits,
    order: Option<&Precedence>,
) -> Result<(i64, Schedule), TooLarge> {
    if inst.num_ops() > limits.max_ops || inst.num_machines() > limits.max_machines {
        return Err(TooLarge { ops: inst.num_ops(), machines: inst.num_machines(), limits });
    }
    let mut search = Enum { inst, order, sched: Schedule::empty(inst.num_machines()), best: None };
    search.place(0);
    Ok(search.best.expect("a valid instance has a feasible schedule"))
}

struct Enum<'a> {
    inst: &'a Instance,
    order: Option<&'a Precedence>,
    sched: Schedule,
    best: Option<(i64, Schedule)>,
}

impl Enum<'_> {
    fn place(&mut self, i: usize) {
        let inst = self.inst;
        if i == inst.num_ops() {
            let v = evaluate(inst, &self.sched).expect("complete schedule").twct;
            if self.best.as_ref().map_or(true, |(b, _)| v < *b) {
                self.best = Some((v, self.sched.clone()));
            }
            return;
        }
        let op = inst.op(i);
        for &k in &op.eligible {
            let q = inst.machines()[k].capacity;
            for b in 0..self.sched.machines[k].len() {
                let batch = &self.sched.machines[k][b];
                if batch.family != op.family || batch.load(inst) + op.load > q {
                    continue;
                }
                let positions: Vec<usize> = match self.order {
                    Some(prec) => {
                        let r = prec.rank()[i];
                        vec![batch.ops.iter().position(|&o| prec.rank()[o] > r).unwrap_or(batch.ops.len())]
                    }
                    None => (0..=batch.ops.len()).collect(),
                };
                for pos in positions {
                    self.sched.machines[k][b].ops.insert(pos, i);
                    self.place(i + 1);
                    self.sched.machines[k][b].ops.remove(pos);
                }
            }
            for pos in 0..=self.sched.machines[k].len() {
                self.sched.machines[k].insert(pos, Batch::new(op.family, vec![i]));
                self.place(i + 1);
                self.sched.machines[k].remove(pos);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Family, Job, Machine, Operation};
    use crate::schedule::check_feasibility;

    #[test]
    fn single_operation() {
        let inst = Instance::new(
            vec![Operation { processing: 23, release: 5, load: 10, family: 0, eligible: vec![0] }],
            vec![Job { weight: 3, ops: vec![0] }],
            vec![Machine { release: 1, capacity: 90 }],
            vec![Family { setup: 5 }],
        )
        .unwrap();
        let (v, s) = brute_force_optimum(&inst).unwrap();
        assert_eq!(v, 3 * (5 + 5 + 23));
        assert_eq!(s.num_batches(), 1);
    }

    #[test]
    fn identical_ops_share_one_batch() {
        let op = Operation { processing: 4, release: 0, load: 10, family: 0, eligible: vec![0] };
        let inst = Instance::new(
            vec![op.clone(), op],
            vec![Job { weight: 1, ops: vec![0] }, Job { weight: 1, ops: vec![1] }],
            vec![Machine { release: 0, capacity: 90 }],
            vec![Family { setup: 6 }],
        )
        .unwrap();
        let (v, s) = brute_force_optimum(&inst).unwrap();
        // one setup: 10 + 14; two batches would give 10 + 20
        assert_eq!(v, 24);
        assert_eq!(s.num_batches(), 1);
        assert!(check_feasibility(&inst, &s).is_empty());
    }

    #[test]
    fn size_guard() {
        let inst = crate::instance::example_instance();
        let err = brute_force_optimum(&inst).unwrap_err();
        assert_eq!(err.ops, 15);
        assert!(err.to_string().contains("too large"));
    }
}
