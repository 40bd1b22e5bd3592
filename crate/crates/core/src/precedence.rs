//! Inner-batch precedence orders derived from the WSPT rule.
//!
//! Each operation gets an estimated weight (job weights split equally
//! among the job's operations). Operations are ranked by weight over
//! processing time, then by weight, then by smaller index. Pairs harvested
//! from an existing schedule (`Theta`) override the rule for operations
//! that share a batch in that schedule.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::instance::Instance;
use crate::schedule::Schedule;

/// `w_i = sum over jobs of i of w_j / |O_j|`, exact.
pub fn estimated_weights(inst: &Instance) -> Vec<BigRational> {
    (0..inst.num_ops())
        .map(|i| {
            inst.jobs_of(i).iter().fold(BigRational::from_integer(BigInt::from(0)), |acc, &j| {
                let job = &inst.jobs()[j];
                acc + BigRational::new(BigInt::from(job.weight), BigInt::from(job.ops.len()))
            })
        })
        .collect()
}

/// WSPT comparison: `Less` means `a` goes first.
fn wspt_cmp(inst: &Instance, weights: &[BigRational], a: usize, b: usize) -> Ordering {
    let ra = &weights[a] / BigInt::from(inst.op(a).processing);
    let rb = &weights[b] / BigInt::from(inst.op(b).processing);
    rb.cmp(&ra).then_with(|| weights[b].cmp(&weights[a])).then_with(|| a.cmp(&b))
}

/// Ordered operation pairs `(before, after)` that share a batch in some
/// schedule, kept as the batch sequences themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Theta {
    groups: Vec<Vec<usize>>,
    group_of: Vec<Option<(usize, usize)>>,
}

impl Theta {
    pub fn from_schedule(num_ops: usize, sched: &Schedule) -> Self {
        let mut groups = Vec::new();
        let mut group_of = vec![None; num_ops];
        for batch in sched.machines.iter().flatten() {
            if batch.ops.len() < 2 {
                continue;
            }
            for (pos, &i) in batch.ops.iter().enumerate() {
                if i < num_ops {
                    group_of[i] = Some((groups.len(), pos));
                }
            }
            groups.push(batch.ops.clone());
        }
        Theta { groups, group_of }
    }

    /// `true` when `a` directly precedes-or-leads `b` inside a recorded batch.
    pub fn contains(&self, a: usize, b: usize) -> bool {
        match (self.group_of.get(a).copied().flatten(), self.group_of.get(b).copied().flatten()) {
            (Some((ga, pa)), Some((gb, pb))) => ga == gb && pa < pb,
            _ => false,
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.groups.iter().map(|g| g.len() * (g.len() - 1) / 2).sum()
    }
}

/// A strict total order over all operations. `predecessors(i)` is the set
/// of operations that go before `i` whenever both share a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Precedence {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl Precedence {
    pub fn from_order(order: Vec<usize>) -> Self {
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Precedence { order, rank }
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn predecessors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.order[..self.rank[i]].iter().copied()
    }

    /// Sorts the operations of every batch by this order.
    pub fn sort_batches(&self, sched: &mut Schedule) {
        for batch in sched.machines.iter_mut().flatten() {
            batch.ops.sort_by_key(|&i| self.rank[i]);
        }
    }
}

/// Builds the precedence order. Without `theta` this is the plain WSPT
/// rule. With `theta`, the operations of each recorded batch keep the rank
/// slots they would get under WSPT but fill them in the recorded sequence,
/// so recorded pairs always win and the result stays transitive.
pub fn wspt_order(inst: &Instance, theta: Option<&Theta>) -> Precedence {
    let weights = estimated_weights(inst);
    let mut order: Vec<usize> = (0..inst.num_ops()).collect();
    order.sort_by(|&a, &b| wspt_cmp(inst, &weights, a, b));
    if let Some(theta) = theta {
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        for group in &theta.groups {
            let mut slots: Vec<usize> = group.iter().map(|&i| rank[i]).collect();
            slots.sort_unstable();
            for (&slot, &i) in slots.iter().zip(group) {
                order[slot] = i;
            }
        }
    }
    Precedence::from_order(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_instance, Family, Job, Machine, Operation};
    use crate::schedule::example_schedule;

    fn inst_with(ops: &[(i64, usize)]) -> Instance {
        // (processing, job) pairs; one job per op so w_i = w_j
        let n = ops.len();
        Instance::new(
            ops.iter()
                .map(|&(p, _)| Operation { processing: p, release: 0, load: 0, family: 0, eligible: vec![0] })
                .collect(),
            ops.iter().enumerate().map(|(i, &(_, w))| Job { weight: w as i64, ops: vec![i] }).collect(),
            vec![Machine { release: 0, capacity: 10 }],
            vec![Family { setup: 1 }; n.max(1)],
        )
        .unwrap()
    }

    #[test]
    fn higher_ratio_goes_first() {
        // ratios 2.0 and 1.5
        let inst = inst_with(&[(2, 3), (1, 2)]);
        let prec = wspt_order(&inst, None);
        assert!(prec.precedes(1, 0));
        assert_eq!(prec.predecessors(0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(prec.predecessors(1).count(), 0);
    }

    #[test]
    fn ties_fall_back_to_weight_then_index() {
        // ops 0 and 1: ratio 1, weights 2 and 1 -> op 0 first
        let inst = inst_with(&[(2, 2), (1, 1), (3, 3), (1, 1), (1, 1), (1, 1), (1, 1), (1, 1)]);
        let prec = wspt_order(&inst, None);
        assert!(prec.precedes(2, 0));
        assert!(prec.precedes(0, 1));
        // equal ratio and weight: smaller index first (ids 4 and 8 -> indices 3 and 7)
        assert!(prec.precedes(3, 7));
    }

    #[test]
    fn example_weights() {
        let inst = example_instance();
        let w = estimated_weights(&inst);
        // op 10 belongs to jobs 2 (3 ops, w 40) and 5 (6 ops, w 3)
        assert_eq!(w[9], BigRational::new(BigInt::from(83), BigInt::from(6)));
    }

    #[test]
    fn theta_overrides_ratio() {
        let inst = example_instance();
        let plain = wspt_order(&inst, None);
        // op 7 (p=29, w=1/2) ranks behind op 15 (p=18, w=39/7) anyway; flip via theta
        assert!(plain.precedes(14, 6));
        let mut s = example_schedule();
        s.machines[3][2].ops = vec![6, 14];
        let theta = Theta::from_schedule(inst.num_ops(), &s);
        assert!(theta.contains(6, 14));
        let prec = wspt_order(&inst, Some(&theta));
        assert!(prec.precedes(6, 14));

        let theta = Theta::from_schedule(inst.num_ops(), &example_schedule());
        assert!(theta.contains(14, 6));
        assert!(!theta.contains(6, 14));
        assert_eq!(theta.num_pairs(), 2);
        let prec = wspt_order(&inst, Some(&theta));
        assert!(prec.precedes(14, 6));
        assert!(prec.predecessors(6).any(|i| i == 14));
    }
}
