//! WMCT-WAVGA: a dispatching-rule constructive heuristic, plus the
//! RCL-randomised variant used by GRASP.
//!
//! Each step picks the unscheduled operation with the highest priority
//! `w_i / (max(T_i, r_i) + p_i + s_f)`, where `w_i` re-splits job weights
//! over the job's still-unscheduled operations and `T_i` is the earliest
//! completion among its eligible machines. The operation is then appended
//! to the current (last) batch of some machine or opens a new batch there,
//! whichever adds the least weighted completion time. All comparisons are
//! exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use crate::instance::{Instance, Time};
use crate::schedule::{Batch, Schedule};
use crate::util::fraction_rational;

/// Per-machine state of the current batch.
#[derive(Debug, Clone)]
struct MachineState {
    /// `C_k`: completion of the machine so far.
    completion: Time,
    /// `S_k`: start of the current batch.
    start: Time,
    load: i64,
    family: Option<usize>,
    /// `A_k` with the weight each member had when it was placed.
    members: Vec<(usize, BigRational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    CurrentBatch,
    NewBatch,
}

/// One construction step, for tracing and tests.
#[derive(Debug, Clone)]
pub struct Step {
    pub op: usize,
    pub machine: usize,
    pub placement: Placement,
    pub priority: BigRational,
    pub weight: BigRational,
    pub completion: Time,
}

enum Selection<'r, R> {
    Greedy,
    Rcl { alpha: BigRational, rng: &'r mut R },
}

/// Priorities and dynamic weights of all unscheduled operations.
pub fn priorities(
    inst: &Instance,
    unscheduled: &[bool],
    machine_completion: &[Time],
) -> Vec<Option<(BigRational, BigRational)>> {
    let mut remaining = vec![0i64; inst.num_jobs()];
    for (j, job) in inst.jobs().iter().enumerate() {
        remaining[j] = job.ops.iter().filter(|&&i| unscheduled[i]).count() as i64;
    }
    (0..inst.num_ops())
        .map(|i| {
            if !unscheduled[i] {
                return None;
            }
            let w = inst.jobs_of(i).iter().fold(BigRational::zero(), |acc, &j| {
                acc + BigRational::new(BigInt::from(inst.jobs()[j].weight), BigInt::from(remaining[j]))
            });
            let op = inst.op(i);
            let t = op.eligible.iter().map(|&k| machine_completion[k]).min().expect("eligible machine");
            let denom = t.max(op.release) + op.processing + inst.setup_of_op(i);
            Some((&w / BigInt::from(denom), w))
        })
        .collect()
}

fn build<R: Rng>(inst: &Instance, mut selection: Selection<'_, R>) -> (Schedule, Vec<Step>) {
    let mut machines: Vec<MachineState> = inst
        .machines()
        .iter()
        .map(|m| MachineState { completion: m.release, start: m.release, load: 0, family: None, members: Vec::new() })
        .collect();
    let mut sched = Schedule::empty(inst.num_machines());
    let mut unscheduled = vec![true; inst.num_ops()];
    let mut steps = Vec::with_capacity(inst.num_ops());

    for _ in 0..inst.num_ops() {
        let completion: Vec<Time> = machines.iter().map(|m| m.completion).collect();
        let prio = priorities(inst, &unscheduled, &completion);
        let candidates: Vec<usize> = (0..inst.num_ops()).filter(|&i| prio[i].is_some()).collect();
        let pi = |i: usize| &prio[i].as_ref().expect("candidate").0;

        let mut best = candidates[0];
        for &i in &candidates[1..] {
            if pi(i) > pi(best) {
                best = i;
            }
        }
        let chosen = match &mut selection {
            Selection::Greedy => best,
            Selection::Rcl { alpha, rng } => {
                let max = pi(best).clone();
                let min = candidates.iter().map(|&i| pi(i)).min().expect("nonempty").clone();
                let threshold = &max - &*alpha * (&max - &min);
                let rcl: Vec<usize> = candidates.iter().copied().filter(|&i| *pi(i) >= threshold).collect();
                rcl[rng.gen_range(0..rcl.len())]
            }
        };
        let (priority, weight) = prio[chosen].clone().expect("candidate");

        let op = inst.op(chosen);
        let setup = inst.setup_of_op(chosen);
        let mut best_cb: Option<(BigRational, usize, Time)> = None;
        let mut best_nb: Option<(BigRational, usize, Time)> = None;
        for &k in &op.eligible {
            let m = &machines[k];
            let nb_c = op.release.max(m.completion) + setup + op.processing;
            let nb = &weight * BigInt::from(nb_c);
            if best_nb.as_ref().map_or(true, |(c, _, _)| nb < *c) {
                best_nb = Some((nb, k, nb_c));
            }
            let fits = m.family == Some(op.family)
                && !m.members.is_empty()
                && m.load + op.load <= inst.machines()[k].capacity;
            if fits {
                let delay = (op.release - m.start).max(0);
                let cb_c = m.completion + delay + op.processing;
                let pushed = m.members.iter().fold(BigRational::zero(), |acc, (_, w)| acc + w);
                let cb = &weight * BigInt::from(cb_c) + pushed * BigInt::from(delay);
                if best_cb.as_ref().map_or(true, |(c, _, _)| cb < *c) {
                    best_cb = Some((cb, k, cb_c));
                }
            }
        }
        let (nb_cost, nb_k, nb_c) = best_nb.expect("eligible machine");
        let (k, placement, c) = match best_cb {
            Some((cb, k, c)) if cb <= nb_cost => (k, Placement::CurrentBatch, c),
            _ => (nb_k, Placement::NewBatch, nb_c),
        };
        let m = &mut machines[k];
        match placement {
            Placement::CurrentBatch => {
                m.start = op.release.max(m.start);
                m.load += op.load;
                m.members.push((chosen, weight.clone()));
                sched.machines[k].last_mut().expect("current batch").ops.push(chosen);
            }
            Placement::NewBatch => {
                m.start = op.release.max(m.completion);
                m.load = op.load;
                m.members = vec![(chosen, weight.clone())];
                sched.machines[k].push(Batch::new(op.family, vec![chosen]));
            }
        }
        m.completion = c;
        m.family = Some(op.family);
        unscheduled[chosen] = false;
        steps.push(Step { op: chosen, machine: k, placement, priority, weight, completion: c });
    }
    (sched, steps)
}

/// The deterministic heuristic. Ties in priority go to the lowest operation
/// index; ties in cost prefer the current batch, then the lowest machine.
pub fn wmct_wavga(inst: &Instance) -> Schedule {
    wmct_wavga_trace(inst).0
}

/// As [`wmct_wavga`], also returning every step.
pub fn wmct_wavga_trace(inst: &Instance) -> (Schedule, Vec<Step>) {
    build::<rand_chacha::ChaCha8Rng>(inst, Selection::Greedy)
}

/// Randomised construction: each step draws uniformly from the restricted
/// candidate list `{i : pi_i >= pi_max - alpha (pi_max - pi_min)}`.
/// `alpha == 0` is exactly [`wmct_wavga`] and consumes no randomness.
pub fn randomized_construct<R: Rng>(inst: &Instance, rcl_alpha: f64, rng: &mut R) -> Schedule {
    let alpha = fraction_rational(rcl_alpha);
    if alpha.is_zero() {
        return wmct_wavga(inst);
    }
    build(inst, Selection::Rcl { alpha, rng }).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_instance, Family, Job, Machine, Operation};
    use crate::schedule::{check_feasibility, evaluate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example_first_step() {
        let inst = example_instance();
        let (_, steps) = wmct_wavga_trace(&inst);
        // oracle: w_10 = 40/3 + 3/6 in floating point, denominator 0 + 25 + 5
        let w10 = 40.0 / 3.0 + 3.0 / 6.0;
        let pi10 = w10 / 30.0;
        let prio = priorities(&inst, &[true; 15], &[13, 0, 0, 1]);
        let (p, w) = prio[9].clone().unwrap();
        assert!((num_traits::ToPrimitive::to_f64(&w).unwrap() - w10).abs() < 1e-12);
        assert!((num_traits::ToPrimitive::to_f64(&p).unwrap() - pi10).abs() < 1e-12);
        // the first pick is the argmax of the formula evaluated independently in f64
        let mc = [13i64, 0, 0, 1];
        let f64_prio: Vec<f64> = (0..15)
            .map(|i| {
                let op = inst.op(i);
                let w: f64 = inst.jobs_of(i).iter().map(|&j| inst.jobs()[j].weight as f64 / inst.jobs()[j].ops.len() as f64).sum();
                let t = op.eligible.iter().map(|&k| mc[k]).min().unwrap();
                w / (t.max(op.release) + op.processing + inst.setup_of_op(i)) as f64
            })
            .collect();
        let best = (0..15).fold(0, |b, i| if f64_prio[i] > f64_prio[b] + 1e-12 { i } else { b });
        assert_eq!(steps[0].op, best);
    }

    #[test]
    fn single_operation() {
        let inst = Instance::new(
            vec![Operation { processing: 7, release: 4, load: 10, family: 0, eligible: vec![0, 1] }],
            vec![Job { weight: 2, ops: vec![0] }],
            vec![Machine { release: 6, capacity: 50 }, Machine { release: 1, capacity: 50 }],
            vec![Family { setup: 3 }],
        )
        .unwrap();
        let s = wmct_wavga(&inst);
        assert_eq!(s.machines[1], vec![Batch::new(0, vec![0])]);
        assert_eq!(evaluate(&inst, &s).unwrap().op_completion[0], 4 + 3 + 7);
    }

    #[test]
    fn one_machine_one_family_single_batch() {
        let ops: Vec<Operation> = (0..5)
            .map(|i| Operation { processing: 3 + i, release: 0, load: 10, family: 0, eligible: vec![0] })
            .collect();
        let inst = Instance::new(
            ops,
            (0..5).map(|i| Job { weight: 10 - i as i64, ops: vec![i] }).collect(),
            vec![Machine { release: 0, capacity: 100 }],
            vec![Family { setup: 5 }],
        )
        .unwrap();
        let (s, steps) = wmct_wavga_trace(&inst);
        assert_eq!(s.num_batches(), 1);
        let order: Vec<usize> = steps.iter().map(|st| st.op).collect();
        assert_eq!(s.machines[0][0].ops, order);
    }

    #[test]
    fn example_feasible() {
        let inst = example_instance();
        let s = wmct_wavga(&inst);
        assert!(check_feasibility(&inst, &s).is_empty());
    }

    #[test]
    fn rcl_zero_is_greedy() {
        let inst = example_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(randomized_construct(&inst, 0.0, &mut rng), wmct_wavga(&inst));
    }

    #[test]
    fn rcl_feasible_for_any_alpha() {
        let inst = example_instance();
        for seed in 0..10 {
            for alpha in [0.1, 0.5, 1.0] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = randomized_construct(&inst, alpha, &mut rng);
                assert!(check_feasibility(&inst, &s).is_empty());
            }
        }
    }
}
