#![allow(dead_code)]

use batchsched::instgen::{generate, GenParams};
use batchsched::mip::{BatchModel, Formulation, ModelConfig};
use batchsched::precedence::{wspt_order, Theta};
use batchsched::schedule::{Batch, Schedule};
use batchsched::Instance;
use rand::seq::SliceRandom;
use rand::Rng;

/// A uniformly messy feasible schedule: operations in random order, each
/// joining a random compatible batch or opening a batch at a random
/// position on a random eligible machine.
pub fn random_schedule<R: Rng>(inst: &Instance, rng: &mut R) -> Schedule {
    let mut sched = Schedule::empty(inst.num_machines());
    let mut order: Vec<usize> = (0..inst.num_ops()).collect();
    order.shuffle(rng);
    for i in order {
        let op = inst.op(i);
        let k = *op.eligible.choose(rng).expect("every operation has a machine");
        let cap = inst.machines()[k].capacity;
        let joinable: Vec<usize> = sched.machines[k]
            .iter()
            .enumerate()
            .filter(|(_, b)| b.family == op.family && b.load(inst) + op.load <= cap)
            .map(|(b, _)| b)
            .collect();
        if !joinable.is_empty() && rng.gen_bool(0.5) {
            let b = *joinable.choose(rng).unwrap();
            let batch = &mut sched.machines[k][b];
            let pos = rng.gen_range(0..=batch.ops.len());
            batch.ops.insert(pos, i);
        } else {
            let pos = rng.gen_range(0..=sched.machines[k].len());
            sched.machines[k].insert(pos, Batch::new(op.family, vec![i]));
        }
    }
    sched
}

/// The full model of `f`; the WSPT order honours the batches of `sched`.
pub fn model_for<'a>(inst: &'a Instance, f: Formulation, sched: &Schedule) -> BatchModel<'a> {
    let prec = (f == Formulation::Wspt).then(|| wspt_order(inst, Some(&Theta::from_schedule(inst.num_ops(), sched))));
    BatchModel::new(inst, ModelConfig::new(f), prec).expect("valid model")
}

/// Instance with `ops` operations on `machines` machines.
pub fn instance(ops: usize, machines: usize, seed: u64) -> Instance {
    generate(&GenParams::new(ops, machines, seed))
}
