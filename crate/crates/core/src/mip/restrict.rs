//! Fix-and-optimise restriction of a model around an incumbent.

use std::collections::BTreeSet;

use super::{BatchModel, Bound, EncodeError, Var};
use crate::schedule::Schedule;

/// Batch slots `(machine, slot)` to re-optimise and the operations they
/// hold in the incumbent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeSet {
    pub batches: BTreeSet<(usize, usize)>,
    pub ops: BTreeSet<usize>,
}

impl FreeSet {
    /// Frees `batches` together with the operations `sched` puts in them.
    pub fn from_batches(sched: &Schedule, batches: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let batches: BTreeSet<(usize, usize)> = batches.into_iter().collect();
        let ops = batches
            .iter()
            .filter_map(|&(k, b)| sched.machines.get(k).and_then(|m| m.get(b)))
            .flat_map(|batch| batch.ops.iter().copied())
            .collect();
        FreeSet { batches, ops }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RestrictError {
    #[error("incumbent is not a feasible point: {0}")]
    Incumbent(#[from] EncodeError),
    #[error("operation {} is free but not in a free batch", .0 + 1)]
    FreeOpOutside(usize),
    #[error("operation {} sits in a free batch but is not free", .0 + 1)]
    FixedOpInside(usize),
    #[error("machine {} has no batch slot {}", .machine + 1, .slot + 1)]
    NoSuchSlot { machine: usize, slot: usize },
    #[error("machine {} uses slot {} beyond its {available} available batches", .machine + 1, .slot + 1)]
    BeyondAvailable { machine: usize, slot: usize, available: usize },
}

impl<'a> BatchModel<'a> {
    /// Returns a copy in which only `X` of free operations on free slots,
    /// `Y` of free slots and `Z` among free operations stay open; every
    /// other binary is fixed to the incumbent. Slots at or beyond
    /// `available[k]` (when given) are fixed empty. The incumbent stays
    /// feasible for the result.
    pub fn restrict_and_fix(
        &self,
        incumbent: &Schedule,
        free: &FreeSet,
        available: Option<&[usize]>,
    ) -> Result<BatchModel<'a>, RestrictError> {
        let inst = self.inst;
        let values = self.encode(incumbent)?;
        for &(machine, slot) in &free.batches {
            if machine >= inst.num_machines() || slot >= self.slots(machine) {
                return Err(RestrictError::NoSuchSlot { machine, slot });
            }
        }
        let avail = |k: usize| available.map_or(self.slots(k), |a| a[k].min(self.slots(k)));
        for (k, batches) in incumbent.machines.iter().enumerate() {
            if batches.len() > avail(k) {
                return Err(RestrictError::BeyondAvailable { machine: k, slot: avail(k), available: avail(k) });
            }
        }
        let pos = incumbent.positions(inst.num_ops());
        for &i in &free.ops {
            let p = pos[i].expect("structure checked");
            if !free.batches.contains(&p) {
                return Err(RestrictError::FreeOpOutside(i));
            }
        }
        for (i, p) in pos.iter().enumerate() {
            if free.batches.contains(&p.expect("structure checked")) && !free.ops.contains(&i) {
                return Err(RestrictError::FixedOpInside(i));
            }
        }
        let open = |k: usize, b: usize| free.batches.contains(&(k, b)) && b < avail(k);

        let mut out = self.clone();
        for (n, var) in self.vars().iter().enumerate() {
            let keep_open = match *var {
                Var::X { op, machine, slot } => free.ops.contains(&op) && open(machine, slot),
                Var::Y { machine, slot, .. } => open(machine, slot),
                Var::Z { before, after } => free.ops.contains(&before) && free.ops.contains(&after),
                _ => continue,
            };
            let fix = if keep_open {
                Bound::BINARY
            } else if let Var::X { op, .. } = *var {
                if free.ops.contains(&op) {
                    Bound::fixed(0)
                } else {
                    Bound::fixed(values[n])
                }
            } else {
                Bound::fixed(values[n])
            };
            out.bounds[n] = fix;
        }
        Ok(out)
    }
}
