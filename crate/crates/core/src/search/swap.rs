use rand::Rng;

use super::SearchState;
use crate::instance::Instance;
use crate::schedule::{Batch, Schedule};
use crate::util::ceil_fraction;

/// Draws allowed per swap before giving up on it.
pub const MAX_SWAP_DRAWS: usize = 64;

/// A schedule spread over the available batch slots; trailing slots are
/// empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    pub slots: Vec<Vec<Option<Batch>>>,
}

impl SlotLayout {
    pub fn new(sched: &Schedule, mb: &[usize]) -> Self {
        let slots = sched
            .machines
            .iter()
            .zip(mb)
            .map(|(batches, &n)| {
                let mut v: Vec<Option<Batch>> = batches.iter().cloned().map(Some).collect();
                v.resize(n.max(batches.len()), None);
                v
            })
            .collect();
        SlotLayout { slots }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.slots.iter().enumerate().flat_map(|(k, s)| (0..s.len()).map(move |b| (k, b))).collect()
    }

    fn get(&self, (k, b): (usize, usize)) -> Option<&Batch> {
        self.slots[k][b].as_ref()
    }

    fn fits(inst: &Instance, batch: Option<&Batch>, machine: usize) -> bool {
        batch.map_or(true, |batch| {
            batch.ops.iter().all(|&i| inst.is_eligible(i, machine))
                && batch.load(inst) <= inst.machines()[machine].capacity
        })
    }

    /// Distinct slots, not both empty, whose contents can run on each
    /// other's machine.
    pub fn can_swap(&self, inst: &Instance, a: (usize, usize), b: (usize, usize)) -> bool {
        let (ba, bb) = (self.get(a), self.get(b));
        a != b
            && (ba.is_some() || bb.is_some())
            && (a.0 == b.0 || (Self::fits(inst, ba, b.0) && Self::fits(inst, bb, a.0)))
    }

    /// Exchanges the contents of two slots; applying it twice restores
    /// the layout.
    pub fn swap(&mut self, a: (usize, usize), b: (usize, usize)) {
        if a.0 == b.0 {
            self.slots[a.0].swap(a.1, b.1);
        } else {
            let x = self.slots[a.0][a.1].take();
            let y = std::mem::replace(&mut self.slots[b.0][b.1], x);
            self.slots[a.0][a.1] = y;
        }
    }

    pub fn to_schedule(&self) -> Schedule {
        Schedule { machines: self.slots.iter().map(|s| s.iter().flatten().cloned().collect()).collect() }
    }
}

/// Swaps per perturbation: `ceil(omega * available)`.
pub fn swap_count(omega: f64, available: usize) -> usize {
    ceil_fraction(omega, available as i64) as usize
}

/// Perturbs `sched` by exchanging randomly drawn pairs of available batch
/// slots. Infeasible draws are redrawn up to [`MAX_SWAP_DRAWS`] times.
pub fn random_batch_swap(state: &mut SearchState<'_>, sched: &Schedule) -> Schedule {
    let inst = state.instance();
    let mut layout = SlotLayout::new(sched, &state.mb);
    let pairs = layout.pairs();
    if pairs.len() < 2 {
        return sched.clone();
    }
    for _ in 0..swap_count(state.params.omega, state.total_mb()) {
        for _ in 0..MAX_SWAP_DRAWS {
            let a = pairs[state.rng.gen_range(0..pairs.len())];
            let b = pairs[state.rng.gen_range(0..pairs.len())];
            if layout.can_swap(inst, a, b) {
                layout.swap(a, b);
                break;
            }
        }
    }
    layout.to_schedule()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::example_instance;
    use crate::mip::Formulation;
    use crate::schedule::{check_feasibility, example_schedule};
    use crate::search::Params;

    #[test]
    fn example_counts() {
        let inst = example_instance();
        let mut st = SearchState::new(&inst, Params::default(), Formulation::Wspt, 0);
        st.init_mb(&example_schedule());
        assert_eq!(st.total_mb(), 17);
        assert_eq!(swap_count(0.1, st.total_mb()), 2);
    }

    #[test]
    fn swap_is_an_involution() {
        let inst = example_instance();
        let s = example_schedule();
        let mut st = SearchState::new(&inst, Params::default(), Formulation::Wspt, 0);
        st.init_mb(&s);
        let layout = SlotLayout::new(&s, &st.mb);
        let pairs = layout.pairs();
        for &a in &pairs {
            for &b in &pairs {
                if layout.can_swap(&inst, a, b) {
                    let mut l = layout.clone();
                    l.swap(a, b);
                    assert!(check_feasibility(&inst, &l.to_schedule()).is_empty());
                    l.swap(a, b);
                    assert_eq!(l, layout);
                }
            }
        }
    }

    #[test]
    fn empty_pairs_are_never_swapped() {
        let inst = example_instance();
        let s = example_schedule();
        let mb: Vec<usize> = s.machines.iter().map(|m| m.len() + 1).collect();
        let layout = SlotLayout::new(&s, &mb);
        let (k, used) = (0, s.machines[0].len());
        assert!(!layout.can_swap(&inst, (k, used), (1, s.machines[1].len())));
        assert!(!layout.can_swap(&inst, (0, 0), (0, 0)));
    }
}
