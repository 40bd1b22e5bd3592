use rand::seq::SliceRandom;

use super::{Phase, SearchState};
use crate::schedule::Schedule;
use crate::util::ceil_fraction;

/// Batches freed per iteration: `ceil(phi * available)`, at least one.
pub fn relocate_size(phi: f64, available: usize) -> usize {
    (ceil_fraction(phi, available as i64).max(1)) as usize
}

/// Sizes of the consecutive groups `n` shuffled slots are cut into.
pub fn group_sizes(n: usize, size: usize) -> Vec<usize> {
    assert!(size >= 1);
    (0..n).step_by(size).map(|start| size.min(n - start)).collect()
}

/// Shuffles all available batch slots and re-optimises them group by
/// group. The group size is fixed for the whole pass.
pub fn multi_batches_relocate(state: &mut SearchState<'_>, sched: Schedule) -> Schedule {
    let mut pairs = state.available_pairs();
    let size = relocate_size(state.params.phi, pairs.len());
    pairs.shuffle(&mut state.rng);
    let mut current = sched;
    for group in pairs.chunks(size) {
        if state.out_of_time() {
            break;
        }
        if let Some(better) = state.sub_solve(&current, group.iter().copied(), Phase::Relocate) {
            current = better;
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_slots() {
        let nb = relocate_size(0.3, 17);
        assert_eq!(nb, 6);
        assert_eq!(group_sizes(17, nb), [6, 6, 5]);
    }

    #[test]
    fn groups_cover_everything() {
        for n in 0..40 {
            for size in 1..8 {
                let g = group_sizes(n, size);
                assert_eq!(g.iter().sum::<usize>(), n);
                assert!(g.iter().all(|&x| x >= 1 && x <= size));
                assert_eq!(g.len(), n.div_ceil(size));
            }
        }
        assert_eq!(relocate_size(0.0, 10), 1);
    }
}
