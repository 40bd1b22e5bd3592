//! Machines on which pairs (and triples) of operations can share a batch.

use std::collections::BTreeMap;

use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilitySets {
    /// Keyed by `(i, j)` with `i < j`; only nonempty sets are stored.
    pairs: BTreeMap<(usize, usize), Vec<usize>>,
}

impl CompatibilitySets {
    /// Machines able to host `i` and `j` together (same family, both
    /// eligible, combined load within capacity).
    pub fn machines(&self, i: usize, j: usize) -> &[usize] {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pairs.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn mu(&self, i: usize, j: usize) -> bool {
        i != j && !self.machines(i, j).is_empty()
    }

    /// Unordered compatible pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.keys().copied()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// Builds the pair sets of an instance.
pub fn compatibility_sets(inst: &Instance) -> CompatibilitySets {
    let mut pairs = BTreeMap::new();
    for i in 0..inst.num_ops() {
        for j in i + 1..inst.num_ops() {
            let ks = shared_machines(inst, &[i, j]);
            if !ks.is_empty() {
                pairs.insert((i, j), ks);
            }
        }
    }
    CompatibilitySets { pairs }
}

/// Triple flag: some machine can host all three in one batch.
pub fn triple_compatible(inst: &Instance, i: usize, j: usize, l: usize) -> bool {
    i != j && j != l && l != i && !shared_machines(inst, &[i, j, l]).is_empty()
}

fn shared_machines(inst: &Instance, ops: &[usize]) -> Vec<usize> {
    let f = inst.op(ops[0]).family;
    if ops.iter().any(|&i| inst.op(i).family != f) {
        return Vec::new();
    }
    let load: i64 = ops.iter().map(|&i| inst.op(i).load).sum();
    inst.op(ops[0])
        .eligible
        .iter()
        .copied()
        .filter(|&k| ops[1..].iter().all(|&i| inst.is_eligible(i, k)) && load <= inst.machines()[k].capacity)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_instance, Family, Job, Machine, Operation};

    #[test]
    fn example_pairs() {
        let inst = example_instance();
        let c = compatibility_sets(&inst);
        // ops 15 and 7: family 3, loads 20 + 60 on machine 4
        assert!(c.mu(14, 6));
        assert_eq!(c.machines(6, 14), &[3]);
        // ops 4 (family 2) and 10 (family 1)
        assert!(!c.mu(3, 9));
        assert!(!c.mu(3, 3));
    }

    #[test]
    fn capacity_clause() {
        let op = |l| Operation { processing: 1, release: 0, load: l, family: 2, eligible: vec![0, 1] };
        let inst = Instance::new(
            vec![op(60), op(50), op(40)],
            vec![Job { weight: 1, ops: vec![0, 1, 2] }],
            vec![Machine { release: 0, capacity: 100 }, Machine { release: 0, capacity: 100 }],
            vec![Family { setup: 1 }; 3],
        )
        .unwrap();
        let c = compatibility_sets(&inst);
        assert!(!c.mu(0, 1));
        assert!(c.mu(0, 2));
        assert!(c.mu(1, 2));
        assert!(!triple_compatible(&inst, 0, 1, 2));
    }
}
