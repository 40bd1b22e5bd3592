//! Problem data: operations, jobs, machines and families.
//!
//! Everything is indexed from zero internally. File formats and rendered
//! output use one-based ids (`index + 1`).

use std::fmt;

/// Integer time units.
pub type Time = i64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub processing: Time,
    pub release: Time,
    pub load: i64,
    pub family: usize,
    /// Eligible machines, sorted and deduplicated by [`Instance::new`].
    pub eligible: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub weight: i64,
    pub ops: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub release: Time,
    pub capacity: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub setup: Time,
}

/// A single broken instance invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceViolation {
    NoOperations,
    NoMachines,
    NonPositiveProcessing { op: usize },
    NegativeRelease { op: usize },
    NegativeLoad { op: usize },
    UnknownFamily { op: usize, family: usize },
    NoEligibleMachine { op: usize },
    UnknownMachine { op: usize, machine: usize },
    LoadExceedsCapacity { op: usize, machine: usize, load: i64, capacity: i64 },
    NonPositiveWeight { job: usize },
    EmptyJob { job: usize },
    UnknownOperation { job: usize, op: usize },
    DuplicateJobOperation { job: usize, op: usize },
    OperationWithoutJob { op: usize },
    NegativeMachineRelease { machine: usize },
    NonPositiveCapacity { machine: usize },
    NegativeSetup { family: usize },
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use InstanceViolation::*;
        match *self {
            NoOperations => write!(f, "instance has no operations"),
            NoMachines => write!(f, "instance has no machines"),
            NonPositiveProcessing { op } => write!(f, "operation {}: processing time must be >= 1", op + 1),
            NegativeRelease { op } => write!(f, "operation {}: negative release date", op + 1),
            NegativeLoad { op } => write!(f, "operation {}: negative load", op + 1),
            UnknownFamily { op, family } => write!(f, "operation {}: unknown family {}", op + 1, family + 1),
            NoEligibleMachine { op } => write!(f, "operation {}: no eligible machine", op + 1),
            UnknownMachine { op, machine } => {
                write!(f, "operation {}: unknown eligible machine {}", op + 1, machine + 1)
            }
            LoadExceedsCapacity { op, machine, load, capacity } => write!(
                f,
                "operation {}: load exceeds capacity of machine {} ({load} > {capacity})",
                op + 1,
                machine + 1
            ),
            NonPositiveWeight { job } => write!(f, "job {}: weight must be >= 1", job + 1),
            EmptyJob { job } => write!(f, "job {}: no operations", job + 1),
            UnknownOperation { job, op } => write!(f, "job {}: unknown operation {}", job + 1, op + 1),
            DuplicateJobOperation { job, op } => {
                write!(f, "job {}: operation {} listed twice", job + 1, op + 1)
            }
            OperationWithoutJob { op } => write!(f, "operation {}: not associated with any job", op + 1),
            NegativeMachineRelease { machine } => write!(f, "machine {}: negative release date", machine + 1),
            NonPositiveCapacity { machine } => write!(f, "machine {}: capacity must be >= 1", machine + 1),
            NegativeSetup { family } => write!(f, "family {}: negative setup time", family + 1),
        }
    }
}

/// Every invariant violated by an instance. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<InstanceViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid instance:\n{0}")]
pub struct InvalidInstance(pub ValidationReport);

/// A validated instance together with the derived lookup maps
/// (jobs per operation, operations per machine).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    operations: Vec<Operation>,
    jobs: Vec<Job>,
    machines: Vec<Machine>,
    families: Vec<Family>,
    op_jobs: Vec<Vec<usize>>,
    machine_ops: Vec<Vec<usize>>,
}

impl Instance {
    /// Validates the parts and builds the derived maps.
    pub fn new(
        mut operations: Vec<Operation>,
        mut jobs: Vec<Job>,
        machines: Vec<Machine>,
        families: Vec<Family>,
    ) -> Result<Self, InvalidInstance> {
        for op in &mut operations {
            op.eligible.sort_unstable();
            op.eligible.dedup();
        }
        for job in &mut jobs {
            job.ops.sort_unstable();
        }
        let report = validate_parts(&operations, &jobs, &machines, &families);
        if !report.is_valid() {
            return Err(InvalidInstance(report));
        }
        let mut op_jobs = vec![Vec::new(); operations.len()];
        for (j, job) in jobs.iter().enumerate() {
            for &i in &job.ops {
                op_jobs[i].push(j);
            }
        }
        let mut machine_ops = vec![Vec::new(); machines.len()];
        for (i, op) in operations.iter().enumerate() {
            for &k in &op.eligible {
                machine_ops[k].push(i);
            }
        }
        Ok(Instance { operations, jobs, machines, families, op_jobs, machine_ops })
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn num_ops(&self) -> usize {
        self.operations.len()
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn num_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn num_families(&self) -> usize {
        self.families.len()
    }

    pub fn op(&self, i: usize) -> &Operation {
        &self.operations[i]
    }

    /// Jobs that operation `i` belongs to (`N_i`).
    pub fn jobs_of(&self, i: usize) -> &[usize] {
        &self.op_jobs[i]
    }

    /// Operations machine `k` may process (`O_k`).
    pub fn ops_of_machine(&self, k: usize) -> &[usize] {
        &self.machine_ops[k]
    }

    pub fn setup_of_op(&self, i: usize) -> Time {
        self.families[self.operations[i].family].setup
    }

    pub fn is_eligible(&self, i: usize, k: usize) -> bool {
        self.operations[i].eligible.binary_search(&k).is_ok()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_parts(&self.operations, &self.jobs, &self.machines, &self.families)
    }
}

/// Checks every instance invariant on raw parts and lists all violations.
pub fn validate_parts(
    operations: &[Operation],
    jobs: &[Job],
    machines: &[Machine],
    families: &[Family],
) -> ValidationReport {
    use InstanceViolation::*;
    let mut v = Vec::new();
    if operations.is_empty() {
        v.push(NoOperations);
    }
    if machines.is_empty() {
        v.push(NoMachines);
    }
    for (k, m) in machines.iter().enumerate() {
        if m.release < 0 {
            v.push(NegativeMachineRelease { machine: k });
        }
        if m.capacity < 1 {
            v.push(NonPositiveCapacity { machine: k });
        }
    }
    for (f, fam) in families.iter().enumerate() {
        if fam.setup < 0 {
            v.push(NegativeSetup { family: f });
        }
    }
    for (i, op) in operations.iter().enumerate() {
        if op.processing < 1 {
            v.push(NonPositiveProcessing { op: i });
        }
        if op.release < 0 {
            v.push(NegativeRelease { op: i });
        }
        if op.load < 0 {
            v.push(NegativeLoad { op: i });
        }
        if op.family >= families.len() {
            v.push(UnknownFamily { op: i, family: op.family });
        }
        if op.eligible.is_empty() {
            v.push(NoEligibleMachine { op: i });
        }
        for &k in &op.eligible {
            match machines.get(k) {
                None => v.push(UnknownMachine { op: i, machine: k }),
                Some(m) if op.load > m.capacity => v.push(LoadExceedsCapacity {
                    op: i,
                    machine: k,
                    load: op.load,
                    capacity: m.capacity,
                }),
                Some(_) => {}
            }
        }
    }
    let mut covered = vec![false; operations.len()];
    for (j, job) in jobs.iter().enumerate() {
        if job.weight < 1 {
            v.push(NonPositiveWeight { job: j });
        }
        if job.ops.is_empty() {
            v.push(EmptyJob { job: j });
        }
        let mut seen = std::collections::BTreeSet::new();
        for &i in &job.ops {
            if i >= operations.len() {
                v.push(UnknownOperation { job: j, op: i });
                continue;
            }
            if !seen.insert(i) {
                v.push(DuplicateJobOperation { job: j, op: i });
            }
            covered[i] = true;
        }
    }
    for (i, c) in covered.iter().enumerate() {
        if !c {
            v.push(OperationWithoutJob { op: i });
        }
    }
    ValidationReport { violations: v }
}

/// The 15-operation example instance used throughout the documentation and
/// golden tests (4 machines, 5 jobs, 3 families).
///
/// Job membership follows the per-operation job lists; with those, the
/// reference schedule in [`crate::schedule::example_schedule`] yields job
/// completion times 35, 60, 68, 54, 90.
pub fn example_instance() -> Instance {
    // (p, r, family, load, jobs, machines), one-based ids
    const OPS: [(Time, Time, usize, i64, &[usize], &[usize]); 15] = [
        (23, 5, 1, 90, &[5], &[1, 4]),
        (5, 17, 1, 90, &[5], &[1, 3, 4]),
        (25, 16, 3, 70, &[2, 3, 4], &[2, 3, 4]),
        (10, 9, 2, 50, &[1], &[1, 2, 3, 4]),
        (4, 18, 1, 60, &[3], &[1, 2, 3, 4]),
        (8, 17, 2, 80, &[1, 3], &[2, 4]),
        (29, 15, 3, 60, &[5], &[1, 2, 3, 4]),
        (8, 5, 3, 0, &[2], &[2]),
        (17, 9, 3, 40, &[1, 5], &[1, 2, 4]),
        (25, 0, 1, 40, &[2, 5], &[1, 2, 3, 4]),
        (4, 3, 1, 30, &[3], &[1, 2, 3, 4]),
        (15, 0, 1, 20, &[1, 3], &[1, 3, 4]),
        (7, 16, 2, 60, &[3], &[3, 4]),
        (7, 7, 1, 90, &[4, 5], &[1, 4]),
        (18, 15, 3, 20, &[3], &[4]),
    ];
    let weights = [46, 40, 39, 13, 3];
    let operations = OPS
        .iter()
        .map(|&(p, r, f, l, _, ms)| Operation {
            processing: p,
            release: r,
            load: l,
            family: f - 1,
            eligible: ms.iter().map(|k| k - 1).collect(),
        })
        .collect();
    let jobs = weights
        .iter()
        .enumerate()
        .map(|(j, &w)| Job {
            weight: w,
            ops: OPS
                .iter()
                .enumerate()
                .filter(|(_, op)| op.4.contains(&(j + 1)))
                .map(|(i, _)| i)
                .collect(),
        })
        .collect();
    let machines = [(13, 90), (0, 80), (0, 90), (1, 90)]
        .iter()
        .map(|&(r, q)| Machine { release: r, capacity: q })
        .collect();
    let families = [5, 7, 9].iter().map(|&s| Family { setup: s }).collect();
    Instance::new(operations, jobs, machines, families).expect("example instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_op(load: i64, capacity: i64, eligible: Vec<usize>) -> Result<Instance, InvalidInstance> {
        Instance::new(
            vec![Operation { processing: 3, release: 0, load, family: 0, eligible }],
            vec![Job { weight: 1, ops: vec![0] }],
            vec![Machine { release: 0, capacity }],
            vec![Family { setup: 1 }],
        )
    }

    #[test]
    fn example_machine_op_sets() {
        let inst = example_instance();
        let o1: Vec<usize> = inst.ops_of_machine(0).iter().map(|i| i + 1).collect();
        assert_eq!(o1, vec![1, 2, 4, 5, 7, 9, 10, 11, 12, 14]);
        let o4: Vec<usize> = inst.ops_of_machine(3).iter().map(|i| i + 1).collect();
        assert_eq!(o4, vec![1, 2, 3, 4, 5, 6, 7, 9, 10, 11, 12, 13, 14, 15]);
        assert!(inst.validate().is_valid());
        assert_eq!(inst.jobs_of(2), &[1, 2, 3]);
    }

    #[test]
    fn empty_eligibility_is_reported() {
        let err = one_op(10, 90, vec![]).unwrap_err();
        assert_eq!(err.0.violations, vec![InstanceViolation::NoEligibleMachine { op: 0 }]);
        assert!(err.to_string().contains("no eligible machine"));
    }

    #[test]
    fn load_above_capacity_is_reported() {
        let err = one_op(95, 90, vec![0]).unwrap_err();
        assert!(matches!(
            err.0.violations[..],
            [InstanceViolation::LoadExceedsCapacity { op: 0, machine: 0, load: 95, capacity: 90 }]
        ));
        assert!(err.to_string().contains("load exceeds capacity"));
    }

    #[test]
    fn all_violations_are_listed() {
        let report = validate_parts(
            &[Operation { processing: 0, release: -1, load: 5, family: 4, eligible: vec![] }],
            &[Job { weight: 0, ops: vec![] }],
            &[Machine { release: 0, capacity: 10 }],
            &[Family { setup: 1 }],
        );
        assert_eq!(report.violations.len(), 7);
    }

    #[test]
    fn zero_load_is_accepted() {
        assert!(one_op(0, 90, vec![0]).is_ok());
    }
}
