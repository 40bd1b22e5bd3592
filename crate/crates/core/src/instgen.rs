//! Random instance generator.
//!
//! Every entity class draws from its own ChaCha8 stream of the same seed,
//! so adding a machine does not perturb operation processing times, say:
//!
//! | stream | draws                                   |
//! |--------|-----------------------------------------|
//! | 0      | family setups                           |
//! | 1      | operation processing time, load, family |
//! | 2      | job weights                             |
//! | 3      | machine capacities                      |
//! | 4      | operation then machine release dates    |
//! | 5      | eligibility rows                        |
//! | 6      | job/operation association               |
//! | 7      | repairs                                 |

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{Family, Instance, Job, Machine, Operation};
use crate::util::ceil_fraction_div;

pub const NUM_FAMILIES: usize = 3;
pub const RELEASE_FACTORS: [f64; 3] = [0.25, 0.5, 0.75];
pub const ELIGIBILITY_FACTORS: [f64; 2] = [0.7, 0.9];
pub const JOB_ASSOC_FACTORS: [f64; 2] = [0.05, 0.15];

/// Eligibility rows are redrawn this many times before falling back to a
/// single random machine with enough capacity.
const MAX_ROW_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub num_ops: usize,
    pub num_machines: usize,
    pub release_factor: f64,
    pub eligibility_factor: f64,
    pub job_assoc_factor: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn new(num_ops: usize, num_machines: usize, seed: u64) -> Self {
        GenParams {
            num_ops,
            num_machines,
            release_factor: RELEASE_FACTORS[0],
            eligibility_factor: ELIGIBILITY_FACTORS[0],
            job_assoc_factor: JOB_ASSOC_FACTORS[0],
            seed,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.num_ops == 0 {
            return Err("num_ops must be >= 1".into());
        }
        if self.num_machines == 0 {
            return Err("num_machines must be >= 1".into());
        }
        for (name, v) in [
            ("release_factor", self.release_factor),
            ("eligibility_factor", self.eligibility_factor),
            ("job_assoc_factor", self.job_assoc_factor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }

    /// `o{ops}_m{machines}_{abc}_{replicate}` where `a`, `b`, `c` are the
    /// one-based positions of the three factors in the standard grids
    /// (`0` for an off-grid value).
    pub fn name(&self, replicate: usize) -> String {
        let pos = |grid: &[f64], v: f64| {
            grid.iter().position(|&g| (g - v).abs() < 1e-12).map_or(0, |p| p + 1)
        };
        format!(
            "o{}_m{}_{}{}{}_{}",
            self.num_ops,
            self.num_machines,
            pos(&RELEASE_FACTORS, self.release_factor),
            pos(&ELIGIBILITY_FACTORS, self.eligibility_factor),
            pos(&JOB_ASSOC_FACTORS, self.job_assoc_factor),
            replicate
        )
    }
}

/// `MR = ceil(release_factor * total / machines)`, where `total` sums
/// processing plus family setup over all operations.
pub fn max_release(release_factor: f64, total: i64, machines: usize) -> i64 {
    ceil_fraction_div(release_factor, total, machines as i64)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws one instance. Panics if `p.check()` fails.
pub fn generate(p: &GenParams) -> Instance {
    if let Err(e) = p.check() {
        panic!("invalid generator parameters: {e}");
    }
    let n_ops = p.num_ops;
    let n_mach = p.num_machines;
    let n_jobs = (n_ops / 3).max(1);

    let mut rng = stream(p.seed, 0);
    let families: Vec<Family> = (0..NUM_FAMILIES).map(|_| Family { setup: rng.gen_range(5..=10) }).collect();

    let mut rng = stream(p.seed, 1);
    let mut ops: Vec<Operation> = (0..n_ops)
        .map(|_| Operation {
            processing: rng.gen_range(1..=30),
            release: 0,
            load: 10 * rng.gen_range(1..=10),
            family: rng.gen_range(0..NUM_FAMILIES),
            eligible: Vec::new(),
        })
        .collect();

    let mut rng = stream(p.seed, 2);
    let weights: Vec<i64> = (0..n_jobs).map(|_| rng.gen_range(1..=50)).collect();

    let mut rng = stream(p.seed, 3);
    let capacities: Vec<i64> = (0..n_mach).map(|_| 10 * rng.gen_range(8..=10)).collect();

    let mut repair = stream(p.seed, 7);
    let max_q = *capacities.iter().max().expect("at least one machine");
    for op in &mut ops {
        if op.load > max_q {
            op.load = 10 * repair.gen_range(1..=max_q / 10);
        }
    }

    let total: i64 = ops.iter().map(|o| o.processing + families[o.family].setup).sum();
    let mr = max_release(p.release_factor, total, n_mach);
    let mut rng = stream(p.seed, 4);
    for op in &mut ops {
        op.release = rng.gen_range(0..=mr);
    }
    let machines: Vec<Machine> =
        capacities.iter().map(|&q| Machine { release: rng.gen_range(0..=mr), capacity: q }).collect();

    let mut rng = stream(p.seed, 5);
    for op in &mut ops {
        for _ in 0..MAX_ROW_REDRAWS {
            op.eligible = (0..n_mach)
                .filter(|&k| rng.gen_bool(p.eligibility_factor) && op.load <= capacities[k])
                .collect();
            if !op.eligible.is_empty() {
                break;
            }
        }
        if op.eligible.is_empty() {
            let fits: Vec<usize> = (0..n_mach).filter(|&k| op.load <= capacities[k]).collect();
            op.eligible = vec![*fits.choose(&mut repair).expect("load repaired to fit")];
        }
    }

    let mut rng = stream(p.seed, 6);
    let mut job_ops: Vec<Vec<usize>> =
        (0..n_jobs).map(|_| (0..n_ops).filter(|_| rng.gen_bool(p.job_assoc_factor)).collect()).collect();
    for list in &mut job_ops {
        if list.is_empty() {
            list.push(repair.gen_range(0..n_ops));
        }
    }
    let mut covered = vec![false; n_ops];
    for &i in job_ops.iter().flatten() {
        covered[i] = true;
    }
    for (i, c) in covered.iter().enumerate() {
        if !c {
            job_ops[repair.gen_range(0..n_jobs)].push(i);
        }
    }
    let jobs = weights.into_iter().zip(job_ops).map(|(weight, ops)| Job { weight, ops }).collect();

    Instance::new(ops, jobs, machines, families).expect("generator repairs guarantee validity")
}
