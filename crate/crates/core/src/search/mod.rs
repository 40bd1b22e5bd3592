//! MIP-based local search and the ILS / GRASP matheuristics built on it.
//!
//! Both neighbourhoods free a set of batch slots of the incumbent and hand
//! the restricted model to the sub-solver. Each machine `k` may use at most
//! `mb[k]` batch slots; the limit grows by one whenever a machine uses all
//! of them. Searches only ever accept strictly better sub-solutions.

mod params;
mod relocate;
mod state;
mod swap;
mod windows;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::BigRational;

use crate::construct::{randomized_construct, wmct_wavga};
use crate::instance::Instance;
use crate::mip::Formulation;
use crate::schedule::{twct, Schedule};
use crate::util::fraction_rational;

pub use params::{ParamError, Params, DETERMINISTIC_NODE_LIMIT};
pub use relocate::{group_sizes, multi_batches_relocate, relocate_size};
pub use state::{LogEvent, Phase, RunLog, SearchState};
pub use swap::{random_batch_swap, swap_count, SlotLayout, MAX_SWAP_DRAWS};
pub use windows::{batch_windows, window_ranges, window_size, HalfTime};

/// Relocate until it stops improving, then windows; any improvement
/// restarts from relocate.
pub fn vnd(state: &mut SearchState<'_>, sched: Schedule) -> Schedule {
    let inst = state.instance();
    let mut current = sched;
    loop {
        if state.out_of_time() {
            return current;
        }
        let f = twct(inst, &current);
        let relocated = multi_batches_relocate(state, current);
        if twct(inst, &relocated) < f {
            current = relocated;
            continue;
        }
        let windowed = batch_windows(state, relocated);
        let improved = twct(inst, &windowed) < f;
        current = windowed;
        if !improved {
            return current;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ils,
    Grasp,
}

/// Which formulation the sub-problems use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// WSPT throughout.
    One,
    /// Sequencing throughout.
    Two,
    /// WSPT in the main loop, sequencing for the final intensification.
    Three,
}

impl Variant {
    pub fn number(self) -> u8 {
        match self {
            Variant::One => 1,
            Variant::Two => 2,
            Variant::Three => 3,
        }
    }

    pub fn main_formulation(self) -> Formulation {
        match self {
            Variant::Two => Formulation::Sequencing,
            _ => Formulation::Wspt,
        }
    }

    pub fn intensification_formulation(self) -> Formulation {
        match self {
            Variant::One => Formulation::Wspt,
            _ => Formulation::Sequencing,
        }
    }
}

/// A method/variant pair such as `ILS-Math3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matheuristic {
    pub method: Method,
    pub variant: Variant,
}

impl Matheuristic {
    pub fn new(method: Method, variant: Variant) -> Self {
        Matheuristic { method, variant }
    }

    pub fn all() -> Vec<Matheuristic> {
        let mut v = Vec::new();
        for method in [Method::Ils, Method::Grasp] {
            for variant in [Variant::One, Variant::Two, Variant::Three] {
                v.push(Matheuristic { method, variant });
            }
        }
        v
    }
}

impl fmt::Display for Matheuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.method {
            Method::Ils => "ILS",
            Method::Grasp => "GRASP",
        };
        write!(f, "{m}-Math{}", self.variant.number())
    }
}

impl FromStr for Matheuristic {
    type Err = String;
    /// Accepts `ils3`, `ILS-Math3`, `grasp-math1` and the like.
    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        let (method, rest) = if let Some(r) = lower.strip_prefix("ils") {
            (Method::Ils, r)
        } else if let Some(r) = lower.strip_prefix("grasp") {
            (Method::Grasp, r)
        } else {
            return Err(format!("unknown method `{s}` (expected ils1..3 or grasp1..3)"));
        };
        let variant = match rest.strip_prefix("math").unwrap_or(rest) {
            "1" => Variant::One,
            "2" => Variant::Two,
            "3" => Variant::Three,
            _ => return Err(format!("unknown variant in `{s}` (expected 1, 2 or 3)")),
        };
        Ok(Matheuristic { method, variant })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub schedule: Schedule,
    pub twct: i64,
    /// Objective of the greedy constructive solution.
    pub constructive_twct: i64,
    pub log: RunLog,
    pub work: u64,
    /// Wall-clock run time; absent in deterministic runs.
    pub elapsed: Option<Duration>,
}

/// Runs a matheuristic from scratch. With deterministic parameters the
/// outcome depends on `seed` only.
pub fn run(inst: &Instance, mh: Matheuristic, params: &Params, seed: u64) -> RunOutcome {
    let started = Instant::now();
    let mut state = SearchState::new(inst, params.clone(), mh.variant.main_formulation(), seed);
    let (best, constructive) = match mh.method {
        Method::Ils => ils_math(&mut state),
        Method::Grasp => grasp_math(&mut state),
    };
    let best = intensify(&mut state, best, mh.variant);
    let value = twct(inst, &best);
    RunOutcome {
        twct: value,
        schedule: best,
        constructive_twct: constructive,
        work: state.work(),
        elapsed: (!params.is_deterministic()).then(|| started.elapsed()),
        log: state.log,
    }
}

/// `f' < f * (1 + delta)`, exactly.
fn accepts(candidate: i64, best: i64, delta: &BigRational) -> bool {
    let one = BigRational::from_integer(1.into());
    BigRational::from_integer(candidate.into()) < BigRational::from_integer(best.into()) * (one + delta)
}

/// Main loop of the iterated local search; returns its best schedule and
/// the constructive objective.
pub fn ils_math(state: &mut SearchState<'_>) -> (Schedule, i64) {
    let inst = state.instance();
    let delta = fraction_rational(state.params.delta);
    let initial = wmct_wavga(inst);
    let constructive = twct(inst, &initial);
    state.record(Phase::Construct, constructive);
    state.init_mb(&initial);
    let mut current = vnd(state, initial);
    let mut best = current.clone();
    let mut f_best = twct(inst, &best);
    let mut omega = 1;
    while omega <= state.params.omega_max && !state.out_of_time() {
        omega += 1;
        let perturbed = random_batch_swap(state, &current);
        state.record(Phase::Perturb, twct(inst, &perturbed));
        let candidate = vnd(state, perturbed);
        let f = twct(inst, &candidate);
        if accepts(f, f_best, &delta) {
            current = candidate;
            state.record(Phase::Accept, f);
            if f < f_best {
                best = current.clone();
                f_best = f;
                omega = 1;
                state.record(Phase::NewBest, f);
            }
        } else {
            state.record(Phase::Reject, f);
            current = best.clone();
        }
    }
    (best, constructive)
}

/// Main loop of GRASP; returns its best schedule and the objective of the
/// greedy constructive solution.
pub fn grasp_math(state: &mut SearchState<'_>) -> (Schedule, i64) {
    let inst = state.instance();
    let constructive = twct(inst, &wmct_wavga(inst));
    let mut best: Option<(Schedule, i64)> = None;
    let mut omega = 1;
    while omega <= state.params.omega_max {
        if best.is_some() && state.out_of_time() {
            break;
        }
        omega += 1;
        let start = randomized_construct(inst, state.params.rcl_alpha, &mut state.rng);
        state.record(Phase::Construct, twct(inst, &start));
        state.init_mb(&start);
        let local = vnd(state, start);
        let f = twct(inst, &local);
        if best.as_ref().map_or(true, |(_, fb)| f < *fb) {
            best = Some((local, f));
            omega = 1;
            state.record(Phase::NewBest, f);
        }
    }
    (best.expect("at least one iteration").0, constructive)
}

/// Final VND around the best schedule, with freshly set batch limits and
/// the variant's intensification formulation.
pub fn intensify(state: &mut SearchState<'_>, best: Schedule, variant: Variant) -> Schedule {
    let inst = state.instance();
    let f = twct(inst, &best);
    state.set_formulation(variant.intensification_formulation(), f);
    state.record(Phase::Intensify, f);
    state.init_mb(&best);
    let out = vnd(state, best);
    state.record(Phase::Done, twct(inst, &out));
    out
}
