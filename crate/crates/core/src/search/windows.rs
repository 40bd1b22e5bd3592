use std::fmt;

use super::{Phase, SearchState};
use crate::instance::Time;
use crate::schedule::{evaluate, Schedule};
use crate::util::ceil_fraction;

/// A time stored in half units, so window ends like `45/2` stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfTime(pub i64);

impl HalfTime {
    pub fn from_time(t: Time) -> Self {
        HalfTime(2 * t)
    }
}

impl fmt::Display for HalfTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0.div_euclid(2))
        }
    }
}

/// Window size: `ceil(rho * cmax)`, at least one time unit.
pub fn window_size(rho: f64, cmax: Time) -> Time {
    ceil_fraction(rho, cmax).max(1)
}

/// Windows `[begin, end]` visited for a makespan and window size, from the
/// end of the schedule backwards, each overlapping the previous by half.
pub fn window_ranges(cmax: Time, size: Time) -> Vec<(HalfTime, HalfTime)> {
    assert!(size >= 1, "window size must be positive");
    let mut out = Vec::new();
    let mut end = 2 * cmax.max(0);
    loop {
        let begin = (end - 2 * size).max(0);
        out.push((HalfTime(begin), HalfTime(end)));
        if begin == 0 {
            break;
        }
        end = begin + size;
    }
    out
}

/// Start and end of every available slot; unused slots sit at the time the
/// machine becomes idle.
fn slot_times(state: &SearchState<'_>, sched: &Schedule) -> Vec<Vec<(Time, Time)>> {
    let inst = state.instance();
    let ev = evaluate(inst, sched).expect("search schedules are valid");
    (0..inst.num_machines())
        .map(|k| {
            let used = sched.machines[k].len();
            let idle = if used == 0 { inst.machines()[k].release } else { ev.batch_end(k, used - 1) };
            (0..state.mb[k])
                .map(|b| if b < used { (ev.batch_start[k][b], ev.batch_end(k, b)) } else { (idle, idle) })
                .collect()
        })
        .collect()
}

/// Frees, window by window, the available batches overlapping the window
/// and re-optimises them. Never returns a worse schedule.
pub fn batch_windows(state: &mut SearchState<'_>, sched: Schedule) -> Schedule {
    let inst = state.instance();
    let cmax = evaluate(inst, &sched).expect("search schedules are valid").cmax;
    let size = window_size(state.params.rho, cmax);
    let mut current = sched;
    for (begin, end) in window_ranges(cmax, size) {
        if state.out_of_time() {
            break;
        }
        let times = slot_times(state, &current);
        let chosen: Vec<(usize, usize)> = times
            .iter()
            .enumerate()
            .flat_map(|(k, slots)| slots.iter().enumerate().map(move |(b, &t)| (k, b, t)))
            .filter(|&(_, _, (s, c))| HalfTime::from_time(s) <= end && HalfTime::from_time(c) >= begin)
            .map(|(k, b, _)| (k, b))
            .collect();
        if let Some(better) = state.sub_solve(&current, chosen, Phase::Windows) {
            current = better;
        }
    }
    current
}
