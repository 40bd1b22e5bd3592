use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Params;
use crate::instance::Instance;
use crate::mip::{BatchModel, Formulation, FreeSet, ModelConfig};
use crate::precedence::{wspt_order, Theta};
use crate::schedule::{twct, Schedule};
use crate::subsolve::{solve, SolveRequest};

/// What produced a log entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Construct,
    Relocate,
    Windows,
    Perturb,
    Accept,
    Reject,
    NewBest,
    Switch,
    Intensify,
    Done,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Construct => "construct",
            Phase::Relocate => "relocate",
            Phase::Windows => "windows",
            Phase::Perturb => "perturb",
            Phase::Accept => "accept",
            Phase::Reject => "reject",
            Phase::NewBest => "new-best",
            Phase::Switch => "switch",
            Phase::Intensify => "intensify",
            Phase::Done => "done",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEvent {
    pub phase: Phase,
    pub formulation: Formulation,
    /// Solver nodes plus sub-solves so far; a clock-free progress measure.
    pub work: u64,
    /// Wall-clock time since the run started; absent in deterministic runs.
    pub elapsed: Option<Duration>,
    pub current: i64,
    pub best: i64,
}

/// Chronological record of a search run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunLog {
    pub events: Vec<LogEvent>,
}

impl RunLog {
    pub fn of(&self, phase: Phase) -> impl Iterator<Item = &LogEvent> {
        self.events.iter().filter(move |e| e.phase == phase)
    }
}

impl fmt::Display for RunLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            match e.elapsed {
                Some(t) => write!(f, "{:>9.3}s ", t.as_secs_f64())?,
                None => write!(f, "{:>10} ", "-")?,
            }
            writeln!(
                f,
                "work={:<8} {:<10} {:<10} current={} best={}",
                e.work,
                e.phase.label(),
                e.formulation.label(),
                e.current,
                e.best
            )?;
        }
        Ok(())
    }
}

/// Mutable context shared by the neighbourhoods and drivers: the available
/// batch counts, the random stream, the active formulation and the log.
pub struct SearchState<'a> {
    inst: &'a Instance,
    pub params: Params,
    /// Available batches per machine.
    pub mb: Vec<usize>,
    pub rng: ChaCha8Rng,
    pub log: RunLog,
    formulation: Formulation,
    seq_model: Option<BatchModel<'a>>,
    started: Instant,
    work: u64,
    best: Option<i64>,
}

impl<'a> SearchState<'a> {
    pub fn new(inst: &'a Instance, params: Params, formulation: Formulation, seed: u64) -> Self {
        SearchState {
            inst,
            params,
            mb: vec![0; inst.num_machines()],
            rng: ChaCha8Rng::seed_from_u64(seed),
            log: RunLog::default(),
            formulation,
            seq_model: None,
            started: Instant::now(),
            work: 0,
            best: None,
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn best(&self) -> Option<i64> {
        self.best
    }

    /// Changes the sub-problem formulation, logging actual switches.
    pub fn set_formulation(&mut self, f: Formulation, current: i64) {
        if f != self.formulation {
            self.formulation = f;
            self.record(Phase::Switch, current);
        }
    }

    /// Batch slots a machine may hold at most.
    pub fn slot_limit(&self, k: usize) -> usize {
        self.inst.ops_of_machine(k).len()
    }

    /// Sets every machine to one batch more than it uses, within its slots.
    pub fn init_mb(&mut self, sched: &Schedule) {
        for k in 0..self.inst.num_machines() {
            self.mb[k] = (sched.machines[k].len() + 1).min(self.slot_limit(k));
        }
    }

    /// Grows the machines that use all their available batches.
    pub fn update_mb(&mut self, sched: &Schedule) {
        for k in 0..self.inst.num_machines() {
            let used = sched.machines[k].len();
            if used == self.mb[k] {
                self.mb[k] = (used + 1).min(self.slot_limit(k));
            }
        }
    }

    pub fn total_mb(&self) -> usize {
        self.mb.iter().sum()
    }

    /// Every available `(machine, slot)` pair in machine-major order.
    pub fn available_pairs(&self) -> Vec<(usize, usize)> {
        self.mb.iter().enumerate().flat_map(|(k, &n)| (0..n).map(move |b| (k, b))).collect()
    }

    pub fn out_of_time(&self) -> bool {
        self.params.time_limit.is_some_and(|t| self.started.elapsed().as_secs_f64() >= t)
    }

    pub fn record(&mut self, phase: Phase, current: i64) {
        let best = self.best.map_or(current, |b| b.min(current));
        self.best = Some(best);
        let elapsed = (!self.params.is_deterministic()).then(|| self.started.elapsed());
        self.log.events.push(LogEvent { phase, formulation: self.formulation, work: self.work, elapsed, current, best });
    }

    fn model_for(&mut self, sched: &Schedule) -> Option<BatchModel<'a>> {
        let inst = self.inst;
        match self.formulation {
            Formulation::Sequencing => {
                if self.seq_model.is_none() {
                    self.seq_model = BatchModel::new(inst, ModelConfig::new(Formulation::Sequencing), None).ok();
                }
                self.seq_model.clone()
            }
            Formulation::Wspt => {
                // the order must agree with the batches of the incumbent
                let theta = Theta::from_schedule(inst.num_ops(), sched);
                BatchModel::new(inst, ModelConfig::new(Formulation::Wspt), Some(wspt_order(inst, Some(&theta)))).ok()
            }
        }
    }

    /// Re-optimises the given batch slots of `sched` with the active
    /// formulation. Returns the new schedule only if it is strictly better;
    /// the available batch counts are updated either way.
    pub fn sub_solve(
        &mut self,
        sched: &Schedule,
        slots: impl IntoIterator<Item = (usize, usize)>,
        phase: Phase,
    ) -> Option<Schedule> {
        if self.out_of_time() {
            return None;
        }
        let free = FreeSet::from_batches(sched, slots);
        if free.batches.is_empty() {
            return None;
        }
        let model = self.model_for(sched)?;
        let restricted = match model.restrict_and_fix(sched, &free, Some(&self.mb)) {
            Ok(m) => m,
            Err(e) => {
                debug_assert!(false, "restriction failed: {e}");
                return None;
            }
        };
        let req = SolveRequest::new(&restricted)
            .warm_start(sched)
            .limits(self.params.sub_limits())
            .backend(self.params.backend.clone());
        let result = solve(&req);
        self.work += 1;
        let before = twct(self.inst, sched);
        let improved = match result {
            Ok(r) => {
                self.work += r.nodes;
                match (r.incumbent, r.objective) {
                    (Some(mut s), Some(obj)) if obj < before => {
                        s.compact();
                        Some((s, obj))
                    }
                    _ => None,
                }
            }
            Err(e) => {
                debug_assert!(false, "sub-solve failed: {e}");
                None
            }
        };
        match improved {
            Some((s, obj)) => {
                self.update_mb(&s);
                self.record(phase, obj);
                Some(s)
            }
            None => {
                self.update_mb(sched);
                None
            }
        }
    }
}
