//! Combinatorial branch and bound over the free assignment decisions.
//!
//! Bounds of the model are read slot by slot: a slot with operations fixed
//! to it is a fixed batch, a slot where nothing may go is transparent, and
//! consecutive open slots with the same candidate operations form a run.
//! Inside a run only the sequence of non-empty batches matters, so a node
//! is a list of batches per run. Free operations are inserted one at a time
//! (incumbent start order): into a compatible batch of a run, or as a new
//! batch at any gap while the run has unused slots.
//!
//! The bound of a node is the objective of its partial schedule, where each
//! unplaced operation completes no earlier than
//! `max(r_i, time its run is reached) + s_f + p_i`. Adding an operation never
//! moves anything earlier, so the bound is valid and exact at leaves.

use std::time::Instant;

use super::{Limits, SolveResult, Status};
use crate::instance::{Instance, Time};
use crate::mip::{BatchModel, Formulation};
use crate::schedule::{evaluate, Batch, Schedule};

/// The model's bounds do not describe a partial schedule this solver can
/// branch on (for example, a slot that is only partly fixed).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported model shape: {0}")]
pub struct Unsupported(pub String);

#[derive(Debug, Clone)]
struct FixedBatch {
    family: usize,
    /// In processing order.
    ops: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Item {
    Fixed(FixedBatch),
    Run(usize),
}

#[derive(Debug, Clone)]
struct Run {
    machine: usize,
    capacity: usize,
    allowed: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct OpenBatch {
    family: usize,
    load: i64,
    ops: Vec<usize>,
}

struct Problem<'a> {
    inst: &'a Instance,
    rank: Vec<usize>,
    /// `may_precede[h][i]`: `h` may be processed before `i` in a shared batch.
    may_precede: Option<Vec<Vec<bool>>>,
    machines: Vec<Vec<Item>>,
    runs: Vec<Run>,
    runs_of_op: Vec<Vec<usize>>,
    free: Vec<usize>,
    job_weight: Vec<i64>,
}

enum Shape<'a> {
    Ready(Problem<'a>),
    Infeasible,
}

fn prepare<'a>(model: &BatchModel<'a>, warm: Option<&Schedule>) -> Result<Shape<'a>, Unsupported> {
    let inst = model.instance();
    let n = inst.num_ops();
    let nf = inst.num_families();
    let formulation = model.formulation();
    let rank = match model.precedence() {
        Some(p) => p.rank().to_vec(),
        None => (0..n).collect(),
    };
    let xb = |i: usize, k: usize, b: usize| model.x(i, k, b).map(|x| model.bound(x));

    // where each op is forced, if anywhere
    let mut forced_at: Vec<Option<(usize, usize)>> = vec![None; n];
    for i in 0..n {
        for k in 0..inst.num_machines() {
            for b in 0..model.slots(k) {
                if xb(i, k, b).is_some_and(|bd| bd.lb >= 1) {
                    if forced_at[i].is_some() {
                        return Ok(Shape::Infeasible);
                    }
                    forced_at[i] = Some((k, b));
                }
            }
        }
    }

    let mut machines = Vec::with_capacity(inst.num_machines());
    let mut runs: Vec<Run> = Vec::new();
    for k in 0..inst.num_machines() {
        let mut items = Vec::new();
        let mut current: Option<usize> = None;
        for b in 0..model.slots(k) {
            let y = |f: usize| model.bound(model.y(f, k, b));
            let forced: Vec<usize> = (0..n).filter(|&i| forced_at[i] == Some((k, b))).collect();
            let allowed: Vec<bool> = (0..n)
                .map(|i| {
                    forced_at[i].is_none()
                        && xb(i, k, b).is_some_and(|bd| bd.lb == 0 && bd.contains(1))
                        && y(inst.op(i).family).contains(1)
                })
                .collect();
            let any_allowed = allowed.iter().any(|&a| a);
            if !forced.is_empty() {
                if any_allowed {
                    return Err(Unsupported(format!("slot {} of machine {} is partly fixed", b + 1, k + 1)));
                }
                let family = inst.op(forced[0]).family;
                if forced.iter().any(|&i| inst.op(i).family != family)
                    || !y(family).contains(1)
                    || (0..nf).any(|f| f != family && y(f).lb >= 1)
                    || forced.iter().map(|&i| inst.op(i).load).sum::<i64>() > inst.machines()[k].capacity
                {
                    return Ok(Shape::Infeasible);
                }
                let ops = order_fixed(model, &rank, forced)?;
                items.push(Item::Fixed(FixedBatch { family, ops }));
                current = None;
                continue;
            }
            if (0..nf).any(|f| y(f).lb >= 1) {
                return Err(Unsupported(format!("slot {} of machine {} has a fixed family but no operation", b + 1, k + 1)));
            }
            if !any_allowed {
                // transparent: an empty slot takes no time
                continue;
            }
            match current {
                Some(r) if runs[r].allowed == allowed => runs[r].capacity += 1,
                _ => {
                    runs.push(Run { machine: k, capacity: 1, allowed });
                    current = Some(runs.len() - 1);
                    items.push(Item::Run(runs.len() - 1));
                }
            }
        }
        machines.push(items);
    }

    let may_precede = match formulation {
        Formulation::Wspt => None,
        Formulation::Sequencing => {
            let mut m = vec![vec![false; n]; n];
            for h in 0..n {
                for i in 0..n {
                    if let Some(z) = model.z(h, i) {
                        let bd = model.bound(z);
                        m[h][i] = bd.contains(1);
                        if bd.lb >= 1 && (forced_at[h].is_none() || forced_at[h] != forced_at[i]) {
                            return Err(Unsupported(format!("order of operations {} and {} is fixed outside a fixed batch", h + 1, i + 1)));
                        }
                    }
                }
            }
            Some(m)
        }
    };

    let mut runs_of_op = vec![Vec::new(); n];
    for (r, run) in runs.iter().enumerate() {
        for i in 0..n {
            if run.allowed[i] {
                runs_of_op[i].push(r);
            }
        }
    }
    let mut free: Vec<usize> = (0..n).filter(|&i| forced_at[i].is_none()).collect();
    if free.iter().any(|&i| runs_of_op[i].is_empty()) {
        return Ok(Shape::Infeasible);
    }
    // branch in the order the incumbent starts them
    let start_key: Vec<(Time, usize, usize)> = match warm.and_then(|w| evaluate(inst, w).ok().map(|ev| (w, ev))) {
        Some((w, ev)) => {
            let mut key = vec![(Time::MAX, usize::MAX, 0); n];
            for (k, batches) in w.machines.iter().enumerate() {
                for (b, batch) in batches.iter().enumerate() {
                    for (pos, &i) in batch.ops.iter().enumerate() {
                        key[i] = (ev.batch_start[k][b], pos, i);
                    }
                }
            }
            key
        }
        None => (0..n).map(|i| (inst.op(i).release, 0, i)).collect(),
    };
    free.sort_by_key(|&i| start_key[i]);

    Ok(Shape::Ready(Problem {
        inst,
        rank,
        may_precede,
        machines,
        runs,
        runs_of_op,
        free,
        job_weight: inst.jobs().iter().map(|j| j.weight).collect(),
    }))
}

/// Processing order of a fixed batch: by rank (WSPT) or by the number of
/// fixed `Z` predecessors (sequencing).
fn order_fixed(model: &BatchModel<'_>, rank: &[usize], mut ops: Vec<usize>) -> Result<Vec<usize>, Unsupported> {
    match model.formulation() {
        Formulation::Wspt => {
            ops.sort_by_key(|&i| rank[i]);
            Ok(ops)
        }
        Formulation::Sequencing => {
            let fixed_before = |h: usize, i: usize| model.z(h, i).is_some_and(|z| model.bound(z).lb >= 1);
            let mut keyed = Vec::with_capacity(ops.len());
            for &i in &ops {
                for &h in &ops {
                    if h < i && fixed_before(h, i) == fixed_before(i, h) {
                        return Err(Unsupported(format!("order of fixed operations {} and {} is open", h + 1, i + 1)));
                    }
                }
                keyed.push((ops.iter().filter(|&&h| fixed_before(h, i)).count(), i));
            }
            keyed.sort_unstable();
            Ok(keyed.into_iter().map(|(_, i)| i).collect())
        }
    }
}

struct Search<'p, 'a> {
    p: &'p Problem<'a>,
    state: Vec<Vec<OpenBatch>>,
    placed: Vec<bool>,
    best: i64,
    best_state: Option<Vec<Vec<OpenBatch>>>,
    nodes: u64,
    limits: Limits,
    started: Instant,
    aborted: bool,
    // scratch
    completion: Vec<Time>,
    run_avail: Vec<Time>,
    job_lb: Vec<Time>,
}

impl<'p, 'a> Search<'p, 'a> {
    /// Lower bound of the current node (exact when every op is placed).
    fn bound(&mut self) -> i64 {
        let p = self.p;
        let inst = p.inst;
        for (k, items) in p.machines.iter().enumerate() {
            let mut t = inst.machines()[k].release;
            for item in items {
                match item {
                    Item::Fixed(fb) => t = self.time_batch(t, fb.family, &fb.ops),
                    Item::Run(r) => {
                        self.run_avail[*r] = t;
                        for ob in &self.state[*r] {
                            t = time_batch(inst, &mut self.completion, t, ob.family, &ob.ops);
                        }
                    }
                }
            }
        }
        self.job_lb.iter_mut().for_each(|c| *c = 0);
        for (j, job) in inst.jobs().iter().enumerate() {
            let mut c = 0;
            for &i in &job.ops {
                let ci = if self.placed[i] {
                    self.completion[i]
                } else {
                    let op = inst.op(i);
                    let tail = inst.setup_of_op(i) + op.processing;
                    p.runs_of_op[i].iter().map(|&r| self.run_avail[r].max(op.release) + tail).min().expect("checked")
                };
                c = c.max(ci);
            }
            self.job_lb[j] = c;
        }
        self.job_lb.iter().zip(&p.job_weight).map(|(c, w)| c * w).sum()
    }

    fn time_batch(&mut self, t: Time, family: usize, ops: &[usize]) -> Time {
        time_batch(self.p.inst, &mut self.completion, t, family, ops)
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.limits.nodes.is_some_and(|n| self.nodes >= n)
            || self.limits.time.is_some_and(|d| self.started.elapsed() >= d)
        {
            self.aborted = true;
        }
        self.aborted
    }

    fn dfs(&mut self, depth: usize) {
        if self.out_of_budget() {
            return;
        }
        self.nodes += 1;
        let p = self.p;
        if depth == p.free.len() {
            let obj = self.bound();
            if obj < self.best {
                self.best = obj;
                self.best_state = Some(self.state.clone());
            }
            return;
        }
        let i = p.free[depth];
        let moves = self.moves(i);
        self.placed[i] = true;
        let mut scored: Vec<(i64, usize)> = Vec::with_capacity(moves.len());
        for (n, mv) in moves.iter().enumerate() {
            self.apply(i, mv);
            let lb = self.bound();
            self.undo(i, mv);
            if lb < self.best {
                scored.push((lb, n));
            }
        }
        scored.sort_unstable();
        for (lb, n) in scored {
            if lb >= self.best {
                break;
            }
            self.apply(i, &moves[n]);
            self.dfs(depth + 1);
            self.undo(i, &moves[n]);
            if self.aborted {
                break;
            }
        }
        self.placed[i] = false;
    }

    fn moves(&self, i: usize) -> Vec<Move> {
        let p = self.p;
        let inst = p.inst;
        let op = inst.op(i);
        let mut out = Vec::new();
        for &r in &p.runs_of_op[i] {
            let cap = inst.machines()[p.runs[r].machine].capacity;
            let batches = &self.state[r];
            for (b, ob) in batches.iter().enumerate() {
                if ob.family != op.family || ob.load + op.load > cap {
                    continue;
                }
                match &p.may_precede {
                    None => {
                        let pos = ob.ops.partition_point(|&h| p.rank[h] < p.rank[i]);
                        out.push(Move::Join { run: r, batch: b, pos });
                    }
                    Some(mp) => {
                        for pos in 0..=ob.ops.len() {
                            if ob.ops[..pos].iter().all(|&h| mp[h][i]) && ob.ops[pos..].iter().all(|&h| mp[i][h]) {
                                out.push(Move::Join { run: r, batch: b, pos });
                            }
                        }
                    }
                }
            }
            if batches.len() < p.runs[r].capacity {
                for gap in 0..=batches.len() {
                    out.push(Move::Open { run: r, gap });
                }
            }
        }
        out
    }

    fn apply(&mut self, i: usize, mv: &Move) {
        let op = self.p.inst.op(i);
        match *mv {
            Move::Join { run, batch, pos } => {
                let ob = &mut self.state[run][batch];
                ob.ops.insert(pos, i);
                ob.load += op.load;
            }
            Move::Open { run, gap } => {
                self.state[run].insert(gap, OpenBatch { family: op.family, load: op.load, ops: vec![i] });
            }
        }
    }

    fn undo(&mut self, i: usize, mv: &Move) {
        let op = self.p.inst.op(i);
        match *mv {
            Move::Join { run, batch, pos } => {
                let ob = &mut self.state[run][batch];
                ob.ops.remove(pos);
                ob.load -= op.load;
            }
            Move::Open { run, gap } => {
                self.state[run].remove(gap);
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Join { run: usize, batch: usize, pos: usize },
    Open { run: usize, gap: usize },
}

/// Times one batch starting no earlier than `t`; writes member completions
/// and returns the batch end.
fn time_batch(inst: &Instance, completion: &mut [Time], t: Time, family: usize, ops: &[usize]) -> Time {
    let start = ops.iter().map(|&i| inst.op(i).release).fold(t, Time::max);
    let mut c = start + inst.families()[family].setup;
    for &i in ops {
        c += inst.op(i).processing;
        completion[i] = c;
    }
    c
}

fn to_schedule(p: &Problem<'_>, state: &[Vec<OpenBatch>]) -> Schedule {
    let mut sched = Schedule::empty(p.inst.num_machines());
    for (k, items) in p.machines.iter().enumerate() {
        for item in items {
            match item {
                Item::Fixed(fb) => sched.machines[k].push(Batch::new(fb.family, fb.ops.clone())),
                Item::Run(r) => {
                    sched.machines[k].extend(state[*r].iter().map(|ob| Batch::new(ob.family, ob.ops.clone())))
                }
            }
        }
    }
    sched
}

/// Runs the branch and bound. `warm` (a feasible point of `model`) seeds
/// the upper bound and the branching order.
pub fn solve_bnb(model: &BatchModel<'_>, warm: Option<&Schedule>, limits: Limits) -> Result<SolveResult, Unsupported> {
    let started = Instant::now();
    let inst = model.instance();
    let warm_obj = warm.map(|w| evaluate(inst, w).expect("feasible warm start").twct);
    let p = match prepare(model, warm)? {
        Shape::Ready(p) => p,
        Shape::Infeasible => {
            return Ok(SolveResult { status: Status::InfeasibleProven, incumbent: None, objective: None, bound: i64::MAX, nodes: 0 })
        }
    };
    let mut search = Search {
        p: &p,
        state: vec![Vec::new(); p.runs.len()],
        placed: vec![false; inst.num_ops()],
        best: warm_obj.unwrap_or(i64::MAX),
        best_state: None,
        nodes: 0,
        limits,
        started,
        aborted: false,
        completion: vec![0; inst.num_ops()],
        run_avail: vec![0; p.runs.len()],
        job_lb: vec![0; inst.num_jobs()],
    };
    for i in 0..inst.num_ops() {
        search.placed[i] = !p.free.contains(&i);
    }
    let root = search.bound();
    search.dfs(0);

    let nodes = search.nodes;
    let found = search.best_state.as_ref().map(|s| (to_schedule(&p, s), search.best));
    let incumbent = found.or_else(|| warm.cloned().zip(warm_obj));
    Ok(match (search.aborted, incumbent) {
        (false, Some((s, obj))) => {
            SolveResult { status: Status::Optimal, incumbent: Some(s), objective: Some(obj), bound: obj, nodes }
        }
        (false, None) => {
            SolveResult { status: Status::InfeasibleProven, incumbent: None, objective: None, bound: i64::MAX, nodes }
        }
        (true, Some((s, obj))) => SolveResult {
            status: Status::FeasibleTimeLimit,
            incumbent: Some(s),
            objective: Some(obj),
            bound: root.min(obj),
            nodes,
        },
        (true, None) => SolveResult { status: Status::Unknown, incumbent: None, objective: None, bound: root, nodes },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::wmct_wavga;
    use crate::instance::{example_instance, Family, Job, Machine, Operation};
    use crate::mip::{FreeSet, ModelConfig};
    use crate::oracle::brute_force_optimum;
    use crate::precedence::{wspt_order, Theta};
    use crate::schedule::{check_feasibility, example_schedule};

    fn tiny() -> Instance {
        Instance::new(
            vec![
                Operation { processing: 4, release: 0, load: 30, family: 0, eligible: vec![0, 1] },
                Operation { processing: 6, release: 2, load: 40, family: 0, eligible: vec![0] },
                Operation { processing: 3, release: 0, load: 50, family: 1, eligible: vec![1] },
                Operation { processing: 5, release: 5, load: 20, family: 1, eligible: vec![0, 1] },
            ],
            vec![Job { weight: 3, ops: vec![0, 2] }, Job { weight: 1, ops: vec![1, 3] }, Job { weight: 2, ops: vec![3] }],
            vec![Machine { release: 0, capacity: 80 }, Machine { release: 1, capacity: 80 }],
            vec![Family { setup: 2 }, Family { setup: 3 }],
        )
        .unwrap()
    }

    #[test]
    fn full_sequencing_model_matches_oracle() {
        let inst = tiny();
        let (opt, _) = brute_force_optimum(&inst).unwrap();
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        let r = solve_bnb(&m, None, Limits::unlimited()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert_eq!(r.objective, Some(opt));
        let s = r.incumbent.unwrap();
        assert!(check_feasibility(&inst, &s).is_empty());
        assert_eq!(evaluate(&inst, &s).unwrap().twct, opt);
        assert!(m.feasible_point(&s).is_some());
    }

    #[test]
    fn fully_fixed_model_is_instant() {
        let inst = example_instance();
        let s = example_schedule();
        let theta = Theta::from_schedule(inst.num_ops(), &s);
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Wspt), Some(wspt_order(&inst, Some(&theta)))).unwrap();
        let r = m.restrict_and_fix(&s, &FreeSet::default(), None).unwrap();
        let res = solve_bnb(&r, Some(&s), Limits::unlimited()).unwrap();
        assert_eq!(res.status, Status::Optimal);
        assert_eq!(res.objective, Some(7634));
        assert!(res.nodes <= 1);
    }

    #[test]
    fn restricted_solution_is_a_model_point() {
        let inst = example_instance();
        let s = wmct_wavga(&inst);
        let theta = Theta::from_schedule(inst.num_ops(), &s);
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Wspt), Some(wspt_order(&inst, Some(&theta)))).unwrap();
        let avail: Vec<usize> = s.machines.iter().map(|b| b.len() + 1).collect();
        let free = FreeSet::from_batches(&s, [(0, 0), (1, 0), (3, 1), (3, 2), (2, s.machines[2].len())]);
        let r = m.restrict_and_fix(&s, &free, Some(&avail)).unwrap();
        let res = solve_bnb(&r, Some(&s), Limits::unlimited()).unwrap();
        assert_eq!(res.status, Status::Optimal);
        let out = res.incumbent.unwrap();
        assert!(r.feasible_point(&out).is_some());
        assert!(res.objective.unwrap() <= evaluate(&inst, &s).unwrap().twct);
        assert_eq!(evaluate(&inst, &out).unwrap().twct, res.objective.unwrap());
    }

    #[test]
    fn node_limit_reports_feasible_with_valid_bound() {
        let inst = example_instance();
        let s = wmct_wavga(&inst);
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        let res = solve_bnb(&m, Some(&s), Limits::nodes(50)).unwrap();
        assert_eq!(res.status, Status::FeasibleTimeLimit);
        assert!(res.bound <= res.objective.unwrap());
        assert!(res.objective.unwrap() <= evaluate(&inst, &s).unwrap().twct);
    }

    #[test]
    fn no_eligible_slot_is_infeasible() {
        let inst = tiny();
        let m = BatchModel::new(&inst, ModelConfig::new(Formulation::Sequencing), None).unwrap();
        let mut r = m.clone();
        for k in 0..2 {
            for b in 0..r.slots(k) {
                if let Some(x) = r.x(3, k, b) {
                    r.set_bound(x, crate::mip::Bound::fixed(0));
                }
            }
        }
        let res = solve_bnb(&r, None, Limits::unlimited()).unwrap();
        assert_eq!(res.status, Status::InfeasibleProven);
    }
}
