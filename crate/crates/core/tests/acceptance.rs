//! Acceptance suite: every criterion prints one PASS/FAIL line; the
//! process fails if any criterion does.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use batchsched::bench::{run_bench, BenchConfig, BenchInstance};
use batchsched::codec::{instance_to_json, schedule_to_json};
use batchsched::construct::{randomized_construct, wmct_wavga};
use batchsched::instance::example_instance;
use batchsched::instgen::{generate, GenParams};
use batchsched::mip::{BatchModel, Formulation, ModelConfig};
use batchsched::oracle::brute_force_optimum;
use batchsched::precedence::wspt_order;
use batchsched::schedule::{check_feasibility, evaluate, example_schedule, twct};
use batchsched::search::{
    batch_windows, group_sizes, multi_batches_relocate, relocate_size, run, vnd, window_ranges, Matheuristic,
    Params, Phase, SearchState,
};
use batchsched::subsolve::{solve, Limits, SolveRequest, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_example() -> Outcome {
    let inst = example_instance();
    let sched = example_schedule();
    let ev = evaluate(&inst, &sched).map_err(|e| e.to_string())?;
    ensure(ev.job_completion == [35, 60, 68, 54, 90], || format!("job completions {:?}", ev.job_completion))?;
    ensure(ev.twct == 7634, || format!("TWCT {}", ev.twct))?;
    const REPS: u32 = 100;
    let t = Instant::now();
    for _ in 0..REPS {
        std::hint::black_box(evaluate(std::hint::black_box(&inst), std::hint::black_box(&sched)).unwrap());
    }
    let per_call = t.elapsed() / REPS;
    ensure(per_call < Duration::from_millis(1), || format!("evaluate takes {per_call:?}"))?;
    Ok(format!("C = {:?}, TWCT {}, {:.1} us per evaluation", ev.job_completion, ev.twct, per_call.as_secs_f64() * 1e6))
}

fn full_optimum(inst: &batchsched::Instance, f: Formulation) -> Result<i64, String> {
    let prec = (f == Formulation::Wspt).then(|| wspt_order(inst, None));
    let model = BatchModel::new(inst, ModelConfig::new(f), prec).map_err(|e| e.to_string())?;
    let req = SolveRequest::new(&model).limits(Limits { time: Some(Duration::from_secs(60)), nodes: None });
    let r = solve(&req).map_err(|e| e.to_string())?;
    ensure(r.status == Status::Optimal, || format!("{f} solve ended {}", r.status))?;
    Ok(r.objective.expect("optimal has an objective"))
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    for s in 0..50u64 {
        let (o, m) = (1 + (s % 5) as usize, 1 + (s / 5 % 2) as usize);
        let inst = common::instance(o, m, 7_000 + s);
        let (opt, _) = brute_force_optimum(&inst).map_err(|e| e.to_string())?;
        let seq = full_optimum(&inst, Formulation::Sequencing)?;
        ensure(seq == opt, || format!("instance {s} ({o} ops, {m} machines): Batch-S {seq}, brute force {opt}"))?;
        let wspt = full_optimum(&inst, Formulation::Wspt)?;
        ensure(wspt >= seq, || format!("instance {s}: Batch-WSPT {wspt} < Batch-S {seq}"))?;
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!("50/50 instances match, WSPT >= S everywhere, {:.2}s", took.as_secs_f64()))
}

fn encoding_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    for n in 0..200u64 {
        let o = rng.gen_range(1..=25);
        let m = rng.gen_range(1..=4);
        let inst = common::instance(o, m, 9_000 + n);
        let sched = common::random_schedule(&inst, &mut rng);
        ensure(check_feasibility(&inst, &sched).is_empty(), || format!("schedule {n} is not feasible"))?;
        let value = twct(&inst, &sched);
        for f in [Formulation::Wspt, Formulation::Sequencing] {
            let model = common::model_for(&inst, f, &sched);
            let x = model.encode(&sched).map_err(|e| format!("schedule {n}, {f}: {e}"))?;
            let violated = model.check(&x);
            ensure(violated.is_empty(), || format!("schedule {n}, {f}: {} violated, first {}", violated.len(), violated[0].name))?;
            let obj = model.objective_value(&x);
            ensure(obj == value, || format!("schedule {n}, {f}: objective {obj}, evaluate {value}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} encodings satisfy every constraint with exact objectives"))
}

fn monotone_search() -> Outcome {
    let mut params = Params::default();
    params.make_deterministic();
    let mut calls = 0;
    for s in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let inst = common::instance(rng.gen_range(4..=12), rng.gen_range(1..=3), 11_000 + s);
        let f = if s % 2 == 0 { Formulation::Wspt } else { Formulation::Sequencing };
        let start = common::random_schedule(&inst, &mut rng);
        let mut st = SearchState::new(&inst, params.clone(), f, s);
        st.init_mb(&start);
        let steps: [(&str, fn(&mut SearchState<'_>, batchsched::Schedule) -> batchsched::Schedule); 3] =
            [("relocate", multi_batches_relocate), ("windows", batch_windows), ("vnd", vnd)];
        let mut current = start;
        for (name, step) in steps {
            let before = twct(&inst, &current);
            let after = step(&mut st, current);
            ensure(check_feasibility(&inst, &after).is_empty(), || format!("run {s}: {name} returned an infeasible schedule"))?;
            let v = twct(&inst, &after);
            ensure(v <= before, || format!("run {s}: {name} went from {before} to {v}"))?;
            current = after;
            calls += 1;
        }
    }
    let mut ils_params = params.clone();
    ils_params.delta = 0.0;
    ils_params.omega_max = 4;
    let mut accepted = 0;
    for s in 0..100u64 {
        let inst = common::instance(6 + (s % 7) as usize, 1 + (s % 3) as usize, 12_000 + s);
        let out = run(&inst, "ils1".parse().unwrap(), &ils_params, s);
        let seq: Vec<i64> = out.log.of(Phase::Accept).map(|e| e.current).collect();
        ensure(seq.windows(2).all(|w| w[1] < w[0]), || format!("ILS run {s}: accepted values {seq:?}"))?;
        accepted += seq.len();
    }
    Ok(format!("{calls} neighbourhood calls never worsened; 100 ILS runs, {accepted} acceptances, strictly decreasing"))
}

fn iteration_structure() -> Outcome {
    let ranges: Vec<String> = window_ranges(90, 30).iter().map(|(a, b)| format!("({a},{b})")).collect();
    ensure(ranges == ["(60,90)", "(45,75)", "(30,60)", "(15,45)", "(0,30)"], || format!("windows {ranges:?}"))?;
    let nb = relocate_size(0.30, 17);
    let sizes = group_sizes(17, nb);
    ensure(nb == 6 && sizes == [6, 6, 5], || format!("NB {nb}, groups {sizes:?}"))?;
    let inst = example_instance();
    let mut st = SearchState::new(&inst, Params::default(), Formulation::Wspt, 0);
    st.init_mb(&example_schedule());
    ensure(st.mb[0] == 4, || format!("MB_1 = {}", st.mb[0]))?;
    Ok(format!("windows {}, relocate groups {sizes:?}, MB = {:?}", ranges.join(" "), st.mb))
}

fn matheuristic_quality() -> Outcome {
    let params = Params::default();
    let methods: [Matheuristic; 2] = ["ils3".parse().unwrap(), "grasp3".parse().unwrap()];
    let mut slowest = Duration::ZERO;
    let mut gains = [0.0f64; 2];
    for s in 0..20u64 {
        let inst = generate(&GenParams::new(15, 4, s));
        let constructive = twct(&inst, &wmct_wavga(&inst));
        for (n, mh) in methods.iter().enumerate() {
            let t = Instant::now();
            let out = run(&inst, *mh, &params, s);
            let took = t.elapsed();
            slowest = slowest.max(took);
            ensure(took < Duration::from_secs(120), || format!("{mh} on instance {s} took {took:?}"))?;
            ensure(check_feasibility(&inst, &out.schedule).is_empty(), || format!("{mh} on instance {s}: infeasible"))?;
            ensure(out.twct <= constructive, || format!("{mh} on instance {s}: {} > constructive {constructive}", out.twct))?;
            gains[n] += 100.0 * (constructive - out.twct) as f64 / constructive as f64 / 20.0;
        }
    }
    let mut hits = [0usize; 2];
    const ORACLE_SET: u64 = 50;
    for s in 0..ORACLE_SET {
        let inst = generate(&GenParams::new(2 + (s % 5) as usize, 1 + (s % 2) as usize, s));
        let (opt, _) = brute_force_optimum(&inst).map_err(|e| e.to_string())?;
        for (n, mh) in methods.iter().enumerate() {
            if run(&inst, *mh, &params, s).twct == opt {
                hits[n] += 1;
            }
        }
    }
    let rates = hits.map(|h| 100.0 * h as f64 / ORACLE_SET as f64);
    let detail = format!(
        "slowest run {:.2}s; mean gain over constructive {:.2}% / {:.2}%; optimum hit rate {:.0}% / {:.0}% (ILS-Math3 / GRASP-Math3)",
        slowest.as_secs_f64(),
        gains[0],
        gains[1],
        rates[0],
        rates[1]
    );
    ensure(rates.iter().all(|&r| r >= 90.0), || detail.clone())?;
    Ok(detail)
}

fn determinism() -> Outcome {
    let p = GenParams::new(12, 3, 2024);
    ensure(instance_to_json(&generate(&p)) == instance_to_json(&generate(&p)), || "instances differ".into())?;
    let inst = generate(&p);
    let mut params = Params::default();
    params.make_deterministic();
    params.omega_max = 3;
    for mh in Matheuristic::all() {
        let a = run(&inst, mh, &params, 7);
        let b = run(&inst, mh, &params, 7);
        ensure(schedule_to_json(&a.schedule) == schedule_to_json(&b.schedule), || format!("{mh}: schedules differ"))?;
        ensure(a.log.to_string() == b.log.to_string(), || format!("{mh}: logs differ"))?;
    }
    let instances = [(6, 2, 1u64), (9, 3, 2)]
        .iter()
        .map(|&(o, m, s)| {
            let g = GenParams::new(o, m, s);
            BenchInstance { name: g.name(1), instance: generate(&g) }
        })
        .collect();
    let mut cfg = BenchConfig::new(instances, vec!["ils3".parse().unwrap(), "grasp3".parse().unwrap()]);
    cfg.runs = 3;
    cfg.params = params;
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    let mut files = Vec::new();
    for d in &dirs {
        let report = run_bench(&cfg).map_err(|e| e.to_string())?;
        let written = report.write_to(d.path()).map_err(|e| e.to_string())?;
        files.push(written.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    ensure(files[0] == files[1], || "bench reports differ".into())?;
    Ok(format!(
        "instances, schedules and logs of 6 methods, and {} report files ({} bytes) identical",
        files[0].len(),
        files[0].iter().map(Vec::len).sum::<usize>()
    ))
}

fn grasp_degeneracy() -> Outcome {
    for s in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let inst = generate(&GenParams::new(rng.gen_range(1..=30), rng.gen_range(1..=5), 13_000 + s));
        let greedy = wmct_wavga(&inst);
        let r = randomized_construct(&inst, 0.0, &mut rng);
        ensure(r == greedy, || format!("instance {s}: alpha = 0 differs from the greedy construction"))?;
    }
    Ok("20/20 instances identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 golden example", golden_example),
        ("2 oracle equivalence", oracle_equivalence),
        ("3 encoding soundness", encoding_soundness),
        ("4 monotone search", monotone_search),
        ("5 iteration structure", iteration_structure),
        ("6 matheuristic quality", matheuristic_quality),
        ("7 determinism", determinism),
        ("8 GRASP degeneracy", grasp_degeneracy),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  criterion {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
