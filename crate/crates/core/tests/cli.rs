use std::path::Path;
use std::process::{Command, Output};

use batchsched::codec::{instance_to_json, schedule_from_json, schedule_to_json};
use batchsched::instance::example_instance;
use batchsched::schedule::example_schedule;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_batchsched")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn fixture(dir: &Path) -> (String, String) {
    let inst = dir.join("example.json");
    let sched = dir.join("figure.json");
    std::fs::write(&inst, instance_to_json(&example_instance())).unwrap();
    std::fs::write(&sched, schedule_to_json(&example_schedule())).unwrap();
    (inst.display().to_string(), sched.display().to_string())
}

#[test]
fn eval_prints_completion_times() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, sched) = fixture(dir.path());
    let out = bin(&["eval", &inst, &sched]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), "C1 = 35\nC2 = 60\nC3 = 68\nC4 = 54\nC5 = 90\nCmax = 90\nTWCT = 7634\n");
}

#[test]
fn errors_carry_a_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = fixture(dir.path());

    let missing = bin(&["eval", "/nonexistent/i.json", "/nonexistent/s.json"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(text(&missing.stderr).starts_with("error[io]:"));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let parse = bin(&["eval", garbage.to_str().unwrap(), garbage.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(4));
    assert!(text(&parse.stderr).starts_with("error[parse]:"));

    let mut bad = example_schedule();
    bad.machines[0][0].ops.pop();
    bad.compact();
    let bad_path = dir.path().join("bad.json");
    std::fs::write(&bad_path, schedule_to_json(&bad)).unwrap();
    let infeasible = bin(&["gantt", &inst, bad_path.to_str().unwrap()]);
    assert_eq!(infeasible.status.code(), Some(6));
    assert!(text(&infeasible.stderr).starts_with("error[infeasible-schedule]:"));
    assert!(text(&infeasible.stderr).contains("not scheduled"));

    let usage = bin(&["solve"]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(text(&usage.stderr).starts_with("error[usage]:"));
}

#[test]
fn solve_gantt_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = fixture(dir.path());
    let sched = dir.path().join("ils.json");
    let out = bin(&[
        "--deterministic",
        "--param",
        "omega_max=1",
        "--seed",
        "2",
        "solve",
        &inst,
        "--method",
        "ils",
        "--variant",
        "1",
        "-o",
        sched.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stderr).starts_with("ILS-Math1: TWCT "));
    let s = schedule_from_json(&std::fs::read_to_string(&sched).unwrap(), 4).unwrap();
    let v = batchsched::evaluate(&example_instance(), &s).unwrap().twct;
    assert!(v <= 8417, "{v}");

    let svg = bin(&["gantt", &inst, sched.to_str().unwrap(), "--format", "svg"]);
    assert!(svg.status.success());
    assert!(text(&svg.stdout).contains("<svg"));

    let lp = dir.path().join("m.lp");
    let exp = bin(&["export-lp", &inst, "--formulation", "wspt", "-o", lp.to_str().unwrap()]);
    assert!(exp.status.success(), "{}", text(&exp.stderr));
    assert!(std::fs::read_to_string(&lp).unwrap().starts_with("Minimize"));
}

#[test]
fn gen_and_bench_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inst_dir = dir.path().join("inst");
    let g = bin(&["--seed", "5", "gen", "--ops", "5", "--machines", "2", "--replicates", "2", "--out-dir", inst_dir.to_str().unwrap()]);
    assert!(g.status.success(), "{}", text(&g.stderr));
    let files: Vec<String> = text(&g.stdout).lines().map(str::to_string).collect();
    assert_eq!(files.len(), 2);
    assert!(files[0].ends_with("o5_m2_111_1.json"));

    let out_dir = dir.path().join("report");
    let mut args = vec!["--deterministic", "--param", "omega_max=1", "bench", "--instances"];
    args.extend(files.iter().map(String::as_str));
    args.extend(["--methods", "ils1,grasp1", "--runs", "3", "--out-dir", out_dir.to_str().unwrap()]);
    let b = bin(&args);
    assert!(b.status.success(), "{}", text(&b.stderr));
    let runs = std::fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 3);
    assert!(runs.lines().next().unwrap().contains("rpd_vs_best_found"));
    assert!(out_dir.join("aggregate.csv").exists());
    assert!(out_dir.join("evolution.csv").exists());
}
