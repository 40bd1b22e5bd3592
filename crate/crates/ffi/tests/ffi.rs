use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use batchsched::codec::{instance_to_json, schedule_to_json};
use batchsched::instance::example_instance;
use batchsched::schedule::example_schedule;
use batchsched_ffi::*;

fn last_error() -> String {
    let p = bs_last_error_message();
    assert!(!p.is_null(), "no error message recorded");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn example() -> *mut BsInstance {
    let json = c(&instance_to_json(&example_instance()));
    let mut inst = ptr::null_mut();
    assert_eq!(bs_instance_from_json(json.as_ptr(), &mut inst), BsStatus::Ok);
    inst
}

#[test]
fn evaluates_the_example_schedule() {
    unsafe {
        let inst = example();
        assert_eq!(bs_instance_num_ops(inst), 15);
        assert_eq!(bs_instance_num_jobs(inst), 5);
        assert_eq!(bs_instance_num_machines(inst), 4);
        let json = c(&schedule_to_json(&example_schedule()));
        let mut sched = ptr::null_mut();
        assert_eq!(bs_schedule_from_json(inst, json.as_ptr(), &mut sched), BsStatus::Ok);
        assert!(bs_last_error_message().is_null());
        let mut twct = 0;
        let mut cj = [0i64; 5];
        assert_eq!(bs_schedule_evaluate(inst, sched, &mut twct, cj.as_mut_ptr(), cj.len()), BsStatus::Ok);
        assert_eq!(twct, 7634);
        assert_eq!(cj, [35, 60, 68, 54, 90]);

        let mut out = ptr::null_mut();
        assert_eq!(bs_schedule_to_json(sched, &mut out), BsStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), schedule_to_json(&example_schedule()));
        bs_string_free(out);
        bs_schedule_free(sched);
        bs_instance_free(inst);
    }
}

#[test]
fn solve_never_loses_to_the_construction() {
    unsafe {
        let mut inst = ptr::null_mut();
        let g = bs_gen_params_default(10, 3, 4);
        assert_eq!(bs_instance_generate(&g, &mut inst), BsStatus::Ok);
        let mut greedy = ptr::null_mut();
        assert_eq!(bs_schedule_construct(inst, &mut greedy), BsStatus::Ok);
        let mut base = 0;
        assert_eq!(bs_schedule_evaluate(inst, greedy, &mut base, ptr::null_mut(), 0), BsStatus::Ok);

        let mut p = bs_params_default();
        p.deterministic = true;
        p.omega_max = 2;
        let mut results = Vec::new();
        for method in [BsMethod::Ils, BsMethod::Grasp] {
            for _ in 0..2 {
                let (mut s, mut twct) = (ptr::null_mut(), 0);
                assert_eq!(bs_solve(inst, method, 3, &p, 11, &mut s, &mut twct), BsStatus::Ok);
                let mut check = 0;
                assert_eq!(bs_schedule_evaluate(inst, s, &mut check, ptr::null_mut(), 0), BsStatus::Ok);
                assert_eq!(check, twct);
                assert!(twct <= base, "{twct} > {base}");
                results.push(twct);
                bs_schedule_free(s);
            }
        }
        // deterministic mode repeats itself
        assert_eq!(results[0], results[1]);
        assert_eq!(results[2], results[3]);
        bs_schedule_free(greedy);
        bs_instance_free(inst);
    }
}

#[test]
fn instance_json_round_trips() {
    unsafe {
        let inst = example();
        let mut out = ptr::null_mut();
        assert_eq!(bs_instance_to_json(inst, &mut out), BsStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(bs_instance_from_json(out, &mut again), BsStatus::Ok);
        let mut out2 = ptr::null_mut();
        assert_eq!(bs_instance_to_json(again, &mut out2), BsStatus::Ok);
        assert_eq!(CStr::from_ptr(out), CStr::from_ptr(out2));
        bs_string_free(out);
        bs_string_free(out2);
        bs_instance_free(again);
        bs_instance_free(inst);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(bs_instance_from_json(ptr::null(), &mut inst), BsStatus::NullArgument);
        assert!(inst.is_null());
        assert!(last_error().contains("json"));

        let garbage = c("{ nope");
        assert_eq!(bs_instance_from_json(garbage.as_ptr(), &mut inst), BsStatus::ParseError);
        assert!(last_error().contains("line 1"));

        let bad_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(bs_instance_from_json(bad_utf8.as_ptr().cast(), &mut inst), BsStatus::InvalidUtf8);

        // an operation larger than every machine it may run on
        let oversized = c(r#"{"version": 1,
            "ops": [{"id":1,"p":5,"r":0,"l":90,"f":1,"eligible":[1]}],
            "jobs": [{"id":1,"w":1,"ops":[1]}],
            "machines": [{"id":1,"r":0,"q":80}],
            "families": [{"id":1,"s":2}]}"#);
        assert_eq!(bs_instance_from_json(oversized.as_ptr(), &mut inst), BsStatus::InvalidInstance);
        assert!(inst.is_null());

        let inst = example();
        let mut bad = example_schedule();
        bad.machines[0][0].ops.pop();
        bad.compact();
        let json = c(&schedule_to_json(&bad));
        let mut sched = ptr::null_mut();
        assert_eq!(bs_schedule_from_json(inst, json.as_ptr(), &mut sched), BsStatus::InfeasibleSchedule);
        assert!(sched.is_null());
        assert!(last_error().contains("not scheduled"), "{}", last_error());

        let mut s = ptr::null_mut();
        assert_eq!(bs_solve(inst, BsMethod::Ils, 4, ptr::null(), 0, &mut s, ptr::null_mut()), BsStatus::InvalidArgument);
        let mut p = bs_params_default();
        p.rho = 1.5;
        assert_eq!(bs_solve(inst, BsMethod::Ils, 1, &p, 0, &mut s, ptr::null_mut()), BsStatus::InvalidArgument);
        assert!(last_error().contains("rho"));
        assert_eq!(bs_solve(inst, BsMethod::Ils, 1, ptr::null(), 0, ptr::null_mut(), ptr::null_mut()), BsStatus::NullArgument);

        let g = bs_gen_params_default(0, 2, 1);
        assert_eq!(bs_instance_generate(&g, &mut s.cast()), BsStatus::InvalidArgument);

        // null handles are tolerated by the free functions and accessors
        bs_instance_free(ptr::null_mut());
        bs_schedule_free(ptr::null_mut());
        bs_string_free(ptr::null_mut());
        assert_eq!(bs_instance_num_ops(ptr::null()), 0);
        bs_instance_free(inst);
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "batchsched.h"

int main(void) {
    BsGenParams g = bs_gen_params_default(8, 2, 3);
    BsInstance *inst = NULL;
    if (bs_instance_generate(&g, &inst) != BS_STATUS_OK) return 1;
    BsSchedule *s = NULL;
    BsParams p = bs_params_default();
    p.deterministic = true;
    p.omega_max = 1;
    int64_t twct = 0, check = 0;
    if (bs_solve(inst, BS_METHOD_GRASP, 1, &p, 5, &s, &twct) != BS_STATUS_OK) return 2;
    if (bs_schedule_evaluate(inst, s, &check, NULL, 0) != BS_STATUS_OK || check != twct) return 3;
    if (bs_instance_from_json("{", &inst) != BS_STATUS_PARSE_ERROR || inst != NULL) return 4;
    printf("%lld\n", (long long)twct);
    bs_schedule_free(s);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    if !have_cc() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let syntax = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(syntax.status.success(), "{}", String::from_utf8_lossy(&syntax.stderr));

    let lib = target_dir().join("libbatchsched_ffi.a");
    if !lib.exists() {
        eprintln!("skipped link step: {} not built", lib.display());
        return;
    }
    let exe = dir.join("main");
    let link = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let twct: i64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!(twct > 0);
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("batchsched-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
