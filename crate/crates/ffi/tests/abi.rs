use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use lsms_ffi::*;

fn last_error() -> String {
    let p = lsms_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(h: u32, cap: u32, inv: u32, seed: u64) -> *mut LsmsInstance {
    let mut inst = ptr::null_mut();
    assert_eq!(
        unsafe { lsms_instance_generate(h, cap, inv, seed, &mut inst) },
        LsmsStatus::Ok
    );
    inst
}

#[test]
fn generate_solve_and_inspect() {
    let inst = generate(10, 2, 2, 0);
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(lsms_solve(inst, 1e-6, 100, false, &mut sol), LsmsStatus::Ok);
        let mut z = 0.0;
        assert_eq!(lsms_solution_objective(sol, &mut z), LsmsStatus::Ok);
        assert!(z > 0.0);
        let mut cycles = 0;
        assert_eq!(lsms_solution_cycles(sol, &mut cycles), LsmsStatus::Ok);
        assert_eq!(cycles, 2);
        let mut v = 0.0;
        assert_eq!(lsms_solution_proc_time(sol, 2, 9, &mut v), LsmsStatus::Ok);
        assert_eq!(v, 80.0);
        assert_eq!(
            lsms_solution_proc_time(sol, 3, 0, &mut v),
            LsmsStatus::InvalidInput
        );
        let mut violations = u32::MAX;
        assert_eq!(
            lsms_check_feasibility(inst, sol, 1e-6, &mut violations),
            LsmsStatus::Ok
        );
        assert_eq!(violations, 0);

        let mut json = ptr::null_mut();
        assert_eq!(lsms_solution_to_json(sol, &mut json), LsmsStatus::Ok);
        let value: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(value["solution"]["objective"].as_f64(), Some(z));
        assert_eq!(value["trace"]["cycles"].as_array().map(Vec::len), Some(2));
        lsms_string_free(json);
        lsms_solution_free(sol);
        lsms_instance_free(inst);
    }
}

#[test]
fn json_round_trip_through_handles() {
    let inst = generate(20, 0, 1, 7);
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(lsms_instance_to_json(inst, &mut json), LsmsStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(lsms_instance_from_json(json, &mut again), LsmsStatus::Ok);
        let mut json2 = ptr::null_mut();
        assert_eq!(lsms_instance_to_json(again, &mut json2), LsmsStatus::Ok);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(json2));
        lsms_string_free(json);
        lsms_string_free(json2);
        lsms_instance_free(again);
        lsms_instance_free(inst);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(
            lsms_instance_from_json(ptr::null(), &mut inst),
            LsmsStatus::NullPointer
        );
        assert!(last_error().contains("json"));

        let bad = CString::new("{ not json").unwrap();
        assert_eq!(
            lsms_instance_from_json(bad.as_ptr(), &mut inst),
            LsmsStatus::ParseError
        );
        assert!(inst.is_null());

        assert_eq!(
            lsms_instance_generate(15, 0, 0, 1, &mut inst),
            LsmsStatus::InvalidInput
        );
        assert_eq!(
            lsms_instance_generate(10, 3, 0, 1, &mut inst),
            LsmsStatus::InvalidInput
        );
        assert!(last_error().contains("level"));

        let good = generate(10, 0, 0, 1);
        let mut sol = ptr::null_mut();
        assert_eq!(
            lsms_solve(good, -1.0, 100, false, &mut sol),
            LsmsStatus::InvalidInput
        );
        assert_eq!(
            lsms_solve(good, 1e-6, 0, false, &mut sol),
            LsmsStatus::InvalidInput
        );
        assert_eq!(
            lsms_solve(ptr::null(), 1e-6, 10, false, &mut sol),
            LsmsStatus::NullPointer
        );
        assert!(sol.is_null());
        let mut z = 0.0;
        assert_eq!(
            lsms_solution_objective(ptr::null(), &mut z),
            LsmsStatus::NullPointer
        );

        lsms_instance_free(good);
        lsms_instance_free(ptr::null_mut());
        lsms_solution_free(ptr::null_mut());
        lsms_string_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_the_error_slot() {
    let mut inst = ptr::null_mut();
    unsafe {
        assert_eq!(
            lsms_instance_generate(11, 0, 0, 0, &mut inst),
            LsmsStatus::InvalidInput
        );
    }
    assert!(!lsms_last_error().is_null());
    let inst = generate(10, 1, 1, 3);
    assert!(lsms_last_error().is_null());
    unsafe { lsms_instance_free(inst) };
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler on PATH; header check skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use_header.c");
    std::fs::write(
        &src,
        r#"#include "lsms.h"
int main(void) {
    LsmsInstance *inst = 0;
    LsmsSolution *sol = 0;
    double z = 0.0;
    if (lsms_instance_generate(10, 2, 2, 0, &inst) != LSMS_STATUS_OK) return 1;
    if (lsms_solve(inst, 1e-6, 100, false, &sol) != LSMS_STATUS_OK) return 2;
    lsms_solution_objective(sol, &z);
    lsms_solution_free(sol);
    lsms_instance_free(inst);
    return z > 0.0 ? 0 : 3;
}
"#,
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let out = Command::new(cc)
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
