use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ctp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctp"))
        .args(args)
        .current_dir(dir)
        .env_remove("CTP_BUDGET")
        .output()
        .expect("run ctp")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Copy a corpus file into a fresh directory so artifacts land there.
fn corpus(name: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.ctp"));
    let dst = dir.path().join(format!("{name}.ctp"));
    fs::copy(&src, &dst).unwrap_or_else(|e| panic!("{}: {e}", src.display()));
    (dir, dst)
}

fn inline(name: &str, text: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let dst = dir.path().join(format!("{name}.ctp"));
    fs::write(&dst, text).unwrap();
    (dir, dst)
}

fn report(dir: &TempDir, stem: &str) -> serde_json::Value {
    let text = fs::read_to_string(dir.path().join(format!("{stem}.report"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn classify_undecidable_chain_names_both_channels() {
    let (dir, f) = corpus("chain_both_testable");
    let out = ctp(&["classify", f.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 4);
    let text = stdout(&out);
    assert!(text.contains("c1") && text.contains("c2"), "{text}");
    let r = report(&dir, "chain_both_testable");
    assert_eq!(r["command"], "classify");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["input_sha256"].as_str().unwrap().len(), 64);
    assert!(r.get("seed").is_some());
}

#[test]
fn classify_dense_polytree_is_decidable() {
    let (dir, f) = corpus("intro_dense");
    assert_eq!(code(&ctp(&["classify", f.to_str().unwrap()], dir.path())), 0);
}

#[test]
fn classify_single_testable_dense_is_open() {
    let (dir, f) = corpus("dense_open");
    assert_eq!(code(&ctp(&["classify", f.to_str().unwrap()], dir.path())), 5);
}

#[test]
fn malformed_input_exits_3_with_location() {
    let (dir, f) = inline("bad", "system bad { delay discrete; process p { init a; a -> }");
    let out = ctp(&["classify", f.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("bad.ctp:1:"), "{}", stderr(&out));
}

#[test]
fn missing_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ctp(&["check", "nope.ctp"], dir.path())), 3);
}

#[test]
fn one_step_system_is_reachable_with_witness() {
    let (dir, f) = corpus("one_step");
    let out = ctp(&["check", f.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 0);
    let witness = fs::read_to_string(dir.path().join("one_step.witness")).unwrap();
    assert!(witness.contains("internal(go)"), "{witness}");
    let r = report(&dir, "one_step");
    assert_eq!(r["answer"], "reachable");
    assert_eq!(r["witness_files"].as_array().unwrap().len(), 2);
}

#[test]
fn zero_test_blocked_counter_machine_is_unreachable() {
    let (dir, f) = corpus("counter_ztest");
    let out = ctp(&["check", f.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 1);
    assert_eq!(report(&dir, "counter_ztest")["detail"]["certificate"], "exhaustive");
}

#[test]
fn intro_dense_bound_two_cannot_deliver_three() {
    let (dir, f) = corpus("intro_dense");
    let path = f.to_str().unwrap();
    let out = ctp(&["check", path, "--bound", "2", "--target", "q=q3"], dir.path());
    assert_eq!(code(&out), 2);
    let out = ctp(&["check", path, "--bound", "3", "--target", "q=q3"], dir.path());
    assert_eq!(code(&out), 0);
    let witness = fs::read_to_string(dir.path().join("intro_dense.witness")).unwrap();
    assert_eq!(witness.matches("recv(c, m)").count(), 3, "{witness}");
}

#[test]
fn unknown_target_location_exits_3() {
    let (dir, f) = corpus("round_lag");
    let out = ctp(&["check", f.to_str().unwrap(), "--target", "q=nowhere"], dir.path());
    assert_eq!(code(&out), 3);
}

#[test]
fn auto_engine_uses_vass_on_test_free_polyforest() {
    let (dir, f) = corpus("round_lag");
    let out = ctp(&["check", f.to_str().unwrap(), "--verify"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(report(&dir, "round_lag")["engine"], "vass");
}

#[test]
fn explicit_and_vass_engines_agree_on_chain() {
    let (dir, f) = corpus("chain_free");
    let path = f.to_str().unwrap();
    let a = code(&ctp(&["check", path, "--engine", "explicit"], dir.path()));
    let b = code(&ctp(&["check", path, "--engine", "vass"], dir.path()));
    assert_eq!(a, b);
}

#[test]
fn budget_env_var_limits_search() {
    let (dir, f) = corpus("ping_pong");
    let out = Command::new(env!("CARGO_BIN_EXE_ctp"))
        .args(["check", f.to_str().unwrap(), "--target", "p=b,q=a"])
        .env("CTP_BUDGET", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn reduce_rejects_testable_channels() {
    let (dir, f) = corpus("chain_both_testable");
    let out = ctp(&["reduce", f.to_str().unwrap(), "--to", "vass"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("emptiness tests unsupported by VASS reduction"));
}

#[test]
fn reduce_writes_vass_and_tree() {
    let (dir, f) = corpus("round_lag");
    let out = ctp(&["reduce", f.to_str().unwrap(), "--to", "vass", "--tree"], dir.path());
    assert_eq!(code(&out), 0);
    let vass = fs::read_to_string(dir.path().join("round_lag.vass")).unwrap();
    assert!(vass.starts_with("counters lag_c\n"), "{vass}");
    assert!(vass.contains("[+1] q:tick"));
    let km = fs::read_to_string(dir.path().join("round_lag.km")).unwrap();
    assert!(km.contains("# lag_c: unbounded"), "{km}");
}

#[test]
fn lift_encodes_counters_as_self_loop_channels() {
    let (dir, f) = corpus("counter_roundtrip");
    let out = ctp(&["lift", f.to_str().unwrap(), "--from", "counter"], dir.path());
    assert_eq!(code(&out), 0);
    let lifted = dir.path().join("counter_roundtrip.lifted.ctp");
    let text = fs::read_to_string(&lifted).unwrap();
    assert!(text.contains("channel ch_x : p -> p testable;"), "{text}");
    // the lifted system accepts just like the machine
    let out = ctp(&["check", lifted.to_str().unwrap(), "--engine", "explicit"], dir.path());
    assert_eq!(code(&out), 0);
}

#[test]
fn discretize_clock_free_gives_tick_self_loops() {
    let (dir, f) = corpus("clock_free");
    let out = ctp(&["discretize", f.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("clock_free.tick.ctp")).unwrap();
    assert!(text.contains("delay discrete;"));
    let ticks = text.lines().filter(|l| l.trim_end().ends_with(": tick;")).count();
    assert_eq!(ticks, 2, "{text}");
}

#[test]
fn discretize_rejects_discrete_input() {
    let (dir, f) = corpus("one_step");
    assert_eq!(code(&ctp(&["discretize", f.to_str().unwrap()], dir.path())), 3);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let (dir, f) = corpus("chain_free");
    let path = f.to_str().unwrap();
    let a = stdout(&ctp(&["simulate", path, "--steps", "30", "--seed", "9"], dir.path()));
    let b = stdout(&ctp(&["simulate", path, "--steps", "30", "--seed", "9"], dir.path()));
    assert_eq!(a, b);
    assert!(a.starts_with("init: [p=a,q=a,r=a]"));
    assert_eq!(report(&dir, "chain_free")["seed"], 9);
}

#[test]
fn simulate_script_follows_indices() {
    let (dir, f) = corpus("one_step");
    let out = ctp(&["simulate", f.to_str().unwrap(), "--script", "0"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("step 1:"));
}

#[test]
fn gen_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.ctp", "b.ctp"] {
        let o = ctp(&["gen", "--profile", "polyforest", "--seed", "11", "-o", out], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a.ctp")).unwrap();
    let b = fs::read(dir.path().join("b.ctp")).unwrap();
    assert_eq!(a, b);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.report")).unwrap()).unwrap();
    assert_eq!(r["seed"], 11);
}

#[test]
fn gen_output_parses_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctp(
        &["gen", "--profile", "cycle", "--seed", "3", "--flavor", "dense", "-o", "g.ctp"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&ctp(&["classify", "g.ctp"], dir.path())), 4);
}

#[test]
fn gen_unknown_profile_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ctp(&["gen", "--profile", "spiral"], dir.path())), 3);
}
