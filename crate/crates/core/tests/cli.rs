//! Command line contract: exit codes, one-line errors on stderr, and no
//! partial output files left behind on failure.

use std::path::Path;
use std::process::Output;

fn glb(dir: &Path, args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_glb"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn glb")
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(text.lines().count(), 1, "expected a single error line, got:\n{text}");
    text
}

fn write_fixture(dir: &Path) {
    std::fs::write(
        dir.join("workload.csv"),
        "slot,workload\n0,10\n1,20\n2,30\n3,15\n",
    )
    .unwrap();
    std::fs::write(dir.join("green.csv"), "slot,a\n0,500\n1,0\n2,1000\n3,250\n").unwrap();
    std::fs::write(dir.join("price.csv"), "slot,a\n0,0.1\n1,0.2\n2,0.05\n3,0.1\n").unwrap();
    std::fs::write(dir.join("glb.toml"), config_toml("")).unwrap();
}

fn config_toml(sla_extra: &str) -> String {
    format!(
        "workload_trace = \"workload.csv\"\nscale = 1.0\n\n[sla]\ndeadline_s = 1.5\nslot_s = 3600\n{sla_extra}\n\
         [[datacenter]]\nid = \"a\"\nmu = 2.0\nmax_servers = 40\np_idle_w = 100\np_peak_w = 200\n\
         pue = 1.25\nd_net_s = 0.5\ngreen_trace = \"green.csv\"\nprice_trace = \"price.csv\"\n"
    )
}

#[test]
fn simulate_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = glb(dir.path(), &["simulate", "--config", "glb.toml", "--out", "r.csv"]);
    assert!(out.status.success());
    assert!(out.stderr.is_empty());
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 slot results"));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("slot,total_power_w,"));

    let out = glb(
        dir.path(),
        &["simulate", "--config", "glb.toml", "--out", "r.json", "--format", "json"],
    );
    assert!(out.status.success());
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
}

#[test]
fn missing_config_is_exit_one_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = glb(dir.path(), &["simulate", "--config", "absent.toml", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.starts_with("error:") && line.contains("absent.toml"), "{line}");
    assert!(!dir.path().join("r.csv").exists(), "no output file may appear on failure");
}

#[test]
fn invalid_config_value_names_the_site() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let broken = config_toml("").replace("pue = 1.25", "pue = 0.8");
    std::fs::write(dir.path().join("glb.toml"), broken).unwrap();
    let out = glb(dir.path(), &["simulate", "--config", "glb.toml", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.contains("data center a") && line.contains("pue"), "{line}");
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn negative_trace_value_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    std::fs::write(dir.path().join("green.csv"), "slot,a\n0,500\n1,-3\n2,0\n3,0\n").unwrap();
    let out = glb(dir.path(), &["simulate", "--config", "glb.toml", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.contains("green.csv") && line.contains("line 3"), "{line}");
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn queue_mode_needs_a_bound() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = glb(
        dir.path(),
        &["simulate", "--config", "glb.toml", "--mode", "queue", "--out", "r.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("queue_bound"));

    // With the bound present both modes run; ub must override it.
    std::fs::write(dir.path().join("glb.toml"), config_toml("queue_bound = 7200\n")).unwrap();
    for mode in ["queue", "ub"] {
        let out = glb(
            dir.path(),
            &["simulate", "--config", "glb.toml", "--mode", mode, "--out", "r.csv"],
        );
        assert!(out.status.success(), "mode {mode}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn tradeoff_validates_slot_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = glb(dir.path(), &["tradeoff", "--config", "glb.toml", "--slot", "2", "--out", "c.csv"]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("c.csv")).unwrap().lines().count(), 22);

    let out = glb(dir.path(), &["tradeoff", "--config", "glb.toml", "--slot", "9", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("out of range"));
    assert!(!dir.path().join("x.csv").exists());

    let out = glb(
        dir.path(),
        &["tradeoff", "--config", "glb.toml", "--slot", "0", "--grid", "1", "--out", "x.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn feasible_checks_arity_and_answers() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let out = glb(dir.path(), &["feasible", "--config", "glb.toml", "--slot", "1", "--aw", "20"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasible: yes"));

    let out = glb(dir.path(), &["feasible", "--config", "glb.toml", "--slot", "1", "--aw", "5"]);
    assert!(out.status.success(), "a negative verdict is still a successful run");
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasible: no"));

    let out =
        glb(dir.path(), &["feasible", "--config", "glb.toml", "--slot", "1", "--aw", "5,5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("1 values"));
}

#[test]
fn gen_traces_rejects_zero_dcs_and_usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = glb(
        dir.path(),
        &["gen-traces", "--seed", "1", "--slots", "8", "--dcs", "0", "--out-dir", "t"],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = glb(dir.path(), &["simulate"]);
    assert_ne!(out.status.code(), Some(0), "missing required args must not exit 0");

    let out = glb(dir.path(), &["no-such-command"]);
    assert_ne!(out.status.code(), Some(0));
}
