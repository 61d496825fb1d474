use std::path::Path;
use std::process::{Command, Output};

fn covert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covert")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const DEP: &str = r#"
seed = 4
trials = 500

[scenario]
elements = 30

[sweep]
param = "p_max_dbm"
values = [0, 15, 30]
"#;

#[test]
fn dep_writes_a_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dep.toml", DEP);
    let a = stdout(&covert(&["dep", "--config", &cfg]));
    let b = stdout(&covert(&["dep", "--config", &cfg]));
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("p_max[dBm],threshold[]"));
    assert!(lines[1].starts_with("0.00000000e0,optimal,"));

    let out = dir.path().join("dep.csv");
    stdout(&covert(&["dep", "--config", &cfg, "--out", out.to_str().unwrap(), "--wcsi", "none", "--trials", "50"]));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",fixed,") && l.contains(",50,")));
}

#[test]
fn seed_flag_changes_only_monte_carlo_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dep.toml", DEP);
    let a = stdout(&covert(&["dep", "--config", &cfg, "--trials", "1"]));
    let b = stdout(&covert(&["dep", "--config", &cfg, "--trials", "1", "--seed", "77"]));
    let closed = |s: &str| s.lines().map(|l| l.split(',').take(7).collect::<Vec<_>>().join(",")).collect::<Vec<_>>();
    assert_eq!(closed(&a), closed(&b));
}

#[test]
fn config_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\ntrials = \n[sweep]\nparam = \"eta\"\nvalues = [1]\n");
    let o = covert(&["dep", "--config", &cfg]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml") && err.contains("line 2"), "{err}");

    let o = covert(&["dep"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
}

#[test]
fn threshold_matches_the_library() {
    let line = stdout(&covert(&["threshold", "--p-dbm", "25", "--alpha", "0.2", "--elements", "30"]));
    let row: Vec<&str> = line.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "30");
    let losses = covert_core::SystemConfig { elements: 30, ..Default::default() }.losses().unwrap();
    let dep =
        covert_core::detection::dep_at_optimal_threshold(covert_core::dbm_to_watts(25.0), 0.2, 30, &losses, 1e-11)
            .unwrap();
    assert_eq!(row[6], format!("{:.8e}", dep.gap));
    assert!(!covert(&["threshold", "--alpha", "0"]).status.success());
}

#[test]
fn preset_rejects_unknown_names() {
    let o = covert(&["preset", "fig10"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig3"));
}

#[test]
fn dep_preset_runs() {
    let text = stdout(&covert(&["preset", "fig9", "--trials", "200"]));
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("alpha[],threshold[]"));
}

#[test]
fn optimize_writes_table_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "opt.toml",
        "seed = 2\ntrials = 2\nbaseline_draws = 20\n[scenario]\nlayout = \"calibrated\"\nelements = 4\n[sweep]\nparam = \"p_max_dbm\"\nvalues = [25]\n",
    );
    let trace = dir.path().join("trace.csv");
    let table = stdout(&covert(&["optimize", "--config", &cfg, "--mode", "psr", "--trace", trace.to_str().unwrap()]));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("2.50000000e1,psr,2,"));
    let traces = std::fs::read_to_string(&trace).unwrap();
    assert!(traces.starts_with("p_max[dBm],mode[],instance[],iteration[]"));
    assert!(traces.lines().count() > 2);
}

#[test]
fn infeasible_instances_are_flagged_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ref.toml",
        "trials = 1\nbaseline_draws = 5\n[scenario]\nelements = 4\n[sweep]\nparam = \"eps_c\"\nvalues = [0.5]\n",
    );
    let o = covert(&["optimize", "--config", &cfg, "--mode", "csr"]);
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("5.00000000e-1,csr,1,1,0,NaN"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no feasible"));
}
