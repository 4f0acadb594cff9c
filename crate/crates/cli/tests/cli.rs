use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cclab")).args(args).env_remove("CCLAB_SEED").output().unwrap()
}

fn report(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn availability_config_passes_with_exact_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = cclab(&["run", "--config", fixture("ue_availability.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["config"]["kind"], "ue-availability");
    assert_eq!(r["advantage"]["estimate"], 0.0);
    assert_eq!(r["advantage"]["exact"], true);
    assert_eq!(r["advantage"]["method"], "trace-equivalence");
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true && c["invariant"].is_string()));
}

#[test]
fn bad_threshold_is_a_config_error() {
    let o = cclab(&["run", "--config", fixture("bad.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k >= t + 1"));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"kind\": \"firewall-analysis\"\n  \"histories\": 4\n}\n").unwrap();
    let o = cclab(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cclab(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = cclab(&["run", "--config", fixture("pir_byzantine.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    let failed: Vec<_> = r["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "pir-byzantine/pair-never-silent");
}

#[test]
fn seed_comes_from_environment_and_reports_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("ue_game.json");
    let mut reports = Vec::new();
    for (name, jobs) in [("a.json", "1"), ("b.json", "3")] {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_cclab"))
            .args(["run", "--config", cfg.to_str().unwrap(), "--trials", "400", "--jobs", jobs, "--out", out.to_str().unwrap()])
            .env("CCLAB_SEED", "77")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let mut r = report(&out);
        assert_eq!(r["seed"], 77);
        assert_eq!(r["trials"], 400);
        r.as_object_mut().unwrap().remove("runtime_ms");
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn demo_pir_prints_record_and_cost() {
    let o = cclab(&["demo-pir", "--db", fixture("db/db.hex").to_str().unwrap(), "--index", "5", "--servers", "3", "--threshold", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("M[5] = 68"), "{text}");
    // 10 records in 3 columns of 4 rows: 3 servers receive 3 and send 4.
    assert!(text.contains("9 + 12 = 21"), "{text}");
    let o = cclab(&["demo-pir", "--db", fixture("db/db.hex").to_str().unwrap(), "--index", "11", "--servers", "3", "--threshold", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn demo_ue_traces_match() {
    let o = cclab(&["demo-ue", "--scheme", "rise-small", "--n", "2", "--msg-len", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("traces identical"));
    assert_eq!(cclab(&["demo-ue", "--scheme", "nope"]).status.code(), Some(2));
}

#[test]
fn list_checks_names_every_invariant() {
    let o = cclab(&["list-checks"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert!(lines.len() >= 20);
    assert!(lines.iter().all(|l| l.split('\t').count() == 2));
    assert!(text.contains("pir-byzantine/pair-never-silent"));
}
