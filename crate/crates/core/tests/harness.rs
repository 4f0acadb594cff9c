use std::collections::BTreeSet;

use cclab_core::harness::config::ExperimentConfig;
use cclab_core::harness::dbfile::{demo_pir, DbFile, DbMeta};
use cclab_core::harness::script::Script;
use cclab_core::harness::{list_checks, run, RunOptions};
use cclab_core::kernel::value::Value;
use cclab_core::kernel::world::World;
use cclab_core::memory::{CUsmr, LeakMode};
use cclab_core::ue::hybrid::{real_world, UeSetup};
use cclab_core::ue::scheme::SchemeKind;
use cclab_core::CoreError;

fn config(text: &str) -> ExperimentConfig {
    let c = ExperimentConfig::parse(text).unwrap();
    c.validate().unwrap();
    c
}

fn config_error(text: &str) -> String {
    match ExperimentConfig::parse(text).and_then(|c| c.validate().map(|_| c)) {
        Err(CoreError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn opts(seed: u64, trials: u64) -> RunOptions {
    RunOptions { seed: Some(seed), trials: Some(trials), jobs: 2 }
}

#[test]
fn threshold_not_below_server_count_is_rejected() {
    let m = config_error(r#"{"kind": "pir-correctness", "scheme": {"kind": "shamir", "p": 257, "k": 2, "t": 2}, "n": 9}"#);
    assert!(m.contains("k >= t + 1"), "{m}");
}

#[test]
fn config_errors_are_specific() {
    assert!(config_error(r#"{"kind": "firewall-analysis", "max_epoch": 0}"#).contains("max_epoch"));
    assert!(config_error(r#"{"kind": "firewall-analysis", "bogus": 1}"#).contains("bogus"));
    assert!(config_error(r#"{"kind": "firewall-analysis", "trials": 0}"#).contains("trials"));
    assert!(config_error(r#"{"kind": "firewall-analysis", "seed": -1}"#).contains("seed"));
    let m = config_error("{\n  \"kind\": \"firewall-analysis\",\n  \"histories\": 3,,\n}");
    assert!(m.contains("line 3"), "{m}");
    let db = r#"{"kind": "pir-byzantine", "p": 11, "n": 2, "k": 4, "t": 1, "u": 1, "db": [3, 11]}"#;
    assert!(config_error(db).contains("GF(11)"));
    let byz = r#"{"kind": "pir-byzantine", "p": 11, "n": 4, "k": 2, "t": 1, "u": 1}"#;
    assert!(config_error(byz).contains("t + 1 + u"));
    let chain = r#"{"kind": "ue-ind-chain", "setup": {"scheme": "toy", "n": 2, "msg_len": 2, "k": 1, "mode": "one"},
        "q": 1, "r": 1, "distinguisher": {"builtin": "constant"}, "chain": "upd-pair"}"#;
    assert!(config_error(chain).contains("plus"));
}

#[test]
fn seed_and_trials_are_run_wide() {
    let c = config(r#"{"kind": "firewall-analysis", "seed": 9, "trials": 5, "histories": 3}"#);
    assert_eq!((c.seed, c.trials), (Some(9), Some(5)));
    let r = run(&c, RunOptions::default()).unwrap();
    assert_eq!((r.seed, r.trials), (9, 5));
    let r = run(&c, RunOptions { seed: Some(4), ..RunOptions::default() }).unwrap();
    assert_eq!(r.seed, 4);
}

#[test]
fn script_errors_carry_positions() {
    let text = "{\n  \"steps\": [],\n  \"predicate\": {\"konst\": true}\n}";
    match Script::parse(text) {
        Err(CoreError::Config(m)) => assert!(m.contains("line 3"), "{m}"),
        other => panic!("{other:?}"),
    }
    let text = r#"{"steps": [{"interface": "C", "verb": "getStatus", "args": []}], "predicate": {"is_absent": 1}}"#;
    assert!(matches!(Script::parse(text), Err(CoreError::Config(m)) if m.contains("step 1")));
}

fn ue_setup(mode: LeakMode) -> UeSetup {
    UeSetup { scheme: SchemeKind::Toy, n: 3, msg_len: 2, k: 1, mode }
}

#[test]
fn second_leak_in_an_epoch_is_refused() {
    let script = Script::parse(
        r#"{"steps": [
            {"interface": "C", "verb": "write", "args": [{"int": 2}, {"bytes": "0a0b"}]},
            {"interface": "S.2", "verb": "leak", "args": [{"int": 2}]},
            {"interface": "S.2", "verb": "leak", "args": [{"int": 2}]}
        ], "predicate": {"is_absent": 2}}"#,
    )
    .unwrap();
    let mut w = real_world(&ue_setup(LeakMode::One), 3).unwrap();
    let out = script.execute(&mut w).unwrap();
    assert!(out[1].as_bytes().is_some());
    assert!(out[2].is_absent());
    let mut w = real_world(&ue_setup(LeakMode::Plus), 3).unwrap();
    assert!(script.execute(&mut w).unwrap()[2].as_bytes().is_some());
}

#[test]
fn insecure_slot_leaks_plaintext_from_confidential_memory() {
    let script = Script::parse(
        r#"{"steps": [
            {"event": "insec/2"},
            {"interface": "C", "verb": "write", "args": [{"int": 2}, {"bytes": "0a0b"}]},
            {"interface": "S.2", "verb": "leak", "args": [{"int": 2}]}
        ], "predicate": {"const": true}}"#,
    )
    .unwrap();
    let mut w = World::new(1).with(Box::new(CUsmr::new(3, 2, LeakMode::One))).unwrap();
    let out = script.execute(&mut w).unwrap();
    assert_eq!(out[2], Value::Bytes(vec![0x0a, 0x0b]));
}

#[test]
fn constant_script_has_zero_advantage() {
    let c = config(
        r#"{"kind": "ue-ind-chain", "setup": {"scheme": "toy", "n": 2, "msg_len": 2, "k": 1, "mode": "one"},
            "q": 1, "r": 1, "distinguisher": {"script": {"steps": [], "predicate": {"const": true}}},
            "expect": {"indistinguishable": {"max_estimate": 0.0}}}"#,
    );
    let r = run(&c, opts(1, 200)).unwrap();
    let adv = r.advantage.clone().unwrap();
    assert_eq!((adv.ones_a, adv.ones_b, adv.estimate), (200, 200, 0.0));
    assert!(r.passed());
    assert_eq!(r.bound_coefficient, Some(3));
}

#[test]
fn script_file_resolves_relative_to_config() {
    let dir = std::env::temp_dir().join(format!("cclab-harness-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("scripts")).unwrap();
    std::fs::write(dir.join("scripts/d.json"), r#"{"steps": [], "predicate": {"const": false}}"#).unwrap();
    let cfg = r#"{"kind": "ue-ind-chain", "setup": {"scheme": "toy", "n": 2, "msg_len": 2, "k": 1, "mode": "one"},
        "q": 1, "r": 1, "distinguisher": {"script_file": "scripts/d.json"}}"#;
    std::fs::write(dir.join("c.json"), cfg).unwrap();
    let c = ExperimentConfig::load(&dir.join("c.json")).unwrap();
    assert!(run(&c, opts(1, 10)).unwrap().passed());
    std::fs::remove_dir_all(&dir).unwrap();
}

fn without_runtime(r: &cclab_core::harness::Report) -> serde_json::Value {
    let mut v = serde_json::to_value(r).unwrap();
    v.as_object_mut().unwrap().remove("runtime_ms");
    v
}

#[test]
fn reports_are_reproducible_across_job_counts() {
    let c = config(r#"{"kind": "ue-game", "game": "ind-ue", "scheme": "toy-static", "msg_len": 2, "adversary": "nonce-match"}"#);
    let a = run(&c, RunOptions { seed: Some(3), trials: Some(300), jobs: 1 }).unwrap();
    let b = run(&c, RunOptions { seed: Some(3), trials: Some(300), jobs: 4 }).unwrap();
    assert_eq!(without_runtime(&a), without_runtime(&b));
    assert!(a.advantage.unwrap().estimate > 0.99);
    let other = run(&c, RunOptions { seed: Some(4), trials: Some(300), jobs: 1 }).unwrap();
    assert_eq!(other.seed, 4);
}

#[test]
fn corrupting_adversary_scores_nothing() {
    let c = config(r#"{"kind": "ue-game", "game": "upd-cpa", "scheme": "toy", "msg_len": 2, "adversary": "corrupt-challenge"}"#);
    let r = run(&c, opts(2, 100)).unwrap();
    assert_eq!(r.data["trivial_wins"], 200);
    let adv = r.advantage.unwrap();
    assert_eq!(adv.ones_a + adv.ones_b, 0);
}

#[test]
fn every_kind_runs_and_passes() {
    let configs = [
        r#"{"kind": "ue-availability", "setup": {"scheme": "toy", "n": 3, "msg_len": 2, "k": 2, "mode": "plus"}, "scripts": 10, "steps": 30, "seeds": 2}"#,
        r#"{"kind": "ue-ind-chain", "setup": {"scheme": "toy", "n": 3, "msg_len": 2, "k": 1, "mode": "one"}, "q": 1, "r": 2,
            "distinguisher": {"builtin": "trace-parity"}, "chain": "ue-pair", "endpoint_scripts": 5, "steps": 20}"#,
        r#"{"kind": "ue-game", "game": "enc-cpa", "scheme": "toy", "msg_len": 2, "adversary": "random-guess",
            "expect": {"indistinguishable": {"max_estimate": 0.5}}}"#,
        r#"{"kind": "pir-correctness", "scheme": {"kind": "shamir", "p": 257, "k": 3, "t": 1}, "n": 10}"#,
        r#"{"kind": "pir-correctness", "scheme": {"kind": "ldc", "p": 17, "m": 2, "h": 3}, "n": 9}"#,
        r#"{"kind": "pir-privacy-game", "scheme": {"kind": "shamir", "p": 7, "k": 3, "t": 1}, "n": 4, "max_coalition": 2, "scripts": 10}"#,
        r#"{"kind": "pir-multi", "scheme": {"kind": "shamir", "p": 257, "k": 4, "t": 1}, "n": 9, "t": 1, "u": 1, "scripts": 10}"#,
        r#"{"kind": "pir-byzantine", "p": 11, "n": 4, "k": 4, "t": 1, "u": 1, "pairs": false}"#,
        r#"{"kind": "firewall-analysis", "histories": 200}"#,
        r#"{"kind": "firewall-analysis", "events": ["epoch/1", "epoch/2", "leaked/Token/2", "epoch/3", "insec/2"], "slots": 2}"#,
    ];
    for text in configs {
        let c = config(text);
        let r = run(&c, opts(5, 200)).unwrap();
        assert!(r.passed(), "{}: {:#?}", c.experiment.kind(), r.checks);
        assert!(!r.checks.is_empty() || r.advantage.is_some(), "{}", c.experiment.kind());
    }
}

#[test]
fn oversized_coalitions_are_reported_not_checked() {
    let c = config(r#"{"kind": "pir-privacy-game", "scheme": {"kind": "shamir", "p": 7, "k": 3, "t": 1}, "n": 4, "max_coalition": 2, "scripts": 2}"#);
    let r = run(&c, opts(5, 1)).unwrap();
    let over = r.data["oversized_coalitions"].as_array().unwrap();
    assert_eq!(over.len(), 3);
    assert!(over.iter().all(|o| o["max_distance"].as_f64().unwrap() > 0.0));
}

#[test]
fn firewall_report_for_explicit_history() {
    let c = config(r#"{"kind": "firewall-analysis", "events": ["epoch/1", "epoch/2", "leaked/Token/2", "epoch/3", "leaked/Key/3"]}"#);
    let r = run(&c, opts(0, 1)).unwrap();
    assert_eq!(r.data["pairs"], serde_json::json!([[1, 2]]));
    assert_eq!(r.data["insulated"], serde_json::json!([1, 2]));
}

#[test]
fn byzantine_pairs_can_fail() {
    let c = config(r#"{"kind": "pir-byzantine", "p": 11, "n": 4, "k": 4, "t": 1, "u": 1, "db": [2, 7, 1, 8]}"#);
    let r = run(&c, opts(0, 1)).unwrap();
    let pair = r.checks.iter().find(|c| c.name == "pir-byzantine/pair-never-silent").unwrap();
    assert!(!pair.passed, "{pair:?}");
    assert!(r.checks[0].passed);
}

#[test]
fn check_registry_is_consistent() {
    let names: BTreeSet<_> = list_checks().iter().map(|(n, _)| *n).collect();
    assert_eq!(names.len(), list_checks().len());
    assert!(list_checks().iter().all(|(_, inv)| !inv.is_empty()));
}

#[test]
fn hex_database_files() {
    let meta = DbMeta { n: 3, cell_bits: 8, field_p: 257 };
    let db = DbFile::parse("0a\n# comment\n0xff\n\n00\n", meta).unwrap();
    assert_eq!(db.records, vec![10, 255, 0]);
    assert!(DbFile::parse("0a\n0b\n", meta).is_err());
    assert!(DbFile::parse("0a\n1ff\n00\n", meta).is_err());
    assert!(DbFile::parse("0a\nzz\n00\n", meta).is_err());
    let small = DbMeta { n: 1, cell_bits: 8, field_p: 251 };
    assert!(DbFile::parse("fc\n", small).is_err());
}

#[test]
fn demo_retrieval_and_cost() {
    let records: Vec<u64> = (0..10).map(|x| x * 20 + 1).collect();
    for i in 1..=10 {
        let (value, cost) = demo_pir(&records, i, 4, 2, 257, i as u64).unwrap();
        assert_eq!(value, records[i - 1]);
        // Ten records: 3 columns of 4 rows, so 4 servers send 3 and get 4.
        assert_eq!((cost.query_symbols, cost.answer_symbols), (12, 16));
    }
    assert!(demo_pir(&records, 11, 4, 2, 257, 0).is_err());
    assert!(demo_pir(&records, 1, 2, 2, 257, 0).is_err());
}
