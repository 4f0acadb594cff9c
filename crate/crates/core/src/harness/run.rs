//! Dispatch from a validated configuration to the experiment it names.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use super::config::*;
use super::distinguishers::{corrupt_challenge, nonce_match, random_guess, AgeLeak, Builtin, Constant, TraceParity};
use super::report::{Check, Report, SCHEMA};
use crate::error::{CoreError, Result};
use crate::kernel::advantage::{estimate_advantage, AdvantageReport, Distinguisher};
use crate::kernel::history::{EventHistory, EventName};
use crate::kernel::rng::{derive_key, derive_seed};
use crate::kernel::value::Value;
use crate::kernel::world::{first_divergence, Step, World, WorldFactory};
use crate::pir::game::{
    byzantine_sweep, coalitions, double_deviations, exact_game_distance, randomness_space_size, single_deviations,
    views_index_independent, Deviation,
};
use crate::pir::scheme::{build_pir, ShamirPir};
use crate::pir::scripts::{random_pir_script, PirScriptShape};
use crate::pir::worlds::{factory, real_multi_world, ideal_multi_world, real_world, MultiSetup, PirWorld};
use crate::ue::firewall::{compute_firewalls, evaluate_predicates};
use crate::ue::games::{game_advantage, Adversary};
use crate::ue::hybrid::{
    build_hybrid, honest_ideal_world, honest_real_world, ideal_factory, intermediate_factory, real_factory,
    run_reduction_chain, ChallengeKind, HybridChainConfig, UeSetup,
};
use crate::ue::scheme::{build_scheme, UeScheme};
use crate::ue::scripts::{random_ue_script, ScriptShape};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: u64 = 2000;
/// Largest randomness space the exact privacy enumeration will walk.
pub const MAX_ENUMERATION: u64 = 2_000_000;

/// Every check a report can contain, with the invariant it asserts.
const CHECKS: &[(&str, &str)] = &[
    ("availability/trace-equivalence", "with an honest server the protocol world and the confidential memory give identical traces on every script and seed"),
    ("ind-chain/expectation", "the real-versus-ideal advantage matches the configured expectation"),
    ("ind-chain/write-top-is-real", "the write hybrid at position q is trace-equivalent to the real world"),
    ("ind-chain/write-bottom-is-intermediate", "the write hybrid at position 0 is trace-equivalent to the intermediate world"),
    ("ind-chain/update-top-is-intermediate", "the update hybrid at position r is trace-equivalent to the intermediate world"),
    ("ind-chain/update-bottom-is-ideal", "the update hybrid at position 0 is trace-equivalent to the ideal world"),
    ("ind-chain/bound", "the endpoint advantage is at most min(2q+r, q+2r) times the largest link advantage"),
    ("ind-chain/telescoping", "the signed link differences sum to the endpoint difference within the joint interval"),
    ("ue-game/expectation", "the game advantage matches the configured expectation"),
    ("pir-correctness/single-server", "the single-server world returns M[i] for every index"),
    ("pir-correctness/multi-server", "the k-server world returns M[i] for every index"),
    ("pir-correctness/cost", "the reported cost equals the symbols actually sent and received"),
    ("pir-privacy/views-index-independent", "for every coalition of at most t servers the view distribution does not depend on the index"),
    ("pir-privacy/exact-distance-zero", "for every coalition of at most t servers and every index the two privacy games are at distance 0"),
    ("pir-privacy/reduction-fixed-is-real", "the reduction against the fixed-index game is trace-equivalent to the real world"),
    ("pir-privacy/reduction-random-is-ideal", "the reduction against the random-index game is trace-equivalent to the ideal world"),
    ("pir-multi/guard-parity", "real and ideal k-server worlds refuse exactly the same requests"),
    ("pir-multi/retrieval", "the k-server world returns M[i] for every index while the Byzantine servers answer with an erasure"),
    ("pir-byzantine/single-deviation", "one deviating server never changes the reconstructed record"),
    ("pir-byzantine/pair-never-silent", "two deviating servers are either corrected or detected, never silently wrong"),
    ("firewall/run-segmentation", "the firewall pairs equal the token-linked key-clean runs of epochs"),
    ("firewall/regions-disjoint", "insulated regions do not overlap"),
];

pub fn list_checks() -> &'static [(&'static str, &'static str)] {
    CHECKS
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    let invariant = CHECKS.iter().find(|(n, _)| *n == name).map(|(_, i)| *i).expect("registered check");
    Check::new(name, invariant, passed, detail)
}

/// What an experiment hands back before the report is assembled.
#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    advantage: Option<AdvantageReport>,
    bound_coefficient: Option<u64>,
    data: serde_json::Value,
}

/// Overrides from the command line; config values apply when absent.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub jobs: usize,
}

pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Report> {
    cfg.validate()?;
    let seed = opts.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let trials = opts.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CoreError::Config("trials must be at least 1".into()));
    }
    let jobs = opts.jobs.max(1);
    let start = Instant::now();
    let out = match &cfg.experiment {
        Experiment::UeAvailability(c) => ue_availability(c, seed)?,
        Experiment::UeIndChain(c) => ue_ind_chain(c, seed, trials, jobs)?,
        Experiment::UeGame(c) => ue_game(c, seed, trials, jobs)?,
        Experiment::PirCorrectness(c) => pir_correctness(c, seed)?,
        Experiment::PirPrivacyGame(c) => pir_privacy(c, seed)?,
        Experiment::PirMulti(c) => pir_multi(c, seed)?,
        Experiment::PirByzantine(c) => pir_byzantine(c, seed)?,
        Experiment::FirewallAnalysis(c) => firewall_analysis(c, seed)?,
    };
    Ok(Report {
        schema: SCHEMA,
        config: cfg.clone(),
        seed,
        trials,
        checks: out.checks,
        advantage: out.advantage,
        bound_coefficient: out.bound_coefficient,
        data: out.data,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// Runs `scripts` scripts against both factories on three seeds each and
/// describes the first divergence, if any.
fn scripted_equivalence(
    a: &WorldFactory,
    b: &WorldFactory,
    scripts: usize,
    seeds_per_script: usize,
    seed: u64,
    label: &str,
    mut gen: impl FnMut(&mut ChaCha20Rng) -> Vec<Step>,
) -> Result<Option<String>> {
    let mut rng = ChaCha20Rng::from_seed(derive_key(seed, label));
    for s in 0..scripts {
        let script = gen(&mut rng);
        let seeds: Vec<u64> = (0..seeds_per_script).map(|t| derive_seed(seed, &format!("{label}/{s}/{t}"))).collect();
        if let Some(d) = first_divergence(a, b, &script, &seeds)? {
            let at = d.step.map_or("the final history".to_string(), |i| format!("step {i}"));
            return Ok(Some(format!("script {s} diverged at {at} on seed {}: {:?} vs {:?}", d.seed, d.left, d.right)));
        }
    }
    Ok(None)
}

fn equivalence_check(name: &str, result: Option<String>, scripts: usize) -> Check {
    match result {
        None => check(name, true, format!("{scripts} scripts, no divergence")),
        Some(d) => check(name, false, d),
    }
}

fn ue_availability(c: &UeAvailability, seed: u64) -> Result<Outcome> {
    let setup = &c.setup;
    let real = |s| honest_real_world(setup, s);
    let ideal = |s| honest_ideal_world(setup, s);
    let shape = ScriptShape { adversarial: false, insec_others: false, ..ScriptShape::new(setup.n, setup.msg_len, setup.k, c.steps) };
    let div = scripted_equivalence(&real, &ideal, c.scripts, c.seeds, seed, "availability", |rng| random_ue_script(&shape, rng))?;
    let passed = div.is_none();
    Ok(Outcome {
        checks: vec![equivalence_check("availability/trace-equivalence", div, c.scripts)],
        advantage: passed.then(|| AdvantageReport::exact_zero("trace-equivalence")),
        data: json!({ "scripts": c.scripts, "steps": c.steps, "seeds_per_script": c.seeds }),
        ..Outcome::default()
    })
}

fn distinguisher(c: &UeIndChain) -> Box<dyn Distinguisher> {
    let s = &c.setup;
    match &c.distinguisher {
        DistinguisherSpec::Builtin(Builtin::TraceParity) => Box::new(TraceParity {
            shape: ScriptShape {
                max_k_writes: Some(c.q),
                max_updates: Some(c.r),
                ..ScriptShape::new(s.n, s.msg_len, s.k, c.steps)
            },
        }),
        DistinguisherSpec::Builtin(Builtin::AgeLeak) => Box::new(AgeLeak { k: s.k, msg_len: s.msg_len }),
        DistinguisherSpec::Builtin(Builtin::Constant) => Box::new(Constant(false)),
        DistinguisherSpec::Script(script) => Box::new(script.clone()),
        DistinguisherSpec::ScriptFile(_) => unreachable!("validated configs carry resolved scripts"),
    }
}

fn expectation(name: &str, expect: Expect, adv: &AdvantageReport) -> Check {
    let (low, high) = adv.abs_interval();
    match expect {
        Expect::Indistinguishable { max_estimate } => check(
            name,
            adv.ci_contains_zero() && adv.estimate <= max_estimate,
            format!("estimate {:.4} (limit {max_estimate}), |delta| in [{low:.4}, {high:.4}]", adv.estimate),
        ),
        Expect::Distinguishable { min_estimate } => check(
            name,
            adv.estimate >= min_estimate && low > 0.5,
            format!("estimate {:.4} (needs {min_estimate}), |delta| in [{low:.4}, {high:.4}]", adv.estimate),
        ),
    }
}

fn ue_ind_chain(c: &UeIndChain, seed: u64, trials: u64, jobs: usize) -> Result<Outcome> {
    let d = distinguisher(c);
    let setup = &c.setup;
    let endpoint = estimate_advantage(
        real_factory(setup).as_ref(),
        ideal_factory(setup, c.simulator()).as_ref(),
        d.as_ref(),
        trials,
        derive_seed(seed, "endpoint"),
        jobs,
    )?;
    let mut checks = Vec::new();
    if let Some(e) = c.expect {
        checks.push(expectation("ind-chain/expectation", e, &endpoint));
    }
    let mut data = json!({ "simulator": c.simulator() });
    if let Some(kind) = c.chain {
        checks.extend(chain_endpoints(c, kind, seed)?);
        let report = run_reduction_chain(setup, c.q, c.r, kind, d.as_ref(), trials, derive_seed(seed, "chain"), jobs)?;
        let upper = report.links.iter().map(|l| l.advantage.abs_interval().1).fold(0.0, f64::max);
        checks.push(check(
            "ind-chain/bound",
            report.bound_holds,
            format!(
                "endpoint |delta| >= {:.4}, {} x largest link upper bound {upper:.4}",
                report.endpoint.abs_interval().0,
                report.bound_coefficient
            ),
        ));
        checks.push(check(
            "ind-chain/telescoping",
            report.telescoping_consistent,
            format!(
                "sum of links {:.4} +- {:.4}, endpoint {:.4}",
                report.telescoped_total,
                report.total_half_width,
                report.endpoint.p_a - report.endpoint.p_b
            ),
        ));
        data["chain"] = serde_json::to_value(&report).expect("chain report serialises");
    }
    Ok(Outcome {
        checks,
        advantage: Some(endpoint),
        bound_coefficient: Some((2 * c.q + c.r).min(c.q + 2 * c.r)),
        data,
    })
}

/// The four exact identities at the ends of the write and update chains.
fn chain_endpoints(c: &UeIndChain, kind: ChallengeKind, seed: u64) -> Result<Vec<Check>> {
    let setup: &UeSetup = &c.setup;
    let write = HybridChainConfig { setup: setup.clone(), challenge: ChallengeKind::EncPair, q: c.q, r: c.r };
    let upd = HybridChainConfig { setup: setup.clone(), challenge: kind, q: c.q, r: c.r };
    let shape = |q: Option<u64>, r: Option<u64>| ScriptShape {
        max_k_writes: q,
        max_updates: r,
        ..ScriptShape::new(setup.n, setup.msg_len, setup.k, c.steps)
    };
    let intermediate = intermediate_factory(setup);
    let cases: [(&str, _, &WorldFactory, ScriptShape); 4] = [
        ("ind-chain/write-top-is-real", build_hybrid(&write, c.q)?, &*real_factory(setup), shape(Some(c.q), None)),
        ("ind-chain/write-bottom-is-intermediate", build_hybrid(&write, 0)?, intermediate.as_ref(), shape(None, None)),
        ("ind-chain/update-top-is-intermediate", build_hybrid(&upd, c.r)?, intermediate.as_ref(), shape(None, Some(c.r))),
        ("ind-chain/update-bottom-is-ideal", build_hybrid(&upd, 0)?, &*ideal_factory(setup, upd.simulator()), shape(None, None)),
    ];
    let mut out = Vec::new();
    for (name, hybrid, other, sh) in cases {
        let div = scripted_equivalence(hybrid.as_ref(), other, c.endpoint_scripts, 3, seed, name, |rng| random_ue_script(&sh, rng))?;
        out.push(equivalence_check(name, div, c.endpoint_scripts));
    }
    Ok(out)
}

fn ue_game(c: &UeGame, seed: u64, trials: u64, jobs: usize) -> Result<Outcome> {
    let (kind, len) = (c.scheme, c.msg_len);
    let scheme = move |s: u64| -> Result<Arc<dyn UeScheme>> { Ok(Arc::from(build_scheme(kind, len, s)?)) };
    let adversary: Box<dyn Adversary> = match c.adversary {
        AdversaryKind::RandomGuess => random_guess(),
        AdversaryKind::NonceMatch => nonce_match(len),
        AdversaryKind::CorruptChallenge => corrupt_challenge(len),
    };
    let r = game_advantage(c.game, &scheme, adversary.as_ref(), trials, seed, jobs)?;
    let checks = c.expect.map(|e| expectation("ue-game/expectation", e, &r.advantage)).into_iter().collect();
    Ok(Outcome {
        checks,
        data: json!({ "game": r.kind, "trivial_wins": r.trivial_wins, "runs": 2 * trials }),
        advantage: Some(r.advantage),
        ..Outcome::default()
    })
}

fn records(db: &Option<Vec<u64>>, n: usize, p: u64, seed: u64) -> Vec<u64> {
    match db {
        Some(db) => db.clone(),
        None => {
            let mut rng = ChaCha20Rng::from_seed(derive_key(seed, "db"));
            (0..n).map(|_| rng.gen_range(0..p)).collect()
        }
    }
}

fn db_value(db: &[u64]) -> Value {
    Value::List(db.iter().map(|&x| Value::Field(x)).collect())
}

/// Loads the database, runs one retrieval and returns the reconstruction.
/// `erasing` servers send an erasure instead of their answer.
fn retrieve(w: &mut World, db: &[u64], i: usize, servers: Option<usize>, erasing: &[usize]) -> Result<Value> {
    w.request("C0", "init", &[db_value(db)])?;
    w.request("C0", "initComplete", &[])?;
    w.request("C", "query", &[Value::Int(i as i64)])?;
    match servers {
        None => {
            w.request("S", "answer", &[])?;
        }
        Some(k) => {
            for j in 1..=k {
                let verb = if erasing.contains(&j) { "badAnswer" } else { "answer" };
                w.request(&format!("S.{j}"), verb, &[])?;
            }
        }
    }
    w.request("C", "reconstruct", &[])
}

fn misses(db: &[u64], mut got: impl FnMut(usize) -> Result<Value>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 1..=db.len() {
        if got(i)? != Value::Field(db[i - 1]) {
            out.push(i);
        }
    }
    Ok(out)
}

fn miss_check(name: &str, missed: &[usize], n: usize) -> Check {
    if missed.is_empty() {
        check(name, true, format!("all {n} indices"))
    } else {
        check(name, false, format!("wrong record at indices {missed:?}"))
    }
}

fn pir_correctness(c: &PirCorrectness, seed: u64) -> Result<Outcome> {
    let scheme = build_pir(&c.scheme, c.n)?;
    let db = records(&c.db, c.n, scheme.field().modulus(), seed);
    let mut checks = Vec::new();
    let single = misses(&db, |i| retrieve(&mut real_world(&scheme, derive_seed(seed, &format!("single/{i}")))?, &db, i, None, &[]))?;
    checks.push(miss_check("pir-correctness/single-server", &single, c.n));
    if c.multi {
        let setup = MultiSetup { t: scheme.privacy(), byzantine: None };
        let k = scheme.servers();
        let multi = misses(&db, |i| {
            let mut w = real_multi_world(&scheme, setup, derive_seed(seed, &format!("multi/{i}")))?;
            retrieve(&mut w, &db, i, Some(k), &[])
        })?;
        checks.push(miss_check("pir-correctness/multi-server", &multi, c.n));
    }
    // Count the symbols of a real exchange.
    let mut rng = ChaCha20Rng::from_seed(derive_key(seed, "cost"));
    let s = scheme.sample(&mut rng);
    let stored = scheme.encode(&db)?;
    let q = scheme.query(1, &s)?;
    let sent: usize = q.iter().map(Vec::len).sum();
    let mut received = 0;
    for (j, qj) in q.iter().enumerate() {
        received += scheme.answer(j + 1, &stored, qj)?.len();
    }
    let cost = scheme.cost();
    checks.push(check(
        "pir-correctness/cost",
        cost.query_symbols == sent && cost.answer_symbols == received,
        format!("reported {}+{}, counted {sent}+{received}", cost.query_symbols, cost.answer_symbols),
    ));
    Ok(Outcome {
        checks,
        data: json!({ "scheme": scheme.name(), "servers": scheme.servers(), "cost": cost, "total_cost": cost.total(), "db": db }),
        ..Outcome::default()
    })
}

fn pir_privacy(c: &PirPrivacyGame, seed: u64) -> Result<Outcome> {
    let scheme = build_pir(&c.scheme, c.n)?;
    let space = randomness_space_size(scheme.as_ref()).filter(|&s| s <= MAX_ENUMERATION).ok_or_else(|| {
        CoreError::Config(format!(
            "randomness space p^{} is too large to enumerate; use a smaller field or fewer records",
            scheme.randomness_len()
        ))
    })?;
    let db = records(&c.db, c.n, scheme.field().modulus(), seed);
    let t = scheme.privacy();
    let max = c.max_coalition.unwrap_or(t).min(scheme.servers());
    let mut dependent = Vec::new();
    let mut nonzero = Vec::new();
    let mut oversized = Vec::new();
    let within = coalitions(scheme.servers(), max);
    for coalition in &within {
        let independent = views_index_independent(&scheme, &db, coalition)?;
        let mut worst = 0.0f64;
        for i in 1..=c.n {
            let d = exact_game_distance(&scheme, &db, i, coalition)?;
            if coalition.len() <= t && !d.is_zero() {
                nonzero.push(json!({ "coalition": coalition, "index": i, "distance": [d.numerator, d.denominator] }));
            }
            worst = worst.max(d.value());
        }
        if coalition.len() <= t {
            if !independent {
                dependent.push(coalition.clone());
            }
        } else {
            oversized.push(json!({ "coalition": coalition, "index_independent": independent, "max_distance": worst }));
        }
    }
    let counted = within.iter().filter(|c| c.len() <= t).count();
    let mut checks = vec![
        check(
            "pir-privacy/views-index-independent",
            dependent.is_empty(),
            if dependent.is_empty() { format!("{counted} coalitions") } else { format!("index-dependent views for {dependent:?}") },
        ),
        check(
            "pir-privacy/exact-distance-zero",
            nonzero.is_empty(),
            if nonzero.is_empty() {
                format!("{counted} coalitions x {} indices over {space} randomness strings", c.n)
            } else {
                format!("nonzero distance: {}", serde_json::Value::Array(nonzero.clone()))
            },
        ),
    ];
    let mut shape = PirScriptShape::single(c.n, scheme.stored_len(), scheme.field().modulus(), c.steps);
    shape.cell_ops = !scheme.encodes();
    for (name, world, reduction, b) in [
        ("pir-privacy/reduction-fixed-is-real", PirWorld::Real, "reduction/0", false),
        ("pir-privacy/reduction-random-is-ideal", PirWorld::Ideal, "reduction/1", true),
    ] {
        let a = factory(scheme.clone(), world);
        let r = factory(scheme.clone(), PirWorld::Reduction(b));
        let div = scripted_equivalence(a.as_ref(), r.as_ref(), c.scripts, 2, seed, reduction, |rng| random_pir_script(&shape, rng))?;
        checks.push(equivalence_check(name, div, c.scripts));
    }
    let exact = checks.iter().all(|c| c.passed);
    Ok(Outcome {
        checks,
        advantage: exact.then(|| AdvantageReport::exact_zero("exact-enumeration")),
        data: json!({ "scheme": scheme.name(), "privacy": t, "randomness_space": space, "oversized_coalitions": oversized }),
        ..Outcome::default()
    })
}

/// A uniformly random set of between `min` and `max` of the k servers.
fn random_mask(k: usize, min: usize, max: usize, rng: &mut ChaCha20Rng) -> Vec<bool> {
    let size = rng.gen_range(min..=max.min(k));
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(rng);
    let mut mask = vec![false; k];
    for &j in &idx[..size] {
        mask[j] = true;
    }
    mask
}

fn pir_multi(c: &PirMulti, seed: u64) -> Result<Outcome> {
    let scheme = build_pir(&c.scheme, c.n)?;
    let k = scheme.servers();
    let p = scheme.field().modulus();
    let setup = MultiSetup { t: c.t, byzantine: c.u };
    let mut rng = ChaCha20Rng::from_seed(derive_key(seed, "multi/scripts"));
    let mut mismatch = None;
    for s in 0..c.scripts {
        let mut shape = PirScriptShape::multi(c.n, scheme.stored_len(), p, c.steps, random_mask(k, 1, c.t, &mut rng));
        if let Some(u) = c.u {
            shape.byzantines = Some(random_mask(k, 0, u, &mut rng));
        }
        let script = random_pir_script(&shape, &mut rng);
        let world_seed = derive_seed(seed, &format!("multi/{s}"));
        let refused = |mut w: World| -> Vec<bool> { w.run(&script).responses.iter().map(Value::is_absent).collect() };
        let real = refused(real_multi_world(&scheme, setup, world_seed)?);
        let ideal = refused(ideal_multi_world(&scheme, setup, world_seed)?);
        if real != ideal {
            let at = real.iter().zip(&ideal).position(|(a, b)| a != b).unwrap_or(real.len().min(ideal.len()));
            mismatch = Some(format!("script {s}: refusals differ at step {at}: {:?}", script.get(at)));
            break;
        }
    }
    let mut checks = vec![match mismatch {
        None => check("pir-multi/guard-parity", true, format!("{} scripts", c.scripts)),
        Some(d) => check("pir-multi/guard-parity", false, d),
    }];
    let db = records(&None, c.n, p, seed);
    let erasing: Vec<usize> = (1..=c.u.unwrap_or(0)).collect();
    let missed = misses(&db, |i| {
        let mut w = real_multi_world(&scheme, setup, derive_seed(seed, &format!("multi/retrieve/{i}")))?;
        if !erasing.is_empty() {
            w.request("W", "formByzantines", &[Value::Bools((1..=k).map(|j| erasing.contains(&j)).collect())])?;
        }
        retrieve(&mut w, &db, i, Some(k), &erasing)
    })?;
    checks.push(miss_check("pir-multi/retrieval", &missed, c.n));
    Ok(Outcome {
        checks,
        data: json!({ "scheme": scheme.name(), "servers": k, "t": c.t, "u": c.u, "erasing": erasing }),
        ..Outcome::default()
    })
}

fn pir_byzantine(c: &PirByzantine, seed: u64) -> Result<Outcome> {
    let scheme = ShamirPir::new(c.p, c.n, c.k, c.t)?;
    let db = records(&c.db, c.n, c.p, seed);
    let rows = scheme.shape().rows;
    let single = byzantine_sweep(&scheme, &db, c.u, &single_deviations(c.k, c.p, rows))?;
    let mut checks = vec![check(
        "pir-byzantine/single-deviation",
        single.correct == single.runs,
        format!("{} of {} runs correct", single.correct, single.runs),
    )];
    let mut data = json!({ "single": single });
    if c.pairs {
        let mut per_server = vec![Deviation::Erase];
        per_server.extend((1..c.p).map(|d| {
            let mut v = vec![0; rows];
            v[0] = d;
            Deviation::Offset(v)
        }));
        let pair = byzantine_sweep(&scheme, &db, c.u, &double_deviations(c.k, &per_server))?;
        checks.push(check(
            "pir-byzantine/pair-never-silent",
            pair.silent_wrong == 0,
            format!("{} runs: {} correct, {} detected, {} silently wrong", pair.runs, pair.correct, pair.detected, pair.silent_wrong),
        ));
        data["pairs"] = json!(pair);
    }
    Ok(Outcome { checks, data, ..Outcome::default() })
}

/// Firewall pairs by a single left-to-right scan: epochs glued by leaked
/// tokens form runs, and a run is a region when it has no leaked key and
/// is not glued to epoch 0 or to the epoch after the last one.
fn scan_regions(h: &EventHistory, max_epoch: u64) -> BTreeSet<(u64, u64)> {
    let key = |e| h.contains(EventName::leaked_key(e));
    let token = |e| h.contains(EventName::leaked_token(e));
    let mut out = BTreeSet::new();
    let mut start = 1;
    for e in 1..=max_epoch {
        if e < max_epoch && token(e + 1) {
            continue;
        }
        let clean = (start..=e).all(|x| !key(x));
        if clean && !token(start) && !token(e + 1) {
            out.insert((start, e));
        }
        start = e + 1;
    }
    out
}

fn random_history(rng: &mut ChaCha20Rng, max_epoch: u64) -> (EventHistory, u64) {
    let e = rng.gen_range(1..=max_epoch);
    let mut h = EventHistory::new();
    for epoch in 1..=e {
        h.append(EventName::epoch(epoch));
        for _ in 0..rng.gen_range(0..3) {
            let target = rng.gen_range(1..=epoch + 1);
            match rng.gen_range(0..4) {
                0 => h.append(EventName::leaked_key(target)),
                1 | 2 => h.append(EventName::leaked_token(target)),
                _ => h.append(EventName::leaked_data(rng.gen_range(1..=4))),
            };
        }
    }
    (h, e)
}

fn disjoint(pairs: &BTreeSet<(u64, u64)>) -> bool {
    pairs.iter().zip(pairs.iter().skip(1)).all(|(a, b)| a.1 < b.0)
}

fn firewall_analysis(c: &FirewallAnalysis, seed: u64) -> Result<Outcome> {
    let mut histories = Vec::new();
    if let Some(events) = &c.events {
        let h = EventHistory::from_events(events.iter().copied());
        let e = h.current_epoch().max(1);
        histories.push((h, e));
    } else {
        let mut rng = ChaCha20Rng::from_seed(derive_key(seed, "firewall"));
        histories.extend((0..c.histories).map(|_| random_history(&mut rng, c.max_epoch)));
    }
    let mut mismatch = None;
    let mut overlap = None;
    let mut regions = 0usize;
    for (n, (h, e)) in histories.iter().enumerate() {
        let fw = compute_firewalls(h, *e);
        regions += fw.pairs.len();
        if mismatch.is_none() && fw.pairs != scan_regions(h, *e) {
            mismatch = Some(format!("history {n}: {:?} vs scan {:?}", fw.pairs, scan_regions(h, *e)));
        }
        if overlap.is_none() && !disjoint(&fw.pairs) {
            overlap = Some(format!("history {n}: {:?}", fw.pairs));
        }
    }
    let count = histories.len();
    let checks = vec![
        match mismatch {
            None => check("firewall/run-segmentation", true, format!("{count} histories")),
            Some(d) => check("firewall/run-segmentation", false, d),
        },
        match overlap {
            None => check("firewall/regions-disjoint", true, format!("{count} histories")),
            Some(d) => check("firewall/regions-disjoint", false, d),
        },
    ];
    let data = match (&c.events, histories.first()) {
        (Some(_), Some((h, e))) => {
            let fw = compute_firewalls(h, *e);
            let slots = c.slots.unwrap_or(0);
            let predicates: Vec<_> =
                (1..=slots).map(|i| json!({ "slot": i, "predicates": evaluate_predicates(h, i, slots) })).collect();
            json!({ "max_epoch": e, "pairs": fw.pairs, "insulated": fw.insulated(), "predicates": predicates })
        }
        _ => json!({ "histories": count, "mean_regions": regions as f64 / count.max(1) as f64 }),
    };
    Ok(Outcome { checks, data, ..Outcome::default() })
}
