use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cclab_core::harness::config::ExperimentConfig;
use cclab_core::harness::dbfile::{demo_pir, DbFile};
use cclab_core::harness::{list_checks, run, RunOptions};
use cclab_core::kernel::value::Value;
use cclab_core::kernel::world::{req, Step};
use cclab_core::memory::LeakMode;
use cclab_core::ue::hybrid::{honest_ideal_world, honest_real_world, UeSetup};
use cclab_core::ue::scheme::SchemeKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cclab", version, about = "Composable-security experiments for updatable encryption and PIR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and emit a JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "CCLAB_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every named check with the invariant it asserts.
    ListChecks,
    /// Retrieve one record of a hex database through the k-server protocol.
    DemoPir {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        servers: usize,
        #[arg(long)]
        threshold: usize,
        #[arg(long, env = "CCLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Write, rotate and read back through the UE protocol with an honest
    /// server, next to the confidential memory it realises.
    DemoUe {
        #[arg(long, default_value = "toy", value_parser = parse_scheme)]
        scheme: SchemeKind,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        msg_len: usize,
        #[arg(long, default_value_t = 2)]
        epochs: usize,
        #[arg(long, env = "CCLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown scheme {s:?}; expected toy, toy-static, rise-small or rise-large"))
}

/// Exit status 2 marks configuration problems, 1 a failed check.
enum Failure {
    Config(anyhow::Error),
    Checks,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, trials, jobs, out } => run_experiment(config, seed, trials, jobs, out),
        Command::ListChecks => {
            for (name, invariant) in list_checks() {
                println!("{name}\t{invariant}");
            }
            Ok(())
        }
        Command::DemoPir { db, index, servers, threshold, seed } => demo_pir_cmd(db, index, servers, threshold, seed).map_err(Failure::from),
        Command::DemoUe { scheme, n, msg_len, epochs, seed } => demo_ue(scheme, n, msg_len, epochs, seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run_experiment(config: PathBuf, seed: Option<u64>, trials: Option<u64>, jobs: usize, out: Option<PathBuf>) -> Result<(), Failure> {
    let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
    let report = run(&cfg, RunOptions { seed, trials, jobs }).context("running experiment")?;
    let json = report.to_json();
    match &out {
        Some(path) => std::fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn demo_pir_cmd(db: PathBuf, index: usize, servers: usize, threshold: usize, seed: u64) -> Result<()> {
    let file = DbFile::load(&db).with_context(|| format!("loading {}", db.display()))?;
    let (value, cost) = demo_pir(&file.records, index, servers, threshold, file.meta.field_p, seed)?;
    println!("M[{index}] = {value} ({value:#x})");
    println!(
        "cost |q| + |a| = {} + {} = {} symbols of GF({})",
        cost.query_symbols,
        cost.answer_symbols,
        cost.total(),
        file.meta.field_p
    );
    Ok(())
}

fn show(v: &Value) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn demo_ue(scheme: SchemeKind, n: usize, msg_len: usize, epochs: usize, seed: u64) -> Result<(), Failure> {
    let setup = UeSetup { scheme, n, msg_len, k: 1, mode: LeakMode::One };
    setup.validate().map_err(anyhow::Error::from)?;
    let int = |i: usize| Value::Int(i as i64);
    let mut script: Vec<Step> = Vec::new();
    for i in 1..=n {
        let msg: Vec<u8> = (0..msg_len).map(|b| (i * 16 + b) as u8).collect();
        script.push(req("C", "write", vec![int(i), Value::Bytes(msg)]));
    }
    for _ in 0..epochs {
        script.push(req("C", "askUpdate", vec![]));
        script.push(req("C", "getStatus", vec![]));
        script.push(req("S.1", "update", vec![]));
    }
    script.extend((1..=n).map(|i| req("C", "read", vec![int(i)])));
    let real = honest_real_world(&setup, seed).map_err(anyhow::Error::from)?.run(&script);
    let ideal = honest_ideal_world(&setup, seed).map_err(anyhow::Error::from)?.run(&script);
    if let Some(e) = real.error.as_ref().or(ideal.error.as_ref()) {
        return Err(anyhow::anyhow!("interaction failed: {e}").into());
    }
    for (step, (a, b)) in script.iter().zip(real.responses.iter().zip(&ideal.responses)) {
        let Step::Request(r) = step else { continue };
        let args: Vec<String> = r.args.iter().map(show).collect();
        println!("{}.{}({}) -> protocol {} | ideal {}", r.interface, r.verb, args.join(", "), show(a), show(b));
    }
    let history: Vec<String> = real.history.iter().map(ToString::to_string).collect();
    println!("history: {}", history.join(" "));
    if real.responses == ideal.responses && real.history == ideal.history {
        println!("traces identical");
        Ok(())
    } else {
        eprintln!("traces differ");
        Err(Failure::Checks)
    }
}
