//! Experiment configurations, loaded from JSON and validated before any
//! world is built.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::distinguishers::Builtin;
use super::script::Script;
use crate::error::{CoreError, Result};
use crate::kernel::history::EventName;
use crate::memory::LeakMode;
use crate::pir::scheme::SchemeSpec;
use crate::ue::games::GameKind;
use crate::ue::hybrid::{ChallengeKind, SimulatorKind, UeSetup};
use crate::ue::scheme::SchemeKind;

/// Top-level JSON object: the experiment fields tagged by `kind`, plus the
/// optional run-wide `seed` and `trials`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    UeAvailability(UeAvailability),
    UeIndChain(UeIndChain),
    UeGame(UeGame),
    PirCorrectness(PirCorrectness),
    PirPrivacyGame(PirPrivacyGame),
    PirMulti(PirMulti),
    PirByzantine(PirByzantine),
    FirewallAnalysis(FirewallAnalysis),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::UeAvailability(_) => "ue-availability",
            Experiment::UeIndChain(_) => "ue-ind-chain",
            Experiment::UeGame(_) => "ue-game",
            Experiment::PirCorrectness(_) => "pir-correctness",
            Experiment::PirPrivacyGame(_) => "pir-privacy-game",
            Experiment::PirMulti(_) => "pir-multi",
            Experiment::PirByzantine(_) => "pir-byzantine",
            Experiment::FirewallAnalysis(_) => "firewall-analysis",
        }
    }
}

fn d50() -> usize {
    50
}
fn d40() -> usize {
    40
}
fn d60() -> usize {
    60
}
fn d10() -> usize {
    10
}
fn d100() -> usize {
    100
}
fn d1000() -> usize {
    1000
}
fn d8() -> u64 {
    8
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeAvailability {
    pub setup: UeSetup,
    #[serde(default = "d50")]
    pub scripts: usize,
    #[serde(default = "d60")]
    pub steps: usize,
    #[serde(default = "d10")]
    pub seeds: usize,
}

/// What the advantage should look like.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expect {
    /// 99% interval contains 0 and the point estimate stays below the bound.
    Indistinguishable { max_estimate: f64 },
    /// Point estimate above the bound and the interval on |Δ| clear of 0.5.
    Distinguishable { min_estimate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistinguisherSpec {
    Builtin(Builtin),
    Script(Script),
    /// Path to a script file, relative to the config file. Replaced by the
    /// parsed script when the config is loaded.
    ScriptFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeIndChain {
    pub setup: UeSetup,
    /// Writes to slot k.
    pub q: u64,
    /// Updates.
    pub r: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulator: Option<SimulatorKind>,
    pub distinguisher: DistinguisherSpec,
    /// Length of random scripts for trace-parity and endpoint checks.
    #[serde(default = "d40")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    /// Also walk the hybrid chain with this update-chain kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChallengeKind>,
    /// Random scripts for the exact endpoint checks of the chain.
    #[serde(default = "d40")]
    pub endpoint_scripts: usize,
}

impl UeIndChain {
    pub fn simulator(&self) -> SimulatorKind {
        self.simulator.unwrap_or(SimulatorKind::for_mode(self.setup.mode))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    RandomGuess,
    /// Compares the challenge nonce with that of the submitted ciphertext.
    NonceMatch,
    /// Corrupts the challenge-epoch key, which the game must flag.
    CorruptChallenge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeGame {
    pub game: GameKind,
    pub scheme: SchemeKind,
    pub msg_len: usize,
    pub adversary: AdversaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PirCorrectness {
    pub scheme: SchemeSpec,
    pub n: usize,
    /// Records; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db: Option<Vec<u64>>,
    /// Also retrieve through the multi-server worlds.
    #[serde(default = "yes")]
    pub multi: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PirPrivacyGame {
    pub scheme: SchemeSpec,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db: Option<Vec<u64>>,
    /// Largest coalition enumerated; the scheme's threshold by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_coalition: Option<usize>,
    /// Randomised scripts for the reduction wiring checks.
    #[serde(default = "d100")]
    pub scripts: usize,
    #[serde(default = "d40")]
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PirMulti {
    pub scheme: SchemeSpec,
    pub n: usize,
    pub t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
    #[serde(default = "d60")]
    pub scripts: usize,
    #[serde(default = "d40")]
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PirByzantine {
    pub p: u64,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub u: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db: Option<Vec<u64>>,
    /// Also sweep every pair of deviating servers.
    #[serde(default = "yes")]
    pub pairs: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirewallAnalysis {
    #[serde(default = "d1000")]
    pub histories: usize,
    #[serde(default = "d8")]
    pub max_epoch: u64,
    /// Analyse this history instead of random ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<EventName>>,
    /// Slots whose predicates are reported for an explicit history.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<u64>,
}

fn bad<T>(msg: String) -> Result<T> {
    Err(CoreError::Config(msg))
}

fn check_db(db: &Option<Vec<u64>>, n: usize, p: u64) -> Result<()> {
    if let Some(db) = db {
        if db.len() != n {
            return bad(format!("db has {} records but n = {n}", db.len()));
        }
        if let Some(x) = db.iter().find(|&&x| x >= p) {
            return bad(format!("record {x} is not an element of GF({p})"));
        }
    }
    Ok(())
}

fn check_scheme(spec: &SchemeSpec, n: usize) -> Result<u64> {
    if n == 0 {
        return bad("n must be at least 1".into());
    }
    match *spec {
        SchemeSpec::Shamir { p, k, t } => {
            if k < t + 1 {
                return bad(format!("shamir needs k >= t + 1, got k = {k}, t = {t}"));
            }
            Ok(p)
        }
        SchemeSpec::Ldc { p, .. } => Ok(p),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CoreError::Config(format!("config parse error at line {}, column {}: {e}", e.line(), e.column())))?;
        let Some(obj) = v.as_object_mut() else { return bad("config must be a JSON object".into()) };
        let mut take = |key: &str| -> Result<Option<u64>> {
            match obj.remove(key) {
                None => Ok(None),
                Some(x) => x.as_u64().map(Some).ok_or_else(|| CoreError::Config(format!("{key} must be a non-negative integer"))),
            }
        };
        let seed = take("seed")?;
        let trials = take("trials")?;
        let experiment = serde_json::from_value(v).map_err(|e| CoreError::Config(format!("config: {e}")))?;
        Ok(ExperimentConfig { experiment, seed, trials })
    }

    /// Reads, parses, resolves script files and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Experiment::UeIndChain(c) = &mut cfg.experiment {
            if let DistinguisherSpec::ScriptFile(rel) = &c.distinguisher {
                let full = path.parent().unwrap_or(Path::new(".")).join(rel);
                let text = std::fs::read_to_string(&full).map_err(|e| CoreError::Config(format!("{}: {e}", full.display())))?;
                c.distinguisher = DistinguisherSpec::Script(Script::parse(&text)?);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == Some(0) {
            return bad("trials must be at least 1".into());
        }
        match &self.experiment {
            Experiment::UeAvailability(c) => {
                c.setup.validate()?;
                if c.scripts == 0 || c.seeds == 0 {
                    return bad("need at least one script and one seed".into());
                }
            }
            Experiment::UeIndChain(c) => {
                c.setup.validate()?;
                if c.chain == Some(ChallengeKind::EncPair) {
                    return bad("chain names the update chain: ue-pair or upd-pair".into());
                }
                if c.chain == Some(ChallengeKind::UpdPair) && c.setup.mode != LeakMode::Plus {
                    return bad("the upd-pair chain needs plus leak mode".into());
                }
                if let DistinguisherSpec::ScriptFile(p) = &c.distinguisher {
                    return bad(format!("script file {} was not resolved; load the config from disk", p.display()));
                }
            }
            Experiment::UeGame(c) => {
                if c.msg_len == 0 {
                    return bad("msg_len must be positive".into());
                }
            }
            Experiment::PirCorrectness(c) => {
                let p = check_scheme(&c.scheme, c.n)?;
                check_db(&c.db, c.n, p)?;
            }
            Experiment::PirPrivacyGame(c) => {
                let p = check_scheme(&c.scheme, c.n)?;
                check_db(&c.db, c.n, p)?;
            }
            Experiment::PirMulti(c) => {
                check_scheme(&c.scheme, c.n)?;
                if let (SchemeSpec::Shamir { k, .. }, Some(u)) = (&c.scheme, c.u) {
                    if *k < c.t + 1 + u {
                        return bad(format!("byzantine mode needs k >= t + 1 + u, got k = {k}, t = {}, u = {u}", c.t));
                    }
                }
            }
            Experiment::PirByzantine(c) => {
                let spec = SchemeSpec::Shamir { p: c.p, k: c.k, t: c.t };
                check_scheme(&spec, c.n)?;
                check_db(&c.db, c.n, c.p)?;
                if c.k < c.t + 1 + c.u {
                    return bad(format!("byzantine mode needs k >= t + 1 + u, got k = {}, t = {}, u = {}", c.k, c.t, c.u));
                }
            }
            Experiment::FirewallAnalysis(c) => {
                if c.max_epoch == 0 {
                    return bad("max_epoch must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}
