//! Real, ideal and hybrid worlds for the UE construction, plus the chain
//! runner that telescopes the advantage between them.
//!
//! Hybrids are the real world with a rewriting converter on S.2 that replaces
//! leaks of slot k according to the chain position. Write-chain positions
//! count client writes to slot k; update-chain positions count updates of
//! slot k.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::construction::{
    encrypt_version, provenance, random_plaintext, HonSrv, Keyring, SimCpa, SimCpaPlus, SlotChain, UeClient, UeServer,
};
use super::scheme::{build_scheme, SchemeKind, UeScheme};
use crate::error::{CoreError, Result};
use crate::kernel::advantage::{estimate_advantage, AdvantageReport, Distinguisher, Z99};
use crate::kernel::rng::derive_seed;
use crate::kernel::value::{arg_index, Value};
use crate::kernel::world::{Converter, Inner, World};
use crate::memory::{CUsmr, LeakMode, UpdKey, Usmr};

pub use crate::kernel::world::BoxedFactory;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeSetup {
    pub scheme: SchemeKind,
    pub n: usize,
    pub msg_len: usize,
    /// The slot whose confidentiality is at stake.
    pub k: usize,
    pub mode: LeakMode,
}

impl UeSetup {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k < 1 || self.k > self.n {
            return Err(CoreError::Config(format!("need 1 <= k <= n, got k={} n={}", self.k, self.n)));
        }
        if self.msg_len == 0 {
            return Err(CoreError::Config("msg_len must be positive".into()));
        }
        Ok(())
    }

    /// The scheme instance of one world. Toy schemes are salted per seed so
    /// that worlds built from the same seed share their random function.
    pub fn scheme(&self, seed: u64) -> Result<Arc<dyn UeScheme>> {
        Ok(Arc::from(build_scheme(self.scheme, self.msg_len, derive_seed(seed, "scheme"))?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulatorKind {
    Cpa,
    CpaPlus,
}

impl SimulatorKind {
    pub fn for_mode(mode: LeakMode) -> Self {
        match mode {
            LeakMode::One => SimulatorKind::Cpa,
            LeakMode::Plus => SimulatorKind::CpaPlus,
        }
    }
}

fn real_base(setup: &UeSetup, seed: u64) -> Result<(World, Arc<dyn UeScheme>)> {
    setup.validate()?;
    let scheme = setup.scheme(seed)?;
    let mut w = World::new(seed);
    w.add(Box::new(Usmr::new(setup.n, setup.mode)))?;
    w.add(Box::new(UpdKey::new(scheme.clone())))?;
    w.attach(Box::new(UeClient::new(scheme.clone(), setup.n)), &["C"])?;
    w.attach(Box::new(UeServer::new(scheme.clone(), setup.n)), &["S.1"])?;
    Ok((w, scheme))
}

/// ue_cli at C and ue_ser at S.1 over [USMR, UpdKey]; S.2 is left to the
/// distinguisher.
pub fn real_world(setup: &UeSetup, seed: u64) -> Result<World> {
    Ok(real_base(setup, seed)?.0)
}

/// Simulator at S over the confidential memory.
pub fn ideal_world(setup: &UeSetup, sim: SimulatorKind, seed: u64) -> Result<World> {
    setup.validate()?;
    let scheme = setup.scheme(seed)?;
    let mut w = World::new(seed);
    w.add(Box::new(CUsmr::new(setup.n, setup.msg_len, setup.mode)))?;
    let conv: Box<dyn Converter> = match sim {
        SimulatorKind::Cpa => Box::new(SimCpa::new(scheme, setup.k)),
        SimulatorKind::CpaPlus => Box::new(SimCpaPlus::new(scheme, setup.k)),
    };
    w.attach(conv, &["S"])?;
    Ok(w)
}

/// Availability pair: the honest-server protocol world and the confidential
/// memory with the same dummy server.
pub fn honest_real_world(setup: &UeSetup, seed: u64) -> Result<World> {
    let mut w = real_world(setup, seed)?;
    w.attach(Box::new(HonSrv), &["S.2"])?;
    Ok(w)
}

pub fn honest_ideal_world(setup: &UeSetup, seed: u64) -> Result<World> {
    setup.validate()?;
    let mut w = World::new(seed);
    w.add(Box::new(CUsmr::new(setup.n, setup.msg_len, setup.mode)))?;
    w.attach(Box::new(HonSrv), &["S.2"])?;
    Ok(w)
}

/// How the rewriting converter treats leaks of slot k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LeakPolicy {
    /// Fresh content → encryption of a random plaintext; updated content
    /// passes through.
    Intermediate,
    /// Write chain: fresh content from the first i writes passes through.
    Write(u64),
    /// Update chain: fresh content randomised; updated content passes
    /// through for the first i updates, then is a fresh encryption of a
    /// random plaintext.
    Update(u64),
    /// Update chain for unrestricted leakage: after the first i updates the
    /// leak is the update chain of the randomised fresh encryption.
    PlusUpdate(u64),
}

pub struct LeakRewrite {
    k: usize,
    msg_len: usize,
    policy: LeakPolicy,
    keys: Keyring,
    chain: SlotChain,
}

impl LeakRewrite {
    pub fn new(scheme: Arc<dyn UeScheme>, k: usize, policy: LeakPolicy) -> Self {
        LeakRewrite { k, msg_len: scheme.message_len(), policy, keys: Keyring::real(scheme), chain: SlotChain::default() }
    }

    fn random_fresh(&mut self, inner: &mut Inner<'_>, epoch: u64, tag: &str) -> Result<Value> {
        let m = random_plaintext(inner, self.k, epoch, tag, self.msg_len);
        Ok(Value::Bytes(encrypt_version(inner, &mut self.keys, self.k, epoch, tag, &m)?))
    }
}

impl Converter for LeakRewrite {
    fn name(&self) -> &str {
        "hybrid"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        if iface != "S.2" {
            return Ok(Value::Absent);
        }
        let real = inner.call("S.2", verb, args)?;
        if verb != "leak" || real.is_absent() || arg_index(args, 0) != Some(self.k as i64) {
            return Ok(real);
        }
        let Some(prov) = provenance(inner, self.k)? else { return Ok(real) };
        let (epoch, tag) = (prov.epoch(), prov.tag());
        match (self.policy, prov.is_fresh()) {
            (LeakPolicy::Write(i), true) if prov.write_ordinal <= i => Ok(real),
            (_, true) => self.random_fresh(inner, epoch, &tag),
            (LeakPolicy::Intermediate | LeakPolicy::Write(_), false) => Ok(real),
            (LeakPolicy::Update(i) | LeakPolicy::PlusUpdate(i), false) if prov.update_ordinal <= i => Ok(real),
            (LeakPolicy::Update(_), false) => self.random_fresh(inner, epoch, &tag),
            (LeakPolicy::PlusUpdate(_), false) => {
                let (k, len) = (self.k, self.msg_len);
                let ct = self.chain.sync(inner, &mut self.keys, k, &prov, |inner| {
                    Ok(random_plaintext(inner, k, prov.origin_epoch, &prov.fresh_tag(), len))
                })?;
                Ok(Value::Bytes(ct))
            }
        }
    }
}

pub fn rewritten_world(setup: &UeSetup, policy: LeakPolicy, seed: u64) -> Result<World> {
    let (mut w, scheme) = real_base(setup, seed)?;
    w.attach(Box::new(LeakRewrite::new(scheme, setup.k, policy)), &["S.2"])?;
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengeKind {
    /// (m0, m1): the write chain.
    EncPair,
    /// (m̄, c̄): the update chain under single leaks.
    UePair,
    /// (c0, c1): the update chain under unrestricted leaks.
    UpdPair,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridChainConfig {
    pub setup: UeSetup,
    pub challenge: ChallengeKind,
    /// Writes to slot k.
    pub q: u64,
    /// Updates.
    pub r: u64,
}

impl HybridChainConfig {
    pub fn chain_len(&self) -> u64 {
        match self.challenge {
            ChallengeKind::EncPair => self.q,
            ChallengeKind::UePair | ChallengeKind::UpdPair => self.r,
        }
    }

    pub fn policy(&self, i: u64) -> Result<LeakPolicy> {
        let bound = self.chain_len();
        if i > bound {
            return Err(CoreError::IndexOutOfBounds { index: i as usize, bound: bound as usize });
        }
        Ok(match self.challenge {
            ChallengeKind::EncPair => LeakPolicy::Write(i),
            ChallengeKind::UePair => LeakPolicy::Update(i),
            ChallengeKind::UpdPair => LeakPolicy::PlusUpdate(i),
        })
    }

    /// The ideal endpoint of the update chain for this challenge kind.
    pub fn simulator(&self) -> SimulatorKind {
        match self.challenge {
            ChallengeKind::UpdPair => SimulatorKind::CpaPlus,
            _ => SimulatorKind::for_mode(self.setup.mode),
        }
    }
}

pub fn build_hybrid(config: &HybridChainConfig, i: u64) -> Result<BoxedFactory> {
    let policy = config.policy(i)?;
    let setup = config.setup.clone();
    Ok(Box::new(move |seed| rewritten_world(&setup, policy, seed)))
}

pub fn real_factory(setup: &UeSetup) -> BoxedFactory {
    let setup = setup.clone();
    Box::new(move |seed| real_world(&setup, seed))
}

pub fn ideal_factory(setup: &UeSetup, sim: SimulatorKind) -> BoxedFactory {
    let setup = setup.clone();
    Box::new(move |seed| ideal_world(&setup, sim, seed))
}

/// The world between the two chains.
pub fn intermediate_factory(setup: &UeSetup) -> BoxedFactory {
    let setup = setup.clone();
    Box::new(move |seed| rewritten_world(&setup, LeakPolicy::Intermediate, seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct LinkReport {
    pub chain: ChallengeKind,
    /// The link compares position `index` with `index - 1`.
    pub index: u64,
    pub advantage: AdvantageReport,
    pub signed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub links: Vec<LinkReport>,
    /// Sum of the signed link differences.
    pub telescoped_total: f64,
    /// 99% half-width of the telescoped sum.
    pub total_half_width: f64,
    pub endpoint: AdvantageReport,
    pub bound_coefficient: u64,
    pub max_link: f64,
    /// Endpoint interval is compatible with coefficient × largest link upper
    /// bound, and the telescoped sum with the endpoint.
    pub bound_holds: bool,
    pub telescoping_consistent: bool,
}

fn signed(r: &AdvantageReport) -> f64 {
    r.p_a - r.p_b
}

fn half_width(r: &AdvantageReport) -> f64 {
    (r.ci_high - r.ci_low) / 2.0
}

/// Walks the write chain from R down to the intermediate world, then the
/// update chain down to the ideal world given by `update_chain`.
pub fn run_reduction_chain(
    setup: &UeSetup,
    q: u64,
    r: u64,
    update_chain: ChallengeKind,
    d: &dyn Distinguisher,
    trials: u64,
    base_seed: u64,
    jobs: usize,
) -> Result<ChainReport> {
    if update_chain == ChallengeKind::EncPair {
        return Err(CoreError::Config("update chain must be ue-pair or upd-pair".into()));
    }
    let write = HybridChainConfig { setup: setup.clone(), challenge: ChallengeKind::EncPair, q, r };
    let upd = HybridChainConfig { setup: setup.clone(), challenge: update_chain, q, r };
    let mut links = Vec::new();
    for cfg in [&write, &upd] {
        for i in (1..=cfg.chain_len()).rev() {
            let hi = build_hybrid(cfg, i)?;
            let lo = build_hybrid(cfg, i - 1)?;
            let seed = derive_seed(base_seed, &format!("link/{:?}/{i}", cfg.challenge));
            let adv = estimate_advantage(hi.as_ref(), lo.as_ref(), d, trials, seed, jobs)?;
            links.push(LinkReport { chain: cfg.challenge, index: i, signed: signed(&adv), advantage: adv });
        }
    }
    let endpoint = estimate_advantage(
        real_factory(setup).as_ref(),
        ideal_factory(setup, upd.simulator()).as_ref(),
        d,
        trials,
        derive_seed(base_seed, "endpoint"),
        jobs,
    )?;
    let telescoped_total = links.iter().map(|l| l.signed).sum::<f64>();
    let total_half_width = links.iter().map(|l| (half_width(&l.advantage) / Z99).powi(2)).sum::<f64>().sqrt() * Z99;
    let max_link = links.iter().map(|l| l.advantage.estimate).fold(0.0, f64::max);
    let max_link_upper = links.iter().map(|l| l.advantage.abs_interval().1).fold(0.0, f64::max);
    let bound_coefficient = (2 * q + r).min(q + 2 * r);
    let bound_holds = endpoint.abs_interval().0 <= bound_coefficient as f64 * max_link_upper;
    let slack = total_half_width + half_width(&endpoint);
    let telescoping_consistent = (telescoped_total - signed(&endpoint)).abs() <= slack;
    Ok(ChainReport {
        links,
        telescoped_total,
        total_half_width,
        endpoint,
        bound_coefficient,
        max_link,
        bound_holds,
        telescoping_consistent,
    })
}

/// Value class of a slot-k leak in the table layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LeakClass {
    /// Fresh encryption of the written plaintext.
    EncReal,
    /// Fresh encryption of a random plaintext.
    EncRandom,
    /// Update chain of the written plaintext.
    UpdReal,
    /// Update chain of a random plaintext.
    UpdRandom,
}

/// Classifies a leaked slot-k ciphertext by decrypting it under the real key
/// of its epoch and comparing with the plaintext the client wrote.
pub fn classify_leak(world: &mut World, scheme: &dyn UeScheme, k: usize, leaked: &[u8], written: &[u8]) -> Result<Option<LeakClass>> {
    let prov = world.inspect("provenance", &[Value::Int(k as i64)])?;
    let Some(prov) = crate::memory::Provenance::from_value(&prov) else { return Ok(None) };
    let key = world.inspect("key", &[Value::Int(prov.epoch() as i64)])?;
    let Some(key) = key.as_bytes() else { return Ok(None) };
    let real = scheme.dec(key, leaked).ok().as_deref() == Some(written);
    Ok(Some(match (prov.is_fresh(), real) {
        (true, true) => LeakClass::EncReal,
        (true, false) => LeakClass::EncRandom,
        (false, true) => LeakClass::UpdReal,
        (false, false) => LeakClass::UpdRandom,
    }))
}

/// Expected class for the j-th relevant leak (1-based) at chain position i.
pub fn table_cell(challenge: ChallengeKind, i: u64, j: u64) -> LeakClass {
    match challenge {
        ChallengeKind::EncPair if j <= i => LeakClass::EncReal,
        ChallengeKind::EncPair => LeakClass::EncRandom,
        ChallengeKind::UePair if j <= i => LeakClass::UpdReal,
        // A fresh encryption of x̄ under the current key.
        ChallengeKind::UePair => LeakClass::UpdRandom,
        ChallengeKind::UpdPair if j <= i => LeakClass::UpdReal,
        ChallengeKind::UpdPair => LeakClass::UpdRandom,
    }
}

/// Per-column check: runs the chain's canonical scenario at position i and
/// compares every slot-k leak with the table cell. Returns (column, expected,
/// observed) for each leak.
pub fn table_columns(config: &HybridChainConfig, i: u64, seed: u64) -> Result<Vec<(u64, LeakClass, Option<LeakClass>)>> {
    let setup = &config.setup;
    let factory = build_hybrid(config, i)?;
    let mut w = factory(seed)?;
    let scheme = setup.scheme(seed)?;
    let k = Value::Int(setup.k as i64);
    let mut out = Vec::new();
    let mut plaintexts: HashMap<u64, Vec<u8>> = HashMap::new();
    let message = |j: u64| (0..setup.msg_len).map(|b| (j as u8).wrapping_mul(31).wrapping_add(b as u8)).collect::<Vec<u8>>();
    match config.challenge {
        ChallengeKind::EncPair => {
            for j in 1..=config.q {
                let m = message(j);
                w.request("C", "write", &[k.clone(), Value::Bytes(m.clone())])?;
                let c = w.request("S.2", "leak", &[k.clone()])?;
                let got = match c.as_bytes() {
                    Some(c) => classify_leak(&mut w, scheme.as_ref(), setup.k, c, &m)?,
                    None => None,
                };
                out.push((j, table_cell(config.challenge, i, j), got));
                // Move to a fresh epoch so single-leak budgets never bind.
                w.request("C", "askUpdate", &[])?;
                w.request("S.1", "update", &[])?;
                plaintexts.insert(j, m);
            }
        }
        ChallengeKind::UePair | ChallengeKind::UpdPair => {
            let m = message(0);
            w.request("C", "write", &[k.clone(), Value::Bytes(m.clone())])?;
            for j in 1..=config.r {
                w.request("C", "askUpdate", &[])?;
                w.request("S.1", "update", &[])?;
                let c = w.request("S.2", "leak", &[k.clone()])?;
                let got = match c.as_bytes() {
                    Some(c) => classify_leak(&mut w, scheme.as_ref(), setup.k, c, &m)?,
                    None => None,
                };
                out.push((j, table_cell(config.challenge, i, j), got));
            }
        }
    }
    Ok(out)
}
