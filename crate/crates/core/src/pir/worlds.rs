//! World builders for the PIR constructions.

use std::sync::Arc;

use super::db::{server_iface, Db, MultDb, PrivDb};
use super::game::ReductionC;
use super::protocol::{C0Encoder, HonestDb, MultPirServer, PirClient, PirServer, SimPriv, SimPrivMult};
use super::scheme::PirScheme;
use crate::error::Result;
use crate::kernel::world::{BoxedFactory, World};

fn modulus(scheme: &Arc<dyn PirScheme>) -> u64 {
    scheme.field().modulus()
}

/// pir_cli at C and pir_ser at S of the basic database; the encoder sits at
/// C0 when the scheme transforms the database.
pub fn real_world(scheme: &Arc<dyn PirScheme>, seed: u64) -> Result<World> {
    let mut w = World::new(seed).with(Box::new(Db::new(scheme.stored_len(), modulus(scheme))))?;
    if scheme.encodes() {
        w.attach(Box::new(C0Encoder::new(scheme.clone())), &["C0"])?;
    }
    w.attach(Box::new(PirClient::single(scheme.clone())), &["C"])?;
    w.attach(Box::new(PirServer::new(scheme.clone())), &["S"])?;
    Ok(w)
}

pub fn honest_real_world(scheme: &Arc<dyn PirScheme>, seed: u64) -> Result<World> {
    let mut w = World::new(seed).with(Box::new(Db::new(scheme.stored_len(), modulus(scheme))))?;
    if scheme.encodes() {
        w.attach(Box::new(C0Encoder::new(scheme.clone())), &["C0"])?;
    }
    w.attach(Box::new(PirClient::single(scheme.clone())), &["C"])?;
    w.attach(Box::new(PirServer::honest(scheme.clone())), &["S"])?;
    Ok(w)
}

pub fn ideal_world(scheme: &Arc<dyn PirScheme>, seed: u64) -> Result<World> {
    World::new(seed)
        .with(Box::new(PrivDb::new(scheme.n(), modulus(scheme))))?
        .attached(Box::new(SimPriv::new(scheme.clone())), &["S"])
}

pub fn honest_ideal_world(scheme: &Arc<dyn PirScheme>, seed: u64) -> Result<World> {
    World::new(seed)
        .with(Box::new(PrivDb::new(scheme.n(), modulus(scheme))))?
        .attached(Box::new(HonestDb), &["S"])
}

/// The reduction wired to the privacy game with bit b.
pub fn reduction_world(scheme: &Arc<dyn PirScheme>, b: bool, seed: u64) -> Result<World> {
    World::new(seed).with(Box::new(ReductionC::new(scheme.clone(), b)))
}

/// k servers, coalitions of at most t, and optionally up to u Byzantine
/// servers whose answers the client tolerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiSetup {
    pub t: usize,
    pub byzantine: Option<usize>,
}

pub fn real_multi_world(scheme: &Arc<dyn PirScheme>, setup: MultiSetup, seed: u64) -> Result<World> {
    let k = scheme.servers();
    let db = MultDb::basic(scheme.stored_len(), modulus(scheme), k, setup.t, setup.byzantine)?;
    let mut w = World::new(seed).with(Box::new(db))?;
    if scheme.encodes() {
        w.attach(Box::new(C0Encoder::new(scheme.clone())), &["C0"])?;
    }
    w.attach(Box::new(PirClient::multi(scheme.clone(), setup.byzantine.unwrap_or(0))), &["C"])?;
    for j in 1..=k {
        w.attach(Box::new(MultPirServer::new(scheme.clone(), j)), &[&server_iface(j)])?;
    }
    Ok(w)
}

pub fn ideal_multi_world(scheme: &Arc<dyn PirScheme>, setup: MultiSetup, seed: u64) -> Result<World> {
    let k = scheme.servers();
    let db = MultDb::private(scheme.n(), modulus(scheme), k, setup.t, setup.byzantine)?;
    let ifaces: Vec<String> = (1..=k).map(server_iface).collect();
    let at: Vec<&str> = ifaces.iter().map(String::as_str).collect();
    World::new(seed).with(Box::new(db))?.attached(Box::new(SimPrivMult::new(scheme.clone())), &at)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PirWorld {
    Real,
    HonestReal,
    Ideal,
    HonestIdeal,
    Reduction(bool),
    RealMulti(MultiSetup),
    IdealMulti(MultiSetup),
}

pub fn factory(scheme: Arc<dyn PirScheme>, which: PirWorld) -> BoxedFactory {
    Box::new(move |seed| match which {
        PirWorld::Real => real_world(&scheme, seed),
        PirWorld::HonestReal => honest_real_world(&scheme, seed),
        PirWorld::Ideal => ideal_world(&scheme, seed),
        PirWorld::HonestIdeal => honest_ideal_world(&scheme, seed),
        PirWorld::Reduction(b) => reduction_world(&scheme, b, seed),
        PirWorld::RealMulti(s) => real_multi_world(&scheme, s, seed),
        PirWorld::IdealMulti(s) => ideal_multi_world(&scheme, s, seed),
    })
}
