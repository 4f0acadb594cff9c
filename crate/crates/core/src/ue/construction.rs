//! Protocol converters for the updatable memory and the simulators that
//! replace them over the confidential memory.
//!
//! Coin discipline: every encryption of slot i in epoch e draws its coins from
//! the label `ue/ct/{i}/{e}/{tag}`, where the tag is `w{v}` for the v-th client
//! write request to that slot in that epoch and `u` for an update. Random
//! stand-in plaintexts use `ue/xbar/...` with the same suffix. Real and
//! simulated worlds sharing a seed therefore produce byte-identical
//! ciphertexts wherever their distributions coincide.

use std::collections::HashMap;
use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha20Rng;

use super::scheme::UeScheme;
use crate::error::{CoreError, Result};
use crate::kernel::history::EventName;
use crate::kernel::value::{arg_index, Value};
use crate::kernel::world::{Converter, Inner, META};
use crate::memory::{Provenance, KEY_STREAM};

pub fn ct_coins(inner: &Inner<'_>, slot: usize, epoch: u64, tag: &str) -> ChaCha20Rng {
    inner.ctx.rng.coins(&format!("ue/ct/{slot}/{epoch}/{tag}"))
}

pub fn random_plaintext(inner: &Inner<'_>, slot: usize, epoch: u64, tag: &str, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    inner.ctx.rng.coins(&format!("ue/xbar/{slot}/{epoch}/{tag}")).fill_bytes(&mut out);
    out
}

pub fn provenance(inner: &mut Inner<'_>, slot: usize) -> Result<Option<Provenance>> {
    let v = inner.call(META, "provenance", &[Value::Int(slot as i64)])?;
    Ok(Provenance::from_value(&v))
}

fn status(v: &Value) -> bool {
    v.as_bool().unwrap_or(false)
}

/// Client side of the protocol, attached at C of [USMR, UpdKey].
pub struct UeClient {
    scheme: Arc<dyn UeScheme>,
    n: usize,
    key: Vec<u8>,
    requests: HashMap<(usize, u64), u64>,
}

impl UeClient {
    pub fn new(scheme: Arc<dyn UeScheme>, n: usize) -> Self {
        UeClient { scheme, n, key: Vec::new(), requests: HashMap::new() }
    }
}

impl Converter for UeClient {
    fn name(&self) -> &str {
        "ue_cli"
    }

    fn init(&mut self, inner: &mut Inner<'_>) -> Result<()> {
        self.key = inner.call("C", "fetchKey", &[])?.as_bytes().unwrap_or_default().to_vec();
        Ok(())
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        if iface != "C" {
            return Ok(Value::Absent);
        }
        match verb {
            "read" => {
                let c = inner.call("C", "read", args)?;
                Ok(match c.as_bytes().map(|c| self.scheme.dec(&self.key, c).ok()) {
                    Some(Some(m)) => Value::Bytes(m),
                    _ => Value::Absent,
                })
            }
            "write" => {
                let Some(i) = arg_index(args, 0) else { return Ok(Value::Absent) };
                if i < 1 || i as usize > self.n {
                    return Err(CoreError::IndexOutOfRange { index: i, n: self.n });
                }
                let slot = i as usize;
                let Some(x) = args.get(1).and_then(Value::as_bytes) else { return Ok(Value::Absent) };
                if x.len() != self.scheme.message_len() {
                    return Ok(Value::Absent);
                }
                let epoch = inner.history().current_epoch();
                let v = self.requests.entry((slot, epoch)).or_default();
                *v += 1;
                let tag = format!("w{v}");
                let c = self.scheme.enc(&self.key, x, &mut ct_coins(inner, slot, epoch, &tag));
                inner.call("C", "write", &[Value::Int(i), Value::Bytes(c)])
            }
            "askUpdate" => {
                if !status(&inner.call("C", "getStatus", &[])?) {
                    self.key = inner.call("C", "nextEpoch", &[])?.as_bytes().unwrap_or_default().to_vec();
                    inner.call("C", "askUpdate", &[])?;
                }
                Ok(Value::Absent)
            }
            "getStatus" => inner.call("C", "getStatus", &[]),
            _ => Ok(Value::Absent),
        }
    }
}

/// Server side of the protocol, attached at S.1. Only `update` is reachable
/// from outside.
pub struct UeServer {
    scheme: Arc<dyn UeScheme>,
    n: usize,
    epoch: u64,
}

impl UeServer {
    pub fn new(scheme: Arc<dyn UeScheme>, n: usize) -> Self {
        UeServer { scheme, n, epoch: 1 }
    }
}

impl Converter for UeServer {
    fn name(&self) -> &str {
        "ue_ser"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, _args: &[Value]) -> Result<Value> {
        if iface != "S.1" || verb != "update" {
            return Ok(Value::Absent);
        }
        if !status(&inner.call("S.2", "getStatus", &[])?) {
            return Ok(Value::Absent);
        }
        self.epoch += 1;
        let e = self.epoch;
        let token = inner.call("S.1", "fetchToken", &[Value::Int(e as i64)])?;
        let token = token.as_bytes().unwrap_or_default().to_vec();
        for i in 1..=self.n {
            let c = inner.call("S.1", "read", &[Value::Int(i as i64)])?;
            let Some(c) = c.as_bytes() else { continue };
            let c2 = self.scheme.upd(&token, c, &mut ct_coins(inner, i, e, "u"));
            inner.call("S.1", "write", &[Value::Int(i as i64), Value::Bytes(c2)])?;
        }
        inner.call("S.1", "update", &[])?;
        Ok(Value::Absent)
    }
}

/// Dummy honest server: blocks every adversarial request.
pub struct HonSrv;

impl Converter for HonSrv {
    fn name(&self) -> &str {
        "honSrv"
    }

    fn handle(&mut self, _inner: &mut Inner<'_>, _iface: &str, _verb: &str, _args: &[Value]) -> Result<Value> {
        Ok(Value::Absent)
    }
}

/// Epoch keys as seen by a simulator or hybrid: either sampled privately from
/// the key stream or read from the real key resource.
pub enum Keyring {
    Simulated { scheme: Arc<dyn UeScheme>, keys: Vec<Vec<u8>> },
    Real { scheme: Arc<dyn UeScheme> },
}

impl Keyring {
    pub fn simulated(scheme: Arc<dyn UeScheme>) -> Self {
        Keyring::Simulated { scheme, keys: Vec::new() }
    }

    pub fn real(scheme: Arc<dyn UeScheme>) -> Self {
        Keyring::Real { scheme }
    }

    pub fn key(&mut self, inner: &mut Inner<'_>, e: u64) -> Result<Vec<u8>> {
        match self {
            Keyring::Simulated { scheme, keys } => {
                while (keys.len() as u64) < e {
                    keys.push(scheme.keygen(inner.ctx.rng.stream(KEY_STREAM))?);
                }
                Ok(keys[e as usize - 1].clone())
            }
            Keyring::Real { .. } => {
                Ok(inner.call(META, "key", &[Value::Int(e as i64)])?.as_bytes().unwrap_or_default().to_vec())
            }
        }
    }

    pub fn token(&mut self, inner: &mut Inner<'_>, e: u64) -> Result<Vec<u8>> {
        let (old, new) = (self.key(inner, e - 1)?, self.key(inner, e)?);
        Ok(self.scheme().tokengen(&old, &new))
    }

    pub fn scheme(&self) -> &Arc<dyn UeScheme> {
        match self {
            Keyring::Simulated { scheme, .. } | Keyring::Real { scheme } => scheme,
        }
    }

    /// Answer leakKey/leakToken under the authorisation rules of the key
    /// resource.
    pub fn leak(&mut self, inner: &mut Inner<'_>, verb: &str, args: &[Value]) -> Result<Value> {
        let e = inner.history().current_epoch();
        let Some(i) = arg_index(args, 0) else { return Ok(Value::Absent) };
        match verb {
            "leakKey" if i >= 1 && i as u64 <= e && inner.history().contains(EventName::leaked_key(i as u64)) => {
                Ok(Value::Bytes(self.key(inner, i as u64)?))
            }
            "leakToken" if i >= 2 && i as u64 <= e && inner.history().contains(EventName::leaked_token(i as u64)) => {
                Ok(Value::Bytes(self.token(inner, i as u64)?))
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Fresh encryption of `m` with the coins of the given content version.
pub fn encrypt_version(
    inner: &mut Inner<'_>,
    keys: &mut Keyring,
    slot: usize,
    epoch: u64,
    tag: &str,
    m: &[u8],
) -> Result<Vec<u8>> {
    let key = keys.key(inner, epoch)?;
    Ok(keys.scheme().clone().enc(&key, m, &mut ct_coins(inner, slot, epoch, tag)))
}

/// A ciphertext chain for one slot that starts at a fresh encryption and
/// follows every update the slot has seen since. Catch-up is lazy, so the
/// chain stays exact even when several updates pass unobserved.
#[derive(Clone, Debug, Default)]
pub struct SlotChain {
    write_ordinal: u64,
    reached: u64,
    ct: Vec<u8>,
}

impl SlotChain {
    pub fn sync(
        &mut self,
        inner: &mut Inner<'_>,
        keys: &mut Keyring,
        slot: usize,
        prov: &Provenance,
        plaintext: impl FnOnce(&mut Inner<'_>) -> Result<Vec<u8>>,
    ) -> Result<Vec<u8>> {
        if self.write_ordinal != prov.write_ordinal || self.ct.is_empty() {
            let m = plaintext(inner)?;
            self.ct = encrypt_version(inner, keys, slot, prov.origin_epoch, &prov.fresh_tag(), &m)?;
            self.write_ordinal = prov.write_ordinal;
            self.reached = prov.origin_epoch;
        }
        while self.reached < prov.epoch() {
            self.reached += 1;
            let token = keys.token(inner, self.reached)?;
            let scheme = keys.scheme().clone();
            self.ct = scheme.upd(&token, &self.ct, &mut ct_coins(inner, slot, self.reached, "u"));
        }
        Ok(self.ct.clone())
    }
}

/// One-leak simulator for slot k over the confidential memory: fresh
/// encryptions of random plaintexts for slot k, fresh encryptions of the
/// revealed plaintext elsewhere.
pub struct SimCpa {
    k: usize,
    msg_len: usize,
    keys: Keyring,
}

impl SimCpa {
    pub fn new(scheme: Arc<dyn UeScheme>, k: usize) -> Self {
        SimCpa { k, msg_len: scheme.message_len(), keys: Keyring::simulated(scheme) }
    }
}

impl Converter for SimCpa {
    fn name(&self) -> &str {
        "sigma_cpa"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        match (iface, verb) {
            ("S.1", "update") => inner.call("S.1", "update", &[]),
            ("S.2", "getStatus") => inner.call("S.2", "getStatus", &[]),
            ("S.2", "leakKey") | ("S.2", "leakToken") => self.keys.leak(inner, verb, args),
            ("S.2", "leak") => {
                let r = inner.call("S.2", "leak", args)?;
                if r.is_absent() {
                    return Ok(Value::Absent);
                }
                let slot = arg_index(args, 0).unwrap_or(0) as usize;
                let Some(prov) = provenance(inner, slot)? else { return Ok(Value::Absent) };
                let (epoch, tag) = (prov.epoch(), prov.tag());
                let m = match r.as_bytes() {
                    Some(x) if slot != self.k => x.to_vec(),
                    _ => random_plaintext(inner, slot, epoch, &tag, self.msg_len),
                };
                Ok(Value::Bytes(encrypt_version(inner, &mut self.keys, slot, epoch, &tag, &m)?))
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Unrestricted-leak simulator: keeps a simulated memory in which slot k holds
/// a chain over a random plaintext and every other slot mirrors the real
/// chain.
pub struct SimCpaPlus {
    k: usize,
    msg_len: usize,
    keys: Keyring,
    chains: HashMap<usize, SlotChain>,
}

impl SimCpaPlus {
    pub fn new(scheme: Arc<dyn UeScheme>, k: usize) -> Self {
        SimCpaPlus { k, msg_len: scheme.message_len(), keys: Keyring::simulated(scheme), chains: HashMap::new() }
    }
}

impl Converter for SimCpaPlus {
    fn name(&self) -> &str {
        "sigma_cpa_plus"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        match (iface, verb) {
            ("S.1", "update") => inner.call("S.1", "update", &[]),
            ("S.2", "getStatus") => inner.call("S.2", "getStatus", &[]),
            ("S.2", "leakKey") | ("S.2", "leakToken") => self.keys.leak(inner, verb, args),
            ("S.2", "leak") => {
                let r = inner.call("S.2", "leak", args)?;
                if r.is_absent() {
                    return Ok(Value::Absent);
                }
                let slot = arg_index(args, 0).unwrap_or(0) as usize;
                let Some(prov) = provenance(inner, slot)? else { return Ok(Value::Absent) };
                let (k, len) = (self.k, self.msg_len);
                let chain = self.chains.entry(slot).or_default();
                let ct = chain.sync(inner, &mut self.keys, slot, &prov, |inner| {
                    let tag = prov.fresh_tag();
                    if slot != k {
                        let x = inner.call(META, "peekInsec", &[Value::Int(slot as i64)])?;
                        if let Some(x) = x.as_bytes() {
                            return Ok(x.to_vec());
                        }
                    }
                    Ok(random_plaintext(inner, slot, prov.origin_epoch, &tag, len))
                })?;
                Ok(Value::Bytes(ct))
            }
            _ => Ok(Value::Absent),
        }
    }
}
