//! Updatable encryption schemes over fixed-length byte messages.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::{inv_mod_prime, is_prime, mul_mod, pow_mod};
use crate::error::{CoreError, Result};

/// Outcome of decryption; `Invalid` is the ⋄ symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Plain {
    Message(Vec<u8>),
    Invalid,
}

impl Plain {
    pub fn ok(self) -> Option<Vec<u8>> {
        match self {
            Plain::Message(m) => Some(m),
            Plain::Invalid => None,
        }
    }
}

/// Keys, tokens and ciphertexts are opaque byte strings so worlds can carry
/// them as ordinary values.
pub trait UeScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn message_len(&self) -> usize;
    fn keygen(&self, rng: &mut dyn RngCore) -> Result<Vec<u8>>;
    fn tokengen(&self, old: &[u8], new: &[u8]) -> Vec<u8>;
    fn enc(&self, key: &[u8], m: &[u8], rng: &mut dyn RngCore) -> Vec<u8>;
    fn dec(&self, key: &[u8], c: &[u8]) -> Plain;
    /// Malformed ciphertexts pass through unchanged.
    fn upd(&self, token: &[u8], c: &[u8], rng: &mut dyn RngCore) -> Vec<u8>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Toy,
    /// Toy variant whose update keeps the nonce: ciphertext age shows.
    ToyStatic,
    RiseSmall,
    RiseLarge,
}

pub fn build_scheme(kind: SchemeKind, msg_len: usize, salt: u64) -> Result<Box<dyn UeScheme>> {
    Ok(match kind {
        SchemeKind::Toy => Box::new(ToyScheme::new(msg_len, salt, true)),
        SchemeKind::ToyStatic => Box::new(ToyScheme::new(msg_len, salt, false)),
        SchemeKind::RiseSmall => Box::new(RiseScheme::new(GroupParams::small(), msg_len)?),
        SchemeKind::RiseLarge => Box::new(RiseScheme::new(GroupParams::large(), msg_len)?),
    })
}

const NONCE: usize = 8;

/// Nonce-based scheme over a lazily sampled random function. The function is
/// a salted hash of (key id, nonce), so its values do not depend on the order
/// in which they are first queried.
#[derive(Clone, Debug)]
pub struct ToyScheme {
    msg_len: usize,
    salt: u64,
    rerandomize: bool,
}

impl ToyScheme {
    pub fn new(msg_len: usize, salt: u64, rerandomize: bool) -> Self {
        ToyScheme { msg_len, salt, rerandomize }
    }

    fn mask(&self, key: &[u8], nonce: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.msg_len);
        let mut block = 0u32;
        while out.len() < self.msg_len {
            let mut h = Sha256::new();
            h.update(self.salt.to_le_bytes());
            h.update(key);
            h.update(nonce);
            h.update(block.to_le_bytes());
            out.extend_from_slice(&h.finalize());
            block += 1;
        }
        out.truncate(self.msg_len);
        out
    }

    fn split<'a>(&self, c: &'a [u8]) -> Option<(&'a [u8], &'a [u8])> {
        (c.len() == NONCE + self.msg_len).then(|| c.split_at(NONCE))
    }
}

fn xor_into(acc: &mut [u8], other: &[u8]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= b;
    }
}

impl UeScheme for ToyScheme {
    fn name(&self) -> &'static str {
        if self.rerandomize {
            "toy"
        } else {
            "toy-static"
        }
    }

    fn message_len(&self) -> usize {
        self.msg_len
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<Vec<u8>> {
        Ok(rng.next_u64().to_le_bytes().to_vec())
    }

    fn tokengen(&self, old: &[u8], new: &[u8]) -> Vec<u8> {
        [old, new].concat()
    }

    fn enc(&self, key: &[u8], m: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
        let nonce = rng.next_u64().to_le_bytes();
        let mut body = self.mask(key, &nonce);
        xor_into(&mut body, m);
        [&nonce[..], &body].concat()
    }

    fn dec(&self, key: &[u8], c: &[u8]) -> Plain {
        match self.split(c) {
            Some((nonce, body)) => {
                let mut m = self.mask(key, nonce);
                xor_into(&mut m, body);
                Plain::Message(m)
            }
            None => Plain::Invalid,
        }
    }

    fn upd(&self, token: &[u8], c: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
        if token.len() % 2 != 0 || self.split(c).is_none() {
            return c.to_vec();
        }
        let (old, new) = token.split_at(token.len() / 2);
        if self.rerandomize {
            let m = self.dec(old, c).ok().unwrap_or_default();
            return self.enc(new, &m, rng);
        }
        let (nonce, body) = self.split(c).unwrap();
        let mut body = body.to_vec();
        xor_into(&mut body, &self.mask(old, nonce));
        xor_into(&mut body, &self.mask(new, nonce));
        [nonce, &body].concat()
    }
}

/// Safe-prime group p = 2q + 1 with p ≡ 3 (mod 4); g generates the order-q
/// subgroup of squares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupParams {
    pub p: u64,
    pub q: u64,
    pub g: u64,
    /// Message bits carried by one group element.
    pub block_bits: u32,
}

impl GroupParams {
    pub fn small() -> Self {
        GroupParams { p: 467, q: 233, g: 4, block_bits: 4 }
    }

    pub fn large() -> Self {
        GroupParams { p: 4_611_686_018_427_377_339, q: 2_305_843_009_213_688_669, g: 4, block_bits: 56 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(CoreError::UnsupportedParameter(format!("group p={}: {why}", self.p)));
        if self.p != 2 * self.q + 1 || !is_prime(self.p) || !is_prime(self.q) {
            return bad("not a safe prime");
        }
        if self.p % 4 != 3 {
            return bad("p is not 3 mod 4");
        }
        if self.g <= 1 || pow_mod(self.g, self.q, self.p) != 1 {
            return bad("generator outside the order-q subgroup");
        }
        if self.block_bits >= 64 || (1u64 << self.block_bits) > self.q {
            return bad("block too wide for the embedding");
        }
        Ok(())
    }

    /// Exponentiation walk confirming that g has order exactly q. Only
    /// practical for small groups.
    pub fn brute_force_order(&self) -> u64 {
        let mut x = self.g;
        let mut k = 1;
        while x != 1 {
            x = mul_mod(x, self.g, self.p);
            k += 1;
        }
        k
    }

    fn embed(&self, v: u64) -> u64 {
        let x = v + 1;
        mul_mod(x, x, self.p)
    }

    fn extract(&self, y: u64) -> Option<u64> {
        if y == 0 || y >= self.p || pow_mod(y, self.q, self.p) != 1 {
            return None;
        }
        let s = pow_mod(y, (self.p + 1) / 4, self.p);
        let x = s.min(self.p - s);
        let v = x - 1;
        (v < (1u64 << self.block_bits)).then_some(v)
    }
}

/// ElGamal-style scheme with key rotation by exponent ratio and fresh
/// re-randomisation on every update.
#[derive(Clone, Debug)]
pub struct RiseScheme {
    group: GroupParams,
    msg_len: usize,
}

impl RiseScheme {
    pub fn new(group: GroupParams, msg_len: usize) -> Result<Self> {
        group.validate()?;
        Ok(RiseScheme { group, msg_len })
    }

    pub fn group(&self) -> GroupParams {
        self.group
    }

    fn blocks(&self) -> usize {
        (self.msg_len * 8).div_ceil(self.group.block_bits as usize)
    }

    fn to_blocks(&self, m: &[u8]) -> Vec<u64> {
        let w = self.group.block_bits as usize;
        let mut out = vec![0u64; self.blocks()];
        for bit in 0..m.len() * 8 {
            if (m[bit / 8] >> (bit % 8)) & 1 == 1 {
                out[bit / w] |= 1 << (bit % w);
            }
        }
        out
    }

    fn from_blocks(&self, blocks: &[u64]) -> Vec<u8> {
        let w = self.group.block_bits as usize;
        let mut out = vec![0u8; self.msg_len];
        for bit in 0..self.msg_len * 8 {
            if (blocks[bit / w] >> (bit % w)) & 1 == 1 {
                out[bit / 8] |= 1 << (bit % 8);
            }
        }
        out
    }

    fn scalar(&self, rng: &mut dyn RngCore) -> u64 {
        rng.gen_range(1..self.group.q)
    }

    fn pairs(&self, c: &[u8]) -> Option<Vec<(u64, u64)>> {
        if c.len() != self.blocks() * 16 {
            return None;
        }
        let word = |b: &[u8]| u64::from_le_bytes(b.try_into().unwrap());
        let out: Vec<(u64, u64)> = c.chunks(16).map(|ch| (word(&ch[..8]), word(&ch[8..]))).collect();
        let p = self.group.p;
        out.iter().all(|&(a, b)| a > 0 && a < p && b > 0 && b < p).then_some(out)
    }

    fn pack(pairs: &[(u64, u64)]) -> Vec<u8> {
        pairs.iter().flat_map(|(a, b)| a.to_le_bytes().into_iter().chain(b.to_le_bytes())).collect()
    }

    fn exponent(&self, b: &[u8]) -> Option<u64> {
        let x = u64::from_le_bytes(b.get(..8)?.try_into().ok()?);
        (x > 0 && x < self.group.q).then_some(x)
    }
}

impl UeScheme for RiseScheme {
    fn name(&self) -> &'static str {
        "rise"
    }

    fn message_len(&self) -> usize {
        self.msg_len
    }

    fn keygen(&self, rng: &mut dyn RngCore) -> Result<Vec<u8>> {
        Ok(self.scalar(rng).to_le_bytes().to_vec())
    }

    fn tokengen(&self, old: &[u8], new: &[u8]) -> Vec<u8> {
        let GroupParams { p, q, g, .. } = self.group;
        let (Some(x), Some(x2)) = (self.exponent(old), self.exponent(new)) else { return Vec::new() };
        let delta = mul_mod(x2, inv_mod_prime(x, q), q);
        let y2 = pow_mod(g, x2, p);
        [delta.to_le_bytes(), y2.to_le_bytes()].concat()
    }

    fn enc(&self, key: &[u8], m: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
        let GroupParams { p, g, .. } = self.group;
        let x = self.exponent(key).unwrap_or(1);
        let y = pow_mod(g, x, p);
        let pairs: Vec<(u64, u64)> = self
            .to_blocks(m)
            .into_iter()
            .map(|v| {
                let r = self.scalar(rng);
                (pow_mod(g, r, p), mul_mod(self.group.embed(v), pow_mod(y, r, p), p))
            })
            .collect();
        Self::pack(&pairs)
    }

    fn dec(&self, key: &[u8], c: &[u8]) -> Plain {
        let (Some(x), Some(pairs)) = (self.exponent(key), self.pairs(c)) else { return Plain::Invalid };
        let GroupParams { p, q, .. } = self.group;
        let mut blocks = Vec::with_capacity(pairs.len());
        for (c1, c2) in pairs {
            let shared_inv = pow_mod(c1, q - x, p);
            match self.group.extract(mul_mod(c2, shared_inv, p)) {
                Some(v) => blocks.push(v),
                None => return Plain::Invalid,
            }
        }
        let m = self.from_blocks(&blocks);
        if self.to_blocks(&m) != blocks {
            return Plain::Invalid;
        }
        Plain::Message(m)
    }

    fn upd(&self, token: &[u8], c: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
        let GroupParams { p, q, g, .. } = self.group;
        let (Some(delta), Some(pairs)) = (self.exponent(token), self.pairs(c)) else { return c.to_vec() };
        let Some(y2) = token.get(8..16).map(|b| u64::from_le_bytes(b.try_into().unwrap())) else { return c.to_vec() };
        let delta_inv = inv_mod_prime(delta, q);
        let out: Vec<(u64, u64)> = pairs
            .into_iter()
            .map(|(c1, c2)| {
                let r = self.scalar(rng);
                (mul_mod(pow_mod(c1, delta_inv, p), pow_mod(g, r, p), p), mul_mod(c2, pow_mod(y2, r, p), p))
            })
            .collect();
        Self::pack(&out)
    }
}
