//! Built-in distinguishers for the UE worlds.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::kernel::advantage::Distinguisher;
use crate::kernel::value::Value;
use crate::kernel::world::World;
use crate::ue::games::{Adversary, CorrTarget, Game, GameKind};
use crate::ue::scripts::{random_ue_script, ScriptShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// Random script within the query budget; outputs one hashed bit of the
    /// whole trace.
    TraceParity,
    /// Writes slot k, leaks it, rotates the epoch, leaks it again and
    /// compares the two nonces.
    AgeLeak,
    Constant,
}

pub struct TraceParity {
    pub shape: ScriptShape,
}

impl Distinguisher for TraceParity {
    fn distinguish(&self, world: &mut World, rng: &mut ChaCha20Rng) -> Result<bool> {
        let script = random_ue_script(&self.shape, rng);
        let trace = world.run(&script);
        let bytes = serde_json::to_vec(&trace).unwrap_or_default();
        Ok(Sha256::digest(&bytes)[0] & 1 == 1)
    }
}

/// Nonce width of the toy scheme.
pub const NONCE_LEN: usize = 8;

pub struct AgeLeak {
    pub k: usize,
    pub msg_len: usize,
}

impl Distinguisher for AgeLeak {
    fn distinguish(&self, world: &mut World, _rng: &mut ChaCha20Rng) -> Result<bool> {
        let k = Value::Int(self.k as i64);
        world.request("C", "write", &[k.clone(), Value::Bytes(vec![0x42; self.msg_len])])?;
        let before = world.request("S.2", "leak", &[k.clone()])?;
        world.request("C", "askUpdate", &[])?;
        world.request("S.1", "update", &[])?;
        let after = world.request("S.2", "leak", &[k])?;
        Ok(match (before.as_bytes(), after.as_bytes()) {
            (Some(a), Some(b)) => a.len() >= NONCE_LEN && b.len() >= NONCE_LEN && a[..NONCE_LEN] == b[..NONCE_LEN],
            _ => false,
        })
    }
}

pub struct Constant(pub bool);

impl Distinguisher for Constant {
    fn distinguish(&self, _world: &mut World, _rng: &mut ChaCha20Rng) -> Result<bool> {
        Ok(self.0)
    }
}

/// Plays the challenge phase of any game kind: returns the ledger
/// ciphertexts it submitted and the challenge, if one was issued.
fn challenge_phase(g: &mut Game, msg_len: usize) -> Result<(Vec<Vec<u8>>, Option<Vec<u8>>)> {
    let (a, b) = (vec![0x61; msg_len], vec![0x62; msg_len]);
    Ok(match g.kind() {
        GameKind::IndUe => {
            let c = g.enc(&a);
            g.next()?;
            let ch = g.chall(&b, &c);
            (vec![c], ch)
        }
        GameKind::EncCpa => {
            let ch = g.chall(&a, &b);
            (Vec::new(), ch)
        }
        GameKind::UpdCpa => {
            let c0 = g.enc(&a);
            let c1 = g.enc(&b);
            g.next()?;
            let ch = g.chall(&c0, &c1);
            (vec![c0, c1], ch)
        }
    })
}

pub fn random_guess() -> Box<dyn Adversary> {
    Box::new(|_: &mut Game, rng: &mut ChaCha20Rng| -> Result<bool> { Ok(rng.gen_bool(0.5)) })
}

/// Guesses "update" when the challenge nonce equals that of the last
/// submitted ciphertext. Fresh encryptions carry no submitted nonce, so the
/// guess there is constant.
pub fn nonce_match(msg_len: usize) -> Box<dyn Adversary> {
    Box::new(move |g: &mut Game, _: &mut ChaCha20Rng| -> Result<bool> {
        let (submitted, ch) = challenge_phase(g, msg_len)?;
        let (Some(c), Some(ch)) = (submitted.last(), ch) else { return Ok(false) };
        Ok(c.len() >= NONCE_LEN && ch.len() >= NONCE_LEN && c[..NONCE_LEN] == ch[..NONCE_LEN])
    })
}

/// Reads the challenge with the current key; every run is a trivial win.
pub fn corrupt_challenge(msg_len: usize) -> Box<dyn Adversary> {
    Box::new(move |g: &mut Game, _: &mut ChaCha20Rng| -> Result<bool> {
        let (_, ch) = challenge_phase(g, msg_len)?;
        let key = g.corr(CorrTarget::Key, g.epoch());
        Ok(ch.is_some() && key.is_some())
    })
}
