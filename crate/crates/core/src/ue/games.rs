//! Oracle games for updatable encryption in the CPA setting.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::firewall::compute_firewalls;
use super::scheme::UeScheme;
use crate::error::{CoreError, Result};
use crate::kernel::advantage::AdvantageReport;
use crate::kernel::history::{EventHistory, EventName};
use crate::kernel::rng::{derive_key, derive_seed};
use crate::kernel::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    /// Challenge (m̄, c̄): fresh encryption of m̄ or update of c̄.
    IndUe,
    /// Challenge (m0, m1): encryption of one of them.
    EncCpa,
    /// Challenge (c0, c1): update of one of them.
    UpdCpa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrTarget {
    Key,
    Token,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub ciphertext: Vec<u8>,
    pub epoch: u64,
    pub message: Vec<u8>,
}

pub struct Game {
    kind: GameKind,
    b: bool,
    scheme: Arc<dyn UeScheme>,
    rng: ChaCha20Rng,
    epoch: u64,
    keys: Vec<Vec<u8>>,
    tokens: Vec<Option<Vec<u8>>>,
    ledger: Vec<LedgerEntry>,
    chall: bool,
    challenge: Option<Vec<u8>>,
    challenge_epoch: Option<u64>,
    corrupted_keys: BTreeSet<u64>,
    corrupted_tokens: BTreeSet<u64>,
}

impl Game {
    pub fn setup(kind: GameKind, b: bool, scheme: Arc<dyn UeScheme>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::from_seed(derive_key(seed, "game"));
        let k0 = scheme.keygen(&mut rng)?;
        Ok(Game {
            kind,
            b,
            scheme,
            rng,
            epoch: 0,
            keys: vec![k0],
            tokens: vec![None],
            ledger: Vec::new(),
            chall: false,
            challenge: None,
            challenge_epoch: None,
            corrupted_keys: BTreeSet::new(),
            corrupted_tokens: BTreeSet::new(),
        })
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn challenge(&self) -> Option<&[u8]> {
        self.challenge.as_deref()
    }

    fn key(&self) -> &[u8] {
        &self.keys[self.epoch as usize]
    }

    fn token(&self) -> Option<&[u8]> {
        self.tokens[self.epoch as usize].as_deref()
    }

    fn lookup(&self, c: &[u8], epoch: u64) -> Option<&LedgerEntry> {
        self.ledger.iter().find(|l| l.ciphertext == c && l.epoch == epoch)
    }

    pub fn enc(&mut self, m: &[u8]) -> Vec<u8> {
        let c = self.scheme.enc(&self.keys[self.epoch as usize], m, &mut self.rng);
        self.ledger.push(LedgerEntry { ciphertext: c.clone(), epoch: self.epoch, message: m.to_vec() });
        c
    }

    pub fn next(&mut self) -> Result<()> {
        self.epoch += 1;
        let k = self.scheme.keygen(&mut self.rng)?;
        let t = self.scheme.tokengen(self.keys.last().unwrap(), &k);
        self.keys.push(k);
        self.tokens.push(Some(t.clone()));
        if self.chall {
            if let Some(c) = self.challenge.take() {
                self.challenge = Some(self.scheme.upd(&t, &c, &mut self.rng));
            }
        }
        Ok(())
    }

    pub fn upd(&mut self, c: &[u8]) -> Option<Vec<u8>> {
        let prev = self.epoch.checked_sub(1)?;
        let m = self.lookup(c, prev)?.message.clone();
        let t = self.token()?.to_vec();
        let c2 = self.scheme.upd(&t, c, &mut self.rng);
        self.ledger.push(LedgerEntry { ciphertext: c2.clone(), epoch: self.epoch, message: m });
        Some(c2)
    }

    pub fn corr(&mut self, target: CorrTarget, e_hat: u64) -> Option<Vec<u8>> {
        if e_hat > self.epoch {
            return None;
        }
        match target {
            CorrTarget::Key => {
                self.corrupted_keys.insert(e_hat);
                Some(self.keys[e_hat as usize].clone())
            }
            CorrTarget::Token => {
                self.corrupted_tokens.insert(e_hat);
                self.tokens[e_hat as usize].clone()
            }
        }
    }

    /// The challenge oracle. Arguments are (m̄, c̄), (m0, m1) or (c0, c1)
    /// depending on the game kind.
    pub fn chall(&mut self, first: &[u8], second: &[u8]) -> Option<Vec<u8>> {
        if self.chall {
            return None;
        }
        self.chall = true;
        let prev = self.epoch.checked_sub(1);
        let c = match self.kind {
            GameKind::IndUe => {
                let entry = self.lookup(second, prev?)?;
                if entry.message.len() != first.len() {
                    return None;
                }
                if self.b {
                    let t = self.token()?.to_vec();
                    self.scheme.upd(&t, second, &mut self.rng)
                } else {
                    let k = self.key().to_vec();
                    self.scheme.enc(&k, first, &mut self.rng)
                }
            }
            GameKind::EncCpa => {
                if first.len() != second.len() {
                    return None;
                }
                let m = if self.b { second } else { first };
                let k = self.key().to_vec();
                self.scheme.enc(&k, m, &mut self.rng)
            }
            GameKind::UpdCpa => {
                let p = prev?;
                let l0 = self.lookup(first, p)?.message.len();
                let l1 = self.lookup(second, p)?.message.len();
                if l0 != l1 {
                    return None;
                }
                let t = self.token()?.to_vec();
                let c = if self.b { second } else { first };
                self.scheme.upd(&t, c, &mut self.rng)
            }
        };
        self.challenge = Some(c.clone());
        self.challenge_epoch = Some(self.epoch);
        Some(c)
    }

    pub fn updc(&self) -> Option<Vec<u8>> {
        if !self.chall {
            return None;
        }
        self.challenge.clone()
    }

    /// Corruption lets the adversary read the challenge directly: some epoch
    /// in which the challenge exists is connected by corrupted tokens to a
    /// corrupted key, or (for update challenges) the challenge token itself
    /// was corrupted.
    pub fn trivial_win(&self) -> bool {
        let Some(ce) = self.challenge_epoch else { return false };
        // Game epochs start at 0; the firewall calculus starts at 1.
        let mut h = EventHistory::new();
        for e in 0..=self.epoch {
            h.append(EventName::epoch(e + 1));
        }
        for &e in &self.corrupted_keys {
            h.append(EventName::leaked_key(e + 1));
        }
        for &e in &self.corrupted_tokens {
            h.append(EventName::leaked_token(e + 1));
        }
        let fw = compute_firewalls(&h, self.epoch + 1);
        let exposed = (ce..=self.epoch).any(|e| !fw.in_region(e + 1));
        let token_link = matches!(self.kind, GameKind::IndUe | GameKind::UpdCpa) && self.corrupted_tokens.contains(&ce);
        exposed || token_link
    }

    /// String-addressed oracle access for scripted adversaries.
    pub fn oracle(&mut self, name: &str, args: &[Value]) -> Result<Value> {
        let bytes = |k: usize| args.get(k).and_then(Value::as_bytes).map(<[u8]>::to_vec);
        let wrap = |c: Option<Vec<u8>>| c.map(Value::Bytes).unwrap_or_default();
        Ok(match name {
            "enc" => match bytes(0) {
                Some(m) => Value::Bytes(self.enc(&m)),
                None => Value::Absent,
            },
            "next" => {
                self.next()?;
                Value::Absent
            }
            "upd" => match bytes(0) {
                Some(c) => wrap(self.upd(&c)),
                None => Value::Absent,
            },
            "corr" => {
                let target = match args.first().and_then(Value::as_sym) {
                    Some("key") => CorrTarget::Key,
                    Some("token") => CorrTarget::Token,
                    _ => return Ok(Value::Absent),
                };
                match args.get(1).and_then(Value::as_int) {
                    Some(e) if e >= 0 => wrap(self.corr(target, e as u64)),
                    _ => Value::Absent,
                }
            }
            "chall" => match (bytes(0), bytes(1)) {
                (Some(a), Some(b)) => wrap(self.chall(&a, &b)),
                _ => Value::Absent,
            },
            "updc" => wrap(self.updc()),
            other => return Err(CoreError::Config(format!("unknown oracle {other}"))),
        })
    }
}

/// An adversary interacts with the oracles and guesses b.
pub trait Adversary: Sync {
    fn play(&self, game: &mut Game, rng: &mut ChaCha20Rng) -> Result<bool>;
}

impl<F> Adversary for F
where
    F: Fn(&mut Game, &mut ChaCha20Rng) -> Result<bool> + Sync,
{
    fn play(&self, game: &mut Game, rng: &mut ChaCha20Rng) -> Result<bool> {
        self(game, rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GameOutcome {
    pub guess: bool,
    pub trivial_win: bool,
}

impl GameOutcome {
    /// Output used for advantage accounting: a trivially winning run is a
    /// loss, scored as 0 on both sides so it cannot move the estimate.
    pub fn scored(&self) -> bool {
        self.guess && !self.trivial_win
    }
}

pub fn run_game(
    kind: GameKind,
    b: bool,
    scheme: Arc<dyn UeScheme>,
    adversary: &dyn Adversary,
    seed: u64,
) -> Result<GameOutcome> {
    let mut game = Game::setup(kind, b, scheme, seed)?;
    let mut rng = ChaCha20Rng::from_seed(derive_key(seed, "adversary"));
    let guess = adversary.play(&mut game, &mut rng)?;
    Ok(GameOutcome { guess, trivial_win: game.trivial_win() })
}

#[derive(Clone, Debug, Serialize)]
pub struct GameReport {
    pub kind: GameKind,
    pub trivial_wins: u64,
    pub advantage: AdvantageReport,
}

/// Advantage |Pr[1 | b=1] − Pr[1 | b=0]| over `trials` games per bit.
pub fn game_advantage(
    kind: GameKind,
    scheme: &(dyn Fn(u64) -> Result<Arc<dyn UeScheme>> + Sync),
    adversary: &dyn Adversary,
    trials: u64,
    base_seed: u64,
    jobs: usize,
) -> Result<GameReport> {
    if trials == 0 {
        return Err(CoreError::Config("trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CoreError::Config(e.to_string()))?;
    let side = |b: bool| -> Result<(u64, u64)> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(base_seed, &format!("game/{}/{t}", b as u8));
                let o = run_game(kind, b, scheme(seed)?, adversary, seed)?;
                Ok((o.scored() as u64, o.trivial_win as u64))
            })
            .try_reduce(|| (0, 0), |a, c| Ok((a.0 + c.0, a.1 + c.1)))
    };
    let ((ones1, tw1), (ones0, tw0)) = pool.install(|| -> Result<_> { Ok((side(true)?, side(false)?)) })?;
    Ok(GameReport { kind, trivial_wins: tw0 + tw1, advantage: AdvantageReport::from_counts(ones1, ones0, trials) })
}
