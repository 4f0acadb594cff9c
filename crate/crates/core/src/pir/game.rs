//! The PIR privacy games, the reduction that turns a game into a database,
//! and exhaustive analyses over the full randomness space at tiny fields.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::db::{entry, Store};
use super::protocol::{answer_all, tuple_value, INDEX_COINS, S_COINS};
use super::scheme::{PirScheme, ShamirPir};
use crate::error::{CoreError, Result};
use crate::kernel::value::Value;
use crate::kernel::world::{Ctx, Resource, META};

pub type QueryAnswer = (Vec<Vec<u64>>, Vec<Vec<u64>>);

/// Challenger returning a query/answer pair for the requested index (b = 0)
/// or for a uniformly random one (b = 1). The answer is computed on the
/// encoded database.
pub struct PrivacyGame {
    scheme: Arc<dyn PirScheme>,
    b: bool,
    db: Option<Vec<u64>>,
}

impl PrivacyGame {
    pub fn new(scheme: Arc<dyn PirScheme>, b: bool) -> Self {
        PrivacyGame { scheme, b, db: None }
    }

    pub fn init(&mut self, db: Vec<u64>) {
        self.db = Some(db);
    }

    /// Answers for a fixed randomness string and target index.
    pub fn respond(&self, j: usize, s: &[u64]) -> Result<Option<QueryAnswer>> {
        let Some(db) = &self.db else { return Ok(None) };
        let q = self.scheme.query(j, s)?;
        let a = answer_all(self.scheme.as_ref(), &self.scheme.encode(db)?, &q)?;
        Ok(Some((q, a)))
    }

    pub fn chall(&self, i: usize, s_rng: &mut dyn rand::RngCore, index_rng: &mut impl Rng) -> Result<Option<QueryAnswer>> {
        let Some(db) = &self.db else { return Ok(None) };
        let s = self.scheme.sample(s_rng);
        let j = if self.b { index_rng.gen_range(1..=db.len()) } else { i };
        self.respond(j, &s)
    }
}

/// A database-shaped resource wrapped around a privacy game. It keeps the
/// logical database itself and obtains the query and answer from the game.
pub struct ReductionC {
    scheme: Arc<dyn PirScheme>,
    game: PrivacyGame,
    store: Store,
    hist: Vec<Value>,
    queried: bool,
    answered: bool,
    qa: Option<QueryAnswer>,
    ind: Option<usize>,
}

impl ReductionC {
    pub fn new(scheme: Arc<dyn PirScheme>, b: bool) -> Self {
        let store = Store::new(scheme.n(), scheme.field().modulus());
        ReductionC { game: PrivacyGame::new(scheme.clone(), b), scheme, store, hist: Vec::new(), queried: false, answered: false, qa: None, ind: None }
    }
}

impl Resource for ReductionC {
    fn name(&self) -> &str {
        "C"
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        [
            ("C0", "init"),
            ("C0", "read"),
            ("C0", "write"),
            ("C0", "initComplete"),
            ("C", "query"),
            ("C", "reconstruct"),
            ("S", "answer"),
            ("S", "read"),
            ("S", "getQuery"),
            ("S", "getHist"),
            (META, "cells"),
        ]
        .iter()
        .map(|(i, v)| (i.to_string(), *v))
        .collect()
    }

    fn handle(&mut self, ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        Ok(match (iface, verb) {
            ("C0", _) => {
                let was_active = self.store.is_active();
                let hist = &mut self.hist;
                let out = self.store.c0(verb, args, &mut |e| hist.push(e))?;
                if !was_active && self.store.is_active() {
                    self.game.init(self.store.cells().unwrap().to_vec());
                }
                out
            }
            ("C", "query") => {
                let Some(i) = self.store.index(args, 0)? else { return Ok(Value::Absent) };
                if self.store.is_active() && !self.queried {
                    self.queried = true;
                    let (mut s_rng, mut index_rng) = (ctx.rng.coins(S_COINS), ctx.rng.coins(INDEX_COINS));
                    let qa = self.game.chall(i, &mut s_rng, &mut index_rng)?;
                    self.ind = Some(i);
                    if let Some((q, _)) = &qa {
                        self.hist.push(entry(vec![Value::sym("query"), tuple_value(q)]));
                    }
                    self.qa = qa;
                }
                Value::Absent
            }
            ("C", "reconstruct") => match self.ind {
                Some(i) if self.store.is_active() && self.answered => self.store.read(i),
                _ => Value::Absent,
            },
            // Answered is also checked so a second answer leaves no trace,
            // matching the single-use database.
            ("S", "answer") if self.queried && !self.answered => {
                self.answered = true;
                if let Some((_, a)) = &self.qa {
                    self.hist.push(entry(vec![Value::sym("answer"), tuple_value(a)]));
                }
                Value::Absent
            }
            ("S", "read") => {
                let bound = self.scheme.stored_len();
                let Some(i) = super::protocol::index_arg(args, bound)? else { return Ok(Value::Absent) };
                match self.store.cells() {
                    Some(m) => Value::Field(self.scheme.encode(m)?[i - 1]),
                    None => Value::Absent,
                }
            }
            ("S", "getQuery") if self.queried => self.qa.as_ref().map_or(Value::Absent, |(q, _)| tuple_value(q)),
            ("S", "getHist") => Value::List(self.hist.clone()),
            (META, "cells") => self.store.cells().map_or(Value::Absent, Value::fields),
            _ => Value::Absent,
        })
    }
}

/// Calls `f` on every vector of F_p^len, in lexicographic order.
pub fn for_each_randomness(p: u64, len: usize, mut f: impl FnMut(&[u64]) -> Result<()>) -> Result<()> {
    let mut s = vec![0u64; len];
    loop {
        f(&s)?;
        let mut pos = 0;
        loop {
            if pos == len {
                return Ok(());
            }
            s[pos] += 1;
            if s[pos] < p {
                break;
            }
            s[pos] = 0;
            pos += 1;
        }
    }
}

pub fn randomness_space_size(scheme: &dyn PirScheme) -> Option<u64> {
    scheme.field().modulus().checked_pow(scheme.randomness_len() as u32)
}

/// What a coalition sees of one query/answer pair: its own queries and
/// answers, in server order.
pub type View = Vec<(Vec<u64>, Vec<u64>)>;

fn restrict(qa: &QueryAnswer, coalition: &[usize]) -> View {
    coalition.iter().map(|&j| (qa.0[j - 1].clone(), qa.1[j - 1].clone())).collect()
}

/// Exact view distribution of a coalition when the challenge index is
/// `index`, as counts over the whole randomness space.
pub fn view_counts(scheme: &Arc<dyn PirScheme>, db: &[u64], index: usize, coalition: &[usize]) -> Result<HashMap<View, u64>> {
    let mut game = PrivacyGame::new(scheme.clone(), false);
    game.init(db.to_vec());
    let mut counts = HashMap::new();
    for_each_randomness(scheme.field().modulus(), scheme.randomness_len(), |s| {
        let qa = game.respond(index, s)?.unwrap();
        *counts.entry(restrict(&qa, coalition)).or_insert(0) += 1;
        Ok(())
    })?;
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GameDistance {
    pub index: usize,
    pub coalition: Vec<usize>,
    /// Total variation distance between the two games' coalition views is
    /// `numerator / denominator`.
    pub numerator: u128,
    pub denominator: u128,
    pub support: usize,
}

impl GameDistance {
    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Exact distinguishing advantage of an unbounded distinguisher seeing the
/// coalition's part of the challenge, b = 0 with target `index` against
/// b = 1. Both distributions are weighted to the common total |S|·n, so the
/// comparison is in integers.
pub fn exact_game_distance(scheme: &Arc<dyn PirScheme>, db: &[u64], index: usize, coalition: &[usize]) -> Result<GameDistance> {
    let n = scheme.n() as u128;
    if coalition.iter().any(|&j| j == 0 || j > scheme.servers()) {
        return Err(CoreError::UnsupportedParameter(format!("coalition {coalition:?} names a missing server")));
    }
    let fixed = view_counts(scheme, db, index, coalition)?;
    let mut random: HashMap<View, u128> = HashMap::new();
    for j in 1..=scheme.n() {
        for (v, c) in view_counts(scheme, db, j, coalition)? {
            *random.entry(v).or_insert(0) += c as u128;
        }
    }
    let mut numerator = 0u128;
    for (v, &c1) in &random {
        let c0 = fixed.get(v).copied().unwrap_or(0) as u128 * n;
        numerator += c0.abs_diff(c1);
    }
    for (v, &c) in &fixed {
        if !random.contains_key(v) {
            numerator += c as u128 * n;
        }
    }
    let space = randomness_space_size(scheme.as_ref()).unwrap_or(u64::MAX) as u128;
    Ok(GameDistance { index, coalition: coalition.to_vec(), numerator, denominator: 2 * space * n, support: random.len() })
}

/// True when the coalition's view distribution is the same for every target
/// index.
pub fn views_index_independent(scheme: &Arc<dyn PirScheme>, db: &[u64], coalition: &[usize]) -> Result<bool> {
    let first = view_counts(scheme, db, 1, coalition)?;
    for i in 2..=scheme.n() {
        if view_counts(scheme, db, i, coalition)? != first {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn coalitions(k: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        if mask.count_ones() as usize <= max_size {
            out.push((1..=k).filter(|j| mask & (1 << (j - 1)) != 0).collect());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Deviation {
    Erase,
    /// Adds this vector to the honest answer.
    Offset(Vec<u64>),
}

/// Deviating servers (1-based) and what each one does.
pub type Pattern = Vec<(usize, Deviation)>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub runs: u64,
    pub correct: u64,
    /// Reconstruction refused with an error.
    pub detected: u64,
    /// Reconstruction returned a wrong record without complaint.
    pub silent_wrong: u64,
}

/// Every nonzero vector of F_p^len.
pub fn nonzero_offsets(p: u64, len: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for_each_randomness(p, len, |v| {
        if v.iter().any(|&x| x != 0) {
            out.push(v.to_vec());
        }
        Ok(())
    })
    .unwrap();
    out
}

/// One deviating server, every way: erasure or any nonzero offset.
pub fn single_deviations(k: usize, p: u64, answer_len: usize) -> Vec<Pattern> {
    let offsets = nonzero_offsets(p, answer_len);
    let mut out = Vec::new();
    for j in 1..=k {
        out.push(vec![(j, Deviation::Erase)]);
        out.extend(offsets.iter().map(|o| vec![(j, Deviation::Offset(o.clone()))]));
    }
    out
}

/// Two deviating servers, drawing each deviation from `per_server`.
pub fn double_deviations(k: usize, per_server: &[Deviation]) -> Vec<Pattern> {
    let mut out = Vec::new();
    for j1 in 1..=k {
        for j2 in j1 + 1..=k {
            for d1 in per_server {
                for d2 in per_server {
                    out.push(vec![(j1, d1.clone()), (j2, d2.clone())]);
                }
            }
        }
    }
    out
}

/// Runs reconstruction with tolerance `u` for every index, every randomness
/// string and every pattern, and tallies the outcomes.
pub fn byzantine_sweep(scheme: &ShamirPir, db: &[u64], u: usize, patterns: &[Pattern]) -> Result<SweepReport> {
    let f = scheme.field();
    let mut report = SweepReport::default();
    for i in 1..=scheme.n() {
        for_each_randomness(f.modulus(), scheme.randomness_len(), |s| {
            let q = scheme.query(i, s)?;
            let honest = answer_all(scheme, db, &q)?;
            for pattern in patterns {
                let mut answers: Vec<Option<Vec<u64>>> = honest.iter().cloned().map(Some).collect();
                for (j, d) in pattern {
                    answers[j - 1] = match d {
                        Deviation::Erase => None,
                        Deviation::Offset(o) => Some(honest[j - 1].iter().zip(o).map(|(&x, &y)| f.add(x, y)).collect()),
                    };
                }
                report.runs += 1;
                match scheme.reconstruct(&answers, i, s, u) {
                    Ok(x) if x == db[i - 1] => report.correct += 1,
                    Ok(_) => report.silent_wrong += 1,
                    Err(_) => report.detected += 1,
                }
            }
            Ok(())
        })?;
    }
    Ok(report)
}
