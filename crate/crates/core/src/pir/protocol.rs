//! Client and server converters for PIR over the database resources, the
//! C0 encoder, and the simulators for the private databases.

use std::sync::Arc;

use rand::Rng;

use super::db::{entry, server_iface, server_of, EPS};
use super::scheme::PirScheme;
use crate::error::{CoreError, Result};
use crate::kernel::value::{arg_index, Value};
use crate::kernel::world::{Converter, Inner};

pub const S_COINS: &str = "pir/s";
pub const INDEX_COINS: &str = "pir/index";

/// A k-server query or answer carried as one value: a list of field lists.
pub fn tuple_value(parts: &[Vec<u64>]) -> Value {
    Value::List(parts.iter().map(|p| Value::fields(p)).collect())
}

pub fn parse_tuple(v: &Value) -> Option<Vec<Vec<u64>>> {
    v.as_list()?.iter().map(Value::as_fields).collect()
}

/// Per-server answers as seen by the client: `None` for ε.
pub fn parse_answers(v: &Value) -> Option<Vec<Option<Vec<u64>>>> {
    v.as_list()?
        .iter()
        .map(|a| match a {
            Value::Sym(s) if s == EPS => Some(None),
            other => other.as_fields().map(Some),
        })
        .collect()
}

/// All server answers for one query tuple, as a single server holding every
/// share would compute them.
pub fn answer_all(scheme: &dyn PirScheme, stored: &[u64], q: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    q.iter().enumerate().map(|(j, qj)| scheme.answer(j + 1, stored, qj)).collect()
}

pub fn index_arg(args: &[Value], n: usize) -> Result<Option<usize>> {
    match arg_index(args, 0) {
        None => Ok(None),
        Some(i) if i < 1 || i as usize > n => Err(CoreError::IndexOutOfRange { index: i, n }),
        Some(i) => Ok(Some(i as usize)),
    }
}

fn read_all(inner: &mut Inner<'_>, iface: &str, len: usize) -> Result<Option<Vec<u64>>> {
    let mut out = Vec::with_capacity(len);
    for i in 1..=len {
        match inner.call(iface, "read", &[Value::Int(i as i64)])? {
            Value::Field(x) => out.push(x),
            _ => return Ok(None),
        }
    }
    Ok(Some(out))
}

pub fn draw_randomness(inner: &Inner<'_>, scheme: &dyn PirScheme) -> Vec<u64> {
    scheme.sample(&mut inner.ctx.rng.coins(S_COINS))
}

pub fn draw_index(inner: &Inner<'_>, n: usize) -> usize {
    inner.ctx.rng.coins(INDEX_COINS).gen_range(1..=n)
}

/// Client converter at C. With `multi` the query tuple goes out as k
/// arguments to a multi-server database; otherwise as one tuple value.
pub struct PirClient {
    scheme: Arc<dyn PirScheme>,
    multi: bool,
    tolerance: usize,
    ind: Option<usize>,
    s: Vec<u64>,
}

impl PirClient {
    pub fn single(scheme: Arc<dyn PirScheme>) -> Self {
        PirClient { scheme, multi: false, tolerance: 0, ind: None, s: Vec::new() }
    }

    /// `tolerance` is the number of deviating servers reconstruction absorbs.
    pub fn multi(scheme: Arc<dyn PirScheme>, tolerance: usize) -> Self {
        PirClient { scheme, multi: true, tolerance, ind: None, s: Vec::new() }
    }
}

impl Converter for PirClient {
    fn name(&self) -> &str {
        "pir_cli"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, _iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        match verb {
            "query" => {
                let Some(i) = index_arg(args, self.scheme.n())? else { return Ok(Value::Absent) };
                if self.ind.is_none() {
                    self.s = draw_randomness(inner, self.scheme.as_ref());
                    self.ind = Some(i);
                    let q = self.scheme.query(i, &self.s)?;
                    if self.multi {
                        let parts: Vec<Value> = q.iter().map(|qj| Value::fields(qj)).collect();
                        inner.call("C", "query", &parts)?;
                    } else {
                        inner.call("C", "query", &[tuple_value(&q)])?;
                    }
                }
                Ok(Value::Absent)
            }
            "reconstruct" => {
                let a = inner.call("C", "reconstruct", &[])?;
                let (Some(ind), Some(answers)) = (self.ind, parse_answers(&a)) else { return Ok(Value::Absent) };
                let u = if self.multi { self.tolerance } else { 0 };
                Ok(Value::Field(self.scheme.reconstruct(&answers, ind, &self.s, u)?))
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Server converter at S of a single-server database. The honest variant
/// additionally blocks every curious request.
pub struct PirServer {
    scheme: Arc<dyn PirScheme>,
    honest: bool,
}

impl PirServer {
    pub fn new(scheme: Arc<dyn PirScheme>) -> Self {
        PirServer { scheme, honest: false }
    }

    pub fn honest(scheme: Arc<dyn PirScheme>) -> Self {
        PirServer { scheme, honest: true }
    }
}

impl Converter for PirServer {
    fn name(&self) -> &str {
        "pir_ser"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        if verb != "answer" {
            return if self.honest { Ok(Value::Absent) } else { inner.call(iface, verb, args) };
        }
        let Some(q) = parse_tuple(&inner.call("S", "getQuery", &[])?) else { return Ok(Value::Absent) };
        let Some(stored) = read_all(inner, "S", self.scheme.stored_len())? else { return Ok(Value::Absent) };
        let a = answer_all(self.scheme.as_ref(), &stored, &q)?;
        inner.call("S", "answer", &[tuple_value(&a)])?;
        Ok(Value::Absent)
    }
}

/// Server converter for one S.j of a multi-server database. It fetches its
/// query through the honest `fetchQuery` verb, which it hides from outside.
pub struct MultPirServer {
    scheme: Arc<dyn PirScheme>,
    j: usize,
    honest: bool,
}

impl MultPirServer {
    pub fn new(scheme: Arc<dyn PirScheme>, j: usize) -> Self {
        MultPirServer { scheme, j, honest: false }
    }

    pub fn honest(scheme: Arc<dyn PirScheme>, j: usize) -> Self {
        MultPirServer { scheme, j, honest: true }
    }
}

impl Converter for MultPirServer {
    fn name(&self) -> &str {
        "mult_pir_ser"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let me = server_iface(self.j);
        match verb {
            "answer" => {
                let Some(q) = inner.call(&me, "fetchQuery", &[])?.as_fields() else { return Ok(Value::Absent) };
                let Some(stored) = read_all(inner, &me, self.scheme.stored_len())? else { return Ok(Value::Absent) };
                let a = self.scheme.answer(self.j, &stored, &q)?;
                inner.call(&me, "answer", &[Value::fields(&a)])?;
                Ok(Value::Absent)
            }
            "fetchQuery" => Ok(Value::Absent),
            _ if self.honest => Ok(Value::Absent),
            _ => inner.call(iface, verb, args),
        }
    }
}

/// Encodes the logical database on upload. Reads and writes of individual
/// logical cells have no counterpart on the encoded array and are refused.
pub struct C0Encoder {
    scheme: Arc<dyn PirScheme>,
}

impl C0Encoder {
    pub fn new(scheme: Arc<dyn PirScheme>) -> Self {
        C0Encoder { scheme }
    }
}

impl Converter for C0Encoder {
    fn name(&self) -> &str {
        "c0_encode"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        match verb {
            "init" => {
                let p = self.scheme.field().modulus();
                let Some(m) = args.first().and_then(Value::as_fields) else { return Ok(Value::Absent) };
                if m.len() != self.scheme.n() || m.iter().any(|&x| x >= p) {
                    return Ok(Value::Absent);
                }
                let encoded = self.scheme.encode(&m)?;
                inner.call(iface, "init", &[Value::fields(&encoded)])
            }
            "initComplete" => inner.call(iface, verb, args),
            _ => Ok(Value::Absent),
        }
    }
}

/// State the private-database simulators keep about the one query they fake.
#[derive(Default)]
struct Fake {
    s: Vec<u64>,
    ind: Option<usize>,
    q: Option<Vec<Vec<u64>>>,
}

impl Fake {
    fn draw(&mut self, inner: &Inner<'_>, scheme: &dyn PirScheme) -> Result<&[Vec<u64>]> {
        if self.q.is_none() {
            let ind = draw_index(inner, scheme.n());
            self.s = draw_randomness(inner, scheme);
            self.q = Some(scheme.query(ind, &self.s)?);
            self.ind = Some(ind);
        }
        Ok(self.q.as_deref().unwrap())
    }
}

fn logical_db(inner: &mut Inner<'_>, iface: &str, n: usize, scheme: &dyn PirScheme) -> Result<Option<Vec<u64>>> {
    match read_all(inner, iface, n)? {
        Some(m) => Ok(Some(scheme.encode(&m)?)),
        None => Ok(None),
    }
}

/// Simulator at S of the single-server private database. It rebuilds the
/// server's view from the ideal history, replacing payload-free query and
/// answer markers with a query for a uniformly random index.
pub struct SimPriv {
    scheme: Arc<dyn PirScheme>,
    hist: Vec<Value>,
    pos: usize,
    fake: Fake,
    a: Option<Vec<Vec<u64>>>,
    m_sim: Option<Vec<u64>>,
}

impl SimPriv {
    pub fn new(scheme: Arc<dyn PirScheme>) -> Self {
        SimPriv { scheme, hist: Vec::new(), pos: 0, fake: Fake::default(), a: None, m_sim: None }
    }

    fn update(&mut self, inner: &mut Inner<'_>) -> Result<()> {
        let scheme = self.scheme.clone();
        self.m_sim = logical_db(inner, "S", scheme.n(), scheme.as_ref())?;
        let ideal = inner.call("S", "getHist", &[])?;
        let entries = ideal.as_list().unwrap_or_default();
        for e in entries.iter().skip(self.pos) {
            let verbs: Vec<&str> = e.as_list().unwrap_or_default().iter().filter_map(Value::as_sym).collect();
            let simulated = match verbs.as_slice() {
                ["query"] => entry(vec![Value::sym("query"), tuple_value(self.fake.draw(inner, scheme.as_ref())?)]),
                ["answer"] => {
                    let q = self.fake.draw(inner, scheme.as_ref())?.to_vec();
                    let stored = self.m_sim.as_deref().unwrap_or_default();
                    let a = answer_all(scheme.as_ref(), stored, &q)?;
                    let v = tuple_value(&a);
                    self.a = Some(a);
                    entry(vec![Value::sym("answer"), v])
                }
                _ => e.clone(),
            };
            self.hist.push(simulated);
            self.pos += 1;
        }
        Ok(())
    }
}

impl Converter for SimPriv {
    fn name(&self) -> &str {
        "simPriv"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, _iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        match verb {
            "answer" => {
                inner.call("S", "answer", &[])?;
                self.update(inner)?;
                Ok(Value::Absent)
            }
            "getHist" => {
                self.update(inner)?;
                Ok(Value::List(self.hist.clone()))
            }
            "getQuery" => {
                self.update(inner)?;
                Ok(self.fake.q.as_deref().map_or(Value::Absent, tuple_value))
            }
            "read" => {
                let Some(i) = index_arg(args, self.scheme.stored_len())? else { return Ok(Value::Absent) };
                self.update(inner)?;
                Ok(self.m_sim.as_ref().map_or(Value::Absent, |m| Value::Field(m[i - 1])))
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Simulator attached at every S.j of a private multi-server database. Only
/// coalition members reveal their ideal histories, so only their views are
/// simulated; reads are served from the encoded ideal contents once some
/// member can read them.
pub struct SimPrivMult {
    scheme: Arc<dyn PirScheme>,
    hist: Vec<Vec<Value>>,
    pos: Vec<usize>,
    visible: Vec<bool>,
    fake: Fake,
    m_sim: Option<Vec<u64>>,
}

impl SimPrivMult {
    pub fn new(scheme: Arc<dyn PirScheme>) -> Self {
        let k = scheme.servers();
        SimPrivMult { scheme, hist: vec![Vec::new(); k], pos: vec![0; k], visible: vec![false; k], fake: Fake::default(), m_sim: None }
    }

    fn update(&mut self, inner: &mut Inner<'_>) -> Result<()> {
        let scheme = self.scheme.clone();
        let k = scheme.servers();
        let mut ideal = Vec::with_capacity(k);
        for j in 1..=k {
            ideal.push(inner.call(&server_iface(j), "getHist", &[])?);
        }
        self.m_sim = None;
        for j in 1..=k {
            self.visible[j - 1] = !ideal[j - 1].is_absent();
            if self.visible[j - 1] && self.m_sim.is_none() {
                self.m_sim = logical_db(inner, &server_iface(j), scheme.n(), scheme.as_ref())?;
            }
        }
        for j in 1..=k {
            let entries = ideal[j - 1].as_list().unwrap_or_default();
            for e in entries.iter().skip(self.pos[j - 1]) {
                let parts = e.as_list().unwrap_or_default();
                let simulated = match parts {
                    [Value::Sym(v), Value::Int(_)] if v == "query" => {
                        let qj = self.fake.draw(inner, scheme.as_ref())?[j - 1].clone();
                        entry(vec![Value::sym("query"), Value::Int(j as i64), Value::fields(&qj)])
                    }
                    [Value::Sym(v), Value::Int(_)] if v == "answer" => {
                        let qj = self.fake.draw(inner, scheme.as_ref())?[j - 1].clone();
                        let stored = self.m_sim.as_deref().unwrap_or_default();
                        let aj = scheme.answer(j, stored, &qj)?;
                        entry(vec![Value::sym("answer"), Value::Int(j as i64), Value::fields(&aj)])
                    }
                    _ => e.clone(),
                };
                self.hist[j - 1].push(simulated);
                self.pos[j - 1] += 1;
            }
        }
        Ok(())
    }
}

impl Converter for SimPrivMult {
    fn name(&self) -> &str {
        "simPrivMult"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let Some(j) = server_of(iface) else { return Ok(Value::Absent) };
        match verb {
            "answer" | "badAnswer" => {
                inner.call(iface, verb, &[])?;
                self.update(inner)?;
                Ok(Value::Absent)
            }
            "getHist" => {
                self.update(inner)?;
                Ok(if self.visible[j - 1] { Value::List(self.hist[j - 1].clone()) } else { Value::Absent })
            }
            "getQuery" => {
                self.update(inner)?;
                Ok(match &self.fake.q {
                    Some(q) if self.visible[j - 1] => Value::fields(&q[j - 1]),
                    _ => Value::Absent,
                })
            }
            "read" => {
                let Some(i) = index_arg(args, self.scheme.stored_len())? else { return Ok(Value::Absent) };
                self.update(inner)?;
                Ok(self.m_sim.as_ref().map_or(Value::Absent, |m| Value::Field(m[i - 1])))
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Honest server at S of an ideal database: it answers and does nothing
/// else.
pub struct HonestDb;

impl Converter for HonestDb {
    fn name(&self) -> &str {
        "honDB"
    }

    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, _args: &[Value]) -> Result<Value> {
        if verb == "answer" {
            inner.call(iface, "answer", &[])?;
        }
        Ok(Value::Absent)
    }
}
