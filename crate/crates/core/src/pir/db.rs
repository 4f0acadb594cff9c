//! Single-use database resources for PIR: the basic and private databases,
//! and their multi-server versions with coalitions and Byzantine servers.
//!
//! History entries are `Value::List`s: `[0, init]`, `[0, R, i]`,
//! `[0, W, i, x]`, `[query, q]`, `[answer, a]`, and in the multi-server
//! resources `[query, j, q_j]`, `[answer, j, a_j]`, `[answer, j, eps]`.

use crate::error::{CoreError, Result};
use crate::kernel::value::{arg_index, Value};
use crate::kernel::world::{Ctx, Resource, META};

pub const OK: &str = "ok";
pub const EPS: &str = "eps";

pub fn server_iface(j: usize) -> String {
    format!("S.{j}")
}

/// 1-based server number from an `S.j` interface name.
pub fn server_of(iface: &str) -> Option<usize> {
    iface.strip_prefix("S.")?.parse().ok()
}

pub fn entry(parts: Vec<Value>) -> Value {
    Value::List(parts)
}

fn int(i: usize) -> Value {
    Value::Int(i as i64)
}

fn sig(pairs: &[(&str, &'static str)]) -> Vec<(String, &'static str)> {
    pairs.iter().map(|(i, v)| (i.to_string(), *v)).collect()
}

fn field_cell(x: &Value, modulus: u64) -> Option<u64> {
    match *x {
        Value::Field(f) if f < modulus => Some(f),
        _ => None,
    }
}

/// Cells plus the Init/Active lifecycle driven from interface C0.
#[derive(Clone, Debug)]
pub struct Store {
    size: usize,
    modulus: u64,
    init: bool,
    active: bool,
    cells: Vec<u64>,
}

impl Store {
    pub fn new(size: usize, modulus: u64) -> Self {
        Store { size, modulus, init: false, active: false, cells: Vec::new() }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_init(&self) -> bool {
        self.init
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn cells(&self) -> Option<&[u64]> {
        self.init.then_some(self.cells.as_slice())
    }

    pub fn check(&self, index: i64) -> Result<usize> {
        if index < 1 || index as usize > self.size {
            return Err(CoreError::IndexOutOfRange { index, n: self.size });
        }
        Ok(index as usize)
    }

    /// `Ok(None)` when the argument is missing or not an index.
    pub fn index(&self, args: &[Value], pos: usize) -> Result<Option<usize>> {
        arg_index(args, pos).map(|i| self.check(i)).transpose()
    }

    pub fn read(&self, i: usize) -> Value {
        self.cells.get(i - 1).map_or(Value::Absent, |&x| Value::Field(x))
    }

    /// Parses a full database argument of exactly `size` field cells.
    pub fn parse_db(&self, v: Option<&Value>) -> Option<Vec<u64>> {
        let cells = v?.as_list()?.iter().map(|x| field_cell(x, self.modulus)).collect::<Option<Vec<u64>>>()?;
        (cells.len() == self.size).then_some(cells)
    }

    /// Interface C0. `log` receives each history entry.
    pub fn c0(&mut self, verb: &str, args: &[Value], log: &mut dyn FnMut(Value)) -> Result<Value> {
        match verb {
            "init" => {
                if let Some(m) = self.parse_db(args.first()) {
                    if !self.init {
                        self.cells = m;
                        log(entry(vec![Value::Int(0), Value::sym("init")]));
                        self.init = true;
                    }
                }
            }
            "read" => {
                let Some(i) = self.index(args, 0)? else { return Ok(Value::Absent) };
                if self.init && !self.active {
                    log(entry(vec![Value::Int(0), Value::sym("R"), int(i)]));
                    return Ok(self.read(i));
                }
            }
            "write" => {
                let Some(i) = self.index(args, 0)? else { return Ok(Value::Absent) };
                let Some(x) = args.get(1).and_then(|x| field_cell(x, self.modulus)) else { return Ok(Value::Absent) };
                if self.init && !self.active {
                    log(entry(vec![Value::Int(0), Value::sym("W"), int(i), Value::Field(x)]));
                    self.cells[i - 1] = x;
                }
            }
            "initComplete" => {
                if self.init && !self.active {
                    self.active = true;
                }
            }
            _ => {}
        }
        Ok(Value::Absent)
    }
}

const C0_VERBS: [(&str, &str); 4] = [("C0", "init"), ("C0", "read"), ("C0", "write"), ("C0", "initComplete")];

/// The basic single-server database: queries, answers and the history are
/// visible at S.
pub struct Db {
    store: Store,
    hist: Vec<Value>,
    q: Option<Value>,
    a: Option<Value>,
}

impl Db {
    pub fn new(size: usize, modulus: u64) -> Self {
        Db { store: Store::new(size, modulus), hist: Vec::new(), q: None, a: None }
    }
}

impl Resource for Db {
    fn name(&self) -> &str {
        "DB"
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        let mut s = sig(&C0_VERBS);
        s.extend(sig(&[
            ("C", "query"),
            ("C", "reconstruct"),
            ("S", "answer"),
            ("S", "read"),
            ("S", "getQuery"),
            ("S", "getHist"),
            (META, "cells"),
        ]));
        s
    }

    fn handle(&mut self, _ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let hist = &mut self.hist;
        Ok(match (iface, verb) {
            ("C0", _) => return self.store.c0(verb, args, &mut |e| hist.push(e)),
            ("C", "query") => {
                let q = args.first().cloned().unwrap_or_default();
                if self.store.is_active() && self.q.is_none() && !q.is_absent() {
                    self.hist.push(entry(vec![Value::sym("query"), q.clone()]));
                    self.q = Some(q);
                }
                Value::Absent
            }
            ("C", "reconstruct") if self.store.is_active() => self.a.clone().unwrap_or_default(),
            ("S", "answer") => {
                let a = args.first().cloned().unwrap_or_default();
                if self.q.is_some() && self.a.is_none() && !a.is_absent() {
                    self.hist.push(entry(vec![Value::sym("answer"), a.clone()]));
                    self.a = Some(a);
                }
                Value::Absent
            }
            ("S", "read") => match self.store.index(args, 0)? {
                Some(i) => self.store.read(i),
                None => Value::Absent,
            },
            ("S", "getQuery") => self.q.clone().unwrap_or_default(),
            ("S", "getHist") => Value::List(self.hist.clone()),
            (META, "cells") => self.store.cells().map_or(Value::Absent, Value::fields),
            _ => Value::Absent,
        })
    }
}

/// The private database: S sees only payload-free query/answer markers and
/// reconstruct returns the requested record directly.
pub struct PrivDb {
    store: Store,
    hist: Vec<Value>,
    q: bool,
    a: bool,
    ind: Option<usize>,
}

impl PrivDb {
    pub fn new(size: usize, modulus: u64) -> Self {
        PrivDb { store: Store::new(size, modulus), hist: Vec::new(), q: false, a: false, ind: None }
    }
}

impl Resource for PrivDb {
    fn name(&self) -> &str {
        "PrivDB"
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        let mut s = sig(&C0_VERBS);
        s.extend(sig(&[
            ("C", "query"),
            ("C", "reconstruct"),
            ("S", "answer"),
            ("S", "read"),
            ("S", "getQuery"),
            ("S", "getHist"),
        ]));
        s
    }

    fn handle(&mut self, _ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let hist = &mut self.hist;
        Ok(match (iface, verb) {
            ("C0", _) => return self.store.c0(verb, args, &mut |e| hist.push(e)),
            ("C", "query") => {
                let Some(i) = self.store.index(args, 0)? else { return Ok(Value::Absent) };
                if self.store.is_active() && !self.q {
                    self.q = true;
                    self.hist.push(entry(vec![Value::sym("query")]));
                    self.ind = Some(i);
                }
                Value::Absent
            }
            ("C", "reconstruct") => match self.ind {
                Some(i) if self.store.is_active() && self.a => self.store.read(i),
                _ => Value::Absent,
            },
            ("S", "answer") => {
                if self.store.is_active() && self.q && !self.a {
                    self.a = true;
                    self.hist.push(entry(vec![Value::sym("answer")]));
                }
                Value::Absent
            }
            ("S", "read") => match self.store.index(args, 0)? {
                Some(i) => self.store.read(i),
                None => Value::Absent,
            },
            ("S", "getQuery") if self.q => Value::sym(OK),
            ("S", "getHist") => Value::List(self.hist.clone()),
            _ => Value::Absent,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Basic,
    Private,
}

/// k servers holding the same cells. Servers designated by the environment
/// (at most t) may inspect their queries and histories; with a Byzantine
/// bound u, up to u designated servers may answer ε instead.
///
/// Interfaces: C0, C, S.1..S.k, W. The basic flavour additionally offers an
/// ungated `fetchQuery` at each S.j for the honest server converter, which
/// needs its query whether or not the server is curious.
pub struct MultDb {
    flavor: Flavor,
    k: usize,
    t: usize,
    byzantine: Option<usize>,
    store: Store,
    hist: Vec<Vec<Value>>,
    q: Vec<Option<Value>>,
    a: Vec<Option<Value>>,
    coalition: Option<Vec<bool>>,
    byzantines: Option<Vec<bool>>,
    ind: Option<usize>,
}

impl MultDb {
    fn build(flavor: Flavor, size: usize, modulus: u64, k: usize, t: usize, byzantine: Option<usize>) -> Result<Self> {
        if k == 0 || t > k || byzantine.is_some_and(|u| u > k) {
            return Err(CoreError::UnsupportedParameter(format!("k = {k}, t = {t}, u = {byzantine:?}")));
        }
        Ok(MultDb {
            flavor,
            k,
            t,
            byzantine,
            store: Store::new(size, modulus),
            hist: vec![Vec::new(); k],
            q: vec![None; k],
            a: vec![None; k],
            coalition: None,
            byzantines: None,
            ind: None,
        })
    }

    pub fn basic(size: usize, modulus: u64, k: usize, t: usize, byzantine: Option<usize>) -> Result<Self> {
        Self::build(Flavor::Basic, size, modulus, k, t, byzantine)
    }

    pub fn private(size: usize, modulus: u64, k: usize, t: usize, byzantine: Option<usize>) -> Result<Self> {
        Self::build(Flavor::Private, size, modulus, k, t, byzantine)
    }

    fn member(&self, j: usize) -> bool {
        self.coalition.as_ref().is_some_and(|b| b[j - 1])
    }

    fn designation(&self, args: &[Value], bound: usize) -> Option<Vec<bool>> {
        let bits = args.first()?.as_bools()?;
        (bits.len() == self.k && bits.iter().filter(|&&b| b).count() <= bound).then(|| bits.to_vec())
    }

    fn server(&mut self, j: usize, verb: &str, args: &[Value]) -> Result<Value> {
        let active = self.store.is_active();
        let pending = self.q[j - 1].is_some() && self.a[j - 1].is_none();
        Ok(match verb {
            "answer" => {
                let a = match self.flavor {
                    Flavor::Basic => args.first().cloned().unwrap_or_default(),
                    Flavor::Private => Value::sym(OK),
                };
                if active && pending && !a.is_absent() {
                    let mut e = vec![Value::sym("answer"), int(j)];
                    if self.flavor == Flavor::Basic {
                        e.push(a.clone());
                    }
                    self.hist[j - 1].push(entry(e));
                    self.a[j - 1] = Some(a);
                }
                Value::Absent
            }
            "badAnswer" => {
                let designated = self.byzantines.as_ref().is_some_and(|c| c[j - 1]);
                if designated && pending {
                    self.a[j - 1] = Some(Value::sym(EPS));
                    self.hist[j - 1].push(entry(vec![Value::sym("answer"), int(j), Value::sym(EPS)]));
                }
                Value::Absent
            }
            "read" => {
                let Some(i) = self.store.index(args, 0)? else { return Ok(Value::Absent) };
                if self.flavor == Flavor::Private && !self.member(j) {
                    return Ok(Value::Absent);
                }
                self.store.read(i)
            }
            "getHist" if self.member(j) => Value::List(self.hist[j - 1].clone()),
            "getQuery" if self.member(j) => self.q[j - 1].clone().unwrap_or_default(),
            "fetchQuery" => self.q[j - 1].clone().unwrap_or_default(),
            _ => Value::Absent,
        })
    }
}

impl Resource for MultDb {
    fn name(&self) -> &str {
        match self.flavor {
            Flavor::Basic => "MultDB",
            Flavor::Private => "PrivMultDB",
        }
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        let mut s = sig(&C0_VERBS);
        s.extend(sig(&[("C", "query"), ("C", "reconstruct"), ("W", "formCoalition"), (META, "cells")]));
        let mut verbs = vec!["answer", "read", "getHist"];
        if self.flavor == Flavor::Basic {
            verbs.extend(["getQuery", "fetchQuery"]);
        }
        if self.byzantine.is_some() {
            s.push(("W".into(), "formByzantines"));
            verbs.push("badAnswer");
        }
        for j in 1..=self.k {
            s.extend(verbs.iter().map(|&v| (server_iface(j), v)));
        }
        s
    }

    fn handle(&mut self, _ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        if iface == "C0" {
            let hist = &mut self.hist;
            return self.store.c0(verb, args, &mut |e| {
                for h in hist.iter_mut() {
                    h.push(e.clone());
                }
            });
        }
        if let Some(j) = server_of(iface).filter(|&j| (1..=self.k).contains(&j)) {
            return self.server(j, verb, args);
        }
        let fresh = self.q.iter().all(Option::is_none);
        Ok(match (iface, verb) {
            ("C", "query") => {
                match self.flavor {
                    Flavor::Basic => {
                        if args.len() == self.k && args.iter().all(|q| !q.is_absent()) && self.store.is_active() && fresh {
                            for (j, q) in args.iter().enumerate() {
                                self.hist[j].push(entry(vec![Value::sym("query"), int(j + 1), q.clone()]));
                                self.q[j] = Some(q.clone());
                            }
                        }
                    }
                    Flavor::Private => {
                        let Some(i) = self.store.index(args, 0)? else { return Ok(Value::Absent) };
                        if self.store.is_active() && fresh {
                            for j in 0..self.k {
                                self.q[j] = Some(Value::sym(OK));
                                self.hist[j].push(entry(vec![Value::sym("query"), int(j + 1)]));
                            }
                            self.ind = Some(i);
                        }
                    }
                }
                Value::Absent
            }
            ("C", "reconstruct") if self.store.is_active() && self.a.iter().all(Option::is_some) => match self.flavor {
                Flavor::Basic => Value::List(self.a.iter().map(|a| a.clone().unwrap()).collect()),
                Flavor::Private => self.ind.map_or(Value::Absent, |i| self.store.read(i)),
            },
            ("W", "formCoalition") => {
                if self.coalition.is_none() {
                    self.coalition = self.designation(args, self.t);
                }
                Value::Absent
            }
            ("W", "formByzantines") => {
                if let (None, Some(u)) = (&self.byzantines, self.byzantine) {
                    self.byzantines = self.designation(args, u);
                }
                Value::Absent
            }
            (META, "cells") => self.store.cells().map_or(Value::Absent, Value::fields),
            _ => Value::Absent,
        })
    }
}
