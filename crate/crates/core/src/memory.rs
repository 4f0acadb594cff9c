//! Server-memory resources: the generic interactive memory, its updatable
//! flavour, the confidential ideal memory, and the key/token resource.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::kernel::history::EventName;
use crate::kernel::value::{arg_index, Value};
use crate::kernel::world::{Ctx, Resource, META};
use crate::ue::scheme::UeScheme;

pub const KEY_STREAM: &str = "ue/keys";

/// n optional cells, indexed 1..=n. `cell_len` pins the alphabet to byte
/// strings of one length; `None` accepts any non-absent value.
#[derive(Clone, Debug)]
pub struct MemoryArray {
    cells: Vec<Option<Value>>,
    cell_len: Option<usize>,
}

impl MemoryArray {
    pub fn new(n: usize, cell_len: Option<usize>) -> Self {
        MemoryArray { cells: vec![None; n], cell_len }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn check(&self, index: i64) -> Result<usize> {
        if index < 1 || index as usize > self.cells.len() {
            return Err(CoreError::IndexOutOfRange { index, n: self.cells.len() });
        }
        Ok(index as usize)
    }

    /// Slot from the first argument. `Ok(None)` for a missing or mistyped
    /// argument, an error for a well-typed index outside 1..=n.
    pub fn slot(&self, args: &[Value]) -> Result<Option<usize>> {
        match arg_index(args, 0) {
            None => Ok(None),
            Some(i) => self.check(i).map(Some),
        }
    }

    pub fn accepts(&self, x: &Value) -> bool {
        match (self.cell_len, x) {
            (_, Value::Absent) => false,
            (Some(l), Value::Bytes(b)) => b.len() == l,
            (Some(_), _) => false,
            (None, _) => true,
        }
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.cells[i - 1].as_ref()
    }

    pub fn read(&self, i: usize) -> Value {
        self.cells[i - 1].clone().unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, x: Value) {
        self.cells[i - 1] = Some(x);
    }

    pub fn written(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, c)| c.is_some()).map(|(i, _)| i + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakMode {
    One,
    Plus,
}

#[derive(Clone, Debug)]
pub struct LeakBudget {
    pub mode: LeakMode,
    used: HashSet<(usize, u64)>,
}

impl LeakBudget {
    pub fn new(mode: LeakMode) -> Self {
        LeakBudget { mode, used: HashSet::new() }
    }

    /// Consumes the slot's allowance for `epoch`; false if already spent.
    pub fn take(&mut self, slot: usize, epoch: u64) -> bool {
        match self.mode {
            LeakMode::Plus => true,
            LeakMode::One => self.used.insert((slot, epoch)),
        }
    }
}

fn sig(pairs: &[(&str, &'static str)]) -> Vec<(String, &'static str)> {
    pairs.iter().map(|(i, v)| (i.to_string(), *v)).collect()
}

/// The generic interactive server memory with a NeedInteraction flag.
pub struct Ismr {
    mem: MemoryArray,
    need_interaction: bool,
}

impl Ismr {
    pub fn new(n: usize, cell_len: Option<usize>) -> Self {
        Ismr { mem: MemoryArray::new(n, cell_len), need_interaction: false }
    }
}

impl Resource for Ismr {
    fn name(&self) -> &str {
        "ISMR"
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        sig(&[
            ("C", "read"),
            ("C", "write"),
            ("C", "askInteraction"),
            ("C", "getStatus"),
            ("S.1", "read"),
            ("S.1", "write"),
            ("S.1", "interact"),
            ("S.2", "leak"),
            ("S.2", "getStatus"),
        ])
    }

    fn handle(&mut self, _ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let gated = self.need_interaction;
        match (iface, verb) {
            ("C", "getStatus") | ("S.2", "getStatus") => Ok(Value::bool(self.need_interaction)),
            ("C", "askInteraction") => {
                self.need_interaction = true;
                Ok(Value::Absent)
            }
            ("S.1", "interact") => {
                self.need_interaction = false;
                Ok(Value::Absent)
            }
            ("C", "read") | ("S.1", "read") | ("S.2", "leak") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                if iface == "C" && gated {
                    return Ok(Value::Absent);
                }
                Ok(self.mem.read(i))
            }
            ("C", "write") | ("S.1", "write") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                let x = args.get(1).cloned().unwrap_or_default();
                if (iface == "C" && gated) || !self.mem.accepts(&x) {
                    return Ok(Value::Absent);
                }
                self.mem.set(i, x);
                Ok(Value::Absent)
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Where the current content of a slot came from. Exposed only on the meta
/// interface so simulators and hybrids can pick matching coin labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Provenance {
    /// Epoch of the client write that created the underlying plaintext.
    pub origin_epoch: u64,
    /// How many client write requests hit this slot in that epoch, this one
    /// included.
    pub version: u64,
    /// Ordinal of that write among successful client writes to the slot.
    pub write_ordinal: u64,
    /// Updates applied since the write.
    pub updates: u64,
    /// Ordinal of the latest update among all updates of the slot.
    pub update_ordinal: u64,
}

impl Provenance {
    pub fn epoch(&self) -> u64 {
        self.origin_epoch + self.updates
    }

    pub fn is_fresh(&self) -> bool {
        self.updates == 0
    }

    pub fn fresh_tag(&self) -> String {
        format!("w{}", self.version)
    }

    /// Coin-label tag of the current content version.
    pub fn tag(&self) -> String {
        if self.is_fresh() {
            self.fresh_tag()
        } else {
            "u".to_string()
        }
    }

    pub fn to_value(&self) -> Value {
        Value::List(vec![
            Value::Int(self.origin_epoch as i64),
            Value::Int(self.version as i64),
            Value::Int(self.write_ordinal as i64),
            Value::Int(self.updates as i64),
            Value::Int(self.update_ordinal as i64),
        ])
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        let l = v.as_list()?;
        let g = |k: usize| l.get(k).and_then(Value::as_int).map(|x| x as u64);
        Some(Provenance {
            origin_epoch: g(0)?,
            version: g(1)?,
            write_ordinal: g(2)?,
            updates: g(3)?,
            update_ordinal: g(4)?,
        })
    }
}

/// Provenance bookkeeping shared by the real and ideal memories.
#[derive(Clone, Debug, Default)]
struct Lineage {
    slots: HashMap<usize, Provenance>,
    requests: HashMap<(usize, u64), u64>,
    writes: HashMap<usize, u64>,
    updates: HashMap<usize, u64>,
}

impl Lineage {
    fn write_requested(&mut self, i: usize, epoch: u64) -> u64 {
        let v = self.requests.entry((i, epoch)).or_default();
        *v += 1;
        *v
    }

    fn written(&mut self, i: usize, epoch: u64, version: u64) {
        let w = self.writes.entry(i).or_default();
        *w += 1;
        let update_ordinal = self.updates.get(&i).copied().unwrap_or(0);
        self.slots.insert(i, Provenance { origin_epoch: epoch, version, write_ordinal: *w, updates: 0, update_ordinal });
    }

    fn updated(&mut self, i: usize) {
        let u = self.updates.entry(i).or_default();
        *u += 1;
        if let Some(p) = self.slots.get_mut(&i) {
            p.updates += 1;
            p.update_ordinal = *u;
        }
    }

    fn get(&self, i: usize) -> Value {
        self.slots.get(&i).map(Provenance::to_value).unwrap_or_default()
    }
}

/// Updatable server memory: the generic memory with the update vocabulary,
/// leak events and a per-epoch leak budget.
pub struct Usmr {
    mem: MemoryArray,
    need_update: bool,
    budget: LeakBudget,
    lineage: Lineage,
}

impl Usmr {
    pub fn new(n: usize, mode: LeakMode) -> Self {
        Usmr { mem: MemoryArray::new(n, None), need_update: false, budget: LeakBudget::new(mode), lineage: Lineage::default() }
    }
}

impl Resource for Usmr {
    fn name(&self) -> &str {
        "USMR"
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        sig(&[
            ("C", "read"),
            ("C", "write"),
            ("C", "askUpdate"),
            ("C", "getStatus"),
            ("S.1", "read"),
            ("S.1", "write"),
            ("S.1", "update"),
            ("S.2", "leak"),
            ("S.2", "getStatus"),
            (META, "provenance"),
        ])
    }

    fn handle(&mut self, ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let epoch = ctx.history.current_epoch();
        match (iface, verb) {
            ("C", "getStatus") | ("S.2", "getStatus") => Ok(Value::bool(self.need_update)),
            ("C", "askUpdate") => {
                self.need_update = true;
                Ok(Value::Absent)
            }
            ("S.1", "update") => {
                self.need_update = false;
                Ok(Value::Absent)
            }
            ("C", "read") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                if self.need_update {
                    return Ok(Value::Absent);
                }
                Ok(self.mem.read(i))
            }
            ("S.1", "read") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                Ok(self.mem.read(i))
            }
            ("C", "write") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                let x = args.get(1).cloned().unwrap_or_default();
                if !self.mem.accepts(&x) {
                    return Ok(Value::Absent);
                }
                let version = self.lineage.write_requested(i, epoch);
                if !self.need_update {
                    self.mem.set(i, x);
                    self.lineage.written(i, epoch, version);
                }
                Ok(Value::Absent)
            }
            ("S.1", "write") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                let x = args.get(1).cloned().unwrap_or_default();
                if !self.mem.accepts(&x) {
                    return Ok(Value::Absent);
                }
                self.mem.set(i, x);
                self.lineage.updated(i);
                Ok(Value::Absent)
            }
            ("S.2", "leak") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                if !self.budget.take(i, epoch) {
                    return Ok(Value::Absent);
                }
                ctx.history.append(EventName::leaked_data(i as u64));
                Ok(self.mem.read(i))
            }
            (META, "provenance") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                Ok(self.lineage.get(i))
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Confidential updatable memory. Leaks reveal only the length of a cell
/// unless the environment marked the slot insecure. It keeps its own epoch
/// counter so its event history lines up with the key resource it replaces.
pub struct CUsmr {
    mem: MemoryArray,
    need_update: bool,
    budget: LeakBudget,
    lineage: Lineage,
    epoch: u64,
}

impl CUsmr {
    pub fn new(n: usize, cell_len: usize, mode: LeakMode) -> Self {
        CUsmr {
            mem: MemoryArray::new(n, Some(cell_len)),
            need_update: false,
            budget: LeakBudget::new(mode),
            lineage: Lineage::default(),
            epoch: 1,
        }
    }
}

impl Resource for CUsmr {
    fn name(&self) -> &str {
        "cUSMR"
    }

    fn init(&mut self, ctx: &mut Ctx) -> Result<()> {
        ctx.history.append(EventName::epoch(self.epoch));
        Ok(())
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        sig(&[
            ("C", "read"),
            ("C", "write"),
            ("C", "askUpdate"),
            ("C", "getStatus"),
            ("S.1", "update"),
            ("S.2", "leak"),
            ("S.2", "getStatus"),
            (META, "provenance"),
            (META, "peekInsec"),
        ])
    }

    fn handle(&mut self, ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let epoch = ctx.history.current_epoch();
        match (iface, verb) {
            ("C", "getStatus") | ("S.2", "getStatus") => Ok(Value::bool(self.need_update)),
            ("C", "askUpdate") => {
                if !self.need_update {
                    self.epoch += 1;
                    ctx.history.append(EventName::epoch(self.epoch));
                    self.need_update = true;
                }
                Ok(Value::Absent)
            }
            ("S.1", "update") => {
                if self.need_update {
                    let slots: Vec<usize> = self.mem.written().collect();
                    for i in slots {
                        self.lineage.updated(i);
                    }
                    self.need_update = false;
                }
                Ok(Value::Absent)
            }
            ("C", "read") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                if self.need_update {
                    return Ok(Value::Absent);
                }
                Ok(self.mem.read(i))
            }
            ("C", "write") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                let x = args.get(1).cloned().unwrap_or_default();
                if !self.mem.accepts(&x) {
                    return Ok(Value::Absent);
                }
                let version = self.lineage.write_requested(i, epoch);
                if !self.need_update {
                    self.mem.set(i, x);
                    self.lineage.written(i, epoch, version);
                }
                Ok(Value::Absent)
            }
            ("S.2", "leak") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                if !self.budget.take(i, epoch) {
                    return Ok(Value::Absent);
                }
                ctx.history.append(EventName::leaked_data(i as u64));
                Ok(match self.mem.get(i) {
                    None => Value::Absent,
                    Some(x) if ctx.history.contains(EventName::insec(i as u64)) => x.clone(),
                    Some(Value::Bytes(b)) => Value::Int(b.len() as i64),
                    Some(_) => Value::Absent,
                })
            }
            (META, "provenance") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                Ok(self.lineage.get(i))
            }
            (META, "peekInsec") => {
                let Some(i) = self.mem.slot(args)? else { return Ok(Value::Absent) };
                if ctx.history.contains(EventName::insec(i as u64)) {
                    Ok(self.mem.read(i))
                } else {
                    Ok(Value::Absent)
                }
            }
            _ => Ok(Value::Absent),
        }
    }
}

/// Epoch keys and update tokens. Honest fetches at C and S.1, authorised
/// leaks at S.2.
pub struct UpdKey {
    scheme: Arc<dyn UeScheme>,
    keys: Vec<Vec<u8>>,
    tokens: Vec<Option<Vec<u8>>>,
}

impl UpdKey {
    pub fn new(scheme: Arc<dyn UeScheme>) -> Self {
        UpdKey { scheme, keys: Vec::new(), tokens: Vec::new() }
    }

    pub fn epoch(&self) -> u64 {
        self.keys.len() as u64
    }
}

impl Resource for UpdKey {
    fn name(&self) -> &str {
        "UpdKey"
    }

    fn init(&mut self, ctx: &mut Ctx) -> Result<()> {
        let k = self.scheme.keygen(ctx.rng.stream(KEY_STREAM))?;
        self.keys.push(k);
        self.tokens.push(None);
        ctx.history.append(EventName::epoch(1));
        Ok(())
    }

    fn signature(&self) -> Vec<(String, &'static str)> {
        sig(&[
            ("C", "fetchKey"),
            ("C", "nextEpoch"),
            ("S.1", "fetchToken"),
            ("S.2", "leakKey"),
            ("S.2", "leakToken"),
            (META, "key"),
        ])
    }

    fn handle(&mut self, ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        let e = self.epoch();
        let idx = arg_index(args, 0);
        let key_at = |i: Option<i64>| match i {
            Some(i) if i >= 1 && i as u64 <= e => Some(i as usize),
            _ => None,
        };
        let token_at = |i: Option<i64>| match i {
            Some(i) if i >= 2 && i as u64 <= e => Some(i as usize),
            _ => None,
        };
        match (iface, verb) {
            ("C", "fetchKey") => Ok(Value::Bytes(self.keys[e as usize - 1].clone())),
            ("C", "nextEpoch") => {
                let k = self.scheme.keygen(ctx.rng.stream(KEY_STREAM))?;
                let t = self.scheme.tokengen(&self.keys[e as usize - 1], &k);
                self.keys.push(k.clone());
                self.tokens.push(Some(t));
                ctx.history.append(EventName::epoch(e + 1));
                Ok(Value::Bytes(k))
            }
            ("S.1", "fetchToken") => Ok(match token_at(idx) {
                Some(i) => Value::Bytes(self.tokens[i - 1].clone().unwrap_or_default()),
                None => Value::Absent,
            }),
            ("S.2", "leakKey") => Ok(match key_at(idx) {
                Some(i) if ctx.history.contains(EventName::leaked_key(i as u64)) => Value::Bytes(self.keys[i - 1].clone()),
                _ => Value::Absent,
            }),
            ("S.2", "leakToken") => Ok(match token_at(idx) {
                Some(i) if ctx.history.contains(EventName::leaked_token(i as u64)) => {
                    Value::Bytes(self.tokens[i - 1].clone().unwrap_or_default())
                }
                _ => Value::Absent,
            }),
            (META, "key") => Ok(match key_at(idx) {
                Some(i) => Value::Bytes(self.keys[i - 1].clone()),
                None => Value::Absent,
            }),
            _ => Ok(Value::Absent),
        }
    }
}
