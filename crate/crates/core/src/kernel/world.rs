use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::history::{EventHistory, EventName};
use super::rng::Streams;
use super::value::Value;
use crate::error::{CoreError, Result};

/// Interface reserved for simulators and hybrids to inspect resource
/// bookkeeping. Distinguishers never reach it.
pub const META: &str = "meta";
pub const ENV: &str = "W";

/// `S` covers `S`, `S.1` and `S.2`.
pub fn covers(outer: &str, inner: &str) -> bool {
    inner == outer || (inner.len() > outer.len() && inner.starts_with(outer) && inner.as_bytes()[outer.len()] == b'.')
}

/// Shared per-world state: the global event history and the seeded streams.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub history: EventHistory,
    pub rng: Streams,
}

impl Ctx {
    pub fn new(seed: u64) -> Self {
        Ctx { history: EventHistory::new(), rng: Streams::new(seed) }
    }
}

pub trait Resource: Send {
    fn name(&self) -> &str;
    /// (interface, verb) pairs this resource answers.
    fn signature(&self) -> Vec<(String, &'static str)>;
    fn handle(&mut self, ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value>;

    /// Called once when the resource joins a world.
    fn init(&mut self, _ctx: &mut Ctx) -> Result<()> {
        Ok(())
    }
}

pub trait Converter: Send {
    fn name(&self) -> &str;
    fn init(&mut self, _inner: &mut Inner<'_>) -> Result<()> {
        Ok(())
    }
    fn handle(&mut self, inner: &mut Inner<'_>, iface: &str, verb: &str, args: &[Value]) -> Result<Value>;
}

/// A converter's view of the resources beneath it.
pub struct Inner<'a> {
    resources: &'a mut [Box<dyn Resource>],
    pub ctx: &'a mut Ctx,
    calls: usize,
}

impl Inner<'_> {
    pub fn call(&mut self, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        self.calls += 1;
        dispatch(self.resources, self.ctx, iface, verb, args)
    }

    pub fn history(&self) -> &EventHistory {
        &self.ctx.history
    }
}

fn dispatch(resources: &mut [Box<dyn Resource>], ctx: &mut Ctx, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
    for r in resources.iter_mut() {
        if r.signature().iter().any(|(i, v)| i == iface && *v == verb) {
            return r.handle(ctx, iface, verb, args);
        }
    }
    Ok(Value::Absent)
}

struct Attachment {
    conv: Box<dyn Converter>,
    inside: Vec<String>,
    outside: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub interface: String,
    pub verb: String,
    #[serde(default)]
    pub args: Vec<Value>,
}

impl Request {
    pub fn new(interface: &str, verb: &str, args: Vec<Value>) -> Self {
        Request { interface: interface.to_string(), verb: verb.to_string(), args }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Step {
    Request(Request),
    Event { event: EventName },
}

pub struct World {
    resources: Vec<Box<dyn Resource>>,
    attachments: Vec<Attachment>,
    ctx: Ctx,
    inside_counts: Vec<usize>,
}

impl World {
    pub fn new(seed: u64) -> Self {
        World { resources: Vec::new(), attachments: Vec::new(), ctx: Ctx::new(seed), inside_counts: Vec::new() }
    }

    /// Parallel composition: the new resource's (interface, verb) pairs must
    /// not collide with existing ones.
    pub fn add(&mut self, mut r: Box<dyn Resource>) -> Result<()> {
        let sig = r.signature();
        for other in &self.resources {
            for (i, v) in other.signature() {
                if sig.iter().any(|(i2, v2)| *i2 == i && *v2 == v) {
                    return Err(CoreError::CompositionConflict(i, v.to_string()));
                }
            }
        }
        r.init(&mut self.ctx)?;
        self.resources.push(r);
        Ok(())
    }

    pub fn with(mut self, r: Box<dyn Resource>) -> Result<Self> {
        self.add(r)?;
        Ok(self)
    }

    pub fn interfaces(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .resources
            .iter()
            .flat_map(|r| r.signature().into_iter().map(|(i, _)| i))
            .collect();
        for a in &self.attachments {
            out.extend(a.outside.iter().cloned());
        }
        out
    }

    fn exists(&self, iface: &str) -> bool {
        self.resources
            .iter()
            .flat_map(|r| r.signature())
            .any(|(i, _)| covers(iface, &i) || covers(&i, iface))
    }

    fn occupied(&self, iface: &str) -> bool {
        self.attachments
            .iter()
            .flat_map(|a| a.inside.iter().chain(a.outside.iter()))
            .any(|i| covers(i, iface) || covers(iface, i))
    }

    pub fn attach(&mut self, conv: Box<dyn Converter>, at: &[&str]) -> Result<()> {
        self.attach_reprogrammed(conv, at, at)
    }

    /// Attach a converter that consumes `inside` and exposes `outside`.
    pub fn attach_reprogrammed(&mut self, mut conv: Box<dyn Converter>, inside: &[&str], outside: &[&str]) -> Result<()> {
        for i in inside {
            if !self.exists(i) {
                return Err(CoreError::UnknownInterface(i.to_string()));
            }
        }
        for i in inside.iter().chain(outside.iter()) {
            if self.occupied(i) {
                return Err(CoreError::AttachConflict(i.to_string()));
            }
        }
        let mut inner = Inner { resources: &mut self.resources, ctx: &mut self.ctx, calls: 0 };
        conv.init(&mut inner)?;
        self.attachments.push(Attachment {
            conv,
            inside: inside.iter().map(|s| s.to_string()).collect(),
            outside: outside.iter().map(|s| s.to_string()).collect(),
        });
        Ok(())
    }

    pub fn attached(mut self, conv: Box<dyn Converter>, at: &[&str]) -> Result<Self> {
        self.attach(conv, at)?;
        Ok(self)
    }

    pub fn step(&mut self, req: &Request) -> Result<Value> {
        self.request(&req.interface, &req.verb, &req.args)
    }

    pub fn request(&mut self, iface: &str, verb: &str, args: &[Value]) -> Result<Value> {
        if iface == META {
            self.inside_counts.push(0);
            return Ok(Value::Absent);
        }
        if let Some(a) = self.attachments.iter_mut().find(|a| a.outside.iter().any(|o| covers(o, iface))) {
            let mut inner = Inner { resources: &mut self.resources, ctx: &mut self.ctx, calls: 0 };
            let out = a.conv.handle(&mut inner, iface, verb, args);
            self.inside_counts.push(inner.calls);
            return out;
        }
        self.inside_counts.push(0);
        if self.attachments.iter().any(|a| a.inside.iter().any(|o| covers(o, iface))) {
            return Ok(Value::Absent);
        }
        dispatch(&mut self.resources, &mut self.ctx, iface, verb, args)
    }

    /// Privileged read of resource bookkeeping on the meta interface, for
    /// harness checks only. Not counted as an outside request.
    pub fn inspect(&mut self, verb: &str, args: &[Value]) -> Result<Value> {
        dispatch(&mut self.resources, &mut self.ctx, META, verb, args)
    }

    /// Environment event at interface W.
    pub fn trigger(&mut self, e: EventName) -> Result<()> {
        if !e.tag.environment_owned() {
            return Err(CoreError::ForbiddenEvent(e.to_string()));
        }
        self.ctx.history.append(e);
        Ok(())
    }

    pub fn history(&self) -> &EventHistory {
        &self.ctx.history
    }

    pub fn seed(&self) -> u64 {
        self.ctx.rng.seed()
    }

    /// Inside-query count for every outside request so far.
    pub fn inside_counts(&self) -> &[usize] {
        &self.inside_counts
    }

    pub fn run(&mut self, steps: &[Step]) -> Trace {
        let mut responses = Vec::with_capacity(steps.len());
        let mut error = None;
        for s in steps {
            let r = match s {
                Step::Request(req) => self.step(req),
                Step::Event { event } => self.trigger(*event).map(|_| Value::Absent),
            };
            match r {
                Ok(v) => responses.push(v),
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        Trace { responses, error, history: self.ctx.history.entries().to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub responses: Vec<Value>,
    pub error: Option<String>,
    pub history: Vec<EventName>,
}

pub type WorldFactory<'a> = dyn Fn(u64) -> Result<World> + Sync + 'a;
pub type BoxedFactory = Box<dyn Fn(u64) -> Result<World> + Send + Sync>;

/// First point where two traces part ways, if any.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub seed: u64,
    pub step: Option<usize>,
    pub left: String,
    pub right: String,
}

pub fn first_divergence(a: &WorldFactory, b: &WorldFactory, script: &[Step], seeds: &[u64]) -> Result<Option<Divergence>> {
    for &seed in seeds {
        let ta = a(seed)?.run(script);
        let tb = b(seed)?.run(script);
        if ta == tb {
            continue;
        }
        let step = ta.responses.iter().zip(&tb.responses).position(|(x, y)| x != y);
        let (left, right) = match step {
            Some(i) => (ta.responses[i].to_string(), tb.responses[i].to_string()),
            None if ta.error != tb.error || ta.responses.len() != tb.responses.len() => {
                (format!("{:?}", ta.error), format!("{:?}", tb.error))
            }
            None => (
                ta.history.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
                tb.history.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
            ),
        };
        return Ok(Some(Divergence { seed, step, left, right }));
    }
    Ok(None)
}

/// Response sequences and final histories agree for every seed.
pub fn trace_equivalent(a: &WorldFactory, b: &WorldFactory, script: &[Step], seeds: &[u64]) -> Result<bool> {
    Ok(first_divergence(a, b, script, seeds)?.is_none())
}

pub fn req(iface: &str, verb: &str, args: Vec<Value>) -> Step {
    Step::Request(Request::new(iface, verb, args))
}

pub fn event(e: EventName) -> Step {
    Step::Event { event: e }
}
