//! JSON distinguisher scripts: a list of steps run against a world, then a
//! predicate over the recorded responses that yields the output bit.

use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::kernel::advantage::Distinguisher;
use crate::kernel::history::EventName;
use crate::kernel::value::Value;
use crate::kernel::world::{Step, World};

/// Response positions are 0-based step indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    Const(bool),
    Equal([usize; 2]),
    IsAbsent(usize),
    /// First `len` bytes of two byte responses agree.
    PrefixEqual { left: usize, right: usize, len: usize },
    /// Low bit of a hash of the response.
    Parity(usize),
    HistoryContains(EventName),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    fn max_index(&self) -> Option<usize> {
        match self {
            Predicate::Const(_) | Predicate::HistoryContains(_) => None,
            Predicate::Equal([a, b]) => Some(*a.max(b)),
            Predicate::IsAbsent(i) | Predicate::Parity(i) => Some(*i),
            Predicate::PrefixEqual { left, right, .. } => Some(*left.max(right)),
            Predicate::Not(p) => p.max_index(),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().filter_map(Predicate::max_index).max(),
        }
    }

    pub fn eval(&self, responses: &[Value], world: &World) -> bool {
        let at = |i: usize| responses.get(i).cloned().unwrap_or_default();
        match self {
            Predicate::Const(b) => *b,
            Predicate::Equal([a, b]) => at(*a) == at(*b),
            Predicate::IsAbsent(i) => at(*i).is_absent(),
            Predicate::PrefixEqual { left, right, len } => match (at(*left).as_bytes(), at(*right).as_bytes()) {
                (Some(a), Some(b)) => a.len() >= *len && b.len() >= *len && a[..*len] == b[..*len],
                _ => false,
            },
            Predicate::Parity(i) => {
                let bytes = serde_json::to_vec(&at(*i)).unwrap_or_default();
                Sha256::digest(&bytes)[0] & 1 == 1
            }
            Predicate::HistoryContains(e) => world.history().contains(*e),
            Predicate::Not(p) => !p.eval(responses, world),
            Predicate::And(ps) => ps.iter().all(|p| p.eval(responses, world)),
            Predicate::Or(ps) => ps.iter().any(|p| p.eval(responses, world)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub steps: Vec<Step>,
    pub predicate: Predicate,
}

impl Script {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Script = serde_json::from_str(text)
            .map_err(|e| CoreError::Config(format!("script parse error at line {}, column {}: {e}", e.line(), e.column())))?;
        if let Some(i) = s.predicate.max_index() {
            if i >= s.steps.len() {
                return Err(CoreError::Config(format!(
                    "predicate refers to step {i} but the script has {} steps",
                    s.steps.len()
                )));
            }
        }
        Ok(s)
    }

    /// Runs the steps and returns the responses. A failing step is a hard
    /// error: scripts must not hit out-of-range indices or forbidden events.
    pub fn execute(&self, world: &mut World) -> Result<Vec<Value>> {
        let mut out = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            out.push(match s {
                Step::Request(r) => world.step(r)?,
                Step::Event { event } => {
                    world.trigger(*event)?;
                    Value::Absent
                }
            });
        }
        Ok(out)
    }
}

impl Distinguisher for Script {
    fn distinguish(&self, world: &mut World, _rng: &mut ChaCha20Rng) -> Result<bool> {
        let responses = self.execute(world)?;
        Ok(self.predicate.eval(&responses, world))
    }
}
