//! Random interaction scripts over the UE world interfaces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::history::EventName;
use crate::kernel::value::Value;
use crate::kernel::world::{event, req, Step};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptShape {
    pub n: usize,
    pub msg_len: usize,
    pub k: usize,
    pub steps: usize,
    /// Cap on client write requests to slot k.
    pub max_k_writes: Option<u64>,
    /// Cap on server update requests.
    pub max_updates: Option<u64>,
    /// Start with insec/j for every j ≠ k.
    pub insec_others: bool,
    /// Include S.2 requests and leak events.
    pub adversarial: bool,
}

impl ScriptShape {
    pub fn new(n: usize, msg_len: usize, k: usize, steps: usize) -> Self {
        ScriptShape { n, msg_len, k, steps, max_k_writes: None, max_updates: None, insec_others: true, adversarial: true }
    }
}

pub fn insec_prefix(n: usize, k: usize) -> Vec<Step> {
    (1..=n).filter(|&j| j != k).map(|j| event(EventName::insec(j as u64))).collect()
}

pub fn random_ue_script(shape: &ScriptShape, rng: &mut impl Rng) -> Vec<Step> {
    let mut out = if shape.insec_others { insec_prefix(shape.n, shape.k) } else { Vec::new() };
    let (mut k_writes, mut updates, mut epoch) = (0u64, 0u64, 1i64);
    let int = |x: usize| Value::Int(x as i64);
    while out.len() < shape.steps {
        let slot = rng.gen_range(1..=shape.n);
        let roll = rng.gen_range(0..100);
        let step = match roll {
            0..=29 => {
                if slot == shape.k && shape.max_k_writes.is_some_and(|m| k_writes >= m) {
                    continue;
                }
                if slot == shape.k {
                    k_writes += 1;
                }
                let len = if rng.gen_bool(0.05) { shape.msg_len + 1 } else { shape.msg_len };
                let x: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                req("C", "write", vec![int(slot), Value::Bytes(x)])
            }
            30..=44 => req("C", "read", vec![int(slot)]),
            45..=52 => {
                epoch += 1;
                req("C", "askUpdate", vec![])
            }
            53..=56 => req("C", "getStatus", vec![]),
            57..=64 => {
                if shape.max_updates.is_some_and(|m| updates >= m) {
                    continue;
                }
                updates += 1;
                req("S.1", "update", vec![])
            }
            _ if !shape.adversarial => continue,
            65..=84 => req("S.2", "leak", vec![int(slot)]),
            85..=88 => req("S.2", "leakKey", vec![Value::Int(rng.gen_range(1..=epoch))]),
            89..=92 => req("S.2", "leakToken", vec![Value::Int(rng.gen_range(1..=epoch))]),
            93..=94 => req("S.2", "getStatus", vec![]),
            95..=96 => event(EventName::leaked_key(rng.gen_range(1..=epoch) as u64)),
            _ => event(EventName::leaked_token(rng.gen_range(1..=epoch) as u64)),
        };
        out.push(step);
    }
    out
}
