//! Random interaction scripts over the PIR database interfaces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::db::server_iface;
use crate::kernel::value::Value;
use crate::kernel::world::{req, Step};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PirScriptShape {
    /// Logical records.
    pub n: usize,
    /// Cells a server holds.
    pub stored_len: usize,
    pub p: u64,
    pub steps: usize,
    /// Include C0 reads and writes of single cells.
    pub cell_ops: bool,
    /// Multi-server scripts: server count, and the coalition and Byzantine
    /// designations sent first.
    pub servers: Option<usize>,
    pub coalition: Vec<bool>,
    pub byzantines: Option<Vec<bool>>,
}

impl PirScriptShape {
    pub fn single(n: usize, stored_len: usize, p: u64, steps: usize) -> Self {
        PirScriptShape { n, stored_len, p, steps, cell_ops: true, servers: None, coalition: Vec::new(), byzantines: None }
    }

    pub fn multi(n: usize, stored_len: usize, p: u64, steps: usize, coalition: Vec<bool>) -> Self {
        let k = coalition.len();
        PirScriptShape { n, stored_len, p, steps, cell_ops: false, servers: Some(k), coalition, byzantines: None }
    }
}

fn int(i: usize) -> Value {
    Value::Int(i as i64)
}

/// Every query comes after initComplete: a client query sent to an inactive
/// database is not retried by the protocol client, so scripts that do so
/// fall outside what the constructions promise.
pub fn random_pir_script(shape: &PirScriptShape, rng: &mut impl Rng) -> Vec<Step> {
    let mut out = Vec::new();
    if let Some(_k) = shape.servers {
        out.push(req("W", "formCoalition", vec![Value::Bools(shape.coalition.clone())]));
        if let Some(c) = &shape.byzantines {
            out.push(req("W", "formByzantines", vec![Value::Bools(c.clone())]));
        }
    }
    let db = |rng: &mut dyn rand::RngCore, len: usize| Value::List((0..len).map(|_| Value::Field(rng.gen_range(0..shape.p))).collect());
    if rng.gen_bool(0.1) {
        out.push(req("C0", "init", vec![db(rng, shape.n + 1)]));
    }
    out.push(req("C0", "init", vec![db(rng, shape.n)]));
    let setup = rng.gen_range(0..4);
    for _ in 0..setup {
        out.push(match rng.gen_range(0..4) {
            0 if shape.cell_ops => req("C0", "read", vec![int(rng.gen_range(1..=shape.n))]),
            1 if shape.cell_ops => {
                req("C0", "write", vec![int(rng.gen_range(1..=shape.n)), Value::Field(rng.gen_range(0..shape.p))])
            }
            _ => server_step(shape, rng),
        });
    }
    out.push(req("C0", "initComplete", vec![]));
    while out.len() < shape.steps {
        let step = match rng.gen_range(0..100) {
            0..=14 => req("C", "query", vec![int(rng.gen_range(1..=shape.n))]),
            15..=29 => req("C", "reconstruct", vec![]),
            30..=34 if shape.cell_ops => req("C0", "write", vec![int(1), Value::Field(0)]),
            _ => server_step(shape, rng),
        };
        out.push(step);
    }
    out
}

fn server_step(shape: &PirScriptShape, rng: &mut impl Rng) -> Step {
    let (iface, bad) = match shape.servers {
        Some(k) => (server_iface(rng.gen_range(1..=k)), shape.byzantines.is_some()),
        None => ("S".to_string(), false),
    };
    match rng.gen_range(0..100) {
        0..=29 => req(&iface, "answer", vec![]),
        30..=39 if bad => req(&iface, "badAnswer", vec![]),
        30..=59 => req(&iface, "read", vec![int(rng.gen_range(1..=shape.stored_len))]),
        60..=79 => req(&iface, "getQuery", vec![]),
        _ => req(&iface, "getHist", vec![]),
    }
}
