//! Database files for the PIR demo: one hex record per line, plus a JSON
//! sidecar `<file>.json` with the record count, cell width and field.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::kernel::value::Value;
use crate::pir::scheme::{Cost, PirScheme, ShamirPir};
use crate::pir::worlds::{real_multi_world, MultiSetup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbMeta {
    pub n: usize,
    pub cell_bits: u32,
    pub field_p: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbFile {
    pub meta: DbMeta,
    pub records: Vec<u64>,
}

pub fn sidecar_path(db: &Path) -> PathBuf {
    let mut s = db.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cfg_err(msg: String) -> CoreError {
    CoreError::Config(msg)
}

impl DbFile {
    pub fn load(path: &Path) -> Result<Self> {
        let side = sidecar_path(path);
        let meta_text = std::fs::read_to_string(&side).map_err(|e| cfg_err(format!("{}: {e}", side.display())))?;
        let meta: DbMeta = serde_json::from_str(&meta_text).map_err(|e| {
            cfg_err(format!("{}: parse error at line {}, column {}: {e}", side.display(), e.line(), e.column()))
        })?;
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text, meta)
    }

    pub fn parse(text: &str, meta: DbMeta) -> Result<Self> {
        if meta.cell_bits == 0 || meta.cell_bits > 63 {
            return Err(cfg_err(format!("cell_bits must be in 1..=63, got {}", meta.cell_bits)));
        }
        let mut records = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let digits = line.strip_prefix("0x").unwrap_or(line);
            let x = u64::from_str_radix(digits, 16)
                .map_err(|e| cfg_err(format!("db line {}: {line:?} is not a hex record: {e}", no + 1)))?;
            if x >> meta.cell_bits != 0 {
                return Err(cfg_err(format!("db line {}: {x:#x} does not fit in {} bits", no + 1, meta.cell_bits)));
            }
            if x >= meta.field_p {
                return Err(cfg_err(format!("db line {}: {x} is not below p = {}", no + 1, meta.field_p)));
            }
            records.push(x);
        }
        if records.len() != meta.n {
            return Err(cfg_err(format!("db has {} records but the sidecar says n = {}", records.len(), meta.n)));
        }
        Ok(DbFile { meta, records })
    }
}

/// Retrieves record `index` (1-based) through the k-server real world and
/// returns it with the symbol cost of the exchange.
pub fn demo_pir(records: &[u64], index: usize, servers: usize, threshold: usize, p: u64, seed: u64) -> Result<(u64, Cost)> {
    if index == 0 || index > records.len() {
        return Err(CoreError::IndexOutOfRange { index: index as i64, n: records.len() });
    }
    let scheme: Arc<dyn PirScheme> = Arc::new(ShamirPir::new(p, records.len(), servers, threshold)?);
    let mut w = real_multi_world(&scheme, MultiSetup { t: threshold, byzantine: None }, seed)?;
    let db = Value::List(records.iter().map(|&x| Value::Field(x)).collect());
    w.request("C0", "init", &[db])?;
    w.request("C0", "initComplete", &[])?;
    w.request("C", "query", &[Value::Int(index as i64)])?;
    for j in 1..=servers {
        w.request(&format!("S.{j}"), "answer", &[])?;
    }
    match w.request("C", "reconstruct", &[])? {
        Value::Field(x) => Ok((x, scheme.cost())),
        other => Err(CoreError::DecodeFailure(format!("retrieval returned {other:?}"))),
    }
}
