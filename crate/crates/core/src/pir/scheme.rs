//! PIR schemes as (query, answer, reconstruct) triples over a prime field.
//! Randomness is a vector of uniform field elements, which keeps the
//! randomness space enumerable at small parameters.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::Field;
use super::ldc::{ReedMuller, RmParams};
use super::shamir::{byzantine_reconstruct, reconstruct, share_with};
use crate::error::{CoreError, Result};

/// Symbol counts for one retrieval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cost {
    pub query_symbols: usize,
    pub answer_symbols: usize,
}

impl Cost {
    pub fn total(&self) -> usize {
        self.query_symbols + self.answer_symbols
    }
}

pub trait PirScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn field(&self) -> Field;
    /// Logical records.
    fn n(&self) -> usize;
    fn servers(&self) -> usize;
    /// Coalition size the queries hide the index from.
    fn privacy(&self) -> usize;
    /// Cells each server stores after the client-side transform.
    fn stored_len(&self) -> usize;
    /// Client-side transform applied to the database before upload.
    fn encode(&self, db: &[u64]) -> Result<Vec<u64>>;
    /// Whether `encode` is more than the identity, so the client needs a
    /// converter at C0.
    fn encodes(&self) -> bool {
        false
    }
    fn randomness_len(&self) -> usize;
    /// Per-server queries for 1-based index i.
    fn query(&self, i: usize, s: &[u64]) -> Result<Vec<Vec<u64>>>;
    /// Server j (1-based) answers from its stored cells.
    fn answer(&self, j: usize, stored: &[u64], q: &[u64]) -> Result<Vec<u64>>;
    /// `None` marks an ε answer; up to `u` answers may deviate.
    fn reconstruct(&self, answers: &[Option<Vec<u64>>], i: usize, s: &[u64], u: usize) -> Result<u64>;
    fn cost(&self) -> Cost;

    fn sample(&self, rng: &mut dyn rand::RngCore) -> Vec<u64> {
        let f = self.field();
        (0..self.randomness_len()).map(|_| rng.gen_range(0..f.modulus())).collect()
    }
}

fn check_index(i: usize, n: usize) -> Result<usize> {
    if i < 1 || i > n {
        return Err(CoreError::IndexOutOfRange { index: i as i64, n });
    }
    Ok(i - 1)
}

/// Column count closest to √n, ties toward the larger.
pub fn matrix_columns(n: usize) -> usize {
    let mut c = (n as f64).sqrt() as usize;
    while (c + 1) * (c + 1) <= n {
        c += 1;
    }
    while c * c > n {
        c -= 1;
    }
    if 4 * n >= (2 * c + 1) * (2 * c + 1) {
        c + 1
    } else {
        c.max(1)
    }
}

/// The database as a column-major matrix with c columns; the last column is
/// zero-padded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixShape {
    pub columns: usize,
    pub rows: usize,
}

impl MatrixShape {
    pub fn for_records(n: usize) -> Self {
        let columns = matrix_columns(n);
        MatrixShape { columns, rows: n.div_ceil(columns) }
    }

    /// (row, column) of 0-based record idx.
    pub fn locate(&self, idx: usize) -> (usize, usize) {
        (idx % self.rows, idx / self.rows)
    }
}

#[derive(Clone, Debug)]
pub struct ShamirPir {
    field: Field,
    n: usize,
    k: usize,
    t: usize,
    shape: MatrixShape,
    points: Vec<u64>,
}

impl ShamirPir {
    pub fn new(p: u64, n: usize, k: usize, t: usize) -> Result<Self> {
        let field = Field::new(p)?;
        if n == 0 {
            return Err(CoreError::UnsupportedParameter("empty database".into()));
        }
        if k < t + 1 {
            return Err(CoreError::UnsupportedParameter(format!("k = {k} servers cannot hide from coalitions of t = {t}")));
        }
        if k as u64 >= p {
            return Err(CoreError::UnsupportedParameter(format!("need k < p for distinct nonzero points, got k={k} p={p}")));
        }
        let points = (1..=k as u64).collect();
        Ok(ShamirPir { field, n, k, t, shape: MatrixShape::for_records(n), points })
    }

    pub fn shape(&self) -> MatrixShape {
        self.shape
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }
}

impl PirScheme for ShamirPir {
    fn name(&self) -> &'static str {
        "shamir"
    }

    fn field(&self) -> Field {
        self.field
    }

    fn n(&self) -> usize {
        self.n
    }

    fn servers(&self) -> usize {
        self.k
    }

    fn privacy(&self) -> usize {
        self.t
    }

    fn stored_len(&self) -> usize {
        self.n
    }

    fn encode(&self, db: &[u64]) -> Result<Vec<u64>> {
        Ok(db.to_vec())
    }

    fn randomness_len(&self) -> usize {
        self.shape.columns * self.t
    }

    fn query(&self, i: usize, s: &[u64]) -> Result<Vec<Vec<u64>>> {
        let (_, col) = self.shape.locate(check_index(i, self.n)?);
        let mut unit = vec![0; self.shape.columns];
        unit[col] = 1;
        share_with(&self.field, &unit, self.t, &self.points, s)
    }

    fn answer(&self, _j: usize, stored: &[u64], q: &[u64]) -> Result<Vec<u64>> {
        if q.len() != self.shape.columns {
            return Err(CoreError::UnsupportedParameter(format!("query of length {} for {} columns", q.len(), self.shape.columns)));
        }
        let f = &self.field;
        Ok((0..self.shape.rows)
            .map(|r| {
                (0..self.shape.columns).fold(0, |acc, c| {
                    let cell = stored.get(c * self.shape.rows + r).copied().unwrap_or(0);
                    f.add(acc, f.mul(cell, q[c]))
                })
            })
            .collect())
    }

    fn reconstruct(&self, answers: &[Option<Vec<u64>>], i: usize, _s: &[u64], u: usize) -> Result<u64> {
        let (row, _) = self.shape.locate(check_index(i, self.n)?);
        let column = if u == 0 && answers.iter().all(Option::is_some) {
            let shares: Vec<Vec<u64>> = answers.iter().map(|a| a.clone().unwrap()).collect();
            reconstruct(&self.field, &shares, &self.points)?
        } else {
            byzantine_reconstruct(&self.field, answers, &self.points, self.t, u)?
        };
        column.get(row).copied().ok_or_else(|| CoreError::DecodeFailure("short answer".into()))
    }

    fn cost(&self) -> Cost {
        Cost { query_symbols: self.k * self.shape.columns, answer_symbols: self.k * self.shape.rows }
    }
}

/// One server per decoder read; each query is a point of F^m and each answer
/// the codeword symbol there.
#[derive(Clone, Debug)]
pub struct LdcPir {
    code: ReedMuller,
    n: usize,
}

impl LdcPir {
    pub fn new(params: RmParams, n: usize) -> Result<Self> {
        let code = ReedMuller::new(params)?;
        if n == 0 || n > code.dimension() {
            return Err(CoreError::UnsupportedParameter(format!("n = {n} outside 1..={}", code.dimension())));
        }
        Ok(LdcPir { code, n })
    }

    pub fn code(&self) -> &ReedMuller {
        &self.code
    }
}

impl PirScheme for LdcPir {
    fn name(&self) -> &'static str {
        "ldc"
    }

    fn field(&self) -> Field {
        self.code.field()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn servers(&self) -> usize {
        self.code.locality()
    }

    fn privacy(&self) -> usize {
        1
    }

    fn stored_len(&self) -> usize {
        self.code.length()
    }

    fn encode(&self, db: &[u64]) -> Result<Vec<u64>> {
        self.code.encode(db)
    }

    fn encodes(&self) -> bool {
        true
    }

    fn randomness_len(&self) -> usize {
        self.code.params().m
    }

    fn query(&self, i: usize, s: &[u64]) -> Result<Vec<Vec<u64>>> {
        let idx = check_index(i, self.n)?;
        if s.len() != self.randomness_len() {
            return Err(CoreError::UnsupportedParameter("direction has the wrong dimension".into()));
        }
        Ok(self.code.query_points(idx, s))
    }

    fn answer(&self, _j: usize, stored: &[u64], q: &[u64]) -> Result<Vec<u64>> {
        let p = self.code.params().p;
        if q.len() != self.code.params().m || q.iter().any(|&x| x >= p) {
            return Err(CoreError::UnsupportedParameter("query is not a point of the code domain".into()));
        }
        Ok(vec![stored.get(self.code.point_index(q)).copied().unwrap_or(0)])
    }

    fn reconstruct(&self, answers: &[Option<Vec<u64>>], i: usize, _s: &[u64], _u: usize) -> Result<u64> {
        check_index(i, self.n)?;
        let reads = answers
            .iter()
            .map(|a| match a.as_deref() {
                Some([x]) => Ok(*x),
                _ => Err(CoreError::DecodeFailure("missing or malformed read".into())),
            })
            .collect::<Result<Vec<u64>>>()?;
        self.code.decode_from(&reads)
    }

    fn cost(&self) -> Cost {
        let k = self.servers();
        Cost { query_symbols: k * self.code.params().m, answer_symbols: k }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeSpec {
    Shamir { p: u64, k: usize, t: usize },
    Ldc { p: u64, m: usize, h: usize },
}

pub fn build_pir(spec: &SchemeSpec, n: usize) -> Result<Arc<dyn PirScheme>> {
    Ok(match *spec {
        SchemeSpec::Shamir { p, k, t } => Arc::new(ShamirPir::new(p, n, k, t)?),
        SchemeSpec::Ldc { p, m, h } => Arc::new(LdcPir::new(RmParams { p, m, h }, n)?),
    })
}
