//! Reed–Muller code with line-based local decoding.
//!
//! Messages of length up to h^m sit on the grid H^m, H = {0, …, h−1}. The
//! codeword evaluates the interpolating polynomial (degree < h in each
//! variable) at every point of F^m. Restricted to a line z + λv it has
//! degree at most d = m(h−1), so d+1 reads at λ = 1..=d+1 recover the value
//! at λ = 0. With v uniform every read is a uniform point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::Field;
use super::shamir::lagrange_weights;
use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RmParams {
    pub p: u64,
    pub m: usize,
    pub h: usize,
}

impl RmParams {
    pub const SMALL: RmParams = RmParams { p: 17, m: 2, h: 3 };
    pub const LARGE: RmParams = RmParams { p: 257, m: 2, h: 4 };
}

#[derive(Clone, Debug)]
pub struct ReedMuller {
    field: Field,
    params: RmParams,
    /// basis[a][x] = L_a(x) over H
    basis: Vec<Vec<u64>>,
}

impl ReedMuller {
    pub fn new(params: RmParams) -> Result<Self> {
        let field = Field::new(params.p)?;
        let RmParams { p, m, h } = params;
        if m == 0 || h < 2 || h as u64 > p {
            return Err(CoreError::UnsupportedParameter(format!("Reed-Muller needs m >= 1 and 2 <= h <= p, got {params:?}")));
        }
        if (m * (h - 1) + 1) as u64 > p - 1 {
            return Err(CoreError::UnsupportedParameter(format!("locality {} needs more nonzero field points", m * (h - 1) + 1)));
        }
        let grid: Vec<u64> = (0..h as u64).collect();
        let basis = (0..h)
            .map(|a| {
                (0..p)
                    .map(|x| {
                        let mut w = lagrange_weights(&field, &grid, x).expect("distinct grid");
                        w.swap_remove(a)
                    })
                    .collect()
            })
            .collect();
        Ok(ReedMuller { field, params, basis })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn params(&self) -> RmParams {
        self.params
    }

    pub fn dimension(&self) -> usize {
        self.params.h.pow(self.params.m as u32)
    }

    pub fn length(&self) -> usize {
        (self.params.p as usize).pow(self.params.m as u32)
    }

    pub fn degree(&self) -> usize {
        self.params.m * (self.params.h - 1)
    }

    pub fn locality(&self) -> usize {
        self.degree() + 1
    }

    fn digits(mut x: usize, base: usize, m: usize) -> Vec<u64> {
        (0..m)
            .map(|_| {
                let d = x % base;
                x /= base;
                d as u64
            })
            .collect()
    }

    pub fn point_index(&self, point: &[u64]) -> usize {
        point.iter().rev().fold(0, |acc, &x| acc * self.params.p as usize + x as usize)
    }

    /// Grid point of message position i (0-based).
    pub fn message_point(&self, i: usize) -> Vec<u64> {
        Self::digits(i, self.params.h, self.params.m)
    }

    pub fn encode(&self, msg: &[u64]) -> Result<Vec<u64>> {
        if msg.len() > self.dimension() {
            return Err(CoreError::UnsupportedParameter(format!(
                "message of length {} exceeds code dimension {}",
                msg.len(),
                self.dimension()
            )));
        }
        let f = &self.field;
        let grid: Vec<Vec<u64>> = (0..msg.len()).map(|i| self.message_point(i)).collect();
        Ok((0..self.length())
            .map(|idx| {
                let x = Self::digits(idx, self.params.p as usize, self.params.m);
                msg.iter().zip(&grid).fold(0, |acc, (&v, z)| {
                    let w = z.iter().zip(&x).fold(1, |w, (&zd, &xd)| f.mul(w, self.basis[zd as usize][xd as usize]));
                    f.add(acc, f.mul(f.elem(v), w))
                })
            })
            .collect())
    }

    /// Read positions for message position i (0-based) along direction v.
    pub fn query_points(&self, i: usize, direction: &[u64]) -> Vec<Vec<u64>> {
        let z = self.message_point(i);
        (1..=self.locality() as u64)
            .map(|lambda| z.iter().zip(direction).map(|(&zd, &vd)| self.field.add(zd, self.field.mul(lambda, vd))).collect())
            .collect()
    }

    /// Value at λ = 0 from the reads at λ = 1..=d+1.
    pub fn decode_from(&self, reads: &[u64]) -> Result<u64> {
        if reads.len() != self.locality() {
            return Err(CoreError::DecodeFailure(format!("expected {} reads, got {}", self.locality(), reads.len())));
        }
        let lambdas: Vec<u64> = (1..=self.locality() as u64).collect();
        let w = lagrange_weights(&self.field, &lambdas, 0)?;
        Ok(self.field.dot(&w, reads))
    }

    /// Local decoding with oracle access to the codeword.
    pub fn local_decode(&self, read: &mut dyn FnMut(usize) -> Option<u64>, i: usize, rng: &mut impl Rng) -> Result<u64> {
        let v: Vec<u64> = (0..self.params.m).map(|_| self.field.random(rng)).collect();
        let reads = self
            .query_points(i, &v)
            .iter()
            .map(|pt| read(self.point_index(pt)).ok_or_else(|| CoreError::DecodeFailure("unreadable position".into())))
            .collect::<Result<Vec<u64>>>()?;
        self.decode_from(&reads)
    }
}
