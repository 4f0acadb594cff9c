//! Prime fields with word-sized modulus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{inv_mod_prime, is_prime, mul_mod, pow_mod};
use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Field {
    p: u64,
}

impl Field {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) || p > u32::MAX as u64 {
            return Err(CoreError::UnsupportedParameter(format!("field modulus {p} must be a prime below 2^32")));
        }
        Ok(Field { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn elem(&self, x: u64) -> u64 {
        x % self.p
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.p)
    }

    /// None for zero.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.p;
        (a != 0).then(|| inv_mod_prime(a, self.p))
    }

    pub fn div(&self, a: u64, b: u64) -> Option<u64> {
        Some(self.mul(a, self.inv(b)?))
    }

    pub fn random(&self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(0..self.p)
    }

    /// Σ xs[i]·ys[i]
    pub fn dot(&self, xs: &[u64], ys: &[u64]) -> u64 {
        xs.iter().zip(ys).fold(0, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }

    /// Horner evaluation, coefficients from the constant term up.
    pub fn eval_poly(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs.iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }
}
