use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use super::rng::{derive_key, derive_seed};
use super::world::{trace_equivalent, Step, World, WorldFactory};
use crate::error::{CoreError, Result};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489;

/// Outputs one bit after interacting with a world. The rng is private to the
/// distinguisher, so its coin tosses never shift the world's own streams.
pub trait Distinguisher: Sync {
    fn distinguish(&self, world: &mut World, rng: &mut ChaCha20Rng) -> Result<bool>;
}

impl<F> Distinguisher for F
where
    F: Fn(&mut World, &mut ChaCha20Rng) -> Result<bool> + Sync,
{
    fn distinguish(&self, world: &mut World, rng: &mut ChaCha20Rng) -> Result<bool> {
        self(world, rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdvantageReport {
    pub trials: u64,
    pub ones_a: u64,
    pub ones_b: u64,
    pub p_a: f64,
    pub p_b: f64,
    /// |p̂A − p̂B|
    pub estimate: f64,
    /// Interval on the signed difference p̂A − p̂B.
    pub ci_low: f64,
    pub ci_high: f64,
    pub excludes_zero: bool,
    pub exact: bool,
    pub method: String,
}

impl AdvantageReport {
    pub fn exact_zero(method: &str) -> Self {
        AdvantageReport {
            trials: 0,
            ones_a: 0,
            ones_b: 0,
            p_a: 0.0,
            p_b: 0.0,
            estimate: 0.0,
            ci_low: 0.0,
            ci_high: 0.0,
            excludes_zero: false,
            exact: true,
            method: method.to_string(),
        }
    }

    pub fn from_counts(ones_a: u64, ones_b: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p_a = ones_a as f64 / n;
        let p_b = ones_b as f64 / n;
        let diff = p_a - p_b;
        let se = (p_a * (1.0 - p_a) / n + p_b * (1.0 - p_b) / n).sqrt();
        let (lo, hi) = (diff - Z99 * se, diff + Z99 * se);
        AdvantageReport {
            trials,
            ones_a,
            ones_b,
            p_a,
            p_b,
            estimate: diff.abs(),
            ci_low: lo,
            ci_high: hi,
            excludes_zero: lo > 0.0 || hi < 0.0,
            exact: false,
            method: "wald99: (pA-pB) ± 2.5758·sqrt(pA(1-pA)/n + pB(1-pB)/n)".to_string(),
        }
    }

    pub fn ci_contains_zero(&self) -> bool {
        !self.excludes_zero
    }

    /// Interval on |p̂A − p̂B| folded from the signed one.
    pub fn abs_interval(&self) -> (f64, f64) {
        if self.ci_low <= 0.0 && self.ci_high >= 0.0 {
            (0.0, self.ci_low.abs().max(self.ci_high.abs()))
        } else {
            let (a, b) = (self.ci_low.abs(), self.ci_high.abs());
            (a.min(b), a.max(b))
        }
    }
}

pub fn trial_seed(base: u64, side: &str, trial: u64) -> u64 {
    derive_seed(base, &format!("trial/{side}/{trial}"))
}

fn count_ones(factory: &WorldFactory, d: &dyn Distinguisher, side: &str, trials: u64, base: u64) -> Result<u64> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut w = factory(trial_seed(base, side, t))?;
            let mut rng = ChaCha20Rng::from_seed(derive_key(base, &format!("dist/{side}/{t}")));
            d.distinguish(&mut w, &mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Monte Carlo estimate of the distinguishing advantage between two world
/// factories. Every trial seed is fixed before dispatch, so the result does not
/// depend on `jobs`.
pub fn estimate_advantage(
    fa: &WorldFactory,
    fb: &WorldFactory,
    d: &dyn Distinguisher,
    trials: u64,
    base_seed: u64,
    jobs: usize,
) -> Result<AdvantageReport> {
    if trials == 0 {
        return Err(CoreError::Config("trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CoreError::Config(e.to_string()))?;
    pool.install(|| {
        let a = count_ones(fa, d, "A", trials, base_seed)?;
        let b = count_ones(fb, d, "B", trials, base_seed)?;
        Ok(AdvantageReport::from_counts(a, b, trials))
    })
}

/// Scripted distinguishers whose output is a function of the trace: if the two
/// worlds are trace-equivalent on every seed the advantage is exactly 0 and
/// sampling is skipped.
pub fn advantage_with_fast_path(
    fa: &WorldFactory,
    fb: &WorldFactory,
    script: &[Step],
    d: &dyn Distinguisher,
    trials: u64,
    base_seed: u64,
    jobs: usize,
) -> Result<AdvantageReport> {
    let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(base_seed, "A", t)).collect();
    if trace_equivalent(fa, fb, script, &seeds)? {
        return Ok(AdvantageReport::exact_zero("trace-equivalence"));
    }
    estimate_advantage(fa, fb, d, trials, base_seed, jobs)
}
