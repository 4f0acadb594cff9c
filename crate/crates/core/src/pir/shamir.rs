//! Component-wise Shamir sharing, Lagrange interpolation and the
//! subset-interpolation decoder for deviating shares.

use std::collections::BTreeSet;

use rand::Rng;

use super::field::Field;
use crate::error::{CoreError, Result};

pub fn check_points(field: &Field, points: &[u64]) -> Result<()> {
    let set: BTreeSet<u64> = points.iter().map(|&a| field.elem(a)).collect();
    if set.len() != points.len() || set.contains(&0) {
        return Err(CoreError::BadPoints);
    }
    Ok(())
}

/// Shares of `secret` with polynomials whose higher coefficients are
/// `coeffs[comp * t .. (comp + 1) * t]`.
pub fn share_with(field: &Field, secret: &[u64], t: usize, points: &[u64], coeffs: &[u64]) -> Result<Vec<Vec<u64>>> {
    check_points(field, points)?;
    if points.len() < t + 1 {
        return Err(CoreError::UnsupportedParameter(format!("{} shares cannot carry threshold {t}", points.len())));
    }
    if coeffs.len() != secret.len() * t {
        return Err(CoreError::UnsupportedParameter("coefficient count does not match secret length".into()));
    }
    Ok(points
        .iter()
        .map(|&a| {
            secret
                .iter()
                .enumerate()
                .map(|(c, &x)| {
                    let mut poly = Vec::with_capacity(t + 1);
                    poly.push(field.elem(x));
                    poly.extend_from_slice(&coeffs[c * t..(c + 1) * t]);
                    field.eval_poly(&poly, a)
                })
                .collect()
        })
        .collect())
}

pub fn share(field: &Field, secret: &[u64], t: usize, points: &[u64], rng: &mut impl Rng) -> Result<Vec<Vec<u64>>> {
    let coeffs: Vec<u64> = (0..secret.len() * t).map(|_| field.random(rng)).collect();
    share_with(field, secret, t, points, &coeffs)
}

/// λ_j(at) = Π_{i≠j} (at − α_i)/(α_j − α_i)
pub fn lagrange_weights(field: &Field, points: &[u64], at: u64) -> Result<Vec<u64>> {
    let set: BTreeSet<u64> = points.iter().map(|&a| field.elem(a)).collect();
    if set.len() != points.len() {
        return Err(CoreError::SingularPoints);
    }
    points
        .iter()
        .enumerate()
        .map(|(j, &aj)| {
            let (mut num, mut den) = (1, 1);
            for (i, &ai) in points.iter().enumerate() {
                if i != j {
                    num = field.mul(num, field.sub(at, ai));
                    den = field.mul(den, field.sub(aj, ai));
                }
            }
            field.div(num, den).ok_or(CoreError::SingularPoints)
        })
        .collect()
}

/// Interpolates every component at `at`.
pub fn interpolate_at(field: &Field, shares: &[&[u64]], points: &[u64], at: u64) -> Result<Vec<u64>> {
    let w = lagrange_weights(field, points, at)?;
    let len = shares.first().map_or(0, |s| s.len());
    Ok((0..len)
        .map(|c| shares.iter().zip(&w).fold(0, |acc, (s, &wj)| field.add(acc, field.mul(wj, s[c]))))
        .collect())
}

pub fn reconstruct(field: &Field, shares: &[Vec<u64>], points: &[u64]) -> Result<Vec<u64>> {
    let refs: Vec<&[u64]> = shares.iter().map(Vec::as_slice).collect();
    interpolate_at(field, &refs, points, 0)
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![vec![]];
    }
    if items.len() < size {
        return vec![];
    }
    let mut out = Vec::new();
    for (pos, &first) in items.iter().enumerate() {
        for mut rest in subsets(&items[pos + 1..], size - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Recovers the secret when at most `u` shares deviate. `None` marks an ε
/// share. Every (t+1)-subset of the remaining shares proposes a polynomial;
/// a proposal is accepted when at most u − #ε of the other shares disagree
/// with it. The result must be the unique accepted secret.
pub fn byzantine_reconstruct(
    field: &Field,
    shares: &[Option<Vec<u64>>],
    points: &[u64],
    t: usize,
    u: usize,
) -> Result<Vec<u64>> {
    check_points(field, points)?;
    if shares.len() != points.len() {
        return Err(CoreError::UnsupportedParameter("one share per evaluation point".into()));
    }
    if points.len() < t + 1 + u {
        return Err(CoreError::UnsupportedParameter(format!("k = {} < t + 1 + u = {}", points.len(), t + 1 + u)));
    }
    let present: Vec<usize> = (0..shares.len()).filter(|&j| shares[j].is_some()).collect();
    let erased = shares.len() - present.len();
    if erased > u {
        return Err(CoreError::ReconstructionAmbiguous(format!("{erased} missing answers exceed u = {u}")));
    }
    let budget = u - erased;
    let mut accepted: BTreeSet<Vec<u64>> = BTreeSet::new();
    for subset in subsets(&present, t + 1) {
        let sub_points: Vec<u64> = subset.iter().map(|&j| points[j]).collect();
        let sub_shares: Vec<&[u64]> = subset.iter().map(|&j| shares[j].as_deref().unwrap()).collect();
        let mut disagree = 0;
        for &j in present.iter().filter(|j| !subset.contains(j)) {
            if interpolate_at(field, &sub_shares, &sub_points, points[j])? != *shares[j].as_ref().unwrap() {
                disagree += 1;
            }
        }
        if disagree <= budget {
            accepted.insert(interpolate_at(field, &sub_shares, &sub_points, 0)?);
        }
    }
    match accepted.len() {
        1 => Ok(accepted.into_iter().next().unwrap()),
        0 => Err(CoreError::ReconstructionAmbiguous("no candidate is consistent with enough answers".into())),
        c => Err(CoreError::ReconstructionAmbiguous(format!("{c} conflicting candidates"))),
    }
}
