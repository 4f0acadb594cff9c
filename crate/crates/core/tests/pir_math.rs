use std::collections::HashMap;

use cclab_core::error::CoreError;
use cclab_core::pir::field::Field;
use cclab_core::pir::ldc::{ReedMuller, RmParams};
use cclab_core::pir::shamir::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Plain evaluation Σ c_d x^d with repeated multiplication.
fn eval_naive(p: u64, coeffs: &[u64], x: u64) -> u64 {
    let mut acc = 0u64;
    let mut power = 1u64;
    for &c in coeffs {
        acc = (acc + c * power) % p;
        power = power * x % p;
    }
    acc
}

#[test]
fn field_rejects_composites_and_inverts() {
    assert!(matches!(Field::new(15), Err(CoreError::UnsupportedParameter(_))));
    for p in [2u64, 7, 11, 257, 65537] {
        let f = Field::new(p).unwrap();
        for a in 1..p.min(300) {
            assert_eq!(f.mul(f.inv(a).unwrap(), a), 1, "p={p} a={a}");
        }
        assert_eq!(f.inv(0), None);
    }
}

#[test]
fn constant_polynomial_when_coefficients_vanish() {
    let f = Field::new(7).unwrap();
    let shares = share_with(&f, &[1], 1, &[1, 2, 3], &[0]).unwrap();
    assert_eq!(shares, vec![vec![1], vec![1], vec![1]]);
}

#[test]
fn bad_points_rejected() {
    let f = Field::new(7).unwrap();
    assert!(matches!(share_with(&f, &[1], 1, &[0, 2], &[3]), Err(CoreError::BadPoints)));
    assert!(matches!(share_with(&f, &[1], 1, &[2, 2], &[3]), Err(CoreError::BadPoints)));
    assert!(matches!(share_with(&f, &[1], 1, &[2, 9], &[3]), Err(CoreError::BadPoints)));
    assert!(matches!(lagrange_weights(&f, &[1, 8], 0), Err(CoreError::SingularPoints)));
}

#[test]
fn weights_at_zero_sum_to_one() {
    let f = Field::new(7).unwrap();
    let w = lagrange_weights(&f, &[1, 2, 3], 0).unwrap();
    assert_eq!(w.iter().fold(0, |a, &x| (a + x) % 7), 1);
    // Interpolating the constant-1 polynomial.
    assert_eq!(reconstruct(&f, &[vec![1], vec![1], vec![1]], &[1, 2, 3]).unwrap(), vec![1]);
    assert_eq!(reconstruct(&f, &[vec![5], vec![5], vec![5]], &[1, 2, 3]).unwrap(), vec![5]);
}

#[test]
fn unit_vector_round_trip() {
    let f = Field::new(257).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let e2 = vec![0, 1, 0, 0, 0];
    let shares = share(&f, &e2, 2, &[1, 2, 3, 4], &mut rng).unwrap();
    assert_eq!(reconstruct(&f, &shares, &[1, 2, 3, 4]).unwrap(), e2);
    for _ in 0..100 {
        let v: Vec<u64> = (0..4).map(|_| f.random(&mut rng)).collect();
        let shares = share(&f, &v, 1, &[1, 2, 3], &mut rng).unwrap();
        assert_eq!(reconstruct(&f, &shares, &[1, 2, 3]).unwrap(), v);
    }
}

/// Every share subset of size ≤ t is uniform: each possible tuple of
/// share values is hit by the same number of coefficient draws.
#[test]
fn small_coalitions_see_uniform_shares() {
    for p in [5u64, 7, 11] {
        for (k, t) in [(3usize, 1usize), (4, 1), (4, 2), (3, 2)] {
            let points: Vec<u64> = (1..=k as u64).collect();
            let draws = p.pow(t as u32);
            for secret in 0..p {
                for mask in 1u32..(1 << k) {
                    let subset: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
                    if subset.len() > t {
                        continue;
                    }
                    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
                    for d in 0..draws {
                        let mut coeffs = vec![secret];
                        let mut x = d;
                        for _ in 0..t {
                            coeffs.push(x % p);
                            x /= p;
                        }
                        let view: Vec<u64> = subset.iter().map(|&j| eval_naive(p, &coeffs, points[j])).collect();
                        *counts.entry(view).or_insert(0) += 1;
                    }
                    let cells = p.pow(subset.len() as u32);
                    assert_eq!(counts.len() as u64, cells, "p={p} k={k} t={t} subset={subset:?}");
                    assert!(counts.values().all(|&c| c == draws / cells));
                }
            }
        }
    }
}

#[test]
fn library_shares_match_naive_evaluation() {
    let f = Field::new(7).unwrap();
    for a1 in 0..7 {
        for secret in 0..7 {
            let shares = share_with(&f, &[secret], 1, &[1, 2, 3], &[a1]).unwrap();
            for (j, s) in shares.iter().enumerate() {
                assert_eq!(s[0], eval_naive(7, &[secret, a1], j as u64 + 1));
            }
        }
    }
}

/// Reference decoder: all polynomials of degree ≤ t, keep those within
/// `budget` disagreements of the received word.
fn nearest_polynomials(p: u64, t: usize, points: &[u64], word: &[Option<u64>], budget: usize) -> Vec<u64> {
    let mut secrets = Vec::new();
    for d in 0..p.pow(t as u32 + 1) {
        let mut coeffs = Vec::new();
        let mut x = d;
        for _ in 0..=t {
            coeffs.push(x % p);
            x /= p;
        }
        let disagreements = points
            .iter()
            .zip(word)
            .filter(|(&a, w)| w.is_some_and(|w| w != eval_naive(p, &coeffs, a)))
            .count();
        if disagreements <= budget && !secrets.contains(&coeffs[0]) {
            secrets.push(coeffs[0]);
        }
    }
    secrets
}

#[test]
fn byzantine_examples() {
    let f = Field::new(11).unwrap();
    let pts = [1, 2, 3, 4];
    let shares = share_with(&f, &[6], 1, &pts, &[4]).unwrap();
    let mut erased: Vec<Option<Vec<u64>>> = shares.iter().cloned().map(Some).collect();
    erased[2] = None;
    assert_eq!(byzantine_reconstruct(&f, &erased, &pts, 1, 1).unwrap(), vec![6]);
    let mut wrong: Vec<Option<Vec<u64>>> = shares.iter().cloned().map(Some).collect();
    wrong[0] = Some(vec![f.add(shares[0][0], 3)]);
    assert_eq!(byzantine_reconstruct(&f, &wrong, &pts, 1, 1).unwrap(), vec![6]);
    let two_erased = vec![None, None, Some(shares[2].clone()), Some(shares[3].clone())];
    assert!(matches!(byzantine_reconstruct(&f, &two_erased, &pts, 1, 1), Err(CoreError::ReconstructionAmbiguous(_))));
    assert!(matches!(byzantine_reconstruct(&f, &wrong, &pts[..3], 1, 1), Err(CoreError::UnsupportedParameter(_))));
}

/// All deviation patterns of weight ≤ u against every polynomial, checked
/// against the brute-force nearest-polynomial decoder.
#[test]
fn byzantine_soundness_exhaustive() {
    let p = 7u64;
    let f = Field::new(p).unwrap();
    let (t, u) = (1usize, 1usize);
    let pts = [1u64, 2, 3, 4];
    for secret in 0..p {
        for a1 in 0..p {
            let honest: Vec<u64> = pts.iter().map(|&a| eval_naive(p, &[secret, a1], a)).collect();
            // No deviation, one erasure, or one wrong value.
            let mut patterns: Vec<Vec<Option<u64>>> = vec![honest.iter().map(|&x| Some(x)).collect()];
            for j in 0..4 {
                let mut w: Vec<Option<u64>> = honest.iter().map(|&x| Some(x)).collect();
                w[j] = None;
                patterns.push(w.clone());
                for delta in 1..p {
                    w[j] = Some((honest[j] + delta) % p);
                    patterns.push(w.clone());
                }
            }
            for word in patterns {
                let erased = word.iter().filter(|w| w.is_none()).count();
                let reference = nearest_polynomials(p, t, &pts, &word, u - erased);
                assert_eq!(reference, vec![secret]);
                let shares: Vec<Option<Vec<u64>>> = word.iter().map(|w| w.map(|x| vec![x])).collect();
                assert_eq!(byzantine_reconstruct(&f, &shares, &pts, t, u).unwrap(), vec![secret], "{word:?}");
            }
        }
    }
}

#[test]
fn ldc_decodes_every_position() {
    let code = ReedMuller::new(RmParams::SMALL).unwrap();
    assert_eq!((code.dimension(), code.length(), code.locality()), (9, 289, 5));
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let msg = vec![3, 0, 16, 7];
    let cw = code.encode(&msg).unwrap();
    for i in 0..msg.len() {
        for _ in 0..1000 {
            let got = code.local_decode(&mut |pos| cw.get(pos).copied(), i, &mut rng).unwrap();
            assert_eq!(got, msg[i]);
        }
    }
    let zero = code.encode(&[0; 9]).unwrap();
    assert!(zero.iter().all(|&x| x == 0));
}

#[test]
fn ldc_corruption_is_reported() {
    let code = ReedMuller::new(RmParams::SMALL).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let cw = code.encode(&[1, 2, 3]).unwrap();
    let r = code.local_decode(&mut |pos| if pos % 2 == 0 { None } else { cw.get(pos).copied() }, 0, &mut rng);
    assert!(matches!(r, Err(CoreError::DecodeFailure(_))));
}

/// Codeword at a message grid point equals the message entry.
#[test]
fn ldc_is_systematic_on_the_grid() {
    let code = ReedMuller::new(RmParams::SMALL).unwrap();
    let msg: Vec<u64> = (0..9).map(|x| (x * 5 + 1) % 17).collect();
    let cw = code.encode(&msg).unwrap();
    for (i, &x) in msg.iter().enumerate() {
        assert_eq!(cw[code.point_index(&code.message_point(i))], x);
    }
}

#[test]
fn ldc_reads_are_uniform() {
    let code = ReedMuller::new(RmParams::SMALL).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let cw = code.encode(&[1, 2, 3, 4]).unwrap();
    let trials = 100_000u64;
    let mut hist = vec![0u64; code.length()];
    for t in 0..trials {
        let mut first = true;
        code.local_decode(
            &mut |pos| {
                if first {
                    hist[pos] += 1;
                    first = false;
                }
                cw.get(pos).copied()
            },
            (t % 4) as usize,
            &mut rng,
        )
        .unwrap();
    }
    let expected = trials as f64 / code.length() as f64;
    let stat: f64 = hist.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let chi = ChiSquared::new((code.length() - 1) as f64).unwrap();
    let p_value = 1.0 - chi.cdf(stat);
    assert!(p_value > 0.01, "chi-square {stat:.1}, p = {p_value:.4}");
}

proptest! {
    #[test]
    fn weights_sum_to_one(points in proptest::collection::btree_set(1u64..257, 1..6)) {
        let f = Field::new(257).unwrap();
        let pts: Vec<u64> = points.into_iter().collect();
        let w = lagrange_weights(&f, &pts, 0).unwrap();
        prop_assert_eq!(w.iter().fold(0, |a, &x| f.add(a, x)), 1);
    }

    #[test]
    fn share_round_trip(secret in proptest::collection::vec(0u64..257, 1..6), t in 0usize..3, seed in any::<u64>()) {
        let f = Field::new(257).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pts: Vec<u64> = (1..=(t as u64 + 2)).collect();
        let shares = share(&f, &secret, t, &pts, &mut rng).unwrap();
        prop_assert_eq!(reconstruct(&f, &shares[..t + 1], &pts[..t + 1]).unwrap(), secret);
    }

    #[test]
    fn ldc_is_linear(
        x in proptest::collection::vec(0u64..17, 9),
        y in proptest::collection::vec(0u64..17, 9),
        a in 0u64..17,
        b in 0u64..17,
    ) {
        let code = ReedMuller::new(RmParams::SMALL).unwrap();
        let f = code.field();
        let mix: Vec<u64> = x.iter().zip(&y).map(|(&u, &v)| f.add(f.mul(a, u), f.mul(b, v))).collect();
        let (cx, cy) = (code.encode(&x).unwrap(), code.encode(&y).unwrap());
        let expected: Vec<u64> = cx.iter().zip(&cy).map(|(&u, &v)| f.add(f.mul(a, u), f.mul(b, v))).collect();
        prop_assert_eq!(code.encode(&mix).unwrap(), expected);
    }

    #[test]
    fn field_ops_match_integers(a in 0u64..65537, b in 0u64..65537) {
        let f = Field::new(65537).unwrap();
        prop_assert_eq!(f.add(a, b), (a + b) % 65537);
        prop_assert_eq!(f.mul(a, b), a * b % 65537);
        prop_assert_eq!(f.add(f.sub(a, b), b), a);
        if b != 0 {
            prop_assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
        }
    }
}
