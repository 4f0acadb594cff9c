use std::hint::black_box;
use std::sync::Arc;

use cclab_core::kernel::history::{EventHistory, EventName};
use cclab_core::kernel::rng::Streams;
use cclab_core::kernel::value::Value;
use cclab_core::memory::LeakMode;
use cclab_core::pir::game::exact_game_distance;
use cclab_core::pir::ldc::{ReedMuller, RmParams};
use cclab_core::pir::scheme::{PirScheme, ShamirPir};
use cclab_core::pir::shamir::{reconstruct, share};
use cclab_core::pir::worlds::{real_multi_world, MultiSetup};
use cclab_core::ue::firewall::compute_firewalls;
use cclab_core::ue::hybrid::{real_world, UeSetup};
use cclab_core::ue::scheme::{build_scheme, SchemeKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn ue_schemes(c: &mut Criterion) {
    let mut g = c.benchmark_group("ue-scheme");
    for kind in [SchemeKind::Toy, SchemeKind::RiseSmall, SchemeKind::RiseLarge] {
        let scheme = build_scheme(kind, 16, 1).unwrap();
        let mut rng = Streams::new(1).coins("bench");
        let k0 = scheme.keygen(&mut rng).unwrap();
        let k1 = scheme.keygen(&mut rng).unwrap();
        let token = scheme.tokengen(&k0, &k1);
        let c0 = scheme.enc(&k0, &[7; 16], &mut rng);
        g.bench_function(BenchmarkId::new("enc", format!("{kind:?}")), |b| b.iter(|| scheme.enc(&k0, black_box(&[7; 16]), &mut rng)));
        g.bench_function(BenchmarkId::new("upd", format!("{kind:?}")), |b| b.iter(|| scheme.upd(&token, black_box(&c0), &mut rng)));
    }
    g.finish();
}

fn ue_world(c: &mut Criterion) {
    let setup = UeSetup { scheme: SchemeKind::Toy, n: 8, msg_len: 16, k: 1, mode: LeakMode::One };
    c.bench_function("ue-world/write-rotate-read", |b| {
        b.iter(|| {
            let mut w = real_world(&setup, 3).unwrap();
            for i in 1..=8 {
                w.request("C", "write", &[Value::Int(i), Value::Bytes(vec![i as u8; 16])]).unwrap();
            }
            w.request("C", "askUpdate", &[]).unwrap();
            w.request("S.1", "update", &[]).unwrap();
            w.request("C", "read", &[Value::Int(5)]).unwrap()
        })
    });
}

fn shamir(c: &mut Criterion) {
    let scheme = ShamirPir::new(257, 64, 4, 1).unwrap();
    let field = scheme.field();
    let mut rng = Streams::new(2).coins("bench");
    let secret: Vec<u64> = (0..8).collect();
    let shares = share(&field, &secret, 2, &[1, 2, 3, 4], &mut rng).unwrap();
    c.bench_function("shamir/reconstruct-8x4", |b| b.iter(|| reconstruct(&field, black_box(&shares), &[1, 2, 3, 4]).unwrap()));
}

fn pir(c: &mut Criterion) {
    let scheme: Arc<dyn PirScheme> = Arc::new(ShamirPir::new(257, 64, 4, 1).unwrap());
    let db = Value::List((0..64).map(|x| Value::Field(x * 3 % 257)).collect());
    c.bench_function("pir/retrieve-n64-k4", |b| {
        b.iter(|| {
            let mut w = real_multi_world(&scheme, MultiSetup { t: 1, byzantine: None }, 4).unwrap();
            w.request("C0", "init", &[db.clone()]).unwrap();
            w.request("C0", "initComplete", &[]).unwrap();
            w.request("C", "query", &[Value::Int(37)]).unwrap();
            for j in 1..=4 {
                w.request(&format!("S.{j}"), "answer", &[]).unwrap();
            }
            w.request("C", "reconstruct", &[]).unwrap()
        })
    });
    let small: Arc<dyn PirScheme> = Arc::new(ShamirPir::new(7, 4, 3, 1).unwrap());
    c.bench_function("pir/exact-distance-p7", |b| b.iter(|| exact_game_distance(&small, &[3, 1, 4, 1], 2, &[1]).unwrap()));
    let rm = ReedMuller::new(RmParams::SMALL).unwrap();
    let msg: Vec<u64> = (0..rm.dimension() as u64).collect();
    c.bench_function("ldc/encode", |b| b.iter(|| rm.encode(black_box(&msg)).unwrap()));
}

fn firewalls(c: &mut Criterion) {
    let mut h = EventHistory::new();
    for e in 1..=32 {
        h.append(EventName::epoch(e));
        if e % 3 == 0 {
            h.append(EventName::leaked_token(e));
        }
        if e % 7 == 0 {
            h.append(EventName::leaked_key(e));
        }
    }
    c.bench_function("firewall/compute-e32", |b| b.iter(|| compute_firewalls(black_box(&h), 32)));
}

criterion_group!(benches, ue_schemes, ue_world, shamir, pir, firewalls);
criterion_main!(benches);
