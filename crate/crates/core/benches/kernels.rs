//! Sequential vs rayon paths of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use claimrl::backends::HashingEmbedder;
use claimrl::funnel::minhash::{dedup_minhash_texts, sketch_all};
use claimrl::funnel::select::{facility_location_lazy, similarity_matrix};
use claimrl::funnel::MinHasher;
use claimrl::metrics::isolation_scores;
use claimrl::par;
use claimrl::synth::corpus::{generate, SynthSpec};

const MODES: [(&str, bool); 2] = [("sequential", true), ("parallel", false)];

fn claims() -> Vec<String> {
    generate(&SynthSpec::dedup_500())
        .claims
        .into_iter()
        .map(|r| r.claim)
        .collect()
}

fn vectors(n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn minhash(c: &mut Criterion) {
    let texts = claims();
    let hasher = MinHasher::default();
    let mut g = c.benchmark_group("minhash");
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new("sketch", name), |b| {
            b.iter(|| sketch_all(black_box(&texts), &hasher))
        });
        g.bench_function(BenchmarkId::new("dedup", name), |b| {
            b.iter(|| dedup_minhash_texts(black_box(&texts), 0.7, &hasher, true))
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn embedding(c: &mut Criterion) {
    let texts = claims();
    let e = HashingEmbedder::new(256);
    let mut g = c.benchmark_group("hashing_embedder");
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(name, |b| b.iter(|| par::map(black_box(&texts), |t| e.embed_one(t))));
    }
    par::set_sequential(false);
    g.finish();
}

fn selection(c: &mut Criterion) {
    let vecs = vectors(400, 64);
    let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
    let ids: Vec<String> = (0..vecs.len()).map(|i| format!("id-{i:04}")).collect();
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let mut g = c.benchmark_group("selection");
    g.sample_size(20);
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new("similarity_matrix", name), |b| {
            b.iter(|| similarity_matrix(black_box(&refs)))
        });
        let sim = similarity_matrix(&refs);
        g.bench_function(BenchmarkId::new("facility_location_lazy", name), |b| {
            b.iter(|| facility_location_lazy(black_box(&sim), &id_refs, 40))
        });
        g.bench_function(BenchmarkId::new("isolation_scores", name), |b| {
            b.iter(|| isolation_scores(black_box(&refs)))
        });
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, minhash, embedding, selection);
criterion_main!(benches);
