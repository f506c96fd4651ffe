#![allow(dead_code)]

use cumquant::corpus::{Category, SparseDoc, TermId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random labeled P/N documents over `vocab` terms; label-dependent term
/// preferences give the classifiers something to learn.
pub fn random_docs(seed: u64, count: usize, vocab: u32) -> Vec<SparseDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = if i % 2 == 0 { Category::Positive } else { Category::Negative };
            let len = rng.gen_range(0..15);
            let terms: Vec<(TermId, u32)> = (0..len)
                .map(|_| {
                    let t = if rng.gen_bool(0.3) {
                        let half = vocab / 2;
                        match label {
                            Category::Positive => rng.gen_range(0..half),
                            _ => rng.gen_range(half..vocab),
                        }
                    } else {
                        rng.gen_range(0..vocab)
                    };
                    (TermId(t), rng.gen_range(1..4))
                })
                .collect();
            SparseDoc::new(format!("d{i:04}"), terms).with_label(label)
        })
        .collect()
}

/// Plain relative difference with an absolute floor of 1.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
