#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagmax_core::synthetic::{generate_synthetic, SyntheticSpec};
use tagmax_core::topk::rank_cmp;
use tagmax_core::{
    train, Dataset, Model, Polarity, Product, Query, Scorer, SmoothingSpec, TagSelection,
};

pub fn worked_model() -> Model {
    train(&tagmax_core::worked_example(), &SmoothingSpec::default()).unwrap()
}

pub fn bits(s: &str) -> Product {
    s.parse().unwrap()
}

/// Synthetic model with `n` rows.
pub fn synthetic_model(n: usize, m: usize, r: usize, seed: u64) -> Model {
    let ds = generate_synthetic(&SyntheticSpec::new(n, m, r, seed)).unwrap();
    train(&ds, &SmoothingSpec::default()).unwrap()
}

/// Uniformly random 0/1 matrix.
pub fn random_dataset(n: usize, m: usize, r: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|i| tagmax_core::ProductRow {
            id: format!("p{i}"),
            attributes: (0..m).map(|_| rng.random_bool(0.5)).collect(),
            tags: (0..r).map(|_| rng.random_bool(0.4)).collect(),
        })
        .collect();
    Dataset::new(
        (0..m).map(|i| format!("a{i}")).collect(),
        (0..r).map(|j| format!("t{j}")).collect(),
        rows,
    )
    .unwrap()
}

/// `z` distinct tags out of `r` in random order, optionally with random weights and polarities.
pub fn random_query(rng: &mut ChaCha8Rng, r: usize, z: usize, k: usize, mixed: bool) -> Query {
    let picked = rand::seq::index::sample(rng, r, z).into_vec();
    Query {
        tags: picked
            .into_iter()
            .map(|tag| {
                if mixed {
                    TagSelection {
                        tag,
                        weight: [0.5, 1.0, 2.0][rng.random_range(0..3)],
                        polarity: if rng.random_bool(0.25) {
                            Polarity::Undesirable
                        } else {
                            Polarity::Desirable
                        },
                    }
                } else {
                    TagSelection::desirable(tag)
                }
            })
            .collect(),
        k,
    }
}

/// Full ranking by direct evaluation, independent of the solvers' enumeration code.
pub fn brute_ranking(model: &Model, query: &Query) -> Vec<(f64, Product)> {
    let scorer = Scorer::new(model, query).unwrap();
    let mut all: Vec<(f64, Product)> = Product::all(model.m())
        .map(|o| (scorer.exact_score(&o), o))
        .collect();
    all.sort_by(|a, b| rank_cmp(a.0, &a.1, b.0, &b.1));
    all
}
