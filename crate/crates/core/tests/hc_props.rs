mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagmax_core::hc::{climb_with, random_starts, solve_hc_with};
use tagmax_core::logodds::logistic;
use tagmax_core::topk::Trace;
use tagmax_core::{climb, solve_hc, solve_naive, Budget, HcConfig, Product, Query, Scorer};

use common::{bits, random_query, synthetic_model, worked_model};

#[test]
fn worked_example_climb() {
    let model = worked_model();
    let q = Query::desirable([0, 1], 1);
    let score = |b: &str| tagmax_core::exact_score(&model, &q, &bits(b)).unwrap();
    // neighbours of 1010 in reference order, with their expected scores
    for (b, expected) in [
        ("0010", 1.46),
        ("1110", 1.77),
        ("1000", 0.89),
        ("1011", 1.76),
    ] {
        assert!((score(b) - expected).abs() < 0.02, "{b}");
    }
    let c = climb(&model, &q, &bits("1010"), 40).unwrap();
    assert_eq!(c.end, bits("1110"));
    assert!(c.converged);
    // 1011 is a second local optimum, so restarts matter
    let stuck = climb(&model, &q, &bits("1011"), 40).unwrap();
    assert_eq!((stuck.end, stuck.moves), (bits("1011"), 0));
    let many = solve_hc(
        &model,
        &q,
        &HcConfig {
            restarts: 16,
            max_steps: None,
            seed: 5,
        },
    )
    .unwrap();
    assert_eq!(many.entries[0].bits, bits("1110"));
}

#[test]
fn converged_results_are_local_optima() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..40 {
        let m = rng.random_range(6..=12);
        let model = synthetic_model(200, m, 6, rng.random());
        let (z, k) = (rng.random_range(1..=6), rng.random_range(1..=5));
        let q = random_query(&mut rng, 6, z, k, true);
        let scorer = Scorer::new(&model, &q).unwrap();
        let cfg = HcConfig {
            restarts: 12,
            max_steps: None,
            seed: rng.random(),
        };
        let top = solve_hc_with(&model, &q, &cfg, true, &Budget::UNLIMITED).unwrap();
        let Some(Trace::Hc(trace)) = &top.trace else {
            panic!("trace requested")
        };
        for e in &top.entries {
            let converged = trace.climbs.iter().any(|c| c.end == e.bits && c.converged);
            if converged {
                let here = scorer.exact_score(&e.bits);
                for attr in 0..m {
                    assert!(scorer.exact_score(&e.bits.flipped(attr)) <= here);
                }
            }
        }
        for c in &trace.climbs {
            assert!(c.scores.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(c.moves + 1, c.scores.len());
        }
    }
}

#[test]
fn incremental_scores_equal_full_rescoring_bit_for_bit() {
    let model = synthetic_model(500, 24, 10, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = random_query(&mut rng, 10, 7, 1, true);
    let scorer = Scorer::new(&model, &q).unwrap();
    let terms = scorer.terms();
    let mut o = Product::from_bits(rng.random::<u64>() & ((1 << 24) - 1), 24);
    let mut us = scorer.us(&o);
    for _ in 0..10_000 {
        let attr = rng.random_range(0..24);
        let value = o.get(attr);
        for (u, t) in us.iter_mut().zip(terms) {
            *u += t.flip_delta(attr, value);
        }
        o = o.flipped(attr);
        assert_eq!(us, scorer.us(&o));
        assert_eq!(
            scorer.combine(&us).to_bits(),
            scorer.exact_score(&o).to_bits()
        );
        let direct: f64 = terms.iter().map(|t| t.weight * logistic(t.u(&o))).sum();
        assert_eq!(direct.to_bits(), scorer.exact_score(&o).to_bits());
    }
}

#[test]
fn deterministic_for_a_seed() {
    let model = synthetic_model(300, 14, 5, 3);
    let q = Query::desirable([0, 1, 2, 3], 4);
    let cfg = HcConfig {
        restarts: 20,
        max_steps: None,
        seed: 77,
    };
    let a = solve_hc(&model, &q, &cfg).unwrap();
    let b = solve_hc(&model, &q, &cfg).unwrap();
    assert_eq!(a.entries, b.entries);
    assert_eq!(a.stats.candidates_examined, b.stats.candidates_examined);
    assert_eq!(random_starts(14, 3, 77), random_starts(14, 3, 77));
}

#[test]
fn many_restarts_usually_find_the_global_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let trials = 30;
    let mut misses = 0;
    for _ in 0..trials {
        let model = synthetic_model(200, 10, 6, rng.random());
        let q = random_query(&mut rng, 6, 4, 1, false);
        let hc = solve_hc(
            &model,
            &q,
            &HcConfig {
                restarts: 64,
                max_steps: None,
                seed: rng.random(),
            },
        )
        .unwrap();
        let opt = solve_naive(&model, &q).unwrap();
        if hc.entries[0].bits != opt.entries[0].bits {
            misses += 1;
        }
    }
    println!("top-1 mismatch rate {misses}/{trials}");
    assert!(misses * 5 <= trials, "{misses}/{trials} misses");
}

#[test]
fn start_at_optimum_makes_no_moves() {
    let model = synthetic_model(200, 10, 4, 6);
    let q = Query::desirable([0, 1], 1);
    let opt = solve_naive(&model, &q).unwrap().entries[0].bits;
    let scorer = Scorer::new(&model, &q).unwrap();
    let c = climb_with(&scorer, opt, 100);
    assert_eq!((c.end, c.moves, c.evaluations), (opt, 0, 10));
}
