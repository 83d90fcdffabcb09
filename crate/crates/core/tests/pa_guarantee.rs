mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagmax_core::logodds::logistic;
use tagmax_core::pa::{ptas_observed, within, PtasRun, ScorePoint};
use tagmax_core::topk::Trace;
use tagmax_core::{
    ptas, solve_naive, solve_pa, Budget, PaConfig, Product, Query, Scorer, TagGroupingMethod,
};

use common::{bits, random_query, synthetic_model, worked_model};

fn config(zprime: usize, epsilon: f64) -> PaConfig {
    PaConfig {
        zprime,
        epsilon,
        sigma: None,
        method: TagGroupingMethod::Contiguous,
    }
}

#[test]
fn overall_ratio_respects_the_group_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9A);
    let mut worst = f64::INFINITY;
    for case in 0..50 {
        let m = rng.random_range(5..=10);
        let model = synthetic_model(200, m, 8, rng.random());
        let q = random_query(&mut rng, 8, 6, 1, case % 4 == 0);
        let opt = solve_naive(&model, &q).unwrap().entries[0].score;
        for eps in [0.25, 0.5, 1.0] {
            let got = solve_pa(&model, &q, &config(2, eps)).unwrap().entries[0].score;
            let bound = 2.0 / (6.0 * (1.0 + eps));
            assert!(
                got >= bound * opt,
                "case {case} eps {eps}: {got} < {bound} x {opt}"
            );
            assert!(got <= opt);
            worst = worst.min(got / opt);
        }
    }
    println!("worst observed ratio {worst:.4}");
}

/// Group objective `Σ_{j∈group} w_j s_j`.
fn group_objective(scorer: &Scorer<'_>, group: &[usize], o: &Product) -> f64 {
    group.iter().map(|&t| scorer.term_score(t, o)).sum()
}

#[test]
fn each_group_is_within_one_plus_epsilon_of_its_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9B);
    for _ in 0..30 {
        let m = rng.random_range(4..=10);
        let model = synthetic_model(200, m, 6, rng.random());
        let q = random_query(&mut rng, 6, 6, 1, true);
        let scorer = Scorer::new(&model, &q).unwrap();
        for eps in [0.25, 0.5, 1.0] {
            let sigma = eps / (2.0 * m as f64);
            for group in [[0usize, 1], [2, 3], [4, 5]] {
                let run = ptas(&scorer, &group, sigma, 1).unwrap();
                let best = Product::all(m)
                    .map(|o| group_objective(&scorer, &group, &o))
                    .fold(0.0, f64::max);
                let got = group_objective(&scorer, &group, &run.products[0]);
                assert!(got * (1.0 + eps) >= best);
            }
        }
    }
}

/// Runs the scheme while checking every compressed set.
fn checked_run(scorer: &Scorer<'_>, group: &[usize], sigma: f64, k: usize) -> PtasRun {
    let m = scorer.m();
    ptas_observed(
        scorer,
        group,
        sigma,
        k,
        &Budget::UNLIMITED,
        &mut |i, points: &[ScorePoint]| {
            // representatives are pairwise separated in scan order
            for (a, p) in points.iter().enumerate() {
                for q in &points[a + 1..] {
                    assert!(!within(&p.coords, &q.coords, sigma));
                }
                assert!(p.associates.len() < k.max(1));
                assert!(!p.associates.contains(&p.bits));
            }
            // every product over the attributes processed so far is represented
            let reach = (1.0 + sigma).powi(i as i32 + 1) - 1.0;
            for raw in 0u64..1 << (i + 1) {
                let o = Product::from_bits(raw << (m - 1 - i), m);
                let coords: Vec<f64> = group
                    .iter()
                    .map(|&t| logistic(scorer.terms()[t].u(&o)))
                    .collect();
                let covered = points.iter().any(|p| {
                    p.coords
                        .iter()
                        .zip(&coords)
                        .all(|(&c, &x)| (c - x).abs() <= reach * c + 1e-12)
                });
                assert!(covered, "product {o} uncovered after attribute {i}");
            }
        },
    )
    .unwrap()
}

#[test]
fn compressed_sets_cover_separate_and_stay_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9C);
    for _ in 0..20 {
        let m = rng.random_range(4..=10);
        let model = synthetic_model(200, m, 6, rng.random());
        // coverage is only checked for desirable tags: complemented scores close to 1
        // do not keep their relative gaps when later attributes rescale R
        let q = random_query(&mut rng, 6, 4, 3, false);
        let scorer = Scorer::new(&model, &q).unwrap();
        for eps in [0.25, 1.0] {
            let sigma = eps / (2.0 * m as f64);
            let run = checked_run(&scorer, &[0, 1], sigma, 3);
            for it in &run.iterations {
                assert!(it.compressed as f64 <= it.size_bound(sigma, 2));
                assert!(it.compressed <= it.uncompressed);
            }
        }
    }
}

#[test]
fn larger_sigma_never_keeps_more_points() {
    let model = synthetic_model(500, 10, 4, 12);
    let q = Query::desirable([0, 1, 2], 1);
    let scorer = Scorer::new(&model, &q).unwrap();
    let sizes: Vec<Vec<usize>> = [0.1, 0.5, 1.0]
        .iter()
        .map(|&s| {
            let run = ptas(&scorer, &[0, 1, 2], s, 1).unwrap();
            for it in &run.iterations {
                assert!(it.compressed as f64 <= it.size_bound(s, 3));
            }
            run.iterations.iter().map(|it| it.compressed).collect()
        })
        .collect();
    for i in 0..10 {
        assert!(
            sizes[0][i] >= sizes[1][i] && sizes[1][i] >= sizes[2][i],
            "iteration {i}: {sizes:?}"
        );
    }
}

#[test]
fn vanishing_sigma_reproduces_the_exhaustive_optimum() {
    let model = synthetic_model(300, 8, 3, 31);
    let q = Query::desirable([0, 1], 3);
    let pa = solve_pa(
        &model,
        &q,
        &PaConfig {
            sigma: Some(1e-12),
            ..config(2, 1.0)
        },
    )
    .unwrap();
    assert_eq!(pa.entries, solve_naive(&model, &q).unwrap().entries);
}

#[test]
fn single_tag_guarantee() {
    let model = synthetic_model(300, 9, 3, 8);
    let q = Query::desirable([1], 1);
    let opt = solve_naive(&model, &q).unwrap().entries[0].score;
    for eps in [0.25, 0.5, 1.0] {
        let got = solve_pa(&model, &q, &config(1, eps)).unwrap().entries[0].score;
        assert!(got * (1.0 + eps) >= opt);
    }
}

#[test]
fn deterministic_with_distinct_top_k() {
    let model = synthetic_model(300, 10, 6, 44);
    let q = Query::desirable([0, 1, 2, 3, 4, 5], 5);
    let cfg = config(2, 0.5);
    let a = solve_pa(&model, &q, &cfg).unwrap();
    let b = solve_pa(&model, &q, &cfg).unwrap();
    assert_eq!(a.entries, b.entries);
    assert_eq!(a.entries.len(), 5);
    let distinct: std::collections::HashSet<Product> = a.bits().into_iter().collect();
    assert_eq!(distinct.len(), 5);
    assert!(a.entries.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn correlated_tag_grouping_runs() {
    let model = synthetic_model(300, 8, 6, 45);
    let q = Query::desirable([0, 1, 2, 3, 4, 5], 2);
    let cfg = PaConfig {
        method: TagGroupingMethod::Correlation,
        ..config(2, 0.5)
    };
    let top = tagmax_core::pa::solve_pa_with(&model, &q, &cfg, true, &Budget::UNLIMITED).unwrap();
    let Some(Trace::Pa(trace)) = &top.trace else {
        panic!("trace requested")
    };
    assert_eq!(trace.groups.len(), 3);
    assert!(trace.groups.iter().all(|g| g.tags.len() == 2));
}

#[test]
fn worked_example_with_coarse_sigma() {
    let model = worked_model();
    let q = Query::desirable([0, 1], 1);
    let scorer = Scorer::new(&model, &q).unwrap();
    let run = ptas(&scorer, &[0, 1], 0.5, 1).unwrap();
    // {0000, 1000} collapses onto 1000 in the first iteration
    assert_eq!(
        (run.iterations[0].uncompressed, run.iterations[0].compressed),
        (2, 1)
    );
    let top = solve_pa(
        &model,
        &q,
        &PaConfig {
            sigma: Some(0.5),
            ..config(2, 1.0)
        },
    )
    .unwrap();
    let best = top.entries[0].score;
    let opt = tagmax_core::exact_score(&model, &q, &bits("1110")).unwrap();
    // σ = 0.5 on four attributes corresponds to ε = 4
    assert!(best <= opt && best * 5.0 >= opt);
}
