mod common;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagmax_core::ett::{group_attributes_by_size, solve_ett_with, TagSubsystem};
use tagmax_core::logodds::logistic;
use tagmax_core::topk::{rank_cmp, Trace};
use tagmax_core::{
    group_attributes, solve_ett, solve_naive, Budget, GroupingMethod, Product, Query, Scorer,
};

use common::{brute_ranking, random_query, synthetic_model, worked_model};

fn method(i: u32) -> GroupingMethod {
    if i.is_multiple_of(2) {
        GroupingMethod::Contiguous
    } else {
        GroupingMethod::Correlation
    }
}

#[test]
fn matches_exhaustive_top_k_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE77);
    for case in 0..120u32 {
        let m = rng.random_range(6..=12);
        let z = rng.random_range(2..=8);
        let k = rng.random_range(1..=5);
        let model = synthetic_model(200, m, 8, rng.random());
        let q = random_query(&mut rng, 8, z, k, case % 3 == 0);
        let grouping =
            group_attributes_by_size(&model, rng.random_range(2..=4), method(case)).unwrap();
        let ett = solve_ett(&model, &q, &grouping).unwrap();
        let naive = solve_naive(&model, &q).unwrap();
        assert_eq!(ett.entries, naive.entries, "case {case}: m={m} z={z} k={k}");
        assert!(ett.stats.candidates_examined as usize >= ett.entries.len());
    }
}

#[test]
fn k_covering_the_space_returns_the_full_ranking() {
    let model = synthetic_model(200, 6, 3, 4);
    let q = Query::desirable([0, 1, 2], 100);
    let grouping = group_attributes(&model, 2, GroupingMethod::Contiguous).unwrap();
    let ett = solve_ett(&model, &q, &grouping).unwrap();
    assert_eq!(ett.entries.len(), 64);
    assert_eq!(ett.entries, solve_naive(&model, &q).unwrap().entries);
    assert!(ett.stats.short_result);
}

/// Drains one tag stream completely.
fn drain(
    model: &tagmax_core::Model,
    q: &Query,
    term: usize,
    l: usize,
    method: GroupingMethod,
) -> Vec<(f64, Product)> {
    let scorer = Scorer::new(model, q).unwrap();
    let grouping = group_attributes(model, l, method).unwrap();
    let mut s = TagSubsystem::new(&scorer, term, &grouping);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    while let Some(e) = s.get_next() {
        assert!(seen.insert(e.bits), "released twice");
        out.push((e.score, e.bits));
    }
    out
}

#[test]
fn streams_replay_the_exhaustive_tag_ranking() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..30u32 {
        let m = rng.random_range(4..=10);
        let model = synthetic_model(200, m, 4, rng.random());
        let q = random_query(&mut rng, 4, 2, 1, true);
        let scorer = Scorer::new(&model, &q).unwrap();
        for term in 0..2 {
            let l = rng.random_range(1..=m.min(4));
            let got = drain(&model, &q, term, l, method(case));
            let mut want: Vec<(f64, Product)> = Product::all(m)
                .map(|o| (logistic(scorer.terms()[term].u(&o)), o))
                .collect();
            want.sort_by(|a, b| rank_cmp(a.0, &a.1, b.0, &b.1));
            assert_eq!(got.len(), 1 << m);
            assert!(got.windows(2).all(|w| w[0].0 >= w[1].0));
            let got_bits: Vec<Product> = got.iter().map(|x| x.1).collect();
            let want_bits: Vec<Product> = want.iter().map(|x| x.1).collect();
            assert_eq!(got_bits, want_bits, "case {case} term {term} l {l}");
        }
    }
}

#[test]
fn single_list_stream_is_a_plain_traversal() {
    let model = synthetic_model(200, 6, 2, 77);
    let q = Query::desirable([1], 1);
    let scorer = Scorer::new(&model, &q).unwrap();
    let grouping = group_attributes(&model, 1, GroupingMethod::Contiguous).unwrap();
    let mut s = TagSubsystem::new(&scorer, 0, &grouping);
    let list: Vec<f64> = s.lists()[0].entries.iter().map(|e| logistic(e.u)).collect();
    for i in 0..list.len() {
        let e = s.get_next().unwrap();
        assert_eq!(e.score, list[i]);
        // the bound equals the next list entry
        assert_eq!(e.mpfs, list.get(i + 1).copied());
    }
    assert!(s.get_next().is_none());
}

#[test]
fn first_release_is_the_join_of_list_heads() {
    let model = synthetic_model(300, 9, 3, 5);
    let q = Query::desirable([0, 1, 2], 1);
    let scorer = Scorer::new(&model, &q).unwrap();
    let grouping = group_attributes(&model, 3, GroupingMethod::Contiguous).unwrap();
    for term in 0..3 {
        let s = TagSubsystem::new(&scorer, term, &grouping);
        let head = s
            .lists()
            .iter()
            .fold(0u64, |acc, l| acc | l.entries[0].mask);
        let best = Product::all(9)
            .max_by(|a, b| rank_cmp(scorer.term_score(term, b), b, scorer.term_score(term, a), a))
            .unwrap();
        let mut s = s;
        assert_eq!(s.get_next().unwrap().bits, best);
        assert_eq!(head, best.bits());
    }
}

#[test]
fn threshold_is_monotone_and_bounds_every_unseen_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..25 {
        let m = rng.random_range(6..=10);
        let model = synthetic_model(200, m, 6, rng.random());
        let (z, k) = (rng.random_range(2..=5), rng.random_range(1..=4));
        let q = random_query(&mut rng, 6, z, k, true);
        let grouping = group_attributes_by_size(&model, 3, GroupingMethod::Contiguous).unwrap();
        let top = solve_ett_with(&model, &q, &grouping, true, &Budget::UNLIMITED).unwrap();
        let Some(Trace::Ett(trace)) = &top.trace else {
            panic!("trace requested")
        };
        let alphas: Vec<f64> = trace.rounds.iter().filter_map(|r| r.alpha).collect();
        assert!(alphas.windows(2).all(|w| w[0] >= w[1]));
        let delivered: HashSet<Product> = trace
            .rounds
            .iter()
            .flat_map(|r| r.releases.iter().map(|x| x.bits))
            .collect();
        let final_alpha = *alphas.last().unwrap();
        for (s, o) in brute_ranking(&model, &q) {
            if !delivered.contains(&o) {
                assert!(s <= final_alpha);
            }
        }
        let released: u64 = trace.subsystems.iter().map(|s| s.released).sum();
        assert_eq!(released, top.stats.candidates_examined);
    }
}

#[test]
fn worked_example_trace() {
    let model = worked_model();
    let grouping = group_attributes(&model, 2, GroupingMethod::Contiguous).unwrap();
    let top = solve_ett_with(
        &model,
        &Query::desirable([0, 1], 1),
        &grouping,
        true,
        &Budget::UNLIMITED,
    )
    .unwrap();
    let Some(Trace::Ett(trace)) = &top.trace else {
        panic!("trace requested")
    };
    let order: Vec<(String, String)> = trace
        .rounds
        .iter()
        .flat_map(|r| {
            r.releases
                .iter()
                .map(|x| (x.tag.clone(), x.bits.to_string()))
        })
        .collect();
    let want = [
        ("T1", "1010"),
        ("T2", "1111"),
        ("T1", "1011"),
        ("T2", "1110"),
        ("T1", "0010"),
        ("T2", "0111"),
    ];
    assert_eq!(order, want.map(|(a, b)| (a.to_string(), b.to_string())));
    assert_eq!(top.entries[0].bits.to_string(), "1110");
}
