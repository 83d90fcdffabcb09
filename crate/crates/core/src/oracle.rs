//! Exhaustive solver: scores all `2^m` products.
//!
//! The space is cut into chunks on the high attribute bits; inside a chunk the
//! low bits are walked in Gray-code order so each step updates every tag's
//! log-odds by a single fixed-point delta. Chunks run in parallel and their
//! results are merged under the global rank order, so the output is identical
//! to a sequential scan.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logodds::LogOdds;
use crate::nbc::Model;
use crate::product::Product;
use crate::query::{check_len, Query, Scorer};
use crate::topk::{rank_cmp, Algorithm, Budget, SolverStats, TopK, TopKBuffer};

/// Largest attribute count the exhaustive solver accepts by default.
pub const DEFAULT_NAIVE_CAP: usize = 24;

/// Above this `k` the scan keeps every product and sorts once instead of maintaining a bounded buffer.
const SORT_ALL_THRESHOLD: usize = 4096;

#[derive(Clone, Copy, Debug)]
pub struct NaiveConfig {
    pub cap: usize,
}

impl Default for NaiveConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_NAIVE_CAP,
        }
    }
}

fn check_cap(m: usize, cap: usize) -> Result<()> {
    if m > cap.min(Product::MAX_LEN - 1) {
        return Err(Error::CapExceeded {
            what: "exhaustive enumeration attribute count",
            cap,
            requested: m,
        });
    }
    Ok(())
}

/// Visits every product of `scorer`'s space with its exact score.
///
/// `visit` receives a per-chunk accumulator created by `init`; the accumulators
/// are returned in chunk order (ascending high bits).
fn scan<T, I, V>(scorer: &Scorer<'_>, budget: &Budget, init: I, visit: V) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync,
    V: Fn(&mut T, Product, f64) + Sync,
{
    let m = scorer.m();
    let high = m.min(10);
    let low = m - high;
    let terms = scorer.terms();
    (0u64..1 << high)
        .into_par_iter()
        .map(|h| {
            budget.check()?;
            let mut acc = init();
            let mut o = Product::from_bits(h << low, m);
            let mut us: Vec<LogOdds> = terms.iter().map(|t| t.u(&o)).collect();
            visit(&mut acc, o, scorer.combine(&us));
            for step in 1u64..1 << low {
                let attr = m - 1 - step.trailing_zeros() as usize;
                let current = o.get(attr);
                for (u, t) in us.iter_mut().zip(terms) {
                    *u += t.flip_delta(attr, current);
                }
                o = o.flipped(attr);
                visit(&mut acc, o, scorer.combine(&us));
            }
            Ok(acc)
        })
        .collect()
}

pub fn solve_naive(model: &Model, query: &Query) -> Result<TopK> {
    solve_naive_with(model, query, &NaiveConfig::default(), &Budget::UNLIMITED)
}

pub fn solve_naive_with(
    model: &Model,
    query: &Query,
    config: &NaiveConfig,
    budget: &Budget,
) -> Result<TopK> {
    let start = Instant::now();
    let scorer = Scorer::new(model, query)?;
    let m = model.m();
    check_cap(m, config.cap)?;
    let total = 1u64 << m;
    let k = query.k.min(total as usize);

    let mut best: Vec<(f64, Product)> = if k > SORT_ALL_THRESHOLD {
        let chunks = scan(&scorer, budget, Vec::new, |acc: &mut Vec<_>, o, s| {
            acc.push((s, o))
        })?;
        let mut all: Vec<(f64, Product)> = chunks.into_iter().flatten().collect();
        all.par_sort_unstable_by(|a, b| rank_cmp(a.0, &a.1, b.0, &b.1));
        all.truncate(k);
        all
    } else {
        let chunks = scan(
            &scorer,
            budget,
            || TopKBuffer::new(k),
            |acc: &mut TopKBuffer, o, s| {
                acc.offer(s, o);
            },
        )?;
        let mut merged = TopKBuffer::new(k);
        for (s, o) in chunks.into_iter().flat_map(TopKBuffer::into_entries) {
            merged.offer(s, o);
        }
        merged.into_entries()
    };
    best.truncate(k);

    let mut stats = SolverStats::new(Algorithm::Naive);
    stats.candidates_examined = total;
    stats.iterations = 1;
    stats.short_result = k < query.k;
    let entries = best.into_iter().map(|(_, o)| scorer.ranked(o)).collect();
    stats.wall_time = start.elapsed();
    Ok(TopK {
        entries,
        stats,
        trace: None,
    })
}

/// 1-based position of `o` in the full ranking of all `2^m` products.
pub fn rank_of(model: &Model, query: &Query, o: &Product) -> Result<u64> {
    rank_of_with(model, query, o, &NaiveConfig::default(), &Budget::UNLIMITED)
}

pub fn rank_of_with(
    model: &Model,
    query: &Query,
    o: &Product,
    config: &NaiveConfig,
    budget: &Budget,
) -> Result<u64> {
    check_len(model, o)?;
    check_cap(model.m(), config.cap)?;
    let scorer = Scorer::new(model, query)?;
    let target = *o;
    let target_score = scorer.exact_score(o);
    let ahead = scan(
        &scorer,
        budget,
        || 0u64,
        |acc, p, s| {
            if rank_cmp(s, &p, target_score, &target) == Ordering::Less {
                *acc += 1;
            }
        },
    )?;
    Ok(ahead.into_iter().sum::<u64>() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::worked_example;
    use crate::nbc::{train, SmoothingSpec};

    fn model() -> Model {
        train(&worked_example(), &SmoothingSpec::default()).unwrap()
    }

    #[test]
    fn worked_example_top_one() {
        let m = model();
        let top = solve_naive(&m, &Query::desirable([0, 1], 1)).unwrap();
        assert_eq!(top.entries[0].bits.to_string(), "1110");
        assert_eq!(top.stats.candidates_examined, 16);
    }

    #[test]
    fn full_ranking_matches_sorted_direct_scores() {
        let m = model();
        let q = Query::desirable([0, 1], 16);
        let top = solve_naive(&m, &q).unwrap();
        let scorer = Scorer::new(&m, &q).unwrap();
        let mut all: Vec<(f64, Product)> = Product::all(4)
            .map(|o| (scorer.exact_score(&o), o))
            .collect();
        all.sort_by(|a, b| rank_cmp(a.0, &a.1, b.0, &b.1));
        let got: Vec<(f64, Product)> = top.entries.iter().map(|e| (e.score, e.bits)).collect();
        assert_eq!(got, all);
    }

    #[test]
    fn k_beyond_space_is_short() {
        let m = model();
        let top = solve_naive(&m, &Query::desirable([0], 40)).unwrap();
        assert_eq!(top.entries.len(), 16);
        assert!(top.stats.short_result);
    }

    #[test]
    fn rank_of_extremes() {
        let m = model();
        let q = Query::desirable([0, 1], 16);
        let all = solve_naive(&m, &q).unwrap();
        assert_eq!(rank_of(&m, &q, &all.entries[0].bits).unwrap(), 1);
        assert_eq!(rank_of(&m, &q, &all.entries[15].bits).unwrap(), 16);
        assert_eq!(rank_of(&m, &q, &all.entries[6].bits).unwrap(), 7);
    }

    #[test]
    fn cap_is_enforced() {
        let m = model();
        let cfg = NaiveConfig { cap: 3 };
        let err =
            solve_naive_with(&m, &Query::desirable([0], 1), &cfg, &Budget::UNLIMITED).unwrap_err();
        assert!(err.to_string().contains("capped at 3"));
    }
}
