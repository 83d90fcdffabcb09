//! Hill climbing with random restarts.
//!
//! A climb repeatedly moves to the best single-bit-flip neighbour while that
//! neighbour scores strictly higher. Flipping attribute `i` shifts every tag's
//! log-odds by one precomputed fixed-point delta, so a neighbour costs `O(z)`
//! and its score is bit-for-bit the score a full rescan would produce.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logodds::{logistic, LogOdds};
use crate::nbc::Model;
use crate::product::Product;
use crate::query::{check_len, Query, Scorer};
use crate::topk::{Algorithm, Budget, SolverStats, TopK, TopKBuffer, Trace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HcConfig {
    pub restarts: usize,
    /// Moves allowed per climb; `None` means `10·m`.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl Default for HcConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_steps: None,
            seed: 0,
        }
    }
}

impl HcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "hill climbing needs at least one restart".into(),
            ));
        }
        Ok(())
    }

    pub fn steps_for(&self, m: usize) -> usize {
        self.max_steps.unwrap_or(10 * m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Climb {
    pub start: Product,
    pub end: Product,
    pub score: f64,
    pub moves: usize,
    /// Neighbours scored during the climb.
    pub evaluations: u64,
    /// False when the step cap stopped the climb while an improving move remained.
    pub converged: bool,
    /// Score after the start and after every move.
    pub scores: Vec<f64>,
}

/// Climbs from `start` using a prepared scorer.
pub fn climb_with(scorer: &Scorer<'_>, start: Product, max_steps: usize) -> Climb {
    let m = scorer.m();
    let terms = scorer.terms();
    let mut current = start;
    let mut us: Vec<LogOdds> = scorer.us(&start);
    let mut score = scorer.combine(&us);
    let mut scores = vec![score];
    let mut moves = 0;
    let mut evaluations = 0u64;
    let converged = loop {
        let mut best: Option<(f64, usize, Product)> = None;
        for attr in 0..m {
            let value = current.get(attr);
            let mut s = 0.0;
            for (t, &u) in terms.iter().zip(&us) {
                s += t.weight * logistic(u + t.flip_delta(attr, value));
            }
            evaluations += 1;
            let neighbour = current.flipped(attr);
            let better = match best {
                None => true,
                Some((bs, _, bp)) => s > bs || (s == bs && neighbour < bp),
            };
            if better {
                best = Some((s, attr, neighbour));
            }
        }
        match best {
            Some((s, attr, neighbour)) if s > score => {
                if moves == max_steps {
                    break false;
                }
                let value = current.get(attr);
                for (u, t) in us.iter_mut().zip(terms) {
                    *u += t.flip_delta(attr, value);
                }
                current = neighbour;
                score = s;
                scores.push(s);
                moves += 1;
            }
            _ => break true,
        }
    };
    Climb {
        start,
        end: current,
        score,
        moves,
        evaluations,
        converged,
        scores,
    }
}

pub fn climb(model: &Model, query: &Query, start: &Product, max_steps: usize) -> Result<Climb> {
    check_len(model, start)?;
    Ok(climb_with(&Scorer::new(model, query)?, *start, max_steps))
}

/// Uniformly random start products drawn from a seeded stream.
pub fn random_starts(m: usize, count: usize, seed: u64) -> Vec<Product> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    (0..count)
        .map(|_| Product::from_bits(rng.random::<u64>() & mask, m))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcTrace {
    pub climbs: Vec<Climb>,
}

pub fn solve_hc(model: &Model, query: &Query, config: &HcConfig) -> Result<TopK> {
    solve_hc_with(model, query, config, false, &Budget::UNLIMITED)
}

pub fn solve_hc_with(
    model: &Model,
    query: &Query,
    config: &HcConfig,
    trace: bool,
    budget: &Budget,
) -> Result<TopK> {
    let start = Instant::now();
    config.validate()?;
    let scorer = Scorer::new(model, query)?;
    let m = model.m();
    let max_steps = config.steps_for(m);
    let starts = random_starts(m, config.restarts, config.seed);
    let climbs: Vec<Climb> = starts
        .par_iter()
        .map(|&s| {
            budget.check()?;
            Ok(climb_with(&scorer, s, max_steps))
        })
        .collect::<Result<_>>()?;

    let mut best = TopKBuffer::new(query.k);
    let mut optima = HashSet::new();
    for c in &climbs {
        if optima.insert(c.end) {
            best.offer(c.score, c.end);
        }
    }
    let mut stats = SolverStats::new(Algorithm::Hc);
    stats.candidates_examined = climbs.iter().map(|c| c.evaluations + 1).sum();
    stats.iterations = climbs.len() as u64;
    stats.short_result = best.len() < query.k;
    stats.set("distinct_optima", optima.len() as u64);
    stats.set("moves", climbs.iter().map(|c| c.moves as u64).sum());
    stats.set(
        "non_converged",
        climbs.iter().filter(|c| !c.converged).count() as u64,
    );
    let entries = best
        .into_entries()
        .into_iter()
        .map(|(_, o)| scorer.ranked(o))
        .collect();
    stats.wall_time = start.elapsed();
    Ok(TopK {
        entries,
        stats,
        trace: trace.then_some(Trace::Hc(HcTrace { climbs })),
    })
}
