//! Polynomial-time approximation.
//!
//! Selected tags are split into groups of at most `z'` tags. For each group a
//! trimming scheme walks the attributes one at a time: the current set of
//! products is doubled by setting the next attribute, then compressed by
//! clustering products whose per-tag scores all lie within a relative distance
//! `σ` of a representative. With `σ = ε / 2m` the best surviving product of a
//! group is within a factor `1 + ε` of that group's optimum, and the best
//! product across groups is within `z' / (z (1 + ε))` of the overall optimum.
//!
//! Points live in `z'`-dimensional score space. Neighbour search uses a hash
//! grid on `ln(score)` with cell width `ln(1 + σ)`; two points in the same cell
//! are always within `σ` of each other, which also yields the size bound
//! `(1 + log_{1+σ}(max/min))^{z'}` on every compressed set.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::{contiguous_blocks, greedy_partition};
use crate::logodds::{logistic, LogOdds};
use crate::nbc::Model;
use crate::product::Product;
use crate::query::{Query, Scorer};
use crate::topk::{rank_cmp, Algorithm, Budget, SolverStats, TopK, TopKBuffer, Trace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagGroupingMethod {
    /// Consecutive runs of the query's tags.
    #[default]
    Contiguous,
    /// Greedy partition of the |Pearson| tag-correlation graph.
    #[serde(alias = "corr")]
    Correlation,
}

impl fmt::Display for TagGroupingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagGroupingMethod::Contiguous => "contiguous",
            TagGroupingMethod::Correlation => "correlation",
        })
    }
}

impl FromStr for TagGroupingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "contiguous" => Ok(TagGroupingMethod::Contiguous),
            "corr" | "correlation" => Ok(TagGroupingMethod::Correlation),
            other => Err(Error::InvalidParameter(format!(
                "unknown tag grouping method {other:?}"
            ))),
        }
    }
}

/// Partition of the selected tags; members are model tag indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagGrouping {
    pub groups: Vec<Vec<usize>>,
    pub zprime: usize,
}

pub fn group_tags(
    model: &Model,
    query: &Query,
    zprime: usize,
    method: TagGroupingMethod,
) -> Result<TagGrouping> {
    query.validate(model)?;
    let z = query.z();
    if zprime == 0 || zprime > z {
        return Err(Error::InvalidParameter(format!(
            "tag group size must be within [1, {z}], got {zprime}"
        )));
    }
    let count = z.div_ceil(zprime);
    let positions = match method {
        TagGroupingMethod::Contiguous => {
            let mut start = 0;
            (0..count)
                .map(|_| {
                    let end = (start + zprime).min(z);
                    let block: Vec<usize> = (start..end).collect();
                    start = end;
                    block
                })
                .collect()
        }
        TagGroupingMethod::Correlation => {
            let tags: Vec<usize> = query.tags.iter().map(|s| s.tag).collect();
            let weights: Vec<Vec<f64>> = tags
                .iter()
                .map(|&a| tags.iter().map(|&b| model.tag_correlation[a][b]).collect())
                .collect();
            if count == 1 {
                contiguous_blocks(z, 1)
            } else {
                greedy_partition(&weights, count, zprime)
            }
        }
    };
    Ok(TagGrouping {
        groups: positions
            .into_iter()
            .map(|g| g.into_iter().map(|p| query.tags[p].tag).collect())
            .collect(),
        zprime,
    })
}

/// A product in `z'`-dimensional score space together with the products it stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorePoint {
    pub bits: Product,
    us: Vec<LogOdds>,
    /// Per-tag scores of the group (complemented for undesirable tags).
    pub coords: Vec<f64>,
    /// Weighted sum of `coords`.
    pub objective: f64,
    /// Up to `k − 1` clustered-away products, in the order they were absorbed.
    pub associates: Vec<Product>,
}

/// Relative closeness used for clustering: every coordinate of `q` within `σ·c_p[j]` of `p`'s.
pub fn within(p: &[f64], q: &[f64], sigma: f64) -> bool {
    p.iter().zip(q).all(|(&a, &b)| (a - b).abs() <= sigma * a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtasIteration {
    pub attribute: usize,
    /// `|S_i|` before compression.
    pub uncompressed: usize,
    /// `|S'_i|` after compression.
    pub compressed: usize,
    pub min_coord: f64,
    pub max_coord: f64,
}

impl PtasIteration {
    /// Analytic cap on `|S'_i|`: `(1 + log_{1+σ}(max/min))^{z'}`.
    pub fn size_bound(&self, sigma: f64, zprime: usize) -> f64 {
        let cells = 1.0 + (self.max_coord / self.min_coord).ln() / sigma.ln_1p();
        cells.powi(zprime as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PtasRun {
    /// Best representative, its associates, then further representatives; at most `k` products.
    pub products: Vec<Product>,
    pub iterations: Vec<PtasIteration>,
    /// Total points scored across all iterations.
    pub generated: u64,
}

fn cell_of(c: f64, width: f64) -> i64 {
    (c.max(f64::MIN_POSITIVE).ln() / width).floor() as i64
}

/// Compresses `points` in place, keeping one representative per σ-cluster.
fn compress(points: Vec<ScorePoint>, sigma: f64, k: usize) -> Vec<ScorePoint> {
    let mut points = points;
    points.sort_by(|a, b| rank_cmp(a.objective, &a.bits, b.objective, &b.bits));
    let n = points.len();
    let dims = points.first().map_or(0, |p| p.coords.len());
    let width = sigma.ln_1p();
    // a linear scan is cheaper than a grid whose neighbourhoods cover everything
    let use_grid = sigma < 1.0 && dims <= 4 && n > 64;
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    if use_grid {
        for (idx, p) in points.iter().enumerate() {
            let key: Vec<i64> = p.coords.iter().map(|&c| cell_of(c, width)).collect();
            grid.entry(key).or_default().push(idx);
        }
    }

    let mut deleted = vec![false; n];
    let mut absorbed: Vec<Vec<usize>> = vec![Vec::new(); n];
    for idx in 0..n {
        if deleted[idx] {
            continue;
        }
        let rep = &points[idx].coords;
        let mut victims = Vec::new();
        if use_grid {
            // one spare cell on each side absorbs rounding at cell boundaries
            let ranges: Vec<(i64, i64)> = rep
                .iter()
                .map(|&c| {
                    (
                        cell_of(c * (1.0 - sigma), width) - 1,
                        cell_of(c * (1.0 + sigma), width) + 1,
                    )
                })
                .collect();
            let mut key: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            'cells: loop {
                if let Some(members) = grid.get(&key) {
                    victims.extend(members.iter().copied().filter(|&q| {
                        q > idx && !deleted[q] && within(rep, &points[q].coords, sigma)
                    }));
                }
                let mut d = 0;
                loop {
                    if d == dims {
                        break 'cells;
                    }
                    key[d] += 1;
                    if key[d] <= ranges[d].1 {
                        break;
                    }
                    key[d] = ranges[d].0;
                    d += 1;
                }
            }
            victims.sort_unstable();
        } else {
            victims.extend(
                (idx + 1..n).filter(|&q| !deleted[q] && within(rep, &points[q].coords, sigma)),
            );
        }
        for &q in &victims {
            deleted[q] = true;
        }
        absorbed[idx] = victims;
    }

    let mut out = Vec::with_capacity(n - deleted.iter().filter(|&&d| d).count());
    let mut taken: Vec<Option<ScorePoint>> = points.into_iter().map(Some).collect();
    for idx in 0..n {
        if deleted[idx] {
            continue;
        }
        let mut rep = taken[idx].take().expect("representatives are taken once");
        for &q in &absorbed[idx] {
            if rep.associates.len() + 1 >= k {
                break;
            }
            let victim = taken[q]
                .take()
                .expect("victims belong to one representative");
            rep.associates.push(victim.bits);
            for a in victim.associates {
                if rep.associates.len() + 1 >= k {
                    break;
                }
                rep.associates.push(a);
            }
        }
        out.push(rep);
    }
    out
}

/// Runs the trimming scheme for one tag group.
///
/// `group` holds term indices of `scorer`. `observe` sees every compressed set `S'_i`.
pub fn ptas_observed(
    scorer: &Scorer<'_>,
    group: &[usize],
    sigma: f64,
    k: usize,
    budget: &Budget,
    observe: &mut dyn FnMut(usize, &[ScorePoint]),
) -> Result<PtasRun> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "compression factor must be positive, got {sigma}"
        )));
    }
    let m = scorer.m();
    let terms: Vec<_> = group.iter().map(|&t| &scorer.terms()[t]).collect();
    let point = |bits: Product, us: Vec<LogOdds>, associates: Vec<Product>| {
        let coords: Vec<f64> = us.iter().map(|&u| logistic(u)).collect();
        let objective = terms.iter().zip(&coords).map(|(t, c)| t.weight * c).sum();
        ScorePoint {
            bits,
            us,
            coords,
            objective,
            associates,
        }
    };

    let zero = Product::zeros(m);
    let mut current = vec![point(
        zero,
        terms.iter().map(|t| t.u(&zero)).collect(),
        Vec::new(),
    )];
    let mut iterations = Vec::with_capacity(m);
    let mut generated = 1u64;
    for attr in 0..m {
        budget.check()?;
        let mut next = Vec::with_capacity(current.len() * 2);
        for p in &current {
            let us: Vec<LogOdds> =
                p.us.iter()
                    .zip(&terms)
                    .map(|(&u, t)| u + t.flip_delta(attr, false))
                    .collect();
            let associates = p.associates.iter().map(|a| a.with(attr, true)).collect();
            next.push(point(p.bits.with(attr, true), us, associates));
        }
        generated += next.len() as u64;
        next.extend(current);
        let (min_coord, max_coord) = next
            .iter()
            .flat_map(|p| p.coords.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c), hi.max(c))
            });
        let uncompressed = next.len();
        current = compress(next, sigma, k);
        observe(attr, &current);
        iterations.push(PtasIteration {
            attribute: attr,
            uncompressed,
            compressed: current.len(),
            min_coord,
            max_coord,
        });
    }

    let mut products = Vec::with_capacity(k);
    for p in &current {
        if products.len() >= k {
            break;
        }
        products.push(p.bits);
        products.extend(p.associates.iter().take(k - products.len()));
    }
    Ok(PtasRun {
        products,
        iterations,
        generated,
    })
}

pub fn ptas(scorer: &Scorer<'_>, group: &[usize], sigma: f64, k: usize) -> Result<PtasRun> {
    ptas_observed(scorer, group, sigma, k, &Budget::UNLIMITED, &mut |_, _| {})
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtasGroupTrace {
    pub tags: Vec<String>,
    pub iterations: Vec<PtasIteration>,
    pub returned: Vec<Product>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaTrace {
    pub sigma: f64,
    pub groups: Vec<PtasGroupTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaConfig {
    /// Tags per group (`z'`), clipped to the number of selected tags.
    pub zprime: usize,
    pub epsilon: f64,
    /// Overrides the derived compression factor `ε / 2m`.
    pub sigma: Option<f64>,
    pub method: TagGroupingMethod,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self {
            zprime: 2,
            epsilon: 0.5,
            sigma: None,
            method: TagGroupingMethod::Contiguous,
        }
    }
}

impl PaConfig {
    pub fn sigma_for(&self, m: usize) -> Result<f64> {
        let sigma = match self.sigma {
            Some(s) => s,
            None => {
                if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "epsilon must be positive, got {}",
                        self.epsilon
                    )));
                }
                self.epsilon / (2.0 * m as f64)
            }
        };
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "compression factor must be positive, got {sigma}"
            )));
        }
        Ok(sigma)
    }

    /// Approximation parameter actually in force (`2mσ` when σ is overridden).
    pub fn effective_epsilon(&self, m: usize) -> Result<f64> {
        Ok(2.0 * m as f64 * self.sigma_for(m)?)
    }
}

pub fn solve_pa(model: &Model, query: &Query, config: &PaConfig) -> Result<TopK> {
    solve_pa_with(model, query, config, false, &Budget::UNLIMITED)
}

pub fn solve_pa_with(
    model: &Model,
    query: &Query,
    config: &PaConfig,
    trace: bool,
    budget: &Budget,
) -> Result<TopK> {
    let start = Instant::now();
    let scorer = Scorer::new(model, query)?;
    let sigma = config.sigma_for(model.m())?;
    let grouping = group_tags(model, query, config.zprime.min(query.z()), config.method)?;

    let mut candidates: Vec<Product> = Vec::new();
    let mut seen = HashSet::new();
    let mut group_traces = Vec::new();
    let mut generated = 0u64;
    let mut iterations = 0u64;
    for tags in &grouping.groups {
        let terms: Vec<usize> = tags
            .iter()
            .map(|&tag| {
                scorer
                    .terms()
                    .iter()
                    .position(|t| t.tag == tag)
                    .expect("grouped tags are selected")
            })
            .collect();
        let run = ptas_observed(&scorer, &terms, sigma, query.k, budget, &mut |_, _| {})?;
        generated += run.generated;
        iterations += run.iterations.len() as u64;
        candidates.extend(run.products.iter().filter(|&&p| seen.insert(p)));
        if trace {
            group_traces.push(PtasGroupTrace {
                tags: tags.iter().map(|&t| model.tag_names[t].clone()).collect(),
                iterations: run.iterations,
                returned: run.products,
            });
        }
    }

    let mut best = TopKBuffer::new(query.k);
    for &o in &candidates {
        best.offer(scorer.exact_score(&o), o);
    }
    let mut stats = SolverStats::new(Algorithm::Pa);
    stats.candidates_examined = generated;
    stats.iterations = iterations;
    stats.short_result = best.len() < query.k;
    stats.set("groups", grouping.groups.len() as u64);
    stats.set("final_candidates", candidates.len() as u64);
    let entries = best
        .into_entries()
        .into_iter()
        .map(|(_, o)| scorer.ranked(o))
        .collect();
    stats.wall_time = start.elapsed();
    Ok(TopK {
        entries,
        stats,
        trace: trace.then_some(Trace::Pa(PaTrace {
            sigma,
            groups: group_traces,
        })),
    })
}
