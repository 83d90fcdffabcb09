//! Exact two-tier top-k solver.
//!
//! Tier 1 turns each selected tag into a stream of complete products in
//! non-increasing tag score, without enumerating the space: attributes are split
//! into groups, every group gets a sorted list of its partial assignments, and
//! products are produced by rank-joining list prefixes. A buffered product is
//! released only once no product still unbuilt can beat it.
//!
//! Tier 2 is a threshold-algorithm merge over those streams. Each round pulls
//! one product from every tag stream, scores it exactly, and stops as soon as
//! the k-th best score reaches the threshold `α` (the objective evaluated at the
//! last released score of every stream).
//!
//! Scores are handled as oriented log-odds (see [`crate::query`]), so
//! undesirable tags run through the same machinery with ascending `R_j`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::{contiguous_blocks, greedy_partition};
use crate::logodds::{logistic, LogOdds};
use crate::nbc::Model;
use crate::product::Product;
use crate::query::{Query, Scorer, Term};
use crate::topk::{Algorithm, Budget, SolverStats, TopK, TopKBuffer, Trace};

/// Largest attribute group a partial list may cover (a list has `2^size` entries).
pub const MAX_GROUP_SIZE: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupingMethod {
    /// Consecutive attribute blocks of near-equal size.
    #[default]
    Contiguous,
    /// Greedy partition of the |Pearson| attribute-correlation graph.
    #[serde(alias = "corr")]
    Correlation,
}

impl fmt::Display for GroupingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupingMethod::Contiguous => "contiguous",
            GroupingMethod::Correlation => "correlation",
        })
    }
}

impl FromStr for GroupingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "contiguous" => Ok(GroupingMethod::Contiguous),
            "corr" | "correlation" => Ok(GroupingMethod::Correlation),
            other => Err(Error::InvalidParameter(format!(
                "unknown grouping method {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeGrouping {
    pub groups: Vec<Vec<usize>>,
    pub method: GroupingMethod,
}

impl AttributeGrouping {
    /// Checks that the groups partition `0..m` and respect [`MAX_GROUP_SIZE`].
    pub fn validate(&self, m: usize) -> Result<()> {
        let mut seen = vec![false; m];
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::InvalidParameter("attribute group is empty".into()));
            }
            if g.len() > MAX_GROUP_SIZE {
                return Err(Error::CapExceeded {
                    what: "attribute group size",
                    cap: MAX_GROUP_SIZE,
                    requested: g.len(),
                });
            }
            for &i in g {
                if i >= m || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidParameter(format!(
                        "attribute {i} is out of range or in two groups"
                    )));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "attribute {i} is in no group"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Number of groups needed for groups of at most `group_size` attributes.
pub fn group_count(m: usize, group_size: usize) -> usize {
    m.div_ceil(group_size.max(1))
}

/// Splits the model's attributes into `l` groups.
pub fn group_attributes(
    model: &Model,
    l: usize,
    method: GroupingMethod,
) -> Result<AttributeGrouping> {
    let m = model.m();
    if l == 0 || l > m {
        return Err(Error::InvalidParameter(format!(
            "group count must be within [1, {m}], got {l}"
        )));
    }
    let groups = match method {
        GroupingMethod::Contiguous => contiguous_blocks(m, l),
        GroupingMethod::Correlation => {
            greedy_partition(&model.attribute_correlation, l, m.div_ceil(l))
        }
    };
    let grouping = AttributeGrouping { groups, method };
    grouping.validate(m)?;
    Ok(grouping)
}

/// Groups of at most `group_size` attributes (`l = ⌈m / group_size⌉`).
pub fn group_attributes_by_size(
    model: &Model,
    group_size: usize,
    method: GroupingMethod,
) -> Result<AttributeGrouping> {
    if group_size == 0 {
        return Err(Error::InvalidParameter(
            "attribute group size must be at least 1".into(),
        ));
    }
    group_attributes(model, group_count(model.m(), group_size), method)
}

/// One partial assignment: the product bits it fixes and its oriented partial log-odds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartialEntry {
    pub mask: u64,
    pub u: LogOdds,
}

/// All `2^|group|` assignments of one group, best first.
///
/// Each list carries an exact share of the tag's prior term, so the entries
/// picked from every list sum to the full product's log-odds.
#[derive(Clone, Debug)]
pub struct PartialList {
    pub group: usize,
    pub entries: Vec<PartialEntry>,
}

impl PartialList {
    fn build(term: &Term, m: usize, group: usize, attrs: &[usize], prior_share: LogOdds) -> Self {
        let size = attrs.len();
        let mut entries: Vec<PartialEntry> = (0u64..1 << size)
            .map(|a| {
                let mut mask = 0u64;
                let mut u = prior_share;
                for (j, &attr) in attrs.iter().enumerate() {
                    let v = (a >> (size - 1 - j)) & 1 == 1;
                    if v {
                        mask |= Product::attr_mask(m, attr);
                    }
                    u += term.delta[attr][v as usize];
                }
                PartialEntry { mask, u }
            })
            .collect();
        entries.sort_by(|x, y| y.u.cmp(&x.u).then(x.mask.cmp(&y.mask)));
        Self { group, entries }
    }
}

/// A product released by a tag stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Emission {
    pub bits: Product,
    /// Oriented log-odds for the stream's tag.
    pub u: LogOdds,
    /// `logistic(u)`: the tag probability, or its complement for an undesirable tag.
    pub score: f64,
    /// Upper bound on any product the stream has not built yet, at the moment of release.
    pub mpfs: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Buffered {
    score: f64,
    u: LogOdds,
    bits: Product,
}

impl Eq for Buffered {}

impl Ord for Buffered {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: higher score first, then smaller bits
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.bits.cmp(&self.bits))
    }
}

impl PartialOrd for Buffered {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sorted-access simulation for one tag.
#[derive(Clone, Debug)]
pub struct TagSubsystem {
    term: usize,
    m: usize,
    lists: Vec<PartialList>,
    /// `seen[g]`: length of the prefix of list `g` already joined.
    seen: Vec<usize>,
    next_list: usize,
    buffer: BinaryHeap<Buffered>,
    joined: u64,
    released: u64,
    buffer_peak: usize,
}

impl TagSubsystem {
    pub fn new(scorer: &Scorer<'_>, term: usize, grouping: &AttributeGrouping) -> Self {
        let m = scorer.m();
        let t = &scorer.terms()[term];
        let shares = t.base.split(grouping.len());
        let lists: Vec<PartialList> = grouping
            .groups
            .iter()
            .zip(shares)
            .enumerate()
            .map(|(g, (attrs, share))| PartialList::build(t, m, g, attrs, share))
            .collect();
        let mut sub = Self {
            term,
            m,
            seen: vec![1; lists.len()],
            lists,
            next_list: 0,
            buffer: BinaryHeap::new(),
            joined: 0,
            released: 0,
            buffer_peak: 0,
        };
        let (mask, u) = sub.lists.iter().fold((0u64, LogOdds::ZERO), |(mk, u), l| {
            (mk | l.entries[0].mask, u + l.entries[0].u)
        });
        sub.push(mask, u);
        sub
    }

    /// Term index (canonical order) this stream serves.
    pub fn term(&self) -> usize {
        self.term
    }

    pub fn lists(&self) -> &[PartialList] {
        &self.lists
    }

    /// Complete products built by joins so far.
    pub fn joined(&self) -> u64 {
        self.joined
    }

    pub fn released(&self) -> u64 {
        self.released
    }

    /// Largest number of products buffered at once.
    pub fn buffer_peak(&self) -> usize {
        self.buffer_peak
    }

    fn push(&mut self, mask: u64, u: LogOdds) {
        self.buffer.push(Buffered {
            score: logistic(u),
            u,
            bits: Product::from_bits(mask, self.m),
        });
        self.joined += 1;
        self.buffer_peak = self.buffer_peak.max(self.buffer.len());
    }

    /// Maximum possible oriented log-odds of any product not yet built, `None` once all are built.
    ///
    /// An unbuilt product uses an entry beyond the joined prefix of at least one
    /// list `g`; it is therefore bounded by the best unjoined entry of `g` plus the
    /// top entries of every other list.
    pub fn unseen_bound(&self) -> Option<LogOdds> {
        let tops: LogOdds = self.lists.iter().map(|l| l.entries[0].u).sum();
        self.lists
            .iter()
            .zip(&self.seen)
            .filter(|(l, &s)| s < l.entries.len())
            .map(|(l, &s)| tops - l.entries[0].u + l.entries[s].u)
            .max()
    }

    /// Joins the next entry of the next non-exhausted list (round robin) with the
    /// joined prefixes of all other lists.
    fn advance(&mut self) {
        let l = self.lists.len();
        let g = (0..l)
            .map(|d| (self.next_list + d) % l)
            .find(|&g| self.seen[g] < self.lists[g].entries.len())
            .expect("advance called with every list exhausted");
        self.next_list = (g + 1) % l;
        let entry = self.lists[g].entries[self.seen[g]];
        let others: Vec<usize> = (0..l).filter(|&h| h != g).collect();
        let mut idx = vec![0usize; others.len()];
        loop {
            let mut mask = entry.mask;
            let mut u = entry.u;
            for (&h, &i) in others.iter().zip(&idx) {
                let e = self.lists[h].entries[i];
                mask |= e.mask;
                u += e.u;
            }
            self.push(mask, u);
            // mixed-radix increment over the joined prefixes
            let mut d = 0;
            loop {
                if d == others.len() {
                    self.seen[g] += 1;
                    return;
                }
                idx[d] += 1;
                if idx[d] < self.seen[others[d]] {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// Next product in non-increasing tag score, ties broken by smaller bits; `None` after all `2^m`.
    pub fn get_next(&mut self) -> Option<Emission> {
        loop {
            let bound = self.unseen_bound();
            match self.buffer.peek() {
                Some(top) if bound.is_none_or(|b| top.score > logistic(b)) => {
                    let top = self.buffer.pop().expect("peeked");
                    self.released += 1;
                    return Some(Emission {
                        bits: top.bits,
                        u: top.u,
                        score: top.score,
                        mpfs: bound.map(logistic),
                    });
                }
                None if bound.is_none() => return None,
                _ => self.advance(),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EttRelease {
    pub tag: String,
    pub bits: Product,
    pub tag_score: f64,
    pub mpfs: Option<f64>,
    /// False when another stream had already delivered this product.
    pub new: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EttRound {
    pub round: u64,
    pub releases: Vec<EttRelease>,
    pub alpha: Option<f64>,
    pub min_k: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EttSubsystemSummary {
    pub tag: String,
    pub joined: u64,
    pub released: u64,
    pub buffer_peak: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EttTrace {
    pub grouping: AttributeGrouping,
    pub rounds: Vec<EttRound>,
    pub subsystems: Vec<EttSubsystemSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EttConfig {
    /// Attributes per group (`m'`); the group count is `⌈m / m'⌉`.
    pub group_size: usize,
    /// Explicit group count; overrides `group_size` when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
    pub method: GroupingMethod,
}

impl Default for EttConfig {
    fn default() -> Self {
        Self {
            group_size: 4,
            groups: None,
            method: GroupingMethod::Contiguous,
        }
    }
}

impl EttConfig {
    /// Grouping for `model`; a group size above `m` is clamped to a single group.
    pub fn grouping(&self, model: &Model) -> Result<AttributeGrouping> {
        match self.groups {
            Some(l) => group_attributes(model, l, self.method),
            None => group_attributes_by_size(model, self.group_size.min(model.m()), self.method),
        }
    }
}

pub fn solve_ett(model: &Model, query: &Query, grouping: &AttributeGrouping) -> Result<TopK> {
    solve_ett_with(model, query, grouping, false, &Budget::UNLIMITED)
}

pub fn solve_ett_with(
    model: &Model,
    query: &Query,
    grouping: &AttributeGrouping,
    trace: bool,
    budget: &Budget,
) -> Result<TopK> {
    let start = Instant::now();
    let scorer = Scorer::new(model, query)?;
    grouping.validate(model.m())?;
    let space = 1u128 << model.m();
    let k = (query.k as u128).min(space) as usize;

    let mut streams: Vec<TagSubsystem> = (0..query.z())
        .map(|q| TagSubsystem::new(&scorer, scorer.term_of_query(q), grouping))
        .collect();
    let names: Vec<&str> = streams
        .iter()
        .map(|s| model.tag_names[scorer.terms()[s.term()].tag].as_str())
        .collect();

    let mut best = TopKBuffer::new(k);
    let mut delivered: HashSet<Product> = HashSet::new();
    let mut last_u = vec![LogOdds::ZERO; query.z()];
    let mut rounds = Vec::new();
    let mut retrievals = 0u64;
    let mut round = 0u64;

    'rounds: loop {
        budget.check()?;
        round += 1;
        let mut releases = Vec::new();
        for (stream, name) in streams.iter_mut().zip(&names) {
            let Some(e) = stream.get_next() else {
                // this stream has released the whole space, so every product was scored
                if trace {
                    rounds.push(EttRound {
                        round,
                        releases,
                        alpha: None,
                        min_k: best.min_k(),
                    });
                }
                break 'rounds;
            };
            retrievals += 1;
            last_u[stream.term()] = e.u;
            let new = delivered.insert(e.bits);
            if new {
                best.offer(scorer.exact_score(&e.bits), e.bits);
            }
            if trace {
                releases.push(EttRelease {
                    tag: name.to_string(),
                    bits: e.bits,
                    tag_score: e.score,
                    mpfs: e.mpfs,
                    new,
                });
            }
        }
        let alpha = scorer.combine(&last_u);
        let min_k = best.min_k();
        if trace {
            rounds.push(EttRound {
                round,
                releases,
                alpha: Some(alpha),
                min_k,
            });
        }
        if min_k.is_some_and(|mk| mk >= alpha) {
            break;
        }
    }

    let mut stats = SolverStats::new(Algorithm::Ett);
    stats.candidates_examined = retrievals;
    stats.iterations = round;
    stats.short_result = best.len() < query.k;
    stats.set("distinct_candidates", delivered.len() as u64);
    stats.set("groups", grouping.len() as u64);
    stats.set(
        "tier1_joined",
        streams.iter().map(TagSubsystem::joined).sum(),
    );
    stats.set(
        "buffer_peak",
        streams
            .iter()
            .map(TagSubsystem::buffer_peak)
            .max()
            .unwrap_or(0) as u64,
    );
    let trace = trace.then(|| {
        Trace::Ett(EttTrace {
            grouping: grouping.clone(),
            rounds,
            subsystems: streams
                .iter()
                .zip(&names)
                .map(|(s, n)| EttSubsystemSummary {
                    tag: n.to_string(),
                    joined: s.joined(),
                    released: s.released(),
                    buffer_peak: s.buffer_peak(),
                })
                .collect(),
        })
    });
    let entries = best
        .into_entries()
        .into_iter()
        .map(|(_, o)| scorer.ranked(o))
        .collect();
    stats.wall_time = start.elapsed();
    Ok(TopK {
        entries,
        stats,
        trace,
    })
}
