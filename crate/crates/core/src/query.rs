//! Designer queries and the exact objective.
//!
//! A query selects tags with non-negative weights and a polarity. The objective
//! of a product `o` is `Σ_j w_j · s_j(o)` where `s_j = Pr(T_j | o)` for desirable
//! tags and `1 − Pr(T_j | o)` for undesirable ones.
//!
//! Internally every selected tag is carried as an *oriented log-odds* `u_j(o)`
//! with `s_j = logistic(u_j)`: `u_j = −ln R_j` when desirable and `+ln R_j` when
//! undesirable. Larger `u_j` is always better, which lets every solver treat both
//! polarities identically.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logodds::{logistic, LogOdds};
use crate::nbc::Model;
use crate::product::Product;
use crate::topk::{RankedProduct, TagContribution};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Desirable,
    Undesirable,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Desirable => "desirable",
            Polarity::Undesirable => "undesirable",
        })
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desirable" | "+" => Ok(Polarity::Desirable),
            "undesirable" | "-" => Ok(Polarity::Undesirable),
            other => Err(Error::InvalidQuery(format!("unknown polarity {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagSelection {
    pub tag: usize,
    pub weight: f64,
    pub polarity: Polarity,
}

impl TagSelection {
    pub fn desirable(tag: usize) -> Self {
        Self {
            tag,
            weight: 1.0,
            polarity: Polarity::Desirable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub tags: Vec<TagSelection>,
    pub k: usize,
}

impl Query {
    /// Unit-weight desirable selection of the given tag indices.
    pub fn desirable(tags: impl IntoIterator<Item = usize>, k: usize) -> Self {
        Self {
            tags: tags.into_iter().map(TagSelection::desirable).collect(),
            k,
        }
    }

    /// Parses a comma-separated selection such as `T1,T2=0.5,!T3`.
    ///
    /// A leading `!` marks an undesirable tag; `=w` sets its weight (default 1).
    pub fn parse(model: &Model, text: &str, k: usize) -> Result<Self> {
        let mut tags = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (item, polarity) = match item.strip_prefix('!') {
                Some(rest) => (rest.trim(), Polarity::Undesirable),
                None => (item, Polarity::Desirable),
            };
            let (name, weight) = match item.split_once('=') {
                Some((name, w)) => {
                    let w: f64 = w.trim().parse().map_err(|_| {
                        Error::InvalidQuery(format!(
                            "weight {w:?} for tag {name:?} is not a number"
                        ))
                    })?;
                    (name.trim(), w)
                }
                None => (item, 1.0),
            };
            let tag = model
                .tag_index(name)
                .ok_or_else(|| Error::InvalidQuery(format!("unknown tag {name:?}")))?;
            tags.push(TagSelection {
                tag,
                weight,
                polarity,
            });
        }
        let q = Query { tags, k };
        q.validate(model)?;
        Ok(q)
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidQuery("k must be at least 1".into()));
        }
        if self.tags.is_empty() {
            return Err(Error::InvalidQuery("select at least one tag".into()));
        }
        let mut seen = HashSet::new();
        for sel in &self.tags {
            if sel.tag >= model.r() {
                return Err(Error::InvalidQuery(format!(
                    "tag index {} out of range (model has {} tags)",
                    sel.tag,
                    model.r()
                )));
            }
            if !seen.insert(sel.tag) {
                return Err(Error::InvalidQuery(format!(
                    "tag {} selected twice",
                    model.tag_names[sel.tag]
                )));
            }
            if !(sel.weight.is_finite() && sel.weight >= 0.0) {
                return Err(Error::InvalidQuery(format!(
                    "weight of tag {} must be finite and non-negative, got {}",
                    model.tag_names[sel.tag], sel.weight
                )));
            }
        }
        Ok(())
    }

    /// Number of selected tags.
    pub fn z(&self) -> usize {
        self.tags.len()
    }
}

/// One selected tag, precomputed for oriented scoring.
#[derive(Clone, Debug)]
pub struct Term {
    pub tag: usize,
    pub weight: f64,
    pub polarity: Polarity,
    /// Oriented prior term.
    pub base: LogOdds,
    /// `delta[i][v]`: oriented contribution of attribute `i` taking value `v`.
    pub delta: Vec<[LogOdds; 2]>,
}

impl Term {
    /// Oriented log-odds of a full product.
    #[inline]
    pub fn u(&self, o: &Product) -> LogOdds {
        let mut u = self.base;
        let bits = o.bits();
        let m = self.delta.len();
        for (i, d) in self.delta.iter().enumerate() {
            u += d[((bits >> (m - 1 - i)) & 1) as usize];
        }
        u
    }

    /// Change in `u` when attribute `attr` flips away from `current`.
    #[inline]
    pub fn flip_delta(&self, attr: usize, current: bool) -> LogOdds {
        let d = self.delta[attr];
        d[!current as usize] - d[current as usize]
    }
}

/// Precomputed scorer for one (model, query) pair.
///
/// Terms are kept in ascending tag-index order regardless of query order, so
/// every sum is accumulated in the same order and permuting the query does not
/// change a single bit of any score.
#[derive(Clone, Debug)]
pub struct Scorer<'a> {
    model: &'a Model,
    terms: Vec<Term>,
    /// `position[q]` is the term index of the `q`-th query selection.
    query_position: Vec<usize>,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a Model, query: &Query) -> Result<Self> {
        query.validate(model)?;
        if model.m() > Product::MAX_LEN {
            return Err(Error::CapExceeded {
                what: "attribute count",
                cap: Product::MAX_LEN,
                requested: model.m(),
            });
        }
        let mut order: Vec<usize> = (0..query.tags.len()).collect();
        order.sort_by_key(|&q| query.tags[q].tag);
        let mut query_position = vec![0; order.len()];
        for (t, &q) in order.iter().enumerate() {
            query_position[q] = t;
        }
        let terms = order
            .iter()
            .map(|&q| {
                let sel = query.tags[q];
                let tm = model.tag(sel.tag);
                let sign = |x: LogOdds| match sel.polarity {
                    Polarity::Desirable => -x,
                    Polarity::Undesirable => x,
                };
                Term {
                    tag: sel.tag,
                    weight: sel.weight,
                    polarity: sel.polarity,
                    base: sign(tm.log_prior_ratio()),
                    delta: (0..model.m())
                        .map(|i| [sign(tm.log_ratio(i, false)), sign(tm.log_ratio(i, true))])
                        .collect(),
                }
            })
            .collect();
        Ok(Self {
            model,
            terms,
            query_position,
        })
    }

    pub fn model(&self) -> &'a Model {
        self.model
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    /// Selected tags in canonical (tag-index) order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Term index of the `q`-th selection in query order.
    pub fn term_of_query(&self, q: usize) -> usize {
        self.query_position[q]
    }

    /// Oriented log-odds of every term.
    pub fn us(&self, o: &Product) -> Vec<LogOdds> {
        self.terms.iter().map(|t| t.u(o)).collect()
    }

    /// `Σ w_t · logistic(u_t)`, accumulated in term order.
    #[inline]
    pub fn combine(&self, us: &[LogOdds]) -> f64 {
        let mut total = 0.0;
        for (t, &u) in self.terms.iter().zip(us) {
            total += t.weight * logistic(u);
        }
        total
    }

    pub fn exact_score(&self, o: &Product) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            total += t.weight * logistic(t.u(o));
        }
        total
    }

    /// Weighted contribution of a single term.
    pub fn term_score(&self, t: usize, o: &Product) -> f64 {
        self.terms[t].weight * logistic(self.terms[t].u(o))
    }

    pub fn ranked(&self, o: Product) -> RankedProduct {
        let mut score = 0.0;
        let per_tag = self
            .terms
            .iter()
            .map(|t| {
                let s = logistic(t.u(&o));
                let contribution = t.weight * s;
                score += contribution;
                TagContribution {
                    tag: self.model.tag_names[t.tag].clone(),
                    polarity: t.polarity,
                    weight: t.weight,
                    probability: self.model.tag_score(t.tag, &o),
                    contribution,
                }
            })
            .collect();
        RankedProduct {
            bits: o,
            score,
            per_tag,
        }
    }

    /// `(0, Σ w)`.
    pub fn bounds(&self) -> (f64, f64) {
        (0.0, self.terms.iter().map(|t| t.weight).sum())
    }
}

/// Expected number of desirable tags (minus undesirable ones, shifted to be non-negative).
pub fn exact_score(model: &Model, query: &Query, o: &Product) -> Result<f64> {
    check_len(model, o)?;
    Ok(Scorer::new(model, query)?.exact_score(o))
}

pub fn score_bounds(model: &Model, query: &Query) -> Result<(f64, f64)> {
    Ok(Scorer::new(model, query)?.bounds())
}

pub(crate) fn check_len(model: &Model, o: &Product) -> Result<()> {
    if o.len() != model.m() {
        return Err(Error::InvalidQuery(format!(
            "product has {} attributes, model has {}",
            o.len(),
            model.m()
        )));
    }
    Ok(())
}
