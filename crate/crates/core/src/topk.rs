//! Result containers shared by every solver.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ett::EttTrace;
use crate::hc::HcTrace;
use crate::pa::PaTrace;
use crate::product::Product;
use crate::query::Polarity;

/// Global result order: higher score first, then the lexicographically smaller bit vector.
/// `Ordering::Less` means `a` ranks ahead of `b`.
#[inline]
pub fn rank_cmp(a_score: f64, a: &Product, b_score: f64, b: &Product) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a.cmp(b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagContribution {
    pub tag: String,
    pub polarity: Polarity,
    pub weight: f64,
    /// `Pr(T_j | o)` regardless of polarity.
    pub probability: f64,
    /// `w_j · s_j` as it enters the objective.
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedProduct {
    pub bits: Product,
    pub score: f64,
    /// One entry per selected tag, in tag-index order.
    pub per_tag: Vec<TagContribution>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Naive,
    Ett,
    Pa,
    Hc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Naive,
        Algorithm::Ett,
        Algorithm::Pa,
        Algorithm::Hc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Ett => "ett",
            Algorithm::Pa => "pa",
            Algorithm::Hc => "hc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub algorithm: Algorithm,
    /// Complete products whose exact score was computed.
    pub candidates_examined: u64,
    /// Rounds (two-tier), iterations (approximation), climbs (hill climbing) or 1 (exhaustive).
    pub iterations: u64,
    #[serde(rename = "wall_time_s", with = "secs")]
    pub wall_time: Duration,
    /// Fewer than `k` products could be returned.
    pub short_result: bool,
    /// Algorithm-specific counters.
    pub counters: BTreeMap<String, u64>,
}

impl SolverStats {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            candidates_examined: 0,
            iterations: 0,
            wall_time: Duration::ZERO,
            short_result: false,
            counters: BTreeMap::new(),
        }
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }

    pub fn set(&mut self, name: &str, value: u64) {
        self.counters.insert(name.to_string(), value);
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trace {
    Ett(EttTrace),
    Pa(PaTrace),
    Hc(HcTrace),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub entries: Vec<RankedProduct>,
    pub stats: SolverStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
}

impl TopK {
    pub fn bits(&self) -> Vec<Product> {
        self.entries.iter().map(|e| e.bits).collect()
    }

    pub fn best(&self) -> Option<&RankedProduct> {
        self.entries.first()
    }
}

/// Bounded buffer holding the `k` best `(score, product)` pairs under [`rank_cmp`].
///
/// The caller is responsible for not offering the same product twice.
#[derive(Clone, Debug)]
pub struct TopKBuffer {
    capacity: usize,
    entries: Vec<(f64, Product)>,
}

impl TopKBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 16) + 1),
        }
    }

    /// Returns whether the pair was kept.
    pub fn offer(&mut self, score: f64, o: Product) -> bool {
        if self.is_full() {
            let (ws, wo) = self.entries[self.capacity - 1];
            if rank_cmp(score, &o, ws, &wo) != Ordering::Less {
                return false;
            }
        }
        let pos = self
            .entries
            .partition_point(|(s, p)| rank_cmp(*s, p, score, &o) == Ordering::Less);
        self.entries.insert(pos, (score, o));
        self.entries.truncate(self.capacity);
        true
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Score of the `k`-th entry, `None` while the buffer is under-full.
    pub fn min_k(&self) -> Option<f64> {
        self.is_full().then(|| self.entries[self.capacity - 1].0)
    }

    pub fn entries(&self) -> &[(f64, Product)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(f64, Product)> {
        self.entries
    }
}

/// Optional wall-clock limit polled by long-running solvers.
#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget { deadline: None };

    pub fn until(deadline: Instant) -> Self {
        Self {
            deadline: Some(deadline),
        }
    }

    pub fn from_timeout(timeout: Option<Duration>) -> Self {
        Self {
            deadline: timeout.map(|t| Instant::now() + t),
        }
    }

    #[inline]
    pub fn check(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::TimedOut),
            _ => Ok(()),
        }
    }
}
