//! Request and response bodies.

use serde::{Deserialize, Serialize};
use tagmax_core::{
    Algorithm, AlgorithmConfig, EttConfig, GroupingMethod, HcConfig, Model, PaConfig, Polarity,
    PriorMode, Query, RankedProduct, TagGroupingMethod, TagSelection,
};

use crate::error::ApiError;

pub const SCHEMA_VERSION: u32 = 1;

/// A selected tag, either as a bare name or with weight and polarity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TagSpec {
    Name(String),
    Full {
        name: String,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default)]
        polarity: Polarity,
    },
}

fn one() -> f64 {
    1.0
}

fn default_k() -> usize {
    1
}

impl TagSpec {
    fn resolve(&self, model: &Model) -> Result<TagSelection, ApiError> {
        let (name, weight, polarity) = match self {
            TagSpec::Name(n) => (n, 1.0, Polarity::Desirable),
            TagSpec::Full {
                name,
                weight,
                polarity,
            } => (name, *weight, *polarity),
        };
        let tag = model.tag_index(name).ok_or_else(|| {
            ApiError::bad_request("invalid_query", format!("unknown tag {name:?}"))
        })?;
        Ok(TagSelection {
            tag,
            weight,
            polarity,
        })
    }
}

fn query(model: &Model, tags: &[TagSpec], k: usize) -> Result<Query, ApiError> {
    let tags = tags
        .iter()
        .map(|t| t.resolve(model))
        .collect::<Result<_, _>>()?;
    let q = Query { tags, k };
    q.validate(model)?;
    Ok(q)
}

/// Body of `POST /solve`. Parameters that do not apply to the chosen algorithm are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub tags: Vec<TagSpec>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(alias = "algo")]
    pub algorithm: Algorithm,
    /// Attributes per group for the two-tier solver.
    #[serde(default)]
    pub group_size: Option<usize>,
    /// Number of attribute groups for the two-tier solver; overrides `group_size`.
    #[serde(default)]
    pub groups: Option<usize>,
    #[serde(default)]
    pub grouping: Option<GroupingMethod>,
    #[serde(default)]
    pub zprime: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub tag_grouping: Option<TagGroupingMethod>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub trace: bool,
}

impl SolveRequest {
    pub fn query(&self, model: &Model) -> Result<Query, ApiError> {
        query(model, &self.tags, self.k)
    }

    /// Solver configuration; the exhaustive solver gets the server's cap.
    pub fn config(&self, naive_cap: usize) -> AlgorithmConfig {
        match self.algorithm {
            Algorithm::Naive => AlgorithmConfig::Naive { cap: naive_cap },
            Algorithm::Ett => {
                let d = EttConfig::default();
                AlgorithmConfig::Ett(EttConfig {
                    group_size: self.group_size.unwrap_or(d.group_size),
                    groups: self.groups,
                    method: self.grouping.unwrap_or(d.method),
                })
            }
            Algorithm::Pa => {
                let d = PaConfig::default();
                AlgorithmConfig::Pa(PaConfig {
                    zprime: self.zprime.unwrap_or(d.zprime),
                    epsilon: self.epsilon.unwrap_or(d.epsilon),
                    sigma: self.sigma,
                    method: self.tag_grouping.unwrap_or(d.method),
                })
            }
            Algorithm::Hc => {
                let d = HcConfig::default();
                AlgorithmConfig::Hc(HcConfig {
                    restarts: self.restarts.unwrap_or(d.restarts),
                    max_steps: self.max_steps,
                    seed: self.seed.unwrap_or(d.seed),
                })
            }
        }
    }
}

/// Body of `POST /score`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    /// Attribute values, first attribute first, e.g. `"1110"`.
    pub bits: String,
    pub tags: Vec<TagSpec>,
}

impl ScoreRequest {
    pub fn query(&self, model: &Model) -> Result<Query, ApiError> {
        query(model, &self.tags, 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    #[serde(flatten)]
    pub product: RankedProduct,
    /// 1 for the best product; omitted when the attribute count exceeds the exhaustive cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<u64>,
    /// Size of the design space, `2^m`.
    pub space: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagInfo {
    pub name: String,
    pub positive_count: usize,
    /// Unsmoothed fraction of training products carrying the tag.
    pub prevalence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub naive_cap: usize,
    pub max_attributes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub schema_version: u32,
    pub attributes: Vec<String>,
    pub tags: Vec<TagInfo>,
    pub n_rows: usize,
    pub m_weight: f64,
    pub prior_mode: PriorMode,
    pub algorithms: Vec<Algorithm>,
    pub limits: Limits,
}

impl ModelInfo {
    pub fn new(model: &Model, naive_cap: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            attributes: model.attribute_names.clone(),
            tags: model
                .tags
                .iter()
                .map(|t| TagInfo {
                    name: t.name.clone(),
                    positive_count: t.positive_count,
                    prevalence: t.prevalence(model.n_rows),
                })
                .collect(),
            n_rows: model.n_rows,
            m_weight: model.smoothing.m_weight,
            prior_mode: model.smoothing.prior_mode,
            algorithms: Algorithm::ALL.to_vec(),
            limits: Limits {
                naive_cap,
                max_attributes: 64,
            },
        }
    }
}
