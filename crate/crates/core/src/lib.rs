//! Tag maximization: learn one Naive Bayes classifier per tag from a boolean
//! products-and-tags table, then search the `2^m` space of attribute vectors
//! for the `k` designs that maximise the expected number of desirable tags.
//!
//! Solvers:
//! - [`oracle::solve_naive`]: exhaustive enumeration, the ground truth.
//! - [`ett::solve_ett`]: exact two-tier threshold algorithm over rank-joined partial lists.
//! - [`pa::solve_pa`]: polynomial-time approximation with a provable ratio.
//! - [`hc::solve_hc`]: hill climbing with random restarts.

pub mod dataset;
pub mod error;
pub mod ett;
pub mod grouping;
pub mod hc;
pub mod logodds;
pub mod nbc;
pub mod oracle;
pub mod pa;
pub mod product;
pub mod query;
pub mod solve;
pub mod synthetic;
pub mod topk;

pub use dataset::{worked_example, Dataset, DatasetError, ProductRow};
pub use error::{Error, Result};
pub use ett::{group_attributes, solve_ett, AttributeGrouping, EttConfig, GroupingMethod};
pub use hc::{climb, solve_hc, HcConfig};
pub use nbc::{train, Model, PriorMode, SmoothingSpec, TagModel};
pub use oracle::{rank_of, solve_naive};
pub use pa::{group_tags, ptas, solve_pa, PaConfig, TagGroupingMethod};
pub use product::Product;
pub use query::{exact_score, score_bounds, Polarity, Query, Scorer, TagSelection};
pub use solve::{solve, AlgorithmConfig, SolveOptions};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use topk::{Algorithm, Budget, RankedProduct, SolverStats, TopK};
