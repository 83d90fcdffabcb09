//! Single entry point over every solver.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ett::{solve_ett_with, EttConfig};
use crate::hc::{solve_hc_with, HcConfig};
use crate::nbc::Model;
use crate::oracle::{solve_naive_with, NaiveConfig};
use crate::pa::{solve_pa_with, PaConfig};
use crate::query::Query;
use crate::topk::{Algorithm, Budget, TopK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgorithmConfig {
    Naive {
        #[serde(default = "default_cap")]
        cap: usize,
    },
    Ett(EttConfig),
    Pa(PaConfig),
    Hc(HcConfig),
}

fn default_cap() -> usize {
    NaiveConfig::default().cap
}

impl AlgorithmConfig {
    /// Default parameters for `algorithm`.
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Naive => AlgorithmConfig::Naive { cap: default_cap() },
            Algorithm::Ett => AlgorithmConfig::Ett(EttConfig::default()),
            Algorithm::Pa => AlgorithmConfig::Pa(PaConfig::default()),
            Algorithm::Hc => AlgorithmConfig::Hc(HcConfig::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmConfig::Naive { .. } => Algorithm::Naive,
            AlgorithmConfig::Ett(_) => Algorithm::Ett,
            AlgorithmConfig::Pa(_) => Algorithm::Pa,
            AlgorithmConfig::Hc(_) => Algorithm::Hc,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub trace: bool,
    pub budget: Budget,
}

pub fn solve(
    model: &Model,
    query: &Query,
    config: &AlgorithmConfig,
    options: &SolveOptions,
) -> Result<TopK> {
    let budget = &options.budget;
    match config {
        AlgorithmConfig::Naive { cap } => {
            solve_naive_with(model, query, &NaiveConfig { cap: *cap }, budget)
        }
        AlgorithmConfig::Ett(c) => {
            solve_ett_with(model, query, &c.grouping(model)?, options.trace, budget)
        }
        AlgorithmConfig::Pa(c) => solve_pa_with(model, query, c, options.trace, budget),
        AlgorithmConfig::Hc(c) => solve_hc_with(model, query, c, options.trace, budget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::worked_example;
    use crate::nbc::{train, SmoothingSpec};

    #[test]
    fn every_algorithm_finds_the_worked_example_optimum_or_near_it() {
        let model = train(&worked_example(), &SmoothingSpec::default()).unwrap();
        let q = Query::desirable([0, 1], 1);
        for a in Algorithm::ALL {
            let top = solve(
                &model,
                &q,
                &AlgorithmConfig::default_for(a),
                &SolveOptions::default(),
            )
            .unwrap();
            assert_eq!(top.stats.algorithm, a);
            assert!(top.entries[0].score > 1.7, "{a}");
        }
    }

    #[test]
    fn config_json_shape() {
        let c: AlgorithmConfig = serde_json::from_str(r#"{"algorithm":"naive"}"#).unwrap();
        assert_eq!(c, AlgorithmConfig::Naive { cap: 24 });
        let c = AlgorithmConfig::default_for(Algorithm::Pa);
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.starts_with(r#"{"algorithm":"pa""#));
        assert_eq!(serde_json::from_str::<AlgorithmConfig>(&text).unwrap(), c);
    }
}
