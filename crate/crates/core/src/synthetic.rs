//! Synthetic products-and-tags generator.
//!
//! Attributes are i.i.d. within four contiguous, near-equal blocks that switch on
//! with probabilities 0.75, 0.15, 0.10 and 0.05. Every tag depends on a random
//! subset ("relation") of attributes: when a strict majority of the related
//! attributes are 1, the tag is set with probability equal to the fraction that
//! are 1; otherwise the tag is 0.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ProductRow};
use crate::error::{Error, Result};
use crate::grouping::contiguous_blocks;

pub const DEFAULT_GROUP_PROBS: [f64; 4] = [0.75, 0.15, 0.10, 0.05];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub attribute_group_probs: Vec<f64>,
    /// Inclusive bounds on how many attributes each tag depends on.
    pub relation_size_range: (usize, usize),
    pub seed: u64,
}

impl SyntheticSpec {
    /// Default generator settings; the relation size range `[2, 5]` is clipped to `m`.
    pub fn new(n: usize, m: usize, r: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            r,
            attribute_group_probs: DEFAULT_GROUP_PROBS.to_vec(),
            relation_size_range: (2.min(m).max(1), 5.min(m).max(1)),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.r == 0 {
            return Err(Error::InvalidParameter(
                "synthetic n, m and r must all be at least 1".into(),
            ));
        }
        if self.attribute_group_probs.is_empty()
            || self
                .attribute_group_probs
                .iter()
                .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidParameter(
                "attribute group probabilities must be non-empty and within [0, 1]".into(),
            ));
        }
        let (lo, hi) = self.relation_size_range;
        if lo < 1 || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "relation size range [{lo}, {hi}] is empty or starts below 1"
            )));
        }
        if hi > self.m {
            return Err(Error::InvalidParameter(format!(
                "relation size {hi} exceeds the attribute count {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// Generator output together with the hidden tag relations it used.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// `relations[j]` lists the attribute indices tag `j` depends on (ascending).
    pub relations: Vec<Vec<usize>>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    generate_synthetic_with_relations(spec).map(|d| d.dataset)
}

pub fn generate_synthetic_with_relations(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let blocks = contiguous_blocks(spec.m, spec.attribute_group_probs.len().min(spec.m));
    let mut attr_prob = vec![0.0; spec.m];
    for (block, p) in blocks.iter().zip(&spec.attribute_group_probs) {
        for &i in block {
            attr_prob[i] = *p;
        }
    }

    let (lo, hi) = spec.relation_size_range;
    let relations: Vec<Vec<usize>> = (0..spec.r)
        .map(|_| {
            let size = rng.random_range(lo..=hi);
            let mut rel = sample(&mut rng, spec.m, size).into_vec();
            rel.sort_unstable();
            rel
        })
        .collect();

    let rows = (0..spec.n)
        .map(|idx| {
            let attributes: Vec<bool> = attr_prob.iter().map(|&p| rng.random_bool(p)).collect();
            let tags = relations
                .iter()
                .map(|rel| {
                    let ones = rel.iter().filter(|&&i| attributes[i]).count();
                    // strict majority gates the draw
                    if 2 * ones > rel.len() {
                        rng.random_bool(ones as f64 / rel.len() as f64)
                    } else {
                        false
                    }
                })
                .collect();
            ProductRow {
                id: (idx + 1).to_string(),
                attributes,
                tags,
            }
        })
        .collect();

    let dataset = Dataset::new(
        (1..=spec.m).map(|i| format!("A{i}")).collect(),
        (1..=spec.r).map(|j| format!("T{j}")).collect(),
        rows,
    )?;
    Ok(SyntheticData { dataset, relations })
}
