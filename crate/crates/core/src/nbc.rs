//! Per-tag Naive Bayes classifiers.
//!
//! For tag `T_j` and product `o = (a_1..a_m)` the posterior is
//! `Pr(T_j | o) = 1 / (1 + R_j)` with
//! `R_j = Pr(T'_j)/Pr(T_j) · Π_i Pr(a_i | T'_j)/Pr(a_i | T_j)`.
//! Every probability is smoothed with the m-estimate
//! `(count + w·p0) / (total + w)`, so all ratios are finite and positive.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grouping::abs_pearson_matrix;
use crate::logodds::{logistic, LogOdds};
use crate::product::Product;

/// Where the m-estimate's prior guess `p0` for a conditional comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorMode {
    /// `p0 = 1/2` for both attribute values.
    Uniform,
    /// `p0` = the tag's smoothed prior `Pr(T_j)` for value 1 (and its complement for value 0).
    ClassPrior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    /// Equivalent sample size of the m-estimate.
    pub m_weight: f64,
    pub prior_mode: PriorMode,
}

impl Default for SmoothingSpec {
    /// `m_weight = 1` with class-prior guesses. This pair reproduces the reference
    /// worked-example scores to two decimals (see the calibration fixture test).
    fn default() -> Self {
        Self {
            m_weight: 1.0,
            prior_mode: PriorMode::ClassPrior,
        }
    }
}

impl SmoothingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.m_weight.is_finite() && self.m_weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "m-estimate weight must be positive, got {}",
                self.m_weight
            )));
        }
        Ok(())
    }

    fn estimate(&self, count: usize, total: usize, p0: f64) -> f64 {
        (count as f64 + self.m_weight * p0) / (total as f64 + self.m_weight)
    }
}

/// Smoothed probability tables for one tag plus the log-ratio terms used by every solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TagModel {
    pub name: String,
    /// Rows carrying the tag.
    pub positive_count: usize,
    /// `present_counts[i]`: rows with the tag and `A_i = 1`.
    pub present_counts: Vec<usize>,
    /// `absent_counts[i]`: rows without the tag and `A_i = 1`.
    pub absent_counts: Vec<usize>,
    pub prior_present: f64,
    pub prior_absent: f64,
    /// `cond_present[i][v] = Pr(A_i = v | T_j)`
    pub cond_present: Vec<[f64; 2]>,
    /// `cond_absent[i][v] = Pr(A_i = v | T'_j)`
    pub cond_absent: Vec<[f64; 2]>,
    /// `ratio[i][v] = cond_absent[i][v] / cond_present[i][v]`
    pub ratio: Vec<[f64; 2]>,
    /// `Pr(T'_j) / Pr(T_j)`
    pub prior_ratio: f64,
    #[serde(skip)]
    log_ratio: Vec<[LogOdds; 2]>,
    #[serde(skip)]
    log_prior_ratio: LogOdds,
}

impl TagModel {
    fn fit(
        name: &str,
        n: usize,
        positive_count: usize,
        present_counts: Vec<usize>,
        absent_counts: Vec<usize>,
        smoothing: &SmoothingSpec,
    ) -> Self {
        let negative_count = n - positive_count;
        let prior_present = smoothing.estimate(positive_count, n, 0.5);
        let prior_absent = smoothing.estimate(negative_count, n, 0.5);
        let p0 = match smoothing.prior_mode {
            PriorMode::Uniform => 0.5,
            PriorMode::ClassPrior => prior_present,
        };
        let cond = |count: usize, total: usize| {
            let one = smoothing.estimate(count, total, p0);
            let zero = smoothing.estimate(total - count, total, 1.0 - p0);
            [zero, one]
        };
        let cond_present: Vec<[f64; 2]> = present_counts
            .iter()
            .map(|&c| cond(c, positive_count))
            .collect();
        let cond_absent: Vec<[f64; 2]> = absent_counts
            .iter()
            .map(|&c| cond(c, negative_count))
            .collect();
        let mut tm = TagModel {
            name: name.to_string(),
            positive_count,
            present_counts,
            absent_counts,
            prior_present,
            prior_absent,
            ratio: Vec::new(),
            prior_ratio: 0.0,
            cond_present,
            cond_absent,
            log_ratio: Vec::new(),
            log_prior_ratio: LogOdds::ZERO,
        };
        tm.derive_ratios();
        tm
    }

    fn derive_ratios(&mut self) {
        self.ratio = self
            .cond_present
            .iter()
            .zip(&self.cond_absent)
            .map(|(p, a)| [a[0] / p[0], a[1] / p[1]])
            .collect();
        self.prior_ratio = self.prior_absent / self.prior_present;
        self.log_ratio = self
            .cond_present
            .iter()
            .zip(&self.cond_absent)
            .map(|(p, a)| {
                [
                    LogOdds::from_ln(a[0].ln() - p[0].ln()),
                    LogOdds::from_ln(a[1].ln() - p[1].ln()),
                ]
            })
            .collect();
        self.log_prior_ratio = LogOdds::from_ln(self.prior_absent.ln() - self.prior_present.ln());
    }

    /// `ln Pr(A_i = v | T'_j) − ln Pr(A_i = v | T_j)` in fixed point.
    #[inline]
    pub fn log_ratio(&self, attr: usize, value: bool) -> LogOdds {
        self.log_ratio[attr][value as usize]
    }

    #[inline]
    pub fn log_prior_ratio(&self) -> LogOdds {
        self.log_prior_ratio
    }

    /// `ln R_j(o)`.
    pub fn log_r(&self, o: &Product) -> LogOdds {
        self.log_prior_ratio
            + o.iter()
                .enumerate()
                .map(|(i, v)| self.log_ratio(i, v))
                .sum::<LogOdds>()
    }

    /// `Pr(T_j | o) = 1 / (1 + R_j(o))`.
    pub fn score(&self, o: &Product) -> f64 {
        logistic(-self.log_r(o))
    }

    /// Unsmoothed share of rows carrying the tag.
    pub fn prevalence(&self, n: usize) -> f64 {
        self.positive_count as f64 / n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub attribute_names: Vec<String>,
    pub tag_names: Vec<String>,
    pub smoothing: SmoothingSpec,
    pub n_rows: usize,
    pub tags: Vec<TagModel>,
    /// |Pearson| between attribute columns of the training data.
    pub attribute_correlation: Vec<Vec<f64>>,
    /// |Pearson| between tag columns of the training data.
    pub tag_correlation: Vec<Vec<f64>>,
}

pub const MODEL_FORMAT: &str = "tagmax-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: Model,
}

impl Model {
    /// Number of attributes.
    pub fn m(&self) -> usize {
        self.attribute_names.len()
    }

    /// Number of tags.
    pub fn r(&self) -> usize {
        self.tag_names.len()
    }

    pub fn tag(&self, j: usize) -> &TagModel {
        &self.tags[j]
    }

    pub fn tag_index(&self, name: &str) -> Option<usize> {
        self.tag_names.iter().position(|t| t == name)
    }

    /// `Pr(T_j | o)`.
    pub fn tag_score(&self, j: usize, o: &Product) -> f64 {
        self.tags[j].score(o)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &doc)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        Self::from_document(doc)
    }

    fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        let mut model = doc.model;
        let m = model.m();
        if model.tags.len() != model.r() {
            return Err(Error::ModelFormat(format!(
                "{} tag names but {} tag models",
                model.r(),
                model.tags.len()
            )));
        }
        for t in &mut model.tags {
            if t.cond_present.len() != m || t.cond_absent.len() != m {
                return Err(Error::ModelFormat(format!(
                    "tag {} has tables for the wrong number of attributes",
                    t.name
                )));
            }
            let probs = t
                .cond_present
                .iter()
                .chain(&t.cond_absent)
                .flatten()
                .chain([&t.prior_present, &t.prior_absent]);
            for &p in probs {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::ModelFormat(format!(
                        "tag {} has probability {p} outside (0, 1)",
                        t.name
                    )));
                }
            }
            t.derive_ratios();
        }
        Ok(model)
    }
}

/// Fits one classifier per tag.
pub fn train(ds: &Dataset, smoothing: &SmoothingSpec) -> Result<Model> {
    smoothing.validate()?;
    let (n, m, r) = (ds.n(), ds.m(), ds.r());
    let mut tags = Vec::with_capacity(r);
    for j in 0..r {
        let mut positive = 0usize;
        let mut present = vec![0usize; m];
        let mut absent = vec![0usize; m];
        for row in ds.rows() {
            let counts = if row.tags[j] {
                positive += 1;
                &mut present
            } else {
                &mut absent
            };
            for (c, &a) in counts.iter_mut().zip(&row.attributes) {
                *c += a as usize;
            }
        }
        tags.push(TagModel::fit(
            &ds.tag_names()[j],
            n,
            positive,
            present,
            absent,
            smoothing,
        ));
    }
    let attr_cols: Vec<Vec<bool>> = (0..m).map(|i| ds.attribute_column(i).collect()).collect();
    let tag_cols: Vec<Vec<bool>> = (0..r).map(|j| ds.tag_column(j).collect()).collect();
    Ok(Model {
        attribute_names: ds.attribute_names().to_vec(),
        tag_names: ds.tag_names().to_vec(),
        smoothing: *smoothing,
        n_rows: n,
        tags,
        attribute_correlation: abs_pearson_matrix(&attr_cols),
        tag_correlation: abs_pearson_matrix(&tag_cols),
    })
}
