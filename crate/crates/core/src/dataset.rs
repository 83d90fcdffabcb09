//! Boolean products-and-tags training data.
//!
//! CSV layout: an `id` column, then attribute columns prefixed `a:`, then tag
//! columns prefixed `t:`. Every attribute/tag cell is `0` or `1`. Categorical
//! source columns have to be one-hot expanded before they reach this format.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty input: no header row")]
    Empty,
    #[error("dataset has no product rows")]
    NoRows,
    #[error("malformed header at column {column}: {reason}")]
    MalformedHeader { column: usize, reason: String },
    #[error("duplicate column name {name:?} at column {column}")]
    DuplicateColumn { name: String, column: usize },
    #[error("row {row} (line {line}), column {column} ({name}): expected 0 or 1, found {value:?}")]
    NonBinaryCell {
        row: usize,
        line: u64,
        column: usize,
        name: String,
        value: String,
    },
    #[error("row {row} (line {line}): expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },
    #[error("slice ({n}, {m}, {r}) out of range for dataset of shape ({n_max}, {m_max}, {r_max})")]
    SliceOutOfRange {
        n: usize,
        m: usize,
        r: usize,
        n_max: usize,
        m_max: usize,
        r_max: usize,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const ATTRIBUTE_PREFIX: &str = "a:";
pub const TAG_PREFIX: &str = "t:";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductRow {
    pub id: String,
    pub attributes: Vec<bool>,
    pub tags: Vec<bool>,
}

/// An immutable, validated training corpus of `n` products over `m` attributes and `r` tags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    attribute_names: Vec<String>,
    tag_names: Vec<String>,
    rows: Vec<ProductRow>,
}

impl Dataset {
    pub fn new(
        attribute_names: Vec<String>,
        tag_names: Vec<String>,
        rows: Vec<ProductRow>,
    ) -> Result<Self, DatasetError> {
        if attribute_names.is_empty() {
            return Err(DatasetError::MalformedHeader {
                column: 1,
                reason: "at least one attribute column is required".into(),
            });
        }
        if tag_names.is_empty() {
            return Err(DatasetError::MalformedHeader {
                column: 1 + attribute_names.len(),
                reason: "at least one tag column is required".into(),
            });
        }
        check_unique(&attribute_names, 1)?;
        check_unique(&tag_names, 1 + attribute_names.len())?;
        if rows.is_empty() {
            return Err(DatasetError::NoRows);
        }
        for (idx, row) in rows.iter().enumerate() {
            if row.attributes.len() != attribute_names.len() || row.tags.len() != tag_names.len() {
                return Err(DatasetError::InvalidRow {
                    row: idx + 1,
                    reason: format!(
                        "expected {} attribute and {} tag bits, found {} and {}",
                        attribute_names.len(),
                        tag_names.len(),
                        row.attributes.len(),
                        row.tags.len()
                    ),
                });
            }
        }
        Ok(Self {
            attribute_names,
            tag_names,
            rows,
        })
    }

    /// Number of products.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of attributes.
    pub fn m(&self) -> usize {
        self.attribute_names.len()
    }

    /// Number of tags.
    pub fn r(&self) -> usize {
        self.tag_names.len()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn tag_names(&self) -> &[String] {
        &self.tag_names
    }

    pub fn rows(&self) -> &[ProductRow] {
        &self.rows
    }

    pub fn attribute_column(&self, i: usize) -> impl Iterator<Item = bool> + '_ {
        self.rows.iter().map(move |r| r.attributes[i])
    }

    pub fn tag_column(&self, j: usize) -> impl Iterator<Item = bool> + '_ {
        self.rows.iter().map(move |r| r.tags[j])
    }

    pub fn tag_index(&self, name: &str) -> Option<usize> {
        self.tag_names.iter().position(|t| t == name)
    }

    /// Leading submatrix: first `n` rows, first `m` attributes, first `r` tags.
    pub fn slice(&self, n: usize, m: usize, r: usize) -> Result<Dataset, DatasetError> {
        if n == 0 || m == 0 || r == 0 || n > self.n() || m > self.m() || r > self.r() {
            return Err(DatasetError::SliceOutOfRange {
                n,
                m,
                r,
                n_max: self.n(),
                m_max: self.m(),
                r_max: self.r(),
            });
        }
        let rows = self.rows[..n]
            .iter()
            .map(|row| ProductRow {
                id: row.id.clone(),
                attributes: row.attributes[..m].to_vec(),
                tags: row.tags[..r].to_vec(),
            })
            .collect();
        Ok(Dataset {
            attribute_names: self.attribute_names[..m].to_vec(),
            tag_names: self.tag_names[..r].to_vec(),
            rows,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let file = File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();

        let header = match records.next() {
            None => return Err(DatasetError::Empty),
            Some(h) => h?,
        };
        if header.iter().all(|c| c.is_empty()) {
            return Err(DatasetError::Empty);
        }
        let (attribute_names, tag_names) = parse_header(&header)?;
        let width = header.len();
        let m = attribute_names.len();

        let mut rows = Vec::new();
        for (idx, rec) in records.enumerate() {
            let rec = rec?;
            let row_no = idx + 1;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() == 1 && rec.get(0) == Some("") {
                // blank line
                continue;
            }
            if rec.len() != width {
                return Err(DatasetError::RaggedRow {
                    row: row_no,
                    line,
                    expected: width,
                    found: rec.len(),
                });
            }
            let mut attributes = Vec::with_capacity(m);
            let mut tags = Vec::with_capacity(width - 1 - m);
            for (col, cell) in rec.iter().enumerate().skip(1) {
                let bit = match cell {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(DatasetError::NonBinaryCell {
                            row: row_no,
                            line,
                            column: col + 1,
                            name: header[col].to_string(),
                            value: other.to_string(),
                        })
                    }
                };
                if col <= m {
                    attributes.push(bit);
                } else {
                    tags.push(bit);
                }
            }
            rows.push(ProductRow {
                id: rec[0].to_string(),
                attributes,
                tags,
            });
        }
        Dataset::new(attribute_names, tag_names, rows)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let file = File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Writes the canonical CSV encoding (LF line endings, `0`/`1` cells).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let header = std::iter::once("id".to_string())
            .chain(
                self.attribute_names
                    .iter()
                    .map(|a| format!("{ATTRIBUTE_PREFIX}{a}")),
            )
            .chain(self.tag_names.iter().map(|t| format!("{TAG_PREFIX}{t}")));
        wtr.write_record(header)?;
        for row in &self.rows {
            let cells = std::iter::once(row.id.as_str()).chain(
                row.attributes
                    .iter()
                    .chain(row.tags.iter())
                    .map(|&b| if b { "1" } else { "0" }),
            );
            wtr.write_record(cells)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn check_unique(names: &[String], first_column: usize) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    for (i, name) in names.iter().enumerate() {
        if !seen.insert(name.as_str()) {
            return Err(DatasetError::DuplicateColumn {
                name: name.clone(),
                column: first_column + i + 1,
            });
        }
    }
    Ok(())
}

fn parse_header(header: &csv::StringRecord) -> Result<(Vec<String>, Vec<String>), DatasetError> {
    if header.get(0) != Some("id") {
        return Err(DatasetError::MalformedHeader {
            column: 1,
            reason: format!(
                "first column must be `id`, found {:?}",
                header.get(0).unwrap_or("")
            ),
        });
    }
    let mut attributes = Vec::new();
    let mut tags = Vec::new();
    for (col, name) in header.iter().enumerate().skip(1) {
        let column = col + 1;
        if let Some(a) = name.strip_prefix(ATTRIBUTE_PREFIX) {
            if !tags.is_empty() {
                return Err(DatasetError::MalformedHeader {
                    column,
                    reason: format!("attribute column {name:?} after tag columns"),
                });
            }
            if a.is_empty() {
                return Err(DatasetError::MalformedHeader {
                    column,
                    reason: "empty attribute name".into(),
                });
            }
            attributes.push(a.to_string());
        } else if let Some(t) = name.strip_prefix(TAG_PREFIX) {
            if t.is_empty() {
                return Err(DatasetError::MalformedHeader {
                    column,
                    reason: "empty tag name".into(),
                });
            }
            tags.push(t.to_string());
        } else {
            return Err(DatasetError::MalformedHeader {
                column,
                reason: format!("column {name:?} has neither `a:` nor `t:` prefix"),
            });
        }
    }
    if attributes.is_empty() {
        return Err(DatasetError::MalformedHeader {
            column: 2,
            reason: "no attribute columns".into(),
        });
    }
    if tags.is_empty() {
        return Err(DatasetError::MalformedHeader {
            column: header.len() + 1,
            reason: "no tag columns".into(),
        });
    }
    check_unique(&attributes, 1)?;
    check_unique(&tags, 1 + attributes.len())?;
    Ok((attributes, tags))
}

/// The eight-product, four-attribute, two-tag worked example used throughout the tests and docs.
pub fn worked_example() -> Dataset {
    const CSV: &str = "\
id,a:A1,a:A2,a:A3,a:A4,t:T1,t:T2
1,0,0,0,1,0,0
2,0,1,0,0,0,1
3,0,1,0,1,0,0
4,0,1,1,1,1,1
5,1,0,0,0,1,0
6,1,0,0,1,0,1
7,1,0,1,1,1,1
8,1,1,0,1,0,1
";
    Dataset::from_csv_reader(CSV.as_bytes()).expect("embedded example is valid")
}
