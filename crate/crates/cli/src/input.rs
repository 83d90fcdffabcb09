use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use tagmax_core::{train, Dataset, DatasetError, Model};

use crate::SmoothingArgs;

/// A caller mistake: bad arguments, unreadable or malformed input.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// Exit code for an error: 1 when the caller can fix it, 2 otherwise.
pub fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Invalid>() || cause.is::<DatasetError>() {
            return 1;
        }
        if let Some(core) = cause.downcast_ref::<tagmax_core::Error>() {
            return if core.is_validation() { 1 } else { 2 };
        }
    }
    2
}

/// Where the model comes from: a saved model, or a CSV trained on the fly.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false, id = "model_source")]
pub struct ModelSource {
    /// Saved model JSON.
    #[arg(long, env = "TAGMAX_MODEL", group = "model_source")]
    pub model: Option<PathBuf>,
    /// Training CSV, fitted before use.
    #[arg(long, group = "model_source")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
}

impl ModelSource {
    pub fn load(&self) -> Result<Model> {
        match (&self.model, &self.data) {
            (Some(path), _) => Model::load(path)
                .map_err(|e| Invalid(format!("cannot load model {}: {e}", path.display())).into()),
            (None, Some(path)) => Ok(train(&load_dataset(path)?, &self.smoothing.spec())?),
            (None, None) => Err(Invalid("pass --model or --data".into()).into()),
        }
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::load_csv(path)
        .map_err(|e| Invalid(format!("cannot load {}: {e}", path.display())).into())
}
