//! Loading experiment configs with line/field diagnostics.

use std::fs;
use std::path::Path;

use crate::error::{Result, SrError};
use crate::experiments::ExperimentSpec;

/// Parse and validate a config document.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| SrError::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| SrError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| match e {
        SrError::Config(msg) => SrError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
