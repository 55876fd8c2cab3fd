//! The run configuration: a TOML document naming subjects, pipelines and
//! evaluation settings.
//!
//! ```toml
//! output_dir = "results"
//!
//! [eval]
//! n_reps = 100
//! train_fraction = 0.7
//! master_seed = 0
//!
//! [[subject]]
//! id = "S1"
//! path = "s1.epo"
//!
//! [[pipeline]]
//! name = "csp-knn"
//! classifier = "knn"
//! window = [4.0, 10.0]
//! [pipeline.extractor]
//! type = "csp"
//! m = 2
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use bci_core::eval::{PipelineInfo, TableFormat};
use bci_core::{ClassPair, EvalConfig, PipelineSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
}

/// A named pipeline. `group` selects the rendered table and `row_label`
/// the row within it; they default to the extractor and classifier titles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_label: Option<String>,
    #[serde(flatten)]
    pub spec: PipelineSpec,
}

impl PipelineEntry {
    pub fn info(&self) -> PipelineInfo {
        PipelineInfo {
            name: self.name.clone(),
            group: self.group.clone().unwrap_or_else(|| self.spec.extractor.title().to_string()),
            row_label: self.row_label.clone().unwrap_or_else(|| self.spec.classifier.title().to_string()),
        }
    }
}

fn all_pairs() -> Vec<ClassPair> {
    ClassPair::all()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<TableFormat>,
    /// Class pairs evaluated by `table`.
    #[serde(default = "all_pairs")]
    pub pairs: Vec<ClassPair>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(rename = "subject", default)]
    pub subjects: Vec<SubjectEntry>,
    #[serde(rename = "pipeline", default)]
    pub pipelines: Vec<PipelineEntry>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::usage(format!("config cannot be echoed: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.eval.validate()?;
        if self.pipelines.is_empty() {
            return Err(CliError::usage("config defines no [[pipeline]]"));
        }
        unique("pipeline name", self.pipelines.iter().map(|p| p.name.as_str()))?;
        unique("subject id", self.subjects.iter().map(|s| s.id.as_str()))?;
        if self.pairs.is_empty() {
            return Err(CliError::usage("pairs must not be empty"));
        }
        let keys: Vec<String> = self.pairs.iter().map(|p| p.key()).collect();
        unique("pair", keys.iter().map(String::as_str))?;
        Ok(())
    }

    pub fn subject(&self, id: &str) -> Result<&SubjectEntry, CliError> {
        self.subjects.iter().find(|s| s.id == id).ok_or_else(|| {
            let known: Vec<&str> = self.subjects.iter().map(|s| s.id.as_str()).collect();
            CliError::usage(format!("unknown subject `{id}`, config has {known:?}"))
        })
    }

    pub fn pipeline(&self, name: &str) -> Result<&PipelineEntry, CliError> {
        self.pipelines.iter().find(|p| p.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.pipelines.iter().map(|p| p.name.as_str()).collect();
            CliError::usage(format!("unknown pipeline `{name}`, config has {known:?}"))
        })
    }
}

fn unique<'a>(what: &str, names: impl Iterator<Item = &'a str>) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() {
            return Err(CliError::usage(format!("empty {what}")));
        }
        if !seen.insert(n) {
            return Err(CliError::usage(format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}
