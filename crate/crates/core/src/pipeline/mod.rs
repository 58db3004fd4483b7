//! The end-to-end workflow behind the command line: generate feature files
//! from stories, lint them, and aggregate the results into reports.
//!
//! Layout of an output root:
//!
//! ```text
//! <out>/<model>/<technique>/<story_id>.feature
//! <out>/<model>/<technique>/manifest.json
//! <out>/<model>/<technique>/findings.json
//! <out>/report/{accuracy.csv,error_matrix.csv,summary.json,plot_data.csv}
//! ```

mod evaluate;
mod generate;
mod lint;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::GenerationFailure;
use crate::lint::LintError;
use crate::prompt::{PromptError, PromptTechnique};
use crate::provider::{GenerationParams, ProviderError};
use crate::story::StoryError;

pub use evaluate::{cmd_evaluate, load_inputs, EvaluationInputs};
pub use generate::{cmd_generate, GenerateOptions, GenerateOutcome};
pub use lint::{cmd_lint, lint_tree, LintReport, LintedFile};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FINDINGS_FILE: &str = "findings.json";
pub const REPORT_DIR: &str = "report";
pub const FEATURE_EXT: &str = "feature";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First line of every generated feature file.
pub const RUN_ID_PREFIX: &str = "# run-id: ";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Story(#[from] StoryError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Lint(#[from] LintError),
    #[error("no .feature files under {0}")]
    NoFeatureFiles(String),
    #[error("no findings reports found in the given inputs")]
    EmptyInput,
    #[error("cannot tell model and technique for {0}; expected <model>/<technique>/<story>.feature")]
    UngroupedFile(String),
    #[error("story ids `{0}` and `{1}` map to the same file name")]
    IdCollision(String, String),
    #[error("{0}")]
    Config(String),
    #[error("every story failed to generate ({0} failures)")]
    AllFailed(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    BadReport { path: String, message: String },
}

impl PipelineError {
    /// 1 for usage and configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::AllFailed(_) | PipelineError::Io { .. } => 2,
            PipelineError::Provider(e) => match e {
                ProviderError::Config(_) | ProviderError::InvalidParams(_) | ProviderError::FixtureReadError { .. } => 1,
                _ => 2,
            },
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into().display().to_string(),
            source,
        }
    }
}

/// Paths produced by [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub generate: GenerateOutcome,
    pub findings_path: PathBuf,
    pub report: crate::eval::ReportBundle,
}

/// Generate, lint the new run, then evaluate every run under the output root
/// into `<out>/report/`.
pub fn cmd_run(
    opts: &GenerateOptions,
    provider: &dyn crate::provider::Provider,
    lint_config: &crate::lint::LintConfig,
) -> Result<RunOutcome, PipelineError> {
    let linter = crate::lint::Linter::new(lint_config.clone())?;
    let generate = cmd_generate(opts, provider)?;
    let report = lint_tree(&generate.run_dir, &opts.out_dir, &linter)?;
    let findings_path = generate.run_dir.join(FINDINGS_FILE);
    write_json(&findings_path, &report)?;
    let bundle = cmd_evaluate(std::slice::from_ref(&opts.out_dir), &opts.out_dir.join(REPORT_DIR))?;
    Ok(RunOutcome {
        generate,
        findings_path,
        report: bundle,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedFile {
    pub story_id: String,
    /// Relative to the output root, `/`-separated.
    pub path: String,
    pub request_digest: String,
}

/// Everything needed to reproduce one (dataset, provider, technique) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub timestamp: String,
    pub dataset_path: String,
    pub technique: PromptTechnique,
    pub provider_name: String,
    pub params: GenerationParams,
    pub prompt_digest: String,
    pub tool_version: String,
    pub fences_stripped: bool,
    pub story_count: usize,
    pub generated: Vec<GeneratedFile>,
    pub failures: Vec<GenerationFailure>,
}

/// File-system-safe form of an id: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn path_segment(id: &str) -> String {
    let mut s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        s = "_".repeat(s.len().max(1));
    }
    s
}

/// `/`-joined path of `path` relative to `root`.
pub(crate) fn relative_slash_path(root: &std::path::Path, path: &std::path::Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub(crate) fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}
