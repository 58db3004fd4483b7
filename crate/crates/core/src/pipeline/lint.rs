use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::generate::read_run_id;
use super::{relative_slash_path, write_json, PipelineError, FEATURE_EXT, FINDINGS_FILE};
use crate::gherkin::parse_bytes;
use crate::lint::{LintConfig, LintFinding, Linter};
use crate::prompt::PromptTechnique;

/// One linted file. Model and technique come from the enclosing
/// `<model>/<technique>/` directories when present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintedFile {
    pub path: String,
    pub story_id: String,
    pub model: Option<String>,
    pub technique: Option<PromptTechnique>,
    pub run_id: Option<String>,
    pub findings: usize,
}

/// Findings report written by the lint phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub run_ids: Vec<String>,
    pub files: Vec<LintedFile>,
    pub findings: Vec<LintFinding>,
}

impl LintReport {
    pub fn findings_for<'a>(&'a self, path: &'a str) -> impl Iterator<Item = &'a LintFinding> + 'a {
        self.findings.iter().filter(move |f| f.source_path == path)
    }
}

fn grouping(path: &Path) -> (Option<String>, Option<PromptTechnique>) {
    let parent = path.parent();
    let technique = parent
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .and_then(|n| n.parse::<PromptTechnique>().ok());
    let model = technique
        .and(parent.and_then(Path::parent))
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .map(str::to_string);
    match model {
        Some(m) => (Some(m), technique),
        None => (None, None),
    }
}

/// Lints every `.feature` file below `dir`. Paths in the report are relative
/// to `root`, which must contain `dir`.
pub fn lint_tree(dir: &Path, root: &Path, linter: &Linter) -> Result<LintReport, PipelineError> {
    let abs_dir = dir.canonicalize().map_err(|e| PipelineError::io(dir, e))?;
    let abs_root = root.canonicalize().map_err(|e| PipelineError::io(root, e))?;

    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(&abs_dir).follow_links(false) {
        let entry = entry.map_err(|e| PipelineError::io(dir, std::io::Error::other(e.to_string())))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == FEATURE_EXT) {
            paths.push(entry.into_path());
        }
    }
    if paths.is_empty() {
        return Err(PipelineError::NoFeatureFiles(dir.display().to_string()));
    }
    paths.sort();

    let mut files = Vec::new();
    let mut findings = Vec::new();
    let mut run_ids = BTreeSet::new();
    for path in paths {
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let rel = relative_slash_path(&abs_root, &path);
        let (model, technique) = grouping(&path);
        let story_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();

        let (file_findings, run_id) = match parse_bytes(&bytes, &rel) {
            Ok(doc) => (linter.lint(&doc), read_run_id(&String::from_utf8_lossy(&bytes))),
            // Undecodable output cannot be a valid feature file.
            Err(err) => (
                vec![LintFinding {
                    source_path: rel.clone(),
                    line: 1,
                    rule: crate::lint::LintRuleId::NoFeature,
                    message: err.to_string(),
                }],
                None,
            ),
        };
        if let Some(id) = &run_id {
            run_ids.insert(id.clone());
        }
        files.push(LintedFile {
            path: rel,
            story_id,
            model,
            technique,
            run_id,
            findings: file_findings.len(),
        });
        findings.extend(file_findings);
    }
    Ok(LintReport {
        run_ids: run_ids.into_iter().collect(),
        files,
        findings,
    })
}

/// Lints `feature_dir` and writes the report to `out` (default
/// `<feature_dir>/findings.json`). Findings never make this fail.
pub fn cmd_lint(feature_dir: &Path, config: &LintConfig, out: Option<&Path>) -> Result<(LintReport, PathBuf), PipelineError> {
    let linter = Linter::new(config.clone())?;
    let report = lint_tree(feature_dir, feature_dir, &linter)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| feature_dir.join(FINDINGS_FILE));
    write_json(&out, &report)?;
    Ok((report, out))
}
