use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde_json::Value;
use walkdir::WalkDir;

use super::{LintReport, PipelineError, RunManifest, FINDINGS_FILE, MANIFEST_FILE};
use crate::eval::{evaluate, write_report_bundle, FileVerdict, GenerationFailure, ReportBundle};
use crate::prompt::PromptTechnique;

/// Lint reports and manifests gathered from the evaluate inputs.
#[derive(Debug, Default)]
pub struct EvaluationInputs {
    pub reports: Vec<(PathBuf, LintReport)>,
    pub manifests: Vec<(PathBuf, RunManifest)>,
}

enum InputKind {
    Report(LintReport),
    Manifest(Box<RunManifest>),
}

fn read_input(path: &Path) -> Result<InputKind, PipelineError> {
    let bad = |message: String| PipelineError::BadReport {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if value.get("files").is_some() && value.get("findings").is_some() {
        serde_json::from_value(value).map(InputKind::Report).map_err(|e| bad(e.to_string()))
    } else if value.get("run_id").is_some() && value.get("provider_name").is_some() {
        serde_json::from_value(value).map(|m| InputKind::Manifest(Box::new(m))).map_err(|e| bad(e.to_string()))
    } else {
        Err(bad("neither a findings report nor a run manifest".into()))
    }
}

/// Collects reports and manifests from files and directories. Directories
/// are searched recursively for `findings.json` and `manifest.json`.
pub fn load_inputs(inputs: &[PathBuf]) -> Result<EvaluationInputs, PipelineError> {
    let mut files = BTreeSet::new();
    for input in inputs {
        if input.is_dir() {
            for entry in WalkDir::new(input) {
                let entry = entry.map_err(|e| PipelineError::io(input, std::io::Error::other(e.to_string())))?;
                let name = entry.file_name();
                if entry.file_type().is_file() && (name == FINDINGS_FILE || name == MANIFEST_FILE) {
                    files.insert(entry.into_path());
                }
            }
        } else if input.is_file() {
            files.insert(input.clone());
        } else {
            return Err(PipelineError::io(
                input,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
            ));
        }
    }

    let mut loaded = EvaluationInputs::default();
    for path in files {
        match read_input(&path)? {
            InputKind::Report(r) => loaded.reports.push((path, r)),
            InputKind::Manifest(m) => loaded.manifests.push((path, *m)),
        }
    }
    Ok(loaded)
}

impl EvaluationInputs {
    /// One verdict per (model, technique, story); the first report wins when
    /// a file was linted more than once.
    pub fn verdicts(&self) -> Result<Vec<FileVerdict>, PipelineError> {
        let mut by_key: BTreeMap<(String, PromptTechnique, String), FileVerdict> = BTreeMap::new();
        for (_, report) in &self.reports {
            for file in &report.files {
                let (Some(model), Some(technique)) = (&file.model, file.technique) else {
                    return Err(PipelineError::UngroupedFile(file.path.clone()));
                };
                let key = (model.clone(), technique, file.story_id.clone());
                by_key.entry(key).or_insert_with(|| FileVerdict {
                    story_id: file.story_id.clone(),
                    model_id: model.clone(),
                    technique,
                    path: file.path.clone(),
                    findings: report.findings_for(&file.path).cloned().collect(),
                });
            }
        }
        Ok(by_key.into_values().collect())
    }

    pub fn failures(&self) -> Vec<GenerationFailure> {
        let mut seen = BTreeSet::new();
        self.manifests
            .iter()
            .flat_map(|(_, m)| m.failures.iter())
            .filter(|f| seen.insert((f.model_id.clone(), f.technique, f.story_id.clone())))
            .cloned()
            .collect()
    }

    pub fn run_ids(&self) -> Vec<String> {
        let mut ids: BTreeSet<String> = self.manifests.iter().map(|(_, m)| m.run_id.clone()).collect();
        for (_, report) in &self.reports {
            ids.extend(report.run_ids.iter().cloned());
        }
        ids.into_iter().collect()
    }
}

/// Aggregates findings reports (and manifests, for failure counts) into the
/// report bundle under `out_dir`.
pub fn cmd_evaluate(inputs: &[PathBuf], out_dir: &Path) -> Result<ReportBundle, PipelineError> {
    let loaded = load_inputs(inputs)?;
    if loaded.reports.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let verdicts = loaded.verdicts()?;
    let report = evaluate(&verdicts, &loaded.failures(), &loaded.run_ids());
    write_report_bundle(&report, out_dir).map_err(|e| PipelineError::io(out_dir, e))
}
