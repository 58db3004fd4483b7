//! Validation accuracy and error distribution over linted feature files.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lint::{LintFinding, LintRuleId};
use crate::prompt::PromptTechnique;

pub use report::{write_report_bundle, ReportBundle, ACCURACY_CSV, ERROR_MATRIX_CSV, PLOT_DATA_CSV, SUMMARY_JSON};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("no verdicts for model `{0}` with technique {1}")]
    EmptyGroup(String, PromptTechnique),
    #[error("error matrix is empty")]
    EmptyMatrix,
}

/// Lint outcome for one generated feature file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileVerdict {
    pub story_id: String,
    pub model_id: String,
    pub technique: PromptTechnique,
    pub path: String,
    pub findings: Vec<LintFinding>,
}

impl FileVerdict {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub model_id: String,
    pub technique: PromptTechnique,
    pub clean_count: usize,
    pub total_count: usize,
    pub accuracy: f64,
}

/// Clean files over all files in the `(model, technique)` group.
pub fn accuracy(verdicts: &[FileVerdict], model_id: &str, technique: PromptTechnique) -> Result<AccuracySummary, EvalError> {
    let (clean, total) = verdicts
        .iter()
        .filter(|v| v.model_id == model_id && v.technique == technique)
        .fold((0usize, 0usize), |(clean, total), v| (clean + usize::from(v.is_clean()), total + 1));
    if total == 0 {
        return Err(EvalError::EmptyGroup(model_id.to_string(), technique));
    }
    Ok(AccuracySummary {
        model_id: model_id.to_string(),
        technique,
        clean_count: clean,
        total_count: total,
        accuracy: clean as f64 / total as f64,
    })
}

/// Every `(model, technique)` pair present in `verdicts`, sorted.
pub fn groups(verdicts: &[FileVerdict]) -> Vec<(String, PromptTechnique)> {
    verdicts
        .iter()
        .map(|v| (v.model_id.clone(), v.technique))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub type MatrixKey = (String, PromptTechnique, LintRuleId);

/// Finding counts per (model, technique, rule). Absent keys are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErrorMatrix {
    pub counts: BTreeMap<MatrixKey, u64>,
}

impl ErrorMatrix {
    pub fn get(&self, model: &str, technique: PromptTechnique, rule: LintRuleId) -> u64 {
        self.counts
            .get(&(model.to_string(), technique, rule))
            .copied()
            .unwrap_or(0)
    }

    pub fn add(&mut self, model: &str, technique: PromptTechnique, rule: LintRuleId, n: u64) {
        if n > 0 {
            *self.counts.entry((model.to_string(), technique, rule)).or_default() += n;
        }
    }

    /// Associative merge, for combining partial aggregations.
    pub fn merge(&mut self, other: &ErrorMatrix) {
        for ((model, technique, rule), n) in &other.counts {
            self.add(model, *technique, *rule, *n);
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn technique_total(&self, technique: PromptTechnique) -> u64 {
        self.counts
            .iter()
            .filter(|((_, t, _), _)| *t == technique)
            .map(|(_, n)| n)
            .sum()
    }

    /// Sum over models for one technique and rule.
    pub fn row_sum(&self, technique: PromptTechnique, rule: LintRuleId) -> u64 {
        self.counts
            .iter()
            .filter(|((_, t, r), _)| *t == technique && *r == rule)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn model_total(&self, model: &str, technique: PromptTechnique) -> u64 {
        self.counts
            .iter()
            .filter(|((m, t, _), _)| m == model && *t == technique)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn models(&self) -> Vec<String> {
        self.counts
            .keys()
            .map(|(m, _, _)| m.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn techniques(&self) -> Vec<PromptTechnique> {
        self.counts
            .keys()
            .map(|(_, t, _)| *t)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

pub fn error_matrix(verdicts: &[FileVerdict]) -> ErrorMatrix {
    let mut matrix = ErrorMatrix::default();
    for verdict in verdicts {
        for finding in &verdict.findings {
            matrix.add(&verdict.model_id, verdict.technique, finding.rule, 1);
        }
    }
    matrix
}

/// Fraction of all findings attributable to each technique.
pub fn technique_share(matrix: &ErrorMatrix) -> Result<BTreeMap<PromptTechnique, f64>, EvalError> {
    let total = matrix.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(matrix
        .techniques()
        .into_iter()
        .map(|t| (t, matrix.technique_total(t) as f64 / total as f64))
        .collect())
}

/// A generation that produced no feature file. Excluded from accuracy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub story_id: String,
    pub model_id: String,
    pub technique: PromptTechnique,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub accuracy: Vec<AccuracySummary>,
    pub matrix: ErrorMatrix,
    pub technique_share: BTreeMap<PromptTechnique, f64>,
    pub failures: BTreeMap<(String, PromptTechnique), usize>,
    pub run_ids: Vec<String>,
}

pub fn evaluate(verdicts: &[FileVerdict], failures: &[GenerationFailure], run_ids: &[String]) -> EvaluationReport {
    let accuracy = groups(verdicts)
        .iter()
        .map(|(model, technique)| accuracy(verdicts, model, *technique).expect("group has verdicts"))
        .collect();
    let matrix = error_matrix(verdicts);
    let technique_share = technique_share(&matrix).unwrap_or_default();
    let mut failure_counts = BTreeMap::new();
    for f in failures {
        *failure_counts.entry((f.model_id.clone(), f.technique)).or_default() += 1;
    }
    let mut run_ids = run_ids.to_vec();
    run_ids.sort();
    run_ids.dedup();
    EvaluationReport {
        accuracy,
        matrix,
        technique_share,
        failures: failure_counts,
        run_ids,
    }
}
