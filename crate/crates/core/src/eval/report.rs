use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::EvaluationReport;
use crate::lint::LintRuleId;
use crate::prompt::PromptTechnique;

pub const ACCURACY_CSV: &str = "accuracy.csv";
pub const ERROR_MATRIX_CSV: &str = "error_matrix.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const PLOT_DATA_CSV: &str = "plot_data.csv";

/// Matrix rows: the four taxonomy rules in table order, then the structural rule.
const MATRIX_ROWS: [LintRuleId; 5] = [
    LintRuleId::KeywordsNotInLogicalOrder,
    LintRuleId::KeywordNotPresentInStep,
    LintRuleId::RestrictedPatternsPresent,
    LintRuleId::MissingTags,
    LintRuleId::NoFeature,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub accuracy_csv: PathBuf,
    pub error_matrix_csv: PathBuf,
    pub summary_json: PathBuf,
    pub plot_data_csv: PathBuf,
}

fn models(report: &EvaluationReport) -> Vec<String> {
    let mut models: BTreeSet<String> = report.matrix.models().into_iter().collect();
    models.extend(report.accuracy.iter().map(|a| a.model_id.clone()));
    models.extend(report.failures.keys().map(|(m, _)| m.clone()));
    models.into_iter().collect()
}

fn techniques(report: &EvaluationReport) -> Vec<PromptTechnique> {
    let mut techniques: BTreeSet<PromptTechnique> = report.matrix.techniques().into_iter().collect();
    techniques.extend(report.accuracy.iter().map(|a| a.technique));
    techniques.extend(report.failures.keys().map(|(_, t)| *t));
    techniques.into_iter().collect()
}

pub fn accuracy_csv(report: &EvaluationReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "technique", "clean", "total", "accuracy", "failures"])?;
    for a in &report.accuracy {
        let failures = report
            .failures
            .get(&(a.model_id.clone(), a.technique))
            .copied()
            .unwrap_or(0);
        w.write_record([
            a.model_id.clone(),
            a.technique.to_string(),
            a.clean_count.to_string(),
            a.total_count.to_string(),
            a.accuracy.to_string(),
            failures.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
}

/// One block per technique; rows are error types, columns are models.
pub fn error_matrix_csv(report: &EvaluationReport) -> Result<String, csv::Error> {
    let models = models(report);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["technique".to_string(), "error_type".to_string()];
    header.extend(models.iter().cloned());
    header.push("total".to_string());
    w.write_record(&header)?;
    for technique in techniques(report) {
        for rule in MATRIX_ROWS {
            let mut row = vec![technique.to_string(), rule.to_string()];
            row.extend(models.iter().map(|m| report.matrix.get(m, technique, rule).to_string()));
            row.push(report.matrix.row_sum(technique, rule).to_string());
            w.write_record(&row)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
}

/// Long format, one observation per row, for external charting.
pub fn plot_data_csv(report: &EvaluationReport) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "model", "technique", "error_type", "value"])?;
    for a in &report.accuracy {
        w.write_record([
            "accuracy",
            &a.model_id,
            a.technique.as_str(),
            "",
            &a.accuracy.to_string(),
        ])?;
    }
    let models = models(report);
    for technique in techniques(report) {
        for model in &models {
            for rule in MATRIX_ROWS {
                w.write_record([
                    "errors",
                    model,
                    technique.as_str(),
                    rule.as_str(),
                    &report.matrix.get(model, technique, rule).to_string(),
                ])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8"))
}

pub fn summary_json(report: &EvaluationReport) -> serde_json::Value {
    let accuracy: Vec<_> = report
        .accuracy
        .iter()
        .map(|a| {
            json!({
                "model": a.model_id,
                "technique": a.technique,
                "clean": a.clean_count,
                "total": a.total_count,
                "accuracy": a.accuracy,
            })
        })
        .collect();
    let failures: Vec<_> = report
        .failures
        .iter()
        .map(|((model, technique), count)| json!({"model": model, "technique": technique, "count": count}))
        .collect();
    let matrix: Vec<_> = report
        .matrix
        .counts
        .iter()
        .map(|((model, technique, rule), count)| {
            json!({"model": model, "technique": technique, "error_type": rule, "count": count})
        })
        .collect();
    let technique_totals: serde_json::Map<String, serde_json::Value> = techniques(report)
        .into_iter()
        .map(|t| (t.to_string(), json!(report.matrix.technique_total(t))))
        .collect();
    let shares: serde_json::Map<String, serde_json::Value> = report
        .technique_share
        .iter()
        .map(|(t, s)| (t.to_string(), json!(s)))
        .collect();
    json!({
        "run_ids": report.run_ids,
        "accuracy": accuracy,
        "failures": failures,
        "error_matrix": matrix,
        "technique_totals": technique_totals,
        "total_errors": report.matrix.total(),
        "technique_share": shares,
    })
}

/// Writes the four report files into `dir`, creating it if needed.
pub fn write_report_bundle(report: &EvaluationReport, dir: &Path) -> std::io::Result<ReportBundle> {
    let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
    std::fs::create_dir_all(dir)?;
    let bundle = ReportBundle {
        dir: dir.to_path_buf(),
        accuracy_csv: dir.join(ACCURACY_CSV),
        error_matrix_csv: dir.join(ERROR_MATRIX_CSV),
        summary_json: dir.join(SUMMARY_JSON),
        plot_data_csv: dir.join(PLOT_DATA_CSV),
    };
    std::fs::write(&bundle.accuracy_csv, accuracy_csv(report).map_err(to_io)?)?;
    std::fs::write(&bundle.error_matrix_csv, error_matrix_csv(report).map_err(to_io)?)?;
    std::fs::write(&bundle.plot_data_csv, plot_data_csv(report).map_err(to_io)?)?;
    let mut summary = serde_json::to_string_pretty(&summary_json(report)).map_err(std::io::Error::other)?;
    summary.push('\n');
    std::fs::write(&bundle.summary_json, summary)?;
    Ok(bundle)
}
