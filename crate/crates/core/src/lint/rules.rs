use regex::Regex;

use super::{LintFinding, LintRuleId, MissingTagsScope};
use crate::gherkin::{GherkinDocument, LineContext, Step, StepKeyword};

fn phase(keyword: StepKeyword) -> Option<u8> {
    match keyword {
        StepKeyword::Given => Some(1),
        StepKeyword::When => Some(2),
        StepKeyword::Then => Some(3),
        StepKeyword::And | StepKeyword::But => None,
    }
}

/// Indices of steps that break Given → When → Then order.
///
/// And/But take the keyword of the nearest preceding primary step, falling
/// back to `antecedent` (the background's last primary keyword). A step is
/// out of order when its resolved phase is below the highest phase seen so
/// far. A leading run of And/But with nothing to resolve against counts once,
/// at its first step.
pub fn order_violations(keywords: &[StepKeyword], antecedent: Option<StepKeyword>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut current = antecedent.and_then(phase);
    let mut max_seen = 0u8;
    for (i, &keyword) in keywords.iter().enumerate() {
        let resolved = phase(keyword).or(current);
        let Some(p) = resolved else {
            if i == 0 {
                out.push(i);
            }
            continue;
        };
        if p < max_seen {
            out.push(i);
        }
        max_seen = max_seen.max(p);
        current = Some(p);
    }
    out
}

pub(super) fn last_primary(steps: &[Step]) -> Option<StepKeyword> {
    steps.iter().rev().map(|s| s.keyword).find(|k| !k.is_conjunction())
}

/// Logical-order findings for one container of steps with no inherited keyword.
pub fn check_logical_order(steps: &[Step]) -> Vec<LintFinding> {
    check_logical_order_with(steps, None, "")
}

pub(super) fn check_logical_order_with(
    steps: &[Step],
    antecedent: Option<StepKeyword>,
    source_path: &str,
) -> Vec<LintFinding> {
    let keywords: Vec<StepKeyword> = steps.iter().map(|s| s.keyword).collect();
    order_violations(&keywords, antecedent)
        .into_iter()
        .map(|i| {
            let step = &steps[i];
            let message = if step.keyword.is_conjunction() && phase_of_context(&keywords[..i], antecedent).is_none() {
                format!("`{}` step has no preceding Given, When or Then", step.keyword)
            } else {
                format!("`{}` step is out of Given, When, Then order", step.keyword)
            };
            LintFinding::new(LintRuleId::KeywordsNotInLogicalOrder, step.line, source_path, message)
        })
        .collect()
}

fn phase_of_context(before: &[StepKeyword], antecedent: Option<StepKeyword>) -> Option<u8> {
    before.iter().rev().find_map(|&k| phase(k)).or(antecedent.and_then(phase))
}

pub(super) fn check_no_feature(doc: &GherkinDocument) -> Option<LintFinding> {
    if doc.has_feature() {
        return None;
    }
    let first_line = doc
        .raw_lines()
        .first()
        .map(|r| r.line)
        .into_iter()
        .chain(doc.background.as_ref().map(|bg| bg.line))
        .chain(doc.scenarios.iter().map(|s| s.tags.first().map_or(s.line, |t| t.line)))
        .min()
        .unwrap_or(1);
    Some(LintFinding::new(
        LintRuleId::NoFeature,
        first_line,
        &doc.source_path,
        "file has no `Feature:` header",
    ))
}

pub(super) fn check_keyword_not_present(doc: &GherkinDocument) -> Vec<LintFinding> {
    doc.raw_lines()
        .into_iter()
        .filter(|raw| raw.context != LineContext::TopLevel || doc.has_feature())
        .map(|raw| {
            let message = if raw.is_tag_line() {
                format!("tags `{}` do not precede a Scenario or Feature", raw.text)
            } else {
                "line does not start with Given, When, Then, And or But".to_string()
            };
            LintFinding::new(LintRuleId::KeywordNotPresentInStep, raw.line, &doc.source_path, message)
        })
        .collect()
}

pub(super) fn check_missing_tags(doc: &GherkinDocument, scope: MissingTagsScope) -> Vec<LintFinding> {
    let mut out = Vec::new();
    if scope == MissingTagsScope::ScenariosAndFeature && doc.feature_tags.is_empty() {
        if let Some(line) = doc.feature_line {
            out.push(LintFinding::new(
                LintRuleId::MissingTags,
                line,
                &doc.source_path,
                "feature has no tags",
            ));
        }
    }
    for sc in doc.scenarios.iter().filter(|s| s.tags.is_empty()) {
        out.push(LintFinding::new(
            LintRuleId::MissingTags,
            sc.line,
            &doc.source_path,
            format!("scenario `{}` has no tags", sc.name),
        ));
    }
    out
}

/// One finding per (line, matching pattern) over descriptions, header names
/// other than the feature's, and raw lines. Step text is never checked.
pub fn check_restricted_patterns(doc: &GherkinDocument, patterns: &[Regex]) -> Vec<LintFinding> {
    let mut candidates: Vec<(usize, &str, &str)> = Vec::new();
    candidates.extend(doc.feature_description.iter().map(|d| (d.line, "feature description", d.text.as_str())));
    if let Some(bg) = &doc.background {
        candidates.push((bg.line, "background name", bg.name.as_str()));
        candidates.extend(bg.description.iter().map(|d| (d.line, "background description", d.text.as_str())));
    }
    for sc in &doc.scenarios {
        candidates.push((sc.line, "scenario name", sc.name.as_str()));
        candidates.extend(sc.description.iter().map(|d| (d.line, "scenario description", d.text.as_str())));
    }
    candidates.extend(doc.raw_lines().into_iter().map(|r| (r.line, "line", r.text.as_str())));

    let mut out = Vec::new();
    for (line, what, text) in candidates {
        if text.is_empty() {
            continue;
        }
        for pattern in patterns.iter().filter(|p| p.is_match(text)) {
            out.push(LintFinding::new(
                LintRuleId::RestrictedPatternsPresent,
                line,
                &doc.source_path,
                format!("{what} `{text}` matches restricted pattern `{}`", pattern.as_str()),
            ));
        }
    }
    out
}
