//! Syntax-error rules over a parsed [`GherkinDocument`].
//!
//! Four rules mirror the gherkin-lint checks used to grade generated feature
//! files; `NoFeature` is a structural rule for responses that contain no
//! feature at all.

mod rules;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gherkin::GherkinDocument;

pub use rules::{check_logical_order, check_restricted_patterns, order_violations};

/// Matches lines made only of separator runs (`---`, `===`, `***`, `___`),
/// optionally quoted, such as `-----" ----"`.
pub const DEFAULT_RESTRICTED_PATTERN: &str = r#"^"?(?:[-=*_]{3,}"?\s*)+$"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LintRuleId {
    #[serde(rename = "gherkin-keywords-not-in-logical-order")]
    KeywordsNotInLogicalOrder,
    #[serde(rename = "gherkin-keyword-not-present-in-step")]
    KeywordNotPresentInStep,
    #[serde(rename = "missing-tags")]
    MissingTags,
    #[serde(rename = "restricted-patterns-present")]
    RestrictedPatternsPresent,
    #[serde(rename = "no-feature")]
    NoFeature,
}

impl LintRuleId {
    pub const ALL: [LintRuleId; 5] = [
        LintRuleId::KeywordsNotInLogicalOrder,
        LintRuleId::KeywordNotPresentInStep,
        LintRuleId::MissingTags,
        LintRuleId::RestrictedPatternsPresent,
        LintRuleId::NoFeature,
    ];

    /// The four syntax-error categories, in reporting order.
    pub const TAXONOMY: [LintRuleId; 4] = [
        LintRuleId::KeywordsNotInLogicalOrder,
        LintRuleId::KeywordNotPresentInStep,
        LintRuleId::RestrictedPatternsPresent,
        LintRuleId::MissingTags,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LintRuleId::KeywordsNotInLogicalOrder => "gherkin-keywords-not-in-logical-order",
            LintRuleId::KeywordNotPresentInStep => "gherkin-keyword-not-present-in-step",
            LintRuleId::MissingTags => "missing-tags",
            LintRuleId::RestrictedPatternsPresent => "restricted-patterns-present",
            LintRuleId::NoFeature => "no-feature",
        }
    }
}

impl fmt::Display for LintRuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LintRuleId {
    type Err = LintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LintRuleId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| LintError::InvalidConfig(format!("unknown rule `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingTagsScope {
    #[default]
    ScenariosOnly,
    ScenariosAndFeature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LintConfig {
    pub enabled: BTreeSet<LintRuleId>,
    pub restricted_patterns: Vec<String>,
    pub missing_tags_scope: MissingTagsScope,
}

impl Default for LintConfig {
    fn default() -> Self {
        Self {
            enabled: LintRuleId::ALL.into_iter().collect(),
            restricted_patterns: vec![DEFAULT_RESTRICTED_PATTERN.to_string()],
            missing_tags_scope: MissingTagsScope::ScenariosOnly,
        }
    }
}

impl LintConfig {
    /// Loads a TOML or JSON (by `.json` extension) config file. Missing keys
    /// take their defaults.
    pub fn load(path: &Path) -> Result<Self, LintError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LintError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let config: LintConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| LintError::InvalidConfig(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| LintError::InvalidConfig(e.to_string()))?
        };
        config.compile()?;
        Ok(config)
    }

    pub fn with_only(rules: &[LintRuleId]) -> Self {
        Self {
            enabled: rules.iter().copied().collect(),
            ..Self::default()
        }
    }

    pub fn is_enabled(&self, rule: LintRuleId) -> bool {
        self.enabled.contains(&rule)
    }

    pub fn compile(&self) -> Result<Vec<Regex>, LintError> {
        self.restricted_patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| LintError::InvalidConfig(format!("bad pattern `{p}`: {e}"))))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LintError {
    #[error("invalid lint config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LintFinding {
    #[serde(rename = "path")]
    pub source_path: String,
    pub line: usize,
    pub rule: LintRuleId,
    pub message: String,
}

impl LintFinding {
    pub(crate) fn new(rule: LintRuleId, line: usize, source_path: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            rule,
            message: message.into(),
            source_path: source_path.to_string(),
        }
    }
}

/// A config with its patterns compiled, for linting many documents.
#[derive(Debug, Clone)]
pub struct Linter {
    config: LintConfig,
    patterns: Vec<Regex>,
}

impl Linter {
    pub fn new(config: LintConfig) -> Result<Self, LintError> {
        let patterns = config.compile()?;
        Ok(Self { config, patterns })
    }

    pub fn config(&self) -> &LintConfig {
        &self.config
    }

    /// Findings sorted by line, then rule.
    pub fn lint(&self, doc: &GherkinDocument) -> Vec<LintFinding> {
        let path = doc.source_path.as_str();
        let mut findings = Vec::new();
        let on = |rule| self.config.is_enabled(rule);

        if on(LintRuleId::NoFeature) {
            findings.extend(rules::check_no_feature(doc));
        }
        if on(LintRuleId::KeywordsNotInLogicalOrder) {
            let background_steps = doc.background.as_ref().map(|bg| bg.steps.as_slice()).unwrap_or(&[]);
            findings.extend(rules::check_logical_order_with(background_steps, None, path));
            let antecedent = rules::last_primary(background_steps);
            for sc in &doc.scenarios {
                findings.extend(rules::check_logical_order_with(&sc.steps, antecedent, path));
            }
        }
        if on(LintRuleId::KeywordNotPresentInStep) {
            findings.extend(rules::check_keyword_not_present(doc));
        }
        if on(LintRuleId::MissingTags) {
            findings.extend(rules::check_missing_tags(doc, self.config.missing_tags_scope));
        }
        if on(LintRuleId::RestrictedPatternsPresent) {
            findings.extend(check_restricted_patterns(doc, &self.patterns));
        }
        findings.sort_by_key(|f| (f.line, f.rule));
        findings
    }
}

/// One-shot convenience over [`Linter`].
pub fn lint(doc: &GherkinDocument, config: &LintConfig) -> Result<Vec<LintFinding>, LintError> {
    Ok(Linter::new(config.clone())?.lint(doc))
}
