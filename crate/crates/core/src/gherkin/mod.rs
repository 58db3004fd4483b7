//! Tolerant Gherkin document model.
//!
//! The parser is line oriented and never rejects malformed Gherkin. Content
//! it cannot place (keyword-less steps, orphaned tags, stray headers) is kept
//! as [`RawLine`]s so lint rules can report on it.

mod parser;
mod serialize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::{parse_bytes, parse_document};
pub use serialize::serialize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GherkinError {
    #[error("{0}: feature file is not valid UTF-8")]
    InvalidEncoding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StepKeyword {
    Given,
    When,
    Then,
    And,
    But,
}

impl StepKeyword {
    pub const ALL: [StepKeyword; 5] = [
        StepKeyword::Given,
        StepKeyword::When,
        StepKeyword::Then,
        StepKeyword::And,
        StepKeyword::But,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StepKeyword::Given => "Given",
            StepKeyword::When => "When",
            StepKeyword::Then => "Then",
            StepKeyword::And => "And",
            StepKeyword::But => "But",
        }
    }

    /// And/But continue the previous step's keyword.
    pub fn is_conjunction(self) -> bool {
        matches!(self, StepKeyword::And | StepKeyword::But)
    }
}

impl fmt::Display for StepKeyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepKeyword {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StepKeyword::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub keyword: StepKeyword,
    pub text: String,
    pub line: usize,
}

/// Where an unclassified line was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineContext {
    TopLevel,
    InFeatureHeader,
    InBackground,
    InScenario,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLine {
    pub text: String,
    pub line: usize,
    pub context: LineContext,
}

impl RawLine {
    /// True when the line consists only of `@tags`.
    pub fn is_tag_line(&self) -> bool {
        parser::tag_tokens(&self.text).is_some()
    }
}

/// Free text under a header (feature, background or scenario description).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextLine {
    pub text: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    /// Includes the leading `@`.
    pub name: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Background {
    pub name: String,
    pub description: Vec<TextLine>,
    pub steps: Vec<Step>,
    pub raw_lines: Vec<RawLine>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub tags: Vec<Tag>,
    pub description: Vec<TextLine>,
    pub steps: Vec<Step>,
    pub raw_lines: Vec<RawLine>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GherkinDocument {
    pub feature_name: Option<String>,
    pub feature_line: Option<usize>,
    pub feature_tags: Vec<Tag>,
    pub feature_description: Vec<TextLine>,
    /// Unplaceable lines before the first background or scenario.
    pub header_raw: Vec<RawLine>,
    pub background: Option<Background>,
    pub scenarios: Vec<Scenario>,
    /// Tag lines left dangling at end of file.
    pub trailing_raw: Vec<RawLine>,
    pub source_path: String,
}

/// One modeled line with its position stripped, used for structural comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutlineItem {
    Raw(LineContext, String),
    Tags(Vec<String>),
    Feature(String),
    Background(String),
    Scenario(String),
    Description(String),
    Step(StepKeyword, String),
}

impl GherkinDocument {
    pub fn has_feature(&self) -> bool {
        self.feature_name.is_some()
    }

    /// Document content in source order without line numbers. Two documents
    /// with equal outlines are structurally identical.
    pub fn outline(&self) -> Vec<OutlineItem> {
        let mut items: Vec<(usize, OutlineItem)> = Vec::new();
        let raw = |r: &RawLine| (r.line, OutlineItem::Raw(r.context, r.text.clone()));
        let desc = |d: &TextLine| (d.line, OutlineItem::Description(d.text.clone()));
        let step = |s: &Step| (s.line, OutlineItem::Step(s.keyword, s.text.clone()));

        if let (Some(name), Some(line)) = (&self.feature_name, self.feature_line) {
            if !self.feature_tags.is_empty() {
                items.push((line, OutlineItem::Tags(tag_names(&self.feature_tags))));
            }
            items.push((line, OutlineItem::Feature(name.clone())));
        }
        items.extend(self.feature_description.iter().map(desc));
        items.extend(self.header_raw.iter().map(raw));
        if let Some(bg) = &self.background {
            items.push((bg.line, OutlineItem::Background(bg.name.clone())));
            items.extend(bg.description.iter().map(desc));
            items.extend(bg.steps.iter().map(step));
            items.extend(bg.raw_lines.iter().map(raw));
        }
        for sc in &self.scenarios {
            if !sc.tags.is_empty() {
                items.push((sc.line, OutlineItem::Tags(tag_names(&sc.tags))));
            }
            items.push((sc.line, OutlineItem::Scenario(sc.name.clone())));
            items.extend(sc.description.iter().map(desc));
            items.extend(sc.steps.iter().map(step));
            items.extend(sc.raw_lines.iter().map(raw));
        }
        items.extend(self.trailing_raw.iter().map(raw));
        // Stable sort keeps tags ahead of the header that shares their key.
        items.sort_by_key(|(line, _)| *line);
        items.into_iter().map(|(_, item)| item).collect()
    }

    /// Number of source lines the document accounts for.
    pub fn modeled_line_count(&self) -> usize {
        let tag_lines = |tags: &[Tag]| {
            let mut lines: Vec<usize> = tags.iter().map(|t| t.line).collect();
            lines.dedup();
            lines.len()
        };
        let mut n = usize::from(self.feature_name.is_some())
            + tag_lines(&self.feature_tags)
            + self.feature_description.len()
            + self.header_raw.len()
            + self.trailing_raw.len();
        if let Some(bg) = &self.background {
            n += 1 + bg.description.len() + bg.steps.len() + bg.raw_lines.len();
        }
        for sc in &self.scenarios {
            n += 1 + tag_lines(&sc.tags) + sc.description.len() + sc.steps.len() + sc.raw_lines.len();
        }
        n
    }

    /// Every raw line in the document, in source order.
    pub fn raw_lines(&self) -> Vec<&RawLine> {
        let mut all: Vec<&RawLine> = self.header_raw.iter().collect();
        if let Some(bg) = &self.background {
            all.extend(&bg.raw_lines);
        }
        for sc in &self.scenarios {
            all.extend(&sc.raw_lines);
        }
        all.extend(&self.trailing_raw);
        all.sort_by_key(|r| r.line);
        all
    }
}

fn tag_names(tags: &[Tag]) -> Vec<String> {
    tags.iter().map(|t| t.name.clone()).collect()
}
