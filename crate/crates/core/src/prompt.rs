//! Zero-shot and few-shot prompt assembly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::story::UserStory;

pub const STORY_PLACEHOLDER: &str = "{user_story}";
pub const INSTRUCTIONS_PLACEHOLDER: &str = "{instructions}";

/// Request line of both techniques. `{instructions}` expands to the numbered list.
pub const DEFAULT_REQUEST: &str =
    "Generate a feature file with 5 Gherkin Scenarios for {user_story} by following below instructions.\n{instructions}";

pub const DEFAULT_INSTRUCTIONS: [&str; 6] = [
    "Start the feature file with the 'Feature:' keyword.",
    "Provide a descriptive feature name to specify the context of the scenarios.",
    "Include steps in the Background if they are repeated at the beginning of all scenarios in a feature.",
    "The background step is executed before every scenario.",
    "Use tags as annotations to group and organize scenarios and features.",
    "Tags are written with the '@' symbol followed by a significant text.",
];

/// In-context demonstration for the few-shot technique. The first two
/// scenarios are the canonical calculator example; the remaining three extend
/// it to the five scenarios the request asks for.
pub const CALCULATOR_EXEMPLAR: &str = r#"Feature: Basic Calculator Operations
  As a user, I need a simple calculator for quick and accurate basic operations.

  Background:
    Given I have opened the calculator application

  @basicoperations
  Scenario: Performing Addition
    When I enter "5" into the calculator
    And I add "7"
    Then the result should be "12"

  @basicoperations
  Scenario: Performing Subtraction
    When I enter "10" into the calculator
    And I subtract "3"
    Then the result should be "7"

  @basicoperations
  Scenario: Performing Multiplication
    When I enter "6" into the calculator
    And I multiply by "4"
    Then the result should be "24"

  @basicoperations
  Scenario: Performing Division
    When I enter "20" into the calculator
    And I divide by "5"
    Then the result should be "4"

  @clear
  Scenario: Clearing the display
    When I enter "9" into the calculator
    And I press the clear button
    Then the result should be "0"
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptTechnique {
    #[serde(rename = "zero-shot")]
    ZeroShot,
    #[serde(rename = "few-shot")]
    FewShot,
}

impl PromptTechnique {
    pub const ALL: [PromptTechnique; 2] = [PromptTechnique::ZeroShot, PromptTechnique::FewShot];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptTechnique::ZeroShot => "zero-shot",
            PromptTechnique::FewShot => "few-shot",
        }
    }
}

impl fmt::Display for PromptTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptTechnique {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" | "zero-shot" | "zeroshot" | "zero_shot" => Ok(PromptTechnique::ZeroShot),
            "few" | "few-shot" | "fewshot" | "few_shot" => Ok(PromptTechnique::FewShot),
            _ => Err(PromptError::UnknownTechnique(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub technique: PromptTechnique,
    /// Request text carrying the `{user_story}` and `{instructions}` placeholders.
    pub request: String,
    pub instruction_lines: Vec<String>,
    /// Present iff the technique is few-shot.
    pub exemplar: Option<String>,
    pub system: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPayload {
    pub messages: Vec<Message>,
    pub technique: PromptTechnique,
    pub story_id: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("story `{0}` has an empty description")]
    EmptyStory(String),
    #[error("template does not contain the {STORY_PLACEHOLDER} placeholder")]
    PlaceholderMissing,
    #[error("expected {expected} instruction lines, found {found}")]
    InstructionCount { expected: usize, found: usize },
    #[error("a {0} template must {1} an exemplar")]
    ExemplarMismatch(PromptTechnique, &'static str),
    #[error("unknown prompt technique `{0}` (expected zero or few)")]
    UnknownTechnique(String),
    #[error("failed to read template {path}: {message}")]
    Read { path: String, message: String },
}

/// The zero-shot and few-shot templates, in that order.
pub fn default_templates() -> (PromptTemplate, PromptTemplate) {
    let instructions: Vec<String> = DEFAULT_INSTRUCTIONS.iter().map(|s| s.to_string()).collect();
    let zero = PromptTemplate {
        technique: PromptTechnique::ZeroShot,
        request: DEFAULT_REQUEST.to_string(),
        instruction_lines: instructions.clone(),
        exemplar: None,
        system: None,
    };
    let few = PromptTemplate {
        technique: PromptTechnique::FewShot,
        exemplar: Some(CALCULATOR_EXEMPLAR.to_string()),
        ..zero.clone()
    };
    (zero, few)
}

pub fn default_template(technique: PromptTechnique) -> PromptTemplate {
    let (zero, few) = default_templates();
    match technique {
        PromptTechnique::ZeroShot => zero,
        PromptTechnique::FewShot => few,
    }
}

impl PromptTemplate {
    /// Replaces the request text with the contents of a plain-text template file.
    pub fn with_request_file(mut self, path: &std::path::Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.request = text.trim_end().to_string();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if !self.request.contains(STORY_PLACEHOLDER) {
            return Err(PromptError::PlaceholderMissing);
        }
        if self.instruction_lines.len() != DEFAULT_INSTRUCTIONS.len() {
            return Err(PromptError::InstructionCount {
                expected: DEFAULT_INSTRUCTIONS.len(),
                found: self.instruction_lines.len(),
            });
        }
        match (self.technique, &self.exemplar) {
            (PromptTechnique::ZeroShot, Some(_)) => Err(PromptError::ExemplarMismatch(self.technique, "not carry")),
            (PromptTechnique::FewShot, None) => Err(PromptError::ExemplarMismatch(self.technique, "carry")),
            _ => Ok(()),
        }
    }

    /// Numbered instruction block, one instruction per line.
    pub fn instructions_block(&self) -> String {
        self.instruction_lines
            .iter()
            .enumerate()
            .map(|(i, line)| format!("{}. {}", i + 1, line))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Stable content hash of everything that shapes a prompt.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("template serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Builds the chat payload for one story.
pub fn build_prompt(story: &UserStory, template: &PromptTemplate) -> Result<PromptPayload, PromptError> {
    let description = story.description.trim();
    if description.is_empty() {
        return Err(PromptError::EmptyStory(story.id.clone()));
    }
    template.validate()?;

    // Instructions go in first so a story containing the literal
    // `{instructions}` token is never expanded.
    let user_text = template
        .request
        .replace(INSTRUCTIONS_PLACEHOLDER, &template.instructions_block())
        .replace(STORY_PLACEHOLDER, description);

    let mut messages = Vec::with_capacity(3);
    if let Some(system) = &template.system {
        messages.push(Message {
            role: Role::System,
            content: system.clone(),
        });
    }
    messages.push(Message {
        role: Role::User,
        content: user_text,
    });
    if let Some(exemplar) = &template.exemplar {
        messages.push(Message {
            role: Role::Assistant,
            content: exemplar.clone(),
        });
    }

    Ok(PromptPayload {
        messages,
        technique: template.technique,
        story_id: story.id.clone(),
    })
}
