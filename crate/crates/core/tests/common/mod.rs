//! Fixtures, brute-force oracles and generators shared by the integration tests.
#![allow(dead_code)]

use bddgen::eval::{ErrorMatrix, FileVerdict};
use bddgen::gherkin::StepKeyword;
use bddgen::lint::{LintFinding, LintRuleId};
use bddgen::prompt::PromptTechnique;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::Rng;

/// The two-scenario calculator feature used as the few-shot example.
pub const CALCULATOR_FEATURE: &str = r#"Feature: Basic Calculator Operations
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
"#;

/// One fixture per syntax-error example, with the single rule it must trigger.
pub fn rule_fixtures() -> Vec<(&'static str, &'static str, LintRuleId)> {
    vec![
        (
            "given-then-when.feature",
            "Feature: Download files\n\n  @download\n  Scenario: Out of order\n    Given a file is listed\n    Then the file is saved\n    When I click download\n",
            LintRuleId::KeywordsNotInLogicalOrder,
        ),
        (
            "trailing-tags.feature",
            "Feature: Download files\n\n  @download\n  Scenario: Download a file\n    Given a file is listed\n    When I click download\n    Then the file is saved\n\n@regression @download-files @experiments @attachments\n",
            LintRuleId::KeywordNotPresentInStep,
        ),
        (
            "untagged.feature",
            "Feature: Download files\n\n  Scenario: Download a file\n    Given a file is listed\n    When I click download\n    Then the file is saved\n",
            LintRuleId::MissingTags,
        ),
        (
            "dashed-description.feature",
            "Feature: Download files\n\n  @download\n  Scenario: Download a file\n    -----\n    Given a file is listed\n    When I click download\n    Then the file is saved\n",
            LintRuleId::RestrictedPatternsPresent,
        ),
    ]
}

pub const MODELS: [&str; 4] = ["GPT-3.5", "GPT-4", "PaLM-2", "Llama-2-13B"];

/// Rows in taxonomy order, columns in [`MODELS`] order.
pub const ZERO_SHOT_COUNTS: [[u64; 4]; 4] = [[6, 5, 4, 0], [1, 0, 58, 130], [0, 1, 32, 335], [0, 0, 95, 0]];
pub const FEW_SHOT_COUNTS: [[u64; 4]; 4] = [[1, 1, 1, 0], [0, 0, 3, 1], [0, 0, 4, 28], [0, 0, 41, 0]];

pub const ZERO_SHOT_ROW_SUMS: [u64; 4] = [15, 189, 368, 95];
pub const FEW_SHOT_ROW_SUMS: [u64; 4] = [3, 4, 32, 41];
pub const ZERO_SHOT_TOTAL: u64 = 667;
pub const FEW_SHOT_TOTAL: u64 = 80;

pub fn counts_for(technique: PromptTechnique) -> &'static [[u64; 4]; 4] {
    match technique {
        PromptTechnique::ZeroShot => &ZERO_SHOT_COUNTS,
        PromptTechnique::FewShot => &FEW_SHOT_COUNTS,
    }
}

fn finding(path: &str, rule: LintRuleId) -> LintFinding {
    LintFinding {
        source_path: path.to_string(),
        line: 1,
        rule,
        message: rule.as_str().to_string(),
    }
}

/// Verdicts whose findings carry the reference per-cell counts: one file per
/// finding, plus `clean_per_group` clean files per (model, technique).
pub fn reference_verdicts(clean_per_group: usize) -> Vec<FileVerdict> {
    let mut out = Vec::new();
    for technique in PromptTechnique::ALL {
        for (col, model) in MODELS.iter().enumerate() {
            let mut n = 0;
            let mut push = |findings: Vec<LintFinding>, out: &mut Vec<FileVerdict>| {
                n += 1;
                out.push(FileVerdict {
                    story_id: format!("US{n:04}"),
                    model_id: model.to_string(),
                    technique,
                    path: format!("{model}/{technique}/US{n:04}.feature"),
                    findings,
                });
            };
            for (row, rule) in LintRuleId::TAXONOMY.iter().enumerate() {
                for _ in 0..counts_for(technique)[row][col] {
                    push(vec![finding("x", *rule)], &mut out);
                }
            }
            for _ in 0..clean_per_group {
                push(Vec::new(), &mut out);
            }
        }
    }
    out
}

/// Accuracy oracle: clean and total per group, by direct counting.
pub fn brute_accuracy(verdicts: &[FileVerdict], model: &str, technique: PromptTechnique) -> (usize, usize) {
    let mut clean = 0;
    let mut total = 0;
    for v in verdicts {
        if v.model_id == model && v.technique == technique {
            total += 1;
            if v.findings.is_empty() {
                clean += 1;
            }
        }
    }
    (clean, total)
}

/// Error-matrix oracle by direct counting.
pub fn brute_matrix(verdicts: &[FileVerdict]) -> ErrorMatrix {
    let mut m = ErrorMatrix::default();
    for v in verdicts {
        for f in &v.findings {
            m.add(&v.model_id, v.technique, f.rule, 1);
        }
    }
    m
}

pub fn random_verdicts(rng: &mut StdRng, max_len: usize) -> Vec<FileVerdict> {
    let n = rng.random_range(1..=max_len);
    (0..n)
        .map(|i| {
            let k = if rng.random_bool(0.5) { 0 } else { rng.random_range(1..4) };
            let model = *["m1", "m2", "m3"].choose(rng).unwrap();
            let technique = *PromptTechnique::ALL.choose(rng).unwrap();
            FileVerdict {
                story_id: format!("S{i}"),
                model_id: model.to_string(),
                technique,
                path: format!("{model}/{technique}/S{i}.feature"),
                findings: (0..k).map(|_| finding("p", *LintRuleId::ALL.choose(rng).unwrap())).collect(),
            }
        })
        .collect()
}

fn phase(k: StepKeyword) -> Option<u8> {
    match k {
        StepKeyword::Given => Some(1),
        StepKeyword::When => Some(2),
        StepKeyword::Then => Some(3),
        _ => None,
    }
}

/// Logical-order oracle. Each step resolves to its own primary keyword, else
/// the nearest earlier primary one, else the antecedent. A step is out of
/// order if some earlier step resolved to a later phase. An unresolvable
/// leading run is reported once, at index 0.
pub fn brute_order(keywords: &[StepKeyword], antecedent: Option<StepKeyword>) -> Vec<usize> {
    let resolve = |i: usize| -> Option<u8> {
        (0..=i)
            .rev()
            .find_map(|j| phase(keywords[j]))
            .or_else(|| antecedent.and_then(phase))
    };
    let mut out = Vec::new();
    for i in 0..keywords.len() {
        match resolve(i) {
            None if i == 0 => out.push(0),
            None => {}
            Some(p) if (0..i).any(|j| resolve(j).is_some_and(|q| q > p)) => out.push(i),
            Some(_) => {}
        }
    }
    out
}

/// Every keyword sequence of exactly `len` steps.
pub fn all_sequences(len: usize) -> Vec<Vec<StepKeyword>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                StepKeyword::ALL.iter().map(move |k| {
                    let mut next = prefix.clone();
                    next.push(*k);
                    next
                })
            })
            .collect();
    }
    out
}

const FRAGMENTS: [&str; 24] = [
    "Feature:", "Feature: F", "Background:", "Scenario:", "Scenario: S", "Scenario Outline: O", "Examples:",
    "Rule: R", "Given", "When", "Then", "And", "But", "Given x", "@tag", "@a @b", "@", "# comment", "-----",
    "| a | b |", "\"\"\"", "  ", "\t", "Givenx",
];

/// A line of Gherkin-ish noise: keywords, tags, tables and arbitrary Unicode.
pub fn fuzz_text(rng: &mut StdRng) -> String {
    let lines = rng.random_range(0..20);
    let mut text = String::new();
    for _ in 0..lines {
        match rng.random_range(0..4) {
            0 => {
                let n = rng.random_range(0..12);
                text.extend((0..n).map(|_| rng.random::<char>()));
            }
            1 => {
                text.push_str(FRAGMENTS.choose(rng).unwrap());
                text.push(' ');
                let n = rng.random_range(0..6);
                text.extend((0..n).map(|_| rng.random::<char>()));
            }
            _ => text.push_str(FRAGMENTS.choose(rng).unwrap()),
        }
        text.push_str(["\n", "\r\n", "\r", ""].choose(rng).unwrap());
    }
    if rng.random_bool(0.1) {
        text.insert(0, '\u{feff}');
    }
    text
}

fn word(rng: &mut StdRng) -> String {
    let words = ["user", "cart", "login", "page", "total", "5", "\"quoted\"", "item", "checkout", "error"];
    let n = rng.random_range(1..5);
    (0..n).map(|_| *words.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn steps(rng: &mut StdRng, out: &mut String) {
    for _ in 0..rng.random_range(1..6) {
        let k = StepKeyword::ALL.choose(rng).unwrap();
        out.push_str(&format!("    {k} {}\n", word(rng)));
    }
}

/// A canonical feature file: feature header with optional tags and
/// description, optional background, then tagged or untagged scenarios.
pub fn canonical_document(rng: &mut StdRng) -> String {
    let mut out = String::new();
    if rng.random_bool(0.3) {
        out.push_str("@feature-tag\n");
    }
    out.push_str(&format!("Feature: {}\n", word(rng)));
    for _ in 0..rng.random_range(0..3) {
        out.push_str(&format!("  As a {}\n", word(rng)));
    }
    if rng.random_bool(0.5) {
        out.push_str(&format!("\n  Background: {}\n", word(rng)));
        steps(rng, &mut out);
    }
    for i in 0..rng.random_range(1..6) {
        out.push('\n');
        if rng.random_bool(0.7) {
            out.push_str(&format!("  @s{i} @smoke\n"));
        }
        out.push_str(&format!("  Scenario: {}\n", word(rng)));
        if rng.random_bool(0.2) {
            out.push_str(&format!("    {}\n", word(rng)));
        }
        steps(rng, &mut out);
    }
    out
}
