//! Generate Gherkin acceptance tests from user stories with LLMs, validate
//! them against a set of syntax rules, and measure validation accuracy.
//!
//! The pipeline runs in phases that can also be used on their own:
//!
//! 1. [`story`] loads the user-story CSV.
//! 2. [`prompt`] builds a zero-shot or few-shot chat payload per story.
//! 3. [`provider`] sends it to a chat-completions endpoint, or replays a
//!    recorded response.
//! 4. [`gherkin`] parses the returned feature file tolerantly and [`lint`]
//!    reports syntax errors.
//! 5. [`eval`] computes accuracy and error distributions.
//!
//! [`pipeline`] strings the phases together for the `bddgen` binary.

pub mod eval;
pub mod gherkin;
pub mod lint;
pub mod pipeline;
pub mod prompt;
pub mod provider;
pub mod story;
