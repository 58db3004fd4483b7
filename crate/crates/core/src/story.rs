//! User-story dataset ingestion.
//!
//! Stories come from a comma-delimited, RFC-4180-quoted UTF-8 CSV file. The
//! id and description columns are mandatory; a provenance column is optional.
//! Column names are remappable through [`StorySchema`].

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One input requirement line with its identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserStory {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Column-name mapping for a story CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorySchema {
    pub id_column: String,
    pub description_column: String,
    pub source_column: Option<String>,
}

impl Default for StorySchema {
    fn default() -> Self {
        Self {
            id_column: "id".to_string(),
            description_column: "description".to_string(),
            source_column: Some("source".to_string()),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoryError {
    #[error("dataset not found: {0}")]
    FileNotFound(String),
    #[error("failed to read dataset {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset is not valid UTF-8")]
    InvalidEncoding,
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("required column `{0}` is missing from the header")]
    MissingColumn(String),
    #[error("duplicate story id `{0}`")]
    DuplicateId(String),
    #[error("story at line {line} has an empty {field}")]
    BlankField { line: u64, field: &'static str },
    #[error("dataset contains no stories")]
    EmptyDataset,
    #[error("failed to write stories: {0}")]
    Write(String),
}

/// Loads every story from the CSV file at `path`, in file order.
pub fn load_stories(path: impl AsRef<Path>, schema: &StorySchema) -> Result<Vec<UserStory>, StoryError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => StoryError::FileNotFound(path.display().to_string()),
        _ => StoryError::Io {
            path: path.display().to_string(),
            source: e,
        },
    })?;
    parse_stories(&bytes, schema)
}

/// Parses story CSV bytes. A leading UTF-8 byte-order mark is ignored.
pub fn parse_stories(bytes: &[u8], schema: &StorySchema) -> Result<Vec<UserStory>, StoryError> {
    let text = std::str::from_utf8(bytes).map_err(|_| StoryError::InvalidEncoding)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(malformed)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_idx = column(&schema.id_column).ok_or_else(|| StoryError::MissingColumn(schema.id_column.clone()))?;
    let desc_idx = column(&schema.description_column)
        .ok_or_else(|| StoryError::MissingColumn(schema.description_column.clone()))?;
    let source_idx = schema.source_column.as_deref().and_then(column);

    let mut stories = Vec::new();
    let mut seen = HashSet::new();
    let mut last_line = 1;
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        last_line = line;

        let id = record.get(id_idx).unwrap_or_default().trim().to_string();
        if id.is_empty() {
            return Err(StoryError::BlankField { line, field: "id" });
        }
        let description = record.get(desc_idx).unwrap_or_default().trim().to_string();
        if description.is_empty() {
            return Err(StoryError::BlankField {
                line,
                field: "description",
            });
        }
        let source = source_idx
            .and_then(|i| record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);

        if !seen.insert(id.clone()) {
            return Err(StoryError::DuplicateId(id));
        }
        stories.push(UserStory { id, description, source });
    }

    // The csv reader accepts an unterminated quote by running the field to EOF.
    if text.matches('"').count() % 2 == 1 {
        return Err(StoryError::MalformedCsv {
            line: last_line,
            message: "unbalanced quote".to_string(),
        });
    }
    if stories.is_empty() {
        return Err(StoryError::EmptyDataset);
    }
    Ok(stories)
}

fn malformed(err: csv::Error) -> StoryError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    StoryError::MalformedCsv { line, message }
}

/// Writes stories as CSV using the column names from `schema`.
pub fn write_stories<W: Write>(writer: W, stories: &[UserStory], schema: &StorySchema) -> Result<(), StoryError> {
    let mut out = csv::Writer::from_writer(writer);
    let with_source = schema.source_column.is_some() && stories.iter().any(|s| s.source.is_some());
    let write_err = |e: csv::Error| StoryError::Write(e.to_string());

    let mut header = vec![schema.id_column.as_str(), schema.description_column.as_str()];
    if with_source {
        header.push(schema.source_column.as_deref().unwrap_or("source"));
    }
    out.write_record(&header).map_err(write_err)?;
    for story in stories {
        let mut row = vec![story.id.as_str(), story.description.as_str()];
        if with_source {
            row.push(story.source.as_deref().unwrap_or(""));
        }
        out.write_record(&row).map_err(write_err)?;
    }
    out.flush().map_err(|e| StoryError::Write(e.to_string()))
}
