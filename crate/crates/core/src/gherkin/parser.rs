use super::{
    Background, GherkinDocument, GherkinError, LineContext, RawLine, Scenario, Step, StepKeyword, Tag, TextLine,
};

/// Parses raw bytes, rejecting only invalid UTF-8.
pub fn parse_bytes(bytes: &[u8], source_path: &str) -> Result<GherkinDocument, GherkinError> {
    let text = std::str::from_utf8(bytes).map_err(|_| GherkinError::InvalidEncoding(source_path.to_string()))?;
    Ok(parse_document(text, source_path))
}

/// Parses Gherkin text into a document. Never fails: anything that does not
/// fit the structure is preserved as a raw line.
pub fn parse_document(text: &str, source_path: &str) -> GherkinDocument {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut parser = Parser {
        doc: GherkinDocument {
            source_path: source_path.to_string(),
            ..Default::default()
        },
        section: Section::TopLevel,
        pending_tags: Vec::new(),
    };
    for (idx, line) in text.lines().enumerate() {
        parser.line(idx + 1, line.trim());
    }
    parser.finish()
}

/// Splits a tag line into tags, or `None` if any token is not a tag.
pub(super) fn tag_tokens(text: &str) -> Option<Vec<&str>> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let all_tags = !tokens.is_empty() && tokens.iter().all(|t| t.starts_with('@') && t.len() > 1);
    all_tags.then_some(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    TopLevel,
    Header,
    Background,
    Scenario,
}

enum LineKind<'a> {
    Feature(&'a str),
    Background(&'a str),
    Scenario(&'a str),
    Step(StepKeyword, &'a str),
    /// Outline, Examples, Rule and friends; always kept raw.
    Unsupported,
    Text,
}

const UNSUPPORTED_HEADERS: [&str; 6] = ["Scenario Outline", "Scenario Template", "Examples", "Scenarios", "Example", "Rule"];

fn header<'a>(text: &'a str, keyword: &str) -> Option<&'a str> {
    text.strip_prefix(keyword)
        .and_then(|rest| rest.strip_prefix(':'))
        .map(str::trim)
}

fn classify(text: &str) -> LineKind<'_> {
    if let Some(name) = header(text, "Feature") {
        return LineKind::Feature(name);
    }
    if let Some(name) = header(text, "Background") {
        return LineKind::Background(name);
    }
    if let Some(name) = header(text, "Scenario") {
        return LineKind::Scenario(name);
    }
    if UNSUPPORTED_HEADERS.iter().any(|k| header(text, k).is_some()) {
        return LineKind::Unsupported;
    }
    for keyword in StepKeyword::ALL {
        if let Some(rest) = text.strip_prefix(keyword.as_str()) {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                return LineKind::Step(keyword, rest.trim());
            }
        }
    }
    LineKind::Text
}

struct Parser {
    doc: GherkinDocument,
    section: Section,
    pending_tags: Vec<(usize, String)>,
}

impl Parser {
    fn context(&self) -> LineContext {
        match self.section {
            Section::TopLevel => LineContext::TopLevel,
            Section::Header => LineContext::InFeatureHeader,
            Section::Background => LineContext::InBackground,
            Section::Scenario => LineContext::InScenario,
        }
    }

    fn line(&mut self, number: usize, text: &str) {
        if text.is_empty() || text.starts_with('#') {
            return;
        }
        if tag_tokens(text).is_some() {
            self.pending_tags.push((number, text.to_string()));
            return;
        }

        match classify(text) {
            LineKind::Feature(name) if self.section == Section::TopLevel && !self.doc.has_feature() => {
                self.doc.feature_tags = self.take_tags();
                self.doc.feature_name = Some(name.to_string());
                self.doc.feature_line = Some(number);
                self.section = Section::Header;
            }
            LineKind::Scenario(name) => {
                let tags = self.take_tags();
                self.doc.scenarios.push(Scenario {
                    name: name.to_string(),
                    tags,
                    description: Vec::new(),
                    steps: Vec::new(),
                    raw_lines: Vec::new(),
                    line: number,
                });
                self.section = Section::Scenario;
            }
            LineKind::Background(name)
                if matches!(self.section, Section::TopLevel | Section::Header) && self.doc.background.is_none() =>
            {
                self.flush_orphans();
                self.doc.background = Some(Background {
                    name: name.to_string(),
                    description: Vec::new(),
                    steps: Vec::new(),
                    raw_lines: Vec::new(),
                    line: number,
                });
                self.section = Section::Background;
            }
            LineKind::Step(keyword, step_text) => {
                self.flush_orphans();
                let step = Step {
                    keyword,
                    text: step_text.to_string(),
                    line: number,
                };
                match self.section {
                    Section::Background => self.background().steps.push(step),
                    Section::Scenario => self.scenario().steps.push(step),
                    Section::TopLevel | Section::Header => self.push_raw(number, text),
                }
            }
            LineKind::Text => {
                self.flush_orphans();
                self.text(number, text);
            }
            // Unsupported constructs and out-of-place headers.
            _ => {
                self.flush_orphans();
                self.push_raw(number, text);
            }
        }
    }

    fn text(&mut self, number: usize, text: &str) {
        let line = TextLine {
            text: text.to_string(),
            line: number,
        };
        match self.section {
            Section::TopLevel => self.push_raw(number, text),
            Section::Header => self.doc.feature_description.push(line),
            Section::Background => {
                let bg = self.background();
                if bg.steps.is_empty() {
                    bg.description.push(line);
                } else {
                    self.push_raw(number, text);
                }
            }
            Section::Scenario => {
                let sc = self.scenario();
                if sc.steps.is_empty() {
                    sc.description.push(line);
                } else {
                    self.push_raw(number, text);
                }
            }
        }
    }

    fn background(&mut self) -> &mut Background {
        self.doc.background.as_mut().expect("background section without background")
    }

    fn scenario(&mut self) -> &mut Scenario {
        self.doc.scenarios.last_mut().expect("scenario section without scenario")
    }

    fn push_raw(&mut self, number: usize, text: &str) {
        let raw = RawLine {
            text: text.to_string(),
            line: number,
            context: self.context(),
        };
        match self.section {
            Section::TopLevel | Section::Header => self.doc.header_raw.push(raw),
            Section::Background => self.background().raw_lines.push(raw),
            Section::Scenario => self.scenario().raw_lines.push(raw),
        }
    }

    fn take_tags(&mut self) -> Vec<Tag> {
        self.pending_tags
            .drain(..)
            .flat_map(|(line, text)| {
                tag_tokens(&text)
                    .unwrap_or_default()
                    .into_iter()
                    .map(move |name| Tag {
                        name: name.to_string(),
                        line,
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Tags not followed by a feature or scenario header bind to nothing.
    fn flush_orphans(&mut self) {
        for (number, text) in std::mem::take(&mut self.pending_tags) {
            self.push_raw(number, &text);
        }
    }

    fn finish(mut self) -> GherkinDocument {
        let context = self.context();
        for (line, text) in std::mem::take(&mut self.pending_tags) {
            self.doc.trailing_raw.push(RawLine { text, line, context });
        }
        self.doc
    }
}
