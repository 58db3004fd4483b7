use super::{GherkinDocument, LineContext, RawLine, Step, Tag, TextLine};

const HEADER_INDENT: &str = "  ";
const BODY_INDENT: &str = "    ";

enum BodyLine<'a> {
    Text(&'a TextLine),
    Step(&'a Step),
    Raw(&'a RawLine),
}

impl BodyLine<'_> {
    fn line(&self) -> usize {
        match self {
            BodyLine::Text(t) => t.line,
            BodyLine::Step(s) => s.line,
            BodyLine::Raw(r) => r.line,
        }
    }

    fn render(&self) -> String {
        match self {
            BodyLine::Text(t) => t.text.clone(),
            BodyLine::Step(s) if s.text.is_empty() => s.keyword.to_string(),
            BodyLine::Step(s) => format!("{} {}", s.keyword, s.text),
            BodyLine::Raw(r) => r.text.clone(),
        }
    }
}

/// Emits canonical Gherkin with LF line endings. Raw lines are written
/// verbatim at their original position within their container.
pub fn serialize(doc: &GherkinDocument) -> String {
    let mut out = String::new();
    let mut push = |indent: &str, text: &str| {
        out.push_str(indent);
        out.push_str(text);
        out.push('\n');
    };

    let (top_level, header_raw): (Vec<&RawLine>, Vec<&RawLine>) =
        doc.header_raw.iter().partition(|r| r.context == LineContext::TopLevel);
    for raw in &top_level {
        push("", &raw.text);
    }

    let mut blocks: Vec<Vec<(String, String)>> = Vec::new();

    let mut header = Vec::new();
    if let Some(name) = &doc.feature_name {
        if !doc.feature_tags.is_empty() {
            header.push((String::new(), tag_line(&doc.feature_tags)));
        }
        header.push((String::new(), keyword_line("Feature", name)));
    }
    let mut items: Vec<BodyLine> = doc.feature_description.iter().map(BodyLine::Text).collect();
    items.extend(header_raw.into_iter().map(BodyLine::Raw));
    header.extend(body(items, HEADER_INDENT));
    if !header.is_empty() {
        blocks.push(header);
    }

    if let Some(bg) = &doc.background {
        let mut block = vec![(HEADER_INDENT.to_string(), keyword_line("Background", &bg.name))];
        let mut items: Vec<BodyLine> = bg.description.iter().map(BodyLine::Text).collect();
        items.extend(bg.steps.iter().map(BodyLine::Step));
        items.extend(bg.raw_lines.iter().map(BodyLine::Raw));
        block.extend(body(items, BODY_INDENT));
        blocks.push(block);
    }

    for sc in &doc.scenarios {
        let mut block = Vec::new();
        if !sc.tags.is_empty() {
            block.push((HEADER_INDENT.to_string(), tag_line(&sc.tags)));
        }
        block.push((HEADER_INDENT.to_string(), keyword_line("Scenario", &sc.name)));
        let mut items: Vec<BodyLine> = sc.description.iter().map(BodyLine::Text).collect();
        items.extend(sc.steps.iter().map(BodyLine::Step));
        items.extend(sc.raw_lines.iter().map(BodyLine::Raw));
        block.extend(body(items, BODY_INDENT));
        blocks.push(block);
    }

    if !doc.trailing_raw.is_empty() {
        blocks.push(
            doc.trailing_raw
                .iter()
                .map(|r| (HEADER_INDENT.to_string(), r.text.clone()))
                .collect(),
        );
    }

    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            push("", "");
        }
        for (indent, text) in block {
            push(indent, text);
        }
    }
    out
}

fn body(mut items: Vec<BodyLine>, indent: &str) -> Vec<(String, String)> {
    items.sort_by_key(BodyLine::line);
    items.iter().map(|item| (indent.to_string(), item.render())).collect()
}

fn keyword_line(keyword: &str, name: &str) -> String {
    if name.is_empty() {
        format!("{keyword}:")
    } else {
        format!("{keyword}: {name}")
    }
}

fn tag_line(tags: &[Tag]) -> String {
    tags.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(" ")
}
