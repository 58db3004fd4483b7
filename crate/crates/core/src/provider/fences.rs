fn is_opening_fence(line: &str) -> bool {
    line.trim()
        .strip_prefix("```")
        .is_some_and(|tag| !tag.contains('`') && !tag.contains(char::is_whitespace))
}

fn is_closing_fence(line: &str) -> bool {
    line.trim() == "```"
}

/// Returns the body of a markdown code fence when the text opens with one
/// (after blank lines) and the fence is closed; otherwise the input unchanged.
pub fn strip_fences(text: &str) -> String {
    let lines: Vec<&str> = text.lines().collect();
    let Some(open) = lines.iter().position(|l| !l.trim().is_empty()) else {
        return text.to_string();
    };
    if !is_opening_fence(lines[open]) {
        return text.to_string();
    }
    match lines[open + 1..].iter().position(|l| is_closing_fence(l)) {
        Some(offset) => lines[open + 1..open + 1 + offset].join("\n"),
        None => text.to_string(),
    }
}
