/// Cuts `text` to at most `max_chars` characters, preferring the last
/// whitespace boundary inside the budget and falling back to a hard cut.
/// Text within budget is returned unchanged.
pub fn truncate_abstract(text: &str, max_chars: usize) -> &str {
    assert!(max_chars > 0, "max_chars must be positive");
    let Some((cut, next)) = text.char_indices().nth(max_chars).map(|(b, c)| (b, c)) else {
        return text;
    };
    let prefix = &text[..cut];
    if next.is_whitespace() {
        return prefix.trim_end();
    }
    match prefix.char_indices().rev().find(|(_, c)| c.is_whitespace()) {
        Some((ws, _)) => prefix[..ws].trim_end(),
        None => prefix,
    }
}
