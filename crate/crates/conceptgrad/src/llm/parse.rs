//! Parsers for the three LLM response shapes: comma-separated word lists,
//! `Group k:` blocks, and numbered sentence lists.

use crate::error::{Error, Result};

/// Parses a comma-separated word list. Tolerates a leading `Words:` prefix,
/// trims whitespace, drops empties, lowercases. Zero entries is an error.
pub fn parse_word_list(raw: &str) -> Result<Vec<String>> {
    let mut text = raw.trim();
    for prefix in ["Words:", "words:", "WORDS:"] {
        if let Some(rest) = text.strip_prefix(prefix) {
            text = rest.trim();
            break;
        }
    }
    let words: Vec<String> = text
        .split(',')
        .map(|w| w.trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    if words.is_empty() {
        return Err(Error::Parse(format!("no words in response: {raw:?}")));
    }
    Ok(words)
}

/// Parses `Group k: a, b, c` lines into ordered groups. Lines that do not
/// start with a group marker are ignored; zero groups is an error.
pub fn parse_groups(raw: &str) -> Result<Vec<Vec<String>>> {
    let mut groups = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        let Some(rest) = strip_group_marker(line) else {
            continue;
        };
        if rest.trim().is_empty() {
            continue;
        }
        groups.push(parse_word_list(rest)?);
    }
    if groups.is_empty() {
        return Err(Error::Parse(format!(
            "no `Group k:` lines in response: {raw:?}"
        )));
    }
    Ok(groups)
}

/// `Group 12: rest` -> `rest`
fn strip_group_marker(line: &str) -> Option<&str> {
    let lower = line.to_lowercase();
    if !lower.starts_with("group") {
        return None;
    }
    let after = line[5..].trim_start();
    let digits = after.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let after_num = after[digits..].trim_start();
    after_num.strip_prefix(':')
}

/// Parses generated sentences. Accepts the `Sentence1: ... Sentence2: ...`
/// marker format or plain one-sentence-per-line; drops empties.
pub fn parse_sentences(raw: &str) -> Result<Vec<String>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(Error::Parse("empty sentence response".into()));
    }
    let mut sentences = Vec::new();
    if find_sentence_marker(trimmed, 0).is_some() {
        let mut positions = Vec::new();
        let mut from = 0;
        while let Some((start, body_start)) = find_sentence_marker(trimmed, from) {
            positions.push((start, body_start));
            from = body_start;
        }
        for (i, &(_, body_start)) in positions.iter().enumerate() {
            let end = positions
                .get(i + 1)
                .map(|&(next_start, _)| next_start)
                .unwrap_or(trimmed.len());
            let body = trimmed[body_start..end]
                .trim()
                .trim_end_matches(',')
                .trim();
            if !body.is_empty() {
                sentences.push(body.to_string());
            }
        }
    } else {
        for line in trimmed.lines() {
            let line = line.trim().trim_end_matches(',').trim();
            if line.is_empty() {
                continue;
            }
            // Tolerate simple numbering like "3. text" or "3) text".
            let line = strip_leading_number(line);
            if !line.is_empty() {
                sentences.push(line.to_string());
            }
        }
    }
    if sentences.is_empty() {
        return Err(Error::Parse(format!("no sentences in response: {raw:?}")));
    }
    Ok(sentences)
}

/// Finds `Sentence<digits>:` at or after `from`; returns (marker start,
/// index just past the colon).
fn find_sentence_marker(text: &str, from: usize) -> Option<(usize, usize)> {
    let hay = &text[from..];
    let mut offset = 0;
    while let Some(pos) = hay[offset..].find("Sentence") {
        let start = offset + pos;
        let after = &hay[start + "Sentence".len()..];
        let digits = after.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 && after[digits..].starts_with(':') {
            let body_start = from + start + "Sentence".len() + digits + 1;
            return Some((from + start, body_start));
        }
        offset = start + "Sentence".len();
    }
    None
}

fn strip_leading_number(line: &str) -> &str {
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return line;
    }
    let rest = &line[digits..];
    rest.strip_prefix('.')
        .or_else(|| rest.strip_prefix(')'))
        .or_else(|| rest.strip_prefix(':'))
        .map(str::trim_start)
        .unwrap_or(line)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_list_basic() {
        assert_eq!(
            parse_word_list("alpha, Beta , gamma").unwrap(),
            vec!["alpha", "beta", "gamma"]
        );
    }

    #[test]
    fn word_list_tolerates_prefix_and_empties() {
        assert_eq!(
            parse_word_list("Words: a,, b ,").unwrap(),
            vec!["a", "b"]
        );
    }

    #[test]
    fn word_list_empty_is_error() {
        assert!(matches!(parse_word_list("  , , "), Err(Error::Parse(_))));
    }

    #[test]
    fn groups_parse_in_order() {
        let raw = "Group 1: idiot, fool\nGroup 2: smash, wreck\n";
        assert_eq!(
            parse_groups(raw).unwrap(),
            vec![
                vec!["idiot".to_string(), "fool".to_string()],
                vec!["smash".to_string(), "wreck".to_string()],
            ]
        );
    }

    #[test]
    fn groups_skip_chatter_lines() {
        let raw = "Here are the groups:\nGroup 1: a, b\nThanks!\nGroup 2: c\n";
        assert_eq!(parse_groups(raw).unwrap().len(), 2);
    }

    #[test]
    fn groups_without_markers_error() {
        assert!(matches!(parse_groups("a, b, c"), Err(Error::Parse(_))));
    }

    #[test]
    fn sentences_marker_format() {
        let raw = "Sentence1: You never listen., Sentence2: Everyone is tired of you.";
        assert_eq!(
            parse_sentences(raw).unwrap(),
            vec!["You never listen.", "Everyone is tired of you."]
        );
    }

    #[test]
    fn sentences_line_format_with_numbering() {
        let raw = "1. First sentence here.\n2) Second one.\nThird plain line.";
        assert_eq!(
            parse_sentences(raw).unwrap(),
            vec!["First sentence here.", "Second one.", "Third plain line."]
        );
    }

    #[test]
    fn sentences_empty_is_error() {
        assert!(matches!(parse_sentences("   \n "), Err(Error::Parse(_))));
    }

    #[test]
    fn sentences_marker_format_multiline() {
        let raw = "Sentence1: one here\nSentence2: two here\nSentence3: three";
        assert_eq!(parse_sentences(raw).unwrap().len(), 3);
    }
}
