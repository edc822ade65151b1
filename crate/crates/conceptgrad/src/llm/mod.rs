//! LLM integration: prompt templates, a retrying chat-completion client with
//! an offline record/replay mode, and response parsers.

pub mod client;
pub mod parse;

pub use client::{
    fixture_for, sha256_hex, write_fixtures, ClientConfig, Fixture, LlmClient, Mode, Transport,
    TransportResponse, API_KEY_ENV, NO_NETWORK_ENV,
};
pub use parse::{parse_groups, parse_sentences, parse_word_list};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// The three prompt bodies ship as data files and are embedded verbatim.
pub const EXTRACT_WORDS_TEMPLATE: &str = include_str!("../../prompts/extract_words.txt");
pub const GROUP_WORDS_TEMPLATE: &str = include_str!("../../prompts/group_words.txt");
pub const GENERATE_SENTENCES_TEMPLATE: &str = include_str!("../../prompts/generate_sentences.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptTemplate {
    /// Placeholders: `{sentence}`, `{prediction}`.
    ExtractWords,
    /// Placeholder: `{words}`.
    GroupWords,
    /// Placeholders: `{words}`, `{n}`.
    GenerateSentences,
}

impl PromptTemplate {
    pub fn body(&self) -> &'static str {
        match self {
            PromptTemplate::ExtractWords => EXTRACT_WORDS_TEMPLATE,
            PromptTemplate::GroupWords => GROUP_WORDS_TEMPLATE,
            PromptTemplate::GenerateSentences => GENERATE_SENTENCES_TEMPLATE,
        }
    }
}

/// Substitutes `{name}` placeholders in a single pass. Inserted values are
/// never rescanned, so braces inside values stay literal. A placeholder with
/// no binding is an error naming the placeholder; bindings the template does
/// not use are ignored. Only `{lowercase_identifier}` spans are treated as
/// placeholders; any other `<...>`/`{...}` text in the template is literal.
pub fn render(template: PromptTemplate, bindings: &BTreeMap<&str, String>) -> Result<String> {
    let body = template.body();
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = match after.find('}') {
            Some(c) => c,
            None => {
                // No closing brace: emit the rest literally.
                out.push_str(&rest[open..]);
                rest = "";
                break;
            }
        };
        let name = &after[..close];
        let is_placeholder =
            !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_');
        if is_placeholder {
            match bindings.get(name) {
                Some(value) => out.push_str(value),
                None => {
                    return Err(Error::Render(format!(
                        "unbound placeholder {{{name}}} in prompt template"
                    )))
                }
            }
        } else {
            out.push('{');
            out.push_str(name);
            out.push('}');
        }
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Convenience renderers with the documented placeholder sets.
pub fn render_extract_words(sentence: &str, prediction: u8) -> Result<String> {
    let mut b = BTreeMap::new();
    b.insert("sentence", sentence.to_string());
    b.insert("prediction", prediction.to_string());
    render(PromptTemplate::ExtractWords, &b)
}

pub fn render_group_words(words: &[String]) -> Result<String> {
    let mut b = BTreeMap::new();
    b.insert("words", words.join(", "));
    render(PromptTemplate::GroupWords, &b)
}

pub fn render_generate_sentences(words: &[String], n: usize) -> Result<String> {
    let mut b = BTreeMap::new();
    b.insert("words", words.join(", "));
    b.insert("n", n.to_string());
    render(PromptTemplate::GenerateSentences, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_prompt_binds_sentence_and_prediction() {
        let p = render_extract_words("you are a fool", 1).unwrap();
        assert!(p.contains("Sentence: you are a fool"));
        assert!(p.contains("Incorrect Prediction: 1"));
        // The response slot stays literal.
        assert!(p.contains("Words: <reordered or original phrase>"));
    }

    #[test]
    fn unbound_placeholder_is_named() {
        let b = BTreeMap::new();
        match render(PromptTemplate::GroupWords, &b) {
            Err(Error::Render(msg)) => assert!(msg.contains("{words}")),
            other => panic!("expected render error, got {other:?}"),
        }
    }

    #[test]
    fn inserted_values_are_not_rescanned() {
        let p = render_extract_words("braces {words} inside", 0).unwrap();
        assert!(p.contains("Sentence: braces {words} inside"));
    }

    #[test]
    fn generate_prompt_binds_count_and_words() {
        let words = vec!["idiot".to_string(), "fool".to_string()];
        let p = render_generate_sentences(&words, 25).unwrap();
        assert!(p.contains("generate 25 sentences"));
        assert!(p.ends_with("Words: idiot, fool\n"));
    }

    #[test]
    fn group_prompt_lists_words() {
        let words = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let p = render_group_words(&words).unwrap();
        assert!(p.contains("Words: a, b, c"));
        assert!(p.contains("Group 1: <words>"), "response slots stay literal");
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_extract_words("same text", 0).unwrap();
        let b = render_extract_words("same text", 0).unwrap();
        assert_eq!(a, b);
    }
}
