//! Records LLM exchanges as prompt-hash fixtures and replays them offline,
//! which is how the word-extraction, word-grouping, and sentence-generation
//! prompts run deterministically with no network (NO_NETWORK=1 forces this
//! mode everywhere).
//!
//! Run with: cargo run --example offline_llm_fixtures

use conceptgrad::llm::{
    fixture_for, parse_groups, parse_sentences, parse_word_list, render_extract_words,
    render_generate_sentences, render_group_words, write_fixtures, ClientConfig, LlmClient,
};
use conceptgrad::Error;

fn main() -> conceptgrad::Result<()> {
    // The three prompt templates, rendered exactly as the pipeline would.
    let extract_prompt = render_extract_words("you are a vulgar idiot", 1)?;
    let group_prompt = render_group_words(&[
        "vulgar".into(),
        "idiot".into(),
        "moron".into(),
        "crude".into(),
    ])?;
    let generate_prompt =
        render_generate_sentences(&["idiot".into(), "moron".into()], 2)?;
    println!("extract prompt begins: {:?}...", &extract_prompt[..60]);

    // Record the responses once (in a real run, from a live session).
    let fixtures = vec![
        fixture_for(&extract_prompt, "vulgar, idiot"),
        fixture_for(&group_prompt, "group 1: vulgar, crude\ngroup 2: idiot, moron"),
        fixture_for(
            &generate_prompt,
            "1. you are such a fool\n2. nobody respects a coward like you",
        ),
    ];
    let path = std::env::temp_dir().join("conceptgrad_example_fixtures.jsonl");
    write_fixtures(&fixtures, &path)?;
    println!("recorded {} fixtures -> {}", fixtures.len(), path.display());

    // Replay: identical prompts hit the recorded responses byte-for-byte.
    let client = LlmClient::offline_from_file(ClientConfig::default(), &path)?;
    let words = parse_word_list(&client.complete(&extract_prompt)?)?;
    println!("extracted words: {words:?}");
    let groups = parse_groups(&client.complete(&group_prompt)?)?;
    println!("word groups: {groups:?}");
    let sentences = parse_sentences(&client.complete(&generate_prompt)?)?;
    println!("generated sentences: {sentences:?}");

    // A prompt that was never recorded fails loudly with its lookup hash,
    // rather than silently inventing a response.
    match client.complete("this prompt was never recorded") {
        Err(Error::FixtureMiss(hash)) => {
            println!("unrecorded prompt -> fixture miss for hash {}...", &hash[..12]);
        }
        other => panic!("expected a fixture miss, got {other:?}"),
    }
    Ok(())
}
