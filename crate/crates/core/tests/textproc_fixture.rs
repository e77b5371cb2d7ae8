//! Sentence splitter checked against a hand-labelled corpus of noisy posts.

use std::path::Path;

use entidiff::textproc::{split_sentences, tokenize};

#[derive(serde::Deserialize)]
struct Case {
    text: String,
    sentences: Vec<String>,
}

fn load_cases() -> Vec<Case> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sentences.json");
    let raw = std::fs::read_to_string(path).unwrap();
    serde_json::from_str(&raw).unwrap()
}

#[test]
fn splitter_matches_hand_labelled_corpus() {
    let cases = load_cases();
    assert_eq!(cases.len(), 50);
    for (i, case) in cases.iter().enumerate() {
        let got: Vec<&str> =
            split_sentences(&case.text).iter().map(|s| s.slice(&case.text)).collect();
        assert_eq!(got, case.sentences, "case {i}: {:?}", case.text);
    }
}

#[test]
fn fixture_sentences_tokenize_cleanly() {
    for case in load_cases() {
        for sentence in &case.sentences {
            let toks = tokenize(sentence);
            assert!(toks.iter().all(|t| !t.text.is_empty()));
            let total: usize = toks.iter().map(|t| t.text.len()).sum();
            assert!(total <= sentence.len());
            for w in toks.windows(2) {
                assert!(w[0].span.end <= w[1].span.start, "overlap in {sentence:?}");
            }
        }
    }
}
