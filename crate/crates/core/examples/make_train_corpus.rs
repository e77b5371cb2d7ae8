//! Regenerates `data/mini/train.conll`, the bundled chunker training
//! corpus for the demo pipeline.
//!
//!     cargo run -p entidiff --example make_train_corpus -- data/mini/train.conll
//!
//! Sentences are filled templates tokenized by the crate's own tokenizer,
//! so training rows line up with what annotation sees. Entity names here
//! are disjoint from the demo corpus entities: the chunker has to rely on
//! shape and context features, not memorized surfaces.

use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use entidiff::textproc;

const TEMPLATES: [&str; 12] = [
    "i think {} is the real deal",
    "{} looked sharp tonight honestly",
    "cannot believe {} pulled that off",
    "so {} again huh that was wild",
    "been watching {} all week",
    "did {} really say that",
    "honestly {} deserved the win",
    "no way {} loses this one",
    "everyone keeps talking about {}",
    "that {} highlight was unreal",
    "my take is {} got robbed",
    "saw {} live once and it ruled",
];

const PLAIN: [&str; 8] = [
    "what a night that was",
    "this thread is getting long",
    "i agree with the take above",
    "source please or it did not happen",
    "the rematch cannot come soon enough",
    "lol that was a mess honestly",
    "can we talk about the judging",
    "upvoted because it is true",
];

const FIRST: [&str; 10] =
    ["Brando", "Celia", "Dorn", "Elva", "Fenwick", "Greta", "Harlo", "Imra", "Jasko", "Kezia"];
const LAST: [&str; 10] =
    ["Abbott", "Brisk", "Culver", "Dray", "Eston", "Flint", "Garrow", "Holt", "Ivers", "Juno"];

fn main() {
    let out_path = std::env::args().nth(1).unwrap_or_else(|| "data/mini/train.conll".into());
    let mut rng = ChaCha8Rng::seed_from_u64(2001);
    let mut out = String::new();
    let mut sentences = 0;

    while sentences < 90 {
        let with_entity = sentences % 3 != 2;
        let (text, entity) = if with_entity {
            let name = format!(
                "{} {}",
                FIRST[rng.gen_range(0..FIRST.len())],
                LAST[rng.gen_range(0..LAST.len())]
            );
            let template = TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
            (template.replace("{}", &name), Some(name))
        } else {
            (PLAIN[rng.gen_range(0..PLAIN.len())].to_string(), None)
        };

        let tokens = textproc::tokenize(&text);
        let entity_tokens: Vec<&str> = entity.as_deref().map(|e| e.split(' ').collect()).unwrap_or_default();
        let mut inside = 0usize;
        for token in &tokens {
            let tag = if inside > 0 {
                inside -= 1;
                "I"
            } else if entity_tokens.first() == Some(&token.text.as_str()) {
                inside = entity_tokens.len() - 1;
                "B"
            } else {
                "O"
            };
            writeln!(out, "{} {}", token.text, tag).unwrap();
        }
        writeln!(out).unwrap();
        sentences += 1;
    }

    std::fs::write(&out_path, out).unwrap();
    eprintln!("wrote {sentences} sentences to {out_path}");
}
