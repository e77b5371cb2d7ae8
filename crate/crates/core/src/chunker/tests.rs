use approx::assert_abs_diff_eq;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::brown::ClusterHierarchy;

use super::features::empty_hierarchy;
use super::*;

fn toks(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

fn labels(tags: &str) -> Vec<Label> {
    tags.split_whitespace().map(|t| Label::parse(t).unwrap()).collect()
}

fn hierarchy_with(entries: &[(&str, &str)]) -> ClusterHierarchy {
    let text: String =
        entries.iter().map(|(w, p)| format!("{p}\t{w}\t1\n")).collect();
    ClusterHierarchy::load(text.as_bytes()).unwrap()
}

// --- feature templates -------------------------------------------------

#[test]
fn shape_and_affix_templates_by_hand() {
    let tokens = toks(&["Conor", "McGregor", "is", "there"]);
    let feats = extract_features(&tokens, 1, &empty_hierarchy());
    for expected in [
        "w=mcgregor",
        "p2=mc",
        "p3=mcg",
        "s2=or",
        "s3=gor",
        "prev=conor",
        "next=is",
        "cur:title",
        "prev:title",
        "bg-1=conor|mcgregor",
        "bg+1=mcgregor|is",
        "br=<unk>",
    ] {
        assert!(feats.contains(&expected.to_string()), "missing {expected} in {feats:?}");
    }
    assert!(!feats.contains(&"cur:upper".to_string()));
    assert!(!feats.contains(&"cur:digit".to_string()));
}

#[test]
fn boundary_sentinels_at_sentence_edges() {
    let tokens = toks(&["Solo"]);
    let feats = extract_features(&tokens, 0, &empty_hierarchy());
    assert!(feats.contains(&"prev=<s>".to_string()));
    assert!(feats.contains(&"next=</s>".to_string()));
    assert!(feats.contains(&"bg-1=<s>|solo".to_string()));
}

#[test]
fn cluster_path_features_for_known_word() {
    let h = hierarchy_with(&[("mcgregor", "10")]);
    let tokens = toks(&["McGregor"]);
    let feats = extract_features(&tokens, 0, &h);
    assert!(feats.contains(&"br=1".to_string()));
    assert!(feats.contains(&"br=10".to_string()));
    assert!(!feats.contains(&"br=<unk>".to_string()));
}

#[test]
fn digit_and_upper_flags() {
    let tokens = toks(&["UFC", "199"]);
    let f0 = extract_features(&tokens, 0, &empty_hierarchy());
    assert!(f0.contains(&"cur:upper".to_string()));
    assert!(!f0.contains(&"cur:title".to_string()));
    assert!(f0.contains(&"next:digit".to_string()));
    let f1 = extract_features(&tokens, 1, &empty_hierarchy());
    assert!(f1.contains(&"cur:digit".to_string()));
    assert!(f1.contains(&"prev:upper".to_string()));
}

// --- training ----------------------------------------------------------

#[test]
fn all_outside_sentence_is_memorized() {
    let sent = LabeledSentence {
        tokens: toks(&["just", "plain", "words"]),
        labels: labels("O O O"),
    };
    let h = empty_hierarchy();
    let (model, report) = train::<f64>(&[sent.clone()], &h, &TrainOptions::default()).unwrap();
    assert!(report.optimize.final_objective.is_finite());
    assert_eq!(model.decode(&sent.tokens, &h), labels("O O O"));
}

#[test]
fn empty_training_set_is_an_error() {
    let h = empty_hierarchy();
    assert!(matches!(
        train::<f64>(&[], &h, &TrainOptions::default()),
        Err(ChunkerError::EmptyTrainingSet)
    ));
}

#[test]
fn malformed_bio_is_repaired_and_counted() {
    let sent = LabeledSentence {
        tokens: toks(&["x", "Conor", "y"]),
        labels: labels("O I O"),
    };
    let h = empty_hierarchy();
    let (_, report) = train::<f64>(&[sent], &h, &TrainOptions::default()).unwrap();
    assert_eq!(report.repaired_labels, 1);
}

fn tiny_corpus() -> Vec<LabeledSentence> {
    vec![
        LabeledSentence {
            tokens: toks(&["Conor", "McGregor", "fought", "well"]),
            labels: labels("B I O O"),
        },
        LabeledSentence {
            tokens: toks(&["everyone", "liked", "Gunnar", "Nelson"]),
            labels: labels("O O B I"),
        },
        LabeledSentence { tokens: toks(&["nothing", "here"]), labels: labels("O O") },
    ]
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let corpus = tiny_corpus();
    let h = empty_hierarchy();

    // Encode through the training path, then probe the objective directly.
    let (model, _) = train::<f64>(
        &corpus,
        &h,
        &TrainOptions { max_iters: 1, ..Default::default() },
    )
    .unwrap();
    let n_params = model.n_features() * N_LABELS + N_LABELS * N_LABELS;

    let mut encoded = Vec::new();
    for s in &corpus {
        let feats = (0..s.tokens.len())
            .map(|pos| {
                extract_features(&s.tokens, pos, &h)
                    .into_iter()
                    .filter_map(|n| model.feature_id(&n))
                    .collect()
            })
            .collect();
        encoded.push(super::crf::Encoded {
            feats,
            labels: s.labels.iter().map(|l| l.idx() as u8).collect(),
        });
    }

    let c2 = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let w: Vec<f64> = (0..n_params).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, grad) = super::crf::objective(&w, c2, &encoded);

    let hstep = 1e-5;
    let mut max_rel = 0.0f64;
    for _ in 0..25 {
        let k = rng.gen_range(0..n_params);
        let mut wp = w.clone();
        wp[k] += hstep;
        let (fp, _) = super::crf::objective(&wp, c2, &encoded);
        wp[k] -= 2.0 * hstep;
        let (fm, _) = super::crf::objective(&wp, c2, &encoded);
        let numeric = (fp - fm) / (2.0 * hstep);
        let denom = numeric.abs().max(grad[k].abs()).max(1e-8);
        max_rel = max_rel.max((numeric - grad[k]).abs() / denom);
    }
    assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
}

// --- decoding ----------------------------------------------------------

#[test]
fn zero_weight_model_decodes_all_b_by_tie_rule() {
    let h = empty_hierarchy();
    let model = SequenceModel::from_parts(Default::default(), vec![0.0; 9], 0.1);
    let tokens = toks(&["a", "b", "c"]);
    assert_eq!(model.decode(&tokens, &h), labels("B B B"));
}

fn random_model(rng: &mut ChaCha8Rng, tokens: &[String], h: &ClusterHierarchy) -> SequenceModel<f64> {
    // Intern the features these tokens actually produce, random weights.
    let mut ids = std::collections::HashMap::new();
    for pos in 0..tokens.len() {
        for name in extract_features(tokens, pos, h) {
            let next = ids.len() as u32;
            ids.entry(name).or_insert(next);
        }
    }
    let n = ids.len() * N_LABELS + N_LABELS * N_LABELS;
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SequenceModel::from_parts(ids, weights, 0.1)
}

#[test]
fn decode_matches_exhaustive_enumeration() {
    let h = empty_hierarchy();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let words = ["Conor", "fought", "UFC", "199", "there", "Gunnar"];
    for _ in 0..60 {
        let n = rng.gen_range(1..=4);
        let tokens: Vec<String> =
            (0..n).map(|_| words[rng.gen_range(0..words.len())].to_owned()).collect();
        let model = random_model(&mut rng, &tokens, &h);
        let feats = model.encode_tokens(&tokens, &h);

        let decoded = model.decode(&tokens, &h);
        let decoded_score = model.sequence_score(&feats, &decoded);

        let mut best = f64::NEG_INFINITY;
        for mask in 0..3usize.pow(n as u32) {
            let mut m = mask;
            let path: Vec<Label> = (0..n)
                .map(|_| {
                    let l = Label::from_idx(m % 3);
                    m /= 3;
                    l
                })
                .collect();
            best = best.max(model.sequence_score(&feats, &path));
        }
        assert_abs_diff_eq!(decoded_score, best, epsilon = 1e-9);
    }
}

// --- chunk extraction --------------------------------------------------

#[test]
fn worked_example_mentions() {
    let tokens = toks(&[
        "There", "are", "still", "good", "fighters", "on", "this", "card", ".", "Conor",
        "McGregor", "is", "there", "and", "so", "is", "Gunnar", "Nelson", ".",
    ]);
    let tags = labels("O O O O O O O O O B I O O O O O B I O");
    let mentions: Vec<String> = chunk(&tags, &tokens).into_iter().map(|m| m.text).collect();
    assert_eq!(mentions, vec!["Conor McGregor", "Gunnar Nelson"]);
}

#[test]
fn all_outside_yields_no_mentions() {
    let tokens = toks(&["a", "b"]);
    assert!(chunk(&labels("O O"), &tokens).is_empty());
}

#[test]
fn chunk_at_sentence_end_and_orphan_i() {
    let tokens = toks(&["saw", "Conor"]);
    let got = chunk(&labels("O B"), &tokens);
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].text, "Conor");
    assert_eq!((got[0].start, got[0].end), (1, 2));
    // Orphan I opens a chunk.
    let got = chunk(&labels("O I"), &tokens);
    assert_eq!(got[0].text, "Conor");
    // B after I closes the previous chunk.
    let tokens3 = toks(&["Conor", "McGregor", "Nelson"]);
    let got = chunk(&labels("B I B"), &tokens3);
    assert_eq!(got.len(), 2);
    assert_eq!(got[0].text, "Conor McGregor");
    assert_eq!(got[1].text, "Nelson");
}

// --- scoring -----------------------------------------------------------

#[test]
fn f_scores_from_published_precision_recall() {
    // F1 from P=66.32%, R=67.11%.
    assert_abs_diff_eq!(f_beta_percent(66.32, 67.11, 1.0), 66.71, epsilon = 0.01);
    // Balanced inputs are a fixed point for any beta.
    for beta in [0.5, 1.0, 2.0, 3.0] {
        assert_abs_diff_eq!(f_beta_score(0.42, 0.42, beta), 0.42, epsilon = 1e-12);
    }
    // Hand evaluation at beta = 2: 5 * 1.0 * 0.5 / (4 * 1.0 + 0.5).
    assert_abs_diff_eq!(f_beta_score(1.0, 0.5, 2.0), 0.5556, epsilon = 1e-4);
}

#[test]
fn beta_moves_f_toward_recall() {
    let (p, r): (f64, f64) = (0.9, 0.3);
    let mut prev = f_beta_score(p, r, 1.0);
    for beta in [2.0, 4.0, 8.0] {
        let cur = f_beta_score(p, r, beta);
        assert!((cur - r).abs() < (prev - r).abs(), "beta {beta} did not move toward recall");
        prev = cur;
    }
    assert!(f_beta_score(p, r, 1.0) >= r.min(p));
    assert!(f_beta_score(p, r, 1.0) <= r.max(p));
}

#[test]
fn chunk_evaluation_counts_exact_boundaries() {
    let gold = vec![labels("B I O B"), labels("O O")];
    let pred = vec![labels("B I O O"), labels("B O")];
    let score = evaluate_chunks::<f64>(&gold, &pred, 2.0).unwrap();
    assert_eq!(score.gold_chunks, 2);
    assert_eq!(score.predicted_chunks, 2);
    assert_eq!(score.correct_chunks, 1);
    assert_abs_diff_eq!(score.precision, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(score.recall, 0.5, epsilon = 1e-12);
    // Boundary mismatch is not a match.
    let gold = vec![labels("B I I")];
    let pred = vec![labels("B I O")];
    let score = evaluate_chunks::<f64>(&gold, &pred, 2.0).unwrap();
    assert_eq!(score.correct_chunks, 0);
}

#[test]
fn evaluation_is_permutation_symmetric_and_checks_lengths() {
    let gold = vec![labels("B O"), labels("O B I"), labels("B")];
    let pred = vec![labels("B O"), labels("B O O"), labels("O")];
    let s1 = evaluate_chunks::<f64>(&gold, &pred, 2.0).unwrap();
    let perm = [2, 0, 1];
    let gold_p: Vec<_> = perm.iter().map(|&i| gold[i].clone()).collect();
    let pred_p: Vec<_> = perm.iter().map(|&i| pred[i].clone()).collect();
    let s2 = evaluate_chunks::<f64>(&gold_p, &pred_p, 2.0).unwrap();
    assert_eq!(s1, s2);

    assert!(matches!(
        evaluate_chunks::<f64>(&gold[..1], &pred, 2.0),
        Err(ChunkerError::LengthMismatch { .. })
    ));
}

// --- separable corpus --------------------------------------------------

pub(super) fn separable_corpus(rng: &mut ChaCha8Rng, n_sentences: usize) -> Vec<LabeledSentence> {
    let fillers = ["the", "fight", "was", "great", "last", "night", "honestly", "wow"];
    let entities = [
        ("Zorgax", "Prime"),
        ("Quible", "Vast"),
        ("Mondo", "Reka"),
        ("Tilda", "Vorn"),
    ];
    (0..n_sentences)
        .map(|_| {
            let mut tokens = Vec::new();
            let mut tags = Vec::new();
            for _ in 0..rng.gen_range(2..5) {
                tokens.push(fillers[rng.gen_range(0..fillers.len())].to_owned());
                tags.push(Label::O);
            }
            let (a, b) = entities[rng.gen_range(0..entities.len())];
            tokens.push(a.to_owned());
            tags.push(Label::B);
            tokens.push(b.to_owned());
            tags.push(Label::I);
            for _ in 0..rng.gen_range(1..4) {
                tokens.push(fillers[rng.gen_range(0..fillers.len())].to_owned());
                tags.push(Label::O);
            }
            LabeledSentence { tokens, labels: tags }
        })
        .collect()
}

#[test]
fn separable_corpus_reaches_perfect_training_f1() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let corpus = separable_corpus(&mut rng, 40);
    let h = empty_hierarchy();
    let (model, _) = train::<f64>(&corpus, &h, &TrainOptions::default()).unwrap();

    let gold: Vec<Vec<Label>> = corpus.iter().map(|s| s.labels.clone()).collect();
    let pred: Vec<Vec<Label>> = corpus.iter().map(|s| model.decode(&s.tokens, &h)).collect();
    let score = evaluate_chunks::<f64>(&gold, &pred, 2.0).unwrap();
    assert_abs_diff_eq!(score.f1, 1.0, epsilon = 1e-9);

    // Held-out sentences from the same generator.
    let heldout = separable_corpus(&mut rng, 30);
    let gold: Vec<Vec<Label>> = heldout.iter().map(|s| s.labels.clone()).collect();
    let pred: Vec<Vec<Label>> = heldout.iter().map(|s| model.decode(&s.tokens, &h)).collect();
    let score = evaluate_chunks::<f64>(&gold, &pred, 2.0).unwrap();
    assert!(score.f1 >= 0.95, "held-out F1 {}", score.f1);
}

// --- model file --------------------------------------------------------

#[test]
fn model_file_roundtrip_preserves_decoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let corpus = separable_corpus(&mut rng, 20);
    let h = hierarchy_with(&[("zorgax", "01"), ("the", "10"), ("fight", "11")]);
    let (model, _) = train::<f64>(&corpus, &h, &TrainOptions::default()).unwrap();

    let mut buf = Vec::new();
    save_model(&model, &h, &mut buf).unwrap();
    let (loaded, loaded_h) = load_model::<f64>(&buf[..]).unwrap();

    assert_eq!(loaded.n_features(), model.n_features());
    assert_eq!(loaded_h.path("zorgax"), Some("01"));
    for s in &corpus {
        assert_eq!(loaded.decode(&s.tokens, &loaded_h), model.decode(&s.tokens, &h));
    }

    // Serialization is deterministic.
    let mut buf2 = Vec::new();
    save_model(&model, &h, &mut buf2).unwrap();
    assert_eq!(buf, buf2);
}

// --- conll loading -----------------------------------------------------

#[test]
fn conll_parsing_and_class_collapse() {
    let text = "Conor B-PER\nMcGregor I-PER\nfought O\n\nnothing O\n";
    let sents = load_conll(text.as_bytes()).unwrap();
    assert_eq!(sents.len(), 2);
    assert_eq!(sents[0].labels, labels("B I O"));
    assert_eq!(sents[0].tokens[1], "McGregor");

    assert!(load_conll(&b"lonely\n"[..]).is_err());
    assert!(load_conll(&b"tok X\n"[..]).is_err());
}

#[test]
fn mixture_manifest_respects_token_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = dir.path().join("one.conll");
    std::fs::write(&c1, "a O\nb O\n\nc O\nd O\n\ne O\n").unwrap();
    let c2 = dir.path().join("two.conll");
    std::fs::write(&c2, "x B\ny I\n\nz O\n").unwrap();
    let manifest = dir.path().join("mix.tsv");
    std::fs::write(&manifest, "one.conll\t3\ntwo.conll\t2\n").unwrap();

    let sents = load_mixture(&manifest).unwrap();
    // one.conll: first sentence (2 tokens) + second (2 tokens, budget hit at 3); two.conll: first only.
    assert_eq!(sents.len(), 3);
    let total: usize = sents.iter().map(|s| s.tokens.len()).sum();
    assert_eq!(total, 6);
    assert_eq!(sents[2].tokens, toks(&["x", "y"]));
}
