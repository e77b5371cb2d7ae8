//! Stage execution: each stage declares its inputs, loads them from disk,
//! and writes its artifacts, so outputs depend only on declared inputs
//! plus the configuration.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brown::{induce_clusters, ClusterHierarchy};
use crate::cascade::shape_distribution;
use crate::chunker::{
    chunk, load_conll_file, load_mixture, load_model, save_model, train, TrainOptions,
};
use crate::corpus::{ingest_lines, CorpusStore};
use crate::diffusion::{
    adoption_exposure_distribution, compute_stats, load_stats, load_tuples, replay_entities,
    report_rows, save_stats, save_tuples, split_entities, write_report_csv, write_stats_csv,
    write_tau_histogram, SplitSpec,
};
use crate::ioutil;
use crate::mentions::{entity_key, load_mentions, save_mentions, MentionIndex, MentionRecord};
use crate::synthgen;
use crate::textproc;
use crate::Scalar;

use super::config::PipelineConfig;
use super::manifest::RunManifest;
use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Ingest,
    Tokenize,
    Clusters,
    TrainNer,
    Annotate,
    Cascades,
    Exposure,
    DiffusionTrain,
    DiffusionEval,
    Report,
}

impl Stage {
    pub fn parse(s: &str) -> Result<Option<Stage>, PipelineError> {
        Ok(Some(match s {
            "synth" => Stage::Synth,
            "ingest" => Stage::Ingest,
            "tokenize" => Stage::Tokenize,
            "clusters" => Stage::Clusters,
            "train-ner" => Stage::TrainNer,
            "annotate" => Stage::Annotate,
            "cascades" => Stage::Cascades,
            "exposure" => Stage::Exposure,
            "diffusion-train" => Stage::DiffusionTrain,
            "diffusion-eval" => Stage::DiffusionEval,
            "report" => Stage::Report,
            "all" => return Ok(None),
            other => {
                return Err(PipelineError::Config(format!("unknown stage {other:?}")));
            }
        }))
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Tokenize => "tokenize",
            Stage::Clusters => "clusters",
            Stage::TrainNer => "train-ner",
            Stage::Annotate => "annotate",
            Stage::Cascades => "cascades",
            Stage::Exposure => "exposure",
            Stage::DiffusionTrain => "diffusion-train",
            Stage::DiffusionEval => "diffusion-eval",
            Stage::Report => "report",
        }
    }
}

/// The stage sequence for `all` under a given configuration.
pub fn full_plan(config: &PipelineConfig) -> Vec<Stage> {
    let mut plan = Vec::new();
    if config.synth.is_some() {
        plan.push(Stage::Synth);
    }
    plan.extend([Stage::Ingest, Stage::Tokenize, Stage::Clusters]);
    if config.mentions.mode == "model" {
        plan.push(Stage::TrainNer);
    }
    plan.extend([
        Stage::Annotate,
        Stage::Cascades,
        Stage::Exposure,
        Stage::DiffusionTrain,
        Stage::DiffusionEval,
        Stage::Report,
    ]);
    plan
}

/// Run a stage (or the full plan for `None`), writing the manifest last.
pub fn run(config: &PipelineConfig, stage: Option<Stage>) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let plan = match stage {
        Some(s) => vec![s],
        None => full_plan(config),
    };
    check_external_inputs(config, &plan)?;

    if config.run.parallelism > 0 {
        // The global pool can only be installed once per process; later
        // runs keep the first setting.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.parallelism)
            .build_global();
    }

    let externals = external_inputs(config, &plan);
    let external_refs: Vec<&Path> = externals.iter().map(PathBuf::as_path).collect();
    let mut manifest = RunManifest::new(&config.canonical(), config.run.seed, &external_refs)?;

    for s in plan {
        info!("stage {} starting", s.name());
        let started = Instant::now();
        let artifacts = execute(config, s)?;
        let refs: Vec<&Path> = artifacts.iter().map(PathBuf::as_path).collect();
        manifest.record_stage(s.name(), &refs, started.elapsed().as_millis())?;
        info!("stage {} finished in {:?}", s.name(), started.elapsed());
    }
    manifest.save(&config.paths.out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// External (non-artifact) inputs consumed by the planned stages.
fn external_inputs(config: &PipelineConfig, plan: &[Stage]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for stage in plan {
        match stage {
            Stage::Ingest => {
                if config.synth.is_none() {
                    if let Some(p) = &config.paths.input {
                        out.push(p.clone());
                    }
                }
                if let Some(p) = &config.paths.subreddits {
                    out.push(p.clone());
                }
            }
            Stage::TrainNer => {
                if let Some(p) = &config.ner.manifest {
                    out.push(p.clone());
                } else if let Some(p) = &config.paths.train_conll {
                    out.push(p.clone());
                }
            }
            _ => {}
        }
    }
    out.dedup();
    out
}

fn check_external_inputs(config: &PipelineConfig, plan: &[Stage]) -> Result<(), PipelineError> {
    for stage in plan {
        match stage {
            Stage::Ingest if config.synth.is_none() => {
                let Some(input) = &config.paths.input else {
                    return Err(PipelineError::Config(
                        "paths.input is required (or configure [synth])".into(),
                    ));
                };
                // When running `ingest` alone after `synth`, the input is a
                // synth artifact instead; both are covered here.
                if !input.exists() {
                    return Err(PipelineError::Config(format!(
                        "paths.input does not exist: {}",
                        input.display()
                    )));
                }
                if let Some(subs) = &config.paths.subreddits {
                    if !subs.exists() {
                        return Err(PipelineError::Config(format!(
                            "paths.subreddits does not exist: {}",
                            subs.display()
                        )));
                    }
                }
            }
            Stage::TrainNer => {
                let source = config.ner.manifest.as_ref().or(config.paths.train_conll.as_ref());
                let Some(path) = source else {
                    return Err(PipelineError::Config(
                        "train-ner needs paths.train_conll or ner.manifest".into(),
                    ));
                };
                if !path.exists() {
                    return Err(PipelineError::Config(format!(
                        "training corpus does not exist: {}",
                        path.display()
                    )));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn execute(config: &PipelineConfig, stage: Stage) -> Result<Vec<PathBuf>, PipelineError> {
    match stage {
        Stage::Synth => stage_synth(config),
        Stage::Ingest => stage_ingest(config),
        Stage::Tokenize => stage_tokenize(config),
        Stage::Clusters => stage_clusters(config),
        Stage::TrainNer => stage_train_ner(config),
        Stage::Annotate => stage_annotate(config),
        Stage::Cascades => stage_cascades(config),
        Stage::Exposure => stage_exposure(config),
        Stage::DiffusionTrain => stage_diffusion_train(config),
        Stage::DiffusionEval => stage_diffusion_eval(config),
        Stage::Report => stage_report(config),
    }
}

fn require(path: &Path, producer: &'static str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::Prerequisite {
            missing: path.display().to_string(),
            producer,
        })
    }
}

fn open_store(config: &PipelineConfig) -> Result<CorpusStore, PipelineError> {
    require(&config.paths.store_dir.join("records.ndjson"), "ingest")?;
    CorpusStore::open(&config.paths.store_dir).map_err(|e| PipelineError::Data(e.to_string()))
}

fn open_mentions(
    config: &PipelineConfig,
    store: &CorpusStore,
) -> Result<MentionIndex, PipelineError> {
    let path = config.paths.out_dir.join("mentions.ndjson");
    require(&path, "annotate")?;
    let records = load_mentions(BufReader::new(
        File::open(&path).map_err(PipelineError::from_io)?,
    ))
    .map_err(|e| PipelineError::Data(e.to_string()))?;
    let (index, _) = MentionIndex::from_records(store, records)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    Ok(index)
}

// --- synth ----------------------------------------------------------------

fn stage_synth(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let synth = config.synth.as_ref().expect("synth stage requires [synth]");
    let out = &config.paths.out_dir;
    std::fs::create_dir_all(out).map_err(PipelineError::from_io)?;

    // Contact graph: ring plus seeded random chords up to the target
    // degree, then directed propagation probabilities from the choice set.
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(synth.seed);
    let users = synth.users;
    let mut contacts: Vec<(usize, usize)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    if users > 1 {
        for i in 0..users {
            let pair = (i.min((i + 1) % users), i.max((i + 1) % users));
            if seen.insert(pair) {
                contacts.push(pair);
            }
        }
        let target = users * synth.contacts_per_user / 2;
        let mut guard = 0;
        while contacts.len() < target && guard < target * 20 {
            guard += 1;
            let a = rng.gen_range(0..users);
            let b = rng.gen_range(0..users);
            if a != b && seen.insert((a.min(b), a.max(b))) {
                contacts.push((a.min(b), a.max(b)));
            }
        }
    }
    let mut propagation = std::collections::BTreeMap::new();
    if !synth.prop_choices.is_empty() {
        for &(a, b) in &contacts {
            propagation
                .insert((a, b), synth.prop_choices[rng.gen_range(0..synth.prop_choices.len())]);
            propagation
                .insert((b, a), synth.prop_choices[rng.gen_range(0..synth.prop_choices.len())]);
        }
    }
    let world = synthgen::PlantedWorld {
        users,
        entities: synthgen::make_entity_names(synth.entities, synth.seed),
        contacts,
        propagation,
        seeds_per_entity: synth.seeds_per_entity.max(1).min(users),
        subreddits: synth.subreddits.max(1),
        noise_threads: synth.noise_threads,
        noise_thread_posts: 6,
        depth_cap: 8,
        seed: synth.seed,
    };
    let generated = synthgen::generate(&world).map_err(|e| PipelineError::Data(e.to_string()))?;

    let corpus_path = out.join("synth_corpus.ndjson");
    ioutil::write_string(&corpus_path, &(generated.records.join("\n") + "\n"))
        .map_err(PipelineError::from_io)?;
    let mentions_path = out.join("truth_mentions.ndjson");
    let mut records = generated.mentions.clone();
    let mut buf = Vec::new();
    save_mentions(&mut records, &mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&mentions_path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;
    generated.truth.save(out).map_err(|e| PipelineError::Data(e.to_string()))?;

    Ok(vec![
        corpus_path,
        mentions_path,
        out.join("truth_activations.csv"),
        out.join("truth_trials.csv"),
        out.join("truth_propagations.csv"),
        out.join("truth_exposures.csv"),
    ])
}

// --- ingest ---------------------------------------------------------------

fn stage_ingest(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let input = config.input_path().expect("validated");
    if config.synth.is_some() {
        require(&input, "synth")?;
    }
    let filter = match &config.paths.subreddits {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(PipelineError::from_io)?;
            let set: std::collections::HashSet<String> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned)
                .collect();
            Some(set)
        }
    };

    let lines = ioutil::read_lines(&input).map_err(PipelineError::from_io)?;
    let (store, report) =
        ingest_lines(lines, filter.as_ref()).map_err(PipelineError::from_io)?;
    if store.is_empty() {
        return Err(PipelineError::Data(format!(
            "no records accepted from {} ({} rejected, {} filtered out)",
            input.display(),
            report.rejected(),
            report.filtered_out
        )));
    }
    store.save(&config.paths.store_dir).map_err(|e| PipelineError::Data(e.to_string()))?;

    std::fs::create_dir_all(&config.paths.out_dir).map_err(PipelineError::from_io)?;
    let report_path = config.paths.out_dir.join("ingest_report.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_string(&report_path, &(json + "\n")).map_err(PipelineError::from_io)?;

    Ok(vec![
        config.paths.store_dir.join("records.ndjson"),
        config.paths.store_dir.join("index.bin"),
        report_path,
    ])
}

// --- tokenize ---------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TokenRecord {
    post_id: String,
    sentences: Vec<SentenceRecord>,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    start: usize,
    end: usize,
    tokens: Vec<TokenCell>,
}

#[derive(Serialize, Deserialize)]
struct TokenCell {
    text: String,
    start: usize,
    end: usize,
}

fn stage_tokenize(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let store = open_store(config)?;
    let records: Vec<String> = store
        .posts()
        .par_iter()
        .map(|post| {
            let (_, sentences) = textproc::process(&post.body);
            let record = TokenRecord {
                post_id: post.post_id.clone(),
                sentences: sentences
                    .into_iter()
                    .map(|s| SentenceRecord {
                        start: s.span.start,
                        end: s.span.end,
                        tokens: s
                            .tokens
                            .into_iter()
                            .map(|t| TokenCell { text: t.text, start: t.span.start, end: t.span.end })
                            .collect(),
                    })
                    .collect(),
            };
            serde_json::to_string(&record).expect("token record serializes")
        })
        .collect();

    let path = config.paths.out_dir.join("tokens.ndjson");
    ioutil::write_atomic(&path, |w| {
        for line in &records {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
    .map_err(PipelineError::from_io)?;
    Ok(vec![path])
}

fn load_token_records(config: &PipelineConfig) -> Result<Vec<TokenRecord>, PipelineError> {
    let path = config.paths.out_dir.join("tokens.ndjson");
    require(&path, "tokenize")?;
    let mut out = Vec::new();
    for line in ioutil::read_lines(&path).map_err(PipelineError::from_io)? {
        let line = line.map_err(PipelineError::from_io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| PipelineError::Data(format!("tokens: {e}")))?,
        );
    }
    Ok(out)
}

// --- clusters ---------------------------------------------------------------

fn stage_clusters(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let records = load_token_records(config)?;
    // Cluster induction and lookup both use lowercased tokens.
    let sentences: Vec<Vec<String>> = records
        .iter()
        .flat_map(|r| {
            r.sentences
                .iter()
                .map(|s| s.tokens.iter().map(|t| t.text.to_lowercase()).collect::<Vec<_>>())
        })
        .filter(|s: &Vec<String>| !s.is_empty())
        .collect();
    let hierarchy = induce_clusters::<Scalar>(
        &sentences,
        config.cluster.active_set,
        config.cluster.classes,
    )
    .map_err(|e| PipelineError::Data(e.to_string()))?;

    let path = config.paths.out_dir.join("cluster_paths.tsv");
    let mut buf = Vec::new();
    hierarchy.save(&mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;
    Ok(vec![path])
}

fn load_hierarchy(config: &PipelineConfig) -> Result<ClusterHierarchy, PipelineError> {
    let path = config.paths.out_dir.join("cluster_paths.tsv");
    require(&path, "clusters")?;
    ClusterHierarchy::load(BufReader::new(File::open(&path).map_err(PipelineError::from_io)?))
        .map_err(|e| PipelineError::Data(e.to_string()))
}

// --- train-ner ----------------------------------------------------------------

fn stage_train_ner(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let sentences = match (&config.ner.manifest, &config.paths.train_conll) {
        (Some(manifest), _) => load_mixture(manifest),
        (None, Some(conll)) => load_conll_file(conll),
        (None, None) => {
            return Err(PipelineError::Config(
                "train-ner needs paths.train_conll or ner.manifest".into(),
            ))
        }
    }
    .map_err(|e| PipelineError::Data(e.to_string()))?;
    let hierarchy = load_hierarchy(config)?;

    let opts = TrainOptions::<Scalar> {
        c2: config.ner.c2,
        max_iters: config.ner.max_iters,
        grad_tol: 1e-4,
        seed: config.run.seed,
    };
    let (model, report) =
        train(&sentences, &hierarchy, &opts).map_err(|e| PipelineError::Data(e.to_string()))?;

    let model_path = config.paths.out_dir.join("ner_model.json");
    let mut buf = Vec::new();
    save_model(&model, &hierarchy, &mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&model_path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;

    let report_path = config.paths.out_dir.join("ner_report.json");
    let json = serde_json::json!({
        "final_objective": report.optimize.final_objective,
        "grad_norm": report.optimize.grad_norm,
        "iterations": report.optimize.iterations,
        "converged": report.optimize.converged,
        "n_features": report.n_features,
        "n_sentences": report.n_sentences,
        "repaired_labels": report.repaired_labels,
    });
    ioutil::write_string(&report_path, &(serde_json::to_string_pretty(&json).expect("json") + "\n"))
        .map_err(PipelineError::from_io)?;
    Ok(vec![model_path, report_path])
}

// --- annotate -------------------------------------------------------------------

fn stage_annotate(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out_path = config.paths.out_dir.join("mentions.ndjson");
    if config.mentions.mode == "truth" {
        let truth = config.paths.out_dir.join("truth_mentions.ndjson");
        require(&truth, "synth")?;
        std::fs::copy(&truth, &out_path).map_err(PipelineError::from_io)?;
        return Ok(vec![out_path]);
    }

    let store = open_store(config)?;
    let model_path = config.paths.out_dir.join("ner_model.json");
    require(&model_path, "train-ner")?;
    let (model, hierarchy) = load_model::<Scalar>(BufReader::new(
        File::open(&model_path).map_err(PipelineError::from_io)?,
    ))
    .map_err(|e| PipelineError::Data(e.to_string()))?;

    let mut records: Vec<MentionRecord> = store
        .posts()
        .par_iter()
        .map(|post| {
            let (_, sentences) = textproc::process(&post.body);
            let mut found = Vec::new();
            for sentence in sentences {
                let tokens: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
                if tokens.is_empty() {
                    continue;
                }
                let labels = model.decode(&tokens, &hierarchy);
                for mention in chunk(&labels, &tokens) {
                    found.push(MentionRecord {
                        entity: entity_key(&mention.text),
                        post_id: post.post_id.clone(),
                        author: post.author.clone(),
                        created_at: post.created_at,
                        surface: mention.text,
                    });
                }
            }
            found
        })
        .flatten()
        .collect();

    let mut buf = Vec::new();
    save_mentions(&mut records, &mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&out_path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;
    Ok(vec![out_path])
}

// --- cascades -------------------------------------------------------------------

fn stage_cascades(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let store = open_store(config)?;
    let mentions = open_mentions(config, &store)?;
    let entities: Vec<String> = mentions.entities().map(str::to_owned).collect();
    let table = shape_distribution(entities.iter().map(String::as_str), &store, &mentions)
        .map_err(|e| PipelineError::Data(e.to_string()))?;

    let csv_path = config.paths.out_dir.join("cascade_shapes.csv");
    let mut buf = Vec::new();
    table.write_csv(&mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&csv_path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;

    let top_path = config.paths.out_dir.join("cascade_top_shapes.txt");
    let mut buf = Vec::new();
    table
        .write_top_shapes(config.cascades.top_shapes, &mut buf)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&top_path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;
    Ok(vec![csv_path, top_path])
}

// --- exposure -------------------------------------------------------------------

fn stage_exposure(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let store = open_store(config)?;
    let mentions = open_mentions(config, &store)?;
    let top = mentions.top_entities(config.diffusion.top_n, config.diffusion.min_key_len);
    let dist =
        adoption_exposure_distribution(top.iter().map(String::as_str), &store, &mentions);

    let global_path = config.paths.out_dir.join("exposure_global.csv");
    ioutil::write_atomic(&global_path, |w| {
        writeln!(w, "k,count,frequency")?;
        let total = dist.total_activations.max(1);
        for (k, c) in &dist.global {
            writeln!(w, "{k},{c},{}", *c as f64 / total as f64)?;
        }
        Ok(())
    })
    .map_err(PipelineError::from_io)?;

    let entities_path = config.paths.out_dir.join("exposure_entities.csv");
    ioutil::write_atomic(&entities_path, |w| {
        writeln!(w, "entity,activations,mean_k")?;
        for (entity, per) in &dist.per_entity {
            writeln!(w, "{entity},{},{}", per.activations, per.mean_k())?;
        }
        Ok(())
    })
    .map_err(PipelineError::from_io)?;

    let pmf_path = config.paths.out_dir.join("exposure_entity_pmf.csv");
    ioutil::write_atomic(&pmf_path, |w| {
        writeln!(w, "entity,k,count,frequency")?;
        for (entity, per) in &dist.per_entity {
            let total = per.activations.max(1);
            for (k, c) in &per.counts {
                writeln!(w, "{entity},{k},{c},{}", *c as f64 / total as f64)?;
            }
        }
        Ok(())
    })
    .map_err(PipelineError::from_io)?;

    Ok(vec![global_path, entities_path, pmf_path])
}

// --- diffusion-train -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SplitFile {
    top_n: usize,
    train_fraction: f64,
    seed: u64,
    train: Vec<String>,
    test: Vec<String>,
}

fn stage_diffusion_train(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let store = open_store(config)?;
    let mentions = open_mentions(config, &store)?;
    let spec = SplitSpec {
        top_n: config.diffusion.top_n,
        train_fraction: config.diffusion.train_fraction,
        seed: config.diffusion.seed,
        min_key_len: config.diffusion.min_key_len,
    };
    let (train_set, test_set) =
        split_entities(&spec, &mentions).map_err(|e| PipelineError::Data(e.to_string()))?;
    let stats = compute_stats::<Scalar>(&train_set, &store, &mentions);

    let out = &config.paths.out_dir;
    let stats_path = out.join("influence_stats.json");
    let mut buf = Vec::new();
    save_stats(&stats, &store, &mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&stats_path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;

    let pairs_path = out.join("stats_pairs.csv");
    let users_path = out.join("stats_users.csv");
    let mut pairs_buf = Vec::new();
    let mut users_buf = Vec::new();
    write_stats_csv(&stats, &store, &mut pairs_buf, &mut users_buf)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&pairs_path, |w| w.write_all(&pairs_buf)).map_err(PipelineError::from_io)?;
    ioutil::write_atomic(&users_path, |w| w.write_all(&users_buf)).map_err(PipelineError::from_io)?;

    let tau_path = out.join("tau_hist.csv");
    let mut tau_buf = Vec::new();
    write_tau_histogram(&stats, &mut tau_buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&tau_path, |w| w.write_all(&tau_buf)).map_err(PipelineError::from_io)?;

    let split_path = out.join("split.json");
    let split = SplitFile {
        top_n: spec.top_n,
        train_fraction: spec.train_fraction,
        seed: spec.seed,
        train: train_set,
        test: test_set,
    };
    let json = serde_json::to_string_pretty(&split).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_string(&split_path, &(json + "\n")).map_err(PipelineError::from_io)?;

    Ok(vec![stats_path, pairs_path, users_path, tau_path, split_path])
}

fn load_split(config: &PipelineConfig) -> Result<SplitFile, PipelineError> {
    let path = config.paths.out_dir.join("split.json");
    require(&path, "diffusion-train")?;
    let text = std::fs::read_to_string(&path).map_err(PipelineError::from_io)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Data(format!("split.json: {e}")))
}

// --- diffusion-eval ------------------------------------------------------------

pub fn tuples_file_name(construct: crate::diffusion::Construct, variant: crate::diffusion::Variant) -> String {
    format!("tuples_{}_{}.csv", construct.as_str(), variant.as_str())
}

fn stage_diffusion_eval(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let store = open_store(config)?;
    let mentions = open_mentions(config, &store)?;
    let stats_path = config.paths.out_dir.join("influence_stats.json");
    require(&stats_path, "diffusion-train")?;
    let stats = load_stats::<Scalar>(
        BufReader::new(File::open(&stats_path).map_err(PipelineError::from_io)?),
        &store,
    )
    .map_err(|e| PipelineError::Data(e.to_string()))?;
    let split = load_split(config)?;

    let mut artifacts = Vec::new();
    for construct in config.constructs() {
        for variant in config.variants() {
            let tuples = replay_entities(&split.test, construct, variant, &stats, &store, &mentions);
            let path = config.paths.out_dir.join(tuples_file_name(construct, variant));
            let mut buf = Vec::new();
            save_tuples(&tuples, &mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
            ioutil::write_atomic(&path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;
            artifacts.push(path);
        }
    }
    Ok(artifacts)
}

// --- report ---------------------------------------------------------------------

fn stage_report(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = Vec::new();
    for construct in config.constructs() {
        for variant in config.variants() {
            let path = config.paths.out_dir.join(tuples_file_name(construct, variant));
            require(&path, "diffusion-eval")?;
            files.push(path);
        }
    }
    let path = report_from_files(config, &files)?;
    Ok(vec![path])
}

/// Score an explicit list of tuple files (e.g. from a shell glob); the
/// construct and variant are parsed from each file name.
pub fn report_from_files(
    config: &PipelineConfig,
    files: &[PathBuf],
) -> Result<PathBuf, PipelineError> {
    if files.is_empty() {
        return Err(PipelineError::Prerequisite {
            missing: "tuple files (tuples_*.csv)".into(),
            producer: "diffusion-eval",
        });
    }
    let mut files: Vec<&PathBuf> = files.iter().collect();
    files.sort();
    let mut sets = Vec::new();
    for path in files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let parts: Vec<&str> = name
            .strip_prefix("tuples_")
            .and_then(|s| s.strip_suffix(".csv"))
            .map(|s| s.split('_').collect())
            .unwrap_or_default();
        let [c, v] = parts[..] else {
            return Err(PipelineError::Data(format!(
                "cannot derive construct/variant from file name {name:?} (expected tuples_<C>_<variant>.csv)"
            )));
        };
        let construct =
            crate::diffusion::Construct::parse(c).map_err(|e| PipelineError::Data(e.to_string()))?;
        let variant =
            crate::diffusion::Variant::parse(v).map_err(|e| PipelineError::Data(e.to_string()))?;
        require(path, "diffusion-eval")?;
        let tuples = load_tuples::<Scalar>(BufReader::new(
            File::open(path).map_err(PipelineError::from_io)?,
        ))
        .map_err(|e| PipelineError::Data(e.to_string()))?;
        sets.push((construct, variant, tuples));
    }
    let rows = report_rows(&sets).map_err(|e| PipelineError::Data(e.to_string()))?;
    let path = config.paths.out_dir.join("report.csv");
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf).map_err(|e| PipelineError::Data(e.to_string()))?;
    ioutil::write_atomic(&path, |w| w.write_all(&buf)).map_err(PipelineError::from_io)?;
    Ok(path)
}
