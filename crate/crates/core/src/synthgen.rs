//! Deterministic synthetic corpora with planted ground truth.
//!
//! Three generator families back the test oracles:
//!
//! - [`generate`]: a planted world with a contact graph, pairwise
//!   propagation probabilities, and simulated entity diffusion. Contacts
//!   are all established before any entity activity, so every planted
//!   propagation has the adopter interacting with the source beforehand.
//! - [`exposure_world`]: adoption events with exact planted exposure
//!   counts.
//! - [`plant_cascades`]: reply threads realizing given tree shapes with
//!   every post citing the entity.
//!
//! All output is newline-delimited records in the ingestion format, plus
//! ground-truth tables sufficient to score recovery. Timestamps are
//! strictly increasing integers, so time ordering is never ambiguous.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ioutil;
use crate::mentions::MentionRecord;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible world: {0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A diffusion world specification.
#[derive(Debug, Clone)]
pub struct PlantedWorld {
    pub users: usize,
    /// Entity keys (lowercased); surfaces are title-cased into post bodies.
    pub entities: Vec<String>,
    /// Unordered contact pairs, realized as reply threads before any
    /// entity activity.
    pub contacts: Vec<(usize, usize)>,
    /// Ordered `(source, adopter)` propagation probabilities. Every pair
    /// must be backed by a contact.
    pub propagation: BTreeMap<(usize, usize), f64>,
    /// Initial activators per entity.
    pub seeds_per_entity: usize,
    /// Subreddits to spread posts across.
    pub subreddits: usize,
    /// Extra entity-free discussion threads (adds interaction noise).
    pub noise_threads: usize,
    /// Posts per noise thread, capped by the depth limit.
    pub noise_thread_posts: usize,
    pub depth_cap: usize,
    pub seed: u64,
}

impl Default for PlantedWorld {
    fn default() -> Self {
        PlantedWorld {
            users: 10,
            entities: vec!["zorblax kane".into()],
            contacts: Vec::new(),
            propagation: BTreeMap::new(),
            seeds_per_entity: 1,
            subreddits: 3,
            noise_threads: 0,
            noise_thread_posts: 6,
            depth_cap: 8,
            seed: 7,
        }
    }
}

/// Ground-truth tables emitted next to the records.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    /// `(entity, user, time, post_id)` first citations.
    pub activations: Vec<(String, String, i64, String)>,
    /// `(entity, source, adopter, success)` causal Bernoulli draws.
    pub trials: Vec<(String, String, String, bool)>,
    /// `(entity, source, adopter, t_source, t_adopter)` for every pair
    /// where the adopter had contacted the source before adopting and the
    /// source adopted strictly earlier.
    pub propagations: Vec<(String, String, String, i64, i64)>,
    /// `(entity, user, exposures_at_activation)` planted by the exposure
    /// worlds.
    pub exposures: Vec<(String, String, u64)>,
}

/// A generated corpus: record lines, bypass mention records, and truth.
#[derive(Debug, Clone, Default)]
pub struct Generated {
    pub records: Vec<String>,
    pub mentions: Vec<MentionRecord>,
    pub truth: GroundTruth,
}

fn user_name(i: usize) -> String {
    format!("user{i:03}")
}

fn title_case(key: &str) -> String {
    key.split_whitespace()
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().collect::<String>() + cs.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

const BODY_TEMPLATES: [&str; 5] = [
    "i think {} is the real deal",
    "{} looked sharp tonight honestly",
    "cannot believe {} pulled that off",
    "so {} again huh that was wild",
    "been watching {} all week",
];

struct Emitter {
    records: Vec<String>,
    mentions: Vec<MentionRecord>,
    clock: i64,
    next_post: usize,
}

impl Emitter {
    fn new() -> Self {
        Emitter { records: Vec::new(), mentions: Vec::new(), clock: 1_000_000, next_post: 0 }
    }

    fn tick(&mut self) -> i64 {
        self.clock += 7;
        self.clock
    }

    fn post(&mut self, author: &str, sub: &str, parent: Option<&str>, thread: &str, body: &str) -> (String, i64) {
        let id = format!("s{:06}", self.next_post);
        self.next_post += 1;
        let at = self.tick();
        let parent_json = match parent {
            Some(p) => format!("\"{p}\""),
            None => "null".into(),
        };
        let body_json = serde_json::to_string(body).expect("string serializes");
        self.records.push(format!(
            r#"{{"id":"{id}","parent_id":{parent_json},"link_id":"{thread}","author":"{author}","subreddit":"{sub}","created_utc":{at},"body":{body_json}}}"#
        ));
        (id, at)
    }

    /// A citing root post; also logs the bypass mention record.
    fn cite(&mut self, author: &str, sub: &str, entity: &str, rng: &mut ChaCha8Rng) -> (String, i64) {
        let surface = title_case(entity);
        let template = BODY_TEMPLATES[rng.gen_range(0..BODY_TEMPLATES.len())];
        let body = template.replace("{}", &surface);
        let id = format!("s{:06}", self.next_post);
        let (id2, at) = self.post(author, sub, None, &id, &body);
        debug_assert_eq!(id, id2);
        self.mentions.push(MentionRecord {
            entity: entity.to_owned(),
            post_id: id,
            author: author.to_owned(),
            created_at: at,
            surface,
        });
        (id2, at)
    }
}

/// Generate a planted diffusion world.
pub fn generate(world: &PlantedWorld) -> Result<Generated, SynthError> {
    if world.users == 0 {
        return Err(SynthError::Infeasible("need at least one user".into()));
    }
    if world.seeds_per_entity == 0 || world.seeds_per_entity > world.users {
        return Err(SynthError::Infeasible(format!(
            "seeds per entity {} outside 1..={}",
            world.seeds_per_entity, world.users
        )));
    }
    let contact_set: HashSet<(usize, usize)> = world
        .contacts
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    for (&(v, u), &p) in &world.propagation {
        if !(0.0..=1.0).contains(&p) {
            return Err(SynthError::Infeasible(format!("propagation probability {p} out of range")));
        }
        if v >= world.users || u >= world.users {
            return Err(SynthError::Infeasible(format!("pair ({v}, {u}) outside the user set")));
        }
        if !contact_set.contains(&(v.min(u), v.max(u))) {
            return Err(SynthError::Infeasible(format!(
                "propagation probability for non-interacting pair ({v}, {u})"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(world.seed);
    let mut em = Emitter::new();
    let sub_of = |i: usize| format!("sub{:02}", i % world.subreddits.max(1));
    let mut truth = GroundTruth::default();

    // Contact phase: adopter-to-be replies to the source, both directions
    // become neighbours.
    let mut contact_time: HashMap<(usize, usize), i64> = HashMap::new();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); world.users];
    for (i, &(a, b)) in world.contacts.iter().enumerate() {
        if a == b || a >= world.users || b >= world.users {
            return Err(SynthError::Infeasible(format!("bad contact pair ({a}, {b})")));
        }
        let sub = sub_of(i);
        let (root, _) = em.post(&user_name(b), &sub, None, "pending", "starting a thread");
        // Rewrite thread id to the root's own id.
        let fixed = em.records.pop().unwrap().replace("\"link_id\":\"pending\"", &format!("\"link_id\":\"{root}\""));
        em.records.push(fixed);
        let (_, at) = em.post(&user_name(a), &sub, Some(&root), &root, "good point");
        let key = (a.min(b), a.max(b));
        contact_time.entry(key).or_insert(at);
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
        adj.dedup();
    }

    // Interaction noise: entity-free discussion trees.
    for n in 0..world.noise_threads {
        let sub = sub_of(n);
        let mut authors = vec![rng.gen_range(0..world.users)];
        let (root, _) = em.post(&user_name(authors[0]), &sub, None, "pending", "noise root");
        let fixed = em.records.pop().unwrap().replace("\"link_id\":\"pending\"", &format!("\"link_id\":\"{root}\""));
        em.records.push(fixed);
        let mut ids = vec![root.clone()];
        let mut depths = vec![0usize];
        for _ in 1..world.noise_thread_posts.max(1) {
            let parent = rng.gen_range(0..ids.len());
            if depths[parent] + 1 > world.depth_cap {
                continue;
            }
            let author = rng.gen_range(0..world.users);
            let (id, at) = em.post(&user_name(author), &sub, Some(&ids[parent].clone()), &root, "noise reply");
            let parent_author = authors[parent];
            if author != parent_author {
                let key = (author.min(parent_author), author.max(parent_author));
                contact_time.entry(key).or_insert(at);
                adjacency[author].push(parent_author);
                adjacency[parent_author].push(author);
            }
            ids.push(id);
            depths.push(depths[parent] + 1);
            authors.push(author);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
    }

    // Diffusion phase: independent-cascade simulation over the contact
    // graph, one Bernoulli trial per (activator, neighbour) edge.
    for entity in &world.entities {
        let mut order: Vec<usize> = (0..world.users).collect();
        order.shuffle(&mut rng);
        let seeds: Vec<usize> = order.into_iter().take(world.seeds_per_entity).collect();

        let mut activated: BTreeMap<usize, i64> = BTreeMap::new();
        let mut frontier: Vec<usize> = Vec::new();
        for s in seeds {
            let sub = sub_of(s);
            let (post, at) = em.cite(&user_name(s), &sub, entity, &mut rng);
            truth.activations.push((entity.clone(), user_name(s), at, post));
            activated.insert(s, at);
            frontier.push(s);
        }
        let mut head = 0;
        while head < frontier.len() {
            let v = frontier[head];
            head += 1;
            for &u in &adjacency[v] {
                if activated.contains_key(&u) {
                    continue;
                }
                let p = world.propagation.get(&(v, u)).copied().unwrap_or(0.0);
                let success = p > 0.0 && rng.gen_bool(p);
                truth.trials.push((entity.clone(), user_name(v), user_name(u), success));
                if success {
                    let sub = sub_of(u);
                    let (post, at) = em.cite(&user_name(u), &sub, entity, &mut rng);
                    truth.activations.push((entity.clone(), user_name(u), at, post));
                    activated.insert(u, at);
                    frontier.push(u);
                }
            }
        }

        // Definition-level propagations: every earlier-activated prior
        // contact of an adopter counts, not just the causal edge.
        let acts: Vec<(usize, i64)> = {
            let mut v: Vec<(usize, i64)> = activated.into_iter().collect();
            v.sort_by_key(|&(_, t)| t);
            v
        };
        for (i, &(u, t_u)) in acts.iter().enumerate() {
            for &(v, t_v) in &acts[..i] {
                let key = (v.min(u), v.max(u));
                if t_v < t_u && contact_time.get(&key).is_some_and(|&ct| ct < t_u) {
                    truth
                        .propagations
                        .push((entity.clone(), user_name(v), user_name(u), t_v, t_u));
                }
            }
        }
    }

    Ok(Generated { records: em.records, mentions: em.mentions, truth })
}

/// World with exact exposure counts: per entity, one source whose repeated
/// citations expose each adopter exactly its target number of times before
/// the adopter's own citation. Adopters interact only with the source.
pub fn exposure_world(targets: &[Vec<u64>], seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut em = Emitter::new();
    let mut truth = GroundTruth::default();
    let mut next_user = 0usize;

    for (ei, adopter_targets) in targets.iter().enumerate() {
        let entity = format!("planted entity {ei:02}");
        let source = user_name(next_user);
        next_user += 1;
        let adopters: Vec<String> = adopter_targets
            .iter()
            .map(|_| {
                let u = user_name(next_user);
                next_user += 1;
                u
            })
            .collect();

        // Contacts first, but only for adopters that need exposures: a
        // zero-target adopter stays isolated so no citation can reach it
        // and its own posts expose nobody.
        for (adopter, &target) in adopters.iter().zip(adopter_targets) {
            if target == 0 {
                continue;
            }
            let (root, _) = em.post(&source, "sub00", None, "pending", "thread");
            let fixed = em
                .records
                .pop()
                .unwrap()
                .replace("\"link_id\":\"pending\"", &format!("\"link_id\":\"{root}\""));
            em.records.push(fixed);
            em.post(adopter, "sub00", Some(&root), &root, "hi");
        }

        // The source cites up to the maximum target; each adopter cites
        // right after its own target count is reached.
        let max_target = adopter_targets.iter().copied().max().unwrap_or(0);
        let (post, at) = em.cite(&source, "sub00", &entity, &mut rng);
        truth.activations.push((entity.clone(), source.clone(), at, post));
        truth.exposures.push((entity.clone(), source.clone(), 0));
        let mut emitted = 1u64;
        loop {
            for (adopter, &target) in adopters.iter().zip(adopter_targets) {
                if target == emitted {
                    let (post, at) = em.cite(adopter, "sub00", &entity, &mut rng);
                    truth.activations.push((entity.clone(), adopter.clone(), at, post));
                    truth.exposures.push((entity.clone(), adopter.clone(), target));
                }
            }
            if emitted >= max_target {
                break;
            }
            let (_, _) = em.cite(&source, "sub00", &entity, &mut rng);
            emitted += 1;
        }
        // Adopters with target zero activate before any source citation
        // could be seen; handled above when `target == emitted` never
        // fires. Emit them explicitly.
        for (adopter, &target) in adopters.iter().zip(adopter_targets) {
            if target == 0 {
                let (post, at) = em.cite(adopter, "sub00", &entity, &mut rng);
                truth.activations.push((entity.clone(), adopter.clone(), at, post));
                truth.exposures.push((entity.clone(), adopter.clone(), 0));
            }
        }
    }
    Generated { records: em.records, mentions: em.mentions, truth }
}

/// Repeated single-pair Bernoulli trials: one entity per trial, the source
/// always cites, the adopter follows with probability `p_star`. Returns
/// the generated corpus and the number of successes.
pub fn paired_trial_world(p_star: f64, trials: usize, seed: u64) -> (Generated, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut em = Emitter::new();
    let mut truth = GroundTruth::default();
    let source = user_name(0);
    let adopter = user_name(1);

    let (root, _) = em.post(&source, "sub00", None, "pending", "thread");
    let fixed =
        em.records.pop().unwrap().replace("\"link_id\":\"pending\"", &format!("\"link_id\":\"{root}\""));
    em.records.push(fixed);
    em.post(&adopter, "sub00", Some(&root), &root, "hi");

    let mut successes = 0u64;
    for t in 0..trials {
        let entity = format!("trial entity {t:04}");
        let (post, at) = em.cite(&source, "sub00", &entity, &mut rng);
        truth.activations.push((entity.clone(), source.clone(), at, post));
        let success = rng.gen_bool(p_star);
        truth.trials.push((entity.clone(), source.clone(), adopter.clone(), success));
        if success {
            successes += 1;
            let (post, at) = em.cite(&adopter, "sub00", &entity, &mut rng);
            truth.activations.push((entity.clone(), adopter.clone(), at, post));
        }
    }
    (Generated { records: em.records, mentions: em.mentions, truth }, successes)
}

/// Plant reply threads realizing the given tree shapes (as parent arrays),
/// every post citing the entity. Returns the corpus plus the planted
/// shape counts keyed by parent array.
pub fn plant_cascades(
    shapes: &[(Vec<usize>, usize)],
    entity: &str,
    seed: u64,
) -> (Generated, Vec<(Vec<usize>, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut em = Emitter::new();
    let mut user_counter = 0usize;
    for (parents, count) in shapes {
        for _ in 0..*count {
            let mut ids: Vec<String> = Vec::with_capacity(parents.len());
            for (node, &parent) in parents.iter().enumerate() {
                let author = user_name(user_counter % 97);
                user_counter += 1;
                if node == 0 {
                    let surface = title_case(entity);
                    let body = format!("root about {surface}");
                    let id = format!("s{:06}", em.next_post);
                    let (id2, at) = em.post(&author, "sub00", None, &id, &body);
                    em.mentions.push(MentionRecord {
                        entity: entity.to_owned(),
                        post_id: id2.clone(),
                        author,
                        created_at: at,
                        surface,
                    });
                    ids.push(id2);
                } else {
                    let surface = title_case(entity);
                    let template = BODY_TEMPLATES[rng.gen_range(0..BODY_TEMPLATES.len())];
                    let body = template.replace("{}", &surface);
                    let thread = ids[0].clone();
                    let parent_id = ids[parent].clone();
                    let (id, at) = em.post(&author, "sub00", Some(&parent_id), &thread, &body);
                    em.mentions.push(MentionRecord {
                        entity: entity.to_owned(),
                        post_id: id.clone(),
                        author,
                        created_at: at,
                        surface,
                    });
                    ids.push(id);
                }
            }
        }
    }
    (
        Generated { records: em.records, mentions: em.mentions, truth: GroundTruth::default() },
        shapes.to_vec(),
    )
}

/// Distinct two-token title-case entity names.
pub fn make_entity_names(n: usize, seed: u64) -> Vec<String> {
    let first = ["zorblax", "vetra", "quible", "mondo", "tilda", "karsk", "nyx", "orvan", "pellu", "ryn"];
    let second = ["kane", "moss", "vast", "reka", "vorn", "dell", "pike", "shaw", "lumen", "okto"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = Vec::with_capacity(n);
    let mut seen = HashSet::new();
    while out.len() < n {
        let name = format!(
            "{} {}{}",
            first[rng.gen_range(0..first.len())],
            second[rng.gen_range(0..second.len())],
            if out.len() >= first.len() * second.len() {
                format!(" {}", out.len())
            } else {
                String::new()
            }
        );
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

impl GroundTruth {
    /// Write the `truth_*.csv` tables.
    pub fn save(&self, dir: &Path) -> Result<(), SynthError> {
        let mut acts = String::from("entity,user,created_at,post_id\n");
        for (e, u, t, p) in &self.activations {
            writeln!(acts, "{e},{u},{t},{p}").expect("string write");
        }
        ioutil::write_string(&dir.join("truth_activations.csv"), &acts)?;

        let mut trials = String::from("entity,source,adopter,success\n");
        for (e, v, u, s) in &self.trials {
            writeln!(trials, "{e},{v},{u},{}", u8::from(*s)).expect("string write");
        }
        ioutil::write_string(&dir.join("truth_trials.csv"), &trials)?;

        let mut props = String::from("entity,source,adopter,t_source,t_adopter\n");
        for (e, v, u, tv, tu) in &self.propagations {
            writeln!(props, "{e},{v},{u},{tv},{tu}").expect("string write");
        }
        ioutil::write_string(&dir.join("truth_propagations.csv"), &props)?;

        let mut exp = String::from("entity,user,exposures\n");
        for (e, u, k) in &self.exposures {
            writeln!(exp, "{e},{u},{k}").expect("string write");
        }
        ioutil::write_string(&dir.join("truth_exposures.csv"), &exp)?;
        Ok(())
    }
}
