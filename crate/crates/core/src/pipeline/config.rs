//! Pipeline configuration: one TOML document drives every stage. Relative
//! paths resolve against the config file's directory; CLI flags may
//! override individual fields after loading.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::{Construct, Variant};

use super::PipelineError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub ner: NerConfig,
    #[serde(default)]
    pub mentions: MentionsConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub cascades: CascadesConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Input record dump; forced to the synth output when [synth] is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Optional subreddit filter list, one name per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subreddits: Option<PathBuf>,
    /// Column-format training corpus for the chunker.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_conll: Option<PathBuf>,
    #[serde(default = "default_store_dir")]
    pub store_dir: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_store_dir() -> PathBuf {
    PathBuf::from("build/store")
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("build/out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub active_set: usize,
    pub classes: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        // Desk-scale defaults; full-scale runs use 2560.
        ClusterConfig { active_set: 64, classes: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NerConfig {
    pub c2: f64,
    /// Recall weight used when reporting model-selection scores.
    pub beta: f64,
    pub max_iters: usize,
    /// Training-mixture manifest (`path<TAB>token_budget` lines); overrides
    /// `paths.train_conll` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

impl Default for NerConfig {
    fn default() -> Self {
        NerConfig { c2: 0.1, beta: 2.0, max_iters: 200, manifest: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MentionsConfig {
    /// "model": annotate with the trained chunker; "truth": use the synth
    /// stage's planted mentions.
    pub mode: String,
}

impl Default for MentionsConfig {
    fn default() -> Self {
        MentionsConfig { mode: "model".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub top_n: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub min_key_len: usize,
    pub constructs: Vec<String>,
    pub variants: Vec<String>,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            top_n: 500,
            train_fraction: 0.8,
            seed: 13,
            min_key_len: 2,
            constructs: vec!["E".into(), "I".into(), "C".into()],
            variants: vec!["static".into(), "discrete".into()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadesConfig {
    pub top_shapes: usize,
}

impl Default for CascadesConfig {
    fn default() -> Self {
        CascadesConfig { top_shapes: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses the environment default.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 13, parallelism: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub users: usize,
    pub entities: usize,
    pub contacts_per_user: usize,
    pub seeds_per_entity: usize,
    pub subreddits: usize,
    pub noise_threads: usize,
    /// Propagation probabilities are drawn uniformly from this set.
    pub prop_choices: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users: 50,
            entities: 30,
            contacts_per_user: 4,
            seeds_per_entity: 3,
            subreddits: 3,
            noise_threads: 0,
            prop_choices: vec![0.1, 0.5, 0.9],
            seed: 7,
        }
    }
}

impl PipelineConfig {
    /// Load from a TOML file and resolve relative paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        if let Some(p) = self.paths.input.as_mut() {
            fix(p);
        }
        if let Some(p) = self.paths.subreddits.as_mut() {
            fix(p);
        }
        if let Some(p) = self.paths.train_conll.as_mut() {
            fix(p);
        }
        if let Some(p) = self.ner.manifest.as_mut() {
            fix(p);
        }
        fix(&mut self.paths.store_dir);
        fix(&mut self.paths.out_dir);
    }

    /// Field-level validation independent of the filesystem.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |msg: String| Err(PipelineError::Config(msg));
        if !(self.diffusion.train_fraction > 0.0 && self.diffusion.train_fraction < 1.0) {
            return err(format!(
                "diffusion.train_fraction = {} must be in (0, 1)",
                self.diffusion.train_fraction
            ));
        }
        if self.ner.beta <= 0.0 {
            return err(format!("ner.beta = {} must be positive", self.ner.beta));
        }
        if self.ner.c2 < 0.0 {
            return err(format!("ner.c2 = {} must be nonnegative", self.ner.c2));
        }
        if self.cluster.active_set < 2 {
            return err(format!("cluster.active_set = {} must be at least 2", self.cluster.active_set));
        }
        if self.diffusion.top_n == 0 {
            return err("diffusion.top_n must be positive".into());
        }
        for c in &self.diffusion.constructs {
            Construct::parse(c).map_err(|e| PipelineError::Config(format!("diffusion.constructs: {e}")))?;
        }
        for v in &self.diffusion.variants {
            Variant::parse(v).map_err(|e| PipelineError::Config(format!("diffusion.variants: {e}")))?;
        }
        match self.mentions.mode.as_str() {
            "model" => {}
            "truth" => {
                if self.synth.is_none() {
                    return err("mentions.mode = \"truth\" requires a [synth] section".into());
                }
            }
            other => return err(format!("mentions.mode = {other:?} (expected \"model\" or \"truth\")")),
        }
        if let Some(synth) = &self.synth {
            if self.paths.input.is_some() {
                return err("paths.input and [synth] are mutually exclusive".into());
            }
            if synth.users == 0 || synth.entities == 0 {
                return err("synth.users and synth.entities must be positive".into());
            }
            if synth.prop_choices.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return err("synth.prop_choices must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Canonical serialized form used for hashing.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn constructs(&self) -> Vec<Construct> {
        self.diffusion.constructs.iter().map(|c| Construct::parse(c).expect("validated")).collect()
    }

    pub fn variants(&self) -> Vec<Variant> {
        self.diffusion.variants.iter().map(|v| Variant::parse(v).expect("validated")).collect()
    }

    /// The effective input dump path (synth output when configured).
    pub fn input_path(&self) -> Option<PathBuf> {
        if self.synth.is_some() {
            Some(self.paths.out_dir.join("synth_corpus.ndjson"))
        } else {
            self.paths.input.clone()
        }
    }
}
