//! Pipeline orchestration: a single configuration document drives the
//! stage graph, every stage records its artifacts in a run manifest, and
//! re-running with identical inputs reproduces identical artifact bytes.

mod config;
mod manifest;
mod stages;

pub use config::{
    CascadesConfig, ClusterConfig, DiffusionConfig, MentionsConfig, NerConfig, PathsConfig,
    PipelineConfig, RunConfig, SynthConfig,
};
pub use manifest::{ArtifactRecord, RunManifest, StageRecord};
pub use stages::{full_plan, report_from_files, run, tuples_file_name, Stage};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Invalid configuration (exit code 2).
    #[error("config: {0}")]
    Config(String),
    /// A stage artifact is missing; names the stage that produces it
    /// (exit code 3).
    #[error("missing prerequisite {missing}: run the {producer} stage first")]
    Prerequisite { missing: String, producer: &'static str },
    /// Bad or unusable data (exit code 4).
    #[error("data: {0}")]
    Data(String),
}

impl PipelineError {
    pub fn from_io(e: std::io::Error) -> Self {
        PipelineError::Data(e.to_string())
    }

    /// CLI exit code: 2 config, 3 prerequisite, 4 data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Prerequisite { .. } => 3,
            PipelineError::Data(_) => 4,
        }
    }
}
