//! Run manifest: configuration hash, external input hashes, and per-stage
//! artifact digests with timings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ioutil;

use super::PipelineError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunManifest {
    /// Digest over the canonical config and every external input digest;
    /// changes exactly when a config field or input changes.
    pub run_hash: String,
    pub config_hash: String,
    pub seed: u64,
    /// External input path (as configured) -> content digest.
    pub input_hashes: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub outputs: Vec<ArtifactRecord>,
    pub duration_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(
        canonical_config: &str,
        seed: u64,
        inputs: &[&Path],
    ) -> Result<RunManifest, PipelineError> {
        let config_hash = ioutil::sha256_hex(canonical_config.as_bytes());
        let mut input_hashes = BTreeMap::new();
        for path in inputs {
            if path.exists() {
                let digest = ioutil::sha256_file(path).map_err(PipelineError::from_io)?;
                input_hashes.insert(path.display().to_string(), digest);
            }
        }
        let mut acc = config_hash.clone();
        for (p, h) in &input_hashes {
            acc.push_str(p);
            acc.push_str(h);
        }
        Ok(RunManifest {
            run_hash: ioutil::sha256_hex(acc.as_bytes()),
            config_hash,
            seed,
            input_hashes,
            stages: Vec::new(),
        })
    }

    pub fn record_stage(
        &mut self,
        stage: &str,
        outputs: &[&Path],
        duration_ms: u128,
    ) -> Result<(), PipelineError> {
        let mut records = Vec::with_capacity(outputs.len());
        for path in outputs {
            let sha256 = ioutil::sha256_file(path).map_err(PipelineError::from_io)?;
            records.push(ArtifactRecord {
                path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256,
            });
        }
        self.stages.push(StageRecord { stage: stage.to_owned(), outputs: records, duration_ms });
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| PipelineError::Data(format!("manifest: {e}")))?;
        ioutil::write_string(path, &(json + "\n")).map_err(PipelineError::from_io)
    }
}
