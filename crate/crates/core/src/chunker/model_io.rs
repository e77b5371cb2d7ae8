//! Versioned model dump. The file bundles the trained weights with the
//! cluster paths used for feature extraction, so annotation needs only the
//! store and the model file.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::brown::ClusterHierarchy;
use crate::scalar::Real;

use super::crf::SequenceModel;
use super::{ChunkerError, N_LABELS};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    c2: f64,
    labels: Vec<String>,
    /// Row-major 3x3 label-transition weights.
    transitions: Vec<f64>,
    /// Feature name to per-label emission weights.
    features: BTreeMap<String, [f64; N_LABELS]>,
    /// Word to cluster bitstring, as used at feature time.
    cluster_paths: BTreeMap<String, String>,
}

/// Serialize a model with its cluster paths as deterministic JSON.
pub fn save_model<T: Real>(
    model: &SequenceModel<T>,
    hierarchy: &ClusterHierarchy,
    w: &mut dyn Write,
) -> Result<(), ChunkerError> {
    let to64 = |x: T| x.to_f64().expect("weight fits f64");
    let tb = model.n_features() * N_LABELS;
    let mut features = BTreeMap::new();
    for (name, &id) in &model.feature_ids {
        let base = id as usize * N_LABELS;
        features.insert(
            name.clone(),
            [to64(model.weights[base]), to64(model.weights[base + 1]), to64(model.weights[base + 2])],
        );
    }
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        c2: to64(model.c2),
        labels: vec!["B".into(), "I".into(), "O".into()],
        transitions: model.weights[tb..].iter().map(|x| to64(*x)).collect(),
        features,
        cluster_paths: hierarchy.words().map(|(a, b)| (a.to_owned(), b.to_owned())).collect(),
    };
    serde_json::to_writer_pretty(&mut *w, &file).map_err(|e| ChunkerError::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Load a model file back into a model and the bundled cluster paths.
pub fn load_model<T: Real>(r: impl BufRead) -> Result<(SequenceModel<T>, ClusterHierarchy), ChunkerError> {
    let file: ModelFile =
        serde_json::from_reader(r).map_err(|e| ChunkerError::Format(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(ChunkerError::Format(format!(
            "unsupported model format version {}",
            file.format_version
        )));
    }
    if file.transitions.len() != N_LABELS * N_LABELS {
        return Err(ChunkerError::Format("transition table must have 9 entries".into()));
    }
    let from64 = |x: f64| T::from_f64(x).ok_or_else(|| ChunkerError::Format("weight out of range".into()));

    let mut feature_ids = std::collections::HashMap::with_capacity(file.features.len());
    let mut weights = vec![T::zero(); file.features.len() * N_LABELS + N_LABELS * N_LABELS];
    for (next_id, (name, per_label)) in file.features.into_iter().enumerate() {
        feature_ids.insert(name, next_id as u32);
        for (l, w) in per_label.into_iter().enumerate() {
            weights[next_id * N_LABELS + l] = from64(w)?;
        }
    }
    let tb = feature_ids.len() * N_LABELS;
    for (i, w) in file.transitions.into_iter().enumerate() {
        weights[tb + i] = from64(w)?;
    }
    let model = SequenceModel::from_parts(feature_ids, weights, from64(file.c2)?);

    // Rebuild a lookup-only hierarchy through the cluster-file layout.
    let mut cluster_text = String::new();
    for (word, path) in &file.cluster_paths {
        cluster_text.push_str(&format!("{path}\t{word}\t0\n"));
    }
    let hierarchy = ClusterHierarchy::load(cluster_text.as_bytes())
        .map_err(|e| ChunkerError::Format(e.to_string()))?;
    Ok((model, hierarchy))
}
