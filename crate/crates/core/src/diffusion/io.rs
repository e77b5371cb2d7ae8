//! Diffusion artifacts: stats dumps, tuple files, and the report grid.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::scalar::Real;

use super::roc::{evaluate, Grouping, RocReport};
use super::{AdoptionTuple, Construct, DiffusionError, InfluenceStats, PairStats, Variant};

const STATS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StatsFile {
    version: u32,
    train_entities: Vec<String>,
    /// user -> (distinct entities cited, activation times)
    users: BTreeMap<String, (u64, Vec<i64>)>,
    /// One row per ordered pair with propagation history.
    pairs: Vec<PairRow>,
}

#[derive(Serialize, Deserialize)]
struct PairRow {
    source: String,
    adopter: String,
    count: u64,
    tau_seconds: f64,
    source_times: Vec<i64>,
}

/// Serialize stats as deterministic JSON (names resolved via the store).
pub fn save_stats<T: Real>(
    stats: &InfluenceStats<T>,
    store: &CorpusStore,
    w: &mut dyn Write,
) -> Result<(), DiffusionError> {
    let mut users: BTreeMap<String, (u64, Vec<i64>)> = BTreeMap::new();
    for (&u, &n) in &stats.entity_count {
        let times = stats.activation_times.get(&u).cloned().unwrap_or_default();
        users.insert(store.user_name(u).to_owned(), (n, times));
    }
    let mut pairs: Vec<PairRow> = stats
        .pairs
        .iter()
        .map(|(&(v, u), p)| PairRow {
            source: store.user_name(v).to_owned(),
            adopter: store.user_name(u).to_owned(),
            count: p.count,
            tau_seconds: p.tau_seconds.to_f64().expect("tau fits f64"),
            source_times: p.source_times.clone(),
        })
        .collect();
    pairs.sort_by(|a, b| (&a.source, &a.adopter).cmp(&(&b.source, &b.adopter)));
    let file = StatsFile {
        version: STATS_VERSION,
        train_entities: stats.train_entities.clone(),
        users,
        pairs,
    };
    serde_json::to_writer_pretty(&mut *w, &file).map_err(|e| DiffusionError::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Load a stats dump, resolving user names against the store.
pub fn load_stats<T: Real>(
    r: impl BufRead,
    store: &CorpusStore,
) -> Result<InfluenceStats<T>, DiffusionError> {
    let file: StatsFile =
        serde_json::from_reader(r).map_err(|e| DiffusionError::Format(e.to_string()))?;
    if file.version != STATS_VERSION {
        return Err(DiffusionError::Format(format!("unsupported stats version {}", file.version)));
    }
    let resolve = |name: &str| {
        store.user_idx(name).ok_or_else(|| DiffusionError::UnknownUser(name.to_owned()))
    };
    let mut stats = InfluenceStats {
        entity_count: Default::default(),
        activation_times: Default::default(),
        pairs: Default::default(),
        train_entities: file.train_entities,
    };
    for (name, (count, times)) in file.users {
        let u = resolve(&name)?;
        stats.entity_count.insert(u, count);
        stats.activation_times.insert(u, times);
    }
    for row in file.pairs {
        let v = resolve(&row.source)?;
        let u = resolve(&row.adopter)?;
        stats.pairs.insert(
            (v, u),
            PairStats {
                count: row.count,
                tau_seconds: T::from_f64(row.tau_seconds)
                    .ok_or_else(|| DiffusionError::Format("tau out of range".into()))?,
                source_times: row.source_times,
            },
        );
    }
    Ok(stats)
}

/// CSV companions to the stats dump: `(source, adopter, count, tau)` pairs
/// and per-user entity counts.
pub fn write_stats_csv<T: Real>(
    stats: &InfluenceStats<T>,
    store: &CorpusStore,
    pairs_w: &mut dyn Write,
    users_w: &mut dyn Write,
) -> Result<(), DiffusionError> {
    let mut pairs: Vec<(String, String, u64, f64)> = stats
        .pairs
        .iter()
        .map(|(&(v, u), p)| {
            (
                store.user_name(v).to_owned(),
                store.user_name(u).to_owned(),
                p.count,
                p.tau_seconds.to_f64().expect("tau fits f64"),
            )
        })
        .collect();
    pairs.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    writeln!(pairs_w, "source,adopter,e_v2u,tau_seconds")?;
    for (v, u, c, tau) in pairs {
        writeln!(pairs_w, "{v},{u},{c},{tau}")?;
    }

    let mut users: Vec<(String, u64)> = stats
        .entity_count
        .iter()
        .map(|(&u, &n)| (store.user_name(u).to_owned(), n))
        .collect();
    users.sort();
    writeln!(users_w, "user,e_v")?;
    for (u, n) in users {
        writeln!(users_w, "{u},{n}")?;
    }
    Ok(())
}

/// Histogram of pair influence windows in whole hours: `hours,count,frequency`.
pub fn write_tau_histogram<T: Real>(
    stats: &InfluenceStats<T>,
    w: &mut dyn Write,
) -> Result<(), DiffusionError> {
    let mut bins: BTreeMap<u64, u64> = BTreeMap::new();
    for p in stats.pairs.values() {
        let hours = (p.tau_seconds.to_f64().expect("tau fits f64") / 3600.0).floor() as u64;
        *bins.entry(hours).or_default() += 1;
    }
    let total: u64 = bins.values().sum();
    writeln!(w, "hours,count,frequency")?;
    for (h, c) in bins {
        writeln!(w, "{h},{c},{}", c as f64 / total.max(1) as f64)?;
    }
    Ok(())
}

/// `entity,user,p,r` rows sorted by `(entity, user)`.
pub fn save_tuples<T: Real>(tuples: &[AdoptionTuple<T>], w: &mut dyn Write) -> Result<(), DiffusionError> {
    let mut rows: Vec<&AdoptionTuple<T>> = tuples.iter().collect();
    rows.sort_by(|a, b| (&a.entity, &a.user).cmp(&(&b.entity, &b.user)));
    writeln!(w, "entity,user,p,r")?;
    for t in rows {
        writeln!(w, "{},{},{},{}", t.entity, t.user, t.p, u8::from(t.adopted))?;
    }
    Ok(())
}

pub fn load_tuples<T: Real>(r: impl BufRead) -> Result<Vec<AdoptionTuple<T>>, DiffusionError> {
    let mut out = Vec::new();
    for (lineno, line) in (1usize..).zip(r.lines()) {
        let line = line?;
        if lineno == 1 {
            if line.trim() != "entity,user,p,r" {
                return Err(DiffusionError::Format("expected header entity,user,p,r".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(DiffusionError::Format(format!("line {lineno}: expected 4 columns")));
        }
        let p: f64 = cols[2]
            .parse()
            .map_err(|_| DiffusionError::Format(format!("line {lineno}: bad probability")))?;
        let adopted = match cols[3].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(DiffusionError::Format(format!("line {lineno}: bad outcome {other:?}")))
            }
        };
        out.push(AdoptionTuple {
            entity: cols[0].to_owned(),
            user: cols[1].to_owned(),
            p: T::from_f64(p).ok_or_else(|| DiffusionError::Format("probability out of range".into()))?,
            adopted,
        });
    }
    Ok(out)
}

/// One report row: both groupings for a `(construct, variant)` cell.
#[derive(Debug, Clone)]
pub struct ReportRow<T: Real> {
    pub construct: Construct,
    pub variant: Variant,
    pub micro: T,
    pub macro_mean: T,
    pub macro_std: T,
    pub entities_used: u64,
    pub entities_skipped: u64,
}

/// Evaluate each tuple set under both groupings.
pub fn report_rows<T: Real>(
    sets: &[(Construct, Variant, Vec<AdoptionTuple<T>>)],
) -> Result<Vec<ReportRow<T>>, DiffusionError> {
    let mut rows = Vec::with_capacity(sets.len());
    for (construct, variant, tuples) in sets {
        let RocReport::Micro { auc, .. } = evaluate(tuples, Grouping::Micro)? else {
            unreachable!("micro grouping returns a micro report")
        };
        let RocReport::Macro { mean, std_dev, entities_used, entities_skipped } =
            evaluate(tuples, Grouping::Macro)?
        else {
            unreachable!("macro grouping returns a macro report")
        };
        rows.push(ReportRow {
            construct: *construct,
            variant: *variant,
            micro: auc,
            macro_mean: mean,
            macro_std: std_dev,
            entities_used,
            entities_skipped,
        });
    }
    Ok(rows)
}

/// The report grid CSV, one row per `(construct, variant)`.
pub fn write_report_csv<T: Real>(rows: &[ReportRow<T>], w: &mut dyn Write) -> Result<(), DiffusionError> {
    writeln!(
        w,
        "construct,variant,micro_roc,macro_roc_mean,macro_roc_std,macro_entities,macro_skipped"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.construct.as_str(),
            r.variant.as_str(),
            r.micro,
            r.macro_mean,
            r.macro_std,
            r.entities_used,
            r.entities_skipped
        )?;
    }
    Ok(())
}
