//! Output persistence: JSON reports and CSV tables, written atomically
//! (temporary name in the target directory, then rename) so a crashed or
//! interrupted run never leaves a truncated artifact behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_time::{FieldSummary, LocalTimeField};
use crate::path::PathBundle;

/// Write bytes atomically: create the parent directory, write to a
/// temporary sibling, flush, then rename over the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize to pretty JSON (with a trailing newline) and write atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Envelope wrapping any report payload with the schema version and the
/// fully resolved configuration that produced it.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub config: &'a crate::config::RunConfig,
    #[serde(flatten)]
    pub payload: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(config: &'a crate::config::RunConfig, payload: T) -> Self {
        Envelope {
            schema_version: crate::SCHEMA_VERSION,
            config,
            payload,
        }
    }
}

/// Dump a bundle as CSV (path_id, step, t, M, qv_exact, sigma), atomically.
pub fn write_bundle_csv(path: &Path, bundle: &PathBundle) -> Result<()> {
    let mut buf = Vec::new();
    crate::path::write_paths_csv(bundle, &mut buf)?;
    write_atomic(path, &buf)
}

/// Export a local-time field's path means as CSV with columns
/// `level,time,mean_tanaka,mean_occupation,se` (SE of the level-crossing
/// mean, or of the occupation mean when only that part exists). Values of
/// absent estimators are left empty.
pub fn write_field_csv(path: &Path, field: &LocalTimeField) -> Result<()> {
    write_field_summary_csv(
        path,
        &field.summarize(),
        field.levels.levels(),
        &field.checkpoint_times,
    )
}

/// Same CSV layout, fed from an already-computed (possibly streaming)
/// mean/SE summary.
pub fn write_field_summary_csv(
    path: &Path,
    summary: &FieldSummary,
    levels: &[f64],
    checkpoint_times: &[f64],
) -> Result<()> {
    let mut out = String::from("level,time,mean_tanaka,mean_occupation,se\n");
    let fmt = |v: f64| format!("{v}");
    for (c, &t) in checkpoint_times.iter().enumerate() {
        for (k, &a) in levels.iter().enumerate() {
            let tan = summary
                .mean_tanaka
                .get(c)
                .map(|row| fmt(row[k]))
                .unwrap_or_default();
            let occ = summary
                .mean_occupation
                .get(c)
                .map(|row| fmt(row[k]))
                .unwrap_or_default();
            let se = summary
                .se_tanaka
                .get(c)
                .or(summary.se_occupation.get(c))
                .map(|row| fmt(row[k]))
                .unwrap_or_default();
            out.push_str(&format!("{a},{t},{tan},{occ},{se}\n"));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Scalar summary of a local-time field for the JSON report: extrema of
/// the mean surfaces and discrepancy norms between the two estimators.
#[derive(Debug, Clone, Serialize)]
pub struct FieldDigest {
    pub n_paths: usize,
    pub n_levels: usize,
    pub n_checkpoints: usize,
    pub epsilon: Option<f64>,
    pub max_mean_tanaka: Option<f64>,
    pub min_mean_tanaka: Option<f64>,
    pub max_mean_occupation: Option<f64>,
    pub min_mean_occupation: Option<f64>,
    /// Max over (level, checkpoint) of |mean_tanaka − mean_occupation|.
    pub discrepancy_sup: Option<f64>,
    /// Level-average of |mean_tanaka − mean_occupation| at the last
    /// checkpoint.
    pub discrepancy_mean_terminal: Option<f64>,
}

pub fn digest_field(field: &LocalTimeField) -> FieldDigest {
    digest_field_summary(
        &field.summarize(),
        field.n_paths,
        field.levels.len(),
        field.has_occupation().then_some(field.epsilon),
    )
}

/// Digest from an already-computed summary (checkpoint count is taken from
/// the summary's own shape).
pub fn digest_field_summary(
    summary: &FieldSummary,
    n_paths: usize,
    n_levels: usize,
    epsilon: Option<f64>,
) -> FieldDigest {
    let extrema = |m: &Vec<Vec<f64>>| -> Option<(f64, f64)> {
        if m.is_empty() {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in m {
            for &v in row {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Some((lo, hi))
    };
    let tan = extrema(&summary.mean_tanaka);
    let occ = extrema(&summary.mean_occupation);
    let (sup, mean_term) = if !summary.mean_tanaka.is_empty()
        && !summary.mean_occupation.is_empty()
    {
        let mut sup = 0.0f64;
        for (rt, ro) in summary.mean_tanaka.iter().zip(summary.mean_occupation.iter()) {
            for (&a, &b) in rt.iter().zip(ro.iter()) {
                sup = sup.max((a - b).abs());
            }
        }
        let last_t = summary.mean_tanaka.last().unwrap();
        let last_o = summary.mean_occupation.last().unwrap();
        let diffs: Vec<f64> = last_t
            .iter()
            .zip(last_o.iter())
            .map(|(&a, &b)| (a - b).abs())
            .collect();
        (Some(sup), Some(crate::stats::mean_se(&diffs).0))
    } else {
        (None, None)
    };
    FieldDigest {
        n_paths,
        n_levels,
        n_checkpoints: summary
            .mean_tanaka
            .len()
            .max(summary.mean_occupation.len()),
        epsilon,
        max_mean_tanaka: tan.map(|x| x.1),
        min_mean_tanaka: tan.map(|x| x.0),
        max_mean_occupation: occ.map(|x| x.1),
        min_mean_occupation: occ.map(|x| x.0),
        discrepancy_sup: sup,
        discrepancy_mean_terminal: mean_term,
    }
}
