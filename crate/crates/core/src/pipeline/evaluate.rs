use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::synth::DatasetIndex;
use super::INDEX_FILE;
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::metrics::{
    frechet_distance, gcc_ma, gcc_mae, tdoa_series, DefaultEmbedder, Embedder, EmbeddingStats,
    MetricReport, MetricSummary, PairRow, SeriesOptions, TdoaSeries, SCORE_SCALE,
};

/// A clip to evaluate: id, optional subset tag and WAV path.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipEntry {
    pub id: String,
    pub subset: Option<String>,
    pub path: PathBuf,
}

/// Clips of a dataset directory (through its index), an index file, or a
/// plain directory of WAV files named `<id>.wav`.
pub fn load_clip_set(path: impl AsRef<Path>) -> Result<Vec<ClipEntry>> {
    let path = path.as_ref();
    let (dir, index) = if path.is_file() {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        (dir, Some(serde_json::from_str::<DatasetIndex>(&text)?))
    } else if path.join(INDEX_FILE).is_file() {
        (path.to_path_buf(), Some(DatasetIndex::read(path)?))
    } else {
        (path.to_path_buf(), None)
    };
    if let Some(index) = index {
        return Ok(index
            .clips
            .into_iter()
            .map(|r| ClipEntry {
                path: dir.join(&r.wav),
                id: r.id,
                subset: Some(r.subset.to_string()),
            })
            .collect());
    }
    let mut clips = scan_wavs(&dir)?;
    if clips.is_empty() && dir.join("audio").is_dir() {
        clips = scan_wavs(&dir.join("audio"))?;
    }
    Ok(clips)
}

fn scan_wavs(dir: &Path) -> Result<Vec<ClipEntry>> {
    let rd = fs::read_dir(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut clips = Vec::new();
    for e in rd {
        let p = e?.path();
        let is_wav = p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav"));
        if let (true, Some(stem)) = (is_wav, p.file_stem()) {
            clips.push(ClipEntry {
                id: stem.to_string_lossy().into_owned(),
                subset: None,
                path: p.clone(),
            });
        }
    }
    clips.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(clips)
}

#[derive(Deserialize)]
struct EmbeddingLine {
    id: String,
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct CrwLine {
    id: String,
    tdoa_ms: f64,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                Error::validation("jsonl", format!("{}:{}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// `{"id": ..., "embedding": [...]}` lines from an external embedder.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<f64>>> {
    Ok(read_jsonl::<EmbeddingLine>(path.as_ref())?
        .into_iter()
        .map(|l| (l.id, l.embedding))
        .collect())
}

/// `{"id": ..., "tdoa_ms": ...}` lines from an external TDOA estimator.
pub fn read_crw_tdoa(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    Ok(read_jsonl::<CrwLine>(path.as_ref())?
        .into_iter()
        .map(|l| (l.id, l.tdoa_ms))
        .collect())
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    pub series: SeriesOptions,
    /// Keep only clips with these subset tags.
    pub subsets: Option<Vec<String>>,
    /// External embeddings for the generated and reference sets.
    pub embeddings: Option<(PathBuf, PathBuf)>,
    /// External TDOA estimates (ms) for the generated and reference sets.
    pub crw: Option<(PathBuf, PathBuf)>,
    pub workers: Option<usize>,
}

/// What the metrics need from one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipFeatures {
    pub id: String,
    pub subset: Option<String>,
    pub series: TdoaSeries,
    /// `None` for silent clips or when no embedder ran.
    pub embedding: Option<Vec<f64>>,
    /// External TDOA estimate in milliseconds.
    pub crw_ms: Option<f64>,
}

pub fn clip_features(
    id: &str,
    subset: Option<&str>,
    audio: &AudioBuffer,
    series: &SeriesOptions,
    embedder: Option<&dyn Embedder>,
) -> Result<ClipFeatures> {
    audio.expect_channels(2)?;
    let embedding = match embedder {
        Some(e) => {
            let emb = e.embed(audio)?;
            (!emb.silent).then_some(emb.values)
        }
        None => None,
    };
    Ok(ClipFeatures {
        id: id.to_string(),
        subset: subset.map(str::to_string),
        series: tdoa_series(audio, series)?,
        embedding,
        crw_ms: None,
    })
}

fn summarize(
    pairs: &[(&ClipFeatures, &ClipFeatures)],
) -> (MetricSummary, Vec<PairRow>, Vec<String>) {
    let ids: Vec<String> = pairs.iter().map(|(g, _)| g.id.clone()).collect();
    let gen: Vec<TdoaSeries> = pairs.iter().map(|(g, _)| g.series.clone()).collect();
    let refs: Vec<TdoaSeries> = pairs.iter().map(|(_, r)| r.series.clone()).collect();
    let (score, mut rows, skipped) = match gcc_mae(&ids, &gen, &refs) {
        Ok(m) => (Some(m.score), m.rows, m.skipped),
        Err(_) => {
            let rows = ids
                .iter()
                .zip(&gen)
                .zip(&refs)
                .map(|((id, g), r)| PairRow {
                    id: id.clone(),
                    subset: None,
                    generated_ms: g.mean().map(|s| s * 1e3),
                    reference_ms: r.mean().map(|s| s * 1e3),
                    gcc_error: None,
                    crw_error: None,
                })
                .collect();
            (None, rows, ids.clone())
        }
    };
    let mut crw = Vec::new();
    for (row, (g, r)) in rows.iter_mut().zip(pairs) {
        row.subset = g.subset.clone().or_else(|| r.subset.clone());
        if let (Some(a), Some(b)) = (g.crw_ms, r.crw_ms) {
            let e = (a - b).abs() * SCORE_SCALE;
            row.crw_error = Some(e);
            crw.push(e);
        }
    }
    let g_emb: Vec<Vec<f64>> = pairs
        .iter()
        .filter_map(|(g, _)| g.embedding.clone())
        .collect();
    let r_emb: Vec<Vec<f64>> = pairs
        .iter()
        .filter_map(|(_, r)| r.embedding.clone())
        .collect();
    let fsad = (|| {
        let a = EmbeddingStats::from_embeddings(&g_emb).ok()?;
        let b = EmbeddingStats::from_embeddings(&r_emb).ok()?;
        frechet_distance(&a, &b)
            .map_err(|e| log::warn!("FSAD failed: {e}"))
            .ok()
    })();
    let summary = MetricSummary {
        pairs: pairs.len(),
        gcc_mae: score,
        crw_mae: (!crw.is_empty()).then(|| crw.iter().sum::<f64>() / crw.len() as f64),
        gcc_ma: gcc_ma(&gen).ok(),
        gcc_ma_reference: gcc_ma(&refs).ok(),
        fsad,
    };
    (summary, rows, skipped)
}

/// Pair clips by id and compute the metric suite overall and per subset.
pub fn report_from_features(
    generated: &[ClipFeatures],
    reference: &[ClipFeatures],
    embedder: &str,
) -> Result<MetricReport> {
    let by_id: HashMap<&str, &ClipFeatures> =
        reference.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for g in generated {
        match by_id.get(g.id.as_str()) {
            Some(r) => pairs.push((g, *r)),
            None => skipped.push(g.id.clone()),
        }
    }
    let gen_ids: std::collections::HashSet<&str> =
        generated.iter().map(|c| c.id.as_str()).collect();
    skipped.extend(
        reference
            .iter()
            .filter(|r| !gen_ids.contains(r.id.as_str()))
            .map(|r| r.id.clone()),
    );
    if pairs.is_empty() {
        return Err(Error::validation(
            "evaluation",
            "no clip id appears in both sets",
        ));
    }
    let (overall, rows, gcc_skipped) = summarize(&pairs);
    skipped.extend(gcc_skipped);
    let mut groups: BTreeMap<String, Vec<(&ClipFeatures, &ClipFeatures)>> = BTreeMap::new();
    for &(g, r) in &pairs {
        if let Some(tag) = g.subset.as_ref().or(r.subset.as_ref()) {
            groups.entry(tag.clone()).or_default().push((g, r));
        }
    }
    let subsets = groups
        .into_iter()
        .map(|(k, v)| (k, summarize(&v).0))
        .collect();
    Ok(MetricReport {
        overall,
        embedder: embedder.to_string(),
        skipped,
        subsets,
        rows,
    })
}

fn load_features(
    clips: &[&ClipEntry],
    series: &SeriesOptions,
    embedder: Option<&dyn Embedder>,
) -> Vec<Option<ClipFeatures>> {
    clips
        .par_iter()
        .map(|c| {
            AudioBuffer::read_wav(&c.path)
                .and_then(|a| clip_features(&c.id, c.subset.as_deref(), &a, series, embedder))
                .map_err(|e| log::warn!("{}: {e}", c.id))
                .ok()
        })
        .collect()
}

/// Evaluate a generated set against a reference set (directories or index
/// files). Clips that cannot be paired or read are listed as skipped.
pub fn evaluate(
    generated: impl AsRef<Path>,
    reference: impl AsRef<Path>,
    opts: &EvalOptions,
) -> Result<MetricReport> {
    let keep = |c: &ClipEntry| {
        opts.subsets.as_ref().is_none_or(|s| {
            c.subset
                .as_ref()
                .is_some_and(|t| s.iter().any(|x| x.eq_ignore_ascii_case(t)))
        })
    };
    let gen_set: Vec<ClipEntry> = load_clip_set(generated)?.into_iter().filter(keep).collect();
    let ref_set: Vec<ClipEntry> = load_clip_set(reference)?.into_iter().filter(keep).collect();
    let ref_ids: std::collections::HashSet<&str> = ref_set.iter().map(|c| c.id.as_str()).collect();
    let gen_ids: std::collections::HashSet<&str> = gen_set.iter().map(|c| c.id.as_str()).collect();
    let mut skipped: Vec<String> = Vec::new();
    skipped.extend(
        gen_set
            .iter()
            .filter(|c| !ref_ids.contains(c.id.as_str()))
            .map(|c| c.id.clone()),
    );
    skipped.extend(
        ref_set
            .iter()
            .filter(|c| !gen_ids.contains(c.id.as_str()))
            .map(|c| c.id.clone()),
    );
    let gen_paired: Vec<&ClipEntry> = gen_set
        .iter()
        .filter(|c| ref_ids.contains(c.id.as_str()))
        .collect();
    let ref_by_id: HashMap<&str, &ClipEntry> = ref_set.iter().map(|c| (c.id.as_str(), c)).collect();
    let ref_paired: Vec<&ClipEntry> = gen_paired
        .iter()
        .map(|c| ref_by_id[c.id.as_str()])
        .collect();
    if gen_paired.is_empty() {
        return Err(Error::validation(
            "evaluation",
            "no clip id appears in both sets",
        ));
    }

    let external = match &opts.embeddings {
        Some((g, r)) => Some((read_embeddings(g)?, read_embeddings(r)?)),
        None => None,
    };
    let default_embedder = DefaultEmbedder::default();
    let embedder: Option<&dyn Embedder> = match external {
        Some(_) => None,
        None => Some(&default_embedder),
    };
    let run = || {
        (
            load_features(&gen_paired, &opts.series, embedder),
            load_features(&ref_paired, &opts.series, embedder),
        )
    };
    let (gen_feats, ref_feats) = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::validation("workers", e.to_string()))?
            .install(run),
        None => run(),
    };
    let crw = match &opts.crw {
        Some((g, r)) => Some((read_crw_tdoa(g)?, read_crw_tdoa(r)?)),
        None => None,
    };
    let mut gen = Vec::new();
    let mut refs = Vec::new();
    for (g, r) in gen_feats.into_iter().zip(ref_feats) {
        let (Some(mut g), Some(mut r)) = (g, r) else {
            continue;
        };
        if let Some((eg, er)) = &external {
            g.embedding = eg.get(&g.id).cloned();
            r.embedding = er.get(&r.id).cloned();
        }
        if let Some((cg, cr)) = &crw {
            g.crw_ms = cg.get(&g.id).copied();
            r.crw_ms = cr.get(&r.id).copied();
        }
        gen.push(g);
        refs.push(r);
    }
    let loaded: std::collections::HashSet<&str> = gen.iter().map(|c| c.id.as_str()).collect();
    skipped.extend(
        gen_paired
            .iter()
            .filter(|c| !loaded.contains(c.id.as_str()))
            .map(|c| c.id.clone()),
    );
    let name = match external {
        Some(_) => "external",
        None => default_embedder.name(),
    };
    let mut report = report_from_features(&gen, &refs, name)?;
    skipped.append(&mut report.skipped);
    report.skipped = skipped;
    Ok(report)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// Plain-text summary: one row per subset, then the overall row.
pub fn format_table(report: &MetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "set", "pairs", "GCC MAE", "CRW MAE", "GCC MA", "ref MA", "FSAD"
    );
    let rows = report
        .subsets
        .iter()
        .map(|(k, v)| (k.as_str(), v))
        .chain(std::iter::once(("all", &report.overall)));
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{:<8} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
            name,
            s.pairs,
            cell(s.gcc_mae),
            cell(s.crw_mae),
            cell(s.gcc_ma),
            cell(s.gcc_ma_reference),
            s.fsad
                .map_or_else(|| "-".to_string(), |x| format!("{x:.4}")),
        );
    }
    if !report.skipped.is_empty() {
        let _ = writeln!(out, "skipped: {}", report.skipped.join(", "));
    }
    let _ = writeln!(out, "embedder: {}", report.embedder);
    out
}
