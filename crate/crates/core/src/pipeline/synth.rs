use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{resolve_attributes, AttributeOrigin, Manifest, ManifestEntry, Subset, INDEX_FILE};
use crate::audio::{AudioBuffer, WavFormat, DEFAULT_SAMPLE_RATE};
use crate::azimuth::{AzimuthStateMatrix, BinTrajectory, DEFAULT_SIGMA, D_TIME};
use crate::error::{Error, Result};
use crate::llm::LlmClientConfig;
use crate::render::{crop_pad, render_scene, CropInfo, RenderOptions};
use crate::rng::{streams, SeededRng};
use crate::scene::{sample_scene, AttributeRecord, SceneSpec, DEFAULT_DURATION};

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub global_seed: u64,
    pub sample_rate: u32,
    pub duration: f64,
    pub format: WavFormat,
    /// Only synthesize entries with these tags; `None` keeps all.
    pub subsets: Option<Vec<Subset>>,
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    /// Sample indoor rooms for M-set entries that do not say otherwise.
    pub m_indoor: bool,
    pub sigma: f64,
    pub llm: Option<LlmClientConfig>,
    pub render: RenderOptions,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            global_seed: 0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            duration: DEFAULT_DURATION,
            format: WavFormat::Pcm16,
            subsets: None,
            workers: None,
            m_indoor: false,
            sigma: DEFAULT_SIGMA,
            llm: None,
            render: RenderOptions::default(),
        }
    }
}

/// One synthesized clip. Paths are relative to the dataset directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub id: String,
    pub subset: Subset,
    pub wav: String,
    pub meta: String,
    pub coarse: String,
    pub coarse_sidecar: String,
    pub fine: String,
    pub fine_sidecar: String,
    pub caption: String,
    pub sources: usize,
    pub duration: f64,
    pub sample_rate: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub id: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub sample_rate: u32,
    pub duration: f64,
    pub global_seed: u64,
    pub rng: String,
    pub d_time: usize,
    pub sigma: f64,
    pub clips: Vec<IndexRow>,
    pub failures: Vec<EntryFailure>,
}

impl DatasetIndex {
    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(INDEX_FILE);
        let text = fs::read_to_string(&path).map_err(|source| Error::File { path, source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_text(
            &dir.as_ref().join(INDEX_FILE),
            &(serde_json::to_string_pretty(self)? + "\n"),
        )
    }
}

/// Per-clip metadata written next to the audio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub id: String,
    pub subset: Subset,
    pub seed: u64,
    pub rng: String,
    pub attribute_origin: AttributeOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_failure: Option<String>,
    pub attributes: AttributeRecord,
    pub caption: String,
    pub event_phrases: Vec<String>,
    /// Source paths as written in the manifest.
    pub source_files: Vec<String>,
    pub crops: Vec<CropInfo>,
    pub source_gains: Vec<f64>,
    pub mix_gain: f64,
    pub scene: SceneSpec,
}

impl ClipMeta {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

/// Load, downmix, resample and crop/pad one source file.
pub fn condition_source(
    path: &Path,
    sample_rate: u32,
    duration: f64,
    rng: &mut SeededRng,
) -> Result<(AudioBuffer, CropInfo)> {
    let audio = AudioBuffer::read_wav(path)?
        .to_mono()
        .resample(sample_rate)?;
    let (samples, info) = crop_pad(&audio.channels[0], sample_rate, duration, rng)
        .map_err(|e| Error::validation("source", format!("{}: {e}", path.display())))?;
    Ok((AudioBuffer::mono(samples, sample_rate), info))
}

/// Synthesize one entry into `out_dir` (whose `audio`, `meta` and
/// `matrices` subdirectories must exist).
pub fn synthesize_entry(
    manifest: &Manifest,
    entry: &ManifestEntry,
    out_dir: &Path,
    opts: &SynthOptions,
) -> Result<IndexRow> {
    entry.validate()?;
    let seed = entry
        .seed
        .unwrap_or_else(|| SeededRng::entry_seed(opts.global_seed, &entry.id));
    let resolved = resolve_attributes(entry, seed, opts.m_indoor, opts.llm.as_ref())?;
    let scene = sample_scene(&resolved.record, seed, opts.duration, opts.sample_rate)?;
    let mut clips = Vec::with_capacity(entry.sources.len());
    let mut crops = Vec::with_capacity(entry.sources.len());
    for (i, src) in entry.sources.iter().enumerate() {
        let mut rng = SeededRng::with_stream(seed, streams::CONDITION_BASE + i as u64);
        let (clip, crop) = condition_source(
            &manifest.resolve(src),
            opts.sample_rate,
            opts.duration,
            &mut rng,
        )?;
        clips.push(clip);
        crops.push(crop);
    }
    let rendered = render_scene(&scene, &clips, &opts.render)?;
    let trajs = scene
        .sources
        .iter()
        .map(|s| BinTrajectory::from_source(s, scene.duration, D_TIME))
        .collect::<Result<Vec<_>>>()?;
    let coarse = AzimuthStateMatrix::coarse(&trajs, D_TIME, opts.sigma)?;
    let fine = AzimuthStateMatrix::fine(&trajs, D_TIME)?;

    let id = &entry.id;
    let row = IndexRow {
        id: id.clone(),
        subset: entry.subset,
        wav: format!("audio/{id}.wav"),
        meta: format!("meta/{id}.json"),
        coarse: format!("matrices/{id}.coarse.f32"),
        coarse_sidecar: format!("matrices/{id}.coarse.json"),
        fine: format!("matrices/{id}.fine.f32"),
        fine_sidecar: format!("matrices/{id}.fine.json"),
        caption: resolved.caption.clone(),
        sources: scene.sources.len(),
        duration: scene.duration,
        sample_rate: scene.sample_rate,
    };
    let meta = ClipMeta {
        id: id.clone(),
        subset: entry.subset,
        seed,
        rng: SeededRng::ALGORITHM.to_string(),
        attribute_origin: resolved.origin,
        llm_failure: resolved.llm_failure,
        attributes: resolved.record,
        caption: resolved.caption,
        event_phrases: resolved.event_phrases,
        source_files: entry.sources.clone(),
        crops,
        source_gains: rendered.source_gains,
        mix_gain: rendered.mix_gain,
        scene,
    };
    rendered
        .mix
        .write_wav(out_dir.join(&row.wav), opts.format)?;
    coarse.write(out_dir.join(format!("matrices/{id}.coarse")))?;
    fine.write(out_dir.join(format!("matrices/{id}.fine")))?;
    write_text(
        &out_dir.join(&row.meta),
        &(serde_json::to_string_pretty(&meta)? + "\n"),
    )?;
    Ok(row)
}

/// Synthesize every (selected) manifest entry in parallel and write
/// `index.json`. Entry failures are logged and listed in the index; they
/// never abort the batch.
pub fn synthesize(
    manifest: &Manifest,
    out_dir: impl AsRef<Path>,
    opts: &SynthOptions,
) -> Result<DatasetIndex> {
    let out_dir = out_dir.as_ref();
    if let Some(config) = &opts.llm {
        config.validate()?;
    }
    for sub in ["audio", "meta", "matrices"] {
        create_dir(&out_dir.join(sub))?;
    }
    let selected: Vec<&ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| opts.subsets.as_ref().is_none_or(|s| s.contains(&e.subset)))
        .collect();
    let run = || -> Vec<Result<IndexRow>> {
        selected
            .par_iter()
            .map(|e| synthesize_entry(manifest, e, out_dir, opts))
            .collect()
    };
    let results = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::validation("workers", e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut index = DatasetIndex {
        sample_rate: opts.sample_rate,
        duration: opts.duration,
        global_seed: opts.global_seed,
        rng: SeededRng::ALGORITHM.to_string(),
        d_time: D_TIME,
        sigma: opts.sigma,
        clips: Vec::with_capacity(results.len()),
        failures: Vec::new(),
    };
    for (entry, result) in selected.iter().zip(results) {
        match result {
            Ok(row) => index.clips.push(row),
            Err(e) => {
                log::error!("{}: {e}", entry.id);
                index.failures.push(EntryFailure {
                    id: entry.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    index.write(out_dir)?;
    Ok(index)
}
