//! Batch synthesis, dataset validation and evaluation over JSONL manifests.
//!
//! A manifest line names a clip id, a subset tag, one or more source audio
//! files (relative to the manifest) and optionally attributes, a caption,
//! event phrases, a seed and an indoor flag:
//!
//! ```json
//! {"id": "ss_0001", "subset": "SS", "sources": ["audio/dog.wav"], "caption": "A dog barks on the left."}
//! ```

mod demo;
mod evaluate;
mod synth;
mod validate;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::caption::{generate_caption, parse_caption, same_labels};
use crate::error::{Error, Result};
use crate::llm::{induce_via_llm, LlmClientConfig, LlmInput};
use crate::rng::{streams, SeededRng};
use crate::scene::{
    sample_end_label, AttributeRecord, Direction, DirectionLabel, DistanceLabel, Movement,
    SceneSize, SourceAttributes, SpeedLabel,
};

pub use demo::write_demo;
pub use evaluate::{
    clip_features, evaluate, format_table, load_clip_set, read_crw_tdoa, read_embeddings,
    report_from_features, ClipEntry, ClipFeatures, EvalOptions,
};
pub use synth::{
    condition_source, synthesize, synthesize_entry, ClipMeta, DatasetIndex, EntryFailure, IndexRow,
    SynthOptions,
};
pub use validate::{validate_dataset, ValidationReport, Violation, TDOA_TOLERANCE};

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subset {
    /// One still source.
    SS,
    /// Two still sources.
    DS,
    /// One moving or instantly relocating source.
    SD,
    /// One to four sources, each still or moving.
    M,
}

impl Subset {
    pub const ALL: &'static [Subset] = &[Subset::SS, Subset::DS, Subset::SD, Subset::M];

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::SS => "SS",
            Subset::DS => "DS",
            Subset::SD => "SD",
            Subset::M => "M",
        }
    }

    pub fn source_range(self) -> (usize, usize) {
        match self {
            Subset::SS | Subset::SD => (1, 1),
            Subset::DS => (2, 2),
            Subset::M => (1, 4),
        }
    }

    /// Cardinality and movement rules for a complete record.
    pub fn check(self, record: &AttributeRecord) -> Result<()> {
        let n = record.sources.len();
        let (lo, hi) = self.source_range();
        if n < lo || n > hi {
            return Err(Error::validation(
                "subset",
                format!("{self} takes {lo}..={hi} sources, got {n}"),
            ));
        }
        let still = record
            .sources
            .iter()
            .filter(|s| s.movement == Movement::Still)
            .count();
        match self {
            Subset::SS | Subset::DS if still != n => Err(Error::validation(
                "subset",
                format!("{self} sources must all be still"),
            )),
            Subset::SD if still != 0 => Err(Error::validation("subset", "SD source must move")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subset::ALL
            .iter()
            .copied()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::validation("subset", format!("unknown subset {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub subset: Subset,
    /// Source audio paths, relative to the manifest's directory.
    pub sources: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    /// Short event phrases used when generating the caption.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// M-set only: sample an indoor room instead of an outdoor scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indoor: Option<bool>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, subset: Subset, sources: Vec<String>) -> Self {
        Self {
            id: id.into(),
            subset,
            sources,
            attributes: None,
            caption: None,
            events: None,
            seed: None,
            indoor: None,
        }
    }

    /// Shape checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        check_id(&self.id)?;
        let (lo, hi) = self.subset.source_range();
        let n = self.sources.len();
        if n < lo || n > hi {
            return Err(Error::validation(
                "manifest entry",
                format!(
                    "{}: {} takes {lo}..={hi} sources, got {n}",
                    self.id, self.subset
                ),
            ));
        }
        if let Some(events) = &self.events {
            if events.len() != n {
                return Err(Error::validation(
                    "manifest entry",
                    format!(
                        "{}: {} event phrases for {n} sources",
                        self.id,
                        events.len()
                    ),
                ));
            }
        }
        if let Some(record) = &self.attributes {
            if record.sources.len() != n {
                return Err(Error::validation(
                    "manifest entry",
                    format!(
                        "{}: attributes describe {} sources, entry has {n}",
                        self.id,
                        record.sources.len()
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Ids become file names, so they are restricted to a safe alphabet.
fn check_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 200
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::validation(
            "clip id",
            format!("{id:?} (use letters, digits, '_', '-', '.')"),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    /// Directory source paths are resolved against.
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(line)
                .map_err(|e| Error::validation("manifest", format!("line {}: {e}", i + 1)))?;
            entry
                .validate()
                .map_err(|e| Error::validation("manifest", format!("line {}: {e}", i + 1)))?;
            if !seen.insert(entry.id.clone()) {
                return Err(Error::validation(
                    "manifest",
                    format!("line {}: duplicate id {:?}", i + 1, entry.id),
                ));
            }
            entries.push(entry);
        }
        Ok(Self {
            base_dir: base_dir.into(),
            entries,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out += &serde_json::to_string(e)?;
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()?).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn resolve(&self, source: &str) -> PathBuf {
        self.base_dir.join(source)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeOrigin {
    /// Taken from the manifest.
    Given,
    /// Parsed from the manifest caption.
    Caption,
    Llm,
    /// The LLM request failed and the caption parser was used instead.
    LlmFallback,
    /// Drawn from the subset's distribution.
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedAttributes {
    pub record: AttributeRecord,
    pub origin: AttributeOrigin,
    pub event_phrases: Vec<String>,
    pub caption: String,
    pub llm_failure: Option<String>,
}

/// Attributes for an entry, with every optional label filled in and a
/// generated caption that parses back to the same labels.
pub fn resolve_attributes(
    entry: &ManifestEntry,
    seed: u64,
    m_indoor: bool,
    llm: Option<&LlmClientConfig>,
) -> Result<ResolvedAttributes> {
    let mut rng = SeededRng::with_stream(seed, streams::ATTRIBUTES);
    let mut llm_failure = None;
    let (record, origin) = if let Some(r) = &entry.attributes {
        (r.clone(), AttributeOrigin::Given)
    } else if let Some(text) = &entry.caption {
        match llm {
            Some(config) => {
                let induced = induce_via_llm(&LlmInput::Caption(text.clone()), config)?;
                llm_failure = induced.failure;
                let origin = if induced.record.fallback {
                    AttributeOrigin::LlmFallback
                } else {
                    AttributeOrigin::Llm
                };
                (induced.record, origin)
            }
            None => (parse_caption(text)?, AttributeOrigin::Caption),
        }
    } else {
        let indoor = entry.indoor.unwrap_or(m_indoor);
        let names = default_event_names(entry);
        (
            sample_attributes(entry.subset, &names, indoor, &mut rng),
            AttributeOrigin::Sampled,
        )
    };
    if record.sources.len() != entry.sources.len() {
        return Err(Error::validation(
            "attributes",
            format!(
                "{}: {} sources described, {} audio files given",
                entry.id,
                record.sources.len(),
                entry.sources.len()
            ),
        ));
    }
    let mut record = complete_record(record, &mut rng);
    entry.subset.check(&record)?;
    record.validate()?;
    let phrases = match &entry.events {
        Some(e) => e.clone(),
        None => record.sources.iter().map(|s| s.event.clone()).collect(),
    };
    for (s, p) in record.sources.iter_mut().zip(&phrases) {
        if s.event.trim().is_empty() {
            s.event = p.clone();
        }
    }
    let (caption, event_phrases) = caption_for(&record, phrases);
    Ok(ResolvedAttributes {
        record,
        origin,
        event_phrases,
        caption,
        llm_failure,
    })
}

/// Generate a caption; phrases that confuse the parser (a file named
/// "left_speaker", say) are replaced by neutral ones.
fn caption_for(record: &AttributeRecord, phrases: Vec<String>) -> (String, Vec<String>) {
    let text = generate_caption(record, &phrases);
    if parse_caption(&text).is_ok_and(|p| same_labels(record, &p)) {
        return (text, phrases);
    }
    log::warn!(
        "event phrases {phrases:?} do not survive a caption round trip; using neutral phrases"
    );
    let neutral: Vec<String> = (0..record.sources.len())
        .map(|i| format!("{} sound", ORDINALS.get(i).copied().unwrap_or("another")))
        .map(|p| format!("The {p}"))
        .collect();
    (generate_caption(record, &neutral), neutral)
}

const ORDINALS: &[&str] = &["first", "second", "third", "fourth"];

fn default_event_names(entry: &ManifestEntry) -> Vec<String> {
    match &entry.events {
        Some(e) => e.clone(),
        None => entry
            .sources
            .iter()
            .map(|s| {
                let stem = Path::new(s)
                    .file_stem()
                    .map(|x| x.to_string_lossy().into_owned());
                let words = stem.unwrap_or_default().replace(['_', '-', '.'], " ");
                let words = words.split_whitespace().collect::<Vec<_>>().join(" ");
                if words.is_empty() {
                    "A sound".to_string()
                } else {
                    words
                }
            })
            .collect(),
    }
}

fn pick<T: Copy>(xs: &[T], rng: &mut SeededRng) -> T {
    xs[rng.index(xs.len())]
}

const GRADUAL_SPEEDS: &[SpeedLabel] = &[SpeedLabel::Slow, SpeedLabel::Moderate, SpeedLabel::Fast];

/// Probability that an SD source moves gradually rather than jumping.
pub const SD_MOVING_PROBABILITY: f64 = 0.75;
/// Probability that an M-set source moves.
pub const M_MOVING_PROBABILITY: f64 = 0.5;

/// Random labels following the subset's definition.
pub fn sample_attributes(
    subset: Subset,
    events: &[String],
    m_indoor: bool,
    rng: &mut SeededRng,
) -> AttributeRecord {
    let scene_size = match subset {
        Subset::M if !m_indoor => SceneSize::Outdoors,
        Subset::M => pick(
            &[SceneSize::Large, SceneSize::Moderate, SceneSize::Small],
            rng,
        ),
        _ => pick(SceneSize::ALL, rng),
    };
    let mut used = Vec::new();
    let sources = events
        .iter()
        .map(|event| {
            let direction = if subset == Subset::DS {
                let free: Vec<_> = DirectionLabel::ALL
                    .iter()
                    .copied()
                    .filter(|d| !used.contains(d))
                    .collect();
                pick(&free, rng)
            } else {
                pick(DirectionLabel::ALL, rng)
            };
            used.push(direction);
            let distance = pick(DistanceLabel::ALL, rng);
            let movement = match subset {
                Subset::SS | Subset::DS => Movement::Still,
                Subset::SD if rng.bernoulli(SD_MOVING_PROBABILITY) => Movement::Moving,
                Subset::SD => Movement::Instant,
                Subset::M if rng.bernoulli(M_MOVING_PROBABILITY) => Movement::Moving,
                Subset::M => Movement::Still,
            };
            let mut s = SourceAttributes {
                event: event.clone(),
                direction: Some(Direction::Label(direction)),
                distance,
                movement,
                end_direction: None,
                end_distance: None,
                speed: None,
            };
            if movement != Movement::Still {
                s.end_direction = Some(Direction::Label(sample_end_label(direction, rng)));
                s.end_distance = Some(pick(DistanceLabel::ALL, rng));
                s.speed = Some(match movement {
                    Movement::Instant => SpeedLabel::Instant,
                    _ => pick(GRADUAL_SPEEDS, rng),
                });
            }
            s
        })
        .collect();
    AttributeRecord::new(scene_size, sources)
}

/// Fill unspecified directions, end points and speeds so the record fully
/// describes the scene that will be sampled from it.
pub fn complete_record(mut record: AttributeRecord, rng: &mut SeededRng) -> AttributeRecord {
    for s in &mut record.sources {
        let start = *s
            .direction
            .get_or_insert_with(|| Direction::Label(pick(DirectionLabel::ALL, rng)));
        if s.movement == Movement::Still {
            continue;
        }
        if s.end_direction.is_none() {
            s.end_direction = Some(Direction::Label(sample_end_label(start.label(), rng)));
        }
        if s.end_distance.is_none() {
            s.end_distance = Some(s.distance);
        }
        if s.speed.is_none() {
            s.speed = Some(match s.movement {
                Movement::Instant => SpeedLabel::Instant,
                _ => SpeedLabel::Moderate,
            });
        }
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_parses_and_rejects_bad_lines() {
        let text = r#"
{"id": "a", "subset": "SS", "sources": ["x.wav"]}
# comment
{"id": "b", "subset": "DS", "sources": ["x.wav", "y.wav"], "seed": 7}
"#;
        let m = Manifest::parse(text, "/data").unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[1].seed, Some(7));
        assert_eq!(m.resolve("x.wav"), PathBuf::from("/data/x.wav"));
        let bad = [
            r#"{"id": "a", "subset": "DS", "sources": ["x.wav"]}"#,
            r#"{"id": "a", "subset": "M", "sources": []}"#,
            r#"{"id": "../a", "subset": "SS", "sources": ["x.wav"]}"#,
            r#"{"id": "a", "subset": "XX", "sources": ["x.wav"]}"#,
            "{\"id\": \"a\", \"subset\": \"SS\", \"sources\": [\"x\"]}\n{\"id\": \"a\", \"subset\": \"SS\", \"sources\": [\"x\"]}",
            "not json",
        ];
        for b in bad {
            assert!(Manifest::parse(b, ".").is_err(), "{b}");
        }
    }

    #[test]
    fn manifest_round_trips() {
        let mut e = ManifestEntry::new("c1", Subset::M, vec!["a.wav".into(), "b.wav".into()]);
        e.events = Some(vec!["A dog barks".into(), "Rain falls".into()]);
        let m = Manifest {
            base_dir: ".".into(),
            entries: vec![e],
        };
        assert_eq!(Manifest::parse(&m.to_jsonl().unwrap(), ".").unwrap(), m);
    }

    #[test]
    fn sampled_attributes_follow_subset_rules() {
        let events: Vec<String> = vec!["a".into(), "b".into()];
        for seed in 0..200 {
            let mut rng = SeededRng::new(seed);
            let ds = sample_attributes(Subset::DS, &events, false, &mut rng);
            Subset::DS.check(&ds).unwrap();
            assert_ne!(ds.sources[0].direction, ds.sources[1].direction);
            let sd = sample_attributes(Subset::SD, &events[..1], false, &mut rng);
            Subset::SD.check(&sd).unwrap();
            sd.validate().unwrap();
            let m = sample_attributes(Subset::M, &events, false, &mut rng);
            assert_eq!(m.scene_size, SceneSize::Outdoors);
            let m = sample_attributes(Subset::M, &events, true, &mut rng);
            assert_ne!(m.scene_size, SceneSize::Outdoors);
            m.validate().unwrap();
        }
    }

    #[test]
    fn completion_leaves_no_gaps() {
        let mut r = parse_caption("A dog barks while a car moves quickly.").unwrap();
        assert!(r.sources[0].direction.is_none());
        r = complete_record(r, &mut SeededRng::new(1));
        for s in &r.sources {
            assert!(s.direction.is_some());
        }
        let moving = &r.sources[1];
        assert_eq!(moving.movement, Movement::Moving);
        assert!(moving.end_direction.is_some() && moving.end_distance.is_some());
        assert_ne!(
            moving.end_direction.unwrap().label(),
            moving.direction.unwrap().label()
        );
    }

    #[test]
    fn confusing_file_names_get_neutral_phrases() {
        let entry = ManifestEntry::new("x", Subset::SS, vec!["left_speaker.wav".into()]);
        let r = resolve_attributes(&entry, 3, false, None).unwrap();
        let back = parse_caption(&r.caption).unwrap();
        assert!(same_labels(&r.record, &back), "{}", r.caption);
    }

    #[test]
    fn subset_check_rejects_wrong_movement() {
        let still = AttributeRecord::new(
            SceneSize::Small,
            vec![SourceAttributes::still("a", DirectionLabel::Left)],
        );
        assert!(Subset::SS.check(&still).is_ok());
        assert!(Subset::SD.check(&still).is_err());
        assert!(Subset::DS.check(&still).is_err());
        assert!(Subset::M.check(&still).is_ok());
    }
}
