use std::path::Path;

use serde::{Deserialize, Serialize};

use super::synth::{ClipMeta, DatasetIndex, IndexRow};
use crate::acoustics::SPEED_OF_SOUND;
use crate::audio::AudioBuffer;
use crate::azimuth::{AzimuthStateMatrix, BinTrajectory, L_AZI};
use crate::caption::{parse_caption, same_labels};
use crate::error::Result;
use crate::metrics::gcc::DEFAULT_MAX_LAG;
use crate::metrics::gcc_phat;
use crate::scene::Movement;

/// Allowed gap, in samples, between the whole-clip GCC-PHAT TDOA of a
/// single still source and the geometric value.
pub const TDOA_TOLERANCE: f64 = 0.5;

const SUM_TOLERANCE: f64 = 1e-6;
/// Coarse matrices are stored as float-32.
const STORED_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub check: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub clips: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Checker<'a> {
    id: &'a str,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn flag(&mut self, check: &str, detail: impl Into<String>) {
        self.out.push(Violation {
            id: self.id.to_string(),
            check: check.to_string(),
            detail: detail.into(),
        });
    }

    fn ok<T>(&mut self, check: &str, r: Result<T>) -> Option<T> {
        r.map_err(|e| self.flag(check, e.to_string())).ok()
    }
}

/// Check every clip listed in `dir/index.json`. Only a missing or
/// malformed index is an error; everything else becomes a violation.
pub fn validate_dataset(dir: impl AsRef<Path>) -> Result<ValidationReport> {
    let dir = dir.as_ref();
    let index = DatasetIndex::read(dir)?;
    let mut report = ValidationReport {
        clips: index.clips.len(),
        violations: Vec::new(),
    };
    for row in &index.clips {
        report.violations.extend(check_clip(dir, &index, row));
    }
    Ok(report)
}

fn check_clip(dir: &Path, index: &DatasetIndex, row: &IndexRow) -> Vec<Violation> {
    let mut c = Checker {
        id: &row.id,
        out: Vec::new(),
    };
    let meta = c.ok("file", ClipMeta::read(dir.join(&row.meta)));
    let audio = c.ok("file", AudioBuffer::read_wav(dir.join(&row.wav)));

    if row.sample_rate != index.sample_rate || (row.duration - index.duration).abs() > 1e-9 {
        c.flag(
            "index",
            format!(
                "row says {} s at {} Hz, dataset {} s at {} Hz",
                row.duration, row.sample_rate, index.duration, index.sample_rate
            ),
        );
    }
    if let Some(audio) = &audio {
        let want = (index.duration * index.sample_rate as f64).round() as usize;
        if audio.sample_rate != index.sample_rate {
            c.flag(
                "sample_rate",
                format!(
                    "{} Hz, expected {} Hz",
                    audio.sample_rate, index.sample_rate
                ),
            );
        }
        if audio.frames() != want {
            c.flag(
                "duration",
                format!(
                    "{} frames ({:.4} s), expected {want}",
                    audio.frames(),
                    audio.duration()
                ),
            );
        }
        if audio.num_channels() != 2 {
            c.flag(
                "channels",
                format!("{} channels, expected 2", audio.num_channels()),
            );
        }
    }

    let stem = |p: &str| dir.join(p.trim_end_matches(".f32"));
    let coarse = c.ok("file", AzimuthStateMatrix::read(stem(&row.coarse)));
    let fine = c.ok("file", AzimuthStateMatrix::read(stem(&row.fine)));
    let k = meta.as_ref().map_or(row.sources, |m| m.scene.sources.len());
    let want_shape = [k, L_AZI, index.d_time];
    for (name, m) in [("coarse", &coarse), ("fine", &fine)] {
        if let Some(m) = m {
            if m.shape() != want_shape {
                c.flag(
                    "matrix_shape",
                    format!("{name} is {:?}, expected {want_shape:?}", m.shape()),
                );
            }
        }
    }
    let coarse = coarse.filter(|m| m.shape() == want_shape);
    let fine = fine.filter(|m| m.shape() == want_shape);
    if let Some(m) = &coarse {
        let bad: Vec<(usize, usize, f64)> = columns(m)
            .filter_map(|(s, t, col)| {
                let sum: f64 = col.iter().sum();
                ((sum - 1.0).abs() > SUM_TOLERANCE
                    || col.iter().any(|v| !v.is_finite() || *v < 0.0))
                .then_some((s, t, sum))
            })
            .collect();
        if let Some(&(s, t, sum)) = bad.first() {
            c.flag(
                "matrix_normalization",
                format!(
                    "{} coarse columns off; first: source {s}, time {t}, sum {sum}",
                    bad.len()
                ),
            );
        }
    }
    if let Some(m) = &fine {
        let bad: Vec<(usize, usize)> = columns(m)
            .filter_map(|(s, t, col)| {
                let ones = col.iter().filter(|&&v| v == 1.0).count();
                let zeros = col.iter().filter(|&&v| v == 0.0).count();
                (ones != 1 || ones + zeros != col.len()).then_some((s, t))
            })
            .collect();
        if let Some(&(s, t)) = bad.first() {
            c.flag(
                "fine_one_hot",
                format!(
                    "{} fine columns are not one-hot; first: source {s}, time {t}",
                    bad.len()
                ),
            );
        }
    }

    let Some(meta) = meta else { return c.out };

    // The matrices must encode the trajectories recorded in the metadata.
    let trajs: Option<Vec<BinTrajectory>> = c.ok(
        "matrix_geometry",
        meta.scene
            .sources
            .iter()
            .map(|s| BinTrajectory::from_source(s, meta.scene.duration, index.d_time))
            .collect::<Result<Vec<_>>>(),
    );
    if let Some(trajs) = trajs {
        if let (Some(m), Some(expect)) = (
            &fine,
            c.ok(
                "matrix_geometry",
                AzimuthStateMatrix::fine(&trajs, index.d_time),
            ),
        ) {
            if m.data != expect.data {
                c.flag(
                    "matrix_geometry",
                    "fine matrix does not match the scene trajectories",
                );
            }
        }
        if let (Some(m), Some(expect)) = (
            &coarse,
            c.ok(
                "matrix_geometry",
                AzimuthStateMatrix::coarse(&trajs, index.d_time, index.sigma),
            ),
        ) {
            let worst = m
                .data
                .iter()
                .zip(&expect.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if worst > STORED_TOLERANCE {
                c.flag(
                    "matrix_geometry",
                    format!("coarse matrix differs from the scene trajectories by up to {worst:e}"),
                );
            }
        }
    }

    if row.caption != meta.caption {
        c.flag("caption_roundtrip", "index and metadata captions differ");
    }
    match parse_caption(&row.caption) {
        Ok(parsed) if same_labels(&meta.attributes, &parsed) => {}
        Ok(_) => c.flag(
            "caption_roundtrip",
            format!("{:?} parses to different labels", row.caption),
        ),
        Err(e) => c.flag("caption_roundtrip", e.to_string()),
    }

    let single_still =
        meta.scene.sources.len() == 1 && meta.scene.sources[0].movement == Movement::Still;
    if let (true, Some(audio)) = (single_still, &audio) {
        if audio.num_channels() == 2 {
            let expected = meta
                .scene
                .mic_array
                .tdoa(meta.scene.sources[0].start_pos, SPEED_OF_SOUND);
            let sr = audio.sample_rate as f64;
            // One estimate over the whole clip: per-window medians are
            // fooled by tonal sources in reverberant rooms.
            let measured = gcc_phat(
                audio.left(),
                audio.right(),
                audio.sample_rate,
                DEFAULT_MAX_LAG,
            );
            if let Some(measured) = c.ok("tdoa_geometry", measured) {
                if (measured - expected).abs() * sr > TDOA_TOLERANCE {
                    c.flag(
                        "tdoa_geometry",
                        format!(
                            "TDOA {:.1} µs, geometry {:.1} µs",
                            measured * 1e6,
                            expected * 1e6
                        ),
                    );
                }
            }
        }
    }
    c.out
}

fn columns(m: &AzimuthStateMatrix) -> impl Iterator<Item = (usize, usize, Vec<f64>)> + '_ {
    (0..m.sources).flat_map(move |s| (0..m.d_time).map(move |t| (s, t, m.column(s, t))))
}
