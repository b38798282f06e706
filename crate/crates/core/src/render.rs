//! Scene rendering: source conditioning, static and time-varying spatial
//! convolution, and mixing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acoustics::{RirOptions, StereoRir};
use crate::audio::{from_dbfs, rms, to_dbfs, AudioBuffer};
use crate::dsp::fft_convolve_pair;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scene::{Movement, SceneSpec, SourceSpec};

pub const ACTIVITY_WINDOW: f64 = 0.025;
pub const ACTIVITY_HOP: f64 = 0.01;
pub const ACTIVITY_THRESHOLD_DBFS: f64 = -40.0;
pub const MIN_ACTIVITY: f64 = 1.0;
/// Spacing of trajectory points for moving sources.
pub const GRAIN_HOP: f64 = 0.01;
/// Level each rendered source is scaled to before mixing.
pub const SOURCE_LEVEL_DBFS: f64 = -12.0;
/// Mix peak after overflow normalization.
pub const MIX_PEAK_DBFS: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivitySegment {
    pub start: f64,
    pub end: f64,
    pub peak_dbfs: f64,
}

impl ActivitySegment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Runs of 25 ms frames (10 ms hop) whose RMS reaches `threshold_dbfs`,
/// dropping runs shorter than `min_len` seconds.
pub fn detect_activity(
    mono: &[f64],
    sample_rate: u32,
    threshold_dbfs: f64,
    min_len: f64,
) -> Vec<ActivitySegment> {
    let sr = sample_rate as f64;
    let win = (ACTIVITY_WINDOW * sr).round() as usize;
    let hop = (ACTIVITY_HOP * sr).round() as usize;
    let n = mono.len();
    let frames = n.div_ceil(hop);
    let active: Vec<bool> = (0..frames)
        .map(|i| {
            let s = i * hop;
            to_dbfs(rms(&mono[s..(s + win).min(n)])) >= threshold_dbfs
        })
        .collect();

    let mut out = Vec::new();
    let mut i = 0;
    while i < frames {
        if !active[i] {
            i += 1;
            continue;
        }
        let first = i;
        while i < frames && active[i] {
            i += 1;
        }
        let (s, e) = (first * hop, (i * hop).min(n));
        let seg = ActivitySegment {
            start: s as f64 / sr,
            end: e as f64 / sr,
            peak_dbfs: to_dbfs(mono[s..e].iter().fold(0.0_f64, |m, x| m.max(x.abs()))),
        };
        if seg.len() >= min_len {
            out.push(seg);
        }
    }
    out
}

/// Where a conditioned clip came from in its source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropInfo {
    pub offset: f64,
    pub source_duration: f64,
    pub padded: bool,
}

/// Bring a mono clip to exactly `target` seconds: shorter clips are
/// zero-padded at the tail, longer ones cropped to a random window inside
/// an active segment (or covering the longest one).
pub fn crop_pad(
    mono: &[f64],
    sample_rate: u32,
    target: f64,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, CropInfo)> {
    if mono.is_empty() {
        return Err(Error::validation("clip", "empty source clip"));
    }
    let sr = sample_rate as f64;
    let want = (target * sr).round() as usize;
    let source_duration = mono.len() as f64 / sr;
    if mono.len() <= want {
        let mut out = mono.to_vec();
        out.resize(want, 0.0);
        return Ok((
            out,
            CropInfo {
                offset: 0.0,
                source_duration,
                padded: mono.len() < want,
            },
        ));
    }
    let segments = detect_activity(mono, sample_rate, ACTIVITY_THRESHOLD_DBFS, MIN_ACTIVITY);
    let last_start = mono.len() - want;
    let to_sample = |t: f64| ((t * sr).round() as usize).min(mono.len());
    let fitting: Vec<(usize, usize)> = segments
        .iter()
        .map(|s| (to_sample(s.start), to_sample(s.end)))
        .filter(|(s, e)| e - s >= want)
        .collect();
    let start = if !fitting.is_empty() {
        // Uniform over every start that keeps the window inside one segment.
        let total: usize = fitting.iter().map(|(s, e)| e - s - want + 1).sum();
        let mut k = rng.index(total);
        let mut chosen = 0;
        for &(s, e) in &fitting {
            let options = e - s - want + 1;
            if k < options {
                chosen = s + k;
                break;
            }
            k -= options;
        }
        chosen
    } else if let Some(longest) = segments.iter().max_by(|a, b| a.len().total_cmp(&b.len())) {
        let (s, e) = (to_sample(longest.start), to_sample(longest.end));
        let lo = e.saturating_sub(want);
        let hi = s.min(last_start);
        lo + rng.index(hi - lo + 1)
    } else {
        rng.index(last_start + 1)
    };
    Ok((
        mono[start..start + want].to_vec(),
        CropInfo {
            offset: start as f64 / sr,
            source_duration,
            padded: false,
        },
    ))
}

fn check_mono(mono: &AudioBuffer, rir: &StereoRir) -> Result<()> {
    mono.expect_channels(1)?;
    if mono.sample_rate != rir.left.sample_rate {
        return Err(Error::SampleRateMismatch(
            mono.sample_rate,
            rir.left.sample_rate,
        ));
    }
    Ok(())
}

/// Convolve a mono clip with a stereo RIR; the output has the input's length.
pub fn render_static(mono: &AudioBuffer, rir: &StereoRir) -> Result<AudioBuffer> {
    check_mono(mono, rir)?;
    let n = mono.frames();
    let (l, r) = fft_convolve_pair(mono.left(), &rir.left.samples, &rir.right.samples);
    let trim = |full: Vec<f64>, latency: usize| {
        let mut out: Vec<f64> = full.into_iter().skip(latency).take(n).collect();
        out.resize(n, 0.0);
        out
    };
    AudioBuffer::stereo(
        trim(l, rir.left.latency),
        trim(r, rir.right.latency),
        mono.sample_rate,
    )
}

/// Consecutive grains that share a position.
struct Run {
    first: usize,
    last: usize,
    position: [f64; 3],
}

fn grain_runs(source: &SourceSpec, grains: usize, hop: usize, sample_rate: u32) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for g in 0..grains {
        let p = source.position_at((g * hop) as f64 / sample_rate as f64);
        match runs.last_mut() {
            Some(run) if run.position == p => run.last = g,
            _ => runs.push(Run {
                first: g,
                last: g,
                position: p,
            }),
        }
    }
    runs
}

/// Time-varying render: the input is cut into raised-cosine grains of
/// twice the hop, centered every hop, each convolved with the RIR at the
/// source position of its center. Adjacent grains cross-fade over one
/// hop and the windows sum to one, so a source that never moves renders
/// exactly like [`render_static`].
pub fn render_moving(
    mono: &AudioBuffer,
    scene: &SceneSpec,
    source: &SourceSpec,
    hop_s: f64,
    rir_options: &RirOptions,
) -> Result<AudioBuffer> {
    mono.expect_channels(1)?;
    if mono.sample_rate != rir_options.sample_rate {
        return Err(Error::SampleRateMismatch(
            mono.sample_rate,
            rir_options.sample_rate,
        ));
    }
    let sr = mono.sample_rate;
    let n = mono.frames();
    let hop = ((hop_s * sr as f64).round() as usize).max(1);
    let grains = n.div_ceil(hop) + 1;
    let runs = grain_runs(source, grains, hop, sr);
    let x = mono.left();

    // (start sample, left, right) per run.
    type Piece = (usize, Vec<f64>, Vec<f64>);
    let rendered: Vec<Result<Piece>> = runs
        .par_iter()
        .map(|run| {
            let rir =
                StereoRir::for_scene(&scene.room, &scene.mic_array, run.position, rir_options)?;
            let start = (run.first * hop).saturating_sub(hop);
            let end = ((run.last + 1) * hop).min(n);
            let segment: Vec<f64> = (start..end)
                .map(|i| x[i] * run_weight(i, run, hop, grains))
                .collect();
            if segment.iter().all(|&v| v == 0.0) {
                return Ok((start, Vec::new(), Vec::new()));
            }
            let (l, r) = fft_convolve_pair(&segment, &rir.left.samples, &rir.right.samples);
            debug_assert_eq!(rir.left.latency, rir.right.latency);
            let lat = rir.left.latency;
            Ok((
                start,
                l.into_iter().skip(lat).collect(),
                r.into_iter().skip(lat).collect(),
            ))
        })
        .collect();

    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for item in rendered {
        let (start, l, r) = item?;
        for (i, (a, b)) in l.iter().zip(&r).enumerate() {
            let idx = start + i;
            if idx >= n {
                break;
            }
            left[idx] += a;
            right[idx] += b;
        }
    }
    AudioBuffer::stereo(left, right, sr)
}

/// Sum of the grain windows of one run at sample `i`.
fn run_weight(i: usize, run: &Run, hop: usize, grains: usize) -> f64 {
    let rise_end = run.first * hop;
    let fall_start = run.last * hop;
    if i < rise_end && run.first > 0 {
        // Rising half of the run's first grain.
        let u = (rise_end - i) as f64 / hop as f64;
        (std::f64::consts::FRAC_PI_2 * u).cos().powi(2)
    } else if i >= fall_start && run.last + 1 < grains {
        let u = (i - fall_start) as f64 / hop as f64;
        (std::f64::consts::FRAC_PI_2 * u).cos().powi(2)
    } else {
        1.0
    }
}

/// Render one source along its trajectory.
pub fn render_source(
    mono: &AudioBuffer,
    scene: &SceneSpec,
    source: &SourceSpec,
    rir_options: &RirOptions,
) -> Result<AudioBuffer> {
    match source.movement {
        Movement::Still => {
            let rir =
                StereoRir::for_scene(&scene.room, &scene.mic_array, source.start_pos, rir_options)?;
            render_static(mono, &rir)
        }
        Movement::Moving | Movement::Instant => {
            render_moving(mono, scene, source, GRAIN_HOP, rir_options)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mix {
    pub audio: AudioBuffer,
    /// Gain applied to the sum (1 unless the sum would clip).
    pub gain: f64,
}

/// Sum stereo renders; scale to -1 dBFS peak only if the sum would clip.
pub fn mix_scene(rendered: &[AudioBuffer]) -> Result<Mix> {
    let first = rendered
        .first()
        .ok_or_else(|| Error::validation("mix", "nothing to mix"))?;
    let mut out = first.clone();
    for r in &rendered[1..] {
        if r.sample_rate != out.sample_rate {
            return Err(Error::SampleRateMismatch(out.sample_rate, r.sample_rate));
        }
        if r.frames() != out.frames() {
            return Err(Error::LengthMismatch(out.frames(), r.frames()));
        }
        r.expect_channels(out.num_channels())?;
        for (o, c) in out.channels.iter_mut().zip(&r.channels) {
            for (a, b) in o.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    let peak = out.peak();
    let gain = if peak > 1.0 {
        from_dbfs(MIX_PEAK_DBFS) / peak
    } else {
        1.0
    };
    if gain != 1.0 {
        out.scale(gain);
    }
    Ok(Mix { audio: out, gain })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedScene {
    pub mix: AudioBuffer,
    pub sources: Vec<AudioBuffer>,
    /// Gain applied to each rendered source before mixing.
    pub source_gains: Vec<f64>,
    pub mix_gain: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub rir: RirOptions,
    /// Per-source level before mixing; `None` keeps physical levels.
    pub source_level_dbfs: Option<f64>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            rir: RirOptions::default(),
            source_level_dbfs: Some(SOURCE_LEVEL_DBFS),
        }
    }
}

/// Render every source of a scene from already-conditioned mono clips and mix.
pub fn render_scene(
    scene: &SceneSpec,
    clips: &[AudioBuffer],
    options: &RenderOptions,
) -> Result<RenderedScene> {
    scene.validate()?;
    if clips.len() != scene.sources.len() {
        return Err(Error::validation(
            "scene",
            format!("{} sources but {} clips", scene.sources.len(), clips.len()),
        ));
    }
    let frames = scene.frames();
    let mut rir = options.rir;
    rir.sample_rate = scene.sample_rate;
    let mut sources = Vec::with_capacity(clips.len());
    let mut gains = Vec::with_capacity(clips.len());
    for (clip, spec) in clips.iter().zip(&scene.sources) {
        if clip.sample_rate != scene.sample_rate {
            return Err(Error::SampleRateMismatch(
                scene.sample_rate,
                clip.sample_rate,
            ));
        }
        let mut mono = clip.clone();
        mono.fit_length(frames);
        let mut out = render_source(&mono, scene, spec, &rir)?;
        let level = out.rms();
        let gain = match options.source_level_dbfs {
            Some(db) if level > 0.0 => from_dbfs(db) / level,
            _ => 1.0,
        };
        out.scale(gain);
        sources.push(out);
        gains.push(gain);
    }
    let mix = mix_scene(&sources)?;
    Ok(RenderedScene {
        mix: mix.audio,
        sources,
        source_gains: gains,
        mix_gain: mix.gain,
    })
}
