//! Clip embeddings for the Fréchet stereo distance.
//!
//! [`DefaultEmbedder`] is a fixed, training-free stand-in for a learned
//! stereo network: per loud 0.1 s window it keeps the whitened
//! cross-correlation around zero lag, the correlation peak height, and
//! log band energies of both channels, then pools the window sequence to
//! a fixed size.
//!
//! Band energies enter as mid `(L + R)/2` and side `(L − R)/2` in log
//! units, an invertible map of the per-channel values. The mid half is
//! scaled by [`MID_WEIGHT`]: it describes what is sounding rather than
//! where, and at full weight its clip-to-clip spread swamps the spatial
//! part of a Fréchet distance.

use rustfft::num_complex::Complex64;

use crate::audio::AudioBuffer;
use crate::dsp::plan_forward;
use crate::error::Result;
use crate::metrics::gcc::{
    window_level_dbfs, window_starts, GccPhat, DEFAULT_GATE_DBFS, DEFAULT_WINDOW, INTERPOLATION,
};

pub const EMBEDDING_DIM: usize = 2560;
pub const POOL_SEGMENTS: usize = 10;
/// Correlation values kept per window, at half-sample lag spacing.
pub const CORRELATION_POINTS: usize = 63;
pub const BANDS: usize = 32;
pub const WINDOW_FEATURES: usize = CORRELATION_POINTS + 1 + 2 * BANDS;
const LOWEST_BAND_HZ: f64 = 62.5;
const ENERGY_FLOOR: f64 = 1e-10;
/// Frame length of the band-energy estimate.
const BAND_FRAME: usize = 256;
/// Band powers are floored this far below the window's mean band power.
const BAND_DYNAMIC_RANGE: f64 = 1e-4;
pub const MID_WEIGHT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
    /// No window passed the gate; `values` is all zeros.
    pub silent: bool,
}

pub trait Embedder: Sync {
    /// Recorded in metric reports.
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, stereo: &AudioBuffer) -> Result<Embedding>;
}

#[derive(Clone, Copy, Debug)]
pub struct DefaultEmbedder {
    pub window: f64,
    pub gate_dbfs: f64,
}

impl Default for DefaultEmbedder {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            gate_dbfs: DEFAULT_GATE_DBFS,
        }
    }
}

impl Embedder for DefaultEmbedder {
    fn name(&self) -> &str {
        "gcc-bands-v2"
    }

    fn dim(&self) -> usize {
        EMBEDDING_DIM
    }

    fn embed(&self, stereo: &AudioBuffer) -> Result<Embedding> {
        stereo.expect_channels(2)?;
        let sr = stereo.sample_rate;
        let len = (self.window * sr as f64).round() as usize;
        let gcc = GccPhat::new(sr);
        let (l, r) = (stereo.left(), stereo.right());
        let mut frames = Vec::new();
        for s in window_starts(stereo.frames(), len) {
            let (wl, wr) = (&l[s..s + len], &r[s..s + len]);
            if window_level_dbfs(wl, wr) < self.gate_dbfs {
                continue;
            }
            let Ok(corr) = gcc.correlogram(wl, wr) else {
                continue;
            };
            frames.push(window_features(&corr, wl, wr, sr));
        }
        if frames.is_empty() {
            return Ok(Embedding {
                values: vec![0.0; EMBEDDING_DIM],
                silent: true,
            });
        }
        Ok(Embedding {
            values: adaptive_pool(&frames),
            silent: false,
        })
    }
}

pub fn default_embed(stereo: &AudioBuffer) -> Result<Embedding> {
    DefaultEmbedder::default().embed(stereo)
}

/// Layout: correlation (lag ascending) | peak height | mid bands | side bands.
fn window_features(corr: &[f64], left: &[f64], right: &[f64], sample_rate: u32) -> Vec<f64> {
    let mid = corr.len() / 2;
    let step = INTERPOLATION / 2;
    let half = CORRELATION_POINTS / 2;
    let mut f = Vec::with_capacity(WINDOW_FEATURES);
    for k in 0..CORRELATION_POINTS {
        let offset = (k as i64 - half as i64) * step as i64;
        let idx = mid as i64 + offset;
        f.push(corr.get(idx as usize).copied().unwrap_or(0.0));
    }
    f.push(corr.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (l, r) = (
        band_powers(left, sample_rate),
        band_powers(right, sample_rate),
    );
    // Floor shared by both channels so level differences survive.
    let floor =
        BAND_DYNAMIC_RANGE * (l.iter().chain(&r).sum::<f64>() / (2 * BANDS) as f64) + ENERGY_FLOOR;
    let db = |p: &f64| (p + floor).log10();
    f.extend(
        l.iter()
            .zip(&r)
            .map(|(a, b)| MID_WEIGHT * (db(a) + db(b)) / 2.0),
    );
    f.extend(l.iter().zip(&r).map(|(a, b)| (db(a) - db(b)) / 2.0));
    f
}

fn band_powers(x: &[f64], sample_rate: u32) -> Vec<f64> {
    // Welch average over half-overlapping Hann frames: one 0.1 s
    // periodogram is too noisy per band to compare clip sets.
    let n = BAND_FRAME.min(x.len().next_power_of_two());
    let hop = n / 2;
    let window: Vec<f64> = (0..n)
        .map(|i| {
            (std::f64::consts::PI * (i as f64 + 0.5) / n as f64)
                .sin()
                .powi(2)
        })
        .collect();
    let fft = plan_forward(n);
    let mut power = vec![0.0; n / 2 + 1];
    let mut frames = 0usize;
    let mut start = 0;
    while start + n <= x.len().max(n) {
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(x.get(start + i).copied().unwrap_or(0.0) * window[i], 0.0))
            .collect();
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
        frames += 1;
        start += hop;
    }
    let nyquist = sample_rate as f64 / 2.0;
    let hz_per_bin = sample_rate as f64 / n as f64;
    let ratio = (nyquist / LOWEST_BAND_HZ).ln();
    let edge = |b: usize| {
        let hz = LOWEST_BAND_HZ * (ratio * b as f64 / BANDS as f64).exp();
        ((hz / hz_per_bin).round() as usize).min(n / 2)
    };
    (0..BANDS)
        .map(|b| {
            let (lo, hi) = (edge(b), edge(b + 1).max(edge(b) + 1));
            let e: f64 = power[lo..hi.min(n / 2 + 1)].iter().sum();
            e / ((hi - lo) * frames) as f64
        })
        .collect()
}

/// Mean and max over `POOL_SEGMENTS` near-equal spans of the window
/// sequence; spans overlap when there are fewer windows than segments.
fn adaptive_pool(frames: &[Vec<f64>]) -> Vec<f64> {
    let n = frames.len();
    let mut out = Vec::with_capacity(EMBEDDING_DIM);
    for s in 0..POOL_SEGMENTS {
        let lo = s * n / POOL_SEGMENTS;
        let hi = ((s + 1) * n).div_ceil(POOL_SEGMENTS).max(lo + 1);
        let span = &frames[lo..hi];
        for j in 0..WINDOW_FEATURES {
            out.push(span.iter().map(|f| f[j]).sum::<f64>() / span.len() as f64);
        }
        for j in 0..WINDOW_FEATURES {
            out.push(span.iter().map(|f| f[j]).fold(f64::NEG_INFINITY, f64::max));
        }
    }
    out
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}
