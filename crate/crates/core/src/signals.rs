//! Synthetic mono sources for demos and tests.
//!
//! Each kind is broadband enough for GCC-PHAT to lock on, and comes with a
//! short event phrase for caption generation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// White noise.
    Hiss,
    /// Noise with a slow random amplitude envelope.
    Rumble,
    /// Decaying harmonic strikes every ~0.8 s, with a noisy attack.
    Bell,
    /// Click trains.
    Knock,
    /// Filtered noise bursts with gaps.
    Bark,
}

impl SignalKind {
    pub const ALL: &'static [SignalKind] = &[
        SignalKind::Hiss,
        SignalKind::Rumble,
        SignalKind::Bell,
        SignalKind::Knock,
        SignalKind::Bark,
    ];

    pub fn event_phrase(self) -> &'static str {
        match self {
            SignalKind::Hiss => "Steam hisses",
            SignalKind::Rumble => "An engine idles",
            SignalKind::Bell => "A bell rings",
            SignalKind::Knock => "A woodpecker knocks",
            SignalKind::Bark => "A dog barks",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalKind::Hiss => "hiss",
            SignalKind::Rumble => "rumble",
            SignalKind::Bell => "bell",
            SignalKind::Knock => "knock",
            SignalKind::Bark => "bark",
        }
    }
}

/// Stream of `rng`'s seed that feeds per-sample noise in [`synth`].
const NOISE_STREAM: u64 = 0x6e_6f69_7365;

/// `seconds` of `kind` at `sample_rate`, peak near 0.5.
pub fn synth(kind: SignalKind, seconds: f64, sample_rate: u32, rng: &mut SeededRng) -> AudioBuffer {
    let mut noise = rng.substream(NOISE_STREAM);
    synth_with(kind, seconds, sample_rate, rng, &mut noise)
}

/// Like [`synth`], with the shape parameters (pitch, rhythm, phase) drawn
/// from `params` and the per-sample excitation from `noise`, so two calls
/// sharing `params` differ only in their noise realization.
pub fn synth_with(
    kind: SignalKind,
    seconds: f64,
    sample_rate: u32,
    params: &mut SeededRng,
    noise: &mut SeededRng,
) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let x: Vec<f64> = match kind {
        SignalKind::Hiss => (0..n).map(|_| noise.uniform(-1.0, 1.0)).collect(),
        SignalKind::Rumble => {
            let w: Vec<f64> = (0..n).map(|_| noise.uniform(-1.0, 1.0)).collect();
            let phase = params.uniform(0.0, 2.0 * PI);
            let rate = params.uniform(0.5, 2.0);
            let mut lp = 0.0;
            w.iter()
                .enumerate()
                .map(|(i, &v)| {
                    lp = 0.9 * lp + 0.1 * v;
                    let env = 0.6 + 0.4 * (2.0 * PI * rate * i as f64 / sr + phase).sin();
                    env * (0.7 * lp * 3.0 + 0.3 * v)
                })
                .collect()
        }
        SignalKind::Bell => {
            let f0 = params.uniform(300.0, 900.0);
            let period = (params.uniform(0.6, 1.0) * sr) as usize;
            let offset = params.index(period.max(1));
            (0..n)
                .map(|i| {
                    let k = (i + offset) % period;
                    let t = k as f64 / sr;
                    let env = (-t * 4.0).exp();
                    let tone: f64 = [1.0, 2.76, 5.4, 8.93]
                        .iter()
                        .enumerate()
                        .map(|(h, m)| (2.0 * PI * f0 * m * t).sin() / (h + 1) as f64)
                        .sum();
                    let attack = if t < 0.01 {
                        noise.uniform(-1.0, 1.0)
                    } else {
                        0.0
                    };
                    env * (0.5 * tone + attack)
                })
                .collect()
        }
        SignalKind::Knock => {
            let period = (params.uniform(0.08, 0.15) * sr) as usize;
            let offset = params.index(period.max(1));
            (0..n)
                .map(|i| {
                    let k = (i + offset) % period;
                    let t = k as f64 / sr;
                    (-t * 300.0).exp() * noise.uniform(-1.0, 1.0)
                })
                .collect()
        }
        SignalKind::Bark => {
            let on = (params.uniform(0.15, 0.3) * sr) as usize;
            let off = (params.uniform(0.1, 0.3) * sr) as usize;
            let period = on + off;
            let offset = params.index(period.max(1));
            let mut hp = 0.0;
            let mut prev = 0.0;
            (0..n)
                .map(|i| {
                    let v = noise.uniform(-1.0, 1.0);
                    hp = 0.95 * (hp + v - prev);
                    prev = v;
                    let k = (i + offset) % period;
                    if k < on {
                        (PI * k as f64 / on as f64).sin() * hp
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = if peak > 0.0 { 0.5 / peak } else { 0.0 };
    AudioBuffer::mono(x.into_iter().map(|v| v * gain).collect(), sample_rate)
}
