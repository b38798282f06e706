//! Planar audio buffers and WAV I/O.

use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use rubato::{FftFixedIn, Resampler};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Sampled audio with one `Vec` per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavFormat {
    #[default]
    Pcm16,
    Float32,
}

impl AudioBuffer {
    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            sample_rate,
            channels: vec![samples],
        }
    }

    pub fn stereo(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::LengthMismatch(left.len(), right.len()));
        }
        Ok(Self {
            sample_rate,
            channels: vec![left, right],
        })
    }

    pub fn silence(channels: usize, frames: usize, sample_rate: u32) -> Self {
        Self {
            sample_rate,
            channels: vec![vec![0.0; frames]; channels],
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn left(&self) -> &[f64] {
        &self.channels[0]
    }

    pub fn right(&self) -> &[f64] {
        &self.channels[self.channels.len() - 1]
    }

    pub fn expect_channels(&self, expected: usize) -> Result<()> {
        if self.num_channels() != expected {
            return Err(Error::ChannelCount {
                expected,
                found: self.num_channels(),
            });
        }
        Ok(())
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    /// Largest per-channel RMS.
    pub fn rms(&self) -> f64 {
        self.channels.iter().map(|c| rms(c)).fold(0.0_f64, f64::max)
    }

    pub fn scale(&mut self, gain: f64) {
        for c in &mut self.channels {
            for x in c.iter_mut() {
                *x *= gain;
            }
        }
    }

    pub fn swap_channels(&self) -> Self {
        let mut channels = self.channels.clone();
        channels.reverse();
        Self {
            sample_rate: self.sample_rate,
            channels,
        }
    }

    /// Average of all channels.
    pub fn to_mono(&self) -> Self {
        if self.num_channels() == 1 {
            return self.clone();
        }
        let n = self.num_channels() as f64;
        let samples = (0..self.frames())
            .map(|i| self.channels.iter().map(|c| c[i]).sum::<f64>() / n)
            .collect();
        Self::mono(samples, self.sample_rate)
    }

    /// Truncate or zero-pad every channel at the tail.
    pub fn fit_length(&mut self, frames: usize) {
        for c in &mut self.channels {
            c.resize(frames, 0.0);
        }
    }

    pub fn resample(&self, target_rate: u32) -> Result<Self> {
        if target_rate == self.sample_rate {
            return Ok(self.clone());
        }
        let channels = self
            .channels
            .iter()
            .map(|c| resample_channel(c, self.sample_rate, target_rate))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sample_rate: target_rate,
            channels,
        })
    }

    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = hound::WavReader::open(path).map_err(|e| match e {
            hound::Error::IoError(source) => Error::File {
                path: path.to_path_buf(),
                source,
            },
            other => Error::Wav(other),
        })?;
        let spec = reader.spec();
        let n_ch = spec.channels as usize;
        let interleaved: Vec<f64> = match spec.sample_format {
            SampleFormat::Float => reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()?,
            SampleFormat::Int => {
                let full_scale = (1_i64 << (spec.bits_per_sample - 1)) as f64;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f64 / full_scale))
                    .collect::<std::result::Result<_, _>>()?
            }
        };
        let frames = interleaved.len() / n_ch.max(1);
        let mut channels = vec![Vec::with_capacity(frames); n_ch];
        for frame in interleaved.chunks_exact(n_ch) {
            for (c, &x) in channels.iter_mut().zip(frame) {
                c.push(x);
            }
        }
        Ok(Self {
            sample_rate: spec.sample_rate,
            channels,
        })
    }

    pub fn write_wav(&self, path: impl AsRef<Path>, format: WavFormat) -> Result<()> {
        let spec = WavSpec {
            channels: self.num_channels() as u16,
            sample_rate: self.sample_rate,
            bits_per_sample: match format {
                WavFormat::Pcm16 => 16,
                WavFormat::Float32 => 32,
            },
            sample_format: match format {
                WavFormat::Pcm16 => SampleFormat::Int,
                WavFormat::Float32 => SampleFormat::Float,
            },
        };
        let mut writer = WavWriter::create(path, spec)?;
        for i in 0..self.frames() {
            for c in &self.channels {
                match format {
                    WavFormat::Pcm16 => {
                        let v = (c[i] * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                        writer.write_sample(v)?;
                    }
                    WavFormat::Float32 => writer.write_sample(c[i] as f32)?,
                }
            }
        }
        writer.finalize()?;
        Ok(())
    }
}

pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Level in dB relative to full scale; `-inf` for silence.
pub fn to_dbfs(amplitude: f64) -> f64 {
    20.0 * amplitude.log10()
}

pub fn from_dbfs(db: f64) -> f64 {
    10.0_f64.powf(db / 20.0)
}

fn resample_channel(samples: &[f64], from: u32, to: u32) -> Result<Vec<f64>> {
    const CHUNK: usize = 1024;
    let expected = (samples.len() as u64 * to as u64).div_ceil(from as u64) as usize;
    let mut resampler = FftFixedIn::<f64>::new(from as usize, to as usize, CHUNK, 2, 1)
        .map_err(|e| Error::validation("resampler", e.to_string()))?;
    let delay = resampler.output_delay();
    let mut out = Vec::with_capacity(expected + delay + CHUNK);
    let mut pos = 0;
    while pos + CHUNK <= samples.len() {
        let block = resampler
            .process(&[&samples[pos..pos + CHUNK]], None)
            .map_err(|e| Error::validation("resampler", e.to_string()))?;
        out.extend_from_slice(&block[0]);
        pos += CHUNK;
    }
    let tail = &samples[pos..];
    let block = resampler
        .process_partial(Some(&[tail]), None)
        .map_err(|e| Error::validation("resampler", e.to_string()))?;
    out.extend_from_slice(&block[0]);
    while out.len() < expected + delay {
        let block = resampler
            .process_partial::<&[f64]>(None, None)
            .map_err(|e| Error::validation("resampler", e.to_string()))?;
        if block[0].is_empty() {
            break;
        }
        out.extend_from_slice(&block[0]);
    }
    let mut out: Vec<f64> = out.into_iter().skip(delay).collect();
    out.resize(expected, 0.0);
    Ok(out)
}
