//! GCC-PHAT time-difference-of-arrival estimation.
//!
//! Sign convention: a positive TDOA means the left channel lags the right
//! one, i.e. the source is toward the right (azimuth below 90°).

use std::cmp::Ordering;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::audio::{rms, to_dbfs, AudioBuffer};
use crate::dsp::{plan_forward, plan_inverse};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_LAG: f64 = 0.001;
pub const DEFAULT_WINDOW: f64 = 0.1;
pub const DEFAULT_GATE_DBFS: f64 = -16.0;
/// Lag grid refinement: the correlation is evaluated every `1/16` sample.
pub const INTERPOLATION: usize = 16;
const PHAT_FLOOR: f64 = 1e-12;

/// GCC-PHAT estimator for one sample rate and lag range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GccPhat {
    pub sample_rate: u32,
    pub max_lag: f64,
}

impl GccPhat {
    pub fn new(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            max_lag: DEFAULT_MAX_LAG,
        }
    }

    pub fn with_max_lag(mut self, max_lag: f64) -> Self {
        self.max_lag = max_lag;
        self
    }

    /// Lag search bound in whole samples.
    pub fn max_lag_samples(&self) -> usize {
        (self.max_lag * self.sample_rate as f64).round() as usize
    }

    /// One interpolated lag step in seconds.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.sample_rate as f64 * INTERPOLATION as f64)
    }

    /// TDOA in seconds between two equal-length frames.
    pub fn tdoa(&self, left: &[f64], right: &[f64]) -> Result<f64> {
        let c = self.correlogram(left, right)?;
        let best = argmax(&c);
        let lag = best as f64 - (c.len() / 2) as f64;
        Ok(lag * self.resolution())
    }

    /// Whitened cross-correlation on the interpolated grid, lags
    /// `-max_lag..=max_lag` in steps of `1/16` sample (odd length, zero lag
    /// in the middle). Exactly reversed when the channels are swapped.
    pub fn correlogram(&self, left: &[f64], right: &[f64]) -> Result<Vec<f64>> {
        if left.len() != right.len() {
            return Err(Error::LengthMismatch(left.len(), right.len()));
        }
        let max_lag = self.max_lag_samples();
        if left.len() < 2 * max_lag.max(1) {
            return Err(Error::validation(
                "frame",
                format!("{} samples is shorter than twice the lag bound", left.len()),
            ));
        }
        let silent = |x: &[f64]| x.iter().all(|&v| v == 0.0);
        if silent(left) || silent(right) {
            return Err(Error::validation("frame", "all-zero channel has no TDOA"));
        }
        // Evaluate in a canonical channel order so that swapping the inputs
        // reverses the result bit for bit.
        if canonical_order(left, right) == Ordering::Greater {
            let mut c = self.correlogram_raw(right, left, max_lag);
            c.reverse();
            Ok(c)
        } else {
            Ok(self.correlogram_raw(left, right, max_lag))
        }
    }

    fn correlogram_raw(&self, left: &[f64], right: &[f64], max_lag: usize) -> Vec<f64> {
        let n = left.len();
        let nfft = (n + max_lag).next_power_of_two();
        let fwd = plan_forward(nfft);
        let mut a: Vec<Complex64> = left.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        a.resize(nfft, Complex64::new(0.0, 0.0));
        let mut b: Vec<Complex64> = right.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        b.resize(nfft, Complex64::new(0.0, 0.0));
        fwd.process(&mut a);
        fwd.process(&mut b);

        // Zero-padded spectrum: positive bins at the front, negative bins at
        // the back, the Nyquist bin split between both halves.
        let big = nfft * INTERPOLATION;
        let mut spec = vec![Complex64::new(0.0, 0.0); big];
        let half = nfft / 2;
        for k in 0..=half {
            let g = a[k] * b[k].conj();
            let w = g / g.norm().max(PHAT_FLOOR);
            if k == half {
                spec[k] = w * 0.5;
                spec[big - k] = w.conj() * 0.5;
            } else {
                spec[k] = w;
                if k > 0 {
                    spec[big - k] = w.conj();
                }
            }
        }
        plan_inverse(big).process(&mut spec);

        let span = max_lag * INTERPOLATION;
        let scale = 1.0 / nfft as f64;
        let mut out = Vec::with_capacity(2 * span + 1);
        for i in (1..=span).rev() {
            out.push(spec[big - i].re * scale);
        }
        out.extend(spec[..=span].iter().map(|c| c.re * scale));
        out
    }
}

fn canonical_order(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Index of the largest value; ties go to the entry closest to the middle,
/// then to the lower index, so mirrored inputs give mirrored answers.
fn argmax(c: &[f64]) -> usize {
    let mid = (c.len() / 2) as i64;
    let mut best = 0;
    for i in 1..c.len() {
        let better = c[i] > c[best]
            || (c[i] == c[best] && (i as i64 - mid).abs() < (best as i64 - mid).abs());
        if better {
            best = i;
        }
    }
    best
}

/// Convenience wrapper with the default 1 ms lag bound.
pub fn gcc_phat(left: &[f64], right: &[f64], sample_rate: u32, max_lag: f64) -> Result<f64> {
    GccPhat::new(sample_rate)
        .with_max_lag(max_lag)
        .tdoa(left, right)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdoaWindow {
    pub start: f64,
    /// Seconds; zero for invalid windows.
    pub tdoa: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdoaSeries {
    pub window: f64,
    pub windows: Vec<TdoaWindow>,
}

impl TdoaSeries {
    pub fn valid(&self) -> impl Iterator<Item = f64> + '_ {
        self.windows.iter().filter(|w| w.valid).map(|w| w.tdoa)
    }

    pub fn valid_count(&self) -> usize {
        self.windows.iter().filter(|w| w.valid).count()
    }

    /// Mean TDOA over valid windows, in seconds.
    pub fn mean(&self) -> Option<f64> {
        mean(self.valid())
    }

    pub fn mean_abs(&self) -> Option<f64> {
        mean(self.valid().map(f64::abs))
    }

    pub fn median(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.valid().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        })
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    pub window: f64,
    pub gate_dbfs: f64,
    pub max_lag: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            gate_dbfs: DEFAULT_GATE_DBFS,
            max_lag: DEFAULT_MAX_LAG,
        }
    }
}

/// Level of a stereo window used for gating: the louder channel's RMS.
pub fn window_level_dbfs(left: &[f64], right: &[f64]) -> f64 {
    to_dbfs(rms(left).max(rms(right)))
}

/// Start sample of every full window.
pub(crate) fn window_starts(frames: usize, window_len: usize) -> impl Iterator<Item = usize> {
    (0..frames / window_len.max(1)).map(move |i| i * window_len)
}

/// TDOA per non-overlapping window; windows quieter than the gate are
/// marked invalid.
pub fn tdoa_series(stereo: &AudioBuffer, options: &SeriesOptions) -> Result<TdoaSeries> {
    stereo.expect_channels(2)?;
    let sr = stereo.sample_rate;
    let gcc = GccPhat::new(sr).with_max_lag(options.max_lag);
    let len = (options.window * sr as f64).round() as usize;
    let (l, r) = (stereo.left(), stereo.right());
    let windows = window_starts(stereo.frames(), len)
        .map(|s| {
            let (wl, wr) = (&l[s..s + len], &r[s..s + len]);
            let start = s as f64 / sr as f64;
            let loud = window_level_dbfs(wl, wr) >= options.gate_dbfs;
            match loud.then(|| gcc.tdoa(wl, wr)) {
                Some(Ok(tdoa)) => TdoaWindow {
                    start,
                    tdoa,
                    valid: true,
                },
                _ => TdoaWindow {
                    start,
                    tdoa: 0.0,
                    valid: false,
                },
            }
        })
        .collect();
    Ok(TdoaSeries {
        window: options.window,
        windows,
    })
}
