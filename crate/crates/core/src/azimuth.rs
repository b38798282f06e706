//! Azimuth state matrices: per-source azimuth over time on a 64-bin grid.
//!
//! Bin `l = 1` is hard right (0°) and `l = 64` hard left (180°). Time bin
//! `t` of `d_time` covers `[t, t + 1) · duration / d_time` seconds. A
//! matrix is stored row-major as `K × L_azi × d_time`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Movement, SourceSpec};

pub const L_AZI: usize = 64;
pub const D_TIME: usize = 768;
/// Gaussian width of the coarse matrix in bins (used as a standard deviation).
pub const DEFAULT_SIGMA: f64 = 4.0;

/// Real-valued bin coordinate `1 + (L_azi − 1)·θ/180`.
pub fn angle_to_bin(theta_deg: f64) -> Result<f64> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(Error::validation(
            "azimuth",
            format!("{theta_deg}° outside [0, 180]"),
        ));
    }
    Ok(1.0 + (L_AZI as f64 - 1.0) * theta_deg / 180.0)
}

/// A source's azimuth path in bin coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinTrajectory {
    pub mu_start: f64,
    pub mu_end: f64,
    /// First time bin of the motion.
    pub t0: usize,
    /// Motion length in time bins; zero means a jump at `t0`.
    pub t: usize,
}

impl BinTrajectory {
    pub fn still(mu: f64) -> Self {
        Self {
            mu_start: mu,
            mu_end: mu,
            t0: 0,
            t: 0,
        }
    }

    /// Quantize a source's timing to the time grid by rounding.
    pub fn from_source(source: &SourceSpec, duration: f64, d_time: usize) -> Result<Self> {
        let mu_start = angle_to_bin(source.angle)?;
        if source.movement == Movement::Still {
            return Ok(Self::still(mu_start));
        }
        let to_bin = |s: f64| ((s / duration * d_time as f64).round() as usize).min(d_time);
        let (t0, t) = match source.movement {
            Movement::Instant => (to_bin(source.instant_time.unwrap_or(source.move_start)), 0),
            _ => {
                let t0 = to_bin(source.move_start);
                let end = to_bin(source.move_start + source.move_interval);
                (t0, end.saturating_sub(t0))
            }
        };
        let traj = Self {
            mu_start,
            mu_end: angle_to_bin(source.end_angle)?,
            t0,
            t,
        };
        traj.validate(d_time)?;
        Ok(traj)
    }

    pub fn validate(&self, d_time: usize) -> Result<()> {
        let range = 1.0..=L_AZI as f64;
        if !range.contains(&self.mu_start) || !range.contains(&self.mu_end) {
            return Err(Error::validation(
                "bin trajectory",
                "centers must lie in [1, 64]",
            ));
        }
        if self.t0 + self.t > d_time {
            return Err(Error::validation(
                "bin trajectory",
                format!("motion ends at bin {} past {d_time}", self.t0 + self.t),
            ));
        }
        Ok(())
    }

    /// Center at time bin `t`: start value before the motion, linear
    /// during it, end value afterwards.
    pub fn center(&self, t: usize) -> f64 {
        if t < self.t0 {
            self.mu_start
        } else if self.t == 0 || t >= self.t0 + self.t {
            self.mu_end
        } else {
            let frac = (t - self.t0) as f64 / self.t as f64;
            self.mu_start + frac * (self.mu_end - self.mu_start)
        }
    }

    /// Mirror left and right (`l ↦ 65 − l`).
    pub fn reflected(&self) -> Self {
        let top = L_AZI as f64 + 1.0;
        Self {
            mu_start: top - self.mu_start,
            mu_end: top - self.mu_end,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Coarse,
    Fine,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AzimuthStateMatrix {
    pub kind: MatrixKind,
    pub sources: usize,
    pub l_azi: usize,
    pub d_time: usize,
    pub sigma: Option<f64>,
    pub data: Vec<f64>,
}

/// Gaussian density `N(l | μ, σ²)` before column normalization.
pub fn coarse_density(l: usize, mu: f64, sigma: f64) -> f64 {
    let z = (l as f64 - mu) / sigma;
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt()
}

/// Hot bin of the fine matrix: `⌊μ⌋` clamped to `[1, L_azi]`.
pub fn fine_bin(mu: f64) -> usize {
    (mu.floor().max(1.0) as usize).min(L_AZI)
}

impl AzimuthStateMatrix {
    fn empty(kind: MatrixKind, sources: usize, d_time: usize, sigma: Option<f64>) -> Self {
        Self {
            kind,
            sources,
            l_azi: L_AZI,
            d_time,
            sigma,
            data: vec![0.0; sources * L_AZI * d_time],
        }
    }

    /// Gaussian columns over the azimuth axis, each normalized to sum to one.
    pub fn coarse(trajs: &[BinTrajectory], d_time: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::validation(
                "sigma",
                format!("{sigma} must be positive"),
            ));
        }
        check_trajectories(trajs, d_time)?;
        let mut m = Self::empty(MatrixKind::Coarse, trajs.len(), d_time, Some(sigma));
        let mut column = [0.0; L_AZI];
        for (k, traj) in trajs.iter().enumerate() {
            for t in 0..d_time {
                let mu = traj.center(t);
                for (l, c) in column.iter_mut().enumerate() {
                    *c = coarse_density(l + 1, mu, sigma);
                }
                let sum: f64 = column.iter().sum();
                for (l, &c) in column.iter().enumerate() {
                    *m.at_mut(k, l + 1, t) = c / sum;
                }
            }
        }
        Ok(m)
    }

    /// One-hot columns at `⌊μ(t)⌋`.
    pub fn fine(trajs: &[BinTrajectory], d_time: usize) -> Result<Self> {
        check_trajectories(trajs, d_time)?;
        let mut m = Self::empty(MatrixKind::Fine, trajs.len(), d_time, None);
        for (k, traj) in trajs.iter().enumerate() {
            for t in 0..d_time {
                *m.at_mut(k, fine_bin(traj.center(t)), t) = 1.0;
            }
        }
        Ok(m)
    }

    fn index(&self, k: usize, l: usize, t: usize) -> usize {
        debug_assert!(l >= 1 && l <= self.l_azi);
        (k * self.l_azi + (l - 1)) * self.d_time + t
    }

    /// Entry for source `k`, 1-based azimuth bin `l`, time bin `t`.
    pub fn at(&self, k: usize, l: usize, t: usize) -> f64 {
        self.data[self.index(k, l, t)]
    }

    fn at_mut(&mut self, k: usize, l: usize, t: usize) -> &mut f64 {
        let i = self.index(k, l, t);
        &mut self.data[i]
    }

    pub fn column(&self, k: usize, t: usize) -> Vec<f64> {
        (1..=self.l_azi).map(|l| self.at(k, l, t)).collect()
    }

    /// Bin with the largest value in a column; ties go to the lower bin.
    pub fn argmax(&self, k: usize, t: usize) -> usize {
        let mut best = 1;
        for l in 2..=self.l_azi {
            if self.at(k, l, t) > self.at(k, best, t) {
                best = l;
            }
        }
        best
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.sources, self.l_azi, self.d_time]
    }

    /// Write `<stem>.f32` (little-endian float-32, row-major) and
    /// `<stem>.json` (shape and conventions). Returns both paths.
    pub fn write(&self, stem: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        let stem = stem.as_ref();
        let bin = with_suffix(stem, "f32");
        let json = with_suffix(stem, "json");
        let bytes: Vec<u8> = self
            .data
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect();
        fs::write(&bin, bytes).map_err(|source| Error::File {
            path: bin.clone(),
            source,
        })?;
        let sidecar = MatrixSidecar {
            kind: self.kind,
            shape: self.shape(),
            dtype: "float32".into(),
            byte_order: "little".into(),
            layout: "row-major [source, azimuth_bin, time_bin]".into(),
            sigma: self.sigma,
            azimuth_bins: "bin l (1-based) = 1 + 63 * azimuth_deg / 180; 1 = right, 64 = left"
                .into(),
            time_bins: format!("time bin t covers [t, t+1) * duration / {}", self.d_time),
            data_file: bin
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        fs::write(&json, serde_json::to_string_pretty(&sidecar)? + "\n").map_err(|source| {
            Error::File {
                path: json.clone(),
                source,
            }
        })?;
        Ok((bin, json))
    }

    pub fn read(stem: impl AsRef<Path>) -> Result<Self> {
        let stem = stem.as_ref();
        let json = with_suffix(stem, "json");
        let bin = with_suffix(stem, "f32");
        let text = fs::read_to_string(&json).map_err(|source| Error::File {
            path: json.clone(),
            source,
        })?;
        let meta: MatrixSidecar = serde_json::from_str(&text)?;
        let bytes = fs::read(&bin).map_err(|source| Error::File {
            path: bin.clone(),
            source,
        })?;
        let [k, l, d] = meta.shape;
        if bytes.len() != k * l * d * 4 {
            return Err(Error::LengthMismatch(k * l * d * 4, bytes.len()));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Self {
            kind: meta.kind,
            sources: k,
            l_azi: l,
            d_time: d,
            sigma: meta.sigma,
            data,
        })
    }
}

fn check_trajectories(trajs: &[BinTrajectory], d_time: usize) -> Result<()> {
    if trajs.is_empty() {
        return Err(Error::validation(
            "azimuth matrix",
            "needs at least one source",
        ));
    }
    trajs.iter().try_for_each(|t| t.validate(d_time))
}

fn with_suffix(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MatrixSidecar {
    kind: MatrixKind,
    shape: [usize; 3],
    dtype: String,
    byte_order: String,
    layout: String,
    sigma: Option<f64>,
    azimuth_bins: String,
    time_bins: String,
    data_file: String,
}
