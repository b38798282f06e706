//! Shoebox room impulse responses by the image-source method.
//!
//! Each image contributes `Π β / (4π·dist)` at `dist / c`, placed with the
//! tabulated windowed-sinc fractional delay. Stored kernels carry a fixed
//! latency of [`FRACTIONAL_DELAY_HALF`] samples so that the leading taps of
//! a near source's kernel are never cut off; renderers remove it again.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::dsp::{FractionalDelayTable, FRACTIONAL_DELAY_HALF, FRACTIONAL_DELAY_TAPS};
use crate::error::{Error, Result};
use crate::scene::{distance, MicArray, Room};

pub const SPEED_OF_SOUND: f64 = 343.0;
/// Sabine/Eyring constant `24 ln 10 / c`.
pub const EYRING_CONSTANT: f64 = 0.1611;
/// Wall absorption below this is treated as unreachable: such a room would
/// ring for many seconds and the image count explodes.
pub const MIN_WALL_ABSORPTION: f64 = 0.01;
pub const MAX_WALL_ABSORPTION: f64 = 0.999;
/// Tail energy left out of a kernel, relative to the reference energy.
pub const DEFAULT_TAIL_DB: f64 = -60.0;
/// Upper bound on the number of images summed for one kernel.
pub const MAX_IMAGES: usize = 4_000_000;

/// Absorption coefficients of the six walls, ordered x=0, x=Lx, y=0, y=Ly,
/// z=0, z=Lz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    pub walls: [f64; 6],
}

impl Absorption {
    pub fn uniform(alpha: f64) -> Result<Self> {
        let a = Self { walls: [alpha; 6] };
        a.validate()?;
        Ok(a)
    }

    pub fn anechoic() -> Self {
        Self { walls: [1.0; 6] }
    }

    pub fn is_anechoic(&self) -> bool {
        self.walls.iter().all(|&a| a >= 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.walls.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::validation(
                "absorption",
                format!("coefficient {a} outside (0, 1]"),
            ));
        }
        Ok(())
    }

    fn reflection_factors(&self) -> [f64; 6] {
        self.walls.map(|a| (1.0 - a).max(0.0).sqrt())
    }
}

fn validate_dims(dims: [f64; 3]) -> Result<()> {
    if dims.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::validation(
            "room",
            format!("dimensions {dims:?} must be positive and finite"),
        ));
    }
    Ok(())
}

fn volume_and_surface(dims: [f64; 3]) -> (f64, f64) {
    let [x, y, z] = dims;
    (x * y * z, 2.0 * (x * y + y * z + x * z))
}

/// Eyring's inversion `α = 1 − exp(−0.1611·V / (S·RT60))`.
pub fn eyring_absorption(dims: [f64; 3], rt60: f64) -> f64 {
    let (v, s) = volume_and_surface(dims);
    1.0 - (-EYRING_CONSTANT * v / (s * rt60)).exp()
}

/// Eyring reverberation time of a room with uniform wall absorption.
pub fn eyring_rt60(dims: [f64; 3], alpha: f64) -> f64 {
    let (v, s) = volume_and_surface(dims);
    EYRING_CONSTANT * v / (-s * (1.0 - alpha).ln())
}

/// Uniform wall absorption that yields `rt60` by Eyring's formula.
pub fn rt60_to_absorption(rt60: f64, dims: [f64; 3]) -> Result<Absorption> {
    validate_dims(dims)?;
    if !(rt60 > 0.0 && rt60.is_finite()) {
        return Err(Error::validation(
            "rt60",
            format!("{rt60} s must be positive"),
        ));
    }
    let alpha = eyring_absorption(dims, rt60);
    if !(MIN_WALL_ABSORPTION..=MAX_WALL_ABSORPTION).contains(&alpha) {
        return Err(Error::UnreachableRt60 {
            requested: rt60,
            min_rt60: eyring_rt60(dims, MAX_WALL_ABSORPTION),
            max_rt60: eyring_rt60(dims, MIN_WALL_ABSORPTION),
        });
    }
    Absorption::uniform(alpha)
}

/// Calibration stops once the reference decay is this close to the target.
const CALIBRATION_TOLERANCE: f64 = 0.01;
const CALIBRATION_ROUNDS: usize = 10;

/// Time for the Schroeder backward integral of `h` to fall `drop_db` below
/// its total, counted from the first nonzero sample.
pub fn schroeder_decay_time(h: &[f64], sample_rate: u32, drop_db: f64) -> Option<f64> {
    let onset = h.iter().position(|&x| x != 0.0)?;
    let total: f64 = h[onset..].iter().map(|x| x * x).sum();
    let floor = total * 10f64.powf(-drop_db.abs() / 10.0);
    let mut tail = total;
    for (k, x) in h[onset..].iter().enumerate() {
        if tail <= floor {
            return Some(k as f64 / sample_rate as f64);
        }
        tail -= x * x;
    }
    Some((h.len() - onset) as f64 / sample_rate as f64)
}

/// Uniform absorption whose image-source response decays by 60 dB in
/// `rt60`.
///
/// Eyring's formula assumes a diffuse field. A shoebox image sum with
/// uniform walls rings longer than that in small rooms (axial paths
/// dominate the late tail) and dies faster in large, heavily absorbing
/// ones. Starting from Eyring, the per-reflection decay `−ln(1 − α)` is
/// rescaled by measured/requested decay time until the Schroeder decay of a
/// reference response matches: receiver at the room center, source a
/// quarter of the shortest dimension in front of it. Results are cached.
pub fn calibrated_absorption(dims: [f64; 3], rt60: f64) -> Result<Absorption> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 4], Absorption>>> = OnceLock::new();
    let key = [
        dims[0].to_bits(),
        dims[1].to_bits(),
        dims[2].to_bits(),
        rt60.to_bits(),
    ];
    let cache = CACHE.get_or_init(Default::default);
    if let Some(a) = cache.lock().expect("absorption cache").get(&key) {
        return Ok(*a);
    }
    let mut best = rt60_to_absorption(rt60, dims)?;
    let receiver = dims.map(|d| d / 2.0);
    let reach = 0.25 * dims.iter().copied().fold(f64::INFINITY, f64::min);
    let source = [receiver[0], receiver[1] + reach, receiver[2]];
    let options = RirOptions::default();
    let mut best_err = f64::INFINITY;
    let mut rate = -(1.0 - best.walls[0]).ln();
    for _ in 0..CALIBRATION_ROUNDS {
        let alpha = (1.0 - (-rate).exp()).clamp(MIN_WALL_ABSORPTION, MAX_WALL_ABSORPTION);
        let absorption = Absorption::uniform(alpha)?;
        let energy = energy_histogram(dims, &absorption, source, receiver, &options);
        let amplitude: Vec<f64> = energy.iter().map(|e| e.sqrt()).collect();
        let Some(measured) = schroeder_decay_time(&amplitude, options.sample_rate, 60.0) else {
            break;
        };
        let err = (measured / rt60 - 1.0).abs();
        if err < best_err {
            best_err = err;
            best = absorption;
        }
        if err <= CALIBRATION_TOLERANCE {
            break;
        }
        rate *= measured / rt60;
    }
    cache.lock().expect("absorption cache").insert(key, best);
    Ok(best)
}

/// Absorption for a scene room: anechoic outdoors, calibrated indoors.
pub fn room_absorption(room: &Room) -> Result<Absorption> {
    match room.rt60 {
        None => Ok(Absorption::anechoic()),
        Some(rt60) => calibrated_absorption(room.dims, rt60),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RirOptions {
    pub sample_rate: u32,
    /// Energy left out beyond the cutoff, in dB relative to the smaller of
    /// the direct-path energy and the estimated reverberant energy.
    pub tail_db: f64,
    /// Optional hard limit on the image reflection order per axis.
    pub max_order: Option<u32>,
    /// Optional hard limit on the kernel length in samples.
    pub max_length: Option<usize>,
}

impl Default for RirOptions {
    fn default() -> Self {
        Self {
            sample_rate: crate::audio::DEFAULT_SAMPLE_RATE,
            tail_db: DEFAULT_TAIL_DB,
            max_order: None,
            max_length: None,
        }
    }
}

/// An impulse response whose sample `k` sits at time `(k − latency) / fs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rir {
    pub sample_rate: u32,
    pub latency: usize,
    pub samples: Vec<f64>,
}

impl Rir {
    /// Response on the physical time axis, starting at t = 0.
    pub fn aligned(&self) -> &[f64] {
        &self.samples[self.latency.min(self.samples.len())..]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

/// Left and right responses computed from one image set.
#[derive(Clone, Debug, PartialEq)]
pub struct StereoRir {
    pub left: Rir,
    pub right: Rir,
}

impl StereoRir {
    pub fn for_scene(
        room: &Room,
        mic: &MicArray,
        source: [f64; 3],
        options: &RirOptions,
    ) -> Result<Self> {
        let absorption = room_absorption(room)?;
        let [left, right] = compute_rirs(
            room.dims,
            &absorption,
            source,
            &[mic.left(), mic.right()],
            options,
        )?
        .try_into()
        .expect("two microphones in, two kernels out");
        Ok(Self { left, right })
    }
}

/// Single-microphone impulse response.
pub fn compute_rir(
    dims: [f64; 3],
    absorption: &Absorption,
    source: [f64; 3],
    mic: [f64; 3],
    options: &RirOptions,
) -> Result<Rir> {
    Ok(compute_rirs(dims, absorption, source, &[mic], options)?.remove(0))
}

/// Impulse responses from one source to several microphones. The image set
/// is enumerated once around the microphones' centroid, so every
/// microphone sees exactly the same images.
pub fn compute_rirs(
    dims: [f64; 3],
    absorption: &Absorption,
    source: [f64; 3],
    mics: &[[f64; 3]],
    options: &RirOptions,
) -> Result<Vec<Rir>> {
    validate_dims(dims)?;
    absorption.validate()?;
    let inside = |p: [f64; 3]| p.iter().zip(&dims).all(|(&x, &d)| x >= 0.0 && x <= d);
    if !inside(source) {
        return Err(Error::Geometry(format!(
            "source {source:?} outside room {dims:?}"
        )));
    }
    for &m in mics {
        if !inside(m) {
            return Err(Error::Geometry(format!(
                "microphone {m:?} outside room {dims:?}"
            )));
        }
        if distance(source, m) < 1e-6 {
            return Err(Error::Geometry(format!(
                "source and microphone coincide at {m:?}"
            )));
        }
    }
    if absorption.is_anechoic() {
        return Ok(direct_path(source, mics, options));
    }
    Ok(image_sum(dims, absorption, source, mics, options))
}

fn direct_path(source: [f64; 3], mics: &[[f64; 3]], options: &RirOptions) -> Vec<Rir> {
    let fs = options.sample_rate as f64;
    mics.iter()
        .map(|&m| {
            let d = distance(source, m);
            let delay = d / SPEED_OF_SOUND * fs + FRACTIONAL_DELAY_HALF as f64;
            let len = delay.floor() as usize + FRACTIONAL_DELAY_HALF + 2;
            let mut samples = vec![0.0; len];
            add_tap(&mut samples, delay, 1.0 / (4.0 * std::f64::consts::PI * d));
            finish(samples, options)
        })
        .collect()
}

fn finish(mut samples: Vec<f64>, options: &RirOptions) -> Rir {
    if let Some(max) = options.max_length {
        samples.truncate(max + FRACTIONAL_DELAY_HALF);
    }
    Rir {
        sample_rate: options.sample_rate,
        latency: FRACTIONAL_DELAY_HALF,
        samples,
    }
}

fn add_tap(out: &mut [f64], delay: f64, gain: f64) {
    let (first, kernel) = FractionalDelayTable::global().kernel(delay);
    for (i, &k) in kernel.iter().enumerate() {
        let idx = first + i as i64;
        if idx >= 0 && (idx as usize) < out.len() {
            out[idx as usize] += gain * k;
        }
    }
}

/// Cutoff distance beyond which the remaining image energy falls below
/// the requested level.
///
/// Images are spread with density `4πR²/V` per meter of path length and
/// lose energy at rate `κ = −Σ S_w ln(1 − α_w) / (4V)` per meter, so the
/// energy of all images beyond `R` is `exp(−κR) / (4πVκ)`.
fn cutoff_distance(dims: [f64; 3], absorption: &Absorption, direct: f64, tail_db: f64) -> f64 {
    let (v, _) = volume_and_surface(dims);
    let [x, y, z] = dims;
    let areas = [y * z, y * z, x * z, x * z, x * y, x * y];
    let kappa = areas
        .iter()
        .zip(&absorption.walls)
        .map(|(s, &a)| -s * (1.0 - a.min(1.0 - 1e-12)).ln())
        .sum::<f64>()
        / (4.0 * v);
    let direct_energy = 1.0 / (16.0 * std::f64::consts::PI.powi(2) * direct * direct);
    let reverb_energy = 1.0 / (4.0 * std::f64::consts::PI * v * kappa);
    let reference = direct_energy.min(reverb_energy);
    let floor = reference * 10f64.powf(tail_db / 10.0);
    let r = (reverb_energy / floor).ln() / kappa;
    let cap = (3.0 * v * MAX_IMAGES as f64 / (4.0 * std::f64::consts::PI)).cbrt();
    r.max(direct).min(cap.max(direct))
}

struct AxisImage {
    offset: f64,
    gain: f64,
    order: u32,
}

/// All images along one axis whose coordinate lies within `radius` of
/// `center`, as offsets from `center`.
fn axis_images(
    len: f64,
    src: f64,
    center: f64,
    radius: f64,
    beta: (f64, f64),
    max_order: Option<u32>,
) -> Vec<AxisImage> {
    let lo = ((center - radius - len) / (2.0 * len)).floor() as i64 - 1;
    let hi = ((center + radius + len) / (2.0 * len)).ceil() as i64 + 1;
    let mut out = Vec::new();
    for m in lo..=hi {
        for p in 0..2i64 {
            let coord = (1 - 2 * p) as f64 * src + 2.0 * m as f64 * len;
            let offset = coord - center;
            if offset.abs() > radius {
                continue;
            }
            let n_low = (m - p).unsigned_abs() as u32;
            let n_high = m.unsigned_abs() as u32;
            let order = n_low + n_high;
            if max_order.is_some_and(|mo| order > mo) {
                continue;
            }
            let gain = beta.0.powi(n_low as i32) * beta.1.powi(n_high as i32);
            out.push(AxisImage {
                offset,
                gain,
                order,
            });
        }
    }
    out.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    out
}

/// Call `visit(position, gain)` for every image within the cutoff radius
/// around `center`; returns that radius.
fn visit_images(
    dims: [f64; 3],
    absorption: &Absorption,
    source: [f64; 3],
    center: [f64; 3],
    spread: f64,
    options: &RirOptions,
    mut visit: impl FnMut([f64; 3], f64),
) -> f64 {
    let direct = (distance(source, center) - spread).max(1e-6);
    let radius = cutoff_distance(dims, absorption, direct, options.tail_db) + spread;
    let beta = absorption.reflection_factors();
    let axes: Vec<Vec<AxisImage>> = (0..3)
        .map(|a| {
            axis_images(
                dims[a],
                source[a],
                center[a],
                radius,
                (beta[2 * a], beta[2 * a + 1]),
                options.max_order,
            )
        })
        .collect();
    let r2 = radius * radius;
    for ix in &axes[0] {
        for iy in &axes[1] {
            let dxy2 = ix.offset * ix.offset + iy.offset * iy.offset;
            if dxy2 > r2 {
                continue;
            }
            let gxy = ix.gain * iy.gain;
            if gxy == 0.0 {
                continue;
            }
            for iz in &axes[2] {
                if dxy2 + iz.offset * iz.offset > r2 {
                    continue;
                }
                if let Some(mo) = options.max_order {
                    if ix.order + iy.order + iz.order > mo {
                        continue;
                    }
                }
                let g = gxy * iz.gain;
                if g == 0.0 {
                    continue;
                }
                visit(
                    [
                        center[0] + ix.offset,
                        center[1] + iy.offset,
                        center[2] + iz.offset,
                    ],
                    g,
                );
            }
        }
    }
    radius
}

fn image_sum(
    dims: [f64; 3],
    absorption: &Absorption,
    source: [f64; 3],
    mics: &[[f64; 3]],
    options: &RirOptions,
) -> Vec<Rir> {
    let fs = options.sample_rate as f64;
    let n = mics.len() as f64;
    let center = [0, 1, 2].map(|i| mics.iter().map(|m| m[i]).sum::<f64>() / n);
    let spread = mics
        .iter()
        .map(|&m| distance(m, center))
        .fold(0.0, f64::max);
    let mut taps: Vec<Vec<(f64, f64)>> = vec![Vec::new(); mics.len()];
    let four_pi = 4.0 * std::f64::consts::PI;
    let radius = visit_images(
        dims,
        absorption,
        source,
        center,
        spread,
        options,
        |image, g| {
            for (t, &m) in taps.iter_mut().zip(mics) {
                let d = distance(image, m);
                t.push((
                    d / SPEED_OF_SOUND * fs + FRACTIONAL_DELAY_HALF as f64,
                    g / (four_pi * d),
                ));
            }
        },
    );
    let max_delay = (radius + spread) / SPEED_OF_SOUND * fs + FRACTIONAL_DELAY_HALF as f64;
    let len = max_delay.ceil() as usize + FRACTIONAL_DELAY_TAPS + 1;
    taps.into_iter()
        .map(|t| {
            let mut out = vec![0.0; len];
            for (delay, gain) in t {
                add_tap(&mut out, delay, gain);
            }
            finish(out, options)
        })
        .collect()
}

/// Energy of the image response per output sample, without band-limiting.
fn energy_histogram(
    dims: [f64; 3],
    absorption: &Absorption,
    source: [f64; 3],
    mic: [f64; 3],
    options: &RirOptions,
) -> Vec<f64> {
    let fs = options.sample_rate as f64;
    let mut hist = Vec::new();
    let four_pi = 4.0 * std::f64::consts::PI;
    visit_images(dims, absorption, source, mic, 0.0, options, |image, g| {
        let d = distance(image, mic);
        let k = (d / SPEED_OF_SOUND * fs).round() as usize;
        if hist.len() <= k {
            hist.resize(k + 1, 0.0);
        }
        let a = g / (four_pi * d);
        hist[k] += a * a;
    });
    hist
}
