//! FFT convolution and the fractional-delay kernel shared by the renderers.

use std::cell::RefCell;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Number of taps in the windowed-sinc fractional delay kernel.
pub const FRACTIONAL_DELAY_TAPS: usize = 81;
/// Half the kernel length; also the latency every RIR carries so that
/// kernels never get truncated at sample zero.
pub const FRACTIONAL_DELAY_HALF: usize = FRACTIONAL_DELAY_TAPS / 2;
/// Sub-sample positions tabulated per unit delay.
pub const FRACTIONAL_DELAY_RESOLUTION: usize = 1024;

/// Hann-windowed sinc kernels tabulated at `1/FRACTIONAL_DELAY_RESOLUTION`
/// sample steps.
pub struct FractionalDelayTable {
    rows: Vec<f64>,
}

impl FractionalDelayTable {
    pub fn global() -> &'static Self {
        static TABLE: OnceLock<FractionalDelayTable> = OnceLock::new();
        TABLE.get_or_init(Self::build)
    }

    fn build() -> Self {
        let half = FRACTIONAL_DELAY_HALF as f64;
        let width = half + 1.0;
        let mut rows = Vec::with_capacity(FRACTIONAL_DELAY_RESOLUTION * FRACTIONAL_DELAY_TAPS);
        for r in 0..FRACTIONAL_DELAY_RESOLUTION {
            let frac = r as f64 / FRACTIONAL_DELAY_RESOLUTION as f64;
            for k in 0..FRACTIONAL_DELAY_TAPS {
                let x = k as f64 - half - frac;
                rows.push(windowed_sinc(x, width));
            }
        }
        Self { rows }
    }

    /// Split a delay (in samples) into the index of the first kernel tap and
    /// the kernel to add there. The first tap lands at
    /// `floor(delay) - FRACTIONAL_DELAY_HALF`.
    pub fn kernel(&self, delay: f64) -> (i64, &[f64]) {
        let scaled = (delay * FRACTIONAL_DELAY_RESOLUTION as f64).round() as i64;
        let whole = scaled.div_euclid(FRACTIONAL_DELAY_RESOLUTION as i64);
        let row = scaled.rem_euclid(FRACTIONAL_DELAY_RESOLUTION as i64) as usize;
        let start = row * FRACTIONAL_DELAY_TAPS;
        (
            whole - FRACTIONAL_DELAY_HALF as i64,
            &self.rows[start..start + FRACTIONAL_DELAY_TAPS],
        )
    }
}

/// `sinc(x) * hann(x)` with the window reaching zero at `|x| = width`.
pub fn windowed_sinc(x: f64, width: f64) -> f64 {
    if x.abs() >= width {
        return 0.0;
    }
    let window = 0.5 * (1.0 + (std::f64::consts::PI * x / width).cos());
    let sinc = if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    };
    window * sinc
}

fn block_fft_size(signal_len: usize, kernel_len: usize) -> usize {
    let full = (signal_len + kernel_len).saturating_sub(1).max(1);
    let ola = (2 * kernel_len).next_power_of_two().max(4096);
    full.next_power_of_two().min(ola)
}

/// Full linear convolution (`n + m - 1` samples) by FFT overlap-add.
pub fn fft_convolve(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    let (re, _) = convolve_packed(signal, kernel, &[]);
    re
}

/// Convolve one real signal with two real kernels at once: the kernels are
/// packed as real and imaginary parts of one complex kernel, so a single
/// complex convolution yields both outputs.
pub fn fft_convolve_pair(signal: &[f64], left: &[f64], right: &[f64]) -> (Vec<f64>, Vec<f64>) {
    convolve_packed(signal, left, right)
}

fn convolve_packed(signal: &[f64], k_re: &[f64], k_im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = k_re.len().max(k_im.len());
    if signal.is_empty() || m == 0 {
        return (Vec::new(), Vec::new());
    }
    let out_len = signal.len() + m - 1;
    let n_fft = block_fft_size(signal.len(), m);
    let block = n_fft - m + 1;
    let fwd = plan_forward(n_fft);
    let inv = plan_inverse(n_fft);

    let mut kernel = vec![Complex64::new(0.0, 0.0); n_fft];
    for (i, &x) in k_re.iter().enumerate() {
        kernel[i].re = x;
    }
    for (i, &x) in k_im.iter().enumerate() {
        kernel[i].im = x;
    }
    fwd.process(&mut kernel);

    let scale = 1.0 / n_fft as f64;
    let mut out_re = vec![0.0; out_len];
    let mut out_im = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, chunk) in signal.chunks(block).enumerate() {
        let offset = b * block;
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (c, &x) in buf.iter_mut().zip(chunk) {
            c.re = x;
        }
        fwd.process(&mut buf);
        for (c, k) in buf.iter_mut().zip(&kernel) {
            *c *= k;
        }
        inv.process(&mut buf);
        let valid = (chunk.len() + m - 1).min(out_len - offset);
        for i in 0..valid {
            out_re[offset + i] += buf[i].re * scale;
            out_im[offset + i] += buf[i].im * scale;
        }
    }
    (out_re, out_im)
}
