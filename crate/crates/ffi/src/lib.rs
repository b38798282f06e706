//! C ABI over `binsynth`.
//!
//! Conventions:
//! - every function returns a [`BinsynthStatus`]; results come back through
//!   out-pointers that are only written on success;
//! - objects are opaque handles released with their `_free` function;
//! - strings returned to the caller are NUL-terminated and released with
//!   [`binsynth_string_free`];
//! - after a failure, [`binsynth_last_error`] describes it (per thread);
//! - panics never cross the boundary and surface as `BINSYNTH_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use binsynth::audio::AudioBuffer;
use binsynth::azimuth::{AzimuthStateMatrix, BinTrajectory, D_TIME};
use binsynth::caption::{generate_caption, parse_caption};
use binsynth::metrics::{frechet_distance, gcc_phat, EmbeddingStats};
use binsynth::render::{render_scene, RenderOptions};
use binsynth::scene::{sample_scene, AttributeRecord, SceneSpec};
use binsynth::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinsynthStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CaptionParse = 3,
    Geometry = 4,
    Io = 5,
    /// A caller-provided buffer has the wrong size.
    BufferSize = 6,
    Panic = 7,
}

/// An attribute record: scene size plus per-source labels.
pub struct BinsynthRecord {
    inner: AttributeRecord,
}

/// A sampled scene: room, microphone array and source trajectories.
pub struct BinsynthScene {
    inner: SceneSpec,
}

/// A coarse or fine azimuth state matrix, `[source][azimuth_bin][time_bin]`.
pub struct BinsynthMatrix {
    inner: AzimuthStateMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(BinsynthStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::CaptionParse { .. } => BinsynthStatus::CaptionParse,
            Error::Geometry(_) | Error::UnreachableRt60 { .. } => BinsynthStatus::Geometry,
            Error::File { .. } | Error::Io(_) | Error::Wav(_) => BinsynthStatus::Io,
            _ => BinsynthStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(BinsynthStatus::InvalidArgument, e.to_string())
    }
}

fn fail(status: BinsynthStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> BinsynthStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BinsynthStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BinsynthStatus::Panic
        }
    }
}

fn not_null<T>(p: *const T, name: &str) -> Outcome {
    if p.is_null() {
        Err(fail(BinsynthStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    not_null(p, name)?;
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            BinsynthStatus::InvalidArgument,
            format!("{name} is not UTF-8"),
        )
    })
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(BinsynthStatus::InvalidArgument, "string contains NUL"))
}

unsafe fn out<T>(p: *mut T, value: T) {
    p.write(value);
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn binsynth_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn binsynth_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn binsynth_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a spatial caption into a record.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_caption_parse(
    text: *const c_char,
    out_record: *mut *mut BinsynthRecord,
) -> BinsynthStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        not_null(out_record, "out_record")?;
        let inner = parse_caption(text)?;
        out(
            out_record,
            Box::into_raw(Box::new(BinsynthRecord { inner })),
        );
        Ok(())
    })
}

/// Build a record from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_record` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_record_from_json(
    json: *const c_char,
    out_record: *mut *mut BinsynthRecord,
) -> BinsynthStatus {
    guard(|| {
        let json = read_str(json, "json")?;
        not_null(out_record, "out_record")?;
        let inner: AttributeRecord = serde_json::from_str(json)?;
        inner.validate()?;
        out(
            out_record,
            Box::into_raw(Box::new(BinsynthRecord { inner })),
        );
        Ok(())
    })
}

/// # Safety
/// `record` must be a live handle; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_record_to_json(
    record: *const BinsynthRecord,
    out_json: *mut *mut c_char,
) -> BinsynthStatus {
    guard(|| {
        not_null(record, "record")?;
        not_null(out_json, "out_json")?;
        let s = serde_json::to_string(&(*record).inner)?;
        out(out_json, to_c_string(s)?);
        Ok(())
    })
}

/// # Safety
/// `record` must be a live handle; `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_record_source_count(
    record: *const BinsynthRecord,
    out_count: *mut usize,
) -> BinsynthStatus {
    guard(|| {
        not_null(record, "record")?;
        not_null(out_count, "out_count")?;
        out(out_count, (*record).inner.sources.len());
        Ok(())
    })
}

/// Generate a caption using each source's event text as its phrase.
///
/// # Safety
/// `record` must be a live handle; `out_caption` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_caption_generate(
    record: *const BinsynthRecord,
    out_caption: *mut *mut c_char,
) -> BinsynthStatus {
    guard(|| {
        not_null(record, "record")?;
        not_null(out_caption, "out_caption")?;
        let r = &(*record).inner;
        let phrases: Vec<&str> = r.sources.iter().map(|s| s.event.as_str()).collect();
        out(out_caption, to_c_string(generate_caption(r, &phrases))?);
        Ok(())
    })
}

/// # Safety
/// `record` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn binsynth_record_free(record: *mut BinsynthRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Sample a scene for a record. The same seed always gives the same scene.
///
/// # Safety
/// `record` must be a live handle; `out_scene` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_scene_sample(
    record: *const BinsynthRecord,
    seed: u64,
    duration: f64,
    sample_rate: u32,
    out_scene: *mut *mut BinsynthScene,
) -> BinsynthStatus {
    guard(|| {
        not_null(record, "record")?;
        not_null(out_scene, "out_scene")?;
        if !(duration > 0.0 && duration.is_finite()) || sample_rate == 0 {
            return Err(fail(
                BinsynthStatus::InvalidArgument,
                "duration and sample rate must be positive",
            ));
        }
        let inner = sample_scene(&(*record).inner, seed, duration, sample_rate)?;
        out(out_scene, Box::into_raw(Box::new(BinsynthScene { inner })));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out_scene` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_scene_from_json(
    json: *const c_char,
    out_scene: *mut *mut BinsynthScene,
) -> BinsynthStatus {
    guard(|| {
        let json = read_str(json, "json")?;
        not_null(out_scene, "out_scene")?;
        let inner = SceneSpec::from_json(json)?;
        out(out_scene, Box::into_raw(Box::new(BinsynthScene { inner })));
        Ok(())
    })
}

/// # Safety
/// `scene` must be a live handle; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_scene_to_json(
    scene: *const BinsynthScene,
    out_json: *mut *mut c_char,
) -> BinsynthStatus {
    guard(|| {
        not_null(scene, "scene")?;
        not_null(out_json, "out_json")?;
        out(out_json, to_c_string((*scene).inner.to_json()?)?);
        Ok(())
    })
}

/// Number of sources and frames per channel of the rendered mix.
///
/// # Safety
/// `scene` must be a live handle; the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn binsynth_scene_shape(
    scene: *const BinsynthScene,
    out_sources: *mut usize,
    out_frames: *mut usize,
) -> BinsynthStatus {
    guard(|| {
        not_null(scene, "scene")?;
        not_null(out_sources, "out_sources")?;
        not_null(out_frames, "out_frames")?;
        out(out_sources, (*scene).inner.sources.len());
        out(out_frames, (*scene).inner.frames());
        Ok(())
    })
}

/// Render the scene. `clips` holds `sources` mono clips of `clip_frames`
/// samples each, back to back, at the scene's sample rate; clips are
/// zero-padded or truncated to the scene length. `left` and `right` must
/// each hold `frames` samples as reported by [`binsynth_scene_shape`].
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn binsynth_scene_render(
    scene: *const BinsynthScene,
    clips: *const f64,
    clip_frames: usize,
    left: *mut f64,
    right: *mut f64,
    frames: usize,
) -> BinsynthStatus {
    guard(|| {
        not_null(scene, "scene")?;
        not_null(clips, "clips")?;
        not_null(left, "left")?;
        not_null(right, "right")?;
        let scene = &(*scene).inner;
        if frames != scene.frames() {
            return Err(fail(
                BinsynthStatus::BufferSize,
                format!(
                    "output holds {frames} frames, scene needs {}",
                    scene.frames()
                ),
            ));
        }
        let n = scene.sources.len();
        let all = slice::from_raw_parts(clips, n * clip_frames);
        let mono: Vec<AudioBuffer> = all
            .chunks_exact(clip_frames.max(1))
            .take(n)
            .map(|c| AudioBuffer::mono(c.to_vec(), scene.sample_rate))
            .collect();
        let rendered = render_scene(scene, &mono, &RenderOptions::default())?;
        slice::from_raw_parts_mut(left, frames).copy_from_slice(rendered.mix.left());
        slice::from_raw_parts_mut(right, frames).copy_from_slice(rendered.mix.right());
        Ok(())
    })
}

/// # Safety
/// `scene` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn binsynth_scene_free(scene: *mut BinsynthScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

unsafe fn scene_trajectories(scene: *const BinsynthScene) -> Result<Vec<BinTrajectory>, Failure> {
    not_null(scene, "scene")?;
    let s = &(*scene).inner;
    Ok(s.sources
        .iter()
        .map(|src| BinTrajectory::from_source(src, s.duration, D_TIME))
        .collect::<binsynth::Result<Vec<_>>>()?)
}

/// Gaussian azimuth matrix with spread `sigma` (in bins).
///
/// # Safety
/// `scene` must be a live handle; `out_matrix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_matrix_coarse(
    scene: *const BinsynthScene,
    sigma: f64,
    out_matrix: *mut *mut BinsynthMatrix,
) -> BinsynthStatus {
    guard(|| {
        let trajs = scene_trajectories(scene)?;
        not_null(out_matrix, "out_matrix")?;
        let inner = AzimuthStateMatrix::coarse(&trajs, D_TIME, sigma)?;
        out(
            out_matrix,
            Box::into_raw(Box::new(BinsynthMatrix { inner })),
        );
        Ok(())
    })
}

/// One-hot azimuth matrix.
///
/// # Safety
/// `scene` must be a live handle; `out_matrix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn binsynth_matrix_fine(
    scene: *const BinsynthScene,
    out_matrix: *mut *mut BinsynthMatrix,
) -> BinsynthStatus {
    guard(|| {
        let trajs = scene_trajectories(scene)?;
        not_null(out_matrix, "out_matrix")?;
        let inner = AzimuthStateMatrix::fine(&trajs, D_TIME)?;
        out(
            out_matrix,
            Box::into_raw(Box::new(BinsynthMatrix { inner })),
        );
        Ok(())
    })
}

/// Shape as `[sources, azimuth_bins, time_bins]` and a pointer to the
/// row-major data, valid while the matrix lives.
///
/// # Safety
/// `matrix` must be a live handle; `out_shape` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn binsynth_matrix_data(
    matrix: *const BinsynthMatrix,
    out_shape: *mut usize,
    out_data: *mut *const f64,
) -> BinsynthStatus {
    guard(|| {
        not_null(matrix, "matrix")?;
        not_null(out_shape, "out_shape")?;
        not_null(out_data, "out_data")?;
        let m = &(*matrix).inner;
        slice::from_raw_parts_mut(out_shape, 3).copy_from_slice(&m.shape());
        out(out_data, m.data.as_ptr());
        Ok(())
    })
}

/// # Safety
/// `matrix` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn binsynth_matrix_free(matrix: *mut BinsynthMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// GCC-PHAT delay of `right` relative to `left` in seconds; positive means
/// the left channel lags (source on the right).
///
/// # Safety
/// `left` and `right` must each hold `frames` samples.
#[no_mangle]
pub unsafe extern "C" fn binsynth_gcc_phat(
    left: *const f64,
    right: *const f64,
    frames: usize,
    sample_rate: u32,
    max_lag: f64,
    out_tdoa: *mut f64,
) -> BinsynthStatus {
    guard(|| {
        not_null(left, "left")?;
        not_null(right, "right")?;
        not_null(out_tdoa, "out_tdoa")?;
        if sample_rate == 0 || max_lag.is_nan() || max_lag <= 0.0 {
            return Err(fail(
                BinsynthStatus::InvalidArgument,
                "sample rate and max lag must be positive",
            ));
        }
        let (l, r) = (
            slice::from_raw_parts(left, frames),
            slice::from_raw_parts(right, frames),
        );
        out(out_tdoa, gcc_phat(l, r, sample_rate, max_lag)?);
        Ok(())
    })
}

/// Fréchet distance between Gaussian fits of two embedding sets, each
/// given row-major as `count × dim`.
///
/// # Safety
/// `a` must hold `count_a * dim` values and `b` `count_b * dim`.
#[no_mangle]
pub unsafe extern "C" fn binsynth_frechet_distance(
    a: *const f64,
    count_a: usize,
    b: *const f64,
    count_b: usize,
    dim: usize,
    out_distance: *mut f64,
) -> BinsynthStatus {
    guard(|| {
        not_null(a, "a")?;
        not_null(b, "b")?;
        not_null(out_distance, "out_distance")?;
        if dim == 0 {
            return Err(fail(
                BinsynthStatus::InvalidArgument,
                "dim must be positive",
            ));
        }
        let rows = |p: *const f64, n: usize| -> Vec<Vec<f64>> {
            slice::from_raw_parts(p, n * dim)
                .chunks_exact(dim)
                .map(<[f64]>::to_vec)
                .collect()
        };
        let sa = EmbeddingStats::from_embeddings(&rows(a, count_a))?;
        let sb = EmbeddingStats::from_embeddings(&rows(b, count_b))?;
        out(out_distance, frechet_distance(&sa, &sb)?);
        Ok(())
    })
}
