use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use binsynth_ffi::*;

fn last_error() -> String {
    let p = binsynth_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut BinsynthRecord {
    let c = CString::new(text).unwrap();
    let mut rec = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_caption_parse(c.as_ptr(), &mut rec) },
        BinsynthStatus::Ok
    );
    assert!(!rec.is_null());
    rec
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { binsynth_string_free(p) };
    s
}

#[test]
fn record_json_round_trip() {
    let rec = parse("Small room, a bell rings from the left to the right slowly.");
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_record_to_json(rec, &mut json) },
        BinsynthStatus::Ok
    );
    let json = take_string(json);
    assert!(json.contains("\"moving\""), "{json}");
    let c = CString::new(json.clone()).unwrap();
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_record_from_json(c.as_ptr(), &mut back) },
        BinsynthStatus::Ok
    );
    let mut again = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_record_to_json(back, &mut again) },
        BinsynthStatus::Ok
    );
    assert_eq!(take_string(again), json);
    let mut caption = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_caption_generate(back, &mut caption) },
        BinsynthStatus::Ok
    );
    assert!(take_string(caption).starts_with("Small room,"));
    unsafe {
        binsynth_record_free(rec);
        binsynth_record_free(back);
    }
}

#[test]
fn status_codes() {
    let mut rec = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_caption_parse(ptr::null(), &mut rec) },
        BinsynthStatus::NullPointer
    );
    assert!(last_error().contains("text"));
    let empty = CString::new("  ").unwrap();
    assert_eq!(
        unsafe { binsynth_caption_parse(empty.as_ptr(), &mut rec) },
        BinsynthStatus::CaptionParse
    );
    let bad = CString::new("{not json").unwrap();
    assert_eq!(
        unsafe { binsynth_record_from_json(bad.as_ptr(), &mut rec) },
        BinsynthStatus::InvalidArgument
    );
    assert!(rec.is_null(), "out-pointer must stay untouched on failure");

    let ok = parse("A dog barks on the left.");
    assert!(binsynth_last_error().is_null());
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_scene_sample(ok, 1, -1.0, 16_000, &mut scene) },
        BinsynthStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { binsynth_scene_sample(ok, 1, 0.5, 16_000, &mut scene) },
        BinsynthStatus::Ok
    );
    let clip = vec![0.1; 8000];
    let mut l = vec![0.0; 10];
    let mut r = vec![0.0; 10];
    let status = unsafe {
        binsynth_scene_render(
            scene,
            clip.as_ptr(),
            8000,
            l.as_mut_ptr(),
            r.as_mut_ptr(),
            10,
        )
    };
    assert_eq!(status, BinsynthStatus::BufferSize);
    unsafe {
        binsynth_scene_free(scene);
        binsynth_record_free(ok);
        binsynth_string_free(ptr::null_mut());
        binsynth_record_free(ptr::null_mut());
    }
}

#[test]
fn render_and_locate() {
    let rec = parse("Outdoors, a dog barks on the left.");
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_scene_sample(rec, 11, 1.0, 16_000, &mut scene) },
        BinsynthStatus::Ok
    );
    let (mut sources, mut frames) = (0usize, 0usize);
    assert_eq!(
        unsafe { binsynth_scene_shape(scene, &mut sources, &mut frames) },
        BinsynthStatus::Ok
    );
    assert_eq!((sources, frames), (1, 16_000));
    let mut state = 0x1234_5678u64;
    let clip: Vec<f64> = (0..frames)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let mut l = vec![0.0; frames];
    let mut r = vec![0.0; frames];
    let status = unsafe {
        binsynth_scene_render(
            scene,
            clip.as_ptr(),
            frames,
            l.as_mut_ptr(),
            r.as_mut_ptr(),
            frames,
        )
    };
    assert_eq!(status, BinsynthStatus::Ok);
    let mut tdoa = 0.0;
    assert_eq!(
        unsafe { binsynth_gcc_phat(l.as_ptr(), r.as_ptr(), frames, 16_000, 0.001, &mut tdoa) },
        BinsynthStatus::Ok
    );
    // Left side: the right channel lags.
    assert!(tdoa < -300e-6, "tdoa {tdoa}");

    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_scene_to_json(scene, &mut json) },
        BinsynthStatus::Ok
    );
    let json = CString::new(take_string(json)).unwrap();
    let mut copy = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_scene_from_json(json.as_ptr(), &mut copy) },
        BinsynthStatus::Ok
    );
    let mut l2 = vec![0.0; frames];
    let mut r2 = vec![0.0; frames];
    unsafe {
        binsynth_scene_render(
            copy,
            clip.as_ptr(),
            frames,
            l2.as_mut_ptr(),
            r2.as_mut_ptr(),
            frames,
        )
    };
    assert_eq!((l, r), (l2, r2));
    unsafe {
        binsynth_scene_free(copy);
        binsynth_scene_free(scene);
        binsynth_record_free(rec);
    }
}

#[test]
fn matrices_through_the_boundary() {
    let rec = parse("A bell rings from the right to the left quickly.");
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_scene_sample(rec, 5, 10.0, 16_000, &mut scene) },
        BinsynthStatus::Ok
    );
    let mut coarse = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_matrix_coarse(scene, 4.0, &mut coarse) },
        BinsynthStatus::Ok
    );
    let mut shape = [0usize; 3];
    let mut data = ptr::null();
    assert_eq!(
        unsafe { binsynth_matrix_data(coarse, shape.as_mut_ptr(), &mut data) },
        BinsynthStatus::Ok
    );
    assert_eq!(shape, [1, 64, 768]);
    let values = unsafe { std::slice::from_raw_parts(data, shape.iter().product()) };
    for t in 0..shape[2] {
        let sum: f64 = (0..shape[1]).map(|l| values[l * shape[2] + t]).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_matrix_coarse(scene, 0.0, &mut bad) },
        BinsynthStatus::InvalidArgument
    );
    let mut fine = ptr::null_mut();
    assert_eq!(
        unsafe { binsynth_matrix_fine(scene, &mut fine) },
        BinsynthStatus::Ok
    );
    unsafe {
        binsynth_matrix_free(coarse);
        binsynth_matrix_free(fine);
        binsynth_scene_free(scene);
        binsynth_record_free(rec);
    }
}

#[test]
fn frechet_of_identical_sets_is_zero() {
    let rows: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64).collect();
    let mut d = -1.0;
    let status =
        unsafe { binsynth_frechet_distance(rows.as_ptr(), 10, rows.as_ptr(), 10, 4, &mut d) };
    assert_eq!(status, BinsynthStatus::Ok);
    assert!(d.abs() < 1e-9, "{d}");
    let status =
        unsafe { binsynth_frechet_distance(rows.as_ptr(), 1, rows.as_ptr(), 10, 4, &mut d) };
    assert_eq!(status, BinsynthStatus::InvalidArgument);
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/binsynth.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "binsynth_caption_parse",
        "binsynth_scene_render",
        "binsynth_gcc_phat",
        "binsynth_matrix_data",
        "binsynth_last_error",
        "typedef struct BinsynthScene BinsynthScene",
        "BINSYNTH_STATUS_BUFFER_SIZE",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// Build and run the C program in tests/c against the static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(exe) = std::env::current_exe() else {
        return;
    };
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libbinsynth_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let out_dir = tempfile_dir();
    let bin = out_dir.join("smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "{stdout}\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("shape: 1 64 768"), "{stdout}");
    assert!(stdout.lines().last().unwrap().starts_with("ok "));
    let _ = std::fs::remove_dir_all(out_dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("binsynth-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
