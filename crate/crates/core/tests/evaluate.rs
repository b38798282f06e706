use std::fs;

use binsynth::audio::{AudioBuffer, WavFormat};
use binsynth::pipeline::{
    evaluate, format_table, synthesize, write_demo, EvalOptions, SynthOptions,
};

#[test]
fn self_swap_and_subsets() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_demo(tmp.path().join("in"), 3, 21).unwrap();
    let out = tmp.path().join("out");
    let opts = SynthOptions {
        global_seed: 2,
        duration: 4.0,
        ..SynthOptions::default()
    };
    let index = synthesize(&manifest, &out, &opts).unwrap();
    assert!(index.failures.is_empty());

    let same = evaluate(&out, &out, &EvalOptions::default()).unwrap();
    assert_eq!(same.overall.pairs, 12);
    assert_eq!(same.overall.gcc_mae, Some(0.0));
    assert!(
        same.overall.fsad.unwrap().abs() < 1e-6,
        "{:?}",
        same.overall.fsad
    );
    let subsets: Vec<&str> = same.subsets.keys().map(String::as_str).collect();
    assert_eq!(subsets, ["DS", "M", "SD", "SS"]);
    assert!(same.subsets.values().all(|s| s.pairs == 3));
    let table = format_table(&same);
    assert!(table.lines().count() >= 6, "{table}");

    // Mirror every clip; paired by file stem against the dataset.
    let swapped = tmp.path().join("swapped");
    fs::create_dir(&swapped).unwrap();
    for row in &index.clips {
        let a = AudioBuffer::read_wav(out.join(&row.wav)).unwrap();
        a.swap_channels()
            .write_wav(swapped.join(format!("{}.wav", row.id)), WavFormat::Float32)
            .unwrap();
    }
    let mirrored = evaluate(&swapped, &out, &EvalOptions::default()).unwrap();
    assert_eq!(mirrored.overall.pairs, 12);
    assert!(
        mirrored.overall.gcc_mae.unwrap() > 5.0,
        "{:?}",
        mirrored.overall
    );
    for row in mirrored.rows.iter().filter(|r| r.gcc_error.is_some()) {
        let (g, r) = (row.generated_ms.unwrap(), row.reference_ms.unwrap());
        assert!((g + r).abs() < 0.01, "{}: {g} vs {r}", row.id);
    }
    assert!(mirrored.overall.fsad.unwrap() > 1.0);

    // Only the SS rows.
    let ss = evaluate(
        &out,
        &out,
        &EvalOptions {
            subsets: Some(vec!["ss".into()]),
            ..EvalOptions::default()
        },
    )
    .unwrap();
    assert_eq!(ss.overall.pairs, 3);
}

#[test]
fn disjoint_sets_are_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    fs::create_dir(&a).unwrap();
    fs::create_dir(&b).unwrap();
    let clip = AudioBuffer::silence(2, 1600, 16_000);
    clip.write_wav(a.join("x.wav"), WavFormat::Pcm16).unwrap();
    clip.write_wav(b.join("y.wav"), WavFormat::Pcm16).unwrap();
    assert!(evaluate(&a, &b, &EvalOptions::default()).is_err());
}
