use std::fs;
use std::path::Path;

use super::{Manifest, ManifestEntry, Subset};
use crate::audio::WavFormat;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::signals::{synth, SignalKind};

/// Source files written per signal kind.
const VARIANTS: usize = 3;

/// Write synthetic source clips to `dir/sources` and a manifest with
/// `per_subset` entries of each subset to `dir/manifest.jsonl`.
pub fn write_demo(dir: impl AsRef<Path>, per_subset: usize, seed: u64) -> Result<Manifest> {
    let dir = dir.as_ref();
    let src_dir = dir.join("sources");
    fs::create_dir_all(&src_dir).map_err(|source| Error::File {
        path: src_dir.clone(),
        source,
    })?;
    let mut rng = SeededRng::new(seed);
    let mut files = Vec::new();
    for &kind in SignalKind::ALL {
        for v in 0..VARIANTS {
            // Mix of clips shorter and longer than 10 s.
            let seconds = [6.0, 12.0, 15.0][v];
            let audio = synth(kind, seconds, 16_000, &mut rng);
            let name = format!("{}_{v}.wav", kind.name());
            audio.write_wav(src_dir.join(&name), WavFormat::Pcm16)?;
            files.push((format!("sources/{name}"), kind));
        }
    }
    let mut entries = Vec::new();
    for &subset in Subset::ALL {
        let (lo, hi) = subset.source_range();
        for i in 0..per_subset {
            let n = lo + rng.index(hi - lo + 1);
            let picks: Vec<&(String, SignalKind)> =
                (0..n).map(|_| &files[rng.index(files.len())]).collect();
            let mut e = ManifestEntry::new(
                format!("{}_{i:04}", subset.as_str().to_ascii_lowercase()),
                subset,
                picks.iter().map(|(p, _)| p.clone()).collect(),
            );
            e.events = Some(
                picks
                    .iter()
                    .map(|(_, k)| k.event_phrase().to_string())
                    .collect(),
            );
            entries.push(e);
        }
    }
    let manifest = Manifest {
        base_dir: dir.to_path_buf(),
        entries,
    };
    manifest.write(dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
