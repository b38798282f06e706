//! Objective stereo metrics: TDOA error and clarity, and the Fréchet
//! distance between stereo embedding sets.
//!
//! TDOA aggregates are reported in milliseconds multiplied by 100.

pub mod embed;
pub mod frechet;
pub mod gcc;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use embed::{default_embed, DefaultEmbedder, Embedder, Embedding, EMBEDDING_DIM};
pub use frechet::{frechet_distance, EmbeddingStats};
pub use gcc::{gcc_phat, tdoa_series, GccPhat, SeriesOptions, TdoaSeries, TdoaWindow};

/// Scale applied to TDOA values in milliseconds.
pub const SCORE_SCALE: f64 = 100.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
    /// Mean TDOA of the generated clip in milliseconds.
    pub generated_ms: Option<f64>,
    pub reference_ms: Option<f64>,
    /// `|generated − reference| × 100`; absent when the pair was skipped.
    pub gcc_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crw_error: Option<f64>,
}

impl PairRow {
    pub fn skipped(&self) -> bool {
        self.gcc_error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GccMae {
    pub score: f64,
    pub rows: Vec<PairRow>,
    pub skipped: Vec<String>,
}

/// Mean TDOA per clip, then mean absolute difference over pairs. Pairs
/// where either clip has no valid window are skipped and listed.
pub fn gcc_mae(
    ids: &[String],
    generated: &[TdoaSeries],
    reference: &[TdoaSeries],
) -> Result<GccMae> {
    if generated.len() != reference.len() || ids.len() != generated.len() {
        return Err(Error::LengthMismatch(generated.len(), reference.len()));
    }
    let mut rows = Vec::with_capacity(ids.len());
    let mut skipped = Vec::new();
    let mut sum = 0.0;
    let mut n = 0usize;
    for ((id, g), r) in ids.iter().zip(generated).zip(reference) {
        let gm = g.mean().map(|s| s * 1e3);
        let rm = r.mean().map(|s| s * 1e3);
        let err = gm.zip(rm).map(|(a, b)| (a - b).abs() * SCORE_SCALE);
        match err {
            Some(e) => {
                sum += e;
                n += 1;
            }
            None => skipped.push(id.clone()),
        }
        rows.push(PairRow {
            id: id.clone(),
            subset: None,
            generated_ms: gm,
            reference_ms: rm,
            gcc_error: err,
            crw_error: None,
        });
    }
    if n == 0 {
        return Err(Error::validation(
            "evaluation",
            "every pair was skipped (no loud windows)",
        ));
    }
    Ok(GccMae {
        score: sum / n as f64,
        rows,
        skipped,
    })
}

/// Mean over clips of the mean absolute TDOA; silent clips are ignored.
pub fn gcc_ma(set: &[TdoaSeries]) -> Result<f64> {
    let per_clip: Vec<f64> = set.iter().filter_map(TdoaSeries::mean_abs).collect();
    if per_clip.is_empty() {
        return Err(Error::validation("evaluation", "no clip has a loud window"));
    }
    Ok(per_clip.iter().sum::<f64>() / per_clip.len() as f64 * 1e3 * SCORE_SCALE)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub pairs: usize,
    pub gcc_mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crw_mae: Option<f64>,
    pub gcc_ma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gcc_ma_reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsad: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub overall: MetricSummary,
    pub embedder: String,
    pub skipped: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub subsets: BTreeMap<String, MetricSummary>,
    pub rows: Vec<PairRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[Option<f64>]) -> TdoaSeries {
        TdoaSeries {
            window: 0.1,
            windows: values
                .iter()
                .enumerate()
                .map(|(i, v)| TdoaWindow {
                    start: i as f64 * 0.1,
                    tdoa: v.unwrap_or(0.0),
                    valid: v.is_some(),
                })
                .collect(),
        }
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn set_against_itself_is_zero() {
        let s = vec![series(&[Some(1e-4), Some(-2e-4)]), series(&[Some(3e-4)])];
        assert_eq!(gcc_mae(&ids(2), &s, &s).unwrap().score, 0.0);
    }

    #[test]
    fn constant_offsets_hand_computed() {
        let g: Vec<_> = (0..10).map(|_| series(&[Some(0.1e-3); 5])).collect();
        let r: Vec<_> = (0..10).map(|_| series(&[Some(0.2e-3); 5])).collect();
        let score = gcc_mae(&ids(10), &g, &r).unwrap().score;
        assert!((score - 10.0).abs() < 1e-9, "score {score}");
    }

    #[test]
    fn silent_pairs_are_skipped_and_reported() {
        let g = vec![series(&[None, None]), series(&[Some(1e-4)])];
        let r = vec![series(&[Some(1e-4)]), series(&[Some(1e-4)])];
        let out = gcc_mae(&ids(2), &g, &r).unwrap();
        assert_eq!(out.skipped, vec!["c0".to_string()]);
        assert_eq!(out.score, 0.0);
        assert!(gcc_mae(&ids(1), &g[..1], &r[..1]).is_err());
    }

    #[test]
    fn gcc_ma_of_mixed_set_lies_between_extremes() {
        let right = series(&[Some(0.496e-3); 4]);
        let left = series(&[Some(-0.496e-3); 4]);
        let front = series(&[Some(0.0); 4]);
        let hard = gcc_ma(&[right.clone(), left.clone()]).unwrap();
        assert!((hard - 49.6).abs() < 1e-9);
        let mixed = gcc_ma(&[right, front.clone()]).unwrap();
        assert!(mixed > 0.0 && mixed < hard);
        assert_eq!(gcc_ma(&[front]).unwrap(), 0.0);
    }
}
