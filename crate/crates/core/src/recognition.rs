//! Identification from histograms of sparse error images.
//!
//! The test image is appended as the last column to each candidate subject's
//! gallery and the stack is decomposed. Against the right subject the test
//! column's sparse part holds only its own occlusion, so most of its values
//! sit at zero and the histogram has one dominant bin. Against a wrong subject
//! the between-person differences leak into the sparse part as well and the
//! histogram spreads out. The subject with the most peaked histogram wins.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::{self, GrayImage};
use crate::solvers::{self, SolverConfig};

pub const DEFAULT_BINS: usize = 32;

/// Counts over equally spaced bins on `[0, 1]`; `1.0` lands in the last bin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HistogramProfile {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl HistogramProfile {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_low(&self, i: usize) -> f64 {
        i as f64 / self.bin_count() as f64
    }

    pub fn bin_high(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.bin_count() as f64
    }

    /// Index of the bin holding `v` (already in `[0, 1]`).
    pub fn bin_of(bin_count: usize, v: f64) -> usize {
        ((v * bin_count as f64).floor() as usize).min(bin_count - 1)
    }

    /// `bin_index,bin_low,bin_high,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_index,bin_low,bin_high,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{c}", self.bin_low(i), self.bin_high(i));
        }
        out
    }
}

/// Maps a sparse value to the display range: `clamp(v / 2 + 0.5, 0, 1)`.
pub fn sparse_display_transform(sparse_column: &[f64]) -> Vec<f64> {
    sparse_column.iter().map(|&v| display_value(v)).collect()
}

pub(crate) fn display_value(v: f64) -> f64 {
    (v / 2.0 + 0.5).clamp(0.0, 1.0)
}

pub fn sparse_histogram(sparse_column: &[f64], bin_count: usize) -> Result<HistogramProfile> {
    if bin_count < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bin_count}")));
    }
    let mut counts = vec![0u64; bin_count];
    for &v in sparse_column {
        counts[HistogramProfile::bin_of(bin_count, display_value(v))] += 1;
    }
    Ok(HistogramProfile {
        counts,
        total: sparse_column.len() as u64,
    })
}

/// Fraction of the mass in the fullest bin.
pub fn peak_score(h: &HistogramProfile) -> Result<f64> {
    non_empty(h)?;
    let max = h.counts.iter().copied().max().unwrap_or(0);
    Ok(max as f64 / h.total as f64)
}

/// Shannon entropy of the bin fractions, in bits.
pub fn shannon_entropy(h: &HistogramProfile) -> Result<f64> {
    non_empty(h)?;
    let total = h.total as f64;
    Ok(h.counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / total;
            -q * q.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

fn non_empty(h: &HistogramProfile) -> Result<()> {
    if h.total == 0 {
        Err(Error::invalid("histogram is empty"))
    } else {
        Ok(())
    }
}

/// One candidate subject and its reference images.
#[derive(Clone, Debug)]
pub struct Gallery {
    pub subject: String,
    pub images: Vec<GrayImage>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubjectScore {
    pub subject: String,
    pub peak_score: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecognitionResult {
    pub predicted_subject: String,
    /// In gallery order.
    pub scores: Vec<SubjectScore>,
    pub histograms: Vec<(String, HistogramProfile)>,
}

impl RecognitionResult {
    /// Scores sorted best first under the decision rule.
    pub fn ranked(&self) -> Vec<&SubjectScore> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| compare_scores(&self.scores[a], a, &self.scores[b], b));
        order.into_iter().map(|i| &self.scores[i]).collect()
    }
}

/// Higher peak first, then lower entropy, then lower gallery index.
fn compare_scores(a: &SubjectScore, ia: usize, b: &SubjectScore, ib: usize) -> std::cmp::Ordering {
    b.peak_score
        .total_cmp(&a.peak_score)
        .then(a.entropy.total_cmp(&b.entropy))
        .then(ia.cmp(&ib))
}

/// Sparse part of the test image when stacked (last) with one gallery.
pub fn test_sparse_column(test: &GrayImage, gallery: &Gallery, cfg: &SolverConfig) -> Result<Vec<f64>> {
    if gallery.images.is_empty() {
        return Err(Error::invalid(format!(
            "gallery for subject {} is empty",
            gallery.subject
        )));
    }
    let mut images = gallery.images.clone();
    images.push(test.clone());
    let stacked = imaging::stack(&images)?;
    let d = solvers::solve(stacked.matrix(), cfg)?;
    Ok(d.sparse.column(images.len() - 1))
}

pub fn recognize(
    test: &GrayImage,
    galleries: &[Gallery],
    cfg: &SolverConfig,
    bin_count: usize,
) -> Result<RecognitionResult> {
    if galleries.is_empty() {
        return Err(Error::invalid("no candidate subjects"));
    }
    if bin_count < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bin_count}")));
    }
    cfg.validate()?;
    for g in galleries {
        if let Some(bad) = g.images.iter().find(|im| im.dims() != test.dims()) {
            return Err(Error::ShapeMismatch(format!(
                "subject {} has a {}x{} image, test image is {}x{}",
                g.subject,
                bad.width(),
                bad.height(),
                test.width(),
                test.height()
            )));
        }
    }

    let evidence: Vec<(SubjectScore, HistogramProfile)> = galleries
        .par_iter()
        .map(|g| {
            let attach = |e: Error| Error::Subject {
                subject: g.subject.clone(),
                source: Box::new(e),
            };
            let column = test_sparse_column(test, g, cfg).map_err(attach)?;
            let hist = sparse_histogram(&column, bin_count).map_err(attach)?;
            let score = SubjectScore {
                subject: g.subject.clone(),
                peak_score: peak_score(&hist).map_err(attach)?,
                entropy: shannon_entropy(&hist).map_err(attach)?,
            };
            Ok((score, hist))
        })
        .collect::<Result<_>>()?;

    let (scores, hists): (Vec<_>, Vec<_>) = evidence.into_iter().unzip();
    let best = (0..scores.len())
        .min_by(|&a, &b| compare_scores(&scores[a], a, &scores[b], b))
        .expect("at least one subject");
    Ok(RecognitionResult {
        predicted_subject: scores[best].subject.clone(),
        histograms: scores.iter().map(|s| s.subject.clone()).zip(hists).collect(),
        scores,
    })
}
