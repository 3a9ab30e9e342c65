mod common;

use lrlab_core::recognition::{
    peak_score, recognize, shannon_entropy, sparse_histogram, HistogramProfile, DEFAULT_BINS,
};
use lrlab_core::synth::recognition_instance;
use lrlab_core::SolverConfig;
use rand::Rng;

#[test]
fn histogram_matches_per_value_rebinning() {
    let mut r = common::rng(12);
    let column: Vec<f64> = (0..5000).map(|_| r.random_range(-1.4..1.4)).collect();
    for bins in [2, 7, 32] {
        let h = sparse_histogram(&column, bins).unwrap();
        let mut counts = vec![0u64; bins];
        for &v in &column {
            let shown = (v / 2.0 + 0.5).clamp(0.0, 1.0);
            let mut idx = 0;
            while idx + 1 < bins && shown >= (idx + 1) as f64 / bins as f64 {
                idx += 1;
            }
            counts[idx] += 1;
        }
        assert_eq!(h.counts, counts, "{bins} bins");
        assert_eq!(h.total, 5000);
    }
}

#[test]
fn peak_and_entropy_match_direct_formulas() {
    let mut r = common::rng(13);
    let counts: Vec<u64> = (0..16).map(|_| r.random_range(0..40)).collect();
    let total: u64 = counts.iter().sum();
    let h = HistogramProfile {
        counts: counts.clone(),
        total,
    };
    let max = *counts.iter().max().unwrap();
    assert_eq!(peak_score(&h).unwrap(), max as f64 / total as f64);
    let mut entropy = 0.0;
    for &c in &counts {
        if c > 0 {
            let q = c as f64 / total as f64;
            entropy -= q * q.ln() / 2f64.ln();
        }
    }
    assert!((shannon_entropy(&h).unwrap() - entropy).abs() < 1e-12);
}

#[test]
fn three_subject_instance_picks_the_true_subject() {
    let inst = recognition_instance(3, 11, 32, 32, 2, 0).unwrap();
    let r = recognize(&inst.test, &inst.galleries, &SolverConfig::wsnm(0.8), DEFAULT_BINS).unwrap();
    assert_eq!(inst.true_subject, inst.galleries[2].subject);
    assert_eq!(r.predicted_subject, inst.true_subject);
    let peaks: Vec<f64> = r.scores.iter().map(|s| s.peak_score).collect();
    assert!(peaks[2] > peaks[0] && peaks[2] > peaks[1], "{peaks:?}");
    for (s, (subject, h)) in r.scores.iter().zip(&r.histograms) {
        assert_eq!(&s.subject, subject);
        assert!(s.peak_score > 0.0 && s.peak_score <= 1.0);
        assert!(s.entropy >= 0.0 && s.entropy <= (DEFAULT_BINS as f64).log2());
        assert_eq!(h.counts.iter().sum::<u64>(), h.total);
        assert_eq!(h.total, 32 * 32);
    }
}

#[test]
fn duplicate_of_a_gallery_image_leaves_a_near_zero_sparse_column() {
    for seed in 0..3 {
        let inst = recognition_instance(3, 11, 32, 32, 1, seed).unwrap();
        let test = inst.galleries[1].images[0].clone();
        let r = recognize(&test, &inst.galleries, &SolverConfig::wsnm(0.8), DEFAULT_BINS).unwrap();
        let h = &r.histograms[1].1;
        let centre = HistogramProfile::bin_of(DEFAULT_BINS, 0.5);
        let frac = h.counts[centre] as f64 / h.total as f64;
        assert!(frac >= 0.99, "seed {seed}: {frac}");
        assert_eq!(r.predicted_subject, inst.galleries[1].subject);
    }
}

#[test]
fn recognition_is_deterministic() {
    let inst = recognition_instance(3, 6, 16, 16, 0, 4).unwrap();
    let cfg = SolverConfig::wsnm(0.8);
    let a = recognize(&inst.test, &inst.galleries, &cfg, 16).unwrap();
    let b = recognize(&inst.test, &inst.galleries, &cfg, 16).unwrap();
    assert_eq!(a.histograms, b.histograms);
    assert_eq!(a.predicted_subject, b.predicted_subject);
}
