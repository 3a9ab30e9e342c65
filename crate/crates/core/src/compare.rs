//! Cross-solver comparison of sweep outputs: best PSNR per case and variant,
//! deltas against a baseline (RPCA when present), and their medians.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::solvers::SolverKind;
use crate::sweep::{best_row, format_sig6, CaseResult, Variant};

/// A labelled sweep output, e.g. a file name and its parsed rows.
#[derive(Clone, Debug)]
pub struct SweepInput {
    pub source: String,
    pub rows: Vec<CaseResult>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestCell {
    pub psnr_db: f64,
    pub ssim: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub dataset: String,
    pub case: String,
    pub subject: String,
    /// Indexed like [`CompareReport::variants`].
    pub best: Vec<BestCell>,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    /// Column labels, unique; a repeated variant gets a `#n` suffix.
    pub variants: Vec<String>,
    pub kinds: Vec<Variant>,
    pub baseline: usize,
    pub rows: Vec<CompareRow>,
    /// Cases dropped because some input lacked them, with the inputs missing them.
    pub dropped: Vec<(String, Vec<String>)>,
}

/// `a - b` where equal infinities give 0.
pub fn psnr_delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        a - b
    }
}

/// Median ignoring NaN; `None` when nothing remains.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        let (a, b) = (v[n / 2 - 1], v[n / 2]);
        if a == b {
            a
        } else {
            a / 2.0 + b / 2.0
        }
    })
}

type CaseKey = (String, String);

pub fn compare(inputs: &[SweepInput]) -> Result<CompareReport> {
    if inputs.len() < 2 {
        return Err(Error::invalid("comparison needs at least two sweep outputs"));
    }
    // Per variant column: best cell per case.
    let mut variants: Vec<String> = Vec::new();
    let mut kinds: Vec<Variant> = Vec::new();
    let mut columns: Vec<BTreeMap<CaseKey, (String, BestCell)>> = Vec::new();
    let mut case_sets: Vec<BTreeSet<CaseKey>> = Vec::new();
    let mut first_seen: Vec<CaseKey> = Vec::new();

    for input in inputs {
        if input.rows.is_empty() {
            return Err(Error::invalid(format!("{} has no result rows", input.source)));
        }
        let mut cases = BTreeSet::new();
        let mut by_variant: Vec<(String, Variant, BTreeMap<CaseKey, Vec<CaseResult>>)> = Vec::new();
        for r in &input.rows {
            let key = (r.dataset.clone(), r.case.clone());
            if cases.insert(key.clone()) && !first_seen.contains(&key) {
                first_seen.push(key.clone());
            }
            let label = r.variant().label();
            let slot = match by_variant.iter().position(|(l, _, _)| *l == label) {
                Some(i) => i,
                None => {
                    by_variant.push((label, r.variant(), BTreeMap::new()));
                    by_variant.len() - 1
                }
            };
            by_variant[slot].2.entry(key).or_default().push(r.clone());
        }
        for (label, variant, per_case) in by_variant {
            let mut unique = label.clone();
            let mut n = 2;
            while variants.contains(&unique) {
                unique = format!("{label}#{n}");
                n += 1;
            }
            variants.push(unique);
            kinds.push(variant);
            columns.push(
                per_case
                    .into_iter()
                    .map(|(k, rows)| {
                        let b = best_row(&rows);
                        let cell = BestCell {
                            psnr_db: b.psnr_db,
                            ssim: b.ssim,
                            rank: b.rank,
                        };
                        (k, (b.subject.clone(), cell))
                    })
                    .collect(),
            );
        }
        case_sets.push(cases);
    }

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for key in first_seen {
        let missing: Vec<String> = inputs
            .iter()
            .zip(&case_sets)
            .filter(|(_, set)| !set.contains(&key))
            .map(|(i, _)| i.source.clone())
            .collect();
        if !missing.is_empty() {
            dropped.push((key.1.clone(), missing));
            continue;
        }
        let present: Vec<Option<&(String, BestCell)>> = columns.iter().map(|c| c.get(&key)).collect();
        if present.iter().any(Option::is_none) {
            // A variant that skipped this case inside an input that has it.
            dropped.push((key.1.clone(), Vec::new()));
            continue;
        }
        let subject = present[0].unwrap().0.clone();
        rows.push(CompareRow {
            dataset: key.0,
            case: key.1,
            subject,
            best: present.into_iter().map(|p| p.unwrap().1).collect(),
        });
    }
    if rows.is_empty() {
        return Err(Error::invalid("the sweep outputs share no cases"));
    }
    let baseline = kinds.iter().position(|v| v.kind == SolverKind::Rpca).unwrap_or(0);
    Ok(CompareReport {
        variants,
        kinds,
        baseline,
        rows,
        dropped,
    })
}

impl CompareReport {
    /// Column index of the WSNM p=0.8 variant, if any.
    fn flagged(&self) -> Option<usize> {
        self.kinds
            .iter()
            .enumerate()
            .position(|(i, v)| i != self.baseline && v.kind == SolverKind::Wsnm && v.p == 0.8)
    }

    /// Per-case deltas of variant `i` against the baseline.
    pub fn deltas(&self, i: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| psnr_delta(r.best[i].psnr_db, r.best[self.baseline].psnr_db))
            .collect()
    }

    pub fn median_delta(&self, i: usize) -> Option<f64> {
        median(&self.deltas(i))
    }

    pub fn variant_index(&self, label: &str) -> Option<usize> {
        self.variants.iter().position(|v| v == label)
    }

    /// One row per case: best psnr/ssim/rank per variant, deltas vs the
    /// baseline, and a flag where WSNM p=0.8 falls below it.
    pub fn to_csv(&self) -> String {
        let base = &self.variants[self.baseline];
        let others: Vec<usize> = (0..self.variants.len()).filter(|&i| i != self.baseline).collect();
        let mut header = String::from("dataset,case,subject");
        for v in &self.variants {
            let _ = write!(header, ",{v}_psnr_db,{v}_ssim,{v}_rank");
        }
        for &i in &others {
            let _ = write!(header, ",{}_minus_{base}_db", self.variants[i]);
        }
        let flagged = self.flagged();
        if let Some(i) = flagged {
            let _ = write!(header, ",{}_below_{base}", self.variants[i]);
        }
        let mut out = header + "\n";
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.dataset, r.case, r.subject);
            for b in &r.best {
                let _ = write!(out, ",{},{},{}", format_sig6(b.psnr_db), format_sig6(b.ssim), b.rank);
            }
            let base_psnr = r.best[self.baseline].psnr_db;
            for &i in &others {
                let _ = write!(out, ",{}", format_sig6(psnr_delta(r.best[i].psnr_db, base_psnr)));
            }
            if let Some(i) = flagged {
                let _ = write!(out, ",{}", r.best[i].psnr_db < base_psnr);
            }
            out.push('\n');
        }
        out
    }

    /// `variant,baseline,median_delta_db,cases,cases_below`.
    pub fn median_csv(&self) -> String {
        let base = &self.variants[self.baseline];
        let mut out = String::from("variant,baseline,median_delta_db,cases,cases_below\n");
        for (i, v) in self.variants.iter().enumerate() {
            if i == self.baseline {
                continue;
            }
            let deltas = self.deltas(i);
            let below = deltas.iter().filter(|d| **d < 0.0).count();
            let med = self.median_delta(i).map_or_else(|| "nan".to_string(), format_sig6);
            let _ = writeln!(out, "{v},{base},{med},{},{below}", deltas.len());
        }
        out
    }
}
