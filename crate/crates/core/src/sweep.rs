//! Hyperparameter sweeps with achieved rank as the output bucket.
//!
//! Each cell is one (case, solver variant, parameter value) solve. The swept
//! parameter is `lambda` for RPCA and the weight scale `C` for WNNM and WSNM;
//! grids are given as multiples of the automatic value or as absolute values.
//! Cells run on the current rayon pool and are collected in cell order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::{self, GrayImage};
use crate::linalg::{self, Matrix};
use crate::metrics;
use crate::solvers::{self, SolverConfig, SolverKind, RANK_REL_TOL};
use crate::synth::CaseData;

pub const RESULTS_HEADER: &str = "dataset,case,subject,solver,p,param_value,rank,psnr_db,ssim,iterations,converged";
pub const SUMMARY_HEADER: &str = "dataset,case,subject,solver,p,param_value,rank,psnr_db,ssim,reference";

pub const DEFAULT_GRID_POINTS: usize = 16;
pub const DEFAULT_GRID_LOW: f64 = 0.1;
pub const DEFAULT_GRID_HIGH: f64 = 10.0;

/// A solver with its exponent; `p` is 1 for RPCA and WNNM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variant {
    pub kind: SolverKind,
    pub p: f64,
}

impl Variant {
    pub fn new(kind: SolverKind, p: f64) -> Self {
        let p = if kind == SolverKind::Wsnm { p } else { 1.0 };
        Variant { kind, p }
    }

    /// `rpca`, `wnnm`, or `wsnm_p<p>`.
    pub fn label(&self) -> String {
        match self.kind {
            SolverKind::Wsnm => format!("wsnm_p{}", format_sig6(self.p)),
            kind => kind.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamGrid {
    /// Multiples of the per-case automatic value.
    Relative(Vec<f64>),
    Absolute(Vec<f64>),
}

impl ParamGrid {
    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }

    fn values(&self) -> &[f64] {
        match self {
            ParamGrid::Relative(v) | ParamGrid::Absolute(v) => v,
        }
    }
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid::Relative(log_grid(DEFAULT_GRID_POINTS, DEFAULT_GRID_LOW, DEFAULT_GRID_HIGH))
    }
}

/// `points` log-spaced values from `low` to `high` inclusive; one point yields `[1]`.
pub fn log_grid(points: usize, low: f64, high: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        n => {
            let (a, b) = (low.ln(), high.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub variants: Vec<Variant>,
    pub grid: ParamGrid,
    /// Tolerance, iteration cap and schedule shared by every cell.
    pub base: SolverConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::invalid("no solver variants selected"));
        }
        if self.grid.is_empty() {
            return Err(Error::invalid("parameter grid is empty"));
        }
        if let Some(bad) = self.grid.values().iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("grid values must be positive, got {bad}")));
        }
        for v in &self.variants {
            self.cell_config(*v, 1.0).validate()?;
        }
        Ok(())
    }

    fn cell_config(&self, variant: Variant, value: f64) -> SolverConfig {
        let mut cfg = SolverConfig {
            kind: variant.kind,
            p: variant.p,
            ..self.base.clone()
        };
        match variant.kind {
            SolverKind::Rpca => cfg.lambda = Some(value),
            _ => cfg.c_weight = Some(value),
        }
        cfg
    }
}

/// One sweep cell. Failed solves carry `NaN` scores and `converged = false`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseResult {
    pub dataset: String,
    pub case: String,
    pub subject: String,
    pub solver: SolverKind,
    pub p: f64,
    pub param_value: f64,
    pub rank: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CaseResult {
    pub fn variant(&self) -> Variant {
        Variant {
            kind: self.solver,
            p: self.p,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.case,
            self.subject,
            self.solver,
            format_sig6(self.p),
            format_sig6(self.param_value),
            self.rank,
            format_sig6(self.psnr_db),
            format_sig6(self.ssim),
            self.iterations,
            self.converged
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Scored against ground-truth clean images.
    Clean,
    /// No ground truth; scored against the inputs themselves.
    Input,
}

impl Reference {
    pub fn as_str(self) -> &'static str {
        match self {
            Reference::Clean => "clean",
            Reference::Input => "input",
        }
    }
}

/// Best-PSNR cell of one (case, variant).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub best: CaseResult,
    pub reference: Reference,
}

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        let b = &self.best;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            b.dataset,
            b.case,
            b.subject,
            b.solver,
            format_sig6(b.p),
            format_sig6(b.param_value),
            b.rank,
            format_sig6(b.psnr_db),
            format_sig6(b.ssim),
            self.reference.as_str()
        )
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    /// Case-major, then variant, then grid order.
    pub rows: Vec<CaseResult>,
    pub summary: Vec<SummaryRow>,
}

impl SweepReport {
    pub fn results_csv(&self) -> String {
        results_csv(&self.rows)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for s in &self.summary {
            out.push_str(&s.csv_line());
            out.push('\n');
        }
        out
    }
}

pub fn results_csv(rows: &[CaseResult]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

struct PreparedCase<'a> {
    data: &'a CaseData,
    matrix: Matrix,
    references: &'a [GrayImage],
    reference: Reference,
    auto_lambda: f64,
    auto_c: f64,
}

fn prepare(case: &CaseData) -> Result<PreparedCase<'_>> {
    let stack = imaging::stack(&case.inputs).map_err(|e| with_case(case, e))?;
    let (references, reference) = match &case.references {
        Some(refs) => {
            if refs.len() != case.inputs.len() || refs.iter().zip(&case.inputs).any(|(r, i)| r.dims() != i.dims()) {
                return Err(with_case(
                    case,
                    Error::ShapeMismatch("reference images do not match the inputs".into()),
                ));
            }
            (refs.as_slice(), Reference::Clean)
        }
        None => (case.inputs.as_slice(), Reference::Input),
    };
    let (rows, cols) = stack.matrix().shape();
    let sigma1 = linalg::svd(stack.matrix()).map_err(|e| with_case(case, e))?.sigma[0];
    Ok(PreparedCase {
        data: case,
        auto_lambda: solvers::auto_lambda(rows, cols),
        auto_c: solvers::auto_c_weight(sigma1, rows, cols),
        matrix: stack.into_matrix(),
        references,
        reference,
    })
}

fn with_case(case: &CaseData, e: Error) -> Error {
    Error::Subject {
        subject: case.case_id.clone(),
        source: Box::new(e),
    }
}

/// PSNR from the MSE pooled over all images and mean SSIM, after clamping
/// each low-rank column to `[0, 1]`.
pub fn score_low_rank(low_rank: &Matrix, references: &[GrayImage]) -> Result<(f64, f64)> {
    if low_rank.cols() != references.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} columns scored against {} references",
            low_rank.cols(),
            references.len()
        )));
    }
    let mut mse_total = 0.0;
    let mut ssim_total = 0.0;
    for (j, reference) in references.iter().enumerate() {
        let (w, h) = reference.dims();
        let img = GrayImage::from_clamped(w, h, &low_rank.column(j))?;
        mse_total += metrics::mse(reference, &img)?;
        ssim_total += metrics::ssim(reference, &img)?;
    }
    let n = references.len() as f64;
    Ok((metrics::psnr_from_mse(mse_total / n), ssim_total / n))
}

fn run_cell(case: &PreparedCase<'_>, cfg: &SweepConfig, variant: Variant, grid_value: f64) -> CaseResult {
    let param_value = match (&cfg.grid, variant.kind) {
        (ParamGrid::Absolute(_), _) => grid_value,
        (ParamGrid::Relative(_), SolverKind::Rpca) => grid_value * case.auto_lambda,
        (ParamGrid::Relative(_), _) => grid_value * case.auto_c,
    };
    let mut row = CaseResult {
        dataset: case.data.dataset.clone(),
        case: case.data.case_id.clone(),
        subject: case.data.subject.clone(),
        solver: variant.kind,
        p: variant.p,
        param_value,
        rank: 0,
        psnr_db: f64::NAN,
        ssim: f64::NAN,
        iterations: 0,
        converged: false,
    };
    let solved = solvers::solve(&case.matrix, &cfg.cell_config(variant, param_value)).and_then(|d| {
        let rank = solvers::rank_of(&d.low_rank, RANK_REL_TOL)?;
        let (psnr, ssim) = score_low_rank(&d.low_rank, case.references)?;
        Ok((d, rank, psnr, ssim))
    });
    match solved {
        Ok((d, rank, psnr, ssim)) => {
            row.rank = rank;
            row.psnr_db = psnr;
            row.ssim = ssim;
            row.iterations = d.iterations;
            row.converged = d.converged;
        }
        Err(e) => log::warn!(
            "{} {} param {}: {e}",
            row.case,
            variant.label(),
            format_sig6(param_value)
        ),
    }
    row
}

/// Runs every (case, variant, grid value) cell.
///
/// Unreadable or inconsistent cases are errors; solver failures inside a
/// cell are recorded in that cell's row.
pub fn sweep(cases: &[CaseData], cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    if cases.is_empty() {
        return Err(Error::invalid("dataset has no cases"));
    }
    let prepared: Vec<PreparedCase<'_>> = cases.par_iter().map(prepare).collect::<Result<_>>()?;
    let grid = cfg.grid.values();
    let cells: Vec<(usize, Variant, f64)> = (0..prepared.len())
        .flat_map(|c| {
            cfg.variants
                .iter()
                .flat_map(move |v| grid.iter().map(move |g| (c, *v, *g)))
        })
        .collect();
    let rows: Vec<CaseResult> = cells
        .par_iter()
        .map(|&(c, v, g)| run_cell(&prepared[c], cfg, v, g))
        .collect();

    let references: Vec<Reference> = prepared.iter().map(|p| p.reference).collect();
    let summary = rows
        .chunks(grid.len())
        .enumerate()
        .map(|(i, chunk)| SummaryRow {
            best: best_row(chunk).clone(),
            reference: references[i / cfg.variants.len()],
        })
        .collect();
    Ok(SweepReport { rows, summary })
}

/// Highest PSNR, earliest row on ties; failed cells only if nothing else exists.
///
/// # Panics
/// On an empty slice.
pub fn best_row(rows: &[CaseResult]) -> &CaseResult {
    rows.iter()
        .reduce(|best, r| {
            if psnr_key(r.psnr_db) > psnr_key(best.psnr_db) {
                r
            } else {
                best
            }
        })
        .expect("non-empty rows")
}

fn psnr_key(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Best PSNR per achieved rank, ascending by rank; failed cells are skipped.
pub fn rank_profile(rows: &[CaseResult]) -> Vec<(usize, f64)> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.psnr_db.is_nan()) {
        let entry = best.entry(r.rank).or_insert(f64::NEG_INFINITY);
        *entry = entry.max(r.psnr_db);
    }
    best.into_iter().collect()
}

/// Whether the best rank is neither the smallest nor the largest achieved.
pub fn has_interior_maximum(profile: &[(usize, f64)]) -> bool {
    let Some(peak) = profile
        .iter()
        .enumerate()
        .reduce(|a, b| if b.1 .1 > a.1 .1 { b } else { a })
        .map(|(i, _)| i)
    else {
        return false;
    };
    peak > 0 && peak + 1 < profile.len()
}

/// Non-decreasing up to the best rank and non-increasing after it, with an
/// interior maximum.
pub fn is_unimodal(profile: &[(usize, f64)]) -> bool {
    if !has_interior_maximum(profile) {
        return false;
    }
    let peak = profile
        .iter()
        .enumerate()
        .reduce(|a, b| if b.1 .1 > a.1 .1 { b } else { a })
        .map(|(i, _)| i)
        .expect("non-empty profile");
    let rising = profile[..=peak].windows(2).all(|w| w[1].1 >= w[0].1);
    let falling = profile[peak..].windows(2).all(|w| w[1].1 <= w[0].1);
    rising && falling
}

/// Rows grouped by (case, variant label), in first-appearance order.
pub fn group_rows(rows: &[CaseResult]) -> Vec<((String, String), Vec<&CaseResult>)> {
    let mut groups: Vec<((String, String), Vec<&CaseResult>)> = Vec::new();
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in rows {
        let key = (r.case.clone(), r.variant().label());
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(r);
    }
    groups
}

/// Formats like C's `%g` with six significant digits; `inf`, `-inf`, `nan`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses a results CSV written by [`results_csv`].
pub fn parse_results_csv(text: &str) -> Result<Vec<CaseResult>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == RESULTS_HEADER => {}
        _ => {
            return Err(Error::invalid(format!(
                "results CSV must start with '{RESULTS_HEADER}'"
            )))
        }
    }
    lines
        .map(|(n, line)| {
            let bad = |what: &str| Error::invalid(format!("line {}: bad {what}", n + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 11 {
                return Err(bad("field count"));
            }
            let num = |i: usize, what: &str| f[i].parse::<f64>().map_err(|_| bad(what));
            Ok(CaseResult {
                dataset: f[0].to_string(),
                case: f[1].to_string(),
                subject: f[2].to_string(),
                solver: f[3].parse().map_err(|_| bad("solver"))?,
                p: num(4, "p")?,
                param_value: num(5, "param_value")?,
                rank: f[6].parse().map_err(|_| bad("rank"))?,
                psnr_db: num(7, "psnr_db")?,
                ssim: num(8, "ssim")?,
                iterations: f[9].parse().map_err(|_| bad("iterations"))?,
                converged: f[10].parse().map_err(|_| bad("converged"))?,
            })
        })
        .collect()
}

/// Human-readable per-(case, variant) table of best PSNR with rank.
pub fn summary_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    for s in summary {
        let b = &s.best;
        let _ = writeln!(
            out,
            "{:<24} {:<12} {}({}) ssim {}",
            b.case,
            b.variant().label(),
            format_sig6(b.psnr_db),
            b.rank,
            format_sig6(b.ssim)
        );
    }
    out
}
