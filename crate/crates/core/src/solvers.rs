//! Low-rank + sparse decomposition `M = L + S` by the inexact augmented
//! Lagrange multiplier method.
//!
//! All three solvers share one loop:
//!
//! ```text
//! L <- prox_low_rank(M - S + Z/mu, mu)
//! S <- soft_threshold(M - L + Z/mu, lambda/mu)
//! Z <- Z + mu (M - L - S)
//! mu <- min(rho mu, mu_max)
//! ```
//!
//! and differ only in the low-rank step: plain singular value thresholding
//! for RPCA, weighted soft shrinkage of singular values for WNNM and
//! generalized soft thresholding under a weighted Schatten-p penalty for WSNM.
//! The loop stops once `||M - L - S||_F / ||M||_F < tol`; running out of
//! iterations is reported through [`Decomposition::converged`], not as an error.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Entries of `S` with magnitude above this count toward [`Decomposition::sparsity`].
pub const SPARSITY_EPS: f64 = 1e-8;
/// Relative cutoff used for [`Decomposition::rank_estimate`].
pub const RANK_REL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Rpca,
    Wnnm,
    Wsnm,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Rpca, SolverKind::Wnnm, SolverKind::Wsnm];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Rpca => "rpca",
            SolverKind::Wnnm => "wnnm",
            SolverKind::Wsnm => "wsnm",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rpca" => Ok(SolverKind::Rpca),
            "wnnm" => Ok(SolverKind::Wnnm),
            "wsnm" => Ok(SolverKind::Wsnm),
            other => Err(Error::invalid(format!(
                "unknown solver '{other}' (expected rpca, wnnm or wsnm)"
            ))),
        }
    }
}

/// How the per-singular-value weights of WNNM/WSNM are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// Recomputed every iteration from the singular values of the target matrix.
    Adaptive,
    /// Computed once from the singular values of the input.
    FromInput,
    /// The same weight for every singular value.
    Uniform(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Weight of `||S||_1`; `None` resolves to `1/sqrt(max(rows, cols))`.
    pub lambda: Option<f64>,
    /// Schatten exponent. Ignored by RPCA, forced to 1 by WNNM.
    pub p: f64,
    /// Weight scale `C`; `None` resolves to [`auto_c_weight`].
    pub c_weight: Option<f64>,
    pub epsilon: f64,
    /// Initial penalty; `None` resolves to `1.25 / sigma_1(M)`.
    pub mu0: Option<f64>,
    pub rho: f64,
    /// Penalty cap; `None` resolves to `1e7 * mu0`.
    pub mu_max: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub weights: WeightScheme,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig {
            kind,
            lambda: None,
            p: if kind == SolverKind::Wsnm { 0.8 } else { 1.0 },
            c_weight: None,
            epsilon: 1e-16,
            mu0: None,
            rho: 1.1,
            mu_max: None,
            tol: 1e-7,
            max_iter: 500,
            weights: WeightScheme::Adaptive,
        }
    }

    pub fn rpca() -> Self {
        Self::new(SolverKind::Rpca)
    }

    pub fn wnnm() -> Self {
        Self::new(SolverKind::Wnnm)
    }

    pub fn wsnm(p: f64) -> Self {
        SolverConfig {
            p,
            ..Self::new(SolverKind::Wsnm)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if let Some(l) = self.lambda {
            positive("lambda", l)?;
        }
        linalg::check_exponent(self.p)?;
        if let Some(c) = self.c_weight {
            positive("c_weight", c)?;
        }
        positive("epsilon", self.epsilon)?;
        if let Some(m) = self.mu0 {
            positive("mu0", m)?;
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must exceed 1, got {}", self.rho)));
        }
        if let Some(m) = self.mu_max {
            positive("mu_max", m)?;
        }
        positive("tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if let WeightScheme::Uniform(w) = self.weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("uniform weight must be >= 0, got {w}")));
            }
        }
        Ok(())
    }
}

/// Hyperparameters after every `auto` has been resolved against the input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub lambda: f64,
    pub p: f64,
    pub c_weight: f64,
    pub mu0: f64,
    pub mu_max: f64,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub low_rank: Matrix,
    pub sparse: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// `||M - L - S||_F / ||M||_F` for the returned pair (0 when `M = 0`).
    pub final_residual: f64,
    pub rank_estimate: usize,
    /// Fraction of entries of `S` with magnitude above [`SPARSITY_EPS`].
    pub sparsity: f64,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
    pub params: ResolvedParams,
}

/// `1 / sqrt(max(rows, cols))`.
pub fn auto_lambda(rows: usize, cols: usize) -> f64 {
    1.0 / (rows.max(cols) as f64).sqrt()
}

/// Default weight scale: `sigma_1 / sqrt(rows * cols)`.
///
/// With this choice the leading singular value of the input carries weight
/// one, the same weight plain RPCA gives every singular value, and trailing
/// components are penalized in proportion to how much smaller they are.
pub fn auto_c_weight(sigma1: f64, rows: usize, cols: usize) -> f64 {
    sigma1 / ((rows * cols) as f64).sqrt()
}

/// `w_i = c * sqrt(rows * cols) / (sigma_i + eps)`.
///
/// Non-increasing `sigma` yields non-descending weights.
pub fn compute_weights(sigma: &[f64], rows: usize, cols: usize, c: f64, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("weight scale must be positive, got {c}")));
    }
    if sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::invalid("singular values must be finite and non-negative"));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("singular values must be non-increasing"));
    }
    Ok(weights_unchecked(sigma, rows, cols, c, eps))
}

fn weights_unchecked(sigma: &[f64], rows: usize, cols: usize, c: f64, eps: f64) -> Vec<f64> {
    let scale = c * ((rows * cols) as f64).sqrt();
    sigma.iter().map(|s| scale / (s + eps)).collect()
}

/// Number of singular values above `rel_tol * sigma_1` (0 for the zero matrix).
pub fn rank_of(m: &Matrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}")));
    }
    let sigma = linalg::svd(m)?.sigma;
    Ok(count_above(&sigma, rel_tol))
}

fn count_above(sigma: &[f64], rel_tol: f64) -> usize {
    match sigma.first() {
        Some(&s1) if s1 > 0.0 => sigma.iter().filter(|&&s| s > rel_tol * s1).count(),
        _ => 0,
    }
}

/// Dispatches on `cfg.kind`.
pub fn solve(m: &Matrix, cfg: &SolverConfig) -> Result<Decomposition> {
    match cfg.kind {
        SolverKind::Rpca => rpca_ialm(m, cfg),
        SolverKind::Wnnm => wnnm_rpca(m, cfg),
        SolverKind::Wsnm => wsnm_rpca(m, cfg),
    }
}

/// Robust PCA: `min ||L||_* + lambda ||S||_1  s.t.  M = L + S`.
pub fn rpca_ialm(m: &Matrix, cfg: &SolverConfig) -> Result<Decomposition> {
    expect_kind(cfg, SolverKind::Rpca)?;
    cfg.validate()?;
    ialm(m, cfg, 1.0, |sigma, mu, _| Ok(linalg::svt_values(sigma, 1.0 / mu)))
}

/// Weighted nuclear norm RPCA; WSNM with the exponent pinned to 1.
pub fn wnnm_rpca(m: &Matrix, cfg: &SolverConfig) -> Result<Decomposition> {
    expect_kind(cfg, SolverKind::Wnnm)?;
    let forced = SolverConfig { p: 1.0, ..cfg.clone() };
    weighted_ialm(m, &forced)
}

/// Weighted Schatten-p RPCA:
/// `min ||E||_1 * lambda + sum_i w_i sigma_i(X)^p  s.t.  M = X + E`.
pub fn wsnm_rpca(m: &Matrix, cfg: &SolverConfig) -> Result<Decomposition> {
    expect_kind(cfg, SolverKind::Wsnm)?;
    weighted_ialm(m, cfg)
}

fn weighted_ialm(m: &Matrix, cfg: &SolverConfig) -> Result<Decomposition> {
    cfg.validate()?;
    let (rows, cols) = m.shape();
    let p = cfg.p;
    let eps = cfg.epsilon;
    let scheme = cfg.weights;
    let mut input_weights: Option<Vec<f64>> = None;

    ialm(m, cfg, p, move |sigma, mu, ctx| {
        let weights = match scheme {
            WeightScheme::Adaptive => weights_unchecked(sigma, rows, cols, ctx.c_weight, eps),
            WeightScheme::FromInput => input_weights
                .get_or_insert_with(|| weights_unchecked(&ctx.input_sigma, rows, cols, ctx.c_weight, eps))
                .clone(),
            WeightScheme::Uniform(w) => vec![w; sigma.len()],
        };
        let scaled: Vec<f64> = weights.iter().map(|w| w / mu).collect();
        linalg::check_weights(&scaled, sigma.len())
            .map_err(|e| Error::Numerical(format!("weight ordering invariant violated: {e}")))?;
        Ok(linalg::gst_values(sigma, &scaled, p))
    })
}

/// Fused S-step and dual update; returns the squared residual norm.
///
/// `S = shrink(M - L + Z / mu, threshold)`, `R = M - L - S`, `Z += mu R`.
fn sparse_and_dual_step(
    target: &[f64],
    low: &[f64],
    sparse: &mut [f64],
    dual: &mut [f64],
    threshold: f64,
    mu: f64,
) -> f64 {
    let inv_mu = 1.0 / mu;
    let cells = target.iter().zip(low).zip(sparse.iter_mut().zip(dual.iter_mut()));
    lane_sum(cells.map(|((t, l), (s, z))| {
        let base = t - l;
        *s = linalg::shrink(base + inv_mu * *z, threshold);
        let r = base - *s;
        *z += mu * r;
        r * r
    }))
}

/// `||M - L - S||_F^2`, summed in the same order as [`sparse_and_dual_step`].
fn residual_sq(target: &[f64], low: &[f64], sparse: &[f64]) -> f64 {
    lane_sum(target.iter().zip(low).zip(sparse).map(|((t, l), s)| {
        let r = (t - l) - s;
        r * r
    }))
}

/// Sum over four interleaved accumulators; the order depends only on length.
fn lane_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut acc = [0.0; 4];
    for (k, v) in terms.enumerate() {
        acc[k & 3] += v;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

fn expect_kind(cfg: &SolverConfig, kind: SolverKind) -> Result<()> {
    if cfg.kind == kind {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "config is for {} but {} was invoked",
            cfg.kind, kind
        )))
    }
}

struct StepContext {
    c_weight: f64,
    input_sigma: Vec<f64>,
}

fn ialm<F>(m: &Matrix, cfg: &SolverConfig, p: f64, mut low_rank_step: F) -> Result<Decomposition>
where
    F: FnMut(&[f64], f64, &StepContext) -> Result<Vec<f64>>,
{
    let (rows, cols) = m.shape();
    let target = m.as_dmatrix();
    let norm_m = target.norm();
    let lambda = cfg.lambda.unwrap_or_else(|| auto_lambda(rows, cols));

    if norm_m == 0.0 {
        let zero = Matrix::zeros(rows, cols);
        return Ok(Decomposition {
            low_rank: zero.clone(),
            sparse: zero,
            iterations: 1,
            converged: true,
            final_residual: 0.0,
            rank_estimate: 0,
            sparsity: 0.0,
            residual_history: vec![0.0],
            params: ResolvedParams {
                lambda,
                p,
                c_weight: cfg.c_weight.unwrap_or(0.0),
                mu0: cfg.mu0.unwrap_or(f64::INFINITY),
                mu_max: cfg.mu_max.unwrap_or(f64::INFINITY),
            },
        });
    }

    let input_sigma = linalg::svd(m)
        .map_err(|e| Error::Solver {
            iteration: 0,
            source: Box::new(e),
        })?
        .sigma;
    let sigma1 = input_sigma[0];
    let mu0 = cfg.mu0.unwrap_or(1.25 / sigma1);
    let mu_max = cfg.mu_max.unwrap_or(1e7 * mu0);
    let ctx = StepContext {
        c_weight: cfg.c_weight.unwrap_or_else(|| auto_c_weight(sigma1, rows, cols)),
        input_sigma,
    };
    let params = ResolvedParams {
        lambda,
        p,
        c_weight: ctx.c_weight,
        mu0,
        mu_max,
    };

    let mut low = DMatrix::<f64>::zeros(rows, cols);
    let mut sparse = DMatrix::<f64>::zeros(rows, cols);
    let mut dual = DMatrix::<f64>::zeros(rows, cols);
    let mut work = DMatrix::<f64>::zeros(rows, cols);
    let mut mu = mu0;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iter {
        iterations = iter;
        let fail = |e: Error| Error::Solver {
            iteration: iter,
            source: Box::new(e),
        };

        let inv_mu = 1.0 / mu;
        let inputs = target.as_slice().iter().zip(sparse.as_slice()).zip(dual.as_slice());
        for (w, ((t, e), z)) in work.as_mut_slice().iter_mut().zip(inputs) {
            *w = t - e + inv_mu * z;
        }
        let spectrum = linalg::spectrum(&work).map_err(fail)?;
        let values = low_rank_step(&spectrum.sigma, mu, &ctx).map_err(fail)?;
        let next_low = spectrum.apply(&work, &values);
        log::trace!(
            "iter {iter}: low-rank change {:.3e}",
            (&next_low - &low).norm() / norm_m
        );
        low = next_low;

        let rel = sparse_and_dual_step(
            target.as_slice(),
            low.as_slice(),
            sparse.as_mut_slice(),
            dual.as_mut_slice(),
            lambda * inv_mu,
            mu,
        )
        .sqrt()
            / norm_m;
        history.push(rel);
        mu = (mu * cfg.rho).min(mu_max);
        if rel < cfg.tol {
            converged = true;
            break;
        }
    }

    let final_residual = residual_sq(target.as_slice(), low.as_slice(), sparse.as_slice()).sqrt() / norm_m;
    debug_assert_eq!(Some(&final_residual), history.last());
    if !final_residual.is_finite() {
        return Err(Error::Solver {
            iteration: iterations,
            source: Box::new(Error::Numerical("residual is not finite".into())),
        });
    }
    let nonzero = sparse.iter().filter(|v| v.abs() > SPARSITY_EPS).count();
    let sparsity = nonzero as f64 / (rows * cols) as f64;
    let low_rank = Matrix::from_dmatrix(low).map_err(|e| Error::Solver {
        iteration: iterations,
        source: Box::new(Error::Numerical(e.to_string())),
    })?;
    let rank_estimate = count_above(&linalg::svd(&low_rank)?.sigma, RANK_REL_TOL);

    Ok(Decomposition {
        low_rank,
        sparse: Matrix::from_dmatrix_unchecked(sparse),
        iterations,
        converged,
        final_residual,
        rank_estimate,
        sparsity,
        residual_history: history,
        params,
    })
}
