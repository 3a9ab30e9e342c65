//! PSNR and SSIM on `[0, 1]` grayscale images (peak value 1).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

const C1: f64 = (SSIM_K1 * 1.0) * (SSIM_K1 * 1.0);
const C2: f64 = (SSIM_K2 * 1.0) * (SSIM_K2 * 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QualityScore {
    /// `+inf` when the images are identical.
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
}

/// Mean squared pixel difference.
pub fn mse(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    same_dims(reference, test)?;
    Ok(mse_slices(reference.pixels(), test.pixels()))
}

pub(crate) fn mse_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sum = neumaier_sum(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)));
    sum / a.len() as f64
}

/// `10 log10(1 / mse)`, `+inf` for `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

pub fn psnr(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    mse(reference, test).map(psnr_from_mse)
}

/// Mean SSIM over every fully contained 11x11 Gaussian window.
pub fn ssim(reference: &GrayImage, test: &GrayImage) -> Result<f64> {
    same_dims(reference, test)?;
    let (w, h) = reference.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let x = reference.pixels();
    let y = test.pixels();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let kernel = gaussian_kernel();
    let mu_x = filter_valid(x, w, h, &kernel);
    let mu_y = filter_valid(y, w, h, &kernel);
    let e_xx = filter_valid(&xx, w, h, &kernel);
    let e_yy = filter_valid(&yy, w, h, &kernel);
    let e_xy = filter_valid(&xy, w, h, &kernel);

    let n = mu_x.len();
    let total = neumaier_sum((0..n).map(|i| {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        ((2.0 * mx * my + C1) * (2.0 * cov + C2)) / ((mx * mx + my * my + C1) * (var_x + var_y + C2))
    }));
    Ok((total / n as f64).min(1.0))
}

pub fn score(reference: &GrayImage, test: &GrayImage) -> Result<QualityScore> {
    let mse = mse(reference, test)?;
    Ok(QualityScore {
        psnr_db: psnr_from_mse(mse),
        ssim: ssim(reference, test)?,
        mse,
    })
}

fn same_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dims() == b.dims() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "cannot compare {}x{} with {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable 2-D correlation keeping only fully covered positions.
fn filter_valid(data: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &data[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&line[x..x + k]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel.iter().enumerate().map(|(j, c)| c * rows[(y + j) * ow + x]).sum();
        }
    }
    out
}

/// Compensated summation; exact for sums of identical terms at the sizes used here.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
