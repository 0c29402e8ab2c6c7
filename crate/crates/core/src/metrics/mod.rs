//! Image quality (PSNR, SSIM after a linear color fit) and trajectory
//! accuracy (ATE RMSE after rigid alignment).

mod align;
mod ssim;

#[cfg(not(feature = "std"))]
use num_traits::Float;

pub use align::{
    align, ate, ate_rmse, umeyama_align, Alignment, AteReport, Trajectory, DEFAULT_ASSOCIATION_TOLERANCE_US,
};
pub use ssim::{ssim, ssim_with_grad, SSIM_RADIUS, SSIM_SIGMA};

use crate::error::Result;
use crate::grid::Grid;

/// Least-squares gain and offset mapping `pred` onto `gt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorFit {
    pub gain: f64,
    pub offset: f64,
}

impl ColorFit {
    pub fn apply(&self, pred: &Grid<f64>) -> Grid<f64> {
        pred.map(|v| self.gain * v + self.offset)
    }
}

/// Fits `a · pred + b ≈ gt` in the least-squares sense. A constant `pred`
/// yields `a = 0`, `b = mean(gt)`.
pub fn fit_linear_color(pred: &Grid<f64>, gt: &Grid<f64>) -> Result<ColorFit> {
    pred.ensure_same_shape(gt)?;
    let n = pred.len() as f64;
    if pred.is_empty() {
        return Ok(ColorFit { gain: 1.0, offset: 0.0 });
    }
    let mp = pred.sum() / n;
    let mg = gt.sum() / n;
    let (mut cov, mut var) = (0.0, 0.0);
    for (p, g) in pred.iter().zip(gt.iter()) {
        cov += (p - mp) * (g - mg);
        var += (p - mp) * (p - mp);
    }
    if var <= f64::EPSILON * n * (1.0 + mp * mp) {
        return Ok(ColorFit { gain: 0.0, offset: mg });
    }
    let gain = cov / var;
    Ok(ColorFit { gain, offset: mg - gain * mp })
}

/// `pred` after the least-squares linear color transform towards `gt`.
pub fn linear_color_transform(pred: &Grid<f64>, gt: &Grid<f64>) -> Result<Grid<f64>> {
    Ok(fit_linear_color(pred, gt)?.apply(pred))
}

/// PSNR value reported for identical images.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;

/// `10 log10(peak² / MSE)` in dB; [`PSNR_IDENTICAL`] when the MSE is zero.
pub fn psnr(pred: &Grid<f64>, gt: &Grid<f64>, peak: f64) -> Result<f64> {
    pred.ensure_same_shape(gt)?;
    if !(peak > 0.0) {
        return Err(crate::error::invalid("peak must be positive"));
    }
    let mse = mse(pred, gt)?;
    if mse == 0.0 {
        return Ok(PSNR_IDENTICAL);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

pub fn mse(pred: &Grid<f64>, gt: &Grid<f64>) -> Result<f64> {
    pred.ensure_same_shape(gt)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred.iter().zip(gt.iter()).map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pred.len() as f64)
}

/// PSNR (peak 1) and SSIM of `pred` after the linear color transform.
pub fn image_quality(pred: &Grid<f64>, gt: &Grid<f64>) -> Result<(f64, f64)> {
    let corrected = linear_color_transform(pred, gt)?;
    Ok((psnr(&corrected, gt, 1.0)?, ssim(&corrected, gt)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Grid<f64> {
        Grid::from_fn(8, 6, |x, y| 0.1 + 0.05 * x as f64 + 0.07 * ((x * y) % 3) as f64)
    }

    #[test]
    fn identity_fit() {
        let gt = ramp();
        let fit = fit_linear_color(&gt, &gt).unwrap();
        assert!((fit.gain - 1.0).abs() < 1e-12 && fit.offset.abs() < 1e-12);
    }

    #[test]
    fn affine_fit_recovered() {
        let gt = ramp();
        let pred = gt.map(|v| 2.0 * v + 0.1);
        let fit = fit_linear_color(&pred, &gt).unwrap();
        assert!((fit.gain - 0.5).abs() < 1e-10);
        assert!((fit.offset + 0.05).abs() < 1e-10);
    }

    #[test]
    fn constant_prediction() {
        let gt = ramp();
        let out = linear_color_transform(&Grid::filled(8, 6, 0.3), &gt).unwrap();
        let mean = gt.sum() / gt.len() as f64;
        assert!(out.iter().all(|&v| (v - mean).abs() < 1e-12));
    }

    #[test]
    fn psnr_cases() {
        let gt = ramp();
        assert_eq!(psnr(&gt, &gt, 1.0).unwrap(), PSNR_IDENTICAL);
        let off = gt.map(|v| v + 0.1);
        assert!((psnr(&off, &gt, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let k = 7.5;
        let a = psnr(&off.scaled(k), &gt.scaled(k), k).unwrap();
        assert!((a - 20.0).abs() < 1e-9);
    }
}
