//! Gaussian-windowed SSIM (11 × 11 window, σ = 1.5) with reflective borders
//! and its gradient with respect to the first argument.
//!
//! Stabilizers use the dynamic range `L = max(max − min over both inputs, 1)`:
//! `C1 = (0.01 L)²`, `C2 = (0.03 L)²`. The score is the mean of the SSIM map
//! over all pixels.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::edge::reflect_index;
use crate::error::Result;
use crate::grid::Grid;

pub const SSIM_RADIUS: usize = 5;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn window() -> Vec<f64> {
    let r = SSIM_RADIUS as isize;
    let taps: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|v| v / sum).collect()
}

fn reflect_table(n: usize, r: isize) -> Vec<usize> {
    (0..n as isize).flat_map(|i| (-r..=r).map(move |j| reflect_index(i + j, n))).collect()
}

/// Separable filter with reflective borders.
fn filter(input: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let r = (k / 2) as isize;
    let tx = reflect_table(w, r);
    let ty = reflect_table(h, r);
    let mut rows = alloc::vec![0.0; w * h];
    for y in 0..h {
        let src = &input[y * w..(y + 1) * w];
        for x in 0..w {
            let idx = &tx[x * k..(x + 1) * k];
            let mut acc = 0.0;
            for (t, &i) in taps.iter().zip(idx) {
                acc += t * src[i];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = alloc::vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for (t, &sy) in taps.iter().zip(&ty[y * k..(y + 1) * k]) {
            for (d, v) in dst.iter_mut().zip(&rows[sy * w..(sy + 1) * w]) {
                *d += t * v;
            }
        }
    }
    out
}

/// Adjoint of [`filter`]: scatters each output back to the sources it read.
fn filter_adjoint(grad_out: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let r = (k / 2) as isize;
    let tx = reflect_table(w, r);
    let ty = reflect_table(h, r);
    let mut rows = alloc::vec![0.0; w * h];
    for y in 0..h {
        let g = &grad_out[y * w..(y + 1) * w];
        for (t, &sy) in taps.iter().zip(&ty[y * k..(y + 1) * k]) {
            for (d, v) in rows[sy * w..(sy + 1) * w].iter_mut().zip(g) {
                *d += t * v;
            }
        }
    }
    let mut out = alloc::vec![0.0; w * h];
    for y in 0..h {
        let dst = &mut out[y * w..(y + 1) * w];
        for x in 0..w {
            let g = rows[y * w + x];
            for (t, &sx) in taps.iter().zip(&tx[x * k..(x + 1) * k]) {
                dst[sx] += t * g;
            }
        }
    }
    out
}

fn dynamic_range(a: &Grid<f64>, b: &Grid<f64>) -> (f64, f64, f64) {
    let hi = a.max_value().max(b.max_value());
    let lo = a.min_value().min(b.min_value());
    (hi - lo, hi, lo)
}

/// Mean SSIM of `a` against `b`.
pub fn ssim(a: &Grid<f64>, b: &Grid<f64>) -> Result<f64> {
    ssim_impl(a, b, false).map(|(s, _)| s)
}

/// Mean SSIM and its gradient with respect to `a`.
pub fn ssim_with_grad(a: &Grid<f64>, b: &Grid<f64>) -> Result<(f64, Grid<f64>)> {
    ssim_impl(a, b, true).map(|(s, g)| (s, g.expect("gradient requested")))
}

fn ssim_impl(a: &Grid<f64>, b: &Grid<f64>, want_grad: bool) -> Result<(f64, Option<Grid<f64>>)> {
    a.ensure_same_shape(b)?;
    let (w, h) = a.dims();
    let n = w * h;
    if n == 0 {
        return Ok((1.0, want_grad.then(|| Grid::zeros(w, h))));
    }
    let taps = window();
    let (range, hi, lo) = dynamic_range(a, b);
    let l = range.max(1.0);
    let c1 = (K1 * l).powi(2);
    let c2 = (K2 * l).powi(2);

    let x = a.as_slice();
    let y = b.as_slice();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mx = filter(x, w, h, &taps);
    let my = filter(y, w, h, &taps);
    let exx = filter(&xx, w, h, &taps);
    let eyy = filter(&yy, w, h, &taps);
    let exy = filter(&xy, w, h, &taps);

    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    let (mut g_mx, mut g_exx, mut g_exy) = if want_grad {
        (alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    let mut g_c1 = 0.0;
    let mut g_c2 = 0.0;
    for i in 0..n {
        let (ux, uy) = (mx[i], my[i]);
        let sxx = exx[i] - ux * ux;
        let syy = eyy[i] - uy * uy;
        let sxy = exy[i] - ux * uy;
        let a1 = 2.0 * ux * uy + c1;
        let a2 = 2.0 * sxy + c2;
        let b1 = ux * ux + uy * uy + c1;
        let b2 = sxx + syy + c2;
        let s = (a1 * a2) / (b1 * b2);
        total += s;
        if want_grad {
            // Partials of s w.r.t. the local statistics, scaled by 1/n.
            let ds_a1 = a2 / (b1 * b2) * inv_n;
            let ds_a2 = a1 / (b1 * b2) * inv_n;
            let ds_b1 = -s / b1 * inv_n;
            let ds_b2 = -s / b2 * inv_n;
            let ds_sxx = ds_b2;
            let ds_sxy = 2.0 * ds_a2;
            // sxx = exx − ux², sxy = exy − ux·uy
            g_mx[i] = ds_a1 * 2.0 * uy + ds_b1 * 2.0 * ux - ds_sxx * 2.0 * ux - ds_sxy * uy;
            g_exx[i] = ds_sxx;
            g_exy[i] = ds_sxy;
            g_c1 += ds_a1 + ds_b1;
            g_c2 += ds_a2 + ds_b2;
        }
    }
    let mean = total * inv_n;
    if !want_grad {
        return Ok((mean, None));
    }
    let back_mx = filter_adjoint(&g_mx, w, h, &taps);
    let back_exx = filter_adjoint(&g_exx, w, h, &taps);
    let back_exy = filter_adjoint(&g_exy, w, h, &taps);
    let mut grad: Vec<f64> = (0..n).map(|i| back_mx[i] + 2.0 * x[i] * back_exx[i] + y[i] * back_exy[i]).collect();
    if range > 1.0 {
        // L = max − min over both inputs; only pixels of `a` attaining an extreme move it.
        let g_l = g_c1 * 2.0 * K1 * K1 * l + g_c2 * 2.0 * K2 * K2 * l;
        if let Some(i) = x.iter().position(|&v| v == hi) {
            if y.iter().all(|&v| v < hi) {
                grad[i] += g_l;
            }
        }
        if let Some(i) = x.iter().position(|&v| v == lo) {
            if y.iter().all(|&v| v > lo) {
                grad[i] -= g_l;
            }
        }
    }
    Ok((mean, Some(Grid::from_vec(w, h, grad)?)))
}
