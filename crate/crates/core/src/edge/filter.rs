use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::grid::Grid;

/// Index into `[0, n)` with half-sample symmetric reflection (`d c b a | a b c d`).
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Discrete Gaussian taps for offsets `-r..=r`, `r = ⌈3σ⌉`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma must be positive"));
    }
    let r = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|v| v / sum).collect())
}

/// Separable 2D Gaussian smoothing with reflective borders.
pub fn gaussian_filter(input: &Grid<f64>, sigma: f64) -> Result<Grid<f64>> {
    let kernel = gaussian_kernel(sigma)?;
    let r = (kernel.len() / 2) as isize;
    let (w, h) = input.dims();
    if w == 0 || h == 0 {
        return Ok(input.clone());
    }
    let rows: Grid<f64> = Grid::from_fn(w, h, |x, y| {
        kernel.iter().enumerate().map(|(j, kv)| kv * input[(reflect_index(x as isize + j as isize - r, w), y)]).sum()
    });
    Ok(Grid::from_fn(w, h, |x, y| {
        kernel.iter().enumerate().map(|(j, kv)| kv * rows[(x, reflect_index(y as isize + j as isize - r, h))]).sum()
    }))
}
