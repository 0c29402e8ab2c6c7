use crate::edge::EdgeMap;
use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::metrics::ssim_with_grad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Edge emphasis `β ≥ 0`.
    pub beta: f64,
    /// DSSIM share `λ ∈ [0, 1]`.
    pub lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { beta: 2.0, lambda: 0.2 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be a finite non-negative number"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(invalid("lambda must lie in [0, 1]"));
        }
        Ok(())
    }

    /// `w(x) = 1 + β·M(x)`.
    pub fn pixel_weights(&self, m: &Grid<f64>) -> Grid<f64> {
        m.map(|v| 1.0 + self.beta * v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub edge: f64,
    pub dssim: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn add_scaled(&mut self, other: &LossBreakdown, k: f64) {
        self.edge += other.edge * k;
        self.dssim += other.dssim * k;
        self.total += other.total * k;
    }
}

/// `(1/|Ω|) Σ (1 + β·M(x)) (Ê(x) − E(x))²`.
pub fn edge_weighted_loss(e_hat: &Grid<f64>, e: &Grid<f64>, m: &Grid<f64>, beta: f64) -> Result<f64> {
    e_hat.ensure_same_shape(e)?;
    e_hat.ensure_same_shape(m)?;
    if e_hat.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 =
        e_hat.iter().zip(e.iter()).zip(m.iter()).map(|((a, b), w)| (1.0 + beta * w) * ((a - b) * (a - b))).sum();
    Ok(sum / e_hat.len() as f64)
}

pub fn edge_weighted_loss_grad(e_hat: &Grid<f64>, e: &Grid<f64>, m: &Grid<f64>, beta: f64) -> Result<Grid<f64>> {
    e_hat.ensure_same_shape(e)?;
    e_hat.ensure_same_shape(m)?;
    let scale = 2.0 / e_hat.len().max(1) as f64;
    let data = e_hat.iter().zip(e.iter()).zip(m.iter()).map(|((a, b), w)| scale * (1.0 + beta * w) * (a - b)).collect();
    Grid::from_vec(e_hat.width(), e_hat.height(), data)
}

/// `1 − SSIM(Ê, E)`.
pub fn dssim_loss(e_hat: &Grid<f64>, e: &Grid<f64>) -> Result<f64> {
    Ok(1.0 - crate::metrics::ssim(e_hat, e)?)
}

/// `(1 − λ)·L_edge + λ·L_dssim` from precomputed components.
pub fn combine(weights: &LossWeights, edge: f64, dssim: f64) -> f64 {
    (1.0 - weights.lambda) * edge + weights.lambda * dssim
}

pub fn total_loss(e_hat: &Grid<f64>, e: &Grid<f64>, m: &EdgeMap, weights: &LossWeights) -> Result<f64> {
    weights.validate()?;
    let edge = edge_weighted_loss(e_hat, e, &m.values, weights.beta)?;
    let dssim = dssim_loss(e_hat, e)?;
    Ok(combine(weights, edge, dssim))
}

/// Loss components and the gradient of the total with respect to `Ê`.
pub fn total_loss_with_grad(
    e_hat: &Grid<f64>,
    e: &Grid<f64>,
    m: &Grid<f64>,
    weights: &LossWeights,
) -> Result<(LossBreakdown, Grid<f64>)> {
    let edge = edge_weighted_loss(e_hat, e, m, weights.beta)?;
    let mut grad = edge_weighted_loss_grad(e_hat, e, m, weights.beta)?.scaled(1.0 - weights.lambda);
    let dssim = if weights.lambda > 0.0 {
        let (s, g) = ssim_with_grad(e_hat, e)?;
        for (o, gi) in grad.as_mut_slice().iter_mut().zip(g.iter()) {
            *o -= weights.lambda * gi;
        }
        1.0 - s
    } else {
        dssim_loss(e_hat, e)?
    };
    let total = combine(weights, edge, dssim);
    Ok((LossBreakdown { edge, dssim, total }, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::DetectorParams;

    fn pattern(seed: usize) -> Grid<f64> {
        Grid::from_fn(12, 10, |x, y| (((x * 7 + y * 13 + seed * 5) % 11) as f64 - 5.0) * 0.1)
    }

    #[test]
    fn zero_when_equal() {
        let a = pattern(1);
        let m = Grid::filled(12, 10, 0.5);
        assert_eq!(edge_weighted_loss(&a, &a, &m, 2.0).unwrap(), 0.0);
        assert!(dssim_loss(&a, &a).unwrap().abs() < 1e-9);
    }

    #[test]
    fn beta_zero_is_mse() {
        let (a, b) = (pattern(1), pattern(2));
        let m = pattern(3).map(|v| v.abs());
        let mse: f64 = a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64;
        assert_eq!(edge_weighted_loss(&a, &b, &m, 0.0).unwrap().to_bits(), mse.to_bits());
    }

    #[test]
    fn hand_fixture() {
        let m = Grid::from_vec(2, 2, alloc::vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let e = Grid::zeros(2, 2);
        let e_hat = Grid::filled(2, 2, 1.0);
        assert_eq!(edge_weighted_loss(&e_hat, &e, &m, 2.0).unwrap(), 1.5);
    }

    #[test]
    fn strictly_increasing_in_beta() {
        let (a, b) = (pattern(1), pattern(4));
        let m = pattern(2).map(|v| v.abs());
        let mut last = edge_weighted_loss(&a, &b, &m, 0.0).unwrap();
        for beta in [0.5, 1.0, 2.0, 5.0] {
            let l = edge_weighted_loss(&a, &b, &m, beta).unwrap();
            assert!(l > last);
            last = l;
        }
    }

    #[test]
    fn lambda_endpoints_and_combination() {
        let (a, b) = (pattern(1), pattern(2));
        let mut map = EdgeMap::zeros(12, 10, DetectorParams::default());
        map.values = pattern(5).map(|v| v.abs());
        let edge = edge_weighted_loss(&a, &b, &map.values, 2.0).unwrap();
        let dssim = dssim_loss(&a, &b).unwrap();
        let w0 = LossWeights { beta: 2.0, lambda: 0.0 };
        let w1 = LossWeights { beta: 2.0, lambda: 1.0 };
        assert_eq!(total_loss(&a, &b, &map, &w0).unwrap(), edge);
        assert_eq!(total_loss(&a, &b, &map, &w1).unwrap(), dssim);
        assert!((combine(&LossWeights { beta: 2.0, lambda: 0.2 }, 1.0, 0.5) - 0.9).abs() < 1e-15);
        let checker = Grid::from_fn(12, 10, |x, y| if (x + y) % 2 == 0 { 0.4 } else { -0.4 });
        assert!(dssim_loss(&checker, &checker.map(|v| -v)).unwrap() > 1.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (a, b) = (pattern(1), pattern(2));
        let m = pattern(7).map(|v| v.abs());
        let w = LossWeights { beta: 1.5, lambda: 0.3 };
        let (l, g) = total_loss_with_grad(&a, &b, &m, &w).unwrap();
        let h = 1e-6;
        for i in [0, 17, 55, 119] {
            let mut p = a.clone();
            p.as_mut_slice()[i] += h;
            let mut q = a.clone();
            q.as_mut_slice()[i] -= h;
            let fp = total_loss_with_grad(&p, &b, &m, &w).unwrap().0.total;
            let fm = total_loss_with_grad(&q, &b, &m, &w).unwrap().0.total;
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g.as_slice()[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{i}: {fd} vs {}", g.as_slice()[i]);
        }
        assert!(l.total > 0.0);
    }
}
