//! Adaptive Gauss-Legendre quadrature for integrands decaying like `e^{-t}`
//! on `[0, inf)`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Panel edges; beyond the last edge an `e^{-t}` integrand is below `1e-27`
/// of its value at the origin.
const EDGES: [f64; 13] = [0.0, 0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 48.0, 64.0];

#[derive(Debug, Clone)]
pub struct Quadrature {
    rule: GaussLegendre,
    pub order: usize,
    /// Relative tolerance per panel.
    pub tolerance: f64,
    pub max_depth: usize,
}

impl Quadrature {
    pub fn new(order: usize, tolerance: f64) -> Self {
        let order = order.max(2);
        Quadrature {
            rule: GaussLegendre::new(NonZeroUsize::new(order).expect("order >= 2")),
            order,
            tolerance,
            max_depth: 40,
        }
    }

    /// `int_0^inf f(t) dt`.
    pub fn semi_infinite(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let coarse: Vec<f64> = EDGES.windows(2).map(|w| self.rule.integrate(w[0], w[1], &f)).collect();
        let scale: f64 = coarse.iter().map(|v| v.abs()).sum();
        let floor = 1e-3 * self.tolerance * scale;
        let mut total = 0.0;
        for (w, &whole) in EDGES.windows(2).zip(&coarse) {
            total += self.adaptive(&f, w[0], w[1], whole, floor, self.max_depth)?;
        }
        Ok(total)
    }

    fn adaptive(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, floor: f64, depth: usize) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let left = self.rule.integrate(a, mid, f);
        let right = self.rule.integrate(mid, b, f);
        let refined = left + right;
        let diff = (refined - whole).abs();
        if diff <= floor.max(self.tolerance * refined.abs()) {
            return Ok(refined);
        }
        if depth == 0 || !refined.is_finite() {
            return Err(Error::Quadrature(format!(
                "panel [{a:e}, {b:e}]: estimates {whole:e} and {refined:e} differ by {diff:e}"
            )));
        }
        Ok(self.adaptive(f, a, mid, left, floor, depth - 1)? + self.adaptive(f, mid, b, right, floor, depth - 1)?)
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::new(20, 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let q = Quadrature::default();
        assert!((q.semi_infinite(|t| (-t).exp()).unwrap() - 1.0).abs() < 1e-14);
        // int_0^inf x ln(1 - e^{-x}) dx = -zeta(3)
        let v = q.semi_infinite(|x| x * (-(-x).exp_m1()).ln()).unwrap();
        assert!((v + 1.202_056_903_159_594_2).abs() < 1e-12);
        let v = q.semi_infinite(|x| x.powi(3) * (-x).exp()).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_order_is_stable() {
        let f = |x: f64| x * (-(-x - 0.3).exp()).ln_1p();
        let a = Quadrature::new(20, 1e-12).semi_infinite(f).unwrap();
        let b = Quadrature::new(40, 1e-12).semi_infinite(f).unwrap();
        assert!(((a - b) / b).abs() < 1e-9);
    }
}
