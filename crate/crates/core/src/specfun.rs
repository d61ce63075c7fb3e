//! Modified spherical Bessel functions of real positive argument.
//!
//! Conventions: `i_l(x) = sqrt(pi/2x) I_{l+1/2}(x)` and
//! `k_l(x) = sqrt(pi/2x) K_{l+1/2}(x)`, so that `k_0(x) = (pi/2) e^{-x}/x`.
//!
//! Values are never materialized unscaled. Internally every function is held
//! as a natural logarithm plus a logarithmic derivative; the public accessors
//! return the exponentially scaled forms `i_l(x) e^{-x}` and `k_l(x) e^{x}`,
//! which stay representable for the orders and arguments used here. Callers
//! that combine large-order values (Mie coefficients, translation sums) work
//! directly with the logarithms.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Largest multipole order accepted by the Bessel routines.
pub const MAX_ORDER: usize = 512;
/// Largest argument accepted by the Bessel routines.
pub const MAX_ARGUMENT: f64 = 1e6;

fn check_args(l_max: usize, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("Bessel argument must be positive, got {x}")));
    }
    if x > MAX_ARGUMENT {
        return Err(Error::config(format!("Bessel argument {x} exceeds cap {MAX_ARGUMENT}")));
    }
    if l_max > MAX_ORDER {
        return Err(Error::config(format!("Bessel order {l_max} exceeds cap {MAX_ORDER}")));
    }
    Ok(())
}

/// `ln(sinh(x)/x) = ln i_0(x)`.
fn ln_i0(x: f64) -> f64 {
    if x < 0.5 {
        (x.sinh() / x).ln()
    } else {
        x - (2.0 * x).ln() + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// Ratios `i_{l+1}(x) / i_l(x)` for `l = 0..=l_max`.
///
/// Obtained from the backward recurrence `1/r_l = (2l+1)/x + r_{l+1}` started
/// well above `l_max` from the uniform asymptotic estimate. Every step adds
/// positive quantities, and the starting error is damped geometrically.
pub fn i_ratios(l_max: usize, x: f64) -> Result<Vec<f64>> {
    check_args(l_max, x)?;
    let top = l_max + 1 + 40 + (40.0 * x).sqrt().ceil() as usize;
    let j = top as f64;
    // estimate of i_{top+1}/i_top
    let mut ratio = x / (j + 1.5 + ((j + 2.0).powi(2) + x * x).sqrt());
    let mut out = vec![0.0; l_max + 1];
    // ratio currently holds r_{j+1} = i_{j+1}/i_j with j = top
    for j in (1..=top).rev() {
        // r_j = i_j / i_{j-1}
        ratio = 1.0 / ((2 * j + 1) as f64 / x + ratio);
        if j - 1 <= l_max {
            out[j - 1] = ratio;
        }
    }
    Ok(out)
}

/// Ratios `k_{l+1}(x) / k_l(x)` for `l = 0..=l_max`, by forward recurrence.
pub fn k_ratios(l_max: usize, x: f64) -> Result<Vec<f64>> {
    check_args(l_max, x)?;
    let mut out = Vec::with_capacity(l_max + 1);
    let mut q = 1.0 + 1.0 / x;
    out.push(q);
    for l in 1..=l_max {
        q = (2 * l + 1) as f64 / x + 1.0 / q;
        out.push(q);
    }
    Ok(out)
}

/// `ln k_l(x)` for `l = 0..=l_max`.
pub fn ln_k_table(l_max: usize, x: f64) -> Result<Vec<f64>> {
    let q = k_ratios(l_max, x)?;
    let mut out = Vec::with_capacity(l_max + 1);
    let mut ln_k = FRAC_PI_2.ln() - x - x.ln();
    out.push(ln_k);
    for &r in q.iter().take(l_max) {
        ln_k += r.ln();
        out.push(ln_k);
    }
    Ok(out)
}

/// `ln i_l(x)` for `l = 0..=l_max`.
pub fn ln_i_table(l_max: usize, x: f64) -> Result<Vec<f64>> {
    let r = i_ratios(l_max, x)?;
    let mut out = Vec::with_capacity(l_max + 1);
    let mut ln_i = ln_i0(x);
    out.push(ln_i);
    for &ratio in r.iter().take(l_max) {
        ln_i += ratio.ln();
        out.push(ln_i);
    }
    Ok(out)
}

/// Both modified spherical Bessel functions and their derivatives at one
/// order, in logarithmic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBessel {
    pub order: usize,
    pub argument: f64,
    /// `ln i_l(x)`
    pub ln_i: f64,
    /// `ln k_l(x)`
    pub ln_k: f64,
    /// `i_l'(x) / i_l(x)`
    pub dlog_i: f64,
    /// `k_l'(x) / k_l(x)`
    pub dlog_k: f64,
    /// `i_{l+1}(x) / i_l(x)`
    pub i_ratio_next: f64,
}

impl ScaledBessel {
    /// `i_l(x) e^{-x}`
    pub fn i_scaled(&self) -> f64 {
        (self.ln_i - self.argument).exp()
    }

    /// `k_l(x) e^{x}`
    pub fn k_scaled(&self) -> f64 {
        (self.ln_k + self.argument).exp()
    }

    /// `i_l'(x) e^{-x}`
    pub fn di_scaled(&self) -> f64 {
        self.i_scaled() * self.dlog_i
    }

    /// `k_l'(x) e^{x}`
    pub fn dk_scaled(&self) -> f64 {
        self.k_scaled() * self.dlog_k
    }

    /// Riccati-Bessel functions `psi_l = x i_l`, `xi_l = x k_l` at this order.
    pub fn riccati(&self) -> Riccati {
        let x = self.argument;
        Riccati {
            order: self.order,
            argument: x,
            ln_psi: x.ln() + self.ln_i,
            dlog_psi: 1.0 / x + self.dlog_i,
            ln_xi: x.ln() + self.ln_k,
            dlog_xi: 1.0 / x + self.dlog_k,
        }
    }
}

/// Full table of [`ScaledBessel`] values for `l = 0..=l_max`.
pub fn scaled_bessel_table(l_max: usize, x: f64) -> Result<Vec<ScaledBessel>> {
    let ri = i_ratios(l_max + 1, x)?;
    let rk = k_ratios(l_max, x)?;
    let mut ln_i = ln_i0(x);
    let mut ln_k = FRAC_PI_2.ln() - x - x.ln();
    let mut out = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let lf = l as f64;
        // i_l' = i_{l+1} + (l/x) i_l and k_l' = -k_{l-1} - ((l+1)/x) k_l
        let dlog_i = lf / x + ri[l];
        let dlog_k = if l == 0 { -rk[0] } else { -(lf + 1.0) / x - 1.0 / rk[l - 1] };
        out.push(ScaledBessel {
            order: l,
            argument: x,
            ln_i,
            ln_k,
            dlog_i,
            dlog_k,
            i_ratio_next: ri[l],
        });
        ln_i += ri[l].ln();
        ln_k += rk[l].ln();
    }
    Ok(out)
}

/// `(i_l(x) e^{-x}, i_l'(x) e^{-x})` for `l = 0..=l_max`.
pub fn bessel_i_scaled(l_max: usize, x: f64) -> Result<Vec<(f64, f64)>> {
    Ok(scaled_bessel_table(l_max, x)?
        .iter()
        .map(|b| (b.i_scaled(), b.di_scaled()))
        .collect())
}

/// `(k_l(x) e^{x}, k_l'(x) e^{x})` for `l = 0..=l_max`.
pub fn bessel_k_scaled(l_max: usize, x: f64) -> Result<Vec<(f64, f64)>> {
    Ok(scaled_bessel_table(l_max, x)?
        .iter()
        .map(|b| (b.k_scaled(), b.dk_scaled()))
        .collect())
}

/// Riccati-Bessel functions `psi_l(rho) = rho i_l(rho)` and
/// `xi_l(rho) = rho k_l(rho)` with their derivatives, in logarithmic form.
///
/// The scaled accessors carry the factors `e^{-rho}` (for `psi`) and
/// `e^{+rho}` (for `xi`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Riccati {
    pub order: usize,
    pub argument: f64,
    pub ln_psi: f64,
    /// `psi'/psi`
    pub dlog_psi: f64,
    pub ln_xi: f64,
    /// `xi'/xi`, always negative
    pub dlog_xi: f64,
}

impl Riccati {
    pub fn psi_scaled(&self) -> f64 {
        (self.ln_psi - self.argument).exp()
    }

    pub fn dpsi_scaled(&self) -> f64 {
        self.psi_scaled() * self.dlog_psi
    }

    pub fn xi_scaled(&self) -> f64 {
        (self.ln_xi + self.argument).exp()
    }

    pub fn dxi_scaled(&self) -> f64 {
        self.xi_scaled() * self.dlog_xi
    }

    /// `psi xi' - psi' xi`, which equals `-pi/2` identically.
    pub fn wronskian(&self) -> f64 {
        (self.ln_psi + self.ln_xi).exp() * (self.dlog_xi - self.dlog_psi)
    }
}

/// Riccati-Bessel functions at a single order.
pub fn riccati(l: usize, rho: f64) -> Result<Riccati> {
    Ok(scaled_bessel_table(l, rho)?[l].riccati())
}
