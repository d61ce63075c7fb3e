//! Free energy and entropy per unit area of two identical parallel plates.
//!
//! With the gap `d` as length unit, `tau = 2 pi k_B T d/(hbar c)` and
//! `u = 2 kappa d`,
//!
//! ```text
//! F d^3/(A hbar c) = (tau / 8 pi^2) [ g(0) + 2 sum_{n>=1} g(n tau) ]
//! g(xi)            = int_{2 xi}^inf (u/4) sum_p ln(1 - r_p^2 e^{-u}) du
//! S d^2/(A k_B)    = -2 pi d/d tau of the above
//! ```
//!
//! Fresnel amplitudes at imaginary frequency, rearranged so that no
//! difference of nearly equal numbers is formed:
//!
//! ```text
//! r_TE = -(eps-1) xi^2 / (kappa + kappa_m)^2
//! r_TM = (eps-1) ((eps+1) kappa^2 - xi^2) / (eps kappa + kappa_m)^2
//! kappa_m = sqrt(kappa^2 + (eps-1) xi^2)
//! ```

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matsubara::sum_positive;
use crate::mie::{Material, MaterialKind};
use crate::quad::Quadrature;
use crate::sum::CompensatedSum;
use crate::thermo::{DEFAULT_STEP, ENTROPY_TOLERANCE};

pub const ZETA3: f64 = 1.202_056_903_159_594_2;

/// High-temperature entropy per unit area of perfect mirrors,
/// `zeta(3) / (8 pi)` in units of `k_B / d^2`.
pub fn pec_high_temperature_entropy() -> f64 {
    ZETA3 / (8.0 * PI)
}

/// Squared reflection amplitudes `(r_TE^2, r_TM^2)` at imaginary frequency
/// `xi` and `kappa = sqrt(xi^2 + k^2)`.
pub fn fresnel_squared(material: &Material, xi: f64, kappa: f64) -> (f64, f64) {
    match material.kind {
        MaterialKind::PerfectConductor => (1.0, 1.0),
        MaterialKind::Drude if xi == 0.0 => (0.0, 1.0),
        MaterialKind::Drude => {
            let chi = material.susceptibility(xi);
            let eps = 1.0 + chi;
            let km = (kappa * kappa + chi * xi * xi).sqrt();
            let te = -chi * xi * xi / (kappa + km).powi(2);
            let tm = chi * ((eps + 1.0) * kappa * kappa - xi * xi) / (eps * kappa + km).powi(2);
            (te * te, tm * tm)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePlaneConfig {
    pub material: Material,
    pub tau: f64,
    pub quadrature_order: usize,
    pub quadrature_tolerance: f64,
    /// Matsubara tail tolerance.
    pub tolerance: f64,
    pub step: f64,
}

impl PlanePlaneConfig {
    pub fn new(material: Material, tau: f64) -> Self {
        PlanePlaneConfig {
            material,
            tau,
            quadrature_order: 20,
            quadrature_tolerance: 1e-12,
            tolerance: ENTROPY_TOLERANCE,
            step: DEFAULT_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFreeEnergy {
    pub tau: f64,
    /// `F d^3 / (A hbar c)`.
    pub total: f64,
    pub te: f64,
    pub tm: f64,
    pub n_max: usize,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneEntropy {
    pub tau: f64,
    /// `S d^2 / (A k_B)`.
    pub total: f64,
    pub te: f64,
    pub tm: f64,
    pub error_estimate: f64,
    pub richardson_warning: bool,
    pub free_energy: PlaneFreeEnergy,
}

struct Evaluator {
    material: Material,
    quad: Quadrature,
    tolerance: f64,
}

impl Evaluator {
    fn new(config: &PlanePlaneConfig) -> Self {
        Evaluator {
            material: config.material,
            quad: Quadrature::new(config.quadrature_order, config.quadrature_tolerance),
            tolerance: config.tolerance,
        }
    }

    /// `(g_TE(xi), g_TM(xi))`.
    fn term(&self, xi: f64) -> Result<[f64; 2]> {
        let u0 = 2.0 * xi;
        let integrand = |pol: usize| {
            move |t: f64| {
                let u = u0 + t;
                let r2 = fresnel_squared(&self.material, xi, 0.5 * u);
                let r2 = if pol == 0 { r2.0 } else { r2.1 };
                if r2 == 0.0 {
                    return 0.0;
                }
                let x = r2 * (-u).exp();
                0.25 * u * if x > 0.5 { (1.0 - x).ln() } else { (-x).ln_1p() }
            }
        };
        let te = self.quad.semi_infinite(integrand(0))?;
        let tm = self.quad.semi_infinite(integrand(1))?;
        Ok([te, tm])
    }

    fn free_energy(&self, tau: f64) -> Result<PlaneFreeEnergy> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("temperature must be positive, got tau = {tau}")));
        }
        let mut acc = [CompensatedSum::new(), CompensatedSum::new()];
        let zero = self.term(0.0)?;
        acc[0].add(zero[0]);
        acc[1].add(zero[1]);
        let end = sum_positive(
            |n| self.term(n as f64 * tau),
            |t| {
                acc[0].add(2.0 * t[0]);
                acc[1].add(2.0 * t[1]);
                (2.0 * (t[0] + t[1]), acc[0].value() + acc[1].value())
            },
            self.tolerance,
        )?;
        let scale = tau / (8.0 * PI * PI);
        let (te, tm) = (scale * acc[0].value(), scale * acc[1].value());
        Ok(PlaneFreeEnergy { tau, total: te + tm, te, tm, n_max: end.n_max, tail_bound: scale * end.tail })
    }
}

pub fn pp_free_energy(config: &PlanePlaneConfig) -> Result<PlaneFreeEnergy> {
    Evaluator::new(config).free_energy(config.tau)
}

/// Central differences in `tau` with steps `h` and `h/2`, Richardson-extrapolated.
pub fn pp_entropy(config: &PlanePlaneConfig) -> Result<PlaneEntropy> {
    let tau = config.tau;
    let ev = Evaluator::new(config);
    let h = config.step.clamp(1e-8, 0.5);
    let f = |x: f64| ev.free_energy(tau * x);
    let (fp, fm, fp2, fm2) = (f(1.0 + h)?, f(1.0 - h)?, f(1.0 + 0.5 * h)?, f(1.0 - 0.5 * h)?);
    let center = f(1.0)?;
    let derive = |pick: fn(&PlaneFreeEnergy) -> f64| {
        let coarse = (pick(&fp) - pick(&fm)) / (2.0 * tau * h);
        let fine = (pick(&fp2) - pick(&fm2)) / (tau * h);
        let best = (4.0 * fine - coarse) / 3.0;
        (-2.0 * PI * best, 2.0 * PI * (fine - best).abs())
    };
    let (te, err_te) = derive(|f| f.te);
    let (tm, err_tm) = derive(|f| f.tm);
    let total = te + tm;
    let error_estimate = err_te + err_tm;
    Ok(PlaneEntropy {
        tau,
        total,
        te,
        tm,
        error_estimate,
        richardson_warning: error_estimate > 1e-3 * total.abs() && error_estimate > 1e-300,
        free_energy: center,
    })
}
