//! Mie reflection coefficients of a sphere at imaginary frequency.
//!
//! Units: lengths are measured in an arbitrary unit `L` and frequencies in
//! `c/L`, so a wave number `k` and the imaginary frequency `xi = c k` are the
//! same number. Material parameters are therefore the dimensionless groups
//! `omega_P L/c` and `gamma L/c`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logval::SignedLog;
use crate::specfun::{i_ratios, scaled_bessel_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaterialKind {
    PerfectConductor,
    Drude,
}

/// Dielectric response of a sphere or mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub kind: MaterialKind,
    /// Plasma frequency in units of `c/L`; unused for perfect conductors.
    pub plasma: f64,
    /// Damping constant in units of `c/L`; unused for perfect conductors.
    pub damping: f64,
}

impl Material {
    pub fn perfect_conductor() -> Self {
        Material { kind: MaterialKind::PerfectConductor, plasma: f64::INFINITY, damping: 0.0 }
    }

    pub fn drude(plasma: f64, damping: f64) -> Result<Self> {
        if !(plasma > 0.0 && plasma.is_finite()) || !(damping > 0.0 && damping.is_finite()) {
            return Err(Error::domain(format!(
                "Drude parameters must be positive and finite (plasma = {plasma}, damping = {damping})"
            )));
        }
        Ok(Material { kind: MaterialKind::Drude, plasma, damping })
    }

    /// Drude material specified by its dc conductivity `sigma0 = omega_P^2/gamma`
    /// and plasma frequency.
    pub fn drude_from_conductivity(sigma0: f64, plasma: f64) -> Result<Self> {
        if !(sigma0 > 0.0) {
            return Err(Error::domain(format!("dc conductivity must be positive, got {sigma0}")));
        }
        Material::drude(plasma, plasma * plasma / sigma0)
    }

    pub fn is_perfect_conductor(&self) -> bool {
        self.kind == MaterialKind::PerfectConductor
    }

    /// `sigma0 = omega_P^2 / gamma`, infinite for a perfect conductor.
    pub fn dc_conductivity(&self) -> f64 {
        match self.kind {
            MaterialKind::PerfectConductor => f64::INFINITY,
            MaterialKind::Drude => self.plasma * self.plasma / self.damping,
        }
    }

    /// `epsilon(i xi) - 1 = omega_P^2 / (xi (xi + gamma))`.
    pub fn susceptibility(&self, xi: f64) -> f64 {
        match self.kind {
            MaterialKind::PerfectConductor => f64::INFINITY,
            MaterialKind::Drude => self.plasma * self.plasma / (xi * (xi + self.damping)),
        }
    }

    /// `epsilon(i xi)`, real and larger than one for `xi > 0`.
    pub fn permittivity(&self, xi: f64) -> f64 {
        1.0 + self.susceptibility(xi)
    }

    /// The same material with frequencies expressed for a length unit
    /// `factor` times the current one.
    pub fn rescaled(&self, factor: f64) -> Material {
        match self.kind {
            MaterialKind::PerfectConductor => *self,
            MaterialKind::Drude => Material {
                kind: MaterialKind::Drude,
                plasma: self.plasma * factor,
                damping: self.damping * factor,
            },
        }
    }
}

/// Mie coefficients of one multipole order.
///
/// `a` is the TM (electric) and `b` the TE (magnetic) coefficient, held in
/// log form since `(kR)^{2l+1}` leaves the `f64` range at large `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiePair {
    pub l: usize,
    pub kr: f64,
    pub a: SignedLog,
    pub b: SignedLog,
}

impl MiePair {
    pub fn a_value(&self) -> f64 {
        self.a.value()
    }

    pub fn b_value(&self) -> f64 {
        self.b.value()
    }
}

fn parity_sign(l: usize) -> f64 {
    // (-1)^{l+1}
    if l % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Mie coefficients for `l = 1..=l_max` of a sphere of given radius at wave
/// number `k`.
///
/// The quotients are rearranged so that the exponential factors of the
/// Riccati functions cancel analytically and the leading small-argument
/// terms cancel exactly; only ratios `i_{l+1}/i_l` of the inner argument
/// `n k R` are needed.
pub fn mie_table(material: &Material, l_max: usize, k: f64, radius: f64) -> Result<Vec<MiePair>> {
    if l_max < 1 {
        return Err(Error::domain("Mie coefficients need l_max >= 1"));
    }
    if !(radius > 0.0) || !(k > 0.0) {
        return Err(Error::domain(format!("need k > 0 and R > 0 (k = {k}, R = {radius})")));
    }
    if material.kind == MaterialKind::Drude {
        Material::drude(material.plasma, material.damping)?;
    }
    let x = k * radius;
    let outer = scaled_bessel_table(l_max, x)?;
    let inner = match material.kind {
        MaterialKind::PerfectConductor => None,
        MaterialKind::Drude => {
            let chi = material.susceptibility(k);
            let n = (1.0 + chi).sqrt();
            Some((chi, n, i_ratios(l_max, n * x)?))
        }
    };

    let mut out = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let lf = l as f64;
        let bes = &outer[l];
        // psi/xi = i_l/k_l; psi'/psi = (l+1)/x + r(x); xi'/xi < 0
        let ln_ratio = FRAC_PI_2.ln() + bes.ln_i - bes.ln_k;
        let r_out = bes.i_ratio_next;
        let dlog_xi = bes.riccati().dlog_xi;
        let sign = parity_sign(l);
        let (ta, tb) = match &inner {
            None => (((lf + 1.0) / x + r_out) / dlog_xi, 1.0),
            Some((chi, n, r_in)) => {
                let y = n * x;
                let r_y = r_in[l];
                let num_a = (lf + 1.0) * (chi / n) / x + n * r_out - r_y;
                let den_a = n * dlog_xi - ((lf + 1.0) / y + r_y);
                let num_b = r_out - n * r_y;
                let den_b = dlog_xi - (lf + 1.0) / x - n * r_y;
                (num_a / den_a, num_b / den_b)
            }
        };
        out.push(MiePair {
            l,
            kr: x,
            a: SignedLog::from_parts(sign * ta.signum(), ln_ratio + ta.abs().ln()),
            b: SignedLog::from_parts(sign * tb.signum(), ln_ratio + tb.abs().ln()),
        });
    }
    Ok(out)
}

/// Mie coefficients of order `l` at size parameter `kr` and wave number `k`.
pub fn mie_coefficients(material: &Material, l: usize, kr: f64, k: f64) -> Result<MiePair> {
    if l < 1 {
        return Err(Error::domain("Mie order must be >= 1"));
    }
    if !(kr > 0.0) || !(k > 0.0) {
        return Err(Error::domain(format!("need kR > 0 and k > 0 (kR = {kr}, k = {k})")));
    }
    Ok(mie_table(material, l, k, kr / k)?[l - 1])
}

/// Truncated small-`kR` series of the dipole coefficients, term by term as
/// the standard expansions give them.
///
/// PEC: `a = -(2/3)x^3 + (1/5)x^5`, `b = (1/3)x^3 + (1/5)x^5`.
/// Drude: `a = -(2/3)x^3 + (2c/(sigma0 R)) x^4`,
/// `b = (R sigma0/45c) x^4 - (1/45)[(2/21)(sigma0 R/c)^2 + sigma0/gamma] x^5`.
///
/// Kept as an independent check on [`mie_table`]; never used in the
/// thermodynamic pipeline.
pub fn mie_expansion(material: &Material, l: usize, kr: f64, radius: f64) -> Result<(f64, f64)> {
    if l != 1 {
        return Err(Error::Unsupported(format!("series only available for l = 1, got {l}")));
    }
    if !(kr > 0.0 && kr < 0.1) {
        return Err(Error::domain(format!("series requires 0 < kR < 0.1, got {kr}")));
    }
    let x = kr;
    Ok(match material.kind {
        MaterialKind::PerfectConductor => {
            (-2.0 / 3.0 * x.powi(3) + 0.2 * x.powi(5), x.powi(3) / 3.0 + 0.2 * x.powi(5))
        }
        MaterialKind::Drude => {
            let s = material.dc_conductivity() * radius;
            let a = -2.0 / 3.0 * x.powi(3) + 2.0 / s * x.powi(4);
            let b = s / 45.0 * x.powi(4)
                - (2.0 / 21.0 * s * s + material.dc_conductivity() / material.damping) / 45.0 * x.powi(5);
            (a, b)
        }
    })
}

/// Scattering regime of a sphere at a given size parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// TE scattering negligible against TM dipole scattering.
    Rayleigh,
    /// Dipole TE and TM of comparable size, higher multipoles negligible.
    Dipole,
    /// Quadrupole scattering no longer negligible.
    Multipole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// Rayleigh while `|b_1/a_1|` stays below this.
    pub rayleigh: f64,
    /// Multipole once `|a_2/a_1|` exceeds this.
    pub multipole: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds { rayleigh: 0.05, multipole: 0.05 }
    }
}

/// Dipole and quadrupole ratios used for regime classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieRatios {
    pub kr: f64,
    /// `-b_1/a_1`
    pub te_over_tm: f64,
    /// `a_2/a_1`
    pub quadrupole_over_dipole: f64,
}

/// `-b_1/a_1` and `a_2/a_1` of a sphere of radius `radius` at size parameter `kr`.
pub fn mie_ratios(material: &Material, kr: f64, radius: f64) -> Result<MieRatios> {
    let t = mie_table(material, 2, kr / radius, radius)?;
    let te = -(t[0].b * SignedLog::from_parts(t[0].a.sign, -t[0].a.ln_abs)).value();
    let quad = (t[1].a * SignedLog::from_parts(t[0].a.sign, -t[0].a.ln_abs)).value();
    Ok(MieRatios { kr, te_over_tm: te, quadrupole_over_dipole: quad })
}

/// Classify the scattering regime at size parameter `kr`.
pub fn regime_classify(
    material: &Material,
    kr: f64,
    radius: f64,
    thresholds: RegimeThresholds,
) -> Result<Regime> {
    let r = mie_ratios(material, kr, radius)?;
    Ok(if r.quadrupole_over_dipole.abs() > thresholds.multipole {
        Regime::Multipole
    } else if r.te_over_tm.abs() < thresholds.rayleigh {
        Regime::Rayleigh
    } else {
        Regime::Dipole
    })
}

/// Outcome of the test for negligible TE scattering at large distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighCheck {
    /// `R sigma0 / 30c`
    pub te_parameter: f64,
    /// `d / R`
    pub distance_ratio: f64,
    /// `te_parameter / distance_ratio`
    pub ratio: f64,
    pub valid: bool,
    /// `R / (sqrt(15) delta)` with the quasi-static skin depth
    /// `delta = (2c^2/(sigma0 omega))^{1/2}` taken at `omega = c/d`.
    pub radius_over_skin_depth: f64,
}

/// TE scattering is negligible iff `R sigma0/30c << d/R`, with `<<` read as
/// `ratio < margin`.
pub fn rayleigh_validity(material: &Material, radius: f64, distance: f64, margin: f64) -> RayleighCheck {
    let sigma0 = material.dc_conductivity();
    let te_parameter = radius * sigma0 / 30.0;
    let distance_ratio = distance / radius;
    let ratio = te_parameter / distance_ratio;
    let omega = 1.0 / distance;
    let skin_depth = (2.0 / (sigma0 * omega)).sqrt();
    RayleighCheck {
        te_parameter,
        distance_ratio,
        ratio,
        valid: ratio < margin,
        radius_over_skin_depth: radius / (15f64.sqrt() * skin_depth),
    }
}

/// Default margin for [`rayleigh_validity`].
pub const RAYLEIGH_MARGIN: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn fig2_material() -> Material {
        // sigma0 R/c = 4 pi 1e4 with omega_P R/2 pi c = 20, R = 1
        let plasma = 40.0 * std::f64::consts::PI;
        Material::drude_from_conductivity(4.0 * std::f64::consts::PI * 1e4, plasma).unwrap()
    }

    #[test]
    fn pec_dipole_small_argument() {
        let x = 1e-3;
        let m = mie_coefficients(&Material::perfect_conductor(), 1, x, x).unwrap();
        assert!(rel(m.a_value(), -2.0 / 3.0 * x.powi(3)) < 1e-5);
        assert!(rel(m.b_value(), x.powi(3) / 3.0) < 1e-5);
        assert!(rel(-m.b_value() / m.a_value(), 0.5) < 1e-5);
    }

    #[test]
    fn pec_series_example() {
        let (a, _) = mie_expansion(&Material::perfect_conductor(), 1, 0.01, 1.0).unwrap();
        assert!((a - (-6.666_666_666_666_667e-7 + 2e-11)).abs() < 1e-22);
    }

    #[test]
    fn drude_te_leading_term() {
        let mat = fig2_material();
        let (_, b) = mie_expansion(&mat, 1, 0.01, 1.0).unwrap();
        let leading = 4.0 * std::f64::consts::PI * 1e4 / 45.0 * 1e-8;
        assert!(rel(leading, 2.7925e-5) < 1e-4);
        // the series value includes the (kR)^5 correction
        assert!(b < leading);
        // full coefficient approaches the leading term where n kR << 1
        let x = 1e-8;
        let full = mie_coefficients(&mat, 1, x, x).unwrap();
        assert!(rel(full.b_value(), mat.dc_conductivity() / 45.0 * x.powi(4)) < 1e-3);
    }

    #[test]
    fn signs_and_parity() {
        let mats = [Material::perfect_conductor(), fig2_material(), Material::drude(3.0, 0.5).unwrap()];
        for mat in &mats {
            for &k in &[1e-3, 0.1, 2.0, 30.0] {
                let t = mie_table(mat, 12, k, 1.0).unwrap();
                for p in &t {
                    let s = if p.l % 2 == 0 { 1.0 } else { -1.0 };
                    assert_eq!(p.a.sign, s, "a sign l={} k={k}", p.l);
                    assert_eq!(p.b.sign, -s, "b sign l={} k={k}", p.l);
                    assert!(p.a.ln_abs.is_finite() && p.b.ln_abs.is_finite());
                }
            }
        }
    }

    #[test]
    fn drude_approaches_pec_for_weak_damping() {
        let pec = Material::perfect_conductor();
        for &kr in &[0.01, 0.1, 0.5] {
            let drude = Material::drude(1e4, 1e-9).unwrap();
            for l in 1..=3 {
                let a = mie_coefficients(&drude, l, kr, kr).unwrap();
                let b = mie_coefficients(&pec, l, kr, kr).unwrap();
                assert!(rel(a.a_value(), b.a_value()) < 1e-3, "a l={l} kr={kr}");
                assert!(rel(a.b_value(), b.b_value()) < 1e-3, "b l={l} kr={kr}");
            }
        }
    }

    #[test]
    fn large_order_stays_finite() {
        for mat in [Material::perfect_conductor(), fig2_material()] {
            let t = mie_table(&mat, 60, 1e-4, 1.0).unwrap();
            assert!(t[59].a.ln_abs < -1000.0 && t[59].a.ln_abs.is_finite());
        }
    }

    #[test]
    fn regimes() {
        let mat = fig2_material();
        let th = RegimeThresholds::default();
        assert_eq!(regime_classify(&mat, 1e-6, 1.0, th).unwrap(), Regime::Rayleigh);
        assert_eq!(regime_classify(&mat, 0.05, 1.0, th).unwrap(), Regime::Dipole);
        assert_eq!(regime_classify(&mat, 10.0, 1.0, th).unwrap(), Regime::Multipole);
        let r = mie_ratios(&mat, 0.05, 1.0).unwrap();
        assert!(r.te_over_tm > 0.45 && r.te_over_tm < 0.5);
    }

    #[test]
    fn rayleigh_condition() {
        let mat = fig2_material();
        let c = rayleigh_validity(&mat, 1.0, 20.0, RAYLEIGH_MARGIN);
        assert!(!c.valid);
        assert!((c.te_parameter - 4188.79).abs() < 0.01);

        let weak = Material::drude(1e-6, 1.0).unwrap();
        assert!(rayleigh_validity(&weak, 1.0, 2.1, RAYLEIGH_MARGIN).valid);

        // boundary: te_parameter == d/R is not "much smaller"
        let boundary = Material::drude_from_conductivity(30.0 * 20.0, 10.0).unwrap();
        let c = rayleigh_validity(&boundary, 1.0, 20.0, RAYLEIGH_MARGIN);
        assert!((c.ratio - 1.0).abs() < 1e-12 && !c.valid);
    }

    #[test]
    fn extended_precision_reference_values() {
        // (l, kR, omega_P R/c, gamma R/c, a, b) from 40-digit evaluation of the
        // unreduced Riccati quotients
        let cases: [(usize, f64, Option<(f64, f64)>, f64, f64); 5] = [
            (1, 0.5, None, -0.082488963241223979, 0.046953028590159127),
            (3, 2.0, None, -0.17524213821909836, 0.14546655822633611),
            (2, 0.05, Some((125.66, 0.04)), 1.0419537996231985e-8, -6.5854317991008508e-9),
            (1, 1e-3, Some((30.0, 0.1)), -6.6666607943288434e-10, 1.0884441517911518e-10),
            (5, 3.0, Some((125.66, 0.04)), -0.044762224218197375, 0.036627310871761082),
        ];
        for (l, kr, drude, a, b) in cases {
            let mat = match drude {
                None => Material::perfect_conductor(),
                Some((wp, g)) => Material::drude(wp, g).unwrap(),
            };
            let m = mie_coefficients(&mat, l, kr, kr).unwrap();
            assert!(rel(m.a_value(), a) < 1e-12, "a l={l} kr={kr}: {}", m.a_value());
            assert!(rel(m.b_value(), b) < 1e-12, "b l={l} kr={kr}: {}", m.b_value());
        }
    }

    #[test]
    fn material_errors() {
        assert!(Material::drude(0.0, 1.0).is_err());
        assert!(Material::drude(1.0, -1.0).is_err());
        assert!(mie_expansion(&Material::perfect_conductor(), 2, 0.01, 1.0).is_err());
        assert!(mie_coefficients(&Material::perfect_conductor(), 0, 0.01, 1.0).is_err());
        let m = Material::drude(5.0, 2.0).unwrap();
        assert!(rel(m.dc_conductivity(), 12.5) < 1e-15);
        assert!(m.permittivity(0.3) > 1.0);
    }
}
