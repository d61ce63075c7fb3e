//! Translation of spherical vector waves along the z axis at imaginary wave
//! number.
//!
//! For a translation by `d` along z the azimuthal index `m` is conserved, so
//! every routine here works at a single fixed `m`. An element couples
//! multipole order `l1` (final) to `l2` (initial):
//!
//! ```text
//! T^{PP'}_{l1,l2;m}(kd) = (-1)^{m+1} (±i)^{l1-l2} / sqrt(pi l1(l1+1) l2(l2+1))
//!                         * sum_{l'} c^{PP'}_{l1,l2,l';m} Y^{l1,l2,l'}_{-m,m,0} k_{l'}(kd)
//! ```
//!
//! with `c^{PP} = 2 sqrt(2l'+1) [l1(l1+1) + l2(l2+1) - l'(l'+1)]` and
//! `c^{PP'} = ±4 sqrt(2l'+1) m kd`. The upper sign is for translations along
//! `+z`.
//!
//! The phase `(±i)^{l1-l2}` is kept apart from the real part of the element;
//! for a forward-then-backward round trip the phases reduce to a diagonal
//! similarity transform and the round-trip matrix can be assembled in real
//! arithmetic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logval::SignedLog;
use crate::specfun::ln_k_table;
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    TM,
    TE,
}

/// Sense of a translation relative to the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Along `+z`: from the frame of sphere 2 to the frame of sphere 1.
    Forward,
    /// Along `-z`: the return leg.
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// Wigner 3j symbols `(j1 j2 j; m1 -m1 0)` for `j = |j1-j2| ..= j1+j2`.
///
/// Three-term recurrence in `j`, run downward from `j = j1 + j2`, where the
/// symbol has a closed product form.
pub fn wigner3j_column(j1: usize, j2: usize, m1: i64) -> Result<Vec<f64>> {
    if m1.unsigned_abs() as usize > j1.min(j2) {
        return Err(Error::domain(format!("|m| = {} exceeds min(l1, l2) = {}", m1.abs(), j1.min(j2))));
    }
    let j_min = j1.abs_diff(j2);
    let j_max = j1 + j2;
    let n = j_max - j_min + 1;
    let mut f = vec![0.0; n];

    // (j1 j2 J; m1 m2 0) with J = j1 + j2
    let m1u = (j1 as i64 + m1) as usize;
    let m2u = (j2 as i64 - m1) as usize;
    let ln_sq = ln_binomial(2 * j1, m1u) + ln_binomial(2 * j2, m2u)
        - ((2 * j_max + 1) as f64).ln()
        - ln_binomial(2 * j_max, j_max);
    let sign = if (j1 + j2) % 2 == 0 { 1.0 } else { -1.0 };
    f[n - 1] = sign * (0.5 * ln_sq).exp();

    let a = |j: usize| -> f64 {
        let jf = j as f64;
        let d = j1 as f64 - j2 as f64;
        let s = (j1 + j2 + 1) as f64;
        jf * ((jf * jf - d * d) * (s * s - jf * jf)).max(0.0).sqrt()
    };
    // m2 - m1 = -2 m1
    let b = |j: usize| -> f64 {
        let jf = j as f64;
        (2.0 * jf + 1.0) * jf * (jf + 1.0) * (-2.0 * m1 as f64)
    };
    let mut next = 0.0; // f(j+1)
    for j in ((j_min + 1)..=j_max).rev() {
        let cur = f[j - j_min];
        let prev = -(j as f64 * a(j + 1) * next + b(j) * cur) / ((j + 1) as f64 * a(j));
        f[j - 1 - j_min] = prev;
        next = cur;
    }
    debug_assert!({
        let norm: f64 = (j_min..=j_max).map(|j| (2 * j + 1) as f64 * f[j - j_min].powi(2)).sum();
        (norm - 1.0).abs() < 1e-8
    });
    Ok(f)
}

/// Gaunt coefficients `Y^{l1,l2,l'}_{-m,m,0}` for all admissible `l'`.
#[derive(Debug, Clone, PartialEq)]
pub struct GauntTable {
    pub l1: usize,
    pub l2: usize,
    pub m: i64,
    /// Indexed by `l' - |l1 - l2|`.
    pub values: Vec<f64>,
}

impl GauntTable {
    pub fn l_min(&self) -> usize {
        self.l1.abs_diff(self.l2)
    }

    pub fn l_max(&self) -> usize {
        self.l1 + self.l2
    }

    /// Coefficient at `l'`, zero outside the triangle.
    pub fn get(&self, lp: usize) -> f64 {
        if lp < self.l_min() || lp > self.l_max() {
            0.0
        } else {
            self.values[lp - self.l_min()]
        }
    }
}

pub fn gaunt_table(l1: usize, l2: usize, m: i64) -> Result<GauntTable> {
    let plain = wigner3j_column(l1, l2, 0)?;
    let shifted = wigner3j_column(l1, l2, -m)?;
    let l_min = l1.abs_diff(l2);
    let pref = ((2 * l1 + 1) * (2 * l2 + 1)) as f64 / (4.0 * PI);
    let values = plain
        .iter()
        .zip(&shifted)
        .enumerate()
        .map(|(i, (p, s))| {
            let lp = l_min + i;
            if (l1 + l2 + lp) % 2 == 1 {
                0.0
            } else {
                (pref * (2 * lp + 1) as f64).sqrt() * p * s
            }
        })
        .collect();
    Ok(GauntTable { l1, l2, m, values })
}

/// One translation matrix element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransElement {
    pub l1: usize,
    pub l2: usize,
    pub m: i64,
    pub pol_in: Polarization,
    pub pol_out: Polarization,
    pub kd: f64,
    pub direction: Direction,
    /// Element without the phase factor `(±i)^{l1-l2}`, including `e^{-kd}`.
    pub value: SignedLog,
    /// The phase factor is `i^phase_power`.
    pub phase_power: u8,
}

impl TransElement {
    /// Real part of the element without phase, scaled by `e^{kd}`.
    pub fn scaled_value(&self) -> f64 {
        SignedLog::from_parts(self.value.sign, self.value.ln_abs + self.kd).value()
    }

    /// Full complex element `(re, im)`.
    pub fn complex_value(&self) -> (f64, f64) {
        let v = self.value.value();
        match self.phase_power % 4 {
            0 => (v, 0.0),
            1 => (0.0, v),
            2 => (-v, 0.0),
            _ => (0.0, -v),
        }
    }
}

fn check_orders(l1: usize, l2: usize, m: i64) -> Result<()> {
    let floor = 1.max(m.unsigned_abs() as usize);
    if l1 < floor || l2 < floor {
        return Err(Error::domain(format!("orders ({l1}, {l2}) must be >= max(1, |m|) = {floor}")));
    }
    Ok(())
}

/// Per-`l'` weights of one translation element, excluding `k_{l'}(kd)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementWeights {
    /// `l'` values with non-vanishing Gaunt coefficient.
    pub lp: Vec<usize>,
    /// Prefactor times `c^{PP} Y` for conserved polarization.
    pub conserved: Vec<f64>,
    /// Prefactor times `4 sqrt(2l'+1) m Y`; multiply by `±kd` for mixing.
    pub mixing: Vec<f64>,
}

impl ElementWeights {
    pub fn new(l1: usize, l2: usize, m: i64) -> Result<Self> {
        check_orders(l1, l2, m)?;
        let g = gaunt_table(l1, l2, m)?;
        let (f1, f2) = ((l1 * (l1 + 1)) as f64, (l2 * (l2 + 1)) as f64);
        let sign_m = if m.rem_euclid(2) == 1 { 1.0 } else { -1.0 };
        let pref = sign_m / (PI * f1 * f2).sqrt();
        let mut w = ElementWeights { lp: Vec::new(), conserved: Vec::new(), mixing: Vec::new() };
        // descending l', which is descending magnitude of k_{l'} at small kd
        for lp in (g.l_min()..=g.l_max()).rev() {
            let y = g.get(lp);
            if y == 0.0 {
                continue;
            }
            let root = ((2 * lp + 1) as f64).sqrt();
            let lpf = (lp * (lp + 1)) as f64;
            w.lp.push(lp);
            w.conserved.push(pref * 2.0 * root * (f1 + f2 - lpf) * y);
            w.mixing.push(pref * 4.0 * root * m as f64 * y);
        }
        Ok(w)
    }

    /// `sum_{l'} w_{l'} exp(ln_k[l'] + shift)` for either weight set, with
    /// the exponent combined before exponentiating.
    pub fn sum(&self, weights: &[f64], ln_k: &[f64], shift: f64) -> SignedLog {
        let Some(&top) = self.lp.first() else {
            return SignedLog::ZERO;
        };
        let ln_scale = ln_k[top] + shift;
        let mut acc = CompensatedSum::new();
        for (&lp, &w) in self.lp.iter().zip(weights) {
            acc.add(w * (ln_k[lp] - ln_k[top]).exp());
        }
        let v = acc.value();
        SignedLog::from_parts(v.signum(), v.abs().ln() + ln_scale)
    }
}

/// A single translation matrix element.
pub fn translation_element(
    l1: usize,
    l2: usize,
    m: i64,
    pol_in: Polarization,
    pol_out: Polarization,
    kd: f64,
    direction: Direction,
) -> Result<TransElement> {
    if !(kd > 0.0) {
        return Err(Error::domain(format!("kd must be positive, got {kd}")));
    }
    let w = ElementWeights::new(l1, l2, m)?;
    let ln_k = ln_k_table(l1 + l2, kd)?;
    let value = if pol_in == pol_out {
        w.sum(&w.conserved, &ln_k, 0.0)
    } else if m == 0 {
        SignedLog::ZERO
    } else {
        w.sum(&w.mixing, &ln_k, 0.0) * (direction.sign() * kd)
    };
    let diff = l1 as i64 - l2 as i64;
    let phase_power = match direction {
        Direction::Forward => diff.rem_euclid(4),
        Direction::Backward => (-diff).rem_euclid(4),
    } as u8;
    Ok(TransElement { l1, l2, m, pol_in, pol_out, kd, direction, value, phase_power })
}

/// Closed-form dipole round-trip translation products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleProducts {
    /// `T^{PP}_{1,1;0} T^{PP}_{1,1;0} = 9 e^{-2kd} (1/(kd)^2 + 1/(kd)^3)^2`
    pub conserved_m0: f64,
    /// `T^{PP}_{1,1;1} T^{PP}_{1,1;1} = (9/4) e^{-2kd} (1/kd + 1/(kd)^2 + 1/(kd)^3)^2`
    pub conserved_m1: f64,
    /// `T^{PP'}_{1,1;1} T^{P'P}_{1,1;1} = -(9/4) e^{-2kd} (1/kd + 1/(kd)^2)^2`
    pub mixing_m1: f64,
}

pub fn dipole_products(kd: f64) -> DipoleProducts {
    let e = (-2.0 * kd).exp();
    let u = 1.0 / kd;
    DipoleProducts {
        conserved_m0: 9.0 * e * (u * u + u * u * u).powi(2),
        conserved_m1: 2.25 * e * (u + u * u + u * u * u).powi(2),
        mixing_m1: -2.25 * e * (u + u * u).powi(2),
    }
}
