//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Wigner 3j symbol from the Racah sum in exact rational arithmetic.
pub fn racah_3j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || j3 < (j1 - j2).abs() || j3 > j1 + j2 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    let f = factorial;
    let delta = BigRational::new(f(j1 + j2 - j3) * f(j1 - j2 + j3) * f(-j1 + j2 + j3), f(j1 + j2 + j3 + 1));
    let under = delta
        * BigRational::from_integer(
            f(j1 + m1) * f(j1 - m1) * f(j2 + m2) * f(j2 - m2) * f(j3 + m3) * f(j3 - m3),
        );
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = f(k) * f(j3 - j2 + k + m1) * f(j3 - j1 + k - m2) * f(j1 + j2 - j3 - k) * f(j1 - k - m1) * f(j2 - k + m2);
        let term = BigRational::new(BigInt::one(), den);
        sum = if k % 2 == 0 { sum + term } else { sum - term };
    }
    if sum.is_zero() {
        return 0.0;
    }
    let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    // sqrt(under) * sum, with the square taken exactly
    let magnitude = (under * &sum * &sum).to_f64().unwrap().sqrt();
    phase * if sum.is_positive() { magnitude } else { -magnitude }
}

/// `Y^{l1,l2,l'}_{-m,m,0}` from exact 3j symbols.
pub fn gaunt_exact(l1: i64, l2: i64, lp: i64, m: i64) -> f64 {
    let pref = ((2 * l1 + 1) * (2 * l2 + 1) * (2 * lp + 1)) as f64 / (4.0 * PI);
    pref.sqrt() * racah_3j(l1, l2, lp, 0, 0, 0) * racah_3j(l1, l2, lp, -m, m, 0)
}

/// `i_l(x) e^{-x}` for `l <= 2` from elementary functions.
pub fn i_closed_scaled(l: usize, x: f64) -> f64 {
    let (s, c) = ((1.0 - (-2.0 * x).exp()) / 2.0, (1.0 + (-2.0 * x).exp()) / 2.0);
    match l {
        0 => s / x,
        1 => (x * c - s) / (x * x),
        2 => ((x * x + 3.0) * s - 3.0 * x * c) / x.powi(3),
        _ => unimplemented!(),
    }
}

/// `k_l(x) e^{x}` for any `l` from the finite closed form.
pub fn k_closed_scaled(l: usize, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut coeff = 1.0;
    for j in 0..=l {
        if j > 0 {
            coeff *= ((l + j) * (l - j + 1)) as f64 / j as f64;
        }
        sum += coeff / (2.0 * x).powi(j as i32);
    }
    FRAC_PI_2 / x * sum
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Round-trip products of the dipole translation elements written out by
/// hand: `(m = 0 conserved, m = 1 conserved, m = 1 mixing)`.
pub fn dipole_translation_products(kd: f64) -> (f64, f64, f64) {
    let e = (-2.0 * kd).exp();
    let (a, b, c) = (1.0 / kd, 1.0 / (kd * kd), 1.0 / (kd * kd * kd));
    (9.0 * e * (b + c) * (b + c), 2.25 * e * (a + b + c) * (a + b + c), -2.25 * e * (a + b) * (a + b))
}
