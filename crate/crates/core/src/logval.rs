//! Real numbers held as sign and natural logarithm of the magnitude.

use std::ops::Mul;

/// A real number `sign * exp(ln_abs)`, able to represent magnitudes far
/// outside the `f64` exponent range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    /// One of `-1.0`, `0.0`, `1.0`.
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_value(value: f64) -> Self {
        if value == 0.0 {
            Self::ZERO
        } else {
            SignedLog { sign: value.signum(), ln_abs: value.abs().ln() }
        }
    }

    pub fn from_parts(sign: f64, ln_abs: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLog { sign: sign.signum(), ln_abs }
        }
    }

    /// The value as a plain `f64`; may underflow to zero or overflow.
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: SignedLog) -> SignedLog {
        SignedLog::from_parts(self.sign * rhs.sign, self.ln_abs + rhs.ln_abs)
    }
}

impl Mul<f64> for SignedLog {
    type Output = SignedLog;

    fn mul(self, rhs: f64) -> SignedLog {
        self * SignedLog::from_value(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_beyond_f64_range() {
        let big = SignedLog::from_parts(-1.0, 800.0);
        let small = SignedLog::from_parts(1.0, -799.0);
        let p = big * small;
        assert_eq!(p.sign, -1.0);
        assert!((p.value() + std::f64::consts::E).abs() < 1e-12);
        assert!((big * SignedLog::ZERO).is_zero());
        assert_eq!(SignedLog::from_value(-2.5).value(), -2.5);
    }
}
