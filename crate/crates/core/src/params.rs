use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of h(a, b, ε) on an `n`-dimensional space, with ħ = 2π/n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarperParams {
    n: usize,
    a: f64,
    b: f64,
    eps: f64,
    hbar: f64,
}

impl HarperParams {
    pub fn new(n: usize, a: f64, b: f64, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        for (name, v) in [("a", a), ("b", b), ("eps", eps)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(HarperParams {
            n,
            a,
            b,
            eps,
            hbar: 2.0 * PI / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(self.n, a, self.b, self.eps)
    }
    pub fn with_b(&self, b: f64) -> Result<Self> {
        Self::new(self.n, self.a, b, self.eps)
    }
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.n, self.a, self.b, eps)
    }

    /// |a| + |ε|, the natural energy scale (operator norm bound).
    pub fn scale(&self) -> f64 {
        self.a.abs() + self.eps.abs()
    }
}

/// Decimal working precision. 15 or 16 digits selects hardware doubles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrecisionContext {
    digits: u32,
}

impl PrecisionContext {
    pub const MACHINE: PrecisionContext = PrecisionContext { digits: 16 };

    pub fn new(digits: u32) -> Result<Self> {
        if digits < 15 {
            return Err(Error::InvalidPrecision(digits));
        }
        Ok(PrecisionContext { digits })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn is_machine(&self) -> bool {
        self.digits <= 16
    }

    /// Mantissa width for the arbitrary-precision path: enough bits for the
    /// requested digits plus a guard word, rounded up to whole 64-bit words.
    pub fn bits(&self) -> usize {
        if self.is_machine() {
            return 53;
        }
        let need = (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 16;
        need.div_ceil(64) * 64
    }

    /// Smallest magnitude this context is trusted to resolve: 10^-(digits-10).
    pub fn resolution(&self) -> f64 {
        10f64.powi(-(self.digits as i32 - 10))
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::MACHINE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Conventional,
    Fourier,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_is_derived() {
        let p = HarperParams::new(49, 1.0, 0.0, 0.5).unwrap();
        assert_eq!(p.hbar(), 2.0 * PI / 49.0);
        assert_eq!(p.with_b(1.0).unwrap().hbar(), p.hbar());
    }

    #[test]
    fn rejects_bad_params() {
        assert_eq!(HarperParams::new(1, 1.0, 0.0, 0.1), Err(Error::InvalidDimension(1)));
        assert!(HarperParams::new(4, f64::NAN, 0.0, 0.1).is_err());
        assert!(HarperParams::new(4, 1.0, f64::INFINITY, 0.1).is_err());
    }

    #[test]
    fn precision_paths() {
        assert!(PrecisionContext::new(14).is_err());
        assert!(PrecisionContext::new(16).unwrap().is_machine());
        let p = PrecisionContext::new(50).unwrap();
        assert!(!p.is_machine());
        assert_eq!(p.bits(), 192);
        assert!(PrecisionContext::new(17).unwrap().bits() >= 64);
    }
}
