//! Positive numbers of the form exp^level(value), for quantities like M^n(R)
//! that leave the f64 range after a couple of iterations.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cmath::LN_MAX;

/// `exp` applied `level` times to `value`.
///
/// Normalised: `level >= 1` implies `value > LN_MAX`, so every level-0 number
/// is smaller than every level-1 number and comparison is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub level: u32,
    pub value: f64,
}

impl Tower {
    pub const fn real(x: f64) -> Self {
        Tower { level: 0, value: x }
    }

    /// Build from level and value, normalising.
    pub fn new(level: u32, value: f64) -> Self {
        let mut t = Tower { level, value };
        while t.level > 0 && t.value <= LN_MAX {
            t.value = libm::exp(t.value);
            t.level -= 1;
        }
        t
    }

    pub fn to_f64(self) -> Option<f64> {
        (self.level == 0).then_some(self.value)
    }

    pub fn exp(self) -> Self {
        if self.level == 0 && self.value <= LN_MAX {
            Tower::real(libm::exp(self.value))
        } else {
            Tower {
                level: self.level + 1,
                value: self.value,
            }
        }
    }

    /// Natural log; for level 0 the value must be positive.
    pub fn ln(self) -> Self {
        match self.level {
            0 => Tower::real(libm::log(self.value)),
            1 => Tower::real(self.value),
            l => Tower {
                level: l - 1,
                value: self.value,
            },
        }
    }

    /// Multiply by a positive constant.
    pub fn scale(self, c: f64) -> Self {
        match self.level {
            0 => Tower::real(self.value * c),
            1 => Tower::new(1, self.value + libm::log(c)),
            _ => self,
        }
    }

    /// Add a constant of moderate size; invisible above level 0.
    pub fn add(self, d: f64) -> Self {
        if self.level == 0 {
            Tower::real(self.value + d)
        } else {
            self
        }
    }

    /// Human readable form, e.g. "exp^2(712.5)".
    pub fn describe(&self) -> String {
        if self.level == 0 {
            format!("{}", self.value)
        } else {
            format!("exp^{}({})", self.level, self.value)
        }
    }
}

impl PartialOrd for Tower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.level.cmp(&other.level) {
            Ordering::Equal => self.value.partial_cmp(&other.value),
            o => Some(o),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_ln_round_trip() {
        let x = Tower::real(5.0);
        assert!((x.exp().ln().value - 5.0).abs() < 1e-15);
        let big = Tower::real(800.0).exp();
        assert_eq!(big.level, 1);
        assert_eq!(big.ln(), Tower::real(800.0));
        let huge = big.exp();
        assert_eq!(huge.level, 2);
        assert_eq!(huge.ln(), big);
    }

    #[test]
    fn normalisation_and_order() {
        let t = Tower::new(1, 3.0);
        assert_eq!(t.level, 0);
        assert!((t.value - libm::exp(3.0)).abs() < 1e-12);
        assert!(Tower::real(f64::MAX) < Tower::new(1, 710.0));
        assert!(Tower::new(1, 800.0) < Tower::new(1, 801.0));
        assert!(Tower::new(1, 1e300) < Tower::new(2, 710.0));
    }

    #[test]
    fn scaling() {
        assert_eq!(Tower::real(2.0).scale(3.0), Tower::real(6.0));
        let t = Tower::new(1, 1000.0).scale(libm::exp(2.0));
        assert!((t.value - 1002.0).abs() < 1e-12);
        let h = Tower::new(2, 1000.0);
        assert_eq!(h.scale(0.5), h);
    }
}
