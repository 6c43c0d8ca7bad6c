//! Extended real values: finite f64 or +inf, never -inf or NaN.
//!
//! The +inf tag rides on IEEE infinity so dense storage stays a plain f64
//! array, but construction and arithmetic go through this newtype so that
//! the forbidden values cannot appear and additions saturate.

use std::fmt;

/// A value in R union {+inf}.
#[derive(Copy, Clone, PartialEq, PartialOrd)]
pub struct Ext(f64);

pub const INF: Ext = Ext(f64::INFINITY);

impl Ext {
    /// Wrap a finite value. Panics on NaN or any infinity.
    #[inline]
    pub fn finite(v: f64) -> Ext {
        assert!(v.is_finite(), "Ext::finite needs a finite value, got {v}");
        Ext(v)
    }

    /// Wrap a raw value that is either finite or +inf.
    #[inline]
    pub fn new(v: f64) -> Ext {
        assert!(!v.is_nan() && v != f64::NEG_INFINITY, "Ext forbids NaN and -inf");
        Ext(v)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Raw inner value; +inf maps to f64::INFINITY.
    #[inline]
    pub fn raw(self) -> f64 {
        self.0
    }

    /// Finite inner value, or None for +inf.
    #[inline]
    pub fn as_finite(self) -> Option<f64> {
        if self.is_finite() {
            Some(self.0)
        } else {
            None
        }
    }

    /// Saturating addition: inf + r = inf.
    #[inline]
    pub fn add(self, rhs: Ext) -> Ext {
        Ext(self.0 + rhs.0)
    }

    /// Add a finite scalar; inf + r = inf.
    #[inline]
    pub fn add_scalar(self, rhs: f64) -> Ext {
        debug_assert!(rhs.is_finite());
        Ext(self.0 + rhs)
    }

    /// Scale by a nonnegative factor. 0 * inf is defined as 0 here: scaling
    /// an epigraph by t = 0 flattens it, which is the convention the Asplund
    /// combine needs for its t = 0 boundary case.
    #[inline]
    pub fn scale(self, t: f64) -> Ext {
        debug_assert!(t >= 0.0 && t.is_finite());
        if t == 0.0 {
            Ext(0.0)
        } else {
            Ext(self.0 * t)
        }
    }

    #[inline]
    pub fn min(self, rhs: Ext) -> Ext {
        if self.0 <= rhs.0 {
            self
        } else {
            rhs
        }
    }

    /// e^{-v}; +inf maps to 0.
    #[inline]
    pub fn neg_exp(self) -> f64 {
        if self.is_finite() {
            (-self.0).exp()
        } else {
            0.0
        }
    }
}

impl fmt::Debug for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "inf")
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
