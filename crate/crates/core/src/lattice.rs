//! Numerical divisor classes on a hyperelliptic surface and on its blow-up.
//!
//! Classes live in the basis `A/mu, (mu/gamma) B`, where the intersection
//! form is the hyperbolic plane: `(a1,b1).(a2,b2) = a1 b2 + a2 b1`. On the
//! blow-up at `r` points a class is `pi^* D - sum c_i E_i`, stored as the pair
//! `(D, [c_1, ..., c_r])`. All arithmetic is checked; overflow is an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DivisorClass {
    pub a: i64,
    pub b: i64,
}

pub(crate) fn mul(x: i64, y: i64) -> Result<i64> {
    x.checked_mul(y).ok_or(Error::Overflow("product"))
}

pub(crate) fn add(x: i64, y: i64) -> Result<i64> {
    x.checked_add(y).ok_or(Error::Overflow("sum"))
}

pub(crate) fn sub(x: i64, y: i64) -> Result<i64> {
    x.checked_sub(y).ok_or(Error::Overflow("difference"))
}

impl DivisorClass {
    pub const fn new(a: i64, b: i64) -> Self {
        DivisorClass { a, b }
    }

    /// Diagonal class `(m, m)`.
    pub const fn diagonal(m: i64) -> Self {
        DivisorClass { a: m, b: m }
    }

    pub fn intersect(&self, other: &DivisorClass) -> Result<i64> {
        add(mul(self.a, other.b)?, mul(other.a, self.b)?)
    }

    pub fn self_intersection(&self) -> Result<i64> {
        self.intersect(self)
    }

    /// Euler characteristic `ab` (Riemann-Roch with numerically trivial `K`).
    pub fn chi(&self) -> Result<i64> {
        mul(self.a, self.b)
    }

    pub fn is_ample(&self) -> bool {
        self.a > 0 && self.b > 0
    }

    /// `h^0 = chi = ab`, asserted only for ample classes.
    pub fn h0_ample(&self) -> Result<i64> {
        if !self.is_ample() {
            return Err(Error::NotAmple { a: self.a, b: self.b });
        }
        self.chi()
    }

    pub fn checked_add(&self, other: &DivisorClass) -> Result<DivisorClass> {
        Ok(DivisorClass::new(add(self.a, other.a)?, add(self.b, other.b)?))
    }

    pub fn checked_sub(&self, other: &DivisorClass) -> Result<DivisorClass> {
        Ok(DivisorClass::new(sub(self.a, other.a)?, sub(self.b, other.b)?))
    }

    pub fn checked_scale(&self, n: i64) -> Result<DivisorClass> {
        Ok(DivisorClass::new(mul(self.a, n)?, mul(self.b, n)?))
    }
}

impl std::fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// `pi^* base - sum exc[i] E_i` on the blow-up at `exc.len()` points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlowupClass {
    pub base: DivisorClass,
    pub exc: Vec<i64>,
}

impl BlowupClass {
    pub fn new(base: DivisorClass, exc: Vec<i64>) -> Self {
        BlowupClass { base, exc }
    }

    /// Pull-back with no exceptional part.
    pub fn pullback(base: DivisorClass, r: usize) -> Self {
        BlowupClass { base, exc: vec![0; r] }
    }

    /// Strict transform of a curve of class `base` passing simply through the
    /// listed points.
    pub fn through_points(base: DivisorClass, r: usize, points: &[usize]) -> Self {
        let mut exc = vec![0; r];
        for &p in points {
            exc[p] += 1;
        }
        BlowupClass { base, exc }
    }

    pub fn arity(&self) -> usize {
        self.exc.len()
    }

    fn check_arity(&self, other: &BlowupClass) -> Result<()> {
        if self.exc.len() != other.exc.len() {
            return Err(Error::ArityMismatch { left: self.exc.len(), right: other.exc.len() });
        }
        Ok(())
    }

    pub fn intersect(&self, other: &BlowupClass) -> Result<i64> {
        self.check_arity(other)?;
        let mut acc = self.base.intersect(&other.base)?;
        for (x, y) in self.exc.iter().zip(&other.exc) {
            acc = sub(acc, mul(*x, *y)?)?;
        }
        Ok(acc)
    }

    pub fn self_intersection(&self) -> Result<i64> {
        self.intersect(self)
    }

    pub fn checked_add(&self, other: &BlowupClass) -> Result<BlowupClass> {
        self.check_arity(other)?;
        let exc = self
            .exc
            .iter()
            .zip(&other.exc)
            .map(|(x, y)| add(*x, *y))
            .collect::<Result<_>>()?;
        Ok(BlowupClass { base: self.base.checked_add(&other.base)?, exc })
    }

    pub fn checked_sub(&self, other: &BlowupClass) -> Result<BlowupClass> {
        self.check_arity(other)?;
        let exc = self
            .exc
            .iter()
            .zip(&other.exc)
            .map(|(x, y)| sub(*x, *y))
            .collect::<Result<_>>()?;
        Ok(BlowupClass { base: self.base.checked_sub(&other.base)?, exc })
    }
}

pub fn intersect(d1: &DivisorClass, d2: &DivisorClass) -> Result<i64> {
    d1.intersect(d2)
}

pub fn blowup_intersect(x: &BlowupClass, y: &BlowupClass) -> Result<i64> {
    x.intersect(y)
}

/// Number of linear conditions imposed by vanishing to order `t` at a smooth
/// point of a surface: `t(t+1)/2`.
pub fn jet_condition_count(t: u32) -> u64 {
    let t = u64::from(t);
    t * (t + 1) / 2
}

/// Dimension count: a divisor in `|d|` with the prescribed multiplicities
/// exists when `h^0(d)` strictly exceeds the number of imposed conditions.
pub fn interpolating_divisor_exists(d: &DivisorClass, orders: &[u32]) -> Result<bool> {
    let h0 = d.h0_ample()?;
    let conditions: u64 = orders.iter().map(|&t| jet_condition_count(t)).sum();
    Ok(u64::try_from(h0).map_err(|_| Error::Overflow("h0"))? > conditions)
}
