//! Half-precision storage with directed and stochastic rounding.
//!
//! [`cast_not_lower`] is the conservative cast used for BVH extents: it
//! rounds to nearest (ties to even) and then bumps one ULP upward if the
//! result fell below the input, so a widened extent never shrinks a box.

use crate::error::{Error, Result};

/// Largest finite half-precision value.
pub const F16_MAX: f32 = 65504.0;

/// IEEE 754 binary16 value stored as raw bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct F16(u16);

impl F16 {
    pub const ZERO: F16 = F16(0);
    pub const MAX: F16 = F16(0x7bff);

    pub const fn from_bits(bits: u16) -> Self {
        F16(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Exact widening; every binary16 value is representable in `f32`.
    pub fn to_f32(self) -> f32 {
        f16_to_f32(self)
    }

    pub fn is_finite(self) -> bool {
        self.0 & 0x7c00 != 0x7c00
    }
}

pub fn f16_to_f32(h: F16) -> f32 {
    let bits = h.0 as u32;
    let sign = (bits & 0x8000) << 16;
    let exp = (bits >> 10) & 0x1f;
    let mant = bits & 0x3ff;
    match exp {
        0 => {
            // Subnormal (or zero): mant * 2^-24, exact in f32.
            let mag = mant as f32 * f32::from_bits(0x3380_0000);
            f32::from_bits(mag.to_bits() | sign)
        }
        0x1f => f32::from_bits(sign | 0x7f80_0000 | (mant << 13)),
        _ => f32::from_bits(sign | ((exp + 127 - 15) << 23) | (mant << 13)),
    }
}

/// Round-to-nearest, ties-to-even conversion. Overflow saturates to infinity.
pub fn f32_to_f16_nearest(x: f32) -> F16 {
    if x.is_nan() {
        return F16(0x7e00);
    }
    let sign: u16 = if x.is_sign_negative() { 0x8000 } else { 0 };
    let a = x.abs();
    // Values at or above 65520 round to infinity.
    if a >= 65520.0 {
        return F16(sign | 0x7c00);
    }
    let a64 = a as f64;
    let mag = if a < f32::from_bits(0x3880_0000) {
        // Below 2^-14: count subnormal quanta of 2^-24. A result of 1024
        // carries naturally into the smallest normal encoding.
        (a64 * (1u64 << 24) as f64).round_ties_even() as u16
    } else {
        let e = ((a.to_bits() >> 23) as i32) - 127;
        let scaled = a64 * 2f64.powi(10 - e);
        let n = scaled.round_ties_even() as u32;
        // n == 2048 carries into the exponent field.
        ((((e + 15) as u32) << 10) + n - 1024) as u16
    };
    F16(sign | mag)
}

/// Conservative cast: the nearest half value that is not below `x`.
pub fn cast_not_lower(x: f32) -> Result<F16> {
    if !x.is_finite() || !(0.0..=F16_MAX).contains(&x) {
        return Err(Error::Domain(format!(
            "cast_not_lower expects a finite value in [0, 65504], got {x}"
        )));
    }
    let mut h = f32_to_f16_nearest(x);
    if h.0 == 0x8000 {
        h = F16::ZERO;
    }
    if f16_to_f32(h) < x {
        h = F16(h.0 + 1);
    }
    Ok(h)
}

/// The two adjacent half values bracketing `x` (equal when `x` is exact).
fn f16_neighbours(x: f32) -> (F16, F16) {
    let a = x.abs();
    let mut hi = f32_to_f16_nearest(a);
    if f16_to_f32(hi) < a {
        hi = F16(hi.0 + 1);
    }
    let lo = if f16_to_f32(hi) == a { hi } else { F16(hi.0 - 1) };
    if x.is_sign_negative() && a != 0.0 {
        // Mirror: the value nearer +inf is the negated lower magnitude.
        (F16(hi.0 | 0x8000), F16(lo.0 | 0x8000))
    } else {
        (lo, hi)
    }
}

/// Stochastic rounding to one of the two half-precision neighbours of `x`.
///
/// With `u` uniform on `[0, 1)` the upper neighbour is chosen with probability
/// equal to the fractional position of `x` between the neighbours, so the
/// expectation of the result is `x`.
pub fn stochastic_round_f16(x: f32, u: f32) -> Result<F16> {
    if x.is_nan() || x.abs() > F16_MAX {
        return Err(Error::Domain(format!(
            "stochastic_round_f16 expects |x| <= 65504, got {x}"
        )));
    }
    let (lo, hi) = f16_neighbours(x);
    if lo == hi {
        return Ok(lo);
    }
    let (l, h) = (f16_to_f32(lo) as f64, f16_to_f32(hi) as f64);
    let frac = (x as f64 - l) / (h - l);
    if (u as f64) >= 1.0 - frac {
        Ok(hi)
    } else {
        Ok(lo)
    }
}
