//! Significand/exponent pairs with a wide integer exponent. These keep
//! intermediate powers and products representable far outside the binary64
//! range; denormalized intermediates never appear.

use super::Carrier;

/// Builds 2^e for e in [-1022, 1023] from bits.
#[inline]
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `x * 2^e` with unbounded integer `e`; exact while the result is a normal
/// number, correctly rounded through the denormal range, 0 / +-inf beyond.
pub fn ldexp(x: f64, e: i64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mut x = x;
    let mut e = e.clamp(-4400, 4400);
    while e > 1023 {
        x *= pow2(1023);
        if !x.is_finite() {
            return x;
        }
        e -= 1023;
    }
    while e < -1022 {
        x *= pow2(-1022);
        if x == 0.0 {
            return x;
        }
        e += 1022;
    }
    x * pow2(e)
}

/// Splits a finite nonzero `x` into `(sig, e)` with `|sig| in [0.5, 1)` and
/// `x = sig * 2^e`. Zero maps to `(0, 0)`.
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 {
        return (0.0, 0);
    }
    debug_assert!(x.is_finite());
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    if exp_field == 0 {
        // denormal: renormalize first
        let (sig, e) = frexp(x * pow2(54));
        return (sig, e - 54);
    }
    let sig = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (sig, exp_field - 1022)
}

/// Outcome of recombining a scaled value into binary64.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeStatus {
    InRange,
    Underflow,
    Overflow,
}

/// A value `sig * 2^expt` with `0.5 <= |sig| < 1` (or zero). The significand
/// carrier is binary64 or double-double depending on the precision mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled<R: Carrier> {
    pub sig: R,
    pub expt: i64,
}

impl<R: Carrier> Scaled<R> {
    pub const ZERO: Scaled<R> = Scaled { sig: R::ZERO, expt: 0 };

    #[inline]
    pub fn one() -> Self {
        Scaled { sig: R::ONE, expt: 0 }.normalized()
    }

    /// Renormalizes an arbitrary `sig * 2^expt` so `|sig.hi()| in [0.5, 1)`.
    #[inline]
    pub fn new(sig: R, expt: i64) -> Self {
        Scaled { sig, expt }.normalized()
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Self::new(R::from_f64(x), 0)
    }

    #[inline]
    fn normalized(self) -> Self {
        if self.sig.is_zero() {
            return Scaled { sig: R::ZERO, expt: 0 };
        }
        let (_, e) = frexp(self.sig.hi());
        if e == 0 {
            return self;
        }
        Scaled { sig: self.sig.ldexp(-e), expt: self.expt + e }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.sig.is_zero()
    }

    #[inline]
    pub fn mul(self, o: Self) -> Self {
        Scaled { sig: self.sig.mul(o.sig), expt: self.expt + o.expt }.normalized()
    }

    #[inline]
    pub fn square(self) -> Self {
        Scaled { sig: self.sig.mul(self.sig), expt: 2 * self.expt }.normalized()
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        Scaled { sig: self.sig.mul_f64(b), expt: self.expt }.normalized()
    }

    #[inline]
    pub fn mul_carrier(self, b: R) -> Self {
        Scaled { sig: self.sig.mul(b), expt: self.expt }.normalized()
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Self {
        Scaled { sig: self.sig.div_f64(b), expt: self.expt }.normalized()
    }

    #[inline]
    pub fn neg(self) -> Self {
        Scaled { sig: self.sig.neg(), expt: self.expt }
    }

    /// Recombine into the carrier, rounding through the denormal range and
    /// saturating outside it.
    pub fn to_carrier(self) -> R {
        if self.sig.is_zero() {
            return R::ZERO;
        }
        self.sig.ldexp(self.expt)
    }

    /// Recombine into binary64 together with a range indication.
    pub fn combine(self) -> (f64, RangeStatus) {
        if self.sig.is_zero() {
            return (0.0, RangeStatus::InRange);
        }
        // below every denormal: sig * 2^expt < 2^-1074
        if self.expt < -1074 {
            return (0.0f64.copysign(self.sig.hi()), RangeStatus::Underflow);
        }
        if self.expt > 1024 {
            return (f64::INFINITY.copysign(self.sig.hi()), RangeStatus::Overflow);
        }
        let v = ldexp(self.sig.to_f64(), self.expt);
        if v == 0.0 {
            (v, RangeStatus::Underflow)
        } else if v.is_infinite() {
            (v, RangeStatus::Overflow)
        } else {
            (v, RangeStatus::InRange)
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.combine().0
    }
}

/// Significand/exponent decomposition of a binary64 value; exact.
pub fn split_scaled(x: f64) -> Scaled<f64> {
    let (sig, expt) = frexp(x);
    Scaled { sig, expt }
}

/// Inverse of [`split_scaled`], with saturation semantics per [`RangeStatus`].
pub fn combine_scaled(s: Scaled<f64>) -> (f64, RangeStatus) {
    s.combine()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        assert_eq!(split_scaled(6.0), Scaled { sig: 0.75, expt: 3 });
        // smallest denormal: exact bit-level split
        assert_eq!(split_scaled(2f64.powi(-1074) * 2.0), split_scaled(2f64.powi(-1073)));
        let s = split_scaled(f64::from_bits(1)); // 2^-1074
        assert_eq!((s.sig, s.expt), (0.5, -1073));
    }

    #[test]
    fn combine_underflow_overflow() {
        let (v, st) = combine_scaled(Scaled { sig: 0.5, expt: -3000 });
        assert_eq!(v, 0.0);
        assert_eq!(st, RangeStatus::Underflow);
        let (v, st) = combine_scaled(Scaled { sig: 0.5, expt: 3000 });
        assert!(v.is_infinite());
        assert_eq!(st, RangeStatus::Overflow);
        let (v, st) = combine_scaled(Scaled { sig: 0.75, expt: 3 });
        assert_eq!((v, st), (6.0, RangeStatus::InRange));
    }

    #[test]
    fn round_trip_normals() {
        for x in [1.0, -6.0, 0.3, 1e300, 2.2250738585072014e-308, 5e-324, 0.0] {
            let s = split_scaled(x);
            assert_eq!(s.to_f64(), x, "x = {x:e}");
            if x != 0.0 {
                assert!((0.5..1.0).contains(&s.sig.abs()));
            }
        }
    }

    #[test]
    fn ldexp_gradual_underflow() {
        assert_eq!(ldexp(0.5, -1073), f64::from_bits(1));
        assert_eq!(ldexp(0.5, -1074), 0.0); // below the denormal range (rounds to even)
        assert_eq!(ldexp(1.5, 2), 6.0);
        assert_eq!(ldexp(1.0, 1024), f64::INFINITY);
    }
}
