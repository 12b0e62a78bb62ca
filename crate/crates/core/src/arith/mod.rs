//! Error-free floating-point transforms, double-double arithmetic, and the
//! scaled/compensated building blocks the distribution kernels are made of.
//!
//! Everything here is a pure function on value types and safe to call from
//! any number of threads.

mod pow;
mod scaled;
mod sum;

pub use pow::{pow_d_simple, pow_dd_scaled_simple, pow_frac_scaled, pow_scaled_dd, pow_scaled_f64};
pub use scaled::{combine_scaled, frexp, ldexp, split_scaled, RangeStatus, Scaled};
pub use sum::{CompensatedSum, ScaledSum};

/// Splitter constant for Dekker's product: 2^27 + 1.
const SPLITTER: f64 = 134_217_729.0;

/// Exact sum: returns `(s, e)` with `s = fl(a+b)` and `s + e = a + b` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let a1 = s - b;
    let b1 = s - a1;
    let e = (a - a1) + (b - b1);
    (s, e)
}

/// Exact sum assuming `|a| >= |b|` (or a = 0).
#[inline]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Dekker split of `a` into high and low 26/27-bit parts.
#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    let lo = a - hi;
    (hi, lo)
}

/// Exact product: returns `(p, e)` with `p = fl(a*b)` and `p + e = a * b`
/// exactly. Dekker's algorithm; no FMA requirement.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// Unevaluated sum of two binary64 values with `|lo| <= ulp(hi)/2`,
/// giving roughly 106 significand bits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    /// Exact double-double from the sum `a + b`.
    #[inline]
    pub fn from_two_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    /// Exact double-double from the product `a * b`.
    #[inline]
    pub fn from_two_prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn neg(self) -> Self {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 { self.neg() } else { self }
    }

    /// IEEE-style accurate addition (error <= 4 * 2^-106 relative).
    pub fn add(self, o: Dd) -> Dd {
        let (s0, e0) = two_sum(self.hi, o.hi);
        let (s1, e1) = two_sum(self.lo, o.lo);
        let (r0, r1) = quick_two_sum(s0, e0 + s1);
        let (hi, lo) = quick_two_sum(r0, r1 + e1);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn add_f64(self, b: f64) -> Dd {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi) + self.lo * o.lo;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    /// Long-division style quotient with two correction steps.
    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r1 = self.sub(o.mul_f64(q1));
        let q2 = r1.hi / o.hi;
        let r2 = r1.sub(o.mul_f64(q2));
        let q3 = r2.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        let (hi, lo) = quick_two_sum(s, e + q3);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Dd {
        self.div(Dd::from_f64(b))
    }

    /// `2^e * self`, exact while both components stay in range.
    #[inline]
    pub fn ldexp(self, e: i64) -> Dd {
        Dd { hi: ldexp(self.hi, e), lo: ldexp(self.lo, e) }
    }
}

/// Double-double approximation to the real quotient `a / b`.
pub fn div22(a: f64, b: f64) -> Dd {
    let q1 = a / b;
    let (p, e) = two_prod(q1, b);
    let q2 = ((a - p) - e) / b;
    let (hi, lo) = quick_two_sum(q1, q2);
    Dd { hi, lo }
}

/// Double-double quotient of a binary64 numerator and double-double denominator.
#[inline]
pub fn div_2d(a: f64, b: Dd) -> Dd {
    Dd::from_f64(a).div(b)
}

/// Arithmetic carrier shared by the binary64 and double-double evaluation
/// paths of the distribution kernels.
pub trait Carrier: Copy + std::fmt::Debug {
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(x: f64) -> Self;
    /// Leading binary64 component (the value itself for `f64`).
    fn hi(self) -> f64;
    /// Round to the nearest binary64.
    fn to_f64(self) -> f64;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn mul(self, o: Self) -> Self;
    fn div(self, o: Self) -> Self;
    fn mul_f64(self, b: f64) -> Self;
    fn div_f64(self, b: f64) -> Self;
    fn neg(self) -> Self;
    fn ldexp(self, e: i64) -> Self;
    fn is_zero(self) -> bool;
}

impl Carrier for f64 {
    const ZERO: f64 = 0.0;
    const ONE: f64 = 1.0;
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn hi(self) -> f64 {
        self
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        self - o
    }
    #[inline]
    fn mul(self, o: Self) -> Self {
        self * o
    }
    #[inline]
    fn div(self, o: Self) -> Self {
        self / o
    }
    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        self * b
    }
    #[inline]
    fn div_f64(self, b: f64) -> Self {
        self / b
    }
    #[inline]
    fn neg(self) -> Self {
        -self
    }
    #[inline]
    fn ldexp(self, e: i64) -> Self {
        ldexp(self, e)
    }
    #[inline]
    fn is_zero(self) -> bool {
        self == 0.0
    }
}

impl Carrier for Dd {
    const ZERO: Dd = Dd::ZERO;
    const ONE: Dd = Dd::ONE;
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    #[inline]
    fn hi(self) -> f64 {
        self.hi
    }
    #[inline]
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
    #[inline]
    fn add(self, o: Self) -> Self {
        Dd::add(self, o)
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dd::sub(self, o)
    }
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dd::mul(self, o)
    }
    #[inline]
    fn div(self, o: Self) -> Self {
        Dd::div(self, o)
    }
    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        Dd::mul_f64(self, b)
    }
    #[inline]
    fn div_f64(self, b: f64) -> Self {
        Dd::div_f64(self, b)
    }
    #[inline]
    fn neg(self) -> Self {
        Dd::neg(self)
    }
    #[inline]
    fn ldexp(self, e: i64) -> Self {
        Dd::ldexp(self, e)
    }
    #[inline]
    fn is_zero(self) -> bool {
        Dd::is_zero(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_trivial() {
        assert_eq!(two_sum(1.0, 2.0), (3.0, 0.0));
        assert_eq!(two_sum(1e100, 1.0), (1e100, 1.0));
    }

    #[test]
    fn two_sum_residual_of_tenths() {
        // fl(0.1) + fl(0.2) rounds up; the exact residual is -2^-55.
        let (s, e) = two_sum(0.1, 0.2);
        assert_eq!(s, 0.30000000000000004);
        assert_eq!(e, -(2f64.powi(-55)));
    }

    #[test]
    fn two_prod_exact() {
        let (p, e) = two_prod(3.0, 4.0);
        assert_eq!((p, e), (12.0, 0.0));
        // 10 * fl(0.1) = 1 + 2^-54 exactly; fl rounds to 1.
        let (p, e) = two_prod(10.0, 0.1);
        assert_eq!(p, 1.0);
        assert_eq!(e, 2f64.powi(-54));
    }

    #[test]
    fn dd_add_examples() {
        let r = Dd::from_f64(1.0).add(Dd::from_f64(2.0));
        assert_eq!((r.hi, r.lo), (3.0, 0.0));
        // cancellation exposes the low component
        let r = Dd::new(1.0, 2f64.powi(-60)).add(Dd::from_f64(-1.0));
        assert_eq!((r.hi, r.lo), (2f64.powi(-60), 0.0));
        // dd(0.1) + dd(0.2) carries the 106-bit value of the sum
        let r = Dd::from_f64(0.1).add(Dd::from_f64(0.2));
        assert_eq!(r.hi, 0.30000000000000004);
        assert_eq!(r.lo, -(2f64.powi(-55)));
    }

    #[test]
    fn dd_mul_div_examples() {
        let r = Dd::from_f64(2.0).mul(Dd::from_f64(4.0));
        assert_eq!((r.hi, r.lo), (8.0, 0.0));
        let r = div22(1.0, 2.0);
        assert_eq!((r.hi, r.lo), (0.5, 0.0));
        // frozen against exact rational 1/3
        let r = div22(1.0, 3.0);
        assert_eq!(r.hi, 0.3333333333333333);
        assert_eq!(r.lo, 1.850371707708594e-17);
    }

    #[test]
    fn dd_normalization_invariant() {
        let cases = [
            Dd::from_f64(0.1).add(Dd::from_f64(0.2)),
            Dd::from_f64(1.0).div(Dd::from_f64(3.0)),
            div22(355.0, 113.0).mul(div22(1.0, 7.0)),
            Dd::new(1.0, 2f64.powi(-60)).add(Dd::from_f64(-1.0)),
        ];
        for c in cases {
            assert!(c.lo.abs() <= 2f64.powi(-52) * c.hi.abs() || (c.hi == 0.0 && c.lo == 0.0));
        }
    }

    #[test]
    fn dd_div_accuracy() {
        // (1/3) * 3 should be 1 to ~2^-104
        let third = div22(1.0, 3.0);
        let r = third.mul_f64(3.0);
        let err = (r.hi - 1.0).abs().max(r.lo.abs() - 0.0);
        assert!(err <= 2f64.powi(-100), "err = {err:e}");
    }
}
