//! Arbitrary-precision ground-truth evaluator (default 300-bit significand,
//! configurable) for S_n, its derivative, and roots. Used by the test
//! harness and the `compare` command. Terms are evaluated straight from the
//! defining sum with exact integer binomial coefficients and the exact
//! dyadic-rational value of the binary64 input, so the oracle and the
//! library evaluate the identical mathematical point.

mod bigfloat;
mod cache;

pub use bigfloat::{
    bf_to_dd, bf_to_f64, dec_round_sig, decimal_to_f64, f64_from_hex, f64_to_hex, Bf,
};
pub use cache::{oracle_dump, OracleCache, OracleRecord, CACHE_HEADER};

use crate::error::{KsError, Result};
use astro_float::BigFloat;
use num_bigint::BigUint;

pub const DEFAULT_BITS: usize = 300;
pub const MIN_BITS: usize = 160;

/// Exact decomposition x = m * 2^e with integer m (no normalization of
/// trailing zeros; m = 0 only for x = 0).
fn f64_mant_exp(x: f64) -> (u64, i64) {
    debug_assert!(x.is_finite() && x >= 0.0);
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    }
}

/// Exact floor(n * x) plus knot flag for a binary64 x in [0, 1].
pub fn exact_floor_nx(n: u64, x: f64) -> (u64, bool) {
    let (m, e) = f64_mant_exp(x);
    let prod = (n as u128) * (m as u128);
    if e >= 0 {
        // x is an integer multiple of 1: only x = 0 or 1 land here for x <= 1
        return ((prod << e.min(64)) as u64, true);
    }
    let shift = -e;
    if shift >= 128 {
        return (0, prod == 0);
    }
    let k = prod >> shift;
    let exact = prod & ((1u128 << shift) - 1) == 0;
    (k as u64, exact)
}

fn rm() -> astro_float::RoundingMode {
    astro_float::RoundingMode::ToEven
}

/// Working context for oracle evaluations at a fixed precision.
pub struct Oracle {
    pub bits: usize,
}

impl Oracle {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(KsError::InvalidArgument(format!(
                "oracle precision {bits} below the minimum {MIN_BITS}"
            )));
        }
        Ok(Oracle { bits })
    }

    fn p(&self) -> usize {
        self.bits + 32 // guard bits over the advertised precision
    }

    /// (n-j)/n - x without cancellation loss: the quotient is computed with
    /// enough extra precision to cover the leading digits the subtraction
    /// cancels, retrying once with the measured loss.
    fn base_hi(&self, p: usize, n: u64, j: u64, xb: &BigFloat) -> BigFloat {
        let num = Bf::from_u64(n - j, p + 96);
        let den = Bf::from_u64(n, p + 96);
        let d1 = num.div(&den, p + 96, rm());
        let s = d1.sub(xb, p + 96, rm());
        let loss = match (d1.exponent(), s.exponent()) {
            (Some(ed), Some(es)) => ed as i64 - es as i64,
            _ => 0,
        };
        if loss <= 48 {
            return s;
        }
        let pw = p + loss as usize + 96;
        let d1 = Bf::from_u64(n - j, pw).div(&Bf::from_u64(n, pw), pw, rm());
        d1.sub(xb, pw, rm())
    }

    /// S_n(x) at the exact dyadic value of x.
    pub fn sf(&self, n: u64, x: f64) -> BigFloat {
        self.sf_cdf_pdf(n, x).0
    }

    /// -S_n'(x) at the exact dyadic value of x; left limit at knots.
    pub fn pdf(&self, n: u64, x: f64) -> BigFloat {
        self.sf_cdf_pdf(n, x).2
    }

    /// (sf, cdf, pdf) in one pass over the defining sum.
    pub fn sf_cdf_pdf(&self, n: u64, x: f64) -> (BigFloat, BigFloat, BigFloat) {
        let p = self.p();
        let one = Bf::from_u64(1, p);
        let zero = Bf::from_u64(0, p);
        if x <= 0.0 {
            return (one, zero.clone(), Bf::from_u64(1, p));
        }
        if x >= 1.0 {
            return (zero.clone(), one, zero);
        }
        if n == 1 {
            let xb = BigFloat::from_f64(x, p);
            let sf = one.sub(&xb, p, rm());
            return (sf, xb, Bf::from_u64(1, p));
        }
        let (k, knot) = exact_floor_nx(n, x);
        let upper = n - k - 1; // the top knot term vanishes identically
        let xb = BigFloat::from_f64(x, p);
        let inv_x = Bf::from_u64(1, p).div(&xb, p, rm());

        let mut binom = BigUint::from(1u32);
        let mut a_sum = Bf::from_u64(0, p);
        let mut d_sum = Bf::from_u64(0, p);
        for j in 0..=upper {
            if j > 0 {
                binom = &binom * (n - j + 1) / j;
            }
            let b2 = self.base_hi(p, n, j, &xb); // 1 - x - j/n
            let t2 = b2.powi(Self::as_usize(n - j), p, rm());
            let aj = if j == 0 {
                // A_0 = (1-x)^n / x
                t2.div(&xb, p, rm())
            } else {
                let b1 = Bf::from_u64(j, p)
                    .div(&Bf::from_u64(n, p), p, rm())
                    .add(&xb, p, rm()); // x + j/n
                let t1 = b1.powi(Self::as_usize(j - 1), p, rm());
                let c = Bf::from_biguint(&binom, p);
                c.mul(&t1, p, rm()).mul(&t2, p, rm())
            };
            a_sum = a_sum.add(&aj, p, rm());

            // derivative coefficient: 1/x + (j-1)/b1' - (n-j)/b2
            let coeff = {
                let mut c = inv_x.clone();
                if j > 0 {
                    let b1 = Bf::from_u64(j, p)
                        .div(&Bf::from_u64(n, p), p, rm())
                        .add(&xb, p, rm());
                    let jm1 = Bf::from_i64(j as i64 - 1, p);
                    c = c.add(&jm1.div(&b1, p, rm()), p, rm());
                } else {
                    // (j-1)/ (x + 0) = -1/x cancels 1/x
                    c = c.sub(&inv_x, p, rm());
                }
                let nmj = Bf::from_u64(n - j, p);
                c.sub(&nmj.div(&b2, p, rm()), p, rm())
            };
            d_sum = d_sum.add(&coeff.mul(&aj, p, rm()), p, rm());
        }

        let sf = xb.mul(&a_sum, p, rm());
        let cdf = one.sub(&sf, p, rm());
        let mut pdf = xb.mul(&d_sum, p, rm()).neg();
        if knot && k == 1 {
            // left limit at the x = 1/n knot: the vanished top term still
            // contributes x * n * (x + (n-1)/n)^(n-2) to the derivative
            let b = Bf::from_u64(n - 1, p)
                .div(&Bf::from_u64(n, p), p, rm())
                .add(&xb, p, rm());
            let t = b.powi(Self::as_usize(n - 2), p, rm());
            let add = xb.mul(&Bf::from_u64(n, p), p, rm()).mul(&t, p, rm());
            pdf = pdf.add(&add, p, rm());
        }
        (sf, cdf, pdf)
    }

    /// S_n(x) summed over the upper (alternating) index range; equal to
    /// [`Oracle::sf`] by one of Abel's combinatorial identities. Used as an
    /// internal consistency check of the oracle itself. The alternating sum
    /// loses ~1.6 bits per unit of n*x to cancellation, so the working
    /// precision is raised accordingly.
    pub fn sf_upper_route(&self, n: u64, x: f64) -> BigFloat {
        let one = Bf::from_u64(1, self.p());
        if x <= 0.0 {
            return one;
        }
        if x >= 1.0 {
            return Bf::from_u64(0, self.p());
        }
        let (k, knot) = exact_floor_nx(n, x);
        let p = self.p() + 2 * k as usize + 96;
        let lower = if knot { n - k + 1 } else { n - k }; // ceil(n(1-x)), zero term skipped at knots
        let xb = BigFloat::from_f64(x, p);

        // binom(n, lower) by the shorter side
        let mut binom = BigUint::from(1u32);
        for i in 1..=(n - lower) {
            binom = &binom * (n - i + 1) / i;
        }
        let mut cdf = Bf::from_u64(0, p);
        for j in lower..=n {
            let b1 = Bf::from_u64(j, p)
                .div(&Bf::from_u64(n, p), p, rm())
                .add(&xb, p, rm());
            let t1 = b1.powi(Self::as_usize(j - 1), p, rm());
            let b2 = self.base_hi(p, n, j, &xb); // negative for j > n - nx
            let t2 = b2.powi(Self::as_usize(n - j), p, rm());
            let c = Bf::from_biguint(&binom, p);
            let term = c.mul(&t1, p, rm()).mul(&t2, p, rm());
            cdf = cdf.add(&term, p, rm());
            if j < n {
                binom = &binom * (n - j) / (j + 1);
            }
        }
        one.sub(&xb.mul(&cdf, p, rm()), p, rm())
    }

    /// S_n at an arbitrary-precision x in (0, 1); the branch index comes
    /// from the integer part of n*x.
    pub fn sf_bf(&self, n: u64, xb: &BigFloat) -> BigFloat {
        let p = self.p();
        if n == 1 {
            return Bf::from_u64(1, p).sub(xb, p, rm());
        }
        let k = bf_floor_u64(&xb.mul(&Bf::from_u64(n, p), p, rm()));
        let k = k.min(n - 1);
        let upper = n - k - 1;
        let mut binom = BigUint::from(1u32);
        let mut a_sum = Bf::from_u64(0, p);
        for j in 0..=upper {
            if j > 0 {
                binom = &binom * (n - j + 1) / j;
            }
            let b2 = self.base_hi(p, n, j, xb);
            let t2 = b2.powi(Self::as_usize(n - j), p, rm());
            let aj = if j == 0 {
                t2.div(xb, p, rm())
            } else {
                let b1 = Bf::from_u64(j, p)
                    .div(&Bf::from_u64(n, p), p, rm())
                    .add(xb, p, rm());
                let t1 = b1.powi(Self::as_usize(j - 1), p, rm());
                Bf::from_biguint(&binom, p).mul(&t1, p, rm()).mul(&t2, p, rm())
            };
            a_sum = a_sum.add(&aj, p, rm());
        }
        xb.mul(&a_sum, p, rm())
    }

    /// Root of S_n(x) = p_sf by bisection on the exact spline, to a
    /// relative interval width around 2^-170.
    pub fn isf(&self, n: u64, p_sf: f64) -> BigFloat {
        let p = self.p().max(232);
        let target = BigFloat::from_f64(p_sf, p);
        if n == 1 {
            return Bf::from_u64(1, p).sub(&target, p, rm());
        }
        let mut lo = BigFloat::from_f64(f64::MIN_POSITIVE, p);
        let mut hi = Bf::from_u64(1, p);
        let half = BigFloat::from_f64(0.5, p);
        for _ in 0..1100 {
            let mid = lo.add(&hi, p, rm()).mul(&half, p, rm());
            let fx = self.sf_bf(n, &mid);
            if fx.cmp(&target).map_or(false, |c| c >= 0) {
                lo = mid;
            } else {
                hi = mid;
            }
            let width = hi.sub(&lo, p, rm());
            let done = match (width.exponent(), lo.exponent()) {
                (Some(we), Some(le)) => (we as i64) < (le as i64) - 172,
                _ => false,
            };
            if done {
                break;
            }
        }
        lo.add(&hi, p, rm()).mul(&half, p, rm())
    }

    fn as_usize(v: u64) -> usize {
        usize::try_from(v).expect("exponent fits usize")
    }
}

/// Integer part of a non-negative BigFloat that fits in u64.
fn bf_floor_u64(v: &BigFloat) -> u64 {
    match v.as_raw_parts() {
        Some((words, _, sign, e, _)) if !words.is_empty() && e > 0 && sign.is_positive() => {
            let top = *words.last().unwrap();
            debug_assert!(e < 64, "n*x stays below 2^52");
            top >> (64 - e.min(63) as u32)
        }
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o300() -> Oracle {
        Oracle::new(300).unwrap()
    }

    #[test]
    fn exact_floor_cases() {
        assert_eq!(exact_floor_nx(4, 0.25), (1, true));
        assert_eq!(exact_floor_nx(3, 0.5), (1, false));
        assert_eq!(exact_floor_nx(10, 0.1), (1, false)); // 10*fl(0.1) = 1 + 2^-54
        assert_eq!(exact_floor_nx(10, 0.3), (2, false)); // 10*fl(0.3) = 3 - 2^-52ish
        assert_eq!(exact_floor_nx(2, 0.5), (1, true));
    }

    #[test]
    fn sf_small_exact_values() {
        let o = o300();
        // S_2(0.5) = 0.25, S_1-like checks at exact dyadics
        assert_eq!(bf_to_f64(&o.sf(2, 0.5)), 0.25);
        assert_eq!(bf_to_f64(&o.sf(2, 0.75)), 0.0625);
        assert_eq!(bf_to_f64(&o.sf(2, 0.25)), 0.6875);
        assert_eq!(bf_to_f64(&o.sf(1, 0.3)), 0.7);
    }

    #[test]
    fn pdf_piecewise_derivative() {
        let o = o300();
        // derivative of x(1+x) below the n=2 knot, of (1-x)^2 above it
        assert!((bf_to_f64(&o.pdf(2, 0.49)) - 1.98).abs() < 1e-15);
        assert!((bf_to_f64(&o.pdf(2, 0.51)) - 0.98).abs() < 1e-15);
        // left limit at the knot
        assert_eq!(bf_to_f64(&o.pdf(2, 0.5)), 2.0);
        assert_eq!(bf_to_f64(&o.pdf(1, 0.5)), 1.0);
    }

    #[test]
    fn frozen_decimal_regressions() {
        // frozen from an independent exact-rational evaluation
        let o = o300();
        let sf = o.sf(5, 0.1);
        let s = dec_round_sig(&Bf::format_dec(&sf), 30);
        assert_eq!(s, "8.53589999999999988917198656679e-1");
        let pdf = o.pdf(10, 0.3);
        let s = dec_round_sig(&Bf::format_dec(&pdf), 30);
        assert_eq!(s, "1.74346021000000017388132933505e+0");
    }

    #[test]
    fn abel_identity_cross_route() {
        let o = o300();
        for &(n, x) in &[(2u64, 0.3), (7, 0.123), (40, 0.05), (200, 0.01), (200, 0.4)] {
            let a = o.sf(n, x);
            let b = o.sf_upper_route(n, x);
            let d = a.sub(&b, o.p(), rm());
            if d.is_zero() {
                continue;
            }
            let rel = match (d.exponent(), a.exponent()) {
                (Some(de), Some(ae)) => de as i64 - ae as i64,
                (None, _) | (_, None) => -100000,
            };
            assert!(
                rel < -(o.bits as i64 - 30),
                "n={n} x={x}: rel 2^{rel}\n a={}\n b={}",
                Bf::format_dec(&a),
                Bf::format_dec(&b)
            );
        }
    }

    #[test]
    fn isf_roots() {
        let o = o300();
        assert!((bf_to_f64(&o.isf(1, 0.3)) - 0.7).abs() < 1e-15);
        assert!((bf_to_f64(&o.isf(4, 0.00390625)) - 0.75).abs() < 1e-15);
        let r = bf_to_f64(&o.isf(10, 1.055e-6));
        assert!((r - 0.7536719667080770).abs() < 1e-12, "r = {r}");
    }

    #[test]
    fn precision_scaling() {
        let a = Oracle::new(200).unwrap().sf(50, 0.08);
        let b = Oracle::new(400).unwrap().sf(50, 0.08);
        let d = a.sub(&b, 400, rm());
        if d.is_zero() {
            return;
        }
        let rel = match (d.exponent(), a.exponent()) {
            (Some(de), Some(ae)) => de as i64 - ae as i64,
            _ => -100000,
        };
        assert!(rel < -(200 - 25), "rel 2^{rel}");
    }
}
