//! Overflow/underflow-safe scaled exponentiation kernels.
//!
//! Three routes, one per precision mode:
//! * [`pow_frac_scaled`]: binary64 carrier, binary exponentiation with a
//!   renormalization after every squaring and multiply;
//! * [`pow_dd_scaled_simple`]: the cheap double-double route; the standard
//!   `powf` raised in range-limited chunks plus a Taylor correction for the
//!   low component;
//! * [`pow_scaled_dd`]: full double-double binary exponentiation.

use super::scaled::Scaled;
use super::{Dd, two_sum};
use crate::error::{KsError, Result};

/// `base^m` as a scaled binary64 value. Never underflows or overflows
/// internally; every squaring/multiply pulls the powers of two out into the
/// exponent.
pub fn pow_scaled_f64(base: f64, m: u64) -> Scaled<f64> {
    if m == 0 {
        return Scaled::one();
    }
    let mut result = Scaled::one();
    let mut cur = Scaled::from_f64(base);
    let mut m = m;
    loop {
        if m & 1 == 1 {
            result = result.mul(cur);
        }
        m >>= 1;
        if m == 0 {
            break;
        }
        cur = cur.square();
    }
    result
}

/// `((a+b)/(c+d))^m` as a scaled binary64 value — the four-argument power
/// used to evaluate the Smirnov terms without forming `x + j/n` first.
pub fn pow_frac_scaled(a: i64, b: f64, c: i64, d: f64, m: u64) -> Result<Scaled<f64>> {
    let num = a as f64 + b;
    let den = c as f64 + d;
    if !(num > 0.0) || !(den > 0.0) {
        return Err(KsError::Domain("pow_frac_scaled requires a positive base"));
    }
    Ok(pow_scaled_f64(num / den, m))
}

/// Algorithm: `(hi + lo)^m` by correcting the standard power of `hi` with a
/// first-order expansion in `lo/hi`. The result must stay inside the
/// binary64 range; wide-range callers use [`pow_dd_scaled_simple`].
pub fn pow_d_simple(a: Dd, m: u64) -> Result<Dd> {
    if !(a.hi > 0.0) {
        return Err(KsError::Domain("pow_d_simple requires a positive base"));
    }
    let y = a.hi.powf(m as f64);
    let w = taylor_low_correction(a, m);
    let (hi, lo) = two_sum(y, y * w);
    Ok(Dd { hi, lo })
}

/// The low-component correction factor W with (1+W) = ((hi+lo)/hi)^m.
#[inline]
fn taylor_low_correction(a: Dd, m: u64) -> f64 {
    let z = a.lo / a.hi;
    let mf = m as f64;
    if mf > 1e8 {
        (mf * z.ln_1p()).exp_m1()
    } else {
        mf * z * (1.0 + (mf - 1.0) * z / 2.0)
    }
}

/// Largest |m * log2(hi)| handled by a single `powf` call. Keeps every chunk
/// comfortably inside the normal range.
const POW_CHUNK_BUDGET: f64 = 992.0;

/// `base^m` for a double-double base, as a scaled double-double.
///
/// The high component is raised with the standard library power; when the
/// result would leave the binary64 range the exponent is split into
/// near-equal chunks that are multiplied back together under
/// renormalization, so the effective grouping radix is as large as the range
/// allows. The low component enters through the same Taylor correction as
/// [`pow_d_simple`].
pub fn pow_dd_scaled_simple(base: Dd, m: u64) -> Result<Scaled<Dd>> {
    if base.hi == 0.0 {
        return Err(KsError::Domain("pow_dd_scaled_simple requires a nonzero base"));
    }
    if m == 0 {
        return Ok(Scaled::one());
    }
    let negative = base.hi < 0.0 && m & 1 == 1;
    let b = base.abs();

    let total_log2 = m as f64 * b.hi.log2();
    let y = if total_log2.abs() <= POW_CHUNK_BUDGET {
        Scaled::from_f64(b.hi.powf(m as f64))
    } else {
        let q = (total_log2.abs() / POW_CHUNK_BUDGET).ceil() as u64;
        let q = q.min(m);
        let m0 = m / q;
        let r = m % q;
        let p0 = Scaled::from_f64(b.hi.powf(m0 as f64));
        let p1 = p0.mul_f64(b.hi); // hi^(m0+1)
        let mut acc = Scaled::<f64>::one();
        for _ in 0..(q - r) {
            acc = acc.mul(p0);
        }
        for _ in 0..r {
            acc = acc.mul(p1);
        }
        acc
    };

    let w = taylor_low_correction(b, m);
    let (hi, lo) = two_sum(y.sig, y.sig * w);
    let sig = if negative { Dd { hi, lo }.neg() } else { Dd { hi, lo } };
    Ok(Scaled::new(sig, y.expt))
}

/// Integer power of a double-double with scaling: full double-double binary
/// exponentiation, renormalized after every operation.
pub fn pow_scaled_dd(a: Dd, m: u64) -> Scaled<Dd> {
    if m == 0 {
        return Scaled::one();
    }
    let mut result = Scaled::<Dd>::one();
    let mut cur = Scaled::new(a, 0);
    let mut m = m;
    loop {
        if m & 1 == 1 {
            result = result.mul(cur);
        }
        m >>= 1;
        if m == 0 {
            break;
        }
        cur = cur.square();
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::div22;

    #[test]
    fn pow_frac_trivial() {
        let r = pow_frac_scaled(1, 0.0, 2, 0.0, 1).unwrap();
        assert_eq!((r.sig, r.expt), (0.5, 0));
        // 2^-2000, far below the binary64 underflow threshold
        let r = pow_frac_scaled(1, 0.0, 2, 0.0, 2000).unwrap();
        assert_eq!((r.sig, r.expt), (0.5, -1999));
        assert!(pow_frac_scaled(0, 0.0, 2, 0.0, 3).is_err());
    }

    #[test]
    fn pow_frac_095_to_100() {
        // (9.5/10)^100, frozen from a 300-bit evaluation of (19/20)^100
        let r = pow_frac_scaled(9, 0.5, 10, 0.0, 100).unwrap();
        let expect = 5.920529220334025e-3;
        let got = r.to_f64();
        let rel = ((got - expect) / expect).abs();
        // binary exponentiation in f64: ~log2(m) roundings compound
        assert!(rel <= 200.0 * 2f64.powi(-52), "rel = {rel:e}");
        assert_eq!(r.expt, -7);
        assert!((0.5..1.0).contains(&r.sig));
    }

    #[test]
    fn pow_d_simple_examples() {
        let r = pow_d_simple(Dd::from_f64(2.0), 3).unwrap();
        assert_eq!((r.hi, r.lo), (8.0, 0.0));
        // identity base through the large-m expm1/log1p branch
        let r = pow_d_simple(Dd::from_f64(1.0), 1_000_000_000).unwrap();
        assert_eq!((r.hi, r.lo), (1.0, 0.0));
        assert!(pow_d_simple(Dd::from_f64(-1.0), 2).is_err());
    }

    #[test]
    fn pow_d_simple_accuracy() {
        // (1 + 2^-30 + 2^-80)^100, frozen from a 300-bit evaluation. The
        // result inherits the rounding of the standard power of the high
        // word, so agreement is at binary64 level.
        let a = Dd::new(1.0 + 2f64.powi(-30), 2f64.powi(-80));
        let r = pow_d_simple(a, 100).unwrap();
        let expect = Dd::new(1.0000000931322617, 7.459332280529431e-17);
        let rel = (r.sub(expect).to_f64() / expect.hi).abs();
        assert!(rel <= 2f64.powi(-52), "rel = {rel:e}");
    }

    #[test]
    fn pow_d_simple_low_word_matters() {
        // base low word large enough that dropping it would cost ~1e-13:
        // (1 + 1e-17)^10000 = 1 + 1e-13 + ...; the high power alone is 1.0
        let a = Dd::new(1.0, 1e-17);
        let r = pow_d_simple(a, 10000).unwrap();
        let got = r.sub(Dd::ONE).to_f64();
        let expect = 1e-13; // 10000 * 1e-17, higher orders below 2^-80
        assert!(((got - expect) / expect).abs() < 1e-9, "got = {got:e}");
    }

    #[test]
    fn pow_scaled_dd_examples() {
        let r = pow_scaled_dd(Dd::from_f64(0.5), 4);
        assert_eq!((r.sig.hi, r.sig.lo, r.expt), (0.5, 0.0, -3));
        let r = pow_scaled_dd(Dd::from_f64(1.0), 1_000_000);
        assert_eq!((r.sig.hi, r.expt), (0.5, 1));
    }

    #[test]
    fn pow_scaled_dd_e_inverse() {
        // (999/1000)^999 ~ e^-1; frozen from a 300-bit evaluation
        let base = div22(999.0, 1000.0);
        let r = pow_scaled_dd(base, 999);
        let expect = Dd::new(0.36806348825922325, 1.9705655987508635e-17);
        let rel = (r.to_carrier().sub(expect).to_f64() / expect.hi).abs();
        assert!(rel <= 2f64.powi(-95), "rel = {rel:e}");
    }

    #[test]
    fn hybrid_kernel_matches_full_kernel() {
        for &(num, den, m) in
            &[(3.0, 7.0, 500u64), (999.0, 1000.0, 999), (1.0, 3.0, 4000), (19.0, 20.0, 100)]
        {
            let base = div22(num, den);
            let full = pow_scaled_dd(base, m);
            let simple = pow_dd_scaled_simple(base, m).unwrap();
            let d = simple.sig.sub(full.sig.ldexp(full.expt - simple.expt)).to_f64();
            let rel = (d / full.sig.hi).abs();
            assert!(rel <= 1e-14, "({num}/{den})^{m}: rel = {rel:e}");
        }
    }

    #[test]
    fn hybrid_kernel_deep_underflow_range() {
        // (1/2 as dd)^5000 = 2^-5000: needs chunking, has an exact answer
        let r = pow_dd_scaled_simple(Dd::from_f64(0.5), 5000).unwrap();
        assert_eq!((r.sig.hi, r.expt), (0.5, -4999));
        // negative base with odd exponent keeps its sign
        let r = pow_dd_scaled_simple(Dd::from_f64(-0.5), 3).unwrap();
        assert_eq!((r.sig.hi, r.expt), (-0.5, -2));
    }

    #[test]
    fn pow_never_denormalizes() {
        // significands of deep powers stay normal
        let base = div22(1.0, 3.0);
        for m in [100u64, 1000, 5000, 20000] {
            let r = pow_scaled_dd(base, m);
            assert!(r.sig.hi.abs() >= 0.5 && r.sig.hi.abs() < 1.0);
            assert!(r.sig.hi.is_normal());
            let r = pow_dd_scaled_simple(base, m).unwrap();
            assert!(r.sig.hi.abs() >= 0.5 && r.sig.hi.abs() < 1.0);
            let r = pow_scaled_f64(1.0 / 3.0, m);
            assert!(r.sig.abs() >= 0.5 && r.sig.abs() < 1.0);
        }
    }
}
