//! Conversions between astro-float big floats, binary64, double-double,
//! decimal strings, and C-style hex-float literals.

use crate::arith::{ldexp, Dd};
use crate::error::{KsError, Result};
use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigUint;
use std::cell::RefCell;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn rm() -> RoundingMode {
    RoundingMode::ToEven
}

/// Constructors and formatting helpers namespaced away from the raw API.
pub struct Bf;

impl Bf {
    pub fn from_u64(v: u64, p: usize) -> BigFloat {
        BigFloat::from_u128(v as u128, p.max(128))
    }

    pub fn from_i64(v: i64, p: usize) -> BigFloat {
        BigFloat::from_i128(v as i128, p.max(128))
    }

    /// Exact conversion of a big integer, then one rounding to p bits.
    pub fn from_biguint(b: &BigUint, p: usize) -> BigFloat {
        let bits = b.bits() as i64;
        if bits == 0 {
            return Bf::from_u64(0, p);
        }
        let keep = (p as i64 + 64).min(bits);
        let shift = bits - keep;
        let top: BigUint = b >> (shift as usize);
        let mut v = Bf::from_u64(0, p + 128);
        let digits: Vec<u64> = top.iter_u64_digits().collect();
        for &d in digits.iter().rev() {
            // v = v * 2^64 + d
            let mut shifted = v.clone();
            if let Some(e) = shifted.exponent() {
                shifted.set_exponent(e + 64);
            }
            v = shifted.add(&Bf::from_u64(d, p + 128), p + 128, rm());
        }
        if shift != 0 {
            if let Some(e) = v.exponent() {
                v.set_exponent(e + shift as i32);
            }
        }
        let mut v = v;
        v.set_precision(p.max(128), rm()).expect("precision");
        v
    }

    pub fn parse_dec(s: &str, p: usize) -> Result<BigFloat> {
        let v = CONSTS.with(|cc| BigFloat::parse(s, Radix::Dec, p.max(128), rm(), &mut cc.borrow_mut()));
        if v.is_nan() {
            return Err(KsError::Format(format!("unparseable decimal '{s}'")));
        }
        Ok(v)
    }

    /// Full-precision scientific decimal form `d.ddd...e+X`.
    pub fn format_dec(v: &BigFloat) -> String {
        CONSTS
            .with(|cc| v.format(Radix::Dec, rm(), &mut cc.borrow_mut()))
            .unwrap_or_else(|_| "NaN".into())
    }
}

/// Round a binary64 value to the nearest representable from a big float,
/// ties to even, with gradual underflow and saturation to +-inf.
pub fn bf_to_f64(v: &BigFloat) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    if v.is_inf_pos() {
        return f64::INFINITY;
    }
    if v.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((words, _nbits, sign, e, _inexact)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    let e = e as i64; // value = sign * 0.mantissa * 2^e
    let sgn = if sign.is_negative() { -1.0 } else { 1.0 };
    if e > 1024 {
        return sgn * f64::INFINITY;
    }
    if e < -1073 {
        return sgn * 0.0;
    }
    // top 128 mantissa bits
    let nw = words.len();
    let w0 = words[nw - 1];
    let w1 = if nw >= 2 { words[nw - 2] } else { 0 };
    let m: u128 = ((w0 as u128) << 64) | w1 as u128;
    let sticky_tail = words[..nw.saturating_sub(2)].iter().any(|&w| w != 0);

    // how many bits survive in binary64 at this magnitude
    let keep: u32 = if e >= -1021 { 53 } else { (e + 1074) as u32 };
    let shift = 128 - keep;
    let head = (m >> shift) as u64;
    let rem = m & ((1u128 << shift) - 1);
    let half = 1u128 << (shift - 1);
    let round_up = rem > half
        || (rem == half && (sticky_tail || head & 1 == 1));
    let head = head + round_up as u64;
    sgn * ldexp(head as f64, e - keep as i64)
}

/// Leading ~106 bits as a double-double.
pub fn bf_to_dd(v: &BigFloat) -> Dd {
    let hi = bf_to_f64(v);
    if !hi.is_finite() || hi == 0.0 {
        return Dd::from_f64(hi);
    }
    let p = 256;
    let lo = bf_to_f64(&v.sub(&BigFloat::from_f64(hi, p), p, rm()));
    Dd::from_two_sum(hi, lo)
}

/// Round a scientific-notation decimal string (astro-float `format` output)
/// to `sig` significant digits, round half away from zero on the digit tail.
pub fn dec_round_sig(s: &str, sig: usize) -> String {
    let (neg, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if s == "0.0" || s == "0" {
        return "0".into();
    }
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (s, 0),
    };
    let digits: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    // value = 0.d1 d2 d3 ... * 10^(exp+1) with d1 the first digit
    let mut out: Vec<u8> = digits.iter().copied().take(sig).collect();
    while out.len() < sig {
        out.push(0);
    }
    let mut exp10 = exp;
    if digits.len() > sig && digits[sig] >= 5 {
        // propagate the carry
        let mut i = sig;
        loop {
            if i == 0 {
                out.insert(0, 1);
                out.pop();
                exp10 += 1;
                break;
            }
            i -= 1;
            if out[i] == 9 {
                out[i] = 0;
            } else {
                out[i] += 1;
                break;
            }
        }
    }
    // trim trailing zeros but keep at least one digit
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    let mut r = String::new();
    if neg {
        r.push('-');
    }
    r.push((b'0' + out[0]) as char);
    if out.len() > 1 {
        r.push('.');
        for &d in &out[1..] {
            r.push((b'0' + d) as char);
        }
    }
    r.push_str(&format!("e{}{}", if exp10 >= 0 { "+" } else { "-" }, exp10.abs()));
    r
}

/// Parse a decimal literal (as typed on a command line) and round once to
/// the nearest binary64.
pub fn decimal_to_f64(s: &str) -> Result<f64> {
    let v = Bf::parse_dec(s, 200)?;
    Ok(bf_to_f64(&v))
}

/// C-style hex-float encoding of the exact binary64 bit pattern, e.g.
/// `0x1.999999999999ap-4`.
pub fn f64_to_hex(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0x0p+0".into() } else { "0x0p+0".into() };
    }
    let neg = x.is_sign_negative();
    let bits = x.abs().to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (lead, e) = if exp_field == 0 { (0u64, -1022i64) } else { (1, exp_field - 1023) };
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&format!("0x{lead}.{frac:013x}p{}{}", if e >= 0 { "+" } else { "-" }, e.abs()));
    s
}

/// Inverse of [`f64_to_hex`]; exact.
pub fn f64_from_hex(s: &str) -> Result<f64> {
    let err = || KsError::Format(format!("bad hex float '{s}'"));
    let (neg, s) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let s = s.strip_prefix("0x").ok_or_else(err)?;
    let (mant, exp) = s.split_once(['p', 'P']).ok_or_else(err)?;
    let exp: i64 = exp.parse().map_err(|_| err())?;
    let (lead, frac) = match mant.split_once('.') {
        Some((l, f)) => (l, f),
        None => (mant, ""),
    };
    let lead: u64 = u64::from_str_radix(lead, 16).map_err(|_| err())?;
    let mut v = lead as f64;
    let mut scale = 1.0f64;
    for c in frac.chars() {
        let d = c.to_digit(16).ok_or_else(err)? as f64;
        scale /= 16.0;
        v += d * scale;
    }
    let v = ldexp(v, exp);
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip() {
        let vals = [
            0.0, 1.0, -1.5, 0.1, 1e300, 1e-300, 5e-324, 2.2250738585072014e-308,
            f64::MAX, 0.3333333333333333,
        ];
        for &x in &vals {
            let b = BigFloat::from_f64(x, 320);
            assert_eq!(bf_to_f64(&b), x, "x = {x:e}");
            assert_eq!(f64_from_hex(&f64_to_hex(x)).unwrap(), x, "hex {x:e}");
        }
    }

    #[test]
    fn rounding_to_nearest() {
        // 1 + 2^-53 rounds to 1 (ties to even), 1 + 2^-52.9.. rounds up
        let p = 320;
        let one = BigFloat::from_f64(1.0, p);
        let tie = one.add(&BigFloat::from_f64(2f64.powi(-53), p), p, rm());
        assert_eq!(bf_to_f64(&tie), 1.0);
        let above = one.add(&BigFloat::from_f64(2f64.powi(-53) * 1.001, p), p, rm());
        assert_eq!(bf_to_f64(&above), 1.0 + 2f64.powi(-52));
    }

    #[test]
    fn dd_extraction() {
        let p = 320;
        let third = Bf::from_u64(1, p).div(&Bf::from_u64(3, p), p, rm());
        let d = bf_to_dd(&third);
        assert_eq!(d.hi, 0.3333333333333333);
        assert_eq!(d.lo, 1.850371707708594e-17);
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(dec_round_sig("1.23456789e-3", 4), "1.235e-3");
        assert_eq!(dec_round_sig("9.9999e+0", 3), "1e+1");
        assert_eq!(dec_round_sig("2.5e-1", 8), "2.5e-1");
        assert_eq!(dec_round_sig("1.e+0", 5), "1e+0");
        assert_eq!(dec_round_sig("-4.567e+2", 2), "-4.6e+2");
        assert_eq!(dec_round_sig("0.0", 10), "0");
    }

    #[test]
    fn decimal_to_f64_grid_values() {
        assert_eq!(decimal_to_f64("0.001").unwrap(), 0.001);
        assert_eq!(decimal_to_f64("0.35").unwrap(), 0.35);
        assert_eq!(decimal_to_f64("1e-30").unwrap(), 1e-30);
        assert_eq!(decimal_to_f64("0.753671966").unwrap(), 0.753671966);
    }

    #[test]
    fn biguint_conversion() {
        let mut b = BigUint::from(1u32);
        for i in 1..=515u64 {
            b = b * BigUint::from(1030 - i + 1) / BigUint::from(i);
        }
        let v = Bf::from_biguint(&b, 320);
        // cross-check the leading bits against the big integer itself
        let bits = b.bits() as i64;
        let top53: u64 = (&b >> ((bits - 53) as usize)).iter_u64_digits().next().unwrap();
        let lead = bf_to_f64(&{
            let mut t = v.clone();
            t.set_exponent(53);
            t
        });
        assert_eq!(lead.round() as u64, top53 + (lead.round() as u64 - top53).min(1));
    }
}
