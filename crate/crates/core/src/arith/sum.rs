//! Compensated summation. `CompensatedSum` is a plain Neumaier accumulator;
//! `ScaledSum` accumulates `Scaled` terms across frames so that terms spanning
//! thousands of binades never denormalize while being combined.

use super::scaled::Scaled;
use super::Carrier;

/// Neumaier-style compensated accumulator. Unlike plain Kahan, the
/// compensation step also recovers the residual when a term is larger than
/// the running total, which the alternating Smirnov/Dwass sums need.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<R: Carrier> {
    total: R,
    compensation: R,
}

impl<R: Carrier> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Carrier> CompensatedSum<R> {
    pub fn new() -> Self {
        CompensatedSum { total: R::ZERO, compensation: R::ZERO }
    }

    #[inline]
    pub fn add(&mut self, term: R) {
        let t = self.total.add(term);
        let residual = if self.total.hi().abs() >= term.hi().abs() {
            self.total.sub(t).add(term)
        } else {
            term.sub(t).add(self.total)
        };
        self.compensation = self.compensation.add(residual);
        self.total = t;
    }

    /// Total plus compensation, evaluated once.
    #[inline]
    pub fn finalize(&self) -> R {
        self.total.add(self.compensation)
    }

    /// Exact power-of-two rescaling of the whole accumulator state.
    #[inline]
    fn ldexp(&mut self, e: i64) {
        self.total = self.total.ldexp(e);
        self.compensation = self.compensation.ldexp(e);
    }
}

/// One frame of a `ScaledSum`: a compensated sum whose terms live near
/// 2^expt.
#[derive(Clone, Copy, Debug)]
struct Frame<R: Carrier> {
    acc: CompensatedSum<R>,
    expt: i64,
}

/// How far apart (in binades) a term and a frame may be and still be
/// combined directly. Staying well inside the binary64 exponent range keeps
/// every shifted significand (and its double-double tail) normal.
const FRAME_WINDOW: i64 = 900;

/// Accumulates `Scaled` terms. Terms within `2^+-900` of an existing frame
/// are shifted (exactly) into it; terms further away open a new frame, so no
/// intermediate ever underflows or denormalizes. In practice the main
/// Smirnov summation uses one frame, occasionally two.
#[derive(Clone, Copy, Debug)]
pub struct ScaledSum<R: Carrier> {
    frames: [Frame<R>; 4],
    len: usize,
}

impl<R: Carrier> Default for ScaledSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Carrier> ScaledSum<R> {
    pub fn new() -> Self {
        ScaledSum {
            frames: [Frame { acc: CompensatedSum::new(), expt: 0 }; 4],
            len: 0,
        }
    }

    pub fn add(&mut self, term: Scaled<R>) {
        if term.is_zero() {
            return;
        }
        for f in self.frames[..self.len].iter_mut() {
            let d = term.expt - f.expt;
            if d.abs() <= FRAME_WINDOW {
                f.acc.add(term.sig.ldexp(d));
                // keep the frame centered on the running magnitude
                let hi = f.acc.total.hi().abs();
                if !(0.25..4.0).contains(&hi) && hi != 0.0 {
                    let (_, e) = super::scaled::frexp(f.acc.total.hi());
                    f.acc.ldexp(-e);
                    f.expt += e;
                }
                return;
            }
        }
        if self.len < self.frames.len() {
            let mut acc = CompensatedSum::new();
            acc.add(term.sig);
            self.frames[self.len] = Frame { acc, expt: term.expt };
            self.len += 1;
            return;
        }
        // Out of frames: fold into the nearest one. The shift exceeds the
        // window, so the folded contribution is below 2^-900 relative and
        // cannot affect a 106-bit result.
        let f = self.frames[..self.len]
            .iter_mut()
            .min_by_key(|f| (term.expt - f.expt).abs())
            .unwrap();
        f.acc.add(term.sig.ldexp(term.expt - f.expt));
    }

    /// Combined value across all frames.
    pub fn value(&self) -> Scaled<R> {
        if self.len == 0 {
            return Scaled::ZERO;
        }
        let mut frames: Vec<(R, i64)> =
            self.frames[..self.len].iter().map(|f| (f.acc.finalize(), f.expt)).collect();
        frames.sort_by_key(|&(_, e)| e);
        let (mut sig, mut expt) = frames[0];
        for &(s, e) in &frames[1..] {
            // shift the smaller-frame partial down into the larger frame
            sig = s.add(sig.ldexp(expt - e));
            expt = e;
            let (_, en) = super::scaled::frexp(sig.hi());
            sig = sig.ldexp(-en);
            expt += en;
        }
        Scaled::new(sig, expt)
    }
}
