//! Inverse survival function (quantile) for D_n^+: closed forms where they
//! exist, a regime-specific bracket and starting point otherwise, then
//! bracketed Newton-Raphson on the jointly computed (sf, cdf, pdf) with a
//! bisection fallback.

use crate::dist::{smirnov, PrecisionMode, MAX_N};
use crate::error::{KsError, Result};

/// Relative step size at which the iteration stops.
pub const NEWTON_TOL: f64 = 2.2e-16;
/// Iteration budget; the hardest denormal-probability solves take about 50.
pub const MAX_ITERATIONS: u32 = 100;

const EPS: f64 = 2.220446049250313e-16;

/// Both tails of the target probability. The caller supplies both so the
/// smaller one carries full precision.
#[derive(Clone, Copy, Debug)]
pub struct ProbabilityPair {
    pub sf: f64,
    pub cdf: f64,
}

impl ProbabilityPair {
    /// Validates ranges and mutual consistency (within an ulp of 1).
    pub fn new(sf: f64, cdf: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sf) || !(0.0..=1.0).contains(&cdf) {
            return Err(KsError::InvalidArgument(format!(
                "probabilities out of range: sf = {sf:e}, cdf = {cdf:e}"
            )));
        }
        if ((sf + cdf) - 1.0).abs() > 2.0 * EPS {
            return Err(KsError::InvalidArgument(format!(
                "sf + cdf = {:e} is not within 2^-51 of 1",
                sf + cdf
            )));
        }
        Ok(ProbabilityPair { sf, cdf })
    }

    pub fn from_sf(sf: f64) -> Result<Self> {
        Self::new(sf, 1.0 - sf)
    }

    pub fn from_cdf(cdf: f64) -> Result<Self> {
        Self::new(1.0 - cdf, cdf)
    }

    /// log(p_sf) computed from whichever tail is more precise.
    fn ln_sf(&self) -> f64 {
        if self.sf < 0.5 {
            self.sf.ln()
        } else {
            (-self.cdf).ln_1p()
        }
    }
}

/// A sign-changing interval [a, b] with the Newton starting point inside it.
#[derive(Clone, Copy, Debug)]
pub struct RootBracket {
    pub a: f64,
    pub b: f64,
    pub x0: f64,
}

/// Outcome of one inverse solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveReport {
    pub x: f64,
    pub iterations: u32,
    pub bisection_steps: u32,
    pub converged: bool,
}

/// Bracket and starting point for the Newton iteration (interior
/// probabilities, n >= 2).
///
/// Small-x regime (p_cdf <= CDF(1/n)): the closed form CDF = x(1+x)^(n-1)
/// pins the root inside [p_cdf/e, min(p_cdf, 1/n)]; one Newton step on
/// gamma*e^(gamma-1) = p_cdf/P1 from gamma_0 = p_cdf/P1 gives the seed.
/// Main regime: A = max(1 - p_sf^(1/n), 1/n) and B0 = sqrt(-log(p_sf)/2n)
/// bound the root; the seed is the tightened-asymptote inverse B0 - 1/(6n).
pub fn bracket_and_seed(n: u64, p: ProbabilityPair) -> RootBracket {
    let nf = n as f64;
    // P1 = CDF(1/n) = (1/n)(1 + 1/n)^(n-1), via log1p for large n
    let p1 = ((nf - 1.0) * (1.0 / nf).ln_1p()).exp() / nf;

    let (mut a, mut b, x0);
    if p.cdf <= p1 {
        a = p.cdf / std::f64::consts::E;
        b = p.cdf.min(1.0 / nf);
        let g0 = p.cdf / p1;
        let g1 = g0 * (g0 + (1.0 - g0).exp()) / (g0 + 1.0);
        x0 = (g1 / nf).min(b);
    } else {
        a = (1.0 - p.sf.powf(1.0 / nf)).max(1.0 / nf);
        let b0 = (-p.ln_sf() / (2.0 * nf)).sqrt();
        let b1 = b0 - 1.0 / (6.0 * nf);
        b = b0.min(1.0 - 1.0 / nf);
        x0 = if a <= b1 && b1 <= b { b1 } else { 0.5 * (a + b) };
    }
    // Inflate so the computed f keeps its sign at the ends despite rounding.
    a *= 1.0 - 256.0 * EPS;
    b *= 1.0 + 256.0 * EPS;
    b = b.min(1.0);
    RootBracket { a, b, x0: x0.clamp(a, b) }
}

/// Bracketed Newton-Raphson for a decreasing function, with bisection when a
/// proposed step leaves the bracket or fails to shrink (|delta_i| >=
/// |delta_(i-2)| / 2). `f_and_df` returns (f(x), f'(x)).
pub fn bracketed_newton<F>(
    mut f_and_df: F,
    bracket: RootBracket,
    tol: f64,
    max_iter: u32,
) -> SolveReport
where
    F: FnMut(f64) -> (f64, f64),
{
    let RootBracket { mut a, mut b, x0 } = bracket;
    let mut x = x0;
    let mut best: Option<(f64, f64)> = None; // (|f|, x)
    let mut deltas = [f64::INFINITY; 2];
    let mut bisections = 0u32;

    for iter in 1..=max_iter {
        let (fx, dfx) = f_and_df(x);
        if best.map_or(true, |(bf, _)| fx.abs() < bf) {
            best = Some((fx.abs(), x));
        }
        if fx == 0.0 {
            return SolveReport { x, iterations: iter, bisection_steps: bisections, converged: true };
        }
        // shrink the bracket around the root (f decreasing)
        if fx > 0.0 {
            a = a.max(x);
        } else {
            b = b.min(x);
        }

        let newton = x - fx / dfx;
        let mut delta = newton - x;
        let too_big = delta.abs() >= 0.5 * deltas[0].abs();
        if dfx == 0.0 || !newton.is_finite() || newton <= a || newton >= b || too_big {
            let mid = 0.5 * (a + b);
            delta = mid - x;
            x = mid;
            bisections += 1;
        } else {
            x = newton;
        }
        deltas = [deltas[1], delta];

        if delta.abs() <= tol * x.abs() || (b - a) <= tol * x.abs() {
            let (fb, _) = f_and_df(x);
            let x = if fb.abs() <= best.map_or(f64::INFINITY, |(bf, _)| bf) {
                x
            } else {
                best.unwrap().1
            };
            return SolveReport {
                x,
                iterations: iter,
                bisection_steps: bisections,
                converged: true,
            };
        }
    }
    SolveReport {
        x: best.map_or(x, |(_, bx)| bx),
        iterations: max_iter,
        bisection_steps: bisections,
        converged: false,
    }
}

/// Inverse survival function / quantile of D_n^+.
///
/// Returns the report even on convergence failure inside the `Err` variant;
/// a silent wrong value is never produced.
pub fn smirnovi(n: u64, p: ProbabilityPair, mode: PrecisionMode) -> Result<SolveReport> {
    if n == 0 || n >= MAX_N {
        return Err(KsError::InvalidArgument(format!("n = {n} out of range [1, 2^52)")));
    }
    let done = |x: f64| SolveReport { x, iterations: 0, bisection_steps: 0, converged: true };

    // Step 1: endpoints.
    if p.sf == 0.0 {
        return Ok(done(1.0));
    }
    if p.cdf == 0.0 {
        return Ok(done(0.0));
    }
    // Step 2: S_1 is linear.
    if n == 1 {
        return Ok(done(p.cdf));
    }
    let nf = n as f64;
    // Step 3: for p_sf <= n^-n the root sits in [1 - 1/n, 1) where
    // S_n(x) = (1-x)^n exactly.
    let tiny = nf.powf(-nf); // may round to a denormal or 0 for large n; comparison still correct
    if p.sf <= tiny {
        return Ok(done(1.0 - p.sf.powf(1.0 / nf)));
    }

    // Steps 4-5: bracket and seed.
    let bracket = bracket_and_seed(n, p);

    // Step 6: the objective uses whichever tail is small.
    let use_sf = p.sf <= 0.5;
    let f_and_df = |x: f64| {
        let t = smirnov(n, x, mode).expect("interior x");
        let fx = if use_sf { t.sf - p.sf } else { p.cdf - t.cdf };
        (fx, -t.pdf)
    };

    // Step 7: bracketed Newton-Raphson with the true derivative.
    let report = bracketed_newton(f_and_df, bracket, NEWTON_TOL, MAX_ITERATIONS);
    if report.converged {
        Ok(report)
    } else {
        Err(KsError::Convergence(report))
    }
}
