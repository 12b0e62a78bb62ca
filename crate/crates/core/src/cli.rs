//! Command implementations behind the `ksone` binary: point evaluation,
//! quantile solving, grid sweeps, oracle dumps, and oracle-diff statistics.

use crate::arith::Dd;
use crate::dist::{smirnov, PrecisionMode};
use crate::error::{KsError, Result};
use crate::invert::{smirnovi, ProbabilityPair, SolveReport};
use crate::oracle::{bf_to_dd, decimal_to_f64, Bf, Oracle, OracleCache};
use std::path::Path;

/// Exit codes of the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ARG: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = KsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "text" => Ok(OutputFormat::Text),
            _ => Err(KsError::InvalidArgument(format!("unknown format '{s}'"))),
        }
    }
}

/// An x (or p) grid `start:step:stop` over a list of n values. Grid points
/// are generated as the exact decimal `start + i*step` rounded once to
/// binary64, matching how published tables realize such grids.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub n_list: Vec<u64>,
    pub start: String,
    pub step: String,
    pub stop: String,
    pub mode: PrecisionMode,
}

impl GridSpec {
    pub fn parse_range(range: &str) -> Result<(String, String, String)> {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(KsError::InvalidArgument(format!(
                "grid '{range}' is not start:step:stop"
            )));
        }
        Ok((parts[0].into(), parts[1].into(), parts[2].into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(KsError::InvalidArgument("empty n list".into()));
        }
        if self.n_list.iter().any(|&n| n == 0) {
            return Err(KsError::InvalidArgument("n must be >= 1".into()));
        }
        let (start, step, stop) = self.values()?;
        if !(step > 0.0) {
            return Err(KsError::InvalidArgument("grid step must be positive".into()));
        }
        if start > stop {
            return Err(KsError::InvalidArgument("grid start exceeds stop".into()));
        }
        Ok(())
    }

    fn values(&self) -> Result<(f64, f64, f64)> {
        Ok((
            decimal_to_f64(&self.start)?,
            decimal_to_f64(&self.step)?,
            decimal_to_f64(&self.stop)?,
        ))
    }

    /// The grid points: exact decimal start + i*step, one rounding each.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (start, step, stop) = self.values()?;
        let count = ((stop - start) / step).round() as i64;
        let mut pts = Vec::with_capacity(count.max(0) as usize + 1);
        let p = 200;
        let start_b = Bf::parse_dec(&self.start, p)?;
        let step_b = Bf::parse_dec(&self.step, p)?;
        let rm = astro_float::RoundingMode::ToEven;
        for i in 0.. {
            let xb = start_b.add(&step_b.mul(&Bf::from_u64(i, p), p, rm), p, rm);
            let x = crate::oracle::bf_to_f64(&xb);
            if x > stop * (1.0 + 1e-12) + 1e-300 {
                break;
            }
            pts.push(x);
            if i > 100_000_000 {
                return Err(KsError::InvalidArgument("grid too large".into()));
            }
        }
        Ok(pts)
    }

    /// Cartesian product n x grid.
    pub fn cells(&self) -> Result<Vec<(u64, f64)>> {
        let pts = self.points()?;
        let mut cells = Vec::with_capacity(self.n_list.len() * pts.len());
        for &n in &self.n_list {
            for &x in &pts {
                cells.push((n, x));
            }
        }
        Ok(cells)
    }
}

/// 17 significant digits: round-trip exact for binary64.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `eval`: one forward evaluation, rendered per the selected format.
pub fn cmd_eval(n: u64, x: f64, mode: PrecisionMode, format: OutputFormat) -> Result<String> {
    let t = smirnov(n, x, mode)?;
    Ok(match format {
        OutputFormat::Json => format!(
            "{{\"n\": {n}, \"x\": {}, \"mode\": \"{}\", \"sf\": {}, \"cdf\": {}, \"pdf\": {}}}",
            fmt17(x),
            mode.name(),
            fmt17(t.sf),
            fmt17(t.cdf),
            fmt17(t.pdf)
        ),
        OutputFormat::Csv => format!(
            "n,x,sf,cdf,pdf\n{n},{},{},{},{}",
            fmt17(x),
            fmt17(t.sf),
            fmt17(t.cdf),
            fmt17(t.pdf)
        ),
        OutputFormat::Text => format!(
            "sf  = {}\ncdf = {}\npdf = {}",
            fmt17(t.sf),
            fmt17(t.cdf),
            fmt17(t.pdf)
        ),
    })
}

/// `invert`: one quantile solve.
pub fn cmd_invert(
    n: u64,
    p: ProbabilityPair,
    mode: PrecisionMode,
    format: OutputFormat,
) -> Result<String> {
    let r = smirnovi(n, p, mode)?;
    Ok(render_solve(n, &r, mode, format))
}

pub fn render_solve(n: u64, r: &SolveReport, mode: PrecisionMode, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => format!(
            "{{\"n\": {n}, \"mode\": \"{}\", \"x\": {}, \"iterations\": {}, \"bisection_steps\": {}, \"converged\": {}}}",
            mode.name(),
            fmt17(r.x),
            r.iterations,
            r.bisection_steps,
            r.converged
        ),
        OutputFormat::Csv => format!(
            "n,x,iterations,bisection_steps,converged\n{n},{},{},{},{}",
            fmt17(r.x),
            r.iterations,
            r.bisection_steps,
            r.converged
        ),
        OutputFormat::Text => format!(
            "x = {}  ({} iterations, {} bisections, converged: {})",
            fmt17(r.x),
            r.iterations,
            r.bisection_steps,
            r.converged
        ),
    }
}

/// `sweep`: evaluate a grid and emit CSV rows (n, x, sf, cdf, pdf).
/// Returns (csv, row count). Deterministic row order.
pub fn cmd_sweep(grid: &GridSpec) -> Result<(String, usize)> {
    use rayon::prelude::*;
    let cells = grid.cells()?;
    let rows: Result<Vec<String>> = cells
        .par_iter()
        .map(|&(n, x)| {
            let t = smirnov(n, x, grid.mode)?;
            Ok(format!("{n},{},{},{},{}", fmt17(x), fmt17(t.sf), fmt17(t.cdf), fmt17(t.pdf)))
        })
        .collect();
    let rows = rows?;
    let mut out = String::from("n,x,sf,cdf,pdf\n");
    for r in &rows {
        out.push_str(r);
        out.push('\n');
    }
    Ok((out, rows.len()))
}

/// Which oracle column a comparison measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareFunction {
    Sf,
    Pdf,
}

impl std::str::FromStr for CompareFunction {
    type Err = KsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sf" => Ok(CompareFunction::Sf),
            "pdf" => Ok(CompareFunction::Pdf),
            _ => Err(KsError::InvalidArgument(format!("unknown function '{s}' (sf or pdf)"))),
        }
    }
}

/// Signed relative-error statistics in units of 2^-52, plus disagreement
/// rates at fixed tolerances.
#[derive(Clone, Debug)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub max_abs: f64,
    /// fraction with |relative error| > tol, for tol = 1e-9 ... 1e-15
    pub disagreement: [(f64, f64); 7],
}

pub const DISAGREEMENT_TOLERANCES: [f64; 7] = [1e-9, 1e-10, 1e-11, 1e-12, 1e-13, 1e-14, 1e-15];

impl ErrorStats {
    /// errors are signed relative errors (plain units, not epsilons).
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(KsError::InvalidArgument(
                "no comparison points survived the filters".into(),
            ));
        }
        let eps = 2f64.powi(-52);
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        let max_abs = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let mut disagreement = [(0.0, 0.0); 7];
        for (slot, &tol) in disagreement.iter_mut().zip(&DISAGREEMENT_TOLERANCES) {
            let frac = errors.iter().filter(|e| e.abs() > tol).count() as f64 / n;
            *slot = (tol, frac);
        }
        Ok(ErrorStats {
            count: errors.len(),
            mean: mean / eps,
            std_dev: var.sqrt() / eps,
            max_abs: max_abs / eps,
            disagreement,
        })
    }

    pub fn render_text(&self, label: &str) -> String {
        let mut s = format!(
            "{label}: count {}  mean {:+.3e} eps  std {:.3e} eps  max {:.3e} eps\n",
            self.count, self.mean, self.std_dev, self.max_abs
        );
        s.push_str("  disagreement:");
        for (tol, frac) in self.disagreement {
            s.push_str(&format!("  {tol:.0e}: {:.2}%", frac * 100.0));
        }
        s
    }
}

/// Floor below which oracle values are excluded from comparisons.
pub const ORACLE_FLOOR: f64 = 1e-275;

/// `compare`: relative-error statistics of a mode against the oracle over a
/// grid. `restrict_sqrt` limits to x <= 3/sqrt(n). The oracle value, rounded
/// to nearest, stands in for the correct result; differences are taken in
/// double-double so sub-epsilon errors resolve.
pub fn cmd_compare(
    grid: &GridSpec,
    cache_path: &Path,
    function: CompareFunction,
    restrict_sqrt: bool,
    bits: usize,
    compute_missing: bool,
) -> Result<ErrorStats> {
    use rayon::prelude::*;
    let cells = grid.cells()?;
    let mut cache = OracleCache::load(cache_path)?;
    let oracle = Oracle::new(bits)?;
    let missing: Vec<(u64, f64)> = cells
        .iter()
        .copied()
        .filter(|&(n, x)| cache.get(n, x, bits).is_none())
        .collect();
    if !missing.is_empty() {
        if !compute_missing {
            return Err(KsError::InvalidArgument(format!(
                "oracle cache misses {} of {} grid points (pass --compute-missing)",
                missing.len(),
                cells.len()
            )));
        }
        cache.ensure(&oracle, &cells);
        cache.save(cache_path)?;
    }

    let errors: Result<Vec<Option<f64>>> = cells
        .par_iter()
        .map(|&(n, x)| {
            if restrict_sqrt && x > 3.0 / (n as f64).sqrt() {
                return Ok(None);
            }
            let rec = cache.get(n, x, bits).expect("ensured above");
            let dec = match function {
                CompareFunction::Sf => &rec.sf,
                CompareFunction::Pdf => &rec.pdf,
            };
            let oracle_dd = bf_to_dd(&Bf::parse_dec(dec, 160)?);
            if !(oracle_dd.hi > ORACLE_FLOOR) {
                return Ok(None);
            }
            let t = smirnov(n, x, grid.mode)?;
            let computed = match function {
                CompareFunction::Sf => t.sf,
                CompareFunction::Pdf => t.pdf,
            };
            // (oracle - computed)/oracle in double-double
            let err = oracle_dd.sub(Dd::from_f64(computed)).div(oracle_dd).to_f64();
            Ok(Some(err))
        })
        .collect();
    let errors: Vec<f64> = errors?.into_iter().flatten().collect();
    ErrorStats::from_errors(&errors)
}

/// Iteration and round-trip statistics for the inverse solver over a p grid,
/// reported per n-band.
#[derive(Clone, Debug)]
pub struct IsfBandStats {
    pub band: (u64, u64),
    pub solves: usize,
    pub mean_iterations: f64,
    pub std_iterations: f64,
    pub max_iterations: u32,
    pub failures: usize,
    /// round-trip |sf(x) - p|/p disagreement rates at 1e-14 and 1e-15
    pub roundtrip_1e14: f64,
    pub roundtrip_1e15: f64,
}

pub const ISF_BANDS: [(u64, u64); 3] = [(2, 10), (20, 100), (200, 10_000)];

/// `isf-stats`: run the solver over p in the grid for every n, and report
/// iteration counts and round-trip disagreement per band.
pub fn cmd_isf_stats(
    n_list: &[u64],
    p_grid: &[f64],
    mode: PrecisionMode,
) -> Result<Vec<IsfBandStats>> {
    use rayon::prelude::*;
    let mut out = Vec::new();
    for &(lo, hi) in &ISF_BANDS {
        let ns: Vec<u64> = n_list.iter().copied().filter(|&n| n >= lo && n <= hi).collect();
        if ns.is_empty() {
            continue;
        }
        let cells: Vec<(u64, f64)> =
            ns.iter().flat_map(|&n| p_grid.iter().map(move |&p| (n, p))).collect();
        let results: Result<Vec<(u32, bool, f64)>> = cells
            .par_iter()
            .map(|&(n, psf)| {
                let pair = ProbabilityPair::from_sf(psf)?;
                match smirnovi(n, pair, mode) {
                    Ok(r) => {
                        let sf = smirnov(n, r.x, mode)?.sf;
                        let rt = if psf > 0.0 { ((sf - psf) / psf).abs() } else { 0.0 };
                        Ok((r.iterations, true, rt))
                    }
                    Err(KsError::Convergence(r)) => Ok((r.iterations, false, f64::INFINITY)),
                    Err(e) => Err(e),
                }
            })
            .collect();
        let results = results?;
        let n_solves = results.len() as f64;
        let mean = results.iter().map(|r| r.0 as f64).sum::<f64>() / n_solves;
        let var = results.iter().map(|r| (r.0 as f64 - mean).powi(2)).sum::<f64>() / n_solves;
        out.push(IsfBandStats {
            band: (lo, hi),
            solves: results.len(),
            mean_iterations: mean,
            std_iterations: var.sqrt(),
            max_iterations: results.iter().map(|r| r.0).max().unwrap_or(0),
            failures: results.iter().filter(|r| !r.1).count(),
            roundtrip_1e14: results.iter().filter(|r| r.2 > 1e-14).count() as f64 / n_solves,
            roundtrip_1e15: results.iter().filter(|r| r.2 > 1e-15).count() as f64 / n_solves,
        });
    }
    Ok(out)
}

pub fn render_isf_stats(stats: &[IsfBandStats]) -> String {
    let mut s = String::from(
        "band          solves  mean_iter  std_iter  max  failures  rt>1e-14  rt>1e-15\n",
    );
    for b in stats {
        s.push_str(&format!(
            "{:>5}..{:<6} {:>6}  {:>9.2}  {:>8.2}  {:>3}  {:>8}  {:>7.2}%  {:>7.2}%\n",
            b.band.0,
            b.band.1,
            b.solves,
            b.mean_iterations,
            b.std_iterations,
            b.max_iterations,
            b.failures,
            b.roundtrip_1e14 * 100.0,
            b.roundtrip_1e15 * 100.0
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_exact_decimals() {
        let g = GridSpec {
            n_list: vec![1],
            start: "0".into(),
            step: "0.001".into(),
            stop: "1".into(),
            mode: PrecisionMode::Hybrid,
        };
        let pts = g.points().unwrap();
        assert_eq!(pts.len(), 1001);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[1000], 1.0);
        // each point is the correctly rounded value of i/1000
        assert_eq!(pts[1], 0.001);
        assert_eq!(pts[123], 0.123);
        assert_eq!(pts[667], 0.667);
    }

    #[test]
    fn grid_validation() {
        let g = GridSpec {
            n_list: vec![],
            start: "0".into(),
            step: "0.5".into(),
            stop: "1".into(),
            mode: PrecisionMode::Hybrid,
        };
        assert!(g.validate().is_err());
        let g = GridSpec {
            n_list: vec![1],
            start: "0".into(),
            step: "0".into(),
            stop: "1".into(),
            mode: PrecisionMode::Hybrid,
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn eval_renders() {
        let s = cmd_eval(1, 0.3, PrecisionMode::Hybrid, OutputFormat::Text).unwrap();
        assert!(s.contains("sf  = 6.9999999999999996e-1"), "{s}"); // fl(0.7) to 17 digits
        let s = cmd_eval(2, 0.75, PrecisionMode::Full, OutputFormat::Json).unwrap();
        assert!(s.contains("\"sf\": 6.2500000000000000e-2"), "{s}");
        let s = cmd_eval(1000, 0.7, PrecisionMode::Fast64, OutputFormat::Text).unwrap();
        assert!(s.contains("sf  = 0.0000000000000000e0"), "{s}");
    }

    #[test]
    fn sweep_small() {
        let g = GridSpec {
            n_list: vec![2],
            start: "0".into(),
            step: "0.25".into(),
            stop: "1".into(),
            mode: PrecisionMode::Hybrid,
        };
        let (csv, count) = cmd_sweep(&g).unwrap();
        assert_eq!(count, 5);
        assert!(csv.starts_with("n,x,sf,cdf,pdf\n"));
        assert!(csv.contains("2,2.5000000000000000e-1,6.8750000000000000e-1"), "{csv}");
    }

    #[test]
    fn error_stats_basics() {
        let eps = 2f64.powi(-52);
        let stats = ErrorStats::from_errors(&[eps, -eps, 2.0 * eps, 0.0]).unwrap();
        assert_eq!(stats.count, 4);
        assert!((stats.max_abs - 2.0).abs() < 1e-12);
        assert!(stats.max_abs >= stats.mean.abs());
        assert!(ErrorStats::from_errors(&[]).is_err());
    }
}
