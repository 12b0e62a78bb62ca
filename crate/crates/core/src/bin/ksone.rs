//! Command-line front end for the one-sided Kolmogorov-Smirnov
//! distribution: point evaluation, quantile solving, grid sweeps, oracle
//! dumps, and oracle-diff statistics.

use clap::{Args, Parser, Subcommand};
use ksone::cli::{
    self, cmd_compare, cmd_eval, cmd_invert, cmd_isf_stats, cmd_sweep, render_isf_stats,
    CompareFunction, GridSpec,
};
use ksone::oracle::{decimal_to_f64, oracle_dump, Oracle, DEFAULT_BITS};
use ksone::{KsError, PrecisionMode, ProbabilityPair};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ksone", version, about = "One-sided Kolmogorov-Smirnov distribution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Arithmetic tier: fast64, hybrid or full
    #[arg(long, default_value = "hybrid")]
    mode: String,
    /// Output format: json, csv or text
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate sf, cdf and pdf at one point
    Eval {
        #[arg(long)]
        n: u64,
        /// x as a decimal literal, rounded once to binary64
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Solve for the quantile given a tail probability
    Invert {
        #[arg(long)]
        n: u64,
        /// Survival probability (exactly one of --psf/--pcdf)
        #[arg(long)]
        psf: Option<String>,
        /// Cumulative probability (exactly one of --psf/--pcdf)
        #[arg(long)]
        pcdf: Option<String>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate a whole grid and emit CSV
    Sweep {
        /// Comma-separated n values
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        /// x grid as start:step:stop (decimal literals)
        #[arg(long)]
        grid: String,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Relative-error statistics against the arbitrary-precision oracle
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        grid: String,
        /// sf or pdf
        #[arg(long, default_value = "sf")]
        function: String,
        /// Restrict to x <= 3/sqrt(n)
        #[arg(long)]
        restrict_sqrt: bool,
        /// Oracle cache CSV path
        #[arg(long, default_value = "oracle-cache.csv")]
        oracle_cache: PathBuf,
        /// Oracle precision in bits
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: usize,
        /// Compute and append missing oracle records
        #[arg(long)]
        compute_missing: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Inverse-solver iteration and round-trip statistics per n band
    IsfStats {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        /// p_sf grid as start:step:stop; defaults to 0.01:0.01:0.99
        #[arg(long, default_value = "0.01:0.01:0.99")]
        grid: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Write oracle records for a grid to the cache CSV
    OracleDump {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BITS)]
        bits: usize,
    },
}

fn parse_mode(s: &str) -> Result<PrecisionMode, KsError> {
    s.parse()
}

fn run() -> Result<String, KsError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval { n, x, common } => {
            let x = decimal_to_f64(&x)?;
            cmd_eval(n, x, parse_mode(&common.mode)?, common.format.parse()?)
        }
        Command::Invert { n, psf, pcdf, common } => {
            let pair = match (psf, pcdf) {
                (Some(p), None) => ProbabilityPair::from_sf(decimal_to_f64(&p)?)?,
                (None, Some(p)) => ProbabilityPair::from_cdf(decimal_to_f64(&p)?)?,
                _ => {
                    return Err(KsError::InvalidArgument(
                        "exactly one of --psf/--pcdf is required".into(),
                    ))
                }
            };
            cmd_invert(n, pair, parse_mode(&common.mode)?, common.format.parse()?)
        }
        Command::Sweep { n, grid, out, common } => {
            let (start, step, stop) = GridSpec::parse_range(&grid)?;
            let spec =
                GridSpec { n_list: n, start, step, stop, mode: parse_mode(&common.mode)? };
            let (csv, count) = cmd_sweep(&spec)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    Ok(format!("wrote {count} rows to {}", path.display()))
                }
                None => Ok(csv),
            }
        }
        Command::Compare {
            n,
            grid,
            function,
            restrict_sqrt,
            oracle_cache,
            bits,
            compute_missing,
            common,
        } => {
            let (start, step, stop) = GridSpec::parse_range(&grid)?;
            let spec =
                GridSpec { n_list: n, start, step, stop, mode: parse_mode(&common.mode)? };
            let function: CompareFunction = function.parse()?;
            let stats =
                cmd_compare(&spec, &oracle_cache, function, restrict_sqrt, bits, compute_missing)?;
            let label = format!(
                "{} {} {}",
                spec.mode.name(),
                if function == CompareFunction::Sf { "sf" } else { "pdf" },
                if restrict_sqrt { "(x <= 3/sqrt(n))" } else { "(full domain)" }
            );
            Ok(stats.render_text(&label))
        }
        Command::IsfStats { n, grid, common } => {
            let (start, step, stop) = GridSpec::parse_range(&grid)?;
            let spec = GridSpec {
                n_list: n.clone(),
                start,
                step,
                stop,
                mode: parse_mode(&common.mode)?,
            };
            let p_grid = spec.points()?;
            let p_grid: Vec<f64> = p_grid.into_iter().filter(|&p| p > 0.0 && p < 1.0).collect();
            let stats = cmd_isf_stats(&n, &p_grid, spec.mode)?;
            Ok(render_isf_stats(&stats))
        }
        Command::OracleDump { n, grid, out, bits } => {
            let (start, step, stop) = GridSpec::parse_range(&grid)?;
            let spec =
                GridSpec { n_list: n, start, step, stop, mode: PrecisionMode::Hybrid };
            let cells = spec.cells()?;
            let oracle = Oracle::new(bits)?;
            let count = oracle_dump(&oracle, &cells, &out)?;
            Ok(format!("wrote {count} records to {}", out.display()))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(output) => {
            let mut stdout = std::io::stdout();
            let _ = writeln!(stdout, "{output}");
            ExitCode::from(cli::EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                KsError::InvalidArgument(_) | KsError::Domain(_) | KsError::Format(_) => {
                    cli::EXIT_ARG
                }
                KsError::Convergence(_) => cli::EXIT_CONVERGENCE,
                KsError::Io(_) => cli::EXIT_IO,
                KsError::RangeOverflow => cli::EXIT_ARG,
            };
            ExitCode::from(code as u8)
        }
    }
}
