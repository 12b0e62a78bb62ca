//! Forward and inverse distribution functions for the one-sided
//! Kolmogorov-Smirnov statistic D_n^+.
//!
//! The survival function S_n(x) = P(D_n^+ >= x) is a finite sum whose terms
//! underflow, overflow, and cancel catastrophically when evaluated naively
//! in binary64. This crate evaluates it with scaled powers, selective
//! double-double arithmetic, and compensated summation, in three precision
//! tiers; inverts it with a bracketed Newton iteration seeded from tight
//! closed-form bounds; and ships an arbitrary-precision oracle the test
//! suite and the `compare` tooling measure against.
//!
//! ```
//! use ksone::{smirnov, PrecisionMode};
//! let t = smirnov(2, 0.5, PrecisionMode::Hybrid).unwrap();
//! assert_eq!((t.sf, t.cdf, t.pdf), (0.25, 0.75, 2.0));
//! ```

pub mod arith;
pub mod cli;
pub mod dist;
pub mod error;
pub mod invert;
pub mod oracle;

pub use dist::{smirnov, smirnov_cdf, smirnov_pdf, smirnov_sf, PrecisionMode, SmirnovTriple};
pub use error::{KsError, Result};
pub use invert::{smirnovi, ProbabilityPair, SolveReport};
