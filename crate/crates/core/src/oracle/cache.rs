//! CSV cache of oracle evaluations, keyed by (n, exact x bit pattern, bits).
//!
//! Layout: header `n,x_hex,sf_dec40,cdf_dec40,pdf_dec40,bits`, one record per
//! line, LF endings, UTF-8, decimal fields rounded to 40 significant digits.

use super::bigfloat::{dec_round_sig, f64_from_hex, f64_to_hex, Bf};
use super::Oracle;
use crate::error::{KsError, Result};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const CACHE_HEADER: &str = "n,x_hex,sf_dec40,cdf_dec40,pdf_dec40,bits";
const DEC_DIGITS: usize = 40;

/// One cached oracle evaluation. Decimal strings carry 40 significant
/// digits; x is stored as the exact bit pattern so the oracle and the
/// library evaluate the identical point.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRecord {
    pub n: u64,
    pub x: f64,
    pub sf: String,
    pub cdf: String,
    pub pdf: String,
    pub bits: usize,
}

impl OracleRecord {
    pub fn compute(o: &Oracle, n: u64, x: f64) -> Self {
        let (sf, cdf, pdf) = o.sf_cdf_pdf(n, x);
        OracleRecord {
            n,
            x,
            sf: dec_round_sig(&Bf::format_dec(&sf), DEC_DIGITS),
            cdf: dec_round_sig(&Bf::format_dec(&cdf), DEC_DIGITS),
            pdf: dec_round_sig(&Bf::format_dec(&pdf), DEC_DIGITS),
            bits: o.bits,
        }
    }

    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n,
            f64_to_hex(self.x),
            self.sf,
            self.cdf,
            self.pdf,
            self.bits
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let mut it = line.split(',');
        let mut field = || {
            it.next()
                .ok_or_else(|| KsError::Format(format!("short cache line '{line}'")))
        };
        let n = field()?
            .parse::<u64>()
            .map_err(|e| KsError::Format(format!("bad n: {e}")))?;
        let x = f64_from_hex(field()?)?;
        let sf = field()?.to_string();
        let cdf = field()?.to_string();
        let pdf = field()?.to_string();
        let bits = field()?
            .trim()
            .parse::<usize>()
            .map_err(|e| KsError::Format(format!("bad bits: {e}")))?;
        Ok(OracleRecord { n, x, sf, cdf, pdf, bits })
    }
}

/// In-memory view of the cache file.
#[derive(Default)]
pub struct OracleCache {
    records: HashMap<(u64, u64, usize), OracleRecord>,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cache = Self::new();
        if !path.exists() {
            return Ok(cache);
        }
        let f = std::fs::File::open(path)?;
        let mut lines = BufReader::new(f).lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CACHE_HEADER {
            return Err(KsError::Format(format!("{}: missing cache header", path.display())));
        }
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r = OracleRecord::parse(&line)?;
            cache.records.insert((r.n, r.x.to_bits(), r.bits), r);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut rows: Vec<&OracleRecord> = self.records.values().collect();
        rows.sort_by(|a, b| (a.n, a.x.to_bits(), a.bits).cmp(&(b.n, b.x.to_bits(), b.bits)));
        let mut out = String::with_capacity(rows.len() * 96 + 64);
        out.push_str(CACHE_HEADER);
        out.push('\n');
        for r in rows {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, n: u64, x: f64, bits: usize) -> Option<&OracleRecord> {
        self.records.get(&(n, x.to_bits(), bits))
    }

    pub fn insert(&mut self, r: OracleRecord) {
        self.records.insert((r.n, r.x.to_bits(), r.bits), r);
    }

    /// Ensure every (n, x) point is present, computing the missing ones in
    /// parallel. Returns the number of newly computed records.
    pub fn ensure(&mut self, o: &Oracle, points: &[(u64, f64)]) -> usize {
        use rayon::prelude::*;
        let missing: Vec<(u64, f64)> = points
            .iter()
            .copied()
            .filter(|&(n, x)| self.get(n, x, o.bits).is_none())
            .collect();
        let fresh: Vec<OracleRecord> = missing
            .par_iter()
            .map(|&(n, x)| OracleRecord::compute(o, n, x))
            .collect();
        let count = fresh.len();
        for r in fresh {
            self.insert(r);
        }
        count
    }
}

/// Write oracle records for a whole grid; returns the record count.
pub fn oracle_dump(o: &Oracle, points: &[(u64, f64)], path: &Path) -> Result<usize> {
    let mut cache = OracleCache::load(path).unwrap_or_else(|_| OracleCache::new());
    cache.ensure(o, points);
    cache.save(path)?;
    Ok(points.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_file() {
        let dir = std::env::temp_dir().join(format!("ks-cache-test-{}", std::process::id()));
        let path = dir.join("cache.csv");
        let o = Oracle::new(300).unwrap();
        let mut c = OracleCache::new();
        let pts = [(1u64, 0.0f64), (1, 0.5), (1, 1.0)];
        assert_eq!(c.ensure(&o, &pts), 3);
        assert_eq!(c.ensure(&o, &pts), 0); // idempotent
        c.save(&path).unwrap();
        let c2 = OracleCache::load(&path).unwrap();
        assert_eq!(c2.len(), 3);
        let r = c2.get(1, 0.5, 300).unwrap();
        assert_eq!(r.sf, "5e-1");
        assert_eq!(r.pdf, "1e+0");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn dump_counts() {
        let dir = std::env::temp_dir().join(format!("ks-dump-test-{}", std::process::id()));
        let path = dir.join("dump.csv");
        let o = Oracle::new(300).unwrap();
        let n = oracle_dump(&o, &[(2, 0.25), (2, 0.5), (2, 0.75), (2, 0.0), (2, 1.0)], &path).unwrap();
        assert_eq!(n, 5);
        let c = OracleCache::load(&path).unwrap();
        assert_eq!(c.get(2, 0.25, 300).unwrap().sf, "6.875e-1");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_grid() {
        let dir = std::env::temp_dir().join(format!("ks-empty-test-{}", std::process::id()));
        let path = dir.join("e.csv");
        let o = Oracle::new(300).unwrap();
        assert_eq!(oracle_dump(&o, &[], &path).unwrap(), 0);
        assert!(OracleCache::load(&path).unwrap().is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }
}
