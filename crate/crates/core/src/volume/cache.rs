//! Memoized component volumes, optionally persisted to a flat file.
//!
//! File format (UTF-8, one record per line, sorted by digest):
//!
//! ```text
//! vandconv-coefficient-cache v1
//! <sha256 hex of canonical system> <numerator> <denominator>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use num::bigint::BigInt;
use sha2::{Digest, Sha256};

use super::EquationSystem;
use crate::error::{Error, Result};
use crate::rational::Rational;

pub const CACHE_HEADER: &str = "vandconv-coefficient-cache v1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientCache {
    entries: BTreeMap<String, Rational>,
}

/// Process-wide cache shared by every volume computation.
pub fn global_cache() -> &'static Mutex<CoefficientCache> {
    static CACHE: OnceLock<Mutex<CoefficientCache>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(CoefficientCache::default()))
}

/// Alternately sorts columns and rows until stable, so that systems differing
/// by a variable permutation or row order usually collide. The key is itself
/// a permuted copy of the system, so equal keys always mean equal volumes.
pub(crate) fn canonical_key(system: &EquationSystem) -> String {
    let m = system.var_count;
    let mut rows = system.rows.clone();
    for _ in 0..8 {
        let before = rows.clone();
        let mut cols: Vec<Vec<i64>> = (0..m).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        cols.sort_by(|a, b| b.cmp(a));
        rows = (0..rows.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        rows.sort_by(|a, b| b.cmp(a));
        if rows == before {
            break;
        }
    }
    let mut key = format!("m{m}");
    for row in &rows {
        key.push('|');
        for c in row {
            let _ = write!(key, "{c},");
        }
    }
    key
}

fn digest(key: &str) -> String {
    let hash = Sha256::digest(key.as_bytes());
    hash.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl CoefficientCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn get(&self, system: &EquationSystem) -> Option<Rational> {
        self.get_key(&canonical_key(system))
    }

    pub fn insert(&mut self, system: &EquationSystem, value: Rational) {
        self.insert_key(&canonical_key(system), value)
    }

    pub(crate) fn get_key(&self, key: &str) -> Option<Rational> {
        self.entries.get(&digest(key)).cloned()
    }

    pub(crate) fn insert_key(&mut self, key: &str, value: Rational) {
        self.entries.insert(digest(key), value);
    }

    /// Adds every entry of `other`; existing entries win.
    pub fn merge(&mut self, other: &CoefficientCache) {
        for (k, v) in &other.entries {
            self.entries.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(CACHE_HEADER);
        out.push('\n');
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} {} {}", v.numer(), v.denom());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CACHE_HEADER => {}
            other => return Err(Error::CacheFormat(format!("bad header {other:?}"))),
        }
        let mut entries = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::CacheFormat(format!("line {}: {line:?}", i + 2));
            if parts.len() != 3 || parts[0].len() != 64 {
                return Err(bad());
            }
            let n: BigInt = parts[1].parse().map_err(|_| bad())?;
            let d: BigInt = parts[2].parse().map_err(|_| bad())?;
            if d <= BigInt::from(0) {
                return Err(bad());
            }
            entries.insert(parts[0].to_string(), Rational::new(n, d));
        }
        Ok(CoefficientCache { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text())?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn permuted_systems_share_a_key() {
        let a = EquationSystem::new(4, vec![vec![1, -1, 1, -1], vec![-1, 1, -1, 1]]);
        let b = EquationSystem::new(4, vec![vec![-1, 1, -1, 1], vec![1, -1, 1, -1]]);
        let c = EquationSystem::new(4, vec![vec![1, 1, -1, -1], vec![-1, -1, 1, 1]]);
        assert_eq!(canonical_key(&a), canonical_key(&b));
        assert_eq!(canonical_key(&a), canonical_key(&c));
    }

    #[test]
    fn text_round_trip() {
        let mut cache = CoefficientCache::default();
        cache.insert(&EquationSystem::new(4, vec![vec![1, -1, 1, -1]]), frac(2, 3));
        cache.insert(&EquationSystem::new(6, vec![vec![1, -1, 1, -1, 1, -1]]), frac(11, 20));
        let text = cache.to_text();
        assert!(text.starts_with(CACHE_HEADER));
        assert_eq!(CoefficientCache::from_text(&text).unwrap(), cache);
        assert!(CoefficientCache::from_text("nope\n").is_err());
    }
}
