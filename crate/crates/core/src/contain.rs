//! Containment-search statistics: per-reference mapped-read counts, covered
//! bases from winning-cluster spans, and the accept rule.

use alloc::string::String;
use alloc::vec::Vec;

/// Accept a reference when it reaches both thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainThresholds {
    pub min_reads: u64,
    pub min_cov: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainStat {
    pub ref_name: String,
    pub ref_len: u64,
    /// Reads with at least one winning voted location on this reference.
    pub mapped_reads: u64,
    /// Union length of winning-cluster reference spans, each extended to at
    /// least the read length.
    pub covered_bases: u64,
}

impl ContainStat {
    pub fn coverage(&self) -> f64 {
        if self.ref_len == 0 {
            0.0
        } else {
            self.covered_bases as f64 / self.ref_len as f64
        }
    }

    pub fn accepted(&self, t: &ContainThresholds) -> bool {
        self.mapped_reads >= t.min_reads && self.coverage() >= t.min_cov
    }
}

/// Collects half-open intervals per reference and reduces them to the union
/// length.
#[derive(Debug, Clone, Default)]
pub struct CoverageAccumulator {
    intervals: Vec<(u64, u64)>,
}

impl CoverageAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, start: u64, end: u64) {
        if end > start {
            self.intervals.push((start, end));
        }
    }

    pub fn merge(&mut self, other: CoverageAccumulator) {
        self.intervals.extend(other.intervals);
    }

    /// Union length of all collected intervals.
    pub fn union_len(&mut self) -> u64 {
        self.intervals.sort_unstable();
        let mut total = 0u64;
        let mut cur: Option<(u64, u64)> = None;
        for &(s, e) in &self.intervals {
            match cur {
                Some((cs, ce)) if s <= ce => cur = Some((cs, ce.max(e))),
                Some((cs, ce)) => {
                    total += ce - cs;
                    cur = Some((s, e));
                    let _ = cs;
                }
                None => cur = Some((s, e)),
            }
        }
        if let Some((cs, ce)) = cur {
            total += ce - cs;
        }
        total
    }
}
