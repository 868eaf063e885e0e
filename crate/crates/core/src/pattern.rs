//! Diet patterns and their application to sequences.
//!
//! A diet pattern is a binary string repeated along a sequence: `1` keeps the
//! base, `0` drops it. Applying a pattern yields a [`PatternedSequence`]: the
//! kept bases packed two bits each, plus the arithmetic needed to map every
//! kept position back to the original sequence coordinate.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::sketch::encode_base;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternError {
    Empty,
    NonBinary(char),
    AllZero,
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::Empty => write!(f, "pattern is empty"),
            PatternError::NonBinary(c) => write!(f, "pattern contains non-binary character {c:?}"),
            PatternError::AllZero => write!(f, "pattern has no 1s (weight must be at least 1)"),
        }
    }
}

impl core::error::Error for PatternError {}

/// A validated binary diet pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DietPattern {
    bits: Vec<bool>,
    /// Indices of the 1-bits, ascending.
    ones: Vec<u32>,
}

impl DietPattern {
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        if text.is_empty() {
            return Err(PatternError::Empty);
        }
        let mut bits = Vec::with_capacity(text.len());
        for c in text.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(PatternError::NonBinary(other)),
            }
        }
        let ones: Vec<u32> = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u32)
            .collect();
        if ones.is_empty() {
            return Err(PatternError::AllZero);
        }
        Ok(DietPattern { bits, ones })
    }

    /// Pattern length `p`.
    pub fn period(&self) -> usize {
        self.bits.len()
    }

    /// Weight `x`: the number of 1s.
    pub fn weight(&self) -> usize {
        self.ones.len()
    }

    /// Reduction ratio `beta = p/x` as an exact rational `(p, x)`.
    pub fn beta(&self) -> (usize, usize) {
        (self.period(), self.weight())
    }

    pub fn beta_f64(&self) -> f64 {
        self.period() as f64 / self.weight() as f64
    }

    #[inline]
    pub fn keeps(&self, phase: usize) -> bool {
        self.bits[phase]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Original-coordinate position of the `j`-th kept base under `shift`.
    ///
    /// Kept positions are exactly `i >= shift` with `bits[(i - shift) % p]`,
    /// so the map is periodic: `shift + (j / x) * p + ones[j % x]`.
    #[inline]
    pub fn origin_of(&self, shift: usize, j: usize) -> u64 {
        let x = self.ones.len();
        shift as u64 + (j / x) as u64 * self.period() as u64 + self.ones[j % x] as u64
    }

    /// Largest original-coordinate span of `count` consecutive kept bases,
    /// maximized over the pattern phase. Used to pad alignment windows so a
    /// seed's full footprint is covered.
    pub fn max_kept_span(&self, count: usize) -> u64 {
        if count == 0 {
            return 0;
        }
        let x = self.ones.len();
        let p = self.period() as u64;
        (0..x)
            .map(|r| {
                let j = r + count - 1;
                let end = (j / x) as u64 * p + self.ones[j % x] as u64;
                end - self.ones[r] as u64 + 1
            })
            .max()
            .unwrap()
    }

    pub fn as_text(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for DietPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_text())
    }
}

/// Code stored for a kept position: a 2-bit base code, or a break where the
/// kept base was `N` (never silently encoded).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatCode {
    Base(u8),
    Break,
}

/// A sequence after diet-pattern application: 2-bit packed kept bases with
/// `N` positions recorded as explicit break markers, plus the closed-form
/// map back to original coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternedSequence {
    /// 2-bit codes, 32 per word; bits at break positions are zero filler.
    packed: Vec<u64>,
    breaks: Vec<u32>,
    included_count: usize,
    shift: usize,
    source_length: usize,
    pattern: DietPattern,
}

impl PatternedSequence {
    pub fn len(&self) -> usize {
        self.included_count
    }

    pub fn is_empty(&self) -> bool {
        self.included_count == 0
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn pattern(&self) -> &DietPattern {
        &self.pattern
    }

    /// Original-sequence position of kept position `j`.
    #[inline]
    pub fn origin_of(&self, j: usize) -> u64 {
        debug_assert!(j < self.included_count);
        self.pattern.origin_of(self.shift, j)
    }

    #[inline]
    fn raw_code(&self, j: usize) -> u8 {
        ((self.packed[j >> 5] >> ((j & 31) * 2)) & 3) as u8
    }

    pub fn code_at(&self, j: usize) -> PatCode {
        if self.breaks.binary_search(&(j as u32)).is_ok() {
            PatCode::Break
        } else {
            PatCode::Base(self.raw_code(j))
        }
    }

    /// Iterates kept positions in order, yielding base codes and breaks.
    pub fn iter_codes(&self) -> impl Iterator<Item = PatCode> + '_ {
        let mut next_break = 0usize;
        (0..self.included_count).map(move |j| {
            if next_break < self.breaks.len() && self.breaks[next_break] as usize == j {
                next_break += 1;
                PatCode::Break
            } else {
                PatCode::Base(self.raw_code(j))
            }
        })
    }

    pub fn breaks(&self) -> &[u32] {
        &self.breaks
    }
}

/// Applies `pat` shifted right by `shift` to `bases`: original position `i`
/// is kept iff `i >= shift` and `bits[(i - shift) % p] == 1`.
///
/// Panics if `shift >= pat.period()` (contract violation).
pub fn apply_pattern(bases: &[u8], pat: &DietPattern, shift: usize) -> PatternedSequence {
    assert!(shift < pat.period(), "shift {} out of range for period {}", shift, pat.period());
    let mut packed: Vec<u64> = Vec::with_capacity(bases.len() / 32 + 1);
    let mut breaks = Vec::new();
    let mut j = 0usize;
    let mut phase = 0usize;
    for &b in &bases[shift.min(bases.len())..] {
        if pat.keeps(phase) {
            let code = match encode_base(b) {
                Some(c) => c,
                None => {
                    breaks.push(j as u32);
                    0
                }
            };
            if j & 31 == 0 {
                packed.push(0);
            }
            packed[j >> 5] |= (code as u64) << ((j & 31) * 2);
            j += 1;
        }
        phase += 1;
        if phase == pat.period() {
            phase = 0;
        }
    }
    PatternedSequence {
        packed,
        breaks,
        included_count: j,
        shift,
        source_length: bases.len(),
        pattern: pat.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn pat(s: &str) -> DietPattern {
        DietPattern::parse(s).unwrap()
    }

    /// Independent oracle: walk the repeating pattern string literally and
    /// collect (symbol, origin) pairs for the kept positions.
    fn subsample_oracle(bases: &[u8], bits: &str, shift: usize) -> Vec<(u8, u64)> {
        let bits: Vec<char> = bits.chars().collect();
        let mut out = Vec::new();
        for (i, &b) in bases.iter().enumerate() {
            if i >= shift && bits[(i - shift) % bits.len()] == '1' {
                out.push((b, i as u64));
            }
        }
        out
    }

    fn collect(ps: &PatternedSequence) -> Vec<(u8, u64)> {
        const DECODE: [u8; 4] = *b"ACGT";
        ps.iter_codes()
            .enumerate()
            .map(|(j, c)| {
                let sym = match c {
                    PatCode::Base(code) => DECODE[code as usize],
                    PatCode::Break => b'N',
                };
                (sym, ps.origin_of(j))
            })
            .collect()
    }

    #[test]
    fn parse_validates() {
        let p = pat("10");
        assert_eq!(p.period(), 2);
        assert_eq!(p.weight(), 1);
        assert_eq!(p.beta(), (2, 1));
        let p = pat("11");
        assert_eq!(p.beta(), (2, 2));
        assert_eq!(p.beta_f64(), 1.0);
        assert_eq!(DietPattern::parse("00"), Err(PatternError::AllZero));
        assert_eq!(DietPattern::parse(""), Err(PatternError::Empty));
        assert_eq!(DietPattern::parse("1a0"), Err(PatternError::NonBinary('a')));
        assert_eq!(format!("{}", pat("101001")), "101001");
    }

    #[test]
    fn apply_alternating_pattern() {
        let ps = apply_pattern(b"ACGTACGT", &pat("10"), 0);
        assert_eq!(collect(&ps), vec![(b'A', 0), (b'G', 2), (b'A', 4), (b'G', 6)]);
        let ps = apply_pattern(b"ACGTACGT", &pat("10"), 1);
        assert_eq!(collect(&ps), vec![(b'C', 1), (b'T', 3), (b'C', 5), (b'T', 7)]);
    }

    #[test]
    fn apply_period_three() {
        // bits[i mod 3] = 1 for i in {0,1}: keeps 0,1,3,4
        let ps = apply_pattern(b"ACGTAC", &pat("110"), 0);
        assert_eq!(collect(&ps), vec![(b'A', 0), (b'C', 1), (b'T', 3), (b'A', 4)]);
    }

    #[test]
    fn all_ones_is_identity() {
        let ps = apply_pattern(b"ACGTN", &pat("1"), 0);
        assert_eq!(
            collect(&ps),
            vec![(b'A', 0), (b'C', 1), (b'G', 2), (b'T', 3), (b'N', 4)]
        );
        assert_eq!(ps.breaks(), &[4]);
    }

    #[test]
    fn halving_count_for_pattern_10() {
        let bases = vec![b'A'; 1000];
        let ps = apply_pattern(&bases, &pat("10"), 0);
        assert_eq!(ps.len(), 500);
    }

    #[test]
    fn shift_equals_zero_shift_of_suffix() {
        let bases = b"ACGTTGCAACGTGGTACG";
        for text in ["10", "110", "101001"] {
            let p = pat(text);
            for s in 0..p.period() {
                let shifted = apply_pattern(bases, &p, s);
                let suffix = apply_pattern(&bases[s..], &p, 0);
                let a = collect(&shifted);
                let b: Vec<(u8, u64)> =
                    collect(&suffix).into_iter().map(|(c, i)| (c, i + s as u64)).collect();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn matches_subsample_oracle() {
        let bases = b"ACGTANGTCCATTGNACGGT";
        for text in ["11", "10", "110", "100", "101001"] {
            let p = pat(text);
            for s in 0..p.period() {
                assert_eq!(
                    collect(&apply_pattern(bases, &p, s)),
                    subsample_oracle(bases, text, s),
                    "pattern {text} shift {s}"
                );
            }
        }
    }

    #[test]
    fn max_kept_span() {
        // '10': k kept bases span 2k-1 original bases
        assert_eq!(pat("10").max_kept_span(4), 7);
        assert_eq!(pat("1").max_kept_span(4), 4);
        // '110' spans depend on start phase: max over phases
        // phase 0: 0,1,3,4 span 5; phase 1: 1,3,4,6 span 6
        assert_eq!(pat("110").max_kept_span(4), 6);
        assert_eq!(pat("10").max_kept_span(0), 0);
    }
}
