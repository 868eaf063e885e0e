//! Base-level alignment of winning sequence pairs: banded affine-gap dynamic
//! programming (global for short reads, local for long reads), an exact-match
//! fast path, CIGAR merging of nearby subsequence pairs, record
//! classification, and mapping quality.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::sketch::Strand;

/// Affine-gap scoring: a gap of length `L` costs `gap_open + L * gap_extend`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringScheme {
    pub match_score: i32,
    pub mismatch: i32,
    pub gap_open: i32,
    pub gap_extend: i32,
}

impl Default for ScoringScheme {
    fn default() -> Self {
        ScoringScheme { match_score: 2, mismatch: 4, gap_open: 4, gap_extend: 2 }
    }
}

impl ScoringScheme {
    /// Column score for an aligned base pair. `N` never rewards a match.
    #[inline]
    pub fn column(&self, a: u8, b: u8) -> i32 {
        if a == b && a != b'N' {
            self.match_score
        } else {
            -self.mismatch
        }
    }

    #[inline]
    pub fn gap(&self, len: u32) -> i32 {
        if len == 0 {
            0
        } else {
            self.gap_open + len as i32 * self.gap_extend
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CigarOp {
    Match,
    Ins,
    Del,
    SoftClip,
    HardClip,
}

impl CigarOp {
    pub fn symbol(self) -> char {
        match self {
            CigarOp::Match => 'M',
            CigarOp::Ins => 'I',
            CigarOp::Del => 'D',
            CigarOp::SoftClip => 'S',
            CigarOp::HardClip => 'H',
        }
    }

    pub fn consumes_read(self) -> bool {
        matches!(self, CigarOp::Match | CigarOp::Ins | CigarOp::SoftClip)
    }

    pub fn consumes_ref(self) -> bool {
        matches!(self, CigarOp::Match | CigarOp::Del)
    }
}

/// Run-length encoded CIGAR; pushes coalesce equal adjacent ops.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cigar(Vec<(u32, CigarOp)>);

impl Cigar {
    pub fn new() -> Self {
        Cigar(Vec::new())
    }

    pub fn push(&mut self, len: u32, op: CigarOp) {
        if len == 0 {
            return;
        }
        if let Some(last) = self.0.last_mut() {
            if last.1 == op {
                last.0 += len;
                return;
            }
        }
        self.0.push((len, op));
    }

    pub fn ops(&self) -> &[(u32, CigarOp)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn read_len(&self) -> u32 {
        self.0.iter().filter(|(_, op)| op.consumes_read()).map(|(n, _)| n).sum()
    }

    pub fn ref_len(&self) -> u32 {
        self.0.iter().filter(|(_, op)| op.consumes_ref()).map(|(n, _)| n).sum()
    }

    /// Total inserted plus deleted bases (for the SAM NM tag).
    pub fn indel_bases(&self) -> u32 {
        self.0
            .iter()
            .filter(|(_, op)| matches!(op, CigarOp::Ins | CigarOp::Del))
            .map(|(n, _)| n)
            .sum()
    }

    pub fn concat(&mut self, other: &Cigar) {
        for &(n, op) in other.ops() {
            self.push(n, op);
        }
    }
}

impl fmt::Display for Cigar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("*");
        }
        for &(n, op) in &self.0 {
            write!(f, "{}{}", n, op.symbol())?;
        }
        Ok(())
    }
}

const NEG: i32 = i32::MIN / 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandTooNarrow {
    /// Smallest band that can connect the corners.
    pub needed: usize,
}

impl fmt::Display for BandTooNarrow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "band too narrow, need at least {}", self.needed)
    }
}

impl core::error::Error for BandTooNarrow {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitAlignment {
    pub score: i32,
    pub cigar: Cigar,
    pub n_diff: u32,
    /// Half-open window range consumed by the alignment.
    pub ref_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalAlignment {
    pub score: i32,
    pub cigar: Cigar,
    pub n_diff: u32,
    pub read_range: Range<usize>,
    pub ref_range: Range<usize>,
}

// predecessor-state codes packed into the traceback byte
const PRED_M: u8 = 0;
const PRED_I: u8 = 1;
const PRED_D: u8 = 2;
const PRED_START: u8 = 3;

#[inline]
fn best3(m: i32, i: i32, d: i32) -> (i32, u8) {
    // prefer M on ties, then I, then D
    if m >= i && m >= d {
        (m, PRED_M)
    } else if i >= d {
        (i, PRED_I)
    } else {
        (d, PRED_D)
    }
}

struct BandedDp {
    band: usize,
    width: usize,
    tb: Vec<u8>, // bits 0-1 M-pred, 2-3 I-pred, 4-5 D-pred
}

impl BandedDp {
    fn new(rows: usize, band: usize) -> Self {
        let width = 2 * band + 1;
        BandedDp { band, width, tb: alloc::vec![0u8; rows * width] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j + self.band - i
    }

    #[inline]
    fn set_tb(&mut self, i: usize, j: usize, m: u8, ins: u8, del: u8) {
        let idx = self.idx(i, j);
        self.tb[i * self.width + idx] = m | (ins << 2) | (del << 4);
    }

    #[inline]
    fn get_tb(&self, i: usize, j: usize) -> (u8, u8, u8) {
        let b = self.tb[i * self.width + self.idx(i, j)];
        (b & 3, (b >> 2) & 3, (b >> 4) & 3)
    }
}

/// Global alignment of the entire read within a reference window, banded to
/// `|j - i| <= band`. The window's leading and trailing bases are free, so
/// the alignment may start and end anywhere in the window; every read base
/// is consumed. Scores are optimal within the band.
pub fn banded_align_global(
    read: &[u8],
    window: &[u8],
    scheme: &ScoringScheme,
    band: usize,
) -> Result<FitAlignment, BandTooNarrow> {
    assert!(band >= 1);
    let n = read.len();
    let m = window.len();
    if n > m + band {
        return Err(BandTooNarrow { needed: n - m });
    }
    if n == 0 {
        return Ok(FitAlignment { score: 0, cigar: Cigar::new(), n_diff: 0, ref_range: 0..0 });
    }
    let open = scheme.gap_open + scheme.gap_extend;
    let ext = scheme.gap_extend;
    let mut dp = BandedDp::new(n + 1, band);
    let w = dp.width;
    let mut prev_m = alloc::vec![NEG; w];
    let mut prev_i = alloc::vec![NEG; w];
    let mut prev_d = alloc::vec![NEG; w];
    let mut cur_m = alloc::vec![NEG; w];
    let mut cur_i = alloc::vec![NEG; w];
    let mut cur_d = alloc::vec![NEG; w];

    for j in 0..=m.min(band) {
        prev_m[dp.idx(0, j)] = 0; // free start anywhere in the window
        dp.set_tb(0, j, PRED_START, PRED_START, PRED_START);
    }

    for i in 1..=n {
        cur_m.iter_mut().for_each(|v| *v = NEG);
        cur_i.iter_mut().for_each(|v| *v = NEG);
        cur_d.iter_mut().for_each(|v| *v = NEG);
        let lo = i.saturating_sub(band);
        let hi = m.min(i + band);
        for j in lo..=hi {
            let idx = j + band - i;
            let (m_val, m_pred) = if j >= 1 {
                // (i-1, j-1) shares the same band column index
                let (best, pred) = best3(prev_m[idx], prev_i[idx], prev_d[idx]);
                (best.saturating_add(scheme.column(read[i - 1], window[j - 1])), pred)
            } else {
                (NEG, PRED_START)
            };
            let (i_val, i_pred) = if idx + 1 < w {
                best3(prev_m[idx + 1] - open, prev_i[idx + 1] - ext, prev_d[idx + 1] - open)
            } else {
                (NEG, PRED_START)
            };
            let (d_val, d_pred) = if idx >= 1 {
                best3(cur_m[idx - 1] - open, cur_i[idx - 1] - open, cur_d[idx - 1] - ext)
            } else {
                (NEG, PRED_START)
            };
            cur_m[idx] = m_val;
            cur_i[idx] = i_val;
            cur_d[idx] = d_val;
            dp.set_tb(i, j, m_pred, i_pred, d_pred);
        }
        core::mem::swap(&mut prev_m, &mut cur_m);
        core::mem::swap(&mut prev_i, &mut cur_i);
        core::mem::swap(&mut prev_d, &mut cur_d);
    }

    // free trailing window bases: best over the last row, M or I state
    let lo = n.saturating_sub(band);
    let hi = m.min(n + band);
    let mut best = NEG;
    let mut best_j = lo;
    let mut best_state = PRED_M;
    for j in lo..=hi {
        let idx = j + band - n;
        if prev_m[idx] > best {
            best = prev_m[idx];
            best_j = j;
            best_state = PRED_M;
        }
        if prev_i[idx] > best {
            best = prev_i[idx];
            best_j = j;
            best_state = PRED_I;
        }
    }

    // traceback
    let mut rev_ops: Vec<CigarOp> = Vec::with_capacity(n + band);
    let mut n_diff = 0u32;
    let (mut i, mut j, mut state) = (n, best_j, best_state);
    while i > 0 {
        let (m_pred, i_pred, d_pred) = dp.get_tb(i, j);
        match state {
            PRED_M => {
                rev_ops.push(CigarOp::Match);
                if read[i - 1] != window[j - 1] && read[i - 1] != b'N' && window[j - 1] != b'N' {
                    n_diff += 1;
                }
                state = m_pred;
                i -= 1;
                j -= 1;
            }
            PRED_I => {
                rev_ops.push(CigarOp::Ins);
                state = i_pred;
                i -= 1;
            }
            _ => {
                rev_ops.push(CigarOp::Del);
                state = d_pred;
                j -= 1;
            }
        }
    }
    let mut cigar = Cigar::new();
    for &op in rev_ops.iter().rev() {
        cigar.push(1, op);
    }
    Ok(FitAlignment { score: best, cigar, n_diff, ref_range: j..best_j })
}

/// Doubles the band once if the first attempt cannot connect the corners.
pub fn banded_align_global_retry(
    read: &[u8],
    window: &[u8],
    scheme: &ScoringScheme,
    band: usize,
) -> Result<FitAlignment, BandTooNarrow> {
    match banded_align_global(read, window, scheme, band) {
        Err(_) => banded_align_global(read, window, scheme, band * 2),
        ok => ok,
    }
}

/// Local (Smith-Waterman style) alignment within the band `|j - i| <= band`.
/// The empty alignment (score 0) is allowed.
pub fn banded_align_local(
    read: &[u8],
    window: &[u8],
    scheme: &ScoringScheme,
    band: usize,
) -> LocalAlignment {
    assert!(band >= 1);
    let n = read.len();
    let m = window.len();
    let open = scheme.gap_open + scheme.gap_extend;
    let ext = scheme.gap_extend;
    let mut dp = BandedDp::new(n + 1, band);
    let w = dp.width;
    let mut prev_m = alloc::vec![NEG; w];
    let mut prev_i = alloc::vec![NEG; w];
    let mut prev_d = alloc::vec![NEG; w];
    let mut cur_m = alloc::vec![NEG; w];
    let mut cur_i = alloc::vec![NEG; w];
    let mut cur_d = alloc::vec![NEG; w];

    let mut best = 0i32;
    let mut best_cell: Option<(usize, usize)> = None;

    for i in 1..=n {
        cur_m.iter_mut().for_each(|v| *v = NEG);
        cur_i.iter_mut().for_each(|v| *v = NEG);
        cur_d.iter_mut().for_each(|v| *v = NEG);
        let lo = i.saturating_sub(band).max(1);
        let hi = m.min(i + band);
        for j in lo..=hi {
            let idx = j + band - i;
            let (pbest, ppred) = best3(prev_m[idx], prev_i[idx], prev_d[idx]);
            let (m_base, m_pred) = if pbest > 0 { (pbest, ppred) } else { (0, PRED_START) };
            let m_val = m_base + scheme.column(read[i - 1], window[j - 1]);
            let (i_val, i_pred) = if idx + 1 < w {
                best3(prev_m[idx + 1] - open, prev_i[idx + 1] - ext, prev_d[idx + 1] - open)
            } else {
                (NEG, PRED_START)
            };
            let (d_val, d_pred) = if idx >= 1 {
                best3(cur_m[idx - 1] - open, cur_i[idx - 1] - open, cur_d[idx - 1] - ext)
            } else {
                (NEG, PRED_START)
            };
            cur_m[idx] = m_val;
            cur_i[idx] = i_val;
            cur_d[idx] = d_val;
            dp.set_tb(i, j, m_pred, i_pred, d_pred);
            if m_val > best {
                best = m_val;
                best_cell = Some((i, j));
            }
        }
        core::mem::swap(&mut prev_m, &mut cur_m);
        core::mem::swap(&mut prev_i, &mut cur_i);
        core::mem::swap(&mut prev_d, &mut cur_d);
    }

    let Some((ie, je)) = best_cell else {
        return LocalAlignment {
            score: 0,
            cigar: Cigar::new(),
            n_diff: 0,
            read_range: 0..0,
            ref_range: 0..0,
        };
    };

    let mut rev_ops: Vec<CigarOp> = Vec::new();
    let mut n_diff = 0u32;
    let (mut i, mut j, mut state) = (ie, je, PRED_M);
    loop {
        let (m_pred, i_pred, d_pred) = dp.get_tb(i, j);
        match state {
            PRED_M => {
                rev_ops.push(CigarOp::Match);
                if read[i - 1] != window[j - 1] && read[i - 1] != b'N' && window[j - 1] != b'N' {
                    n_diff += 1;
                }
                i -= 1;
                j -= 1;
                if m_pred == PRED_START {
                    break;
                }
                state = m_pred;
            }
            PRED_I => {
                rev_ops.push(CigarOp::Ins);
                state = i_pred;
                i -= 1;
            }
            _ => {
                rev_ops.push(CigarOp::Del);
                state = d_pred;
                j -= 1;
            }
        }
    }
    let mut cigar = Cigar::new();
    for &op in rev_ops.iter().rev() {
        cigar.push(1, op);
    }
    LocalAlignment { score: best, cigar, n_diff, read_range: i..ie, ref_range: j..je }
}

/// Exact-match fast path: if the read equals the window bytes at `offset`
/// and contains no ambiguous bases, the alignment is emitted directly
/// without dynamic programming.
pub fn exact_match_fast_path(
    read: &[u8],
    window: &[u8],
    offset: usize,
    scheme: &ScoringScheme,
) -> Option<FitAlignment> {
    if read.is_empty() || offset + read.len() > window.len() {
        return None;
    }
    let w = &window[offset..offset + read.len()];
    if w != read || read.contains(&b'N') {
        return None;
    }
    let mut cigar = Cigar::new();
    cigar.push(read.len() as u32, CigarOp::Match);
    Some(FitAlignment {
        score: read.len() as i32 * scheme.match_score,
        cigar,
        n_diff: 0,
        ref_range: offset..offset + read.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordClass {
    Primary,
    Secondary,
    Supplementary,
    Unmapped,
}

/// One mapped-read result. Positions are 0-based and local to `ref_id`;
/// the SAM writer emits them 1-based. `read_start..read_end` is the aligned
/// read interval in oriented coordinates (reverse-complement coordinates for
/// reverse-strand records).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentRecord {
    pub ref_id: usize,
    pub ref_pos: u64,
    pub strand: Strand,
    pub cigar: Cigar,
    pub score: i32,
    pub second_best: i32,
    pub n_diff: u32,
    pub n_ambi: u32,
    pub read_start: u32,
    pub read_end: u32,
    pub seg_len: u32,
    pub mapq: u8,
    pub class: RecordClass,
    pub rescued: bool,
    pub votes: u32,
}

impl AlignmentRecord {
    pub fn unmapped(seg_len: u32) -> Self {
        AlignmentRecord {
            ref_id: 0,
            ref_pos: 0,
            strand: Strand::Forward,
            cigar: Cigar::new(),
            score: 0,
            second_best: 0,
            n_diff: 0,
            n_ambi: 0,
            read_start: 0,
            read_end: 0,
            seg_len,
            mapq: 0,
            class: RecordClass::Unmapped,
            rescued: false,
            votes: 0,
        }
    }

    pub fn is_mapped(&self) -> bool {
        self.class != RecordClass::Unmapped
    }
}

/// An aligned subsequence pair, before merging and classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAln {
    pub ref_id: usize,
    pub strand: Strand,
    /// Half-open, local to `ref_id`.
    pub ref_start: u64,
    pub ref_end: u64,
    /// Half-open, oriented read coordinates.
    pub read_start: u32,
    pub read_end: u32,
    pub score: i32,
    pub cigar: Cigar,
    pub n_diff: u32,
    pub votes: u32,
    pub rescued: bool,
}

pub const MERGE_MAX_GAP: u64 = 50_000;

/// Concatenates colinear subsequence pairs that sit within `max_gap` bases
/// of each other on the reference and cover disjoint read regions. The
/// intervening gaps enter the CIGAR as a deletion (reference gap) and an
/// insertion (read gap), charged with affine costs.
pub fn merge_pairs(mut pairs: Vec<PairAln>, max_gap: u64, scheme: &ScoringScheme) -> Vec<PairAln> {
    pairs.sort_by_key(|p| (p.strand, p.ref_id, p.ref_start, p.read_start));
    let mut out: Vec<PairAln> = Vec::with_capacity(pairs.len());
    for p in pairs {
        if let Some(last) = out.last_mut() {
            let gap_ok = last.strand == p.strand
                && last.ref_id == p.ref_id
                && p.ref_start >= last.ref_end
                && p.ref_start - last.ref_end <= max_gap
                && p.read_start >= last.read_end;
            if gap_ok {
                let ref_gap = (p.ref_start - last.ref_end) as u32;
                let read_gap = p.read_start - last.read_end;
                last.cigar.push(ref_gap, CigarOp::Del);
                last.cigar.push(read_gap, CigarOp::Ins);
                last.cigar.concat(&p.cigar);
                last.score += p.score - scheme.gap(ref_gap) - scheme.gap(read_gap);
                last.ref_end = p.ref_end;
                last.read_end = p.read_end;
                last.n_diff += p.n_diff;
                last.votes += p.votes;
                last.rescued |= p.rescued;
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// Fraction of the primary's aligned read length at or above which an
/// alternative becomes secondary rather than supplementary.
pub const SECONDARY_LENGTH_FRACTION: f64 = 0.8;

/// Classifies one read's candidate records: the highest score becomes the
/// primary (ties resolve to the earliest position); alternatives overlapping
/// the primary's read interval are secondary, disjoint ones are secondary
/// when their aligned length reaches 80% of the primary's and supplementary
/// otherwise.
pub fn classify_records(records: &mut [AlignmentRecord]) {
    if records.is_empty() {
        return;
    }
    let mut primary = 0usize;
    for i in 1..records.len() {
        let r = &records[i];
        let p = &records[primary];
        if r.score > p.score
            || (r.score == p.score && (r.ref_id, r.ref_pos) < (p.ref_id, p.ref_pos))
        {
            primary = i;
        }
    }
    let p_start = records[primary].read_start;
    let p_end = records[primary].read_end;
    let p_len = (p_end - p_start) as f64;
    for (i, r) in records.iter_mut().enumerate() {
        if i == primary {
            r.class = RecordClass::Primary;
            continue;
        }
        let overlaps = r.read_start < p_end && p_start < r.read_end;
        let len = (r.read_end - r.read_start) as f64;
        r.class = if overlaps || len >= SECONDARY_LENGTH_FRACTION * p_len {
            RecordClass::Secondary
        } else {
            RecordClass::Supplementary
        };
    }
}

/// Assigns mapping quality to one read's classified records.
///
/// With no alternative at all the primary gets 60. When the best alternative
/// ties the primary's score, the count of equal-score locations selects the
/// fixed value (2 locations -> 5, 3 -> 4, 4 -> 3, 5-6 -> 2, 7-9 -> 1,
/// 10+ -> 0). Otherwise the quality-difference formula applies, floored and
/// clamped to [6, 59]. Secondary and unmapped records get 0; supplementary
/// records inherit the primary's value.
pub fn assign_mapq(records: &mut [AlignmentRecord], scheme: &ScoringScheme) {
    let Some(primary) = records.iter().position(|r| r.class == RecordClass::Primary) else {
        for r in records.iter_mut() {
            r.mapq = 0;
        }
        return;
    };
    let dp_max = records[primary].score;
    let dp_max2 = records
        .iter()
        .enumerate()
        .filter(|(i, r)| *i != primary && r.is_mapped())
        .map(|(_, r)| r.score)
        .max();

    let mapq = match dp_max2 {
        None => 60,
        Some(second) if second == dp_max => {
            let same = records.iter().filter(|r| r.is_mapped() && r.score == dp_max).count();
            match same {
                0 | 1 => 60, // unreachable: the primary itself counts
                2 => 5,
                3 => 4,
                4 => 3,
                5 | 6 => 2,
                7..=9 => 1,
                _ => 0,
            }
        }
        Some(second) => {
            let r = &records[primary];
            if r.seg_len == r.n_ambi {
                0
            } else {
                let len = r.seg_len as f64;
                let n_ambi = r.n_ambi as f64;
                let identity = (len - (n_ambi + r.n_diff as f64)) / (len - n_ambi);
                let denom = len * scheme.match_score as f64 - second as f64;
                let raw = 54.0 * identity * (dp_max - second) as f64 / denom + 5.0;
                (raw as i64).clamp(6, 59) as u8
            }
        }
    };

    for r in records.iter_mut() {
        r.second_best = dp_max2.unwrap_or(0);
        r.mapq = match r.class {
            RecordClass::Primary | RecordClass::Supplementary => mapq,
            RecordClass::Secondary | RecordClass::Unmapped => 0,
        };
    }
}

/// Recomputes an alignment score from its CIGAR and the two sequences,
/// for consistency checks against the DP output.
pub fn score_from_cigar(read: &[u8], window: &[u8], cigar: &Cigar, scheme: &ScoringScheme) -> i32 {
    let mut score = 0i32;
    let mut i = 0usize;
    let mut j = 0usize;
    for &(n, op) in cigar.ops() {
        match op {
            CigarOp::Match => {
                for _ in 0..n {
                    score += scheme.column(read[i], window[j]);
                    i += 1;
                    j += 1;
                }
            }
            CigarOp::Ins => {
                score -= scheme.gap(n);
                i += n as usize;
            }
            CigarOp::Del => {
                score -= scheme.gap(n);
                j += n as usize;
            }
            CigarOp::SoftClip => i += n as usize,
            CigarOp::HardClip => {}
        }
    }
    score
}
