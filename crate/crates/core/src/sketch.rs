//! Double-strand (w,k)-minimizer extraction over patterned sequences.
//!
//! Two implementations are provided: a scalar streaming one and a batched one
//! that hashes eight k-mers per step and selects window minima with block
//! prefix/suffix minima. The two are required to produce element-for-element
//! identical output; the batched path is the default in the pipeline.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::pattern::{PatCode, PatternedSequence};

pub const MAX_K: usize = 28;

/// 2-bit base code: A=0, C=1, G=2, T=3. `None` signals a sequence break (`N`
/// or any other byte), not an encoding.
#[inline]
pub fn encode_base(b: u8) -> Option<u8> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

/// Complement of a 2-bit code is `3 - code`.
#[inline]
pub fn complement_code(code: u8) -> u8 {
    3 - code
}

/// Invertible integer mix (Thomas Wang's 64-bit hash) masked to `2k` bits.
///
/// The index file format depends on this exact function; see `HASH_FN_ID`
/// in the index module.
#[inline]
pub fn hash_kmer(kmer: u64, k: usize) -> u64 {
    debug_assert!((1..=31).contains(&k));
    let mask = u64::MAX >> (64 - 2 * k as u32);
    let mut key = kmer;
    key = (!key).wrapping_add(key << 21) & mask;
    key ^= key >> 24;
    key = key.wrapping_add(key << 3).wrapping_add(key << 8) & mask;
    key ^= key >> 14;
    key = key.wrapping_add(key << 2).wrapping_add(key << 4) & mask;
    key ^= key >> 28;
    key = key.wrapping_add(key << 31) & mask;
    key
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strand {
    Forward,
    Reverse,
}

impl Strand {
    #[inline]
    pub fn flip(self) -> Strand {
        match self {
            Strand::Forward => Strand::Reverse,
            Strand::Reverse => Strand::Forward,
        }
    }

    #[inline]
    pub fn combine(self, other: Strand) -> Strand {
        if self == other { Strand::Forward } else { Strand::Reverse }
    }
}

/// A selected minimizer seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Minimizer {
    /// Hash of the canonical (smaller of forward/reverse-complement) k-mer.
    pub hash: u64,
    /// Original-sequence coordinate of the k-mer's final kept base.
    pub origin_pos: u64,
    /// End position of the k-mer in patterned coordinates.
    pub pat_end: u32,
    /// Forward if the forward k-mer is the canonical one.
    pub strand: Strand,
}

/// One k-mer candidate: canonical hash, patterned end position, strand.
/// Palindromic k-mers (forward == reverse complement) produce no candidate.
type Candidate = Option<(u64, u32, Strand)>;

#[inline]
fn candidate(fwd: u64, rev: u64, k: usize, pat_end: usize) -> Candidate {
    if fwd == rev {
        return None; // strand-ambiguous
    }
    let (canon, strand) = if fwd < rev { (fwd, Strand::Forward) } else { (rev, Strand::Reverse) };
    Some((hash_kmer(canon, k), pat_end as u32, strand))
}

/// Scalar reference implementation of double-strand (w,k)-minimizer
/// extraction. For every window of `w` consecutive k-mers the minimum-hash
/// candidate is selected (rightmost on ties); consecutive windows selecting
/// the same k-mer emit it once. Runs containing a break restart after it,
/// discarding the window state.
pub fn minimizers(ps: &PatternedSequence, k: usize, w: usize) -> Vec<Minimizer> {
    assert!((1..=MAX_K).contains(&k), "k must be in 1..={MAX_K}");
    assert!(w >= 1);
    let mut out = Vec::new();
    if ps.len() < k {
        return out;
    }
    let mask = u64::MAX >> (64 - 2 * k as u32);
    let shift1 = 2 * (k - 1) as u32;

    let mut fwd = 0u64;
    let mut rev = 0u64;
    let mut run = 0usize; // consecutive non-break codes
    // window of candidates over the last w k-mer slots, min at front
    let mut window: VecDeque<(u64, u32, Strand)> = VecDeque::with_capacity(w + 1);
    let mut last_emit: Option<u32> = None;

    let emit_front = |window: &VecDeque<(u64, u32, Strand)>,
                          last_emit: &mut Option<u32>,
                          out: &mut Vec<Minimizer>| {
        if let Some(&(hash, pat_end, strand)) = window.front() {
            if *last_emit != Some(pat_end) {
                *last_emit = Some(pat_end);
                out.push(Minimizer {
                    hash,
                    origin_pos: ps.origin_of(pat_end as usize),
                    pat_end,
                    strand,
                });
            }
        }
    };

    for (j, code) in ps.iter_codes().enumerate() {
        let c = match code {
            PatCode::Base(c) => c,
            PatCode::Break => {
                // partial final window of the run just ended
                if run >= k && run < k + w - 1 {
                    emit_front(&window, &mut last_emit, &mut out);
                }
                run = 0;
                window.clear();
                continue;
            }
        };
        fwd = ((fwd << 2) | c as u64) & mask;
        rev = (rev >> 2) | ((complement_code(c) as u64) << shift1);
        run += 1;
        if run < k {
            continue;
        }
        // drop candidates whose k-mer end left the window [j-w+1, j]
        while window.front().is_some_and(|&(_, e, _)| (e as usize) + w <= j) {
            window.pop_front();
        }
        if let Some(cand) = candidate(fwd, rev, k, j) {
            while window.back().is_some_and(|&(h, _, _)| h >= cand.0) {
                window.pop_back();
            }
            window.push_back(cand);
        }
        if run >= k + w - 1 {
            emit_front(&window, &mut last_emit, &mut out);
        }
    }
    if run >= k && run < k + w - 1 {
        emit_front(&window, &mut last_emit, &mut out);
    }
    out
}

const LANES: usize = 8;

/// Applies the same invertible mix as [`hash_kmer`] to eight keys at once.
/// Written over fixed arrays so the compiler vectorizes the chain.
#[inline]
fn hash_kmer_x8(keys: &mut [u64; LANES], mask: u64) {
    for key in keys.iter_mut() {
        *key = (!*key).wrapping_add(*key << 21) & mask;
    }
    for key in keys.iter_mut() {
        *key ^= *key >> 24;
    }
    for key in keys.iter_mut() {
        *key = key.wrapping_add(*key << 3).wrapping_add(*key << 8) & mask;
    }
    for key in keys.iter_mut() {
        *key ^= *key >> 14;
    }
    for key in keys.iter_mut() {
        *key = key.wrapping_add(*key << 2).wrapping_add(*key << 4) & mask;
    }
    for key in keys.iter_mut() {
        *key ^= *key >> 28;
    }
    for key in keys.iter_mut() {
        *key = key.wrapping_add(*key << 31) & mask;
    }
}

/// Batched implementation: strictly equivalent to [`minimizers`].
///
/// Candidates are produced per break-free run in blocks of eight (eight new
/// bases extend the rolling k-mers, the eight canonical values are hashed in
/// one vectorizable pass), then window minima are taken with per-block
/// prefix/suffix minima instead of the scalar path's deque.
pub fn minimizers_batched(ps: &PatternedSequence, k: usize, w: usize) -> Vec<Minimizer> {
    assert!((1..=MAX_K).contains(&k), "k must be in 1..={MAX_K}");
    assert!(w >= 1);
    let mut out = Vec::new();
    if ps.len() < k {
        return out;
    }
    let mask = u64::MAX >> (64 - 2 * k as u32);
    let shift1 = 2 * (k - 1) as u32;

    // Candidates of the current run, indexed by k-mer end position.
    let mut cands: Vec<Candidate> = Vec::new();
    let mut run_codes: Vec<u8> = Vec::new();
    let mut run_start = 0usize;
    let mut last_emit: Option<u32> = None;

    let flush = |run_start: usize,
                     run_codes: &mut Vec<u8>,
                     cands: &mut Vec<Candidate>,
                     last_emit: &mut Option<u32>,
                     out: &mut Vec<Minimizer>| {
        if run_codes.len() >= k {
            let mut fwd = 0u64;
            let mut rev = 0u64;
            let mut filled = 0usize;
            let mut block = [0u64; LANES];
            let mut block_rev = [0u64; LANES];
            let mut block_len = 0usize;
            let flush_block =
                |block: &[u64; LANES], block_rev: &[u64; LANES], n: usize, end0: usize, cands: &mut Vec<Candidate>| {
                    let mut canon = [0u64; LANES];
                    for l in 0..LANES {
                        canon[l] = block[l].min(block_rev[l]);
                    }
                    hash_kmer_x8(&mut canon, mask);
                    for l in 0..n {
                        cands.push(if block[l] == block_rev[l] {
                            None
                        } else {
                            let strand = if block[l] < block_rev[l] {
                                Strand::Forward
                            } else {
                                Strand::Reverse
                            };
                            Some((canon[l], (run_start + end0 + l) as u32, strand))
                        });
                    }
                };
            let mut pending_end0 = 0usize;
            for (e, &c) in run_codes.iter().enumerate() {
                fwd = ((fwd << 2) | c as u64) & mask;
                rev = (rev >> 2) | ((complement_code(c) as u64) << shift1);
                filled += 1;
                if filled < k {
                    continue;
                }
                if block_len == 0 {
                    pending_end0 = e;
                }
                block[block_len] = fwd;
                block_rev[block_len] = rev;
                block_len += 1;
                if block_len == LANES {
                    flush_block(&block, &block_rev, LANES, pending_end0, cands);
                    block_len = 0;
                }
            }
            if block_len > 0 {
                flush_block(&block, &block_rev, block_len, pending_end0, cands);
            }
            emit_windows(cands, w, last_emit, out, ps);
        }
        run_codes.clear();
        cands.clear();
    };

    let mut j = 0usize;
    #[allow(clippy::explicit_counter_loop)] // j also counts break positions
    for code in ps.iter_codes() {
        match code {
            PatCode::Base(c) => {
                if run_codes.is_empty() {
                    run_start = j;
                }
                run_codes.push(c);
            }
            PatCode::Break => {
                flush(run_start, &mut run_codes, &mut cands, &mut last_emit, &mut out);
            }
        }
        j += 1;
    }
    flush(run_start, &mut run_codes, &mut cands, &mut last_emit, &mut out);
    out
}

/// Window minima over a run's candidate array using block decomposition:
/// with block size `w`, every window of `w` candidates is the junction of a
/// suffix of one block and a prefix of the next, so the minimum is
/// `better(suffix_min[left], prefix_min[right])`. Ties prefer the rightmost
/// candidate, matching the scalar path.
fn emit_windows(
    cands: &[Candidate],
    w: usize,
    last_emit: &mut Option<u32>,
    out: &mut Vec<Minimizer>,
    ps: &PatternedSequence,
) {
    #[inline]
    fn better(a: Candidate, b: Candidate) -> Candidate {
        // b is the righter candidate: it wins ties
        match (a, b) {
            (Some(x), Some(y)) => {
                if y.0 <= x.0 {
                    Some(y)
                } else {
                    Some(x)
                }
            }
            (Some(x), None) => Some(x),
            (_, y) => y,
        }
    }

    let m = cands.len();
    if m == 0 {
        return;
    }
    let mut emit = |winner: Candidate| {
        if let Some((hash, pat_end, strand)) = winner {
            if *last_emit != Some(pat_end) {
                *last_emit = Some(pat_end);
                out.push(Minimizer {
                    hash,
                    origin_pos: ps.origin_of(pat_end as usize),
                    pat_end,
                    strand,
                });
            }
        }
    };

    if m < w {
        // single partial window covering the whole run
        let mut best: Candidate = None;
        for &c in cands {
            best = better(best, c);
        }
        emit(best);
        return;
    }

    // prefix minima within each w-block, suffix minima within each w-block
    let mut prefix: Vec<Candidate> = Vec::with_capacity(m);
    for (i, &c) in cands.iter().enumerate() {
        if i % w == 0 {
            prefix.push(c);
        } else {
            prefix.push(better(prefix[i - 1], c));
        }
    }
    let mut suffix: Vec<Candidate> = alloc::vec![None; m];
    for i in (0..m).rev() {
        suffix[i] = if (i + 1) % w == 0 || i + 1 == m {
            cands[i]
        } else {
            // candidate at i is to the LEFT of suffix[i+1]
            better(cands[i], suffix[i + 1])
        };
    }
    for t in 0..=m - w {
        let winner = if t % w == 0 {
            prefix[t + w - 1]
        } else {
            better(suffix[t], prefix[t + w - 1])
        };
        emit(winner);
    }
}
