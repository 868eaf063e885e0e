//! Per-read seed matching: pattern-phase selection by seed-frequency voting,
//! compressed seeding against the index, diagonal location voting, and the
//! rescue location.

use alloc::vec::Vec;
use core::cmp::Reverse;
use core::ops::Range;

use crate::index::{unpack_entry, SeedIndex};
use crate::pattern::{apply_pattern, DietPattern};
use crate::sketch::{minimizers_batched, Strand};

/// Summed index occurrence frequency of one pattern phase's minimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseScore {
    pub shift: usize,
    pub total_freq: u64,
}

/// Scores every pattern shift `s in 0..p` against the index: the first
/// `t` minimizers of the phase-`s` patterned read are looked up and their
/// occurrence counts summed, skipping cutoff-flagged hashes. All phases are
/// scored on the same number of minimizers (the minimum available across
/// phases, capped at `t`).
pub fn score_phases(read: &[u8], pat: &DietPattern, idx: &SeedIndex, t: usize) -> Vec<PhaseScore> {
    assert!(t >= 1);
    let p = pat.period();
    let per_phase: Vec<Vec<u64>> = (0..p)
        .map(|s| {
            let ps = apply_pattern(read, pat, s);
            let mut hashes: Vec<u64> =
                minimizers_batched(&ps, idx.k(), idx.w()).iter().map(|m| m.hash).collect();
            hashes.truncate(t);
            hashes
        })
        .collect();
    let n = per_phase.iter().map(|v| v.len()).min().unwrap_or(0);
    per_phase
        .iter()
        .enumerate()
        .map(|(shift, hashes)| {
            let total_freq = hashes[..n]
                .iter()
                .map(|&h| {
                    let c = idx.occurrences(h);
                    if idx.is_frequent(c) { 0 } else { c as u64 }
                })
                .sum();
            PhaseScore { shift, total_freq }
        })
        .collect()
}

/// The alignment index: the shift with the highest total occurrence
/// frequency, ties broken by the smallest shift.
pub fn select_phase(read: &[u8], pat: &DietPattern, idx: &SeedIndex, t: usize) -> usize {
    let scores = score_phases(read, pat, idx, t);
    let mut best = 0usize;
    for s in &scores {
        if s.total_freq > scores[best].total_freq {
            best = s.shift;
        }
    }
    best
}

/// A seed match with its diagonal-adjusted location.
///
/// `read_loc` is an oriented read coordinate: for forward hits the original
/// read position of the seed's final kept base; for reverse hits the
/// position, in reverse-complement coordinates, mirroring the seed's first
/// kept base. With that convention `diag = ref_loc - read_loc` recovers the
/// mapping start position exactly on both strands for every pattern.
///
/// The derived order is `(strand, diag, hash, ref_loc, read_loc)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdjustedHit {
    pub strand: Strand,
    pub diag: i64,
    pub hash: u64,
    pub ref_loc: u64,
    pub read_loc: u64,
}

/// Sorting backend for combining per-seed location lists. All three produce
/// identical, fully ordered output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortBackend {
    #[default]
    Merge,
    Radix,
    Heap,
}

/// Merges individually sorted runs into one sorted list.
pub fn merge_sorted_hits(runs: Vec<Vec<AdjustedHit>>, backend: SortBackend) -> Vec<AdjustedHit> {
    match backend {
        SortBackend::Merge => kway_merge(runs),
        SortBackend::Heap => heap_sort(runs.into_iter().flatten().collect()),
        SortBackend::Radix => radix_sort(runs.into_iter().flatten().collect()),
    }
}

fn kway_merge(runs: Vec<Vec<AdjustedHit>>) -> Vec<AdjustedHit> {
    let total = runs.iter().map(|r| r.len()).sum();
    let mut out = Vec::with_capacity(total);
    let mut heap: alloc::collections::BinaryHeap<Reverse<(AdjustedHit, usize)>> =
        alloc::collections::BinaryHeap::with_capacity(runs.len());
    let mut cursors: Vec<core::slice::Iter<AdjustedHit>> = runs.iter().map(|r| r.iter()).collect();
    for (i, cur) in cursors.iter_mut().enumerate() {
        if let Some(&h) = cur.next() {
            heap.push(Reverse((h, i)));
        }
    }
    while let Some(Reverse((h, i))) = heap.pop() {
        out.push(h);
        if let Some(&next) = cursors[i].next() {
            heap.push(Reverse((next, i)));
        }
    }
    out
}

fn heap_sort(items: Vec<AdjustedHit>) -> Vec<AdjustedHit> {
    let mut heap: alloc::collections::BinaryHeap<Reverse<AdjustedHit>> =
        items.into_iter().map(Reverse).collect();
    let mut out = Vec::with_capacity(heap.len());
    while let Some(Reverse(h)) = heap.pop() {
        out.push(h);
    }
    out
}

/// LSD radix sort over the hit's ordering key, 16-bit digits per pass,
/// least-significant field first.
fn radix_sort(mut items: Vec<AdjustedHit>) -> Vec<AdjustedHit> {
    #[inline]
    fn biased_diag(h: &AdjustedHit) -> u64 {
        (h.diag as u64) ^ (1 << 63)
    }
    let fields: [fn(&AdjustedHit) -> u64; 4] =
        [|h| h.read_loc, |h| h.ref_loc, |h| h.hash, biased_diag];
    let filler = AdjustedHit { strand: Strand::Forward, diag: 0, hash: 0, ref_loc: 0, read_loc: 0 };
    let mut scratch: Vec<AdjustedHit> = alloc::vec![filler; items.len()];
    let mut counts = alloc::vec![0usize; 1 << 16];
    fn pass(
        key: &dyn Fn(&AdjustedHit) -> u64,
        items: &mut Vec<AdjustedHit>,
        scratch: &mut Vec<AdjustedHit>,
        counts: &mut [usize],
    ) {
        counts.iter_mut().for_each(|c| *c = 0);
        for h in items.iter() {
            counts[(key(h) & 0xFFFF) as usize] += 1;
        }
        let mut sum = 0usize;
        for c in counts.iter_mut() {
            let n = *c;
            *c = sum;
            sum += n;
        }
        for &h in items.iter() {
            let d = (key(&h) & 0xFFFF) as usize;
            scratch[counts[d]] = h;
            counts[d] += 1;
        }
        core::mem::swap(items, scratch);
    }
    for field in fields {
        for digit in 0..4u32 {
            pass(&move |h| field(h) >> (16 * digit), &mut items, &mut scratch, &mut counts);
        }
    }
    pass(&|h| (h.strand == Strand::Reverse) as u64, &mut items, &mut scratch, &mut counts);
    items
}

/// Looks up every minimizer of the phase-`shift` patterned read in the
/// index, producing one diagonal-adjusted hit per `(seed, location)` pair.
/// Repeated `(hash, diag)` pairs are kept once; locations of cutoff-flagged
/// seeds are capped at the cutoff rather than dropped. Output is fully
/// sorted.
pub fn seed_read(
    read: &[u8],
    pat: &DietPattern,
    shift: usize,
    idx: &SeedIndex,
    backend: SortBackend,
) -> Vec<AdjustedHit> {
    let ps = apply_pattern(read, pat, shift);
    let k = idx.k();
    let read_len = read.len() as u64;
    let mut runs: Vec<Vec<AdjustedHit>> = Vec::new();
    for m in minimizers_batched(&ps, k, idx.w()) {
        let slice = idx.lookup(m.hash);
        if slice.is_empty() {
            continue;
        }
        let take = slice.len().min(idx.freq_cutoff() as usize);
        let fwd_read_loc = m.origin_pos;
        let rev_read_loc = read_len - 1 - ps.origin_of(m.pat_end as usize + 1 - k);
        let mut fwd_run = Vec::new();
        let mut rev_run = Vec::new();
        for &entry in &slice[..take] {
            let (ref_loc, ref_strand) = unpack_entry(entry);
            match m.strand.combine(ref_strand) {
                Strand::Forward => fwd_run.push(AdjustedHit {
                    strand: Strand::Forward,
                    diag: ref_loc as i64 - fwd_read_loc as i64,
                    hash: m.hash,
                    ref_loc,
                    read_loc: fwd_read_loc,
                }),
                Strand::Reverse => rev_run.push(AdjustedHit {
                    strand: Strand::Reverse,
                    diag: ref_loc as i64 - rev_read_loc as i64,
                    hash: m.hash,
                    ref_loc,
                    read_loc: rev_read_loc,
                }),
            }
        }
        if !fwd_run.is_empty() {
            runs.push(fwd_run);
        }
        if !rev_run.is_empty() {
            runs.push(rev_run);
        }
    }
    let mut hits = merge_sorted_hits(runs, backend);
    hits.dedup_by_key(|h| (h.strand, h.diag, h.hash));
    hits
}

/// A diagonal-window cluster of adjusted hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoteCluster {
    /// The first member's diagonal; all member diagonals lie in
    /// `[anchor_diag, anchor_diag + D]`.
    pub anchor_diag: i64,
    pub votes: u32,
    /// Inclusive span of member reference locations.
    pub ref_span: (u64, u64),
    /// Inclusive span of member oriented read locations.
    pub read_span: (u64, u64),
    pub strand: Strand,
    pub rescued: bool,
}

fn cluster_from(members: &[AdjustedHit]) -> VoteCluster {
    let mut ref_span = (u64::MAX, 0u64);
    let mut read_span = (u64::MAX, 0u64);
    for h in members {
        ref_span = (ref_span.0.min(h.ref_loc), ref_span.1.max(h.ref_loc));
        read_span = (read_span.0.min(h.read_loc), read_span.1.max(h.read_loc));
    }
    VoteCluster {
        anchor_diag: members[0].diag,
        votes: members.len() as u32,
        ref_span,
        read_span,
        strand: members[0].strand,
        rescued: false,
    }
}

/// Greedy sweep over the sorted hit list: the first hit anchors a window,
/// hits within `d` of the anchor diagonal (same strand) vote for it, and the
/// first hit beyond becomes the next anchor. Returns clusters in anchor
/// order. A cluster straddling an anchor boundary splits; no re-anchoring
/// pass is made.
fn sweep(hits: &[AdjustedHit], d: u64, v: u32) -> Vec<VoteCluster> {
    let mut clusters = Vec::new();
    let mut i = 0usize;
    while i < hits.len() {
        let anchor = hits[i];
        let mut j = i + 1;
        while j < hits.len()
            && hits[j].strand == anchor.strand
            && hits[j].diag - anchor.diag <= d as i64
        {
            j += 1;
        }
        if (j - i) as u32 >= v {
            clusters.push(cluster_from(&hits[i..j]));
        }
        i = j;
    }
    clusters
}

fn rank_and_truncate(mut clusters: Vec<VoteCluster>, max_pairs: usize) -> Vec<VoteCluster> {
    clusters.sort_by_key(|c| (Reverse(c.votes), c.anchor_diag, c.strand));
    clusters.truncate(max_pairs);
    clusters
}

/// Location voting for short reads: each winning cluster designates the full
/// read against a reference window at the anchor diagonal. Output is sorted
/// by votes descending and truncated to `max_pairs`.
pub fn vote_short(hits: &[AdjustedHit], d: u64, v: u32, max_pairs: usize) -> Vec<VoteCluster> {
    rank_and_truncate(sweep(hits, d, v), max_pairs)
}

/// Location voting for long reads: each winning cluster designates a
/// reference subsequence (the member hits' reference span) paired with the
/// corresponding read subsequence (the member hits' read span).
pub fn vote_long(hits: &[AdjustedHit], d: u64, v: u32, max_pairs: usize) -> Vec<VoteCluster> {
    rank_and_truncate(sweep(hits, d, v), max_pairs)
}

/// The rescue location: when no cluster passed the vote threshold, the best
/// sweep window is kept regardless of its vote count (ties resolve to the
/// smallest anchor). `None` when clusters exist or there are no hits at all.
pub fn rescue(hits: &[AdjustedHit], clusters: &[VoteCluster], d: u64) -> Option<VoteCluster> {
    if !clusters.is_empty() || hits.is_empty() {
        return None;
    }
    let swept = sweep(hits, d, 1);
    let mut best: Option<VoteCluster> = None;
    for c in swept {
        if best.is_none_or(|b| c.votes > b.votes) {
            best = Some(c);
        }
    }
    best.map(|mut c| {
        c.rescued = true;
        c
    })
}

/// Splits a read of `len` bases into segments of at most `max_len`.
pub fn split_segments(len: usize, max_len: usize) -> impl Iterator<Item = Range<usize>> {
    assert!(max_len >= 1);
    (0..len.max(1)).step_by(max_len).map(move |start| start..(start + max_len).min(len))
}
