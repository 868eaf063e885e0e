//! The per-read mapping pipeline and its parallel, order-preserving runner.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use dietmap_core::align::{
    assign_mapq, banded_align_global_retry, banded_align_local, classify_records,
    exact_match_fast_path, merge_pairs, AlignmentRecord, Cigar, CigarOp, PairAln, RecordClass,
    ScoringScheme, MERGE_MAX_GAP,
};
use dietmap_core::index::{FreqCutoff, SeedIndex};
use dietmap_core::mapper::{
    rescue, seed_read, select_phase, split_segments, vote_long, vote_short, SortBackend,
    VoteCluster,
};
use dietmap_core::pattern::DietPattern;
use dietmap_core::seq::reverse_complement;
use dietmap_core::sketch::Strand;

use crate::samout::{write_record, SamHeader};
use crate::seqio::ReadRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    Short,
    Long,
}

#[derive(Debug, Clone)]
pub struct MapOptions {
    pub pattern: DietPattern,
    pub k: usize,
    pub w: usize,
    pub mode: MapMode,
    /// Voting distance; `None` selects the read length (short) or 500 (long).
    pub d: Option<u64>,
    pub v: u32,
    pub t: usize,
    pub max_pairs: usize,
    pub scoring: ScoringScheme,
    pub sort_backend: SortBackend,
    /// Split reads longer than this before mapping.
    pub split_len: Option<usize>,
    pub freq: FreqCutoff,
    pub threads: usize,
}

impl MapOptions {
    pub fn new(pattern: DietPattern, k: usize, w: usize, mode: MapMode) -> Self {
        MapOptions {
            pattern,
            k,
            w,
            mode,
            d: None,
            v: 3,
            t: 16,
            max_pairs: 50,
            scoring: ScoringScheme::default(),
            sort_backend: SortBackend::Merge,
            split_len: None,
            freq: FreqCutoff::TopFraction(2e-4),
            threads: 1,
        }
    }

    fn vote_distance(&self, seg_len: usize) -> u64 {
        match (self.d, self.mode) {
            (Some(d), _) => d,
            (None, MapMode::Short) => seg_len.max(1) as u64,
            (None, MapMode::Long) => 500,
        }
    }
}

/// Extra window bases around the anchor for short-read alignment.
const SHORT_WINDOW_PAD: u64 = 64;

#[derive(Debug, Clone)]
pub struct SegmentResult {
    pub range: Range<usize>,
    pub records: Vec<AlignmentRecord>,
}

#[derive(Debug, Clone)]
pub struct MappedRead {
    pub segments: Vec<SegmentResult>,
}

fn count_ambiguous(seg: &[u8]) -> u32 {
    seg.iter().filter(|&&b| b == b'N').count() as u32
}

/// Clamped reference window around a cluster, restricted to the sequence
/// containing the cluster's span start. Returns global coordinates.
fn clamp_window(idx: &SeedIndex, anchor_lo: i64, anchor_hi: i64, seq_idx: usize) -> (u64, u64) {
    let (seq_lo, seq_hi) = idx.sequence_range(seq_idx);
    let lo = anchor_lo.max(seq_lo as i64) as u64;
    let hi = (anchor_hi.max(0) as u64).min(seq_hi);
    (lo, hi.max(lo))
}

fn align_short_cluster(
    idx: &SeedIndex,
    cluster: &VoteCluster,
    oriented: &[u8],
    d: u64,
    scoring: &ScoringScheme,
) -> Option<AlignmentRecord> {
    let len = oriented.len();
    let seq_idx = idx.locate(cluster.ref_span.0).0;
    let (seq_lo, _) = idx.sequence_range(seq_idx);
    let pad = SHORT_WINDOW_PAD as i64;
    let (win_lo, win_hi) = clamp_window(
        idx,
        cluster.anchor_diag - pad,
        cluster.anchor_diag + len as i64 + pad,
        seq_idx,
    );
    if win_hi <= win_lo {
        return None;
    }
    let window = idx.window(win_lo, win_hi)?;

    let anchor = cluster.anchor_diag;
    let fit = if anchor >= win_lo as i64 {
        let offset = (anchor - win_lo as i64) as usize;
        exact_match_fast_path(oriented, window, offset, scoring)
    } else {
        None
    };
    let fit = match fit {
        Some(f) => f,
        None => {
            let band = d as usize + SHORT_WINDOW_PAD as usize;
            banded_align_global_retry(oriented, window, scoring, band).ok()?
        }
    };
    let global_pos = win_lo + fit.ref_range.start as u64;
    Some(AlignmentRecord {
        ref_id: seq_idx,
        ref_pos: global_pos - seq_lo,
        strand: cluster.strand,
        cigar: fit.cigar,
        score: fit.score,
        second_best: 0,
        n_diff: fit.n_diff,
        n_ambi: count_ambiguous(oriented),
        read_start: 0,
        read_end: len as u32,
        seg_len: len as u32,
        mapq: 0,
        class: RecordClass::Secondary,
        rescued: cluster.rescued,
        votes: cluster.votes,
    })
}

fn align_long_cluster(
    idx: &SeedIndex,
    cluster: &VoteCluster,
    oriented: &[u8],
    d: u64,
    k: usize,
    pattern: &DietPattern,
    scoring: &ScoringScheme,
) -> Option<PairAln> {
    let len = oriented.len();
    let kspan = pattern.max_kept_span(k);
    let pad = kspan + d;
    let read_lo = cluster.read_span.0.saturating_sub(pad) as usize;
    let read_hi = ((cluster.read_span.1 + 1 + pad) as usize).min(len);
    if read_lo >= read_hi {
        return None;
    }
    let seq_idx = idx.locate(cluster.ref_span.0).0;
    let (seq_lo, _) = idx.sequence_range(seq_idx);
    let (win_lo, win_hi) = clamp_window(
        idx,
        cluster.ref_span.0 as i64 - pad as i64,
        cluster.ref_span.1 as i64 + 1 + pad as i64,
        seq_idx,
    );
    if win_hi <= win_lo {
        return None;
    }
    let window = idx.window(win_lo, win_hi)?;
    let band = (d + kspan) as usize;
    let local = banded_align_local(&oriented[read_lo..read_hi], window, scoring, band);
    if local.cigar.is_empty() {
        return None;
    }
    Some(PairAln {
        ref_id: seq_idx,
        strand: cluster.strand,
        ref_start: win_lo - seq_lo + local.ref_range.start as u64,
        ref_end: win_lo - seq_lo + local.ref_range.end as u64,
        read_start: (read_lo + local.read_range.start) as u32,
        read_end: (read_lo + local.read_range.end) as u32,
        score: local.score,
        cigar: local.cigar,
        n_diff: local.n_diff,
        votes: cluster.votes,
        rescued: cluster.rescued,
    })
}

/// Adjacent local alignments can each extend a few lucky bases past a
/// variation junction, overlapping in read coordinates and blocking the
/// CIGAR merge. Overlaps up to this size are trimmed off the later pair;
/// larger ones are genuinely conflicting placements and stay separate.
const TRIM_CAP: u32 = 100;

/// Removes the first `ov` aligned read bases from a pair, rescoring the
/// removed columns against the actual sequences so CIGAR and score stay
/// consistent. Leading gap runs left at the front are stripped too, so the
/// trimmed alignment still starts with an aligned column.
fn trim_pair_front(p: &mut PairAln, ov: u32, oriented: &[u8], ref_bases: &[u8], scheme: &ScoringScheme) {
    let mut ops: std::collections::VecDeque<(u32, CigarOp)> =
        p.cigar.ops().iter().copied().collect();
    let mut read_pos = p.read_start;
    let mut ref_off = 0u64; // into ref_bases, which starts at p.ref_start
    let mut remaining = ov;
    while let Some(&(len, op)) = ops.front() {
        match op {
            CigarOp::Match => {
                if remaining == 0 {
                    break;
                }
                let take = len.min(remaining);
                for c in 0..take {
                    let a = oriented[(read_pos + c) as usize];
                    let b = ref_bases[(ref_off + c as u64) as usize];
                    p.score -= scheme.column(a, b);
                    if a != b && a != b'N' && b != b'N' {
                        p.n_diff -= 1;
                    }
                }
                read_pos += take;
                ref_off += take as u64;
                remaining -= take;
                if take == len {
                    ops.pop_front();
                } else {
                    ops.front_mut().unwrap().0 = len - take;
                }
            }
            CigarOp::Ins => {
                // an insertion at the trimmed front is stripped whole
                p.score += scheme.gap(len);
                read_pos += len;
                remaining = remaining.saturating_sub(len);
                ops.pop_front();
            }
            CigarOp::Del => {
                // a leading deletion carries no read bases; strip it
                p.score += scheme.gap(len);
                ref_off += len as u64;
                ops.pop_front();
            }
            _ => break,
        }
        if remaining == 0 {
            // keep stripping gap runs so the front is an aligned column
            match ops.front() {
                Some(&(_, CigarOp::Ins)) | Some(&(_, CigarOp::Del)) => continue,
                _ => break,
            }
        }
    }
    let mut cigar = Cigar::new();
    for (len, op) in ops {
        cigar.push(len, op);
    }
    p.cigar = cigar;
    p.read_start = read_pos;
    p.ref_start += ref_off;
}

/// Unclassified candidate records for one read segment against one index.
/// `ref_id_offset` shifts batch-local sequence ids into the global table.
fn segment_candidates(
    idx: &SeedIndex,
    seg: &[u8],
    opts: &MapOptions,
    ref_id_offset: usize,
) -> Vec<AlignmentRecord> {
    let d = opts.vote_distance(seg.len());
    let shift = select_phase(seg, &opts.pattern, idx, opts.t);
    let hits = seed_read(seg, &opts.pattern, shift, idx, opts.sort_backend);
    let mut clusters = match opts.mode {
        MapMode::Short => vote_short(&hits, d, opts.v, opts.max_pairs),
        MapMode::Long => vote_long(&hits, d, opts.v, opts.max_pairs),
    };
    if clusters.is_empty() {
        if let Some(r) = rescue(&hits, &clusters, d) {
            clusters.push(r);
        }
    }
    if clusters.is_empty() {
        return Vec::new();
    }

    let needs_rc = clusters.iter().any(|c| c.strand == Strand::Reverse);
    let rc = needs_rc.then(|| reverse_complement(seg));
    let oriented = |strand: Strand| -> &[u8] {
        match strand {
            Strand::Forward => seg,
            Strand::Reverse => rc.as_deref().expect("reverse complement prepared"),
        }
    };

    let mut records: Vec<AlignmentRecord> = match opts.mode {
        MapMode::Short => clusters
            .iter()
            .filter_map(|c| align_short_cluster(idx, c, oriented(c.strand), d, &opts.scoring))
            .collect(),
        MapMode::Long => {
            let n_ambi = count_ambiguous(seg);
            let mut pairs: Vec<PairAln> = clusters
                .iter()
                .filter_map(|c| {
                    align_long_cluster(
                        idx,
                        c,
                        oriented(c.strand),
                        d,
                        opts.k,
                        &opts.pattern,
                        &opts.scoring,
                    )
                })
                .collect();
            pairs.sort_by_key(|p| (p.strand, p.ref_id, p.read_start, p.ref_start));
            for i in 1..pairs.len() {
                let (prev_strand, prev_ref_id, prev_read_end, prev_ref_end) = {
                    let q = &pairs[i - 1];
                    (q.strand, q.ref_id, q.read_end, q.ref_end)
                };
                let p = &mut pairs[i];
                if p.strand != prev_strand || p.ref_id != prev_ref_id {
                    continue;
                }
                let read_ov = prev_read_end.saturating_sub(p.read_start);
                let ref_ov =
                    prev_ref_end.saturating_sub(p.ref_start).min(u64::from(u32::MAX)) as u32;
                let t = read_ov.max(ref_ov);
                if t == 0 || t > TRIM_CAP || p.read_end - p.read_start <= t {
                    continue;
                }
                let strand = p.strand;
                let (seq_lo, _) = idx.sequence_range(p.ref_id);
                let Some(ref_bases) = idx.window(seq_lo + p.ref_start, seq_lo + p.ref_end)
                else {
                    continue;
                };
                trim_pair_front(p, t, oriented(strand), ref_bases, &opts.scoring);
            }
            merge_pairs(pairs, MERGE_MAX_GAP, &opts.scoring)
                .into_iter()
                .map(|p| {
                    let mut cigar = Cigar::new();
                    cigar.push(p.read_start, CigarOp::SoftClip);
                    cigar.concat(&p.cigar);
                    cigar.push(seg.len() as u32 - p.read_end, CigarOp::SoftClip);
                    AlignmentRecord {
                        ref_id: p.ref_id,
                        ref_pos: p.ref_start,
                        strand: p.strand,
                        cigar,
                        score: p.score,
                        second_best: 0,
                        n_diff: p.n_diff,
                        n_ambi,
                        read_start: p.read_start,
                        read_end: p.read_end,
                        seg_len: seg.len() as u32,
                        mapq: 0,
                        class: RecordClass::Secondary,
                        rescued: p.rescued,
                        votes: p.votes,
                    }
                })
                .collect()
        }
    };

    // distinct mapping locations only
    records.sort_by_key(|r| (r.ref_id, r.ref_pos, r.strand, std::cmp::Reverse(r.score)));
    records.dedup_by_key(|r| (r.ref_id, r.ref_pos, r.strand));
    for r in &mut records {
        r.ref_id += ref_id_offset;
    }
    records
}

fn segment_ranges(len: usize, opts: &MapOptions) -> Vec<Range<usize>> {
    match opts.split_len {
        Some(max) if len > max => split_segments(len, max).collect(),
        _ => std::iter::once(0..len).collect(),
    }
}

/// Maps every read against a stream of indexed batches, accumulating
/// candidates across batches, then classifies and scores each read.
/// Reads are processed in a thread pool; results keep input order.
pub fn map_reads(
    batches: impl Iterator<Item = anyhow::Result<(usize, SeedIndex)>>,
    reads: &[ReadRecord],
    opts: &MapOptions,
) -> anyhow::Result<Vec<MappedRead>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;

    let mut acc: Vec<Vec<(Range<usize>, Vec<AlignmentRecord>)>> = reads
        .iter()
        .map(|r| segment_ranges(r.bases.len(), opts).into_iter().map(|s| (s, Vec::new())).collect())
        .collect();

    for batch in batches {
        let (ref_id_offset, idx) = batch?;
        if !idx.stores_sequence() {
            anyhow::bail!("index was built without the original sequence; mapping needs bases");
        }
        let per_read: Vec<Vec<Vec<AlignmentRecord>>> = pool.install(|| {
            reads
                .par_iter()
                .enumerate()
                .map(|(i, read)| {
                    acc[i]
                        .iter()
                        .map(|(range, _)| {
                            segment_candidates(&idx, &read.bases[range.clone()], opts, ref_id_offset)
                        })
                        .collect()
                })
                .collect()
        });
        for (read_acc, read_new) in acc.iter_mut().zip(per_read) {
            for ((_, records), new) in read_acc.iter_mut().zip(read_new) {
                records.extend(new);
            }
        }
    }

    Ok(acc
        .into_iter()
        .map(|segments| {
            let mut out = Vec::with_capacity(segments.len());
            for (range, mut records) in segments {
                if records.is_empty() {
                    records.push(AlignmentRecord::unmapped(range.len() as u32));
                } else {
                    classify_records(&mut records);
                    assign_mapq(&mut records, &opts.scoring);
                }
                out.push(SegmentResult { range, records });
            }
            demote_extra_primaries(&mut out);
            MappedRead { segments: out }
        })
        .collect())
}

/// A split read must still carry exactly one primary record: the segment
/// with the best primary keeps it, the other segments' primaries become
/// supplementary parts of the split alignment.
fn demote_extra_primaries(segments: &mut [SegmentResult]) {
    let mut best: Option<(usize, i32)> = None;
    for (i, seg) in segments.iter().enumerate() {
        if let Some(p) = seg.records.iter().find(|r| r.class == RecordClass::Primary) {
            if best.is_none_or(|(_, score)| p.score > score) {
                best = Some((i, p.score));
            }
        }
    }
    let Some((keep, _)) = best else {
        return;
    };
    for (i, seg) in segments.iter_mut().enumerate() {
        if i == keep {
            continue;
        }
        for r in &mut seg.records {
            if r.class == RecordClass::Primary {
                r.class = RecordClass::Supplementary;
            }
        }
    }
}

/// Writes the SAM header and every record, in read order.
pub fn write_sam<W: Write>(
    out: &mut W,
    header: &SamHeader,
    reads: &[ReadRecord],
    mapped: &[MappedRead],
) -> std::io::Result<()> {
    header.write(out)?;
    for (read, m) in reads.iter().zip(mapped) {
        for seg in &m.segments {
            let seg_bases = &read.bases[seg.range.clone()];
            let seg_qual = read.qual.as_deref().map(|q| &q[seg.range.clone()]);
            for rec in &seg.records {
                match rec.strand {
                    Strand::Forward => {
                        write_record(out, &read.name, rec, header, seg_bases, seg_qual)?;
                    }
                    Strand::Reverse => {
                        let rc = reverse_complement(seg_bases);
                        let rq: Option<Vec<u8>> =
                            seg_qual.map(|q| q.iter().rev().copied().collect());
                        write_record(out, &read.name, rec, header, &rc, rq.as_deref())?;
                    }
                }
            }
        }
    }
    Ok(())
}
