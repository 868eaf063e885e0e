//! Containment search: map reads against streamed reference batches with no
//! prebuilt index, counting mapped reads and coverage per reference, and
//! emit an accept/reject report.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use dietmap_core::contain::{ContainStat, ContainThresholds, CoverageAccumulator};
use dietmap_core::index::{build_index, FreqCutoff};
use dietmap_core::mapper::{seed_read, select_phase, vote_short, SortBackend};
use dietmap_core::pattern::DietPattern;
use dietmap_core::seq::ReferenceBatch;

use crate::seqio::ReadRecord;

#[derive(Debug, Clone)]
pub struct ContainOptions {
    pub pattern: DietPattern,
    pub k: usize,
    pub w: usize,
    pub d: Option<u64>,
    pub v: u32,
    pub t: usize,
    pub max_pairs: usize,
    pub freq: FreqCutoff,
    pub thresholds: ContainThresholds,
    pub threads: usize,
    pub sort_backend: SortBackend,
}

impl ContainOptions {
    pub fn new(pattern: DietPattern, k: usize, w: usize) -> Self {
        ContainOptions {
            pattern,
            k,
            w,
            d: None,
            v: 3,
            t: 16,
            max_pairs: 50,
            freq: FreqCutoff::TopFraction(2e-4),
            thresholds: ContainThresholds { min_reads: 100, min_cov: 0.1 },
            threads: 1,
            sort_backend: SortBackend::Merge,
        }
    }
}

/// Runs voting-only mapping of all reads against one reference batch and
/// returns this batch's per-reference stats. No rescue: only clusters that
/// pass the vote threshold count as mapped locations.
pub fn contain_batch(
    batch: &ReferenceBatch,
    reads: &[ReadRecord],
    opts: &ContainOptions,
) -> anyhow::Result<Vec<ContainStat>> {
    let mut idx = build_index(batch, &opts.pattern, opts.k, opts.w, false)?;
    idx.apply_frequency_cutoff(opts.freq);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;

    // per read: winning (sequence, interval) pairs
    let per_read: Vec<Vec<(usize, u64, u64)>> = pool.install(|| {
        reads
            .par_iter()
            .map(|read| {
                let d = opts.d.unwrap_or(read.bases.len().max(1) as u64);
                let shift = select_phase(&read.bases, &opts.pattern, &idx, opts.t);
                let hits = seed_read(&read.bases, &opts.pattern, shift, &idx, opts.sort_backend);
                let clusters = vote_short(&hits, d, opts.v, opts.max_pairs);
                clusters
                    .iter()
                    .map(|c| {
                        let (seq_idx, local) = idx.locate(c.ref_span.0);
                        let ref_len = batch.sequences[seq_idx].len() as u64;
                        // span extended to at least the read length
                        let end = (local + (c.ref_span.1 - c.ref_span.0) + 1)
                            .max(local + read.bases.len() as u64)
                            .min(ref_len);
                        (seq_idx, local, end)
                    })
                    .collect()
            })
            .collect()
    });

    let mut reads_per_ref = vec![0u64; batch.sequences.len()];
    let mut coverage: Vec<CoverageAccumulator> =
        (0..batch.sequences.len()).map(|_| CoverageAccumulator::new()).collect();
    for locations in &per_read {
        let mut seen: Vec<usize> = Vec::new();
        for &(seq_idx, start, end) in locations {
            if !seen.contains(&seq_idx) {
                seen.push(seq_idx);
                reads_per_ref[seq_idx] += 1;
            }
            coverage[seq_idx].add(start, end);
        }
    }

    Ok(batch
        .sequences
        .iter()
        .enumerate()
        .map(|(i, seq)| ContainStat {
            ref_name: seq.name.clone(),
            ref_len: seq.len() as u64,
            mapped_reads: reads_per_ref[i],
            covered_bases: coverage[i].union_len(),
        })
        .collect())
}

pub fn write_report(
    out: &mut dyn Write,
    stats: &[ContainStat],
    thresholds: &ContainThresholds,
) -> std::io::Result<()> {
    writeln!(out, "ref_name\tmapped_reads\tcovered_bases\tcoverage\taccepted")?;
    for s in stats {
        writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{}",
            s.ref_name,
            s.mapped_reads,
            s.covered_bases,
            s.coverage(),
            s.accepted(thresholds) as u8
        )?;
    }
    Ok(())
}

/// Writes accepted references of one batch as FASTA (FNA), 80 columns.
pub fn append_accepted_fasta(
    path: &Path,
    batch: &ReferenceBatch,
    stats: &[ContainStat],
    thresholds: &ContainThresholds,
) -> std::io::Result<()> {
    use std::io::BufWriter;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = BufWriter::new(file);
    for (seq, stat) in batch.sequences.iter().zip(stats) {
        if stat.accepted(thresholds) {
            writeln!(out, ">{}", seq.name)?;
            for chunk in seq.bases.chunks(80) {
                out.write_all(chunk)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}
