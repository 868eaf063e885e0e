//! Seeding-scheme comparison harness: mutate sequences, extract seeds with
//! four different algorithms, and report per-pair seed matching rates
//! against Levenshtein distance.

use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashSet;
use rand::Rng;

use crate::pattern::{apply_pattern, DietPattern};
use crate::sketch::{encode_base, minimizers};

/// Copies `seq` with a uniformly drawn number (up to `max_subs`) of
/// substitutions at distinct random positions, each to a different base.
/// Returns the copy and the substitution count. Deterministic for a given
/// RNG state.
pub fn mutate<R: Rng>(seq: &[u8], max_subs: usize, rng: &mut R) -> (Vec<u8>, usize) {
    let mut out = seq.to_vec();
    if seq.is_empty() {
        return (out, 0);
    }
    let n = rng.random_range(0..=max_subs.min(seq.len()));
    for pos in rand::seq::index::sample(rng, seq.len(), n) {
        let old = out[pos];
        let choices: Vec<u8> = b"ACGT".iter().copied().filter(|&b| b != old).collect();
        out[pos] = choices[rng.random_range(0..choices.len())];
    }
    (out, n)
}

/// Unit-cost edit distance, two-row dynamic programming.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + (ca != cb) as usize;
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// The four compared seeding algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedAlgo {
    /// Every overlapping k-mer.
    All,
    /// Double-strand (w,k)-minimizers of the plain sequence.
    Minimizers,
    /// Classical spaced seeds: the pattern masks each overlapping k-long
    /// window with the same phase, unlike the whole-sequence sparsification
    /// of the diet scheme where the mask phase varies per window.
    Spaced,
    /// Minimizers of the diet-pattern-sparsified sequence; the mutated side
    /// tries every pattern phase and keeps the best rate.
    Diet,
}

impl fmt::Display for SeedAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedAlgo::All => "all",
            SeedAlgo::Minimizers => "minimizers",
            SeedAlgo::Spaced => "spaced",
            SeedAlgo::Diet => "diet",
        })
    }
}

/// All overlapping forward k-mers, 2-bit packed; runs restart after `N`.
fn all_kmers(seq: &[u8], k: usize) -> Vec<u64> {
    let mask = u64::MAX >> (64 - 2 * k as u32);
    let mut out = Vec::new();
    let mut kmer = 0u64;
    let mut run = 0usize;
    for &b in seq {
        match encode_base(b) {
            Some(c) => {
                kmer = ((kmer << 2) | c as u64) & mask;
                run += 1;
                if run >= k {
                    out.push(kmer);
                }
            }
            None => run = 0,
        }
    }
    out
}

/// Classical spaced seeds: every k-long window masked by the repeating
/// pattern (the same mask at every window), keeping only the bases under
/// the pattern's 1s, 2-bit packed. Windows with `N` at a kept position are
/// skipped.
fn spaced_kmers(seq: &[u8], k: usize, pat: &DietPattern) -> Vec<u64> {
    if seq.len() < k {
        return Vec::new();
    }
    let offsets: Vec<usize> = (0..k).filter(|&j| pat.keeps(j % pat.period())).collect();
    if offsets.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    'windows: for start in 0..=seq.len() - k {
        let mut kmer = 0u64;
        for &off in &offsets {
            match encode_base(seq[start + off]) {
                Some(c) => kmer = (kmer << 2) | c as u64,
                None => continue 'windows,
            }
        }
        out.push(kmer);
    }
    out
}

fn minimizer_hashes(seq: &[u8], k: usize, w: usize, pat: &DietPattern, shift: usize) -> Vec<u64> {
    minimizers(&apply_pattern(seq, pat, shift), k, w).iter().map(|m| m.hash).collect()
}

fn rate_of(query: &[u64], set: &HashSet<u64>) -> Option<f64> {
    if query.is_empty() {
        return None;
    }
    let matched = query.iter().filter(|&s| set.contains(s)).count();
    Some(matched as f64 / query.len() as f64)
}

/// Seed matching rate: the fraction of seeds extracted from `mutated` that
/// appear among the seeds extracted from `original`. `None` when the
/// sequence is shorter than the effective seed span.
pub fn seed_rate(
    original: &[u8],
    mutated: &[u8],
    algo: SeedAlgo,
    k: usize,
    w: usize,
    pat: &DietPattern,
) -> Option<f64> {
    match algo {
        SeedAlgo::All => {
            let set: HashSet<u64> = all_kmers(original, k).into_iter().collect();
            rate_of(&all_kmers(mutated, k), &set)
        }
        SeedAlgo::Minimizers => {
            let ones = DietPattern::parse("1").expect("valid");
            let set: HashSet<u64> = minimizer_hashes(original, k, w, &ones, 0).into_iter().collect();
            rate_of(&minimizer_hashes(mutated, k, w, &ones, 0), &set)
        }
        SeedAlgo::Spaced => {
            let set: HashSet<u64> = spaced_kmers(original, k, pat).into_iter().collect();
            rate_of(&spaced_kmers(mutated, k, pat), &set)
        }
        SeedAlgo::Diet => {
            let set: HashSet<u64> = minimizer_hashes(original, k, w, pat, 0).into_iter().collect();
            (0..pat.period())
                .filter_map(|s| rate_of(&minimizer_hashes(mutated, k, w, pat, s), &set))
                .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
        }
    }
}

/// Per-pair benchmark result: the edit distance and the four matching rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairReport {
    pub edit_distance: usize,
    pub rate_all: Option<f64>,
    pub rate_minimizers: Option<f64>,
    pub rate_spaced: Option<f64>,
    pub rate_diet: Option<f64>,
}

impl PairReport {
    pub fn rate(&self, algo: SeedAlgo) -> Option<f64> {
        match algo {
            SeedAlgo::All => self.rate_all,
            SeedAlgo::Minimizers => self.rate_minimizers,
            SeedAlgo::Spaced => self.rate_spaced,
            SeedAlgo::Diet => self.rate_diet,
        }
    }
}

pub fn report_pair(
    original: &[u8],
    mutated: &[u8],
    k: usize,
    w: usize,
    pat: &DietPattern,
) -> PairReport {
    PairReport {
        edit_distance: levenshtein(original, mutated),
        rate_all: seed_rate(original, mutated, SeedAlgo::All, k, w, pat),
        rate_minimizers: seed_rate(original, mutated, SeedAlgo::Minimizers, k, w, pat),
        rate_spaced: seed_rate(original, mutated, SeedAlgo::Spaced, k, w, pat),
        rate_diet: seed_rate(original, mutated, SeedAlgo::Diet, k, w, pat),
    }
}

/// Number of pairs each algorithm accepts at an edit-distance threshold: the
/// rate threshold is the minimum matching rate among pairs at or below the
/// edit threshold, and a pair is accepted when its rate reaches it. By
/// construction no pair at or below the edit threshold is ever rejected.
pub fn accepted_pairs(reports: &[PairReport], algo: SeedAlgo, edit_threshold: usize) -> usize {
    let rate_threshold = reports
        .iter()
        .filter(|r| r.edit_distance <= edit_threshold)
        .filter_map(|r| r.rate(algo))
        .fold(f64::INFINITY, f64::min);
    if rate_threshold.is_infinite() {
        return 0;
    }
    reports.iter().filter(|r| r.rate(algo).is_some_and(|x| x >= rate_threshold)).count()
}
