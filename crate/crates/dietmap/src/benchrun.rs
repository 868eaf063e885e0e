//! Seeding-comparison harness runner: simulates mutated sequence pairs,
//! scores the four seeding algorithms, and writes a TSV of per-pair rates
//! plus an accepted-pair summary.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dietmap_core::pattern::DietPattern;
use dietmap_core::seedbench::{accepted_pairs, mutate, report_pair, PairReport, SeedAlgo};

#[derive(Debug, Clone)]
pub struct BenchCombo {
    pub k: usize,
    pub w: usize,
    pub pattern: String,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub combos: Vec<BenchCombo>,
    pub pairs: usize,
    pub len: usize,
    pub max_subs: usize,
    pub seed: u64,
    pub edit_thresholds: Vec<usize>,
    pub threads: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            combos: default_combos(),
            pairs: 1000,
            len: 1000,
            max_subs: 500,
            seed: 42,
            edit_thresholds: vec![20, 138, 295],
            threads: 1,
        }
    }
}

/// The default comparison grid: seed length 8 with four sparsity ratios,
/// and the longer seed lengths paired with '10' plus a spaced-seeding
/// pattern from the literature.
pub fn default_combos() -> Vec<BenchCombo> {
    let mut combos = Vec::new();
    for p in ["110", "10", "101001", "100"] {
        combos.push(BenchCombo { k: 8, w: 6, pattern: p.to_string() });
    }
    for (k, w, lit) in [
        (13, 9, "1110110110111"),
        (18, 12, "111001011001010111"),
        (21, 11, "111101101101011101111"),
    ] {
        combos.push(BenchCombo { k, w, pattern: "10".to_string() });
        combos.push(BenchCombo { k, w, pattern: lit.to_string() });
    }
    combos
}

fn simulate_pair(len: usize, max_subs: usize, seed: u64, pair_idx: u64) -> (Vec<u8>, Vec<u8>) {
    // one stream per pair so results are independent of thread scheduling
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(pair_idx.wrapping_mul(0x9E3779B97F4A7C15)));
    let original: Vec<u8> = (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect();
    let (mutated, _) = mutate(&original, max_subs, &mut rng);
    (original, mutated)
}

pub struct BenchOutcome {
    pub combo: BenchCombo,
    pub reports: Vec<PairReport>,
}

pub fn run_benchmark(opts: &BenchOptions, out: &mut dyn Write) -> anyhow::Result<Vec<BenchOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;

    let patterns: anyhow::Result<Vec<DietPattern>> = opts
        .combos
        .iter()
        .map(|c| DietPattern::parse(&c.pattern).map_err(|e| anyhow::anyhow!("pattern {:?}: {e}", c.pattern)))
        .collect();
    let patterns = patterns?;

    // per pair: simulate once, score every combo
    let rows: Vec<Vec<PairReport>> = pool.install(|| {
        (0..opts.pairs as u64)
            .into_par_iter()
            .map(|i| {
                let (original, mutated) = simulate_pair(opts.len, opts.max_subs, opts.seed, i);
                opts.combos
                    .iter()
                    .zip(&patterns)
                    .map(|(c, p)| report_pair(&original, &mutated, c.k, c.w, p))
                    .collect()
            })
            .collect()
    });

    writeln!(out, "k\tw\tpattern\tedit_distance\trate_all\trate_minimizers\trate_spaced\trate_god")?;
    let fmt = |r: Option<f64>| r.map_or("NA".to_string(), |x| format!("{x:.6}"));
    for row in &rows {
        for (combo, report) in opts.combos.iter().zip(row) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                combo.k,
                combo.w,
                combo.pattern,
                report.edit_distance,
                fmt(report.rate_all),
                fmt(report.rate_minimizers),
                fmt(report.rate_spaced),
                fmt(report.rate_diet),
            )?;
        }
    }

    let outcomes: Vec<BenchOutcome> = opts
        .combos
        .iter()
        .enumerate()
        .map(|(ci, combo)| BenchOutcome {
            combo: combo.clone(),
            reports: rows.iter().map(|row| row[ci]).collect(),
        })
        .collect();

    writeln!(out, "# accepted pairs per algorithm (threshold rule: minimum rate among pairs")?;
    writeln!(out, "# with edit distance <= threshold accepts a pair)")?;
    writeln!(out, "# k\tw\tpattern\tedit_threshold\tall\tminimizers\tspaced\tgod\ttotal")?;
    for o in &outcomes {
        for &thr in &opts.edit_thresholds {
            let counts: Vec<usize> =
                [SeedAlgo::All, SeedAlgo::Minimizers, SeedAlgo::Spaced, SeedAlgo::Diet]
                    .iter()
                    .map(|&a| accepted_pairs(&o.reports, a, thr))
                    .collect();
            writeln!(
                out,
                "# {}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                o.combo.k,
                o.combo.w,
                o.combo.pattern,
                thr,
                counts[0],
                counts[1],
                counts[2],
                counts[3],
                o.reports.len()
            )?;
        }
    }
    Ok(outcomes)
}
