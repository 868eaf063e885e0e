use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dietmap::benchrun::{self, BenchCombo, BenchOptions};
use dietmap::containrun::{self, ContainOptions};
use dietmap::indexfile;
use dietmap::pipeline::{map_reads, write_sam, MapMode, MapOptions};
use dietmap::samout::SamHeader;
use dietmap::seqio::{batch_references, open_reader, read_reads, FastaReader, ReadRecord};
use dietmap::{parse_base_count, core};

use core::contain::ContainThresholds;
use core::index::{build_index, FreqCutoff, SeedIndex};
use core::mapper::SortBackend;
use core::pattern::DietPattern;
use core::seq::{NucSequence, ReferenceBatch};
use core::ScoringScheme;

/// Marker for configuration mistakes that should exit with code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "dietmap",
    version,
    about = "Sparsified read mapping and containment search with diet patterns",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a binary seed index from a reference FASTA
    Index(IndexArgs),
    /// Map short reads: global alignment at each winning voted location
    MapShort(MapArgs),
    /// Map long reads: local alignment of subsequence pairs with CIGAR merging
    MapLong(MapArgs),
    /// Containment search: accept references by mapped reads and coverage
    Contain(ContainArgs),
    /// Compare four seeding algorithms on mutated sequence pairs
    Seedbench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Short reads (k=21, w=11)
    Sr,
    /// Accurate long reads (k=19, w=19)
    MapHifi,
    /// Noisy long reads (k=15, w=12), reads split at 30 kb
    MapOnt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SortChoice {
    Merge,
    Radix,
    Heap,
}

impl From<SortChoice> for SortBackend {
    fn from(c: SortChoice) -> SortBackend {
        match c {
            SortChoice::Merge => SortBackend::Merge,
            SortChoice::Radix => SortBackend::Radix,
            SortChoice::Heap => SortBackend::Heap,
        }
    }
}

#[derive(Args)]
struct IndexArgs {
    /// Reference FASTA (optionally gzip-compressed)
    reference: PathBuf,
    /// Output index file
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    /// Diet pattern: '1' keeps a base, '0' drops it
    #[arg(short = 'p', long = "pattern", default_value = "10")]
    pattern: String,
    #[arg(short = 'k', default_value_t = 21)]
    k: usize,
    #[arg(short = 'w', default_value_t = 11)]
    w: usize,
    /// Do not store the original sequence (disables base-level alignment)
    #[arg(long = "idx-no-seq")]
    idx_no_seq: bool,
    /// Batch limit in bases (K/M/G suffixes allowed); the index holds one batch
    #[arg(short = 'I', long = "batch-limit", default_value = "8G")]
    batch_limit: String,
}

#[derive(Args)]
struct MapArgs {
    /// Reference FASTA or prebuilt index file
    reference: PathBuf,
    /// Read files, FASTQ or FASTA (optionally gzip-compressed)
    #[arg(required = true)]
    reads: Vec<PathBuf>,
    /// Parameter preset
    #[arg(short = 'x', long = "preset")]
    preset: Option<Preset>,
    /// Diet pattern; preset/default is '10'
    #[arg(short = 'p', long = "pattern")]
    pattern: Option<String>,
    #[arg(short = 'k')]
    k: Option<usize>,
    #[arg(short = 'w')]
    w: Option<usize>,
    /// Voting distance; default is the read length (short) or 500 (long)
    #[arg(short = 'D', long = "vote-distance")]
    d: Option<u64>,
    /// Vote threshold
    #[arg(short = 'V', long = "vote-threshold", default_value_t = 3)]
    v: u32,
    /// Minimizer cap per pattern phase during phase selection
    #[arg(short = 't', long = "phase-cap", default_value_t = 16)]
    t: usize,
    /// Keep at most this many winning locations per read
    #[arg(short = 'N', long = "max-pairs", default_value_t = 50)]
    max_pairs: usize,
    /// Flag the top fraction of most frequent seeds (0 disables)
    #[arg(long = "freq-fraction", default_value_t = 2e-4)]
    freq_fraction: f64,
    /// Flag seeds occurring at least this often (overrides --freq-fraction;
    /// 0 disables)
    #[arg(long = "freq-threshold")]
    freq_threshold: Option<u32>,
    /// Match score
    #[arg(short = 'A', long = "match-score", default_value_t = 2)]
    match_score: i32,
    /// Mismatch penalty
    #[arg(short = 'B', long = "mismatch", default_value_t = 4)]
    mismatch: i32,
    /// Gap open penalty
    #[arg(short = 'O', long = "gap-open", default_value_t = 4)]
    gap_open: i32,
    /// Gap extension penalty
    #[arg(short = 'E', long = "gap-extend", default_value_t = 2)]
    gap_extend: i32,
    /// Reference batch limit in bases (K/M/G suffixes allowed)
    #[arg(short = 'I', long = "batch-limit", default_value = "8G")]
    batch_limit: String,
    /// Split reads longer than this many bases before mapping
    #[arg(long = "split-len")]
    split_len: Option<usize>,
    /// Location sorting backend
    #[arg(long = "sort", value_enum, default_value_t = SortChoice::Merge)]
    sort: SortChoice,
    #[arg(long = "threads", default_value_t = default_threads())]
    threads: usize,
    /// Output SAM path (stdout when omitted)
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ContainArgs {
    /// Reference FASTA (optionally gzip-compressed)
    reference: PathBuf,
    /// Read file, FASTQ or FASTA
    reads: PathBuf,
    #[arg(short = 'p', long = "pattern", default_value = "10")]
    pattern: String,
    #[arg(short = 'k', default_value_t = 19)]
    k: usize,
    #[arg(short = 'w', default_value_t = 16)]
    w: usize,
    /// Voting distance; default is the read length
    #[arg(short = 'D', long = "vote-distance")]
    d: Option<u64>,
    #[arg(short = 'V', long = "vote-threshold", default_value_t = 3)]
    v: u32,
    #[arg(short = 't', long = "phase-cap", default_value_t = 16)]
    t: usize,
    #[arg(short = 'N', long = "max-pairs", default_value_t = 50)]
    max_pairs: usize,
    #[arg(long = "freq-fraction", default_value_t = 2e-4)]
    freq_fraction: f64,
    /// Flag seeds occurring at least this often (overrides --freq-fraction;
    /// 0 disables)
    #[arg(long = "freq-threshold")]
    freq_threshold: Option<u32>,
    /// Reference batch limit in bases (K/M/G suffixes allowed)
    #[arg(short = 'I', long = "batch-limit", default_value = "8G")]
    batch_limit: String,
    /// Accept a reference only with at least this many mapped reads
    #[arg(long = "min-reads", default_value_t = 100)]
    min_reads: u64,
    /// Accept a reference only with at least this coverage
    #[arg(long = "min-cov", default_value_t = 0.1)]
    min_cov: f64,
    /// Write accepted reference sequences as FASTA (FNA)
    #[arg(long = "emit-accepted")]
    emit_accepted: Option<PathBuf>,
    #[arg(long = "threads", default_value_t = default_threads())]
    threads: usize,
    /// Output TSV path (stdout when omitted)
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Seed length; when set (with -w/-p) runs a single combination instead
    /// of the default grid
    #[arg(short = 'k')]
    k: Option<usize>,
    #[arg(short = 'w')]
    w: Option<usize>,
    #[arg(short = 'p', long = "pattern")]
    pattern: Option<String>,
    /// Number of simulated sequence pairs
    #[arg(long = "pairs", default_value_t = 1000)]
    pairs: usize,
    /// Length of each simulated sequence
    #[arg(long = "len", default_value_t = 1000)]
    len: usize,
    /// Maximum substitutions per pair (the count is drawn uniformly)
    #[arg(long = "max-subs", default_value_t = 500)]
    max_subs: usize,
    /// RNG seed
    #[arg(long = "seed", default_value_t = 42)]
    seed: u64,
    /// Edit-distance thresholds for the accepted-pair summary
    #[arg(long = "edit-threshold", default_values_t = [20usize, 138, 295])]
    edit_thresholds: Vec<usize>,
    #[arg(long = "threads", default_value_t = default_threads())]
    threads: usize,
    /// Output TSV path (stdout when omitted)
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn parse_pattern(text: &str) -> Result<DietPattern> {
    DietPattern::parse(text).map_err(|e| usage(format!("invalid pattern {text:?}: {e}")))
}

fn freq_rule(fraction: f64, absolute: Option<u32>) -> FreqCutoff {
    match absolute {
        Some(0) => FreqCutoff::Disabled,
        Some(v) => FreqCutoff::Absolute(v),
        None if fraction > 0.0 => FreqCutoff::TopFraction(fraction),
        None => FreqCutoff::Disabled,
    }
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn check_input_exists(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("input file not found: {}", path.display());
    }
    Ok(())
}

fn load_reads(paths: &[PathBuf]) -> Result<Vec<ReadRecord>> {
    let mut reads = Vec::new();
    for p in paths {
        check_input_exists(p)?;
        reads.extend(read_reads(p).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(reads)
}

fn run_index(args: &IndexArgs) -> Result<()> {
    check_input_exists(&args.reference)?;
    let pattern = parse_pattern(&args.pattern)?;
    let limit = parse_base_count(&args.batch_limit).map_err(usage)?;
    let seqs: Result<Vec<NucSequence>, _> =
        FastaReader::new(open_reader(&args.reference)?).collect();
    let batch = ReferenceBatch::new(seqs.context("parsing reference")?);
    if batch.total_bases > limit {
        log::warn!(
            "reference ({} bases) exceeds the batch limit {}; the index holds one batch — \
             use map/contain with -I for streamed batches",
            batch.total_bases,
            limit
        );
    }
    let idx = build_index(&batch, &pattern, args.k, args.w, !args.idx_no_seq)?;
    indexfile::write_index(&args.output, &idx)
        .with_context(|| format!("writing {}", args.output.display()))?;
    log::info!(
        "indexed {} sequences, {} bases, {} seed entries",
        batch.sequences.len(),
        batch.total_bases,
        idx.entry_count()
    );
    Ok(())
}

struct PresetValues {
    k: usize,
    w: usize,
    mode: MapMode,
    split_len: Option<usize>,
}

fn preset_values(preset: Preset) -> PresetValues {
    match preset {
        Preset::Sr => PresetValues { k: 21, w: 11, mode: MapMode::Short, split_len: None },
        Preset::MapHifi => PresetValues { k: 19, w: 19, mode: MapMode::Long, split_len: None },
        Preset::MapOnt => {
            PresetValues { k: 15, w: 12, mode: MapMode::Long, split_len: Some(30_000) }
        }
    }
}

fn run_map(args: &MapArgs, mode: MapMode, command_line: String) -> Result<()> {
    check_input_exists(&args.reference)?;
    let preset = args.preset.unwrap_or(match mode {
        MapMode::Short => Preset::Sr,
        MapMode::Long => Preset::MapHifi,
    });
    let pv = preset_values(preset);
    if pv.mode != mode {
        return Err(usage(format!(
            "preset {:?} belongs to {}; use the matching subcommand",
            match preset {
                Preset::Sr => "sr",
                Preset::MapHifi => "map-hifi",
                Preset::MapOnt => "map-ont",
            },
            match pv.mode {
                MapMode::Short => "map-short",
                MapMode::Long => "map-long",
            }
        )));
    }
    let scoring = ScoringScheme {
        match_score: args.match_score,
        mismatch: args.mismatch,
        gap_open: args.gap_open,
        gap_extend: args.gap_extend,
    };
    if scoring.match_score <= 0 || scoring.mismatch < 0 || scoring.gap_open < 0 || scoring.gap_extend < 0 {
        return Err(usage("match score must be positive and penalties non-negative"));
    }
    let freq = freq_rule(args.freq_fraction, args.freq_threshold);
    let limit = parse_base_count(&args.batch_limit).map_err(usage)?;
    let reads = load_reads(&args.reads)?;

    let from_index = indexfile::is_index_file(&args.reference);
    let (ref_names, ref_lens, batches): (Vec<String>, Vec<u64>, BatchIter) = if from_index {
        let mut idx = indexfile::read_index(&args.reference)?;
        if let Some(p) = &args.pattern {
            if parse_pattern(p)? != *idx.pattern() {
                return Err(usage(format!(
                    "pattern {p:?} does not match the index ({})",
                    idx.pattern()
                )));
            }
        }
        if let Some(k) = args.k {
            if k != idx.k() {
                return Err(usage(format!("-k {k} does not match the index (k={})", idx.k())));
            }
        }
        if let Some(w) = args.w {
            if w != idx.w() {
                return Err(usage(format!("-w {w} does not match the index (w={})", idx.w())));
            }
        }
        if !idx.stores_sequence() {
            return Err(usage(
                "index was built with --idx-no-seq; base-level alignment needs the sequence",
            ));
        }
        idx.apply_frequency_cutoff(freq);
        (
            idx.names().to_vec(),
            idx.seq_lens().to_vec(),
            Box::new(std::iter::once(Ok((0usize, idx)))),
        )
    } else {
        // pass 1: names and lengths for the header
        let mut names = Vec::new();
        let mut lens = Vec::new();
        for seq in FastaReader::new(open_reader(&args.reference)?) {
            let seq = seq.context("parsing reference")?;
            names.push(seq.name.clone());
            lens.push(seq.len() as u64);
        }
        // pass 2: stream batches and index each
        let pattern = parse_pattern(args.pattern.as_deref().unwrap_or("10"))?;
        let (k, w) = (args.k.unwrap_or(pv.k), args.w.unwrap_or(pv.w));
        let reader = FastaReader::new(open_reader(&args.reference)?);
        let iter = batch_references(reader, limit).scan(0usize, move |offset, batch| {
            let item = batch.map_err(anyhow::Error::from).and_then(|b| {
                let start = *offset;
                *offset += b.sequences.len();
                let mut idx = build_index(&b, &pattern, k, w, true)?;
                idx.apply_frequency_cutoff(freq);
                Ok((start, idx))
            });
            Some(item)
        });
        (names, lens, Box::new(iter))
    };

    let (pattern, k, w) = if from_index {
        // adopted from the file; re-read for the options struct
        let idx = indexfile::read_index(&args.reference)?;
        (idx.pattern().clone(), idx.k(), idx.w())
    } else {
        (
            parse_pattern(args.pattern.as_deref().unwrap_or("10"))?,
            args.k.unwrap_or(pv.k),
            args.w.unwrap_or(pv.w),
        )
    };

    let mut opts = MapOptions::new(pattern, k, w, mode);
    opts.d = args.d;
    opts.v = args.v;
    opts.t = args.t;
    opts.max_pairs = args.max_pairs;
    opts.scoring = scoring;
    opts.sort_backend = args.sort.into();
    opts.split_len = args.split_len.or(pv.split_len);
    opts.freq = freq;
    opts.threads = args.threads.max(1);

    let mapped = map_reads(batches, &reads, &opts)?;
    let header = SamHeader {
        ref_names,
        ref_lens,
        program_version: env!("CARGO_PKG_VERSION").to_string(),
        command_line,
    };
    let mut out = out_writer(args.output.as_deref())?;
    write_sam(&mut out, &header, &reads, &mapped)?;
    out.flush()?;
    Ok(())
}

type BatchIter = Box<dyn Iterator<Item = Result<(usize, SeedIndex)>>>;

fn run_contain(args: &ContainArgs) -> Result<()> {
    check_input_exists(&args.reference)?;
    check_input_exists(&args.reads)?;
    let pattern = parse_pattern(&args.pattern)?;
    let limit = parse_base_count(&args.batch_limit).map_err(usage)?;
    let reads = load_reads(std::slice::from_ref(&args.reads))?;
    let mut opts = ContainOptions::new(pattern, args.k, args.w);
    opts.d = args.d;
    opts.v = args.v;
    opts.t = args.t;
    opts.max_pairs = args.max_pairs;
    opts.freq = freq_rule(args.freq_fraction, args.freq_threshold);
    opts.thresholds = ContainThresholds { min_reads: args.min_reads, min_cov: args.min_cov };
    opts.threads = args.threads.max(1);

    if let Some(p) = &args.emit_accepted {
        // start fresh; batches append
        if p.exists() {
            std::fs::remove_file(p).with_context(|| format!("removing {}", p.display()))?;
        }
    }

    let mut all_stats = Vec::new();
    let reader = FastaReader::new(open_reader(&args.reference)?);
    for batch in batch_references(reader, limit) {
        let batch = batch.context("parsing reference")?;
        let stats = containrun::contain_batch(&batch, &reads, &opts)?;
        if let Some(p) = &args.emit_accepted {
            containrun::append_accepted_fasta(p, &batch, &stats, &opts.thresholds)?;
        }
        all_stats.extend(stats);
    }
    let mut out = out_writer(args.output.as_deref())?;
    containrun::write_report(&mut out, &all_stats, &opts.thresholds)?;
    out.flush()?;
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let combos = match (args.k, args.w, &args.pattern) {
        (None, None, None) => benchrun::default_combos(),
        (k, w, p) => {
            let pattern = p.clone().unwrap_or_else(|| "100".to_string());
            parse_pattern(&pattern)?;
            vec![BenchCombo { k: k.unwrap_or(8), w: w.unwrap_or(6), pattern }]
        }
    };
    let opts = BenchOptions {
        combos,
        pairs: args.pairs,
        len: args.len,
        max_subs: args.max_subs,
        seed: args.seed,
        edit_thresholds: args.edit_thresholds.clone(),
        threads: args.threads.max(1),
    };
    let mut out = out_writer(args.output.as_deref())?;
    benchrun::run_benchmark(&opts, &mut out)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Index(args) => run_index(args),
        Command::MapShort(args) => run_map(args, MapMode::Short, command_line),
        Command::MapLong(args) => run_map(args, MapMode::Long, command_line),
        Command::Contain(args) => run_contain(args),
        Command::Seedbench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dietmap: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
