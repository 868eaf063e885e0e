//! End-to-end tests driving the compiled binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{random_genome, rng, validate_sam, write_fasta, write_fastq};
use rand::Rng;

fn dietmap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dietmap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    truth: Vec<(usize, bool)>,
}

fn make_fixture(seed: u64, n_reads: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(seed);
    let genome = random_genome(60_000, &mut r);
    write_fasta(&dir.path().join("ref.fa"), &[("chr1", &genome)]);
    let mut reads = Vec::new();
    let mut truth = Vec::new();
    for i in 0..n_reads {
        let start = r.random_range(0..genome.len() - 150);
        let mut bases = genome[start..start + 150].to_vec();
        let rev = i % 4 == 3;
        if rev {
            bases = dietmap_core::seq::reverse_complement(&bases);
        }
        truth.push((start, rev));
        reads.push((format!("r{i}"), bases));
    }
    write_fastq(&dir.path().join("reads.fq"), &reads);
    Fixture { dir, truth }
}

#[test]
fn map_short_to_stdout() {
    let fx = make_fixture(301, 12);
    let out = dietmap(&["map-short", "ref.fa", "reads.fq"], fx.dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let records = validate_sam(&stdout_of(&out)).expect("valid SAM");
    for (i, (start, rev)) in fx.truth.iter().enumerate() {
        let name = format!("r{i}");
        let primary = records.iter().find(|r| r.qname == name && r.is_primary()).unwrap();
        assert_eq!(primary.pos, *start as u64 + 1, "{name}");
        assert_eq!(primary.is_reverse(), *rev, "{name}");
    }
}

#[test]
fn index_then_map_matches_direct() {
    let fx = make_fixture(302, 8);
    let dir = fx.dir.path();
    let built = dietmap(&["index", "ref.fa", "-o", "ref.dmx", "-p", "10", "-k", "21", "-w", "11"], dir);
    assert!(built.status.success());
    let direct = dietmap(&["map-short", "ref.fa", "reads.fq"], dir);
    let via_index = dietmap(&["map-short", "ref.dmx", "reads.fq"], dir);
    assert!(via_index.status.success());
    // identical apart from the @PG command line
    let strip = |text: String| -> String {
        text.lines().filter(|l| !l.starts_with("@PG")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(stdout_of(&direct)), strip(stdout_of(&via_index)));
}

#[test]
fn missing_input_fails_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dietmap(&["map-short", "nosuch.fa", "nosuch.fq"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nosuch.fa"));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let fx = make_fixture(303, 2);
    let dir = fx.dir.path();
    // bad pattern
    let out = dietmap(&["map-short", "-p", "00", "ref.fa", "reads.fq"], dir);
    assert_eq!(out.status.code(), Some(2), "all-zero pattern");
    // preset belonging to the other mode
    let out = dietmap(&["map-short", "-x", "map-ont", "ref.fa", "reads.fq"], dir);
    assert_eq!(out.status.code(), Some(2), "wrong-mode preset");
    // unknown preset is a clap parse error, also 2
    let out = dietmap(&["map-short", "-x", "bogus", "ref.fa", "reads.fq"], dir);
    assert_eq!(out.status.code(), Some(2), "unknown preset");
    // mismatched parameters against a prebuilt index
    let built = dietmap(&["index", "ref.fa", "-o", "ref.dmx", "-k", "21", "-w", "11"], dir);
    assert!(built.status.success());
    let out = dietmap(&["map-short", "-k", "15", "ref.dmx", "reads.fq"], dir);
    assert_eq!(out.status.code(), Some(2), "index k mismatch");
}

#[test]
fn no_seq_index_cannot_align() {
    let fx = make_fixture(304, 2);
    let dir = fx.dir.path();
    let built = dietmap(&["index", "ref.fa", "-o", "bare.dmx", "--idx-no-seq"], dir);
    assert!(built.status.success());
    let out = dietmap(&["map-short", "bare.dmx", "reads.fq"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("idx-no-seq"));
}

#[test]
fn presets_set_documented_parameters() {
    for (preset, subcmd, k, w) in
        [("sr", "map-short", "21", "11"), ("map-hifi", "map-long", "19", "19"), ("map-ont", "map-long", "15", "12")]
    {
        let fx = make_fixture(305, 2);
        let dir = fx.dir.path();
        // an index built with the preset's parameters is accepted without overrides
        let built = dietmap(&["index", "ref.fa", "-o", "p.dmx", "-k", k, "-w", w], dir);
        assert!(built.status.success());
        let out = dietmap(&[subcmd, "-x", preset, "p.dmx", "reads.fq"], dir);
        assert!(
            out.status.success(),
            "{preset}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn map_output_file_and_pg_line() {
    let fx = make_fixture(306, 4);
    let dir = fx.dir.path();
    let out = dietmap(&["map-short", "ref.fa", "reads.fq", "-o", "out.sam"], dir);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("out.sam")).unwrap();
    validate_sam(&text).expect("valid SAM");
    let pg = text.lines().find(|l| l.starts_with("@PG")).unwrap();
    assert!(pg.contains("CL:"));
    assert!(pg.contains("map-short"));
    assert!(pg.contains("VN:"));
}

#[test]
fn contain_accepts_source_rejects_decoy() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(307);
    let present = random_genome(100_000, &mut r);
    let absent = random_genome(100_000, &mut r);
    write_fasta(&dir.path().join("refs.fa"), &[("present", &present), ("absent", &absent)]);
    let mut reads = Vec::new();
    for i in 0..300 {
        let start = r.random_range(0..present.len() - 150);
        reads.push((format!("r{i}"), present[start..start + 150].to_vec()));
    }
    write_fastq(&dir.path().join("reads.fq"), &reads);
    let out = dietmap(
        &[
            "contain", "refs.fa", "reads.fq", "--min-reads", "100", "--min-cov", "0.1",
            "--emit-accepted", "hits.fna",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_of(&out);
    let rows: Vec<&str> = report.lines().collect();
    assert_eq!(rows[0], "ref_name\tmapped_reads\tcovered_bases\tcoverage\taccepted");
    let present_row = rows.iter().find(|r| r.starts_with("present\t")).unwrap();
    let absent_row = rows.iter().find(|r| r.starts_with("absent\t")).unwrap();
    assert!(present_row.ends_with("\t1"), "{present_row}");
    assert!(absent_row.ends_with("\t0"), "{absent_row}");
    let fna = std::fs::read_to_string(dir.path().join("hits.fna")).unwrap();
    assert!(fna.starts_with(">present"));
    assert!(!fna.contains(">absent"));
}

#[test]
fn contain_batching_gives_identical_stats() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(308);
    let a = random_genome(40_000, &mut r);
    let b = random_genome(40_000, &mut r);
    let c = random_genome(40_000, &mut r);
    write_fasta(&dir.path().join("refs.fa"), &[("a", &a), ("b", &b), ("c", &c)]);
    let mut reads = Vec::new();
    for (i, g) in [&a, &b, &c].iter().enumerate() {
        for j in 0..40 {
            let start = r.random_range(0..g.len() - 120);
            reads.push((format!("r{i}_{j}"), g[start..start + 120].to_vec()));
        }
    }
    write_fastq(&dir.path().join("reads.fq"), &reads);
    // frequency filtering off: its fraction rule depends on batch-wide counts
    let run = |limit: &str| {
        let out = dietmap(
            &[
                "contain", "refs.fa", "reads.fq", "-I", limit, "--freq-fraction", "0",
                "--min-reads", "10", "--min-cov", "0.01",
            ],
            dir.path(),
        );
        assert!(out.status.success());
        stdout_of(&out)
    };
    let one_batch = run("1G");
    let per_seq = run("50K");
    assert_eq!(one_batch, per_seq);
}

#[test]
fn seedbench_tsv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dietmap(
        &["seedbench", "-k", "8", "-w", "6", "-p", "100", "--pairs", "20", "--max-subs", "100"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k\tw\tpattern\tedit_distance\trate_all\trate_minimizers\trate_spaced\trate_god"
    );
    let data_rows = text.lines().filter(|l| !l.starts_with('#') && !l.starts_with('k')).count();
    assert_eq!(data_rows, 20);
    assert!(text.lines().any(|l| l.starts_with("# 8\t6\t100")));

    // deterministic under the same seed
    let again = dietmap(
        &["seedbench", "-k", "8", "-w", "6", "-p", "100", "--pairs", "20", "--max-subs", "100"],
        dir.path(),
    );
    assert_eq!(text, stdout_of(&again));
}

#[test]
fn output_invariant_to_threads_sort_and_batching() {
    let fx = make_fixture(310, 30);
    let dir = fx.dir.path();
    let strip_pg = |out: &Output| -> String {
        stdout_of(out).lines().filter(|l| !l.starts_with("@PG")).collect::<Vec<_>>().join("\n")
    };
    let base = dietmap(
        &["map-short", "ref.fa", "reads.fq", "--threads", "1", "--freq-fraction", "0"],
        dir,
    );
    assert!(base.status.success());
    let baseline = strip_pg(&base);
    for extra in [
        &["--threads", "4"][..],
        &["--threads", "8"][..],
        &["--threads", "1", "--sort", "radix"][..],
        &["--threads", "1", "--sort", "heap"][..],
        &["--threads", "1", "-I", "20K"][..], // genome split into several batches
    ] {
        let mut args = vec!["map-short", "ref.fa", "reads.fq", "--freq-fraction", "0"];
        args.extend_from_slice(extra);
        let out = dietmap(&args, dir);
        assert!(out.status.success(), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(strip_pg(&out), baseline, "output changed under {extra:?}");
    }
    // identical argv twice: byte-identical including @PG
    let again = dietmap(
        &["map-short", "ref.fa", "reads.fq", "--threads", "1", "--freq-fraction", "0"],
        dir,
    );
    assert_eq!(stdout_of(&base), stdout_of(&again));
}

#[test]
fn empty_read_file_gives_header_only() {
    let fx = make_fixture(311, 2);
    let dir = fx.dir.path();
    std::fs::write(dir.join("empty.fq"), "").unwrap();
    let out = dietmap(&["map-short", "ref.fa", "empty.fq"], dir);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.lines().all(|l| l.starts_with('@')));
    validate_sam(&text).expect("header-only SAM is valid");
}

#[test]
fn gzip_inputs_accepted() {
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(309);
    let genome = random_genome(30_000, &mut r);
    let start = 5_000;
    let read = &genome[start..start + 150];

    let mut fa = GzEncoder::new(
        std::fs::File::create(dir.path().join("ref.fa.gz")).unwrap(),
        Compression::default(),
    );
    fa.write_all(b">chr1\n").unwrap();
    fa.write_all(&genome).unwrap();
    fa.write_all(b"\n").unwrap();
    fa.finish().unwrap();

    let mut fq = GzEncoder::new(
        std::fs::File::create(dir.path().join("reads.fq.gz")).unwrap(),
        Compression::default(),
    );
    write!(fq, "@r0\n{}\n+\n{}\n", std::str::from_utf8(read).unwrap(), "I".repeat(150)).unwrap();
    fq.finish().unwrap();

    let out = dietmap(&["map-short", "ref.fa.gz", "reads.fq.gz"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = validate_sam(&stdout_of(&out)).unwrap();
    let primary = records.iter().find(|r| r.is_primary()).unwrap();
    assert_eq!(primary.pos, start as u64 + 1);
}
