//! Shared test helpers: sequence simulation and an independent SAM
//! structural validator.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_genome(len: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect()
}

pub fn substitute(bases: &mut [u8], count: usize, rng: &mut ChaCha8Rng) {
    for _ in 0..count {
        let pos = rng.random_range(0..bases.len());
        let old = bases[pos];
        let mut new = old;
        while new == old {
            new = b"ACGT"[rng.random_range(0..4)];
        }
        bases[pos] = new;
    }
}

#[derive(Debug, Clone)]
pub struct SamRecordView {
    pub qname: String,
    pub flag: u16,
    pub rname: String,
    pub pos: u64,
    pub mapq: u8,
    pub cigar: String,
    pub seq: String,
    pub tags: Vec<String>,
}

impl SamRecordView {
    pub fn is_mapped(&self) -> bool {
        self.flag & 0x4 == 0
    }

    pub fn is_primary(&self) -> bool {
        self.is_mapped() && self.flag & 0x100 == 0 && self.flag & 0x800 == 0
    }

    pub fn is_reverse(&self) -> bool {
        self.flag & 0x10 != 0
    }

    pub fn tag_i(&self, name: &str) -> Option<i64> {
        let prefix = format!("{name}:i:");
        self.tags.iter().find_map(|t| t.strip_prefix(&prefix)?.parse().ok())
    }
}

fn cigar_lengths(cigar: &str) -> Result<(u64, u64), String> {
    if cigar == "*" {
        return Ok((0, 0));
    }
    let mut read_len = 0u64;
    let mut ref_len = 0u64;
    let mut num = 0u64;
    let mut saw_digit = false;
    for c in cigar.chars() {
        if let Some(d) = c.to_digit(10) {
            num = num * 10 + d as u64;
            saw_digit = true;
            continue;
        }
        if !saw_digit || num == 0 {
            return Err(format!("bad CIGAR {cigar:?}: op {c:?} without a positive length"));
        }
        match c {
            'M' | '=' | 'X' => {
                read_len += num;
                ref_len += num;
            }
            'I' | 'S' => read_len += num,
            'D' | 'N' => ref_len += num,
            'H' | 'P' => {}
            other => return Err(format!("bad CIGAR {cigar:?}: unknown op {other:?}")),
        }
        num = 0;
        saw_digit = false;
    }
    if saw_digit {
        return Err(format!("bad CIGAR {cigar:?}: trailing digits"));
    }
    Ok((read_len, ref_len))
}

/// Structural SAM validation, written independently of the writer: header
/// completeness, column shapes, CIGAR-vs-SEQ consistency, positions within
/// the reference, and exactly one primary per mapped read name.
pub fn validate_sam(text: &str) -> Result<Vec<SamRecordView>, String> {
    let mut refs: std::collections::HashMap<String, u64> = std::collections::HashMap::new();
    let mut saw_hd = false;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let human = lineno + 1;
        if line.is_empty() {
            return Err(format!("line {human}: empty line"));
        }
        if let Some(rest) = line.strip_prefix('@') {
            if rest.starts_with("HD") {
                saw_hd = true;
            } else if let Some(sq) = rest.strip_prefix("SQ\t") {
                let mut name = None;
                let mut len = None;
                for field in sq.split('\t') {
                    if let Some(v) = field.strip_prefix("SN:") {
                        name = Some(v.to_string());
                    }
                    if let Some(v) = field.strip_prefix("LN:") {
                        len = v.parse::<u64>().ok();
                    }
                }
                match (name, len) {
                    (Some(n), Some(l)) => {
                        refs.insert(n, l);
                    }
                    _ => return Err(format!("line {human}: @SQ missing SN or LN")),
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 11 {
            return Err(format!("line {human}: {} columns, need 11", cols.len()));
        }
        let flag: u16 =
            cols[1].parse().map_err(|_| format!("line {human}: bad FLAG {:?}", cols[1]))?;
        let pos: u64 =
            cols[3].parse().map_err(|_| format!("line {human}: bad POS {:?}", cols[3]))?;
        let mapq: u8 =
            cols[4].parse().map_err(|_| format!("line {human}: bad MAPQ {:?}", cols[4]))?;
        let (cigar_read, cigar_ref) = cigar_lengths(cols[5]).map_err(|e| format!("line {human}: {e}"))?;
        let seq = cols[9];
        let qual = cols[10];

        if flag & 0x4 == 0 {
            let Some(&ref_len) = refs.get(cols[2]) else {
                return Err(format!("line {human}: RNAME {:?} not in any @SQ", cols[2]));
            };
            if pos < 1 {
                return Err(format!("line {human}: mapped record with POS {pos}"));
            }
            if cols[5] == "*" {
                return Err(format!("line {human}: mapped record without CIGAR"));
            }
            if pos - 1 + cigar_ref > ref_len {
                return Err(format!(
                    "line {human}: alignment ends at {} beyond reference length {ref_len}",
                    pos - 1 + cigar_ref
                ));
            }
            if mapq > 60 {
                return Err(format!("line {human}: MAPQ {mapq} out of range"));
            }
            if seq != "*" && cigar_read != seq.len() as u64 {
                return Err(format!(
                    "line {human}: CIGAR consumes {cigar_read} read bases but SEQ has {}",
                    seq.len()
                ));
            }
        } else if cols[2] != "*" || pos != 0 || mapq != 0 || cols[5] != "*" {
            return Err(format!("line {human}: unmapped record with mapped-style columns"));
        }
        if seq != "*" && qual != "*" && seq.len() != qual.len() {
            return Err(format!("line {human}: SEQ and QUAL lengths differ"));
        }
        records.push(SamRecordView {
            qname: cols[0].to_string(),
            flag,
            rname: cols[2].to_string(),
            pos,
            mapq,
            cigar: cols[5].to_string(),
            seq: seq.to_string(),
            tags: cols[11..].iter().map(|s| s.to_string()).collect(),
        });
    }
    if !saw_hd {
        return Err("missing @HD header line".into());
    }
    // exactly one primary per mapped read name
    let mut primaries: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut mapped: std::collections::HashMap<&str, bool> = std::collections::HashMap::new();
    for r in &records {
        *mapped.entry(&r.qname).or_default() |= r.is_mapped();
        if r.is_primary() {
            *primaries.entry(&r.qname).or_default() += 1;
        }
    }
    for (name, &has_mapped) in &mapped {
        let n = primaries.get(name).copied().unwrap_or(0);
        if has_mapped && n != 1 {
            return Err(format!("read {name:?}: {n} primary records"));
        }
    }
    Ok(records)
}

pub fn write_fasta(path: &std::path::Path, seqs: &[(&str, &[u8])]) {
    let mut text = String::new();
    for (name, bases) in seqs {
        text.push('>');
        text.push_str(name);
        text.push('\n');
        for chunk in bases.chunks(80) {
            text.push_str(std::str::from_utf8(chunk).unwrap());
            text.push('\n');
        }
    }
    std::fs::write(path, text).unwrap();
}

pub fn write_fastq(path: &std::path::Path, reads: &[(String, Vec<u8>)]) {
    let mut text = String::new();
    for (name, bases) in reads {
        text.push('@');
        text.push_str(name);
        text.push('\n');
        text.push_str(std::str::from_utf8(bases).unwrap());
        text.push_str("\n+\n");
        text.extend(std::iter::repeat_n('I', bases.len()));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}
