//! The compressed seed index: minimizer hash -> sorted original-coordinate
//! location list, built over the patterned reference.
//!
//! Construction is collect-then-sort: all `(hash, location, strand)` triples
//! are gathered into one arena, sorted, and only then keyed into the hash
//! table, which is much cheaper than per-minimizer insertion.
//!
//! # Serialized layout (little-endian, versioned)
//!
//! ```text
//! magic       [u8; 4]  = "DMIX"
//! version     u32      = 1
//! hash_fn_id  u32      = 1 (the invertible mix in sketch::hash_kmer)
//! k           u32
//! w           u32
//! pattern_len u32, pattern bits as bytes '0'/'1'
//! flags       u32      bit 0: sequence stored
//! n_seqs      u32
//!   per sequence: name_len u32, name bytes, seq_len u64
//! freq_cutoff u32
//! n_keys      u64
//!   per key: hash u64, offset u64, count u32
//! arena_len   u64, entries u64 (location << 1 | strand)
//! if sequence stored: bases_len u64, bases (concatenated, ASCII)
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashMap;

use crate::pattern::{apply_pattern, DietPattern};
use crate::seq::ReferenceBatch;
use crate::sketch::{minimizers_batched, Strand, MAX_K};

pub const INDEX_MAGIC: [u8; 4] = *b"DMIX";
pub const INDEX_VERSION: u32 = 1;
pub const HASH_FN_ID: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexError {
    DuplicateName(String),
    BadK(usize),
    Corrupt(&'static str),
    BadMagic,
    VersionMismatch { found: u32, expected: u32 },
    HashFnMismatch { found: u32, expected: u32 },
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::DuplicateName(n) => write!(f, "duplicate sequence name {n:?}"),
            IndexError::BadK(k) => write!(f, "k = {k} out of range 1..={MAX_K}"),
            IndexError::Corrupt(what) => write!(f, "corrupt index data: {what}"),
            IndexError::BadMagic => write!(f, "not an index file (bad magic)"),
            IndexError::VersionMismatch { found, expected } => {
                write!(f, "index version {found}, this build reads {expected}")
            }
            IndexError::HashFnMismatch { found, expected } => {
                write!(f, "index hash function id {found}, this build uses {expected}")
            }
        }
    }
}

impl core::error::Error for IndexError {}

/// How high-frequency seeds are flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreqCutoff {
    /// Flag the top `fraction` of distinct hashes by occurrence count.
    TopFraction(f64),
    /// Flag hashes with occurrence count >= the given value.
    Absolute(u32),
    Disabled,
}

/// Arena entry: original-genome location (batch-global) and strand.
#[inline]
pub fn pack_entry(location: u64, strand: Strand) -> u64 {
    (location << 1) | (strand == Strand::Reverse) as u64
}

#[inline]
pub fn unpack_entry(entry: u64) -> (u64, Strand) {
    (entry >> 1, if entry & 1 == 0 { Strand::Forward } else { Strand::Reverse })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedIndex {
    table: HashMap<u64, (u64, u32)>,
    arena: Vec<u64>,
    k: usize,
    w: usize,
    pattern: DietPattern,
    names: Vec<String>,
    seq_lens: Vec<u64>,
    global_offsets: Vec<u64>,
    /// Occurrence count at or above which a hash is flagged as expensive.
    freq_cutoff: u32,
    /// Original reference bases, concatenated in offset order, when kept.
    bases: Option<Vec<u8>>,
}

/// Builds the seed index over `apply_pattern(ref, pat, shift = 0)` for every
/// sequence in the batch. Stored locations are batch-global original-genome
/// coordinates of each minimizer's final kept base.
pub fn build_index(
    batch: &ReferenceBatch,
    pat: &DietPattern,
    k: usize,
    w: usize,
    keep_sequence: bool,
) -> Result<SeedIndex, IndexError> {
    if !(1..=MAX_K).contains(&k) {
        return Err(IndexError::BadK(k));
    }
    for (i, a) in batch.sequences.iter().enumerate() {
        for b in &batch.sequences[i + 1..] {
            if a.name == b.name {
                return Err(IndexError::DuplicateName(a.name.clone()));
            }
        }
    }

    // collect, then sort, then key
    let mut triples: Vec<(u64, u64)> = Vec::new();
    for (seq, &offset) in batch.sequences.iter().zip(&batch.global_offsets) {
        let ps = apply_pattern(&seq.bases, pat, 0);
        for m in minimizers_batched(&ps, k, w) {
            triples.push((m.hash, pack_entry(offset + m.origin_pos, m.strand)));
        }
    }
    triples.sort_unstable();

    let mut table = HashMap::new();
    let mut arena = Vec::with_capacity(triples.len());
    let mut i = 0;
    while i < triples.len() {
        let hash = triples[i].0;
        let start = arena.len() as u64;
        let mut j = i;
        while j < triples.len() && triples[j].0 == hash {
            arena.push(triples[j].1);
            j += 1;
        }
        table.insert(hash, (start, (j - i) as u32));
        i = j;
    }

    let bases = keep_sequence.then(|| {
        let mut all = Vec::with_capacity(batch.total_bases as usize);
        for seq in &batch.sequences {
            all.extend_from_slice(&seq.bases);
        }
        all
    });

    Ok(SeedIndex {
        table,
        arena,
        k,
        w,
        pattern: pat.clone(),
        names: batch.sequences.iter().map(|s| s.name.clone()).collect(),
        seq_lens: batch.sequences.iter().map(|s| s.len() as u64).collect(),
        global_offsets: batch.global_offsets.clone(),
        freq_cutoff: u32::MAX,
        bases,
    })
}

impl SeedIndex {
    /// Sorted slice of packed `(location, strand)` entries for `hash`.
    pub fn lookup(&self, hash: u64) -> &[u64] {
        match self.table.get(&hash) {
            Some(&(offset, count)) => &self.arena[offset as usize..offset as usize + count as usize],
            None => &[],
        }
    }

    /// Occurrence count of `hash` without touching the arena.
    pub fn occurrences(&self, hash: u64) -> u32 {
        self.table.get(&hash).map_or(0, |&(_, c)| c)
    }

    /// Computes and stores the frequency cutoff; returns the cutoff value.
    ///
    /// For `TopFraction(f)` with `n` distinct hashes, `m = floor(f * n)`
    /// hashes are targeted: the cutoff is one more than the `(n - m)`-th
    /// smallest count, so ties at the boundary are kept rather than flagged.
    /// With `m == 0` nothing is flagged.
    pub fn apply_frequency_cutoff(&mut self, rule: FreqCutoff) -> u32 {
        self.freq_cutoff = match rule {
            FreqCutoff::Disabled => u32::MAX,
            FreqCutoff::Absolute(v) => v,
            FreqCutoff::TopFraction(f) => {
                let n = self.table.len();
                let m = (f * n as f64) as usize;
                if m == 0 || n == 0 {
                    u32::MAX
                } else {
                    let mut counts: Vec<u32> = self.table.values().map(|&(_, c)| c).collect();
                    counts.sort_unstable();
                    counts[n - m - 1].saturating_add(1)
                }
            }
        };
        self.freq_cutoff
    }

    /// Whether a hash with this occurrence count is flagged as expensive.
    #[inline]
    pub fn is_frequent(&self, count: u32) -> bool {
        count >= self.freq_cutoff
    }

    pub fn freq_cutoff(&self) -> u32 {
        self.freq_cutoff
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn pattern(&self) -> &DietPattern {
        &self.pattern
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn seq_lens(&self) -> &[u64] {
        &self.seq_lens
    }

    pub fn global_offsets(&self) -> &[u64] {
        &self.global_offsets
    }

    pub fn total_bases(&self) -> u64 {
        self.seq_lens.iter().sum()
    }

    pub fn stores_sequence(&self) -> bool {
        self.bases.is_some()
    }

    /// Reference bases for the half-open global range, if stored.
    pub fn window(&self, start: u64, end: u64) -> Option<&[u8]> {
        self.bases.as_ref().map(|b| &b[start as usize..end as usize])
    }

    /// Total number of indexed minimizer entries.
    pub fn entry_count(&self) -> u64 {
        self.arena.len() as u64
    }

    pub fn distinct_hashes(&self) -> usize {
        self.table.len()
    }

    /// `(sequence index, local offset)` for a batch-global coordinate.
    pub fn locate(&self, global: u64) -> (usize, u64) {
        let idx = match self.global_offsets.binary_search(&global) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (idx, global - self.global_offsets[idx])
    }

    /// Global half-open range occupied by sequence `idx`.
    pub fn sequence_range(&self, idx: usize) -> (u64, u64) {
        let start = self.global_offsets[idx];
        (start, start + self.seq_lens[idx])
    }

    /// Serializes to the documented byte layout. Deterministic: table keys
    /// are written in sorted order.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&INDEX_MAGIC);
        put_u32(&mut out, INDEX_VERSION);
        put_u32(&mut out, HASH_FN_ID);
        put_u32(&mut out, self.k as u32);
        put_u32(&mut out, self.w as u32);
        let pat_text = self.pattern.as_text();
        put_u32(&mut out, pat_text.len() as u32);
        out.extend_from_slice(pat_text.as_bytes());
        put_u32(&mut out, self.bases.is_some() as u32);
        put_u32(&mut out, self.names.len() as u32);
        for (name, &len) in self.names.iter().zip(&self.seq_lens) {
            put_u32(&mut out, name.len() as u32);
            out.extend_from_slice(name.as_bytes());
            put_u64(&mut out, len);
        }
        put_u32(&mut out, self.freq_cutoff);
        let mut keys: Vec<u64> = self.table.keys().copied().collect();
        keys.sort_unstable();
        put_u64(&mut out, keys.len() as u64);
        for hash in keys {
            let (offset, count) = self.table[&hash];
            put_u64(&mut out, hash);
            put_u64(&mut out, offset);
            put_u32(&mut out, count);
        }
        put_u64(&mut out, self.arena.len() as u64);
        for &e in &self.arena {
            put_u64(&mut out, e);
        }
        if let Some(bases) = &self.bases {
            put_u64(&mut out, bases.len() as u64);
            out.extend_from_slice(bases);
        }
        out
    }

    /// Deserializes an index, checking magic, version, and hash function id.
    /// If `expect` is given, its `(k, w, pattern)` must match exactly.
    pub fn deserialize(bytes: &[u8]) -> Result<SeedIndex, IndexError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != INDEX_MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(IndexError::VersionMismatch { found: version, expected: INDEX_VERSION });
        }
        let hash_fn = r.u32()?;
        if hash_fn != HASH_FN_ID {
            return Err(IndexError::HashFnMismatch { found: hash_fn, expected: HASH_FN_ID });
        }
        let k = r.u32()? as usize;
        let w = r.u32()? as usize;
        if !(1..=MAX_K).contains(&k) {
            return Err(IndexError::BadK(k));
        }
        let pat_len = r.u32()? as usize;
        let pat_text = core::str::from_utf8(r.take(pat_len)?)
            .map_err(|_| IndexError::Corrupt("pattern not utf-8"))?;
        let pattern =
            DietPattern::parse(pat_text).map_err(|_| IndexError::Corrupt("invalid pattern"))?;
        let has_bases = r.u32()? != 0;
        let n_seqs = r.u32()? as usize;
        let mut names = Vec::with_capacity(n_seqs);
        let mut seq_lens = Vec::with_capacity(n_seqs);
        let mut global_offsets = Vec::with_capacity(n_seqs);
        let mut total = 0u64;
        for _ in 0..n_seqs {
            let name_len = r.u32()? as usize;
            let name = core::str::from_utf8(r.take(name_len)?)
                .map_err(|_| IndexError::Corrupt("name not utf-8"))?;
            names.push(String::from(name));
            let len = r.u64()?;
            global_offsets.push(total);
            seq_lens.push(len);
            total += len;
        }
        let freq_cutoff = r.u32()?;
        let n_keys = r.u64()? as usize;
        let mut table = HashMap::with_capacity(n_keys);
        for _ in 0..n_keys {
            let hash = r.u64()?;
            let offset = r.u64()?;
            let count = r.u32()?;
            table.insert(hash, (offset, count));
        }
        let arena_len = r.u64()? as usize;
        let mut arena = Vec::with_capacity(arena_len);
        for _ in 0..arena_len {
            arena.push(r.u64()?);
        }
        for &(offset, count) in table.values() {
            if offset as usize + count as usize > arena.len() {
                return Err(IndexError::Corrupt("table slice out of arena bounds"));
            }
        }
        let bases = if has_bases {
            let n = r.u64()? as usize;
            if n as u64 != total {
                return Err(IndexError::Corrupt("stored bases length mismatch"));
            }
            Some(r.take(n)?.to_vec())
        } else {
            None
        };
        if r.pos != bytes.len() {
            return Err(IndexError::Corrupt("trailing bytes"));
        }
        Ok(SeedIndex {
            table,
            arena,
            k,
            w,
            pattern,
            names,
            seq_lens,
            global_offsets,
            freq_cutoff,
            bases,
        })
    }

    /// Errors unless `(k, w, pattern)` match this index exactly.
    pub fn check_params(&self, k: usize, w: usize, pattern: &DietPattern) -> Result<(), IndexError> {
        if self.k != k {
            return Err(IndexError::Corrupt("k does not match index"));
        }
        if self.w != w {
            return Err(IndexError::Corrupt("w does not match index"));
        }
        if &self.pattern != pattern {
            return Err(IndexError::Corrupt("pattern does not match index"));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.pos + n > self.bytes.len() {
            return Err(IndexError::Corrupt("unexpected end of data"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::apply_pattern;
    use crate::seq::NucSequence;
    use crate::sketch::minimizers;
    use alloc::vec;

    fn pat(s: &str) -> DietPattern {
        DietPattern::parse(s).unwrap()
    }

    fn batch(seqs: &[(&str, &[u8])]) -> ReferenceBatch {
        ReferenceBatch::new(seqs.iter().map(|(n, b)| NucSequence::new(*n, b)).collect())
    }

    fn random_bases(n: usize, mut state: u64) -> Vec<u8> {
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                b"ACGT"[(state % 4) as usize]
            })
            .collect()
    }

    #[test]
    fn w1_indexes_every_kmer_end_anchored() {
        // no 4-mer of this sequence is its own reverse complement
        let b = batch(&[("s", b"ACGGACGG")]);
        let idx = build_index(&b, &pat("11"), 4, 1, false).unwrap();
        assert_eq!(idx.entry_count(), 5);
        let mut positions: Vec<u64> = Vec::new();
        let ps = apply_pattern(b"ACGGACGG", &pat("11"), 0);
        for m in minimizers(&ps, 4, 1) {
            let hits = idx.lookup(m.hash);
            assert!(!hits.is_empty());
            positions.push(m.origin_pos);
        }
        positions.sort_unstable();
        assert_eq!(positions, vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn every_sketched_minimizer_is_indexed_once() {
        let bases = random_bases(3000, 7);
        let b = batch(&[("s", &bases)]);
        let p = pat("10");
        let idx = build_index(&b, &p, 9, 5, false).unwrap();
        let minis = minimizers(&apply_pattern(&bases, &p, 0), 9, 5);
        assert_eq!(idx.entry_count(), minis.len() as u64);
        let total: u64 = {
            let mut sum = 0u64;
            let mut seen = hashbrown::HashSet::new();
            for m in &minis {
                if seen.insert(m.hash) {
                    sum += idx.occurrences(m.hash) as u64;
                }
                let hits = idx.lookup(m.hash);
                assert!(
                    hits.iter().any(|&e| unpack_entry(e) == (m.origin_pos, m.strand)),
                    "minimizer at {} missing from slice",
                    m.origin_pos
                );
            }
            sum
        };
        assert_eq!(total, idx.entry_count());
    }

    #[test]
    fn build_is_deterministic() {
        let bases = random_bases(2000, 99);
        let b = batch(&[("a", &bases), ("b", &bases[..500])]);
        let x = build_index(&b, &pat("10"), 11, 6, true).unwrap();
        let y = build_index(&b, &pat("10"), 11, 6, true).unwrap();
        assert_eq!(x.serialize(), y.serialize());
    }

    #[test]
    fn duplicate_names_rejected() {
        let b = batch(&[("s", b"ACGTACGTAA"), ("s", b"TTGCAGGTCA")]);
        assert!(matches!(
            build_index(&b, &pat("1"), 4, 2, false),
            Err(IndexError::DuplicateName(_))
        ));
    }

    #[test]
    fn sparser_pattern_smaller_index() {
        let bases = random_bases(100_000, 1234);
        let b = batch(&[("g", &bases)]);
        let dense = build_index(&b, &pat("11"), 15, 10, false).unwrap();
        let sparse = build_index(&b, &pat("10"), 15, 10, false).unwrap();
        assert!(sparse.entry_count() < dense.entry_count());
    }

    #[test]
    fn lookup_absent_and_sorted() {
        let bases = random_bases(5000, 5);
        let b = batch(&[("g", &bases)]);
        let idx = build_index(&b, &pat("10"), 9, 4, false).unwrap();
        assert!(idx.lookup(0xFFFF_FFFF_FFFF).is_empty() || idx.occurrences(0xFFFF_FFFF_FFFF) > 0);
        let mut keys_checked = 0;
        for m in minimizers(&apply_pattern(&bases, &pat("10"), 0), 9, 4) {
            let hits = idx.lookup(m.hash);
            assert!(hits.windows(2).all(|p| p[0] <= p[1]), "slice not sorted");
            assert_eq!(idx.lookup(m.hash), hits, "repeated lookups differ");
            keys_checked += 1;
            if keys_checked > 50 {
                break;
            }
        }
    }

    #[test]
    fn frequency_cutoff_quantile() {
        // 999 unique hashes + one occurring 1000 times, top fraction 0.001
        let mut idx = SeedIndex {
            table: HashMap::new(),
            arena: Vec::new(),
            k: 9,
            w: 4,
            pattern: pat("10"),
            names: vec![],
            seq_lens: vec![],
            global_offsets: vec![],
            freq_cutoff: u32::MAX,
            bases: None,
        };
        for h in 0..999u64 {
            idx.table.insert(h, (0, 1));
        }
        idx.table.insert(10_000, (0, 1000));
        let cutoff = idx.apply_frequency_cutoff(FreqCutoff::TopFraction(0.001));
        assert!(idx.is_frequent(1000), "the heavy hash must be flagged (cutoff {cutoff})");
        assert!(!idx.is_frequent(1));

        // all unique: nothing flagged even when floor(f*n) > 0
        idx.table.clear();
        for h in 0..10_000u64 {
            idx.table.insert(h, (0, 1));
        }
        idx.apply_frequency_cutoff(FreqCutoff::TopFraction(2e-4));
        assert!(!idx.is_frequent(1));

        // tiny n: floor(f*n) == 0, cutoff exceeds every count
        idx.table.clear();
        for h in 0..100u64 {
            idx.table.insert(h, (0, 1));
        }
        let cutoff = idx.apply_frequency_cutoff(FreqCutoff::TopFraction(2e-4));
        assert_eq!(cutoff, u32::MAX);

        // absolute threshold 1 flags everything
        idx.apply_frequency_cutoff(FreqCutoff::Absolute(1));
        assert!(idx.is_frequent(1));
    }

    #[test]
    fn serialize_round_trip() {
        let bases = random_bases(4000, 2024);
        let b = batch(&[("chr1", &bases), ("chr2 extra", &bases[1000..2500])]);
        let mut idx = build_index(&b, &pat("110"), 13, 7, true).unwrap();
        idx.apply_frequency_cutoff(FreqCutoff::Absolute(100));
        let bytes = idx.serialize();
        let back = SeedIndex::deserialize(&bytes).unwrap();
        assert_eq!(idx, back);
    }

    #[test]
    fn deserialize_rejects_mismatch() {
        let b = batch(&[("s", b"ACGTACGTACGTACGT")]);
        let idx = build_index(&b, &pat("10"), 4, 2, false).unwrap();
        let bytes = idx.serialize();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert_eq!(SeedIndex::deserialize(&bad_magic), Err(IndexError::BadMagic));

        let mut bad_version = bytes.clone();
        bad_version[4] = 99;
        assert!(matches!(
            SeedIndex::deserialize(&bad_version),
            Err(IndexError::VersionMismatch { .. })
        ));

        let loaded = SeedIndex::deserialize(&bytes).unwrap();
        assert!(loaded.check_params(4, 2, &pat("10")).is_ok());
        assert!(loaded.check_params(5, 2, &pat("10")).is_err());
        assert!(loaded.check_params(4, 2, &pat("11")).is_err());
    }

    #[test]
    fn empty_genome_round_trips() {
        let b = ReferenceBatch::new(vec![]);
        let idx = build_index(&b, &pat("10"), 9, 4, true).unwrap();
        assert_eq!(idx.entry_count(), 0);
        let back = SeedIndex::deserialize(&idx.serialize()).unwrap();
        assert_eq!(idx, back);
    }
}
