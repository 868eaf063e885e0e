//! Nucleotide sequences and reference batches.

use alloc::string::String;
use alloc::vec::Vec;

/// A named DNA sequence over the alphabet `{A,C,G,T,N}`.
///
/// Construction normalizes the input: lowercase is folded to uppercase and
/// any letter outside `ACGT` (IUPAC ambiguity codes included) becomes `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NucSequence {
    pub name: String,
    pub bases: Vec<u8>,
}

impl NucSequence {
    pub fn new(name: impl Into<String>, raw: impl AsRef<[u8]>) -> Self {
        NucSequence {
            name: name.into(),
            bases: normalize(raw.as_ref()),
        }
    }

    /// Builds from bases that are already normalized uppercase `ACGTN`.
    pub fn from_normalized(name: impl Into<String>, bases: Vec<u8>) -> Self {
        debug_assert!(bases.iter().all(|&b| matches!(b, b'A' | b'C' | b'G' | b'T' | b'N')));
        NucSequence { name: name.into(), bases }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Uppercases and maps every non-ACGT letter to `N`.
pub fn normalize(raw: &[u8]) -> Vec<u8> {
    raw.iter().map(|&b| normalize_base(b)).collect()
}

#[inline]
pub fn normalize_base(b: u8) -> u8 {
    match b.to_ascii_uppercase() {
        c @ (b'A' | b'C' | b'G' | b'T') => c,
        _ => b'N',
    }
}

#[inline]
pub fn complement(b: u8) -> u8 {
    match b {
        b'A' => b'T',
        b'C' => b'G',
        b'G' => b'C',
        b'T' => b'A',
        _ => b'N',
    }
}

pub fn reverse_complement(bases: &[u8]) -> Vec<u8> {
    bases.iter().rev().map(|&b| complement(b)).collect()
}

/// A group of reference sequences indexed and searched together, packed
/// greedily up to a base-count limit so that very large references can be
/// streamed in bounded slices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceBatch {
    pub sequences: Vec<NucSequence>,
    pub total_bases: u64,
    /// Cumulative start offset of each sequence in the batch-global
    /// coordinate space; `global_offsets[0] == 0`.
    pub global_offsets: Vec<u64>,
}

impl ReferenceBatch {
    pub fn new(sequences: Vec<NucSequence>) -> Self {
        let mut global_offsets = Vec::with_capacity(sequences.len());
        let mut total = 0u64;
        for s in &sequences {
            global_offsets.push(total);
            total += s.len() as u64;
        }
        ReferenceBatch { sequences, total_bases: total, global_offsets }
    }

    /// Resolves a batch-global coordinate to `(sequence index, local offset)`.
    pub fn locate(&self, global: u64) -> (usize, u64) {
        debug_assert!(global < self.total_bases);
        let idx = match self.global_offsets.binary_search(&global) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (idx, global - self.global_offsets[idx])
    }

    /// Global half-open range occupied by sequence `idx`.
    pub fn sequence_range(&self, idx: usize) -> (u64, u64) {
        let start = self.global_offsets[idx];
        (start, start + self.sequences[idx].len() as u64)
    }
}
