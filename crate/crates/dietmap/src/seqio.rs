//! FASTA/FASTQ parsing (plain or gzip, auto-detected) and greedy reference
//! batching.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flate2::bufread::MultiGzDecoder;
use thiserror::Error;

use dietmap_core::seq::{normalize, NucSequence, ReferenceBatch};

#[derive(Debug, Error)]
pub enum SeqIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed FASTA header at byte {offset}: record must start with '>'")]
    BadFastaHeader { offset: u64 },
    #[error("empty record {name:?}: header with no sequence")]
    EmptyRecord { name: String },
    #[error("malformed FASTQ record {name:?} at byte {offset}: {what}")]
    BadFastq { name: String, offset: u64, what: &'static str },
    #[error("quality length {qual} does not match sequence length {seq} in record {name:?}")]
    QualityLengthMismatch { name: String, seq: usize, qual: usize },
    #[error("cannot tell FASTA from FASTQ: input starts with {0:?}")]
    UnknownFormat(char),
}

/// Opens a file for reading, transparently decoding gzip (sniffed from the
/// two magic bytes).
pub fn open_reader(path: &Path) -> std::io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    let mut buf = BufReader::new(file);
    let head = buf.fill_buf()?;
    if head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(buf))))
    } else {
        Ok(Box::new(buf))
    }
}

fn first_token(line: &str) -> String {
    line.split_whitespace().next().unwrap_or("").to_string()
}

/// Streaming FASTA parser. Multi-line records are concatenated, lowercase is
/// folded to uppercase, and any letter outside `ACGT` becomes `N`.
pub struct FastaReader<R: BufRead> {
    inner: R,
    offset: u64,
    pending_name: Option<String>,
    done: bool,
}

impl<R: BufRead> FastaReader<R> {
    pub fn new(inner: R) -> Self {
        FastaReader { inner, offset: 0, pending_name: None, done: false }
    }

    fn next_line(&mut self, line: &mut String) -> std::io::Result<usize> {
        line.clear();
        let n = self.inner.read_line(line)?;
        self.offset += n as u64;
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        Ok(n)
    }
}

impl<R: BufRead> Iterator for FastaReader<R> {
    type Item = Result<NucSequence, SeqIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut line = String::new();
        // find this record's header
        let name = loop {
            match self.pending_name.take() {
                Some(name) => break name,
                None => {
                    let header_offset = self.offset;
                    match self.next_line(&mut line) {
                        Ok(0) => {
                            self.done = true;
                            return None;
                        }
                        Ok(_) => {
                            if line.is_empty() {
                                continue;
                            }
                            if let Some(rest) = line.strip_prefix('>') {
                                break first_token(rest);
                            }
                            self.done = true;
                            return Some(Err(SeqIoError::BadFastaHeader {
                                offset: header_offset,
                            }));
                        }
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e.into()));
                        }
                    }
                }
            }
        };
        let mut bases: Vec<u8> = Vec::new();
        loop {
            match self.next_line(&mut line) {
                Ok(0) => {
                    self.done = true;
                    break;
                }
                Ok(_) => {
                    if let Some(rest) = line.strip_prefix('>') {
                        self.pending_name = Some(first_token(rest));
                        break;
                    }
                    bases.extend(normalize(line.as_bytes()));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        if bases.is_empty() {
            self.done = true;
            return Some(Err(SeqIoError::EmptyRecord { name }));
        }
        Some(Ok(NucSequence::from_normalized(name, bases)))
    }
}

/// A sequencing read: normalized bases plus the raw quality string when the
/// source was FASTQ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadRecord {
    pub name: String,
    pub bases: Vec<u8>,
    pub qual: Option<Vec<u8>>,
}

/// Streaming 4-line FASTQ parser.
pub struct FastqReader<R: BufRead> {
    inner: R,
    offset: u64,
    done: bool,
}

impl<R: BufRead> FastqReader<R> {
    pub fn new(inner: R) -> Self {
        FastqReader { inner, offset: 0, done: false }
    }

    fn next_line(&mut self, line: &mut String) -> std::io::Result<usize> {
        line.clear();
        let n = self.inner.read_line(line)?;
        self.offset += n as u64;
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        Ok(n)
    }
}

impl<R: BufRead> Iterator for FastqReader<R> {
    type Item = Result<ReadRecord, SeqIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut line = String::new();
        let record_offset = self.offset;
        loop {
            match self.next_line(&mut line) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) if line.is_empty() => continue,
                Ok(_) => break,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        let fail = |name: String, offset, what| {
            Some(Err(SeqIoError::BadFastq { name, offset, what }))
        };
        let Some(rest) = line.strip_prefix('@') else {
            self.done = true;
            return fail(first_token(&line), record_offset, "record must start with '@'");
        };
        let name = first_token(rest);
        let mut seq_line = String::new();
        let mut plus_line = String::new();
        let mut qual_line = String::new();
        for (buf, what) in [
            (&mut seq_line, "missing sequence line"),
            (&mut plus_line, "missing '+' line"),
            (&mut qual_line, "missing quality line"),
        ] {
            match self.next_line(buf) {
                Ok(0) => {
                    self.done = true;
                    return fail(name, record_offset, what);
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        if !plus_line.starts_with('+') {
            self.done = true;
            return fail(name, record_offset, "separator line must start with '+'");
        }
        if qual_line.len() != seq_line.len() {
            self.done = true;
            return Some(Err(SeqIoError::QualityLengthMismatch {
                name,
                seq: seq_line.len(),
                qual: qual_line.len(),
            }));
        }
        Some(Ok(ReadRecord {
            name,
            bases: normalize(seq_line.as_bytes()),
            qual: Some(qual_line.into_bytes()),
        }))
    }
}

/// Reads a whole FASTA or FASTQ file of reads, sniffing the format from the
/// first byte. An empty file yields no reads.
pub fn read_reads(path: &Path) -> Result<Vec<ReadRecord>, SeqIoError> {
    let mut reader = open_reader(path)?;
    let head = reader.fill_buf()?;
    let Some(&first) = head.first() else {
        return Ok(Vec::new());
    };
    match first as char {
        '@' => FastqReader::new(reader).collect(),
        '>' => FastaReader::new(reader)
            .map(|r| r.map(|s| ReadRecord { name: s.name, bases: s.bases, qual: None }))
            .collect(),
        other => Err(SeqIoError::UnknownFormat(other)),
    }
}

/// Greedy packing of reference sequences into batches of at most `limit`
/// bases, in input order, never splitting a sequence. A single sequence
/// longer than the limit becomes its own oversized batch with a warning.
pub struct BatchReferences<I> {
    inner: I,
    limit: u64,
    carry: Option<NucSequence>,
    done: bool,
}

pub fn batch_references<I>(refs: I, limit: u64) -> BatchReferences<I::IntoIter>
where
    I: IntoIterator<Item = Result<NucSequence, SeqIoError>>,
{
    BatchReferences { inner: refs.into_iter(), limit, carry: None, done: false }
}

impl<I: Iterator<Item = Result<NucSequence, SeqIoError>>> Iterator for BatchReferences<I> {
    type Item = Result<ReferenceBatch, SeqIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut group: Vec<NucSequence> = Vec::new();
        let mut total = 0u64;
        if let Some(seq) = self.carry.take() {
            total = seq.len() as u64;
            group.push(seq);
        }
        loop {
            match self.inner.next() {
                Some(Ok(seq)) => {
                    let len = seq.len() as u64;
                    if len > self.limit && group.is_empty() {
                        log::warn!(
                            "sequence {:?} ({len} bases) exceeds the batch limit {}; \
                             keeping it whole in an oversized batch",
                            seq.name,
                            self.limit
                        );
                        return Some(Ok(ReferenceBatch::new(vec![seq])));
                    }
                    if total + len > self.limit && !group.is_empty() {
                        self.carry = Some(seq);
                        return Some(Ok(ReferenceBatch::new(group)));
                    }
                    total += len;
                    group.push(seq);
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                None => {
                    self.done = true;
                    if group.is_empty() {
                        return None;
                    }
                    return Some(Ok(ReferenceBatch::new(group)));
                }
            }
        }
    }
}
