//! SAM v1.6 output: header and alignment records.

use std::io::{self, Write};

use dietmap_core::align::{AlignmentRecord, RecordClass};
use dietmap_core::sketch::Strand;

pub const FLAG_UNMAPPED: u16 = 0x4;
pub const FLAG_REVERSE: u16 = 0x10;
pub const FLAG_SECONDARY: u16 = 0x100;
pub const FLAG_SUPPLEMENTARY: u16 = 0x800;

/// Reference dictionary and provenance for the header.
#[derive(Debug, Clone)]
pub struct SamHeader {
    pub ref_names: Vec<String>,
    pub ref_lens: Vec<u64>,
    pub program_version: String,
    pub command_line: String,
}

impl SamHeader {
    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "@HD\tVN:1.6\tSO:unsorted")?;
        for (name, len) in self.ref_names.iter().zip(&self.ref_lens) {
            writeln!(out, "@SQ\tSN:{name}\tLN:{len}")?;
        }
        writeln!(
            out,
            "@PG\tID:dietmap\tPN:dietmap\tVN:{}\tCL:{}",
            self.program_version, self.command_line
        )
    }
}

fn flags_of(rec: &AlignmentRecord) -> u16 {
    let mut f = 0u16;
    if rec.class == RecordClass::Unmapped {
        return FLAG_UNMAPPED;
    }
    if rec.strand == Strand::Reverse {
        f |= FLAG_REVERSE;
    }
    match rec.class {
        RecordClass::Secondary => f |= FLAG_SECONDARY,
        RecordClass::Supplementary => f |= FLAG_SUPPLEMENTARY,
        _ => {}
    }
    f
}

/// Writes one alignment line. `oriented_seq`/`oriented_qual` must already be
/// in reference orientation (reverse-complemented/reversed for reverse-strand
/// records); secondaries get `*` for both.
pub fn write_record<W: Write>(
    out: &mut W,
    read_name: &str,
    rec: &AlignmentRecord,
    header: &SamHeader,
    oriented_seq: &[u8],
    oriented_qual: Option<&[u8]>,
) -> io::Result<()> {
    let flags = flags_of(rec);
    if rec.class == RecordClass::Unmapped {
        write!(out, "{read_name}\t{flags}\t*\t0\t0\t*\t*\t0\t0\t")?;
        out.write_all(oriented_seq)?;
        out.write_all(b"\t")?;
        out.write_all(oriented_qual.unwrap_or(b"*"))?;
        return writeln!(out);
    }
    let rname = &header.ref_names[rec.ref_id];
    write!(
        out,
        "{read_name}\t{flags}\t{rname}\t{pos}\t{mapq}\t{cigar}\t*\t0\t0\t",
        pos = rec.ref_pos + 1,
        mapq = rec.mapq,
        cigar = rec.cigar,
    )?;
    if rec.class == RecordClass::Secondary {
        out.write_all(b"*\t*")?;
    } else {
        out.write_all(oriented_seq)?;
        out.write_all(b"\t")?;
        out.write_all(oriented_qual.unwrap_or(b"*"))?;
    }
    write!(
        out,
        "\tAS:i:{}\tNM:i:{}\ts1:i:{}",
        rec.score,
        rec.n_diff + rec.cigar.indel_bases(),
        rec.votes
    )?;
    if rec.rescued {
        write!(out, "\trc:i:1")?;
    }
    writeln!(out)
}
