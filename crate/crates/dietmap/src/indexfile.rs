//! Filesystem wrappers around the binary seed-index format.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use anyhow::Context;

use dietmap_core::index::{SeedIndex, INDEX_MAGIC};

pub fn write_index(path: &Path, idx: &SeedIndex) -> io::Result<()> {
    fs::write(path, idx.serialize())
}

pub fn read_index(path: &Path) -> anyhow::Result<SeedIndex> {
    let bytes = fs::read(path).with_context(|| format!("reading index {}", path.display()))?;
    SeedIndex::deserialize(&bytes).with_context(|| format!("parsing index {}", path.display()))
}

/// Whether the file starts with the index magic (as opposed to FASTA).
pub fn is_index_file(path: &Path) -> bool {
    let Ok(mut f) = fs::File::open(path) else {
        return false;
    };
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic).is_ok() && magic == INDEX_MAGIC
}
