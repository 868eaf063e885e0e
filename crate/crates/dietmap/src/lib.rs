//! Sparsified read mapping, containment search, and seeding benchmarks
//! driven by user-defined diet patterns. This crate carries the IO, file
//! formats, parallel runners, and CLI; the algorithms live in
//! `dietmap-core`.

pub mod benchrun;
pub mod containrun;
pub mod indexfile;
pub mod pipeline;
pub mod samout;
pub mod seqio;

pub use dietmap_core as core;

/// Parses a base count with optional K/M/G multiplier (powers of 1000),
/// e.g. `8G`, `500K`, `30000000`.
pub fn parse_base_count(text: &str) -> Result<u64, String> {
    let text = text.trim();
    let (digits, mult) = match text.chars().last() {
        Some('k') | Some('K') => (&text[..text.len() - 1], 1_000u64),
        Some('m') | Some('M') => (&text[..text.len() - 1], 1_000_000),
        Some('g') | Some('G') => (&text[..text.len() - 1], 1_000_000_000),
        _ => (text, 1),
    };
    let value: f64 = digits.parse().map_err(|_| format!("invalid base count {text:?}"))?;
    if value < 0.0 {
        return Err(format!("base count must be non-negative: {text:?}"));
    }
    Ok((value * mult as f64) as u64)
}
