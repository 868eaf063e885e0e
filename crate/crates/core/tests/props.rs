//! Property tests for pattern application and sketching.

use proptest::prelude::*;

use dietmap_core::pattern::{apply_pattern, DietPattern, PatCode};
use dietmap_core::sketch::{hash_kmer, minimizers, minimizers_batched};

fn arb_bases(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(
        proptest::sample::select(vec![b'A', b'C', b'G', b'T', b'N']),
        0..max_len,
    )
}

fn arb_pattern() -> impl Strategy<Value = String> {
    proptest::sample::select(vec!["1", "11", "10", "110", "100", "101001", "1110"])
        .prop_map(str::to_string)
}

proptest! {
    #[test]
    fn apply_pattern_matches_subsample_oracle(
        bases in arb_bases(300),
        pattern in arb_pattern(),
        shift_seed in 0usize..6,
    ) {
        let pat = DietPattern::parse(&pattern).unwrap();
        let shift = shift_seed % pat.period();
        let ps = apply_pattern(&bases, &pat, shift);

        // oracle: literal walk over the repeated pattern string
        let bits: Vec<char> = pattern.chars().collect();
        let expected: Vec<(Option<u8>, u64)> = bases
            .iter()
            .enumerate()
            .filter(|(i, _)| *i >= shift && bits[(i - shift) % bits.len()] == '1')
            .map(|(i, &b)| {
                let code = match b {
                    b'A' => Some(0),
                    b'C' => Some(1),
                    b'G' => Some(2),
                    b'T' => Some(3),
                    _ => None,
                };
                (code, i as u64)
            })
            .collect();

        prop_assert_eq!(ps.len(), expected.len());
        for (j, code) in ps.iter_codes().enumerate() {
            let got = match code {
                PatCode::Base(c) => Some(c),
                PatCode::Break => None,
            };
            prop_assert_eq!(got, expected[j].0);
            prop_assert_eq!(ps.origin_of(j), expected[j].1);
        }
    }

    #[test]
    fn batched_always_equals_scalar(
        bases in arb_bases(600),
        pattern in arb_pattern(),
        k in 2usize..12,
        w in 1usize..8,
    ) {
        let pat = DietPattern::parse(&pattern).unwrap();
        let ps = apply_pattern(&bases, &pat, 0);
        prop_assert_eq!(minimizers_batched(&ps, k, w), minimizers(&ps, k, w));
    }

    #[test]
    fn window_count_never_increases_with_w(bases in arb_bases(800), k in 2usize..10) {
        let pat = DietPattern::parse("1").unwrap();
        let ps = apply_pattern(&bases, &pat, 0);
        let mut prev = usize::MAX;
        for w in [1usize, 2, 4, 8, 16] {
            let n = minimizers(&ps, k, w).len();
            prop_assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn hash_stays_in_range_and_distinct_inputs_distinct(a in any::<u64>(), b in any::<u64>(), k in 4usize..28) {
        let mask = u64::MAX >> (64 - 2 * k as u32);
        let (a, b) = (a & mask, b & mask);
        prop_assert!(hash_kmer(a, k) <= mask);
        if a != b {
            prop_assert_ne!(hash_kmer(a, k), hash_kmer(b, k));
        }
    }
}
