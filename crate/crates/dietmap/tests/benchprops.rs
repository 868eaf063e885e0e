//! Statistical properties of the seeding benchmark.

use dietmap::benchrun::{run_benchmark, BenchCombo, BenchOptions};
use dietmap_core::seedbench::SeedAlgo;

/// Mean matching rate over edit-distance bins is non-increasing for the
/// all-seeds and diet schemes (small slack for binning noise).
#[test]
fn mean_rate_decreases_with_edit_distance() {
    let opts = BenchOptions {
        combos: vec![BenchCombo { k: 8, w: 6, pattern: "100".into() }],
        pairs: 500,
        len: 1000,
        max_subs: 400,
        seed: 4242,
        edit_thresholds: vec![],
        threads: 2,
    };
    let mut sink = Vec::new();
    let outcomes = run_benchmark(&opts, &mut sink).unwrap();
    let reports = &outcomes[0].reports;

    const BIN: usize = 50;
    for algo in [SeedAlgo::All, SeedAlgo::Diet] {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for r in reports {
            let bin = r.edit_distance / BIN;
            if sums.len() <= bin {
                sums.resize(bin + 1, (0.0, 0));
            }
            if let Some(rate) = r.rate(algo) {
                sums[bin].0 += rate;
                sums[bin].1 += 1;
            }
        }
        let means: Vec<f64> = sums
            .iter()
            .filter(|(_, n)| *n >= 5)
            .map(|(s, n)| s / *n as f64)
            .collect();
        assert!(means.len() >= 4, "{algo}: too few populated bins");
        for pair in means.windows(2) {
            assert!(
                pair[1] <= pair[0] + 0.02,
                "{algo}: bin means increased: {:?}",
                means
            );
        }
    }

    // zero-edit pairs always match perfectly under all and minimizers
    for r in reports.iter().filter(|r| r.edit_distance == 0) {
        assert_eq!(r.rate_all, Some(1.0));
        assert_eq!(r.rate_minimizers, Some(1.0));
    }
}
