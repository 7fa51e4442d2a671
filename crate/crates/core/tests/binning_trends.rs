//! Statistical behavior of the binning simulator across block lengths.

use ghzdist::binning::{run_omniscience, typical_set, SimConfig};
use ghzdist::pmf::JointPmf;
use ghzdist::region::{build_region_classical, contains};

fn w3_pmf() -> JointPmf {
    let mut probs = vec![0.0; 8];
    probs[0b001] = 1.0 / 3.0;
    probs[0b010] = 1.0 / 3.0;
    probs[0b100] = 1.0 / 3.0;
    JointPmf::new(vec![2, 2, 2], probs).unwrap()
}

fn median_error(rates: &[f64], n: usize, seeds: std::ops::Range<u64>) -> f64 {
    let mut errs: Vec<f64> = seeds
        .map(|seed| {
            let cfg = SimConfig {
                pmf: w3_pmf(),
                rates: rates.to_vec(),
                n,
                trials: 400,
                delta: 0.2,
                seed,
            };
            run_omniscience(&cfg).unwrap().error_rate
        })
        .collect();
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    errs[errs.len() / 2]
}

#[test]
fn inside_point_error_decays_with_block_length() {
    // (0.45, 0.45, 0.45) sits 0.23 bits inside every pair constraint and
    // 0.45 inside the singletons.
    let rates = [0.45, 0.45, 0.45];
    let region = build_region_classical(&w3_pmf()).unwrap();
    assert!(contains(&region, &rates, 0.15));

    let medians: Vec<f64> = [6usize, 9, 12]
        .iter()
        .map(|&n| median_error(&rates, n, 0..5))
        .collect();
    for w in medians.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-12,
            "medians not nonincreasing: {medians:?}"
        );
    }
}

#[test]
fn outside_point_error_stays_high() {
    // violates the pair constraints by at least 0.15
    let rates = [0.0, 0.2, 0.2];
    let region = build_region_classical(&w3_pmf()).unwrap();
    assert!(!contains(&region, &rates, -0.15));
    for n in [6usize, 9, 12] {
        let med = median_error(&rates, n, 0..5);
        assert!(med >= 0.4, "n={n}: median {med}");
    }
}

#[test]
fn atypical_error_bounded_by_complement_probability() {
    // The atypical counter is an unbiased estimate of 1 - P(T); the 1e-2
    // slack needs a few thousand trials to clear the binomial noise.
    for (n, trials, seed) in [(6usize, 4000usize, 5u64), (9, 4000, 4), (12, 1500, 1)] {
        let cfg = SimConfig {
            pmf: w3_pmf(),
            rates: vec![0.45, 0.45, 0.45],
            n,
            trials,
            delta: 0.2,
            seed,
        };
        let res = run_omniscience(&cfg).unwrap();
        let set = typical_set(&cfg.pmf, n, cfg.delta).unwrap();
        let complement = 1.0 - set.total_probability();
        assert!(
            res.err_atypical as f64 / res.trials as f64 <= complement + 1e-2,
            "n={n}: {} atypical of {} vs complement {complement}",
            res.err_atypical,
            res.trials
        );
    }
}
