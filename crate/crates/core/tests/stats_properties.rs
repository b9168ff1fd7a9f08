use codesum_eval::stats::{paired_bootstrap, BootstrapConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vectors(seed: u64, n: usize, gap: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| r.gen::<f64>() + gap).collect();
    let b: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn p_decreases_with_offset(seed in any::<u64>(), n in 5usize..60) {
        let (mut a, b) = vectors(seed, n, 0.0);
        let (ma, mb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
        if ma < mb {
            // start from a non-negative difference so roles never swap
            let shift = (mb - ma) / n as f64;
            a.iter_mut().for_each(|x| *x += shift);
        }
        let cfg = BootstrapConfig { resamples: 2000, ..BootstrapConfig::new(seed) };
        let mut last = f64::INFINITY;
        for k in 0..8 {
            let off = k as f64 * 0.02;
            let shifted: Vec<f64> = a.iter().map(|x| x + off).collect();
            let p = paired_bootstrap(&shifted, &b, &cfg).unwrap();
            prop_assert!(p <= last, "offset {off}: {p} > {last}");
            last = p;
        }
    }

    #[test]
    fn p_in_unit_interval(seed in any::<u64>(), n in 2usize..30, gap in -1.0f64..1.0) {
        let (a, b) = vectors(seed, n, gap);
        let p = paired_bootstrap(&a, &b, &BootstrapConfig { resamples: 1000, ..BootstrapConfig::new(seed) }).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn joint_permutation_changes_p_by_noise_only() {
    let cfg = BootstrapConfig::new(42);
    for (seed, gap) in [(1, 0.02), (2, 0.05), (3, 0.0), (4, 0.1), (5, -0.03)] {
        let (a, b) = vectors(seed, 80, gap);
        let mut order: Vec<usize> = (0..80).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 100));
        let pa: Vec<f64> = order.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = order.iter().map(|&i| b[i]).collect();
        let d0 = a.iter().sum::<f64>() - b.iter().sum::<f64>();
        let d1 = pa.iter().sum::<f64>() - pb.iter().sum::<f64>();
        assert!((d0 - d1).abs() < 1e-9);
        let p0 = paired_bootstrap(&a, &b, &cfg).unwrap();
        let p1 = paired_bootstrap(&pa, &pb, &cfg).unwrap();
        assert!((p0 - p1).abs() < 0.02, "seed {seed}: {p0} vs {p1}");
    }
}

/// Direct simulation of the resampling distribution for identical systems.
#[test]
fn identical_systems_match_simulation() {
    let (a, _) = vectors(9, 50, 0.0);
    let p = paired_bootstrap(&a, &a, &BootstrapConfig::new(3)).unwrap();
    // every resampled difference is exactly 0 = 2δ, so each counts half
    assert_eq!(p, 0.5);
}
