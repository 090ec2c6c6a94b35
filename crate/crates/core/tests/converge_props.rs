mod common;

use common::random_real;
use eqsym::converge::{
    annulus_grid, generator_convergence_audit, geometric_convergence_audit, hausdorff,
    spiral_orbit_demo, GeneratorSequence, MatCloud,
};
use eqsym::linalg::{frobenius, Mat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, d: usize) -> MatCloud {
    let n = rng.random_range(1..=12);
    MatCloud::new((0..n).map(|_| random_real(rng, d, d)).collect(), 10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_is_a_pseudometric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=3);
        let (a, b, c) = (random_cloud(&mut rng, d), random_cloud(&mut rng, d), random_cloud(&mut rng, d));
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let (bc, ac) = (hausdorff(&b, &c).unwrap(), hausdorff(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn constant_sequences_audit_to_zero(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cloud = random_cloud(&mut rng, 2);
        let audit = geometric_convergence_audit(&vec![cloud.clone(); 3], &cloud).unwrap();
        prop_assert!(audit.cond1_sup.iter().chain(&audit.cond2_residual).all(|&x| x == 0.0));
    }

    /// `‖w(A) − w(B)‖ ≤ k δ M^{k−1}` for words of length `k`.
    #[test]
    fn word_deviations_are_telescoping_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=3);
        let arity = rng.random_range(1..=2);
        let limit: Vec<Mat> = (0..arity).map(|_| random_real(&mut rng, d, d)).collect();
        let steps: Vec<Vec<Mat>> = (0..3)
            .map(|_| limit.iter().map(|g| g + random_real(&mut rng, d, d) * eqsym::linalg::c(0.05)).collect())
            .collect();
        let gs = GeneratorSequence::new(steps.clone(), limit.clone()).unwrap();
        let audit = generator_convergence_audit(&gs, 5);
        for (n, row) in audit.deviations.iter().enumerate() {
            let delta = audit.generator_gap[n];
            let m = steps[n].iter().chain(&limit).map(frobenius).fold(0.0, f64::max);
            for (w, &dev) in audit.words.iter().zip(row) {
                let k = w.len() as i32;
                prop_assert!(dev <= k as f64 * delta * m.powi(k - 1) * 1.01 + 1e-14);
            }
        }
    }
}

#[test]
fn spiral_coverage_nonincreasing_in_samples() {
    let grid = annulus_grid(4, 16, 0.5, 2.0);
    let mut prev = f64::INFINITY;
    // n -> 2n - 1 refines the sample grid, keeping every earlier sample
    let mut n = 257;
    while n <= 65_537 {
        let r = spiral_orbit_demo(0.05, (-40.0, 40.0), n, &grid).unwrap();
        assert!(r.coverage <= prev + 1e-12, "n = {n}");
        prev = r.coverage;
        n = 2 * n - 1;
    }
}
