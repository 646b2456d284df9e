//! Property-based invariants of the entropic primitives, sampled over
//! Hilbert-Schmidt random states.

use proptest::prelude::*;

use multires_core::{
    random_density, relative_entropy, trace_distance, von_neumann_entropy, DensityMatrix,
    ExtendedReal,
};

fn finite(d: ExtendedReal) -> f64 {
    d.expect_finite()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relative_entropy_nonnegative_and_faithful(seed in 0u64..10_000, dim in 2usize..5) {
        let rho = random_density(dim, seed);
        let sigma = random_density(dim, seed.wrapping_add(7919));
        let d = finite(relative_entropy(&rho, &sigma).unwrap());
        prop_assert!(d >= -1e-10, "negative divergence {d}");
        // Faithfulness in the other direction: D = 0 forces coincidence.
        if d <= 1e-8 {
            prop_assert!(trace_distance(&rho, &sigma).unwrap() <= 1e-3);
        }
        let self_d = finite(relative_entropy(&rho, &rho).unwrap());
        prop_assert!(self_d.abs() <= 1e-10);
    }

    #[test]
    fn data_processing_under_partial_trace(seed in 0u64..10_000) {
        let rho = wrap_pair(random_density(4, seed));
        let sigma = wrap_pair(random_density(4, seed.wrapping_add(31337)));
        let full = finite(relative_entropy(&rho, &sigma).unwrap());
        let reduced = finite(relative_entropy(
            &rho.partial_trace(&[0]).unwrap(),
            &sigma.partial_trace(&[0]).unwrap(),
        ).unwrap());
        prop_assert!(reduced <= full + 1e-9, "contraction violated: {reduced} > {full}");
    }

    #[test]
    fn joint_convexity(seed in 0u64..10_000, lambda in 0.0f64..1.0) {
        let r1 = random_density(3, seed);
        let r2 = random_density(3, seed.wrapping_add(101));
        let s1 = random_density(3, seed.wrapping_add(202));
        let s2 = random_density(3, seed.wrapping_add(303));
        let mixed = finite(relative_entropy(
            &r1.mix(&r2, lambda).unwrap(),
            &s1.mix(&s2, lambda).unwrap(),
        ).unwrap());
        let avg = lambda * finite(relative_entropy(&r1, &s1).unwrap())
            + (1.0 - lambda) * finite(relative_entropy(&r2, &s2).unwrap());
        prop_assert!(mixed <= avg + 1e-9, "joint convexity violated: {mixed} > {avg}");
    }

    #[test]
    fn additivity_over_tensor_products(seed in 0u64..10_000) {
        let r1 = random_density(2, seed);
        let r2 = random_density(3, seed.wrapping_add(11));
        let s1 = random_density(2, seed.wrapping_add(23));
        let s2 = random_density(3, seed.wrapping_add(37));
        let joint = finite(relative_entropy(&r1.tensor(&r2), &s1.tensor(&s2)).unwrap());
        let parts = finite(relative_entropy(&r1, &s1).unwrap())
            + finite(relative_entropy(&r2, &s2).unwrap());
        prop_assert!((joint - parts).abs() <= 1e-9, "additivity off by {}", joint - parts);
    }

    #[test]
    fn entropy_bounds(seed in 0u64..10_000, dim in 2usize..6) {
        let rho = random_density(dim, seed);
        let s = von_neumann_entropy(&rho);
        prop_assert!(s >= -1e-10);
        prop_assert!(s <= (dim as f64).log2() + 1e-10);
    }

    #[test]
    fn trace_distance_is_a_metric_sample(seed in 0u64..10_000) {
        let a = random_density(3, seed);
        let b = random_density(3, seed.wrapping_add(1));
        let c = random_density(3, seed.wrapping_add(2));
        let ab = trace_distance(&a, &b).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        prop_assert!((trace_distance(&b, &a).unwrap() - ab).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-10);
    }
}

fn wrap_pair(rho: DensityMatrix) -> DensityMatrix {
    DensityMatrix::new(rho.entries().clone(), vec![2, 2]).unwrap()
}
