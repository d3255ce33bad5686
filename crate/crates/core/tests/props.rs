//! Property tests for the counting and numeric primitives.

use proptest::prelude::*;
use sparse_sd::complexity::{count_binary, pair_count};
use sparse_sd::model::{enumerate_sparse, sparse_set_count, Alphabet};
use sparse_sd::numerics::{binomial, regularized_gamma};

proptest! {
    #[test]
    fn pascal_rule(n in 1u64..40, k in 0i64..40) {
        let lhs = binomial(n, k).unwrap();
        let rhs = binomial(n - 1, k - 1).unwrap() + binomial(n - 1, k).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gamma_monotone(shape in 0.2f64..30.0, x1 in 0.0f64..60.0, x2 in 0.0f64..60.0) {
        let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        let a = regularized_gamma(shape, lo).unwrap();
        let b = regularized_gamma(shape, hi).unwrap();
        prop_assert!(a <= b + 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn enumeration_yields_distinct_sparse_vectors(k in 1usize..8, l in 0usize..8) {
        let l = l.min(k);
        let alphabet = Alphabet::ternary();
        let mut seen = std::collections::HashSet::new();
        let mut count = 0u128;
        let mut prev: Option<Vec<i64>> = None;
        for v in enumerate_sparse(k, l, &alphabet).unwrap() {
            prop_assert!(v.iter().filter(|&&s| s != 0).count() <= l);
            if let Some(p) = &prev {
                prop_assert!(p < &v, "not lexicographically increasing");
            }
            prev = Some(v.clone());
            prop_assert!(seen.insert(v));
            count += 1;
        }
        prop_assert_eq!(count, sparse_set_count(k, l, &alphabet).unwrap());
    }

    #[test]
    fn binary_count_never_exceeds_weight_class(
        k in 1usize..10,
        k1 in 0usize..10,
        k2 in 0usize..10,
        eta in 0i64..12,
    ) {
        prop_assume!(k1 <= k && k2 <= k);
        let g = count_binary(k1, k2, k, eta);
        prop_assert!(g <= binomial(k as u64, k2 as i64).unwrap());
    }

    #[test]
    fn pair_count_dimension_swap(
        k in 1usize..6,
        l in 1usize..6,
        beta in 0i64..5,
        eta in 0i64..5,
        gamma in 0i64..5,
        a in 0i64..5,
        u in 0i64..4,
        v in 0i64..4,
    ) {
        prop_assert_eq!(
            pair_count(k, l, 2, beta, eta, gamma, a, u, v),
            pair_count(l, k, 2, beta, eta, gamma, a, u, v)
        );
    }
}
