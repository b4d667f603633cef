//! Property tests for the metric, quadratic-form and simplex invariants.

mod common;

use nalgebra::DVector;
use negtype::metric::{self, power_matrix, MetricSpace, NormOrder};
use negtype::polyeq::{gap, reduce, simplex_to_vector, vector_to_simplex, witness_at, witness_ivt, ReducedKind};
use negtype::quadform::{
    basis_matrix, classify, quad_form, supremal, BalancedVector, Classification, SupremalOptions, SupremalStatus,
};
use negtype::{verify_equality, PolyEqError, SignedSimplex};
use proptest::prelude::*;

use common::{oracle_lambda_max, random_balanced, random_space, rng};

fn space_strategy() -> impl Strategy<Value = MetricSpace> {
    (2usize..=8, any::<u64>()).prop_map(|(m, seed)| random_space(m, &mut rng(seed)))
}

fn simplex_strategy(m: usize) -> impl Strategy<Value = SignedSimplex> {
    let entry = (0..m, prop_oneof![Just(0.0), -3.0f64..3.0]);
    (prop::collection::vec(entry.clone(), 0..6), prop::collection::vec(entry, 1..6)).prop_map(|(left, mut right)| {
        // Balance by adjusting the last right weight.
        let l: f64 = left.iter().map(|w| w.1).sum();
        let r: f64 = right[..right.len() - 1].iter().map(|w| w.1).sum();
        let last = right.len() - 1;
        right[last].1 = l - r;
        SignedSimplex::new(left, right)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_spaces_validate(space in space_strategy()) {
        prop_assert!(MetricSpace::from_matrix(&space.rows()).is_ok());
    }

    #[test]
    fn random_ultrametrics_are_ultrametric(n in 2usize..12, seed in any::<u64>()) {
        prop_assert!(metric::is_ultrametric(&metric::random_ultrametric(n, seed).unwrap()));
    }

    #[test]
    fn power_entries_monotone_for_long_distances(space in space_strategy(), p in 0.0f64..6.0, dp in 0.0f64..3.0) {
        let big = space.scaled(1.0 / space.rows().iter().flatten().copied().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min));
        let a = power_matrix(&big, p).unwrap();
        let b = power_matrix(&big, p + dp).unwrap();
        for i in 0..big.len() {
            prop_assert_eq!(a.entries[(i, i)], 0.0);
            prop_assert_eq!(b.entries[(i, i)], 0.0);
            for j in 0..big.len() {
                if i != j {
                    prop_assert!(b.entries[(i, j)] >= a.entries[(i, j)] * (1.0 - 1e-15));
                }
            }
        }
    }

    #[test]
    fn unit_path_graphs_are_integer_lines(n in 2usize..20) {
        let x = metric::path_graph(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(x.dist(i, j), (i as f64 - j as f64).abs());
            }
        }
    }

    #[test]
    fn classification_is_permutation_equivariant(space in space_strategy(), seed in any::<u64>(), p in 0.0f64..5.0) {
        let perm = metric::random_permutation(space.len(), seed);
        let y = space.permuted(&perm).unwrap();
        let a = classify(&space, p, None).unwrap();
        let b = classify(&y, p, None).unwrap();
        prop_assert!((a.lambda_max - b.lambda_max).abs() <= 1e-9 * a.lambda_max.abs().max(1.0));
    }

    #[test]
    fn restriction_matches_form(space in space_strategy(), p in 0.0f64..6.0, seed in any::<u64>()) {
        use rand::Rng;
        let m = space.len();
        let b = basis_matrix(m).unwrap();
        let dp = power_matrix(&space, p).unwrap().entries;
        let restricted = b.transpose() * &dp * &b;
        let mut r = rng(seed);
        for _ in 0..1000 / 64 + 1 {
            let v = DVector::from_fn(m - 1, |_, _| r.random_range(-1.0..1.0)).normalize();
            let xi = BalancedVector::project(&(&b * &v));
            let direct = quad_form(&space, p, &xi).unwrap();
            let via = v.dot(&(&restricted * &v));
            prop_assert!((direct - via).abs() <= 1e-10 * direct.abs().max(via.abs()).max(dp.amax()));
        }
    }

    #[test]
    fn lambda_max_agrees_with_jacobi_oracle(space in space_strategy(), p in 0.0f64..6.0) {
        let report = classify(&space, p, None).unwrap();
        let oracle = oracle_lambda_max(&space, p);
        let scale = power_matrix(&space, p).unwrap().entries.amax().max(1.0);
        prop_assert!((report.lambda_max - oracle).abs() <= 1e-9 * scale, "{} vs {}", report.lambda_max, oracle);
    }

    #[test]
    fn negative_type_set_is_an_initial_interval(space in space_strategy(), p in 0.0f64..6.0, dq in 0.0f64..3.0) {
        let hi = classify(&space, p + dq, None).unwrap().classification;
        let lo = classify(&space, p, None).unwrap().classification;
        if hi != Classification::NotNegType {
            prop_assert_ne!(lo, Classification::NotNegType);
        }
    }

    #[test]
    fn lambda_at_zero_is_negative(space in space_strategy()) {
        prop_assert!(classify(&space, 0.0, None).unwrap().lambda_max < 0.0);
    }

    #[test]
    fn finite_brackets_are_tight(space in space_strategy()) {
        let sup = supremal(&space, SupremalOptions::default()).unwrap();
        if sup.status == SupremalStatus::Finite {
            let mid = sup.estimate().unwrap();
            prop_assert!(sup.lo > 0.0);
            prop_assert!(sup.hi - sup.lo <= sup.width_tol);
            if mid > 0.01 {
                prop_assert_eq!(classify(&space, mid - 0.01, None).unwrap().classification, Classification::Strict);
            }
            let at = classify(&space, mid, None).unwrap();
            prop_assert!(at.lambda_max.abs() <= 10.0 * at.epsilon, "{} vs eps {}", at.lambda_max, at.epsilon);
        }
    }

    #[test]
    fn scaling_multiplies_form_by_power(space in space_strategy(), c in 0.1f64..10.0, p in 0.0f64..5.0, seed in any::<u64>()) {
        let xi = BalancedVector::from_slice(&random_balanced(space.len(), &mut rng(seed))).unwrap();
        let a = quad_form(&space, p, &xi).unwrap();
        let b = quad_form(&space.scaled(c), p, &xi).unwrap();
        prop_assert!((b - c.powf(p) * a).abs() <= 1e-12 * b.abs().max(1e-300) * 10.0 + 1e-300);
        prop_assert_eq!(
            classify(&space, p, None).unwrap().classification,
            classify(&space.scaled(c), p, None).unwrap().classification
        );
    }

    #[test]
    fn euclidean_clouds_have_2_negative_type(n in 2usize..9, dim in 1usize..5, seed in any::<u64>()) {
        let x = common::random_cloud(n, dim, NormOrder::Finite(2.0), &mut rng(seed));
        prop_assert_ne!(classify(&x, 2.0, None).unwrap().classification, Classification::NotNegType);
    }

    #[test]
    fn link_identity(space in space_strategy(), p in 0.0f64..8.0, seed in any::<u64>()) {
        let xi = BalancedVector::from_slice(&random_balanced(space.len(), &mut rng(seed))).unwrap();
        let q = vector_to_simplex(&space, &xi).unwrap();
        prop_assert!(q.is_completely_refined());
        let g = gap(&space, p, &q).unwrap();
        let form = quad_form(&space, p, &simplex_to_vector(&space, &q).unwrap()).unwrap();
        prop_assert!((g + 0.5 * form).abs() <= 1e-9 * g.abs().max(form.abs()).max(1.0));
    }

    #[test]
    fn reduction_preserves_gap((space, q) in space_strategy().prop_flat_map(|s| { let m = s.len(); (Just(s), simplex_strategy(m)) }), p in 0.0f64..6.0) {
        let reduced = reduce(&space, &q).unwrap();
        let before = gap(&space, p, &q).unwrap();
        let after = match (&reduced.kind, &reduced.simplex) {
            (ReducedKind::CompletelyRefined, Some(s)) => {
                prop_assert!(s.is_completely_refined());
                gap(&space, p, s).unwrap()
            }
            _ => 0.0,
        };
        let scale: f64 = q.left.iter().chain(&q.right).map(|w| w.1.abs()).sum::<f64>().powi(2) * space.max_distance().powf(p).max(1.0);
        prop_assert!((before - after).abs() <= 1e-9 * scale.max(1.0), "{} vs {}", before, after);
    }

    #[test]
    fn vector_simplex_round_trip(m in 2usize..10, seed in any::<u64>()) {
        let space = metric::random_metric(m, seed).unwrap();
        let xi = BalancedVector::from_slice(&random_balanced(m, &mut rng(seed ^ 1))).unwrap();
        let back = simplex_to_vector(&space, &vector_to_simplex(&space, &xi).unwrap()).unwrap();
        for (a, b) in xi.as_slice().iter().zip(back.as_slice()) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn dichotomy(space in space_strategy(), p in 0.0f64..6.0) {
        let report = classify(&space, p, None).unwrap();
        match report.classification {
            Classification::Strict => {
                prop_assert!(matches!(witness_ivt(&space, p, &report), Err(PolyEqError::NotApplicable(_))));
                prop_assert!(witness_at(&space, p, None).is_err());
            }
            Classification::NotNegType => {
                let w = witness_ivt(&space, p, &report).unwrap();
                prop_assert!((w.xi.norm() - 1.0).abs() <= 1e-12);
                prop_assert!(w.xi.as_slice().iter().sum::<f64>().abs() <= 1e-10);
                prop_assert!(w.simplex.is_completely_refined());
                prop_assert!(verify_equality(&space, p, &w.simplex, None).unwrap().is_nontrivial_equality());
            }
            Classification::Boundary => {}
        }
    }
}
