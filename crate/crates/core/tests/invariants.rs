use proptest::prelude::*;
use schwarz_core::analysis::{fit_rate_values, FitMode, Window};
use schwarz_core::decomposition::{build_decomposition, Decomposer};
use schwarz_core::linalg::max_abs_diff;
use schwarz_core::mesh::{build_mesh_hierarchy, FemFunction, Level};
use schwarz_core::objectives::{soft_threshold, Nonsmooth};

/// `(d, m, layout, ℓ, two_level)` with refinement 4.
fn layouts() -> impl Strategy<Value = (usize, usize, Vec<usize>, usize, bool)> {
    prop_oneof![
        (2usize..5, 1usize..3, any::<bool>()).prop_map(|(n, l, two)| (1, 2 * n, vec![n], l, two)),
        (1usize..3, any::<bool>()).prop_map(|(l, two)| (2, 2, vec![2, 2], l, two)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decompositions_reconstruct_their_input((d, m, layout, l, two) in layouts(), seed in 0u64..1000) {
        let r = 4;
        let mesh = build_mesh_hierarchy(d, m, r).unwrap();
        let dec = match build_decomposition(&mesh, &layout, l, two) {
            Ok(dec) => dec,
            Err(_) => return Ok(()),
        };
        let n = mesh.fine().dof_count();
        let coeffs: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0).collect();
        let w = FemFunction::new(&mesh, Level::Fine, coeffs.clone()).unwrap();
        let mut sum = vec![0.0; n];
        for k in 0..dec.subdomain_count() {
            for (s, t) in sum.iter_mut().zip(dec.weight_table(k).unwrap()) {
                *s += t;
            }
        }
        prop_assert!(sum.iter().all(|s| (s - 1.0).abs() < 1e-12));
        let mut kinds = vec![Decomposer::OneLevel];
        if two {
            kinds.extend([Decomposer::TwoLevelL2, Decomposer::TwoLevelNonsmooth]);
        }
        for kind in kinds {
            let parts = kind.apply(&dec, &w).unwrap();
            prop_assert!(max_abs_diff(&parts.reconstruct(&dec), &coeffs) < 1e-12);
        }
    }

    #[test]
    fn nodal_prox_satisfies_its_optimality_condition(z in -5.0f64..5.0, t in 0.01f64..2.0, lam in 0.0f64..3.0, g in -2.0f64..2.0) {
        let x = soft_threshold(z, t * lam);
        // 0 ∈ x − z + t λ ∂|x|
        if x != 0.0 {
            prop_assert!((x - z + t * lam * x.signum()).abs() < 1e-12);
        } else {
            prop_assert!(z.abs() <= t * lam + 1e-12);
        }
        let lower = Nonsmooth::LowerObstacle(vec![g]);
        prop_assert_eq!(lower.node_prox(0, z, t), z.max(g));
    }

    #[test]
    fn planted_geometric_rates_are_recovered(rho in 0.05f64..0.99, c in 0.1f64..10.0) {
        let z: Vec<f64> = (0..60).map(|n| c * rho.powi(n)).collect();
        let f = fit_rate_values(&z, FitMode::Linear, Window::LastHalf).unwrap();
        prop_assert!((f.value - rho).abs() < 1e-10);
    }
}
