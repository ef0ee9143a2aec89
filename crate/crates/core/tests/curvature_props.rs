use finsler_core::curvature::{
    conformal_metric, full_stress_from_gradient, generic_oracle_curvature, tensor_bundle, BundleDelta,
    ConformalExponentField, DIM,
};
use finsler_core::field::observed_orders;
use finsler_core::verification::curvature_families;
use proptest::prelude::*;

const X: [f64; 4] = [2.0, 0.3, -0.4, 0.5];

#[test]
fn oracle_converges_at_second_order() {
    let steps = [0.04, 0.02, 0.01];
    for (name, field) in curvature_families() {
        let exact = tensor_bundle(&field, &X, 1.0, None).unwrap();
        let errors: Vec<f64> = steps
            .iter()
            .map(|h| {
                let o = generic_oracle_curvature(|y| conformal_metric(&field, y), &X, *h, 1.0).unwrap();
                BundleDelta::between(&exact, &o).max()
            })
            .collect();
        for p in observed_orders(&steps, &errors) {
            assert!(p >= 1.9, "{name}: {p} from {errors:?}");
        }
    }
}

#[test]
fn trace_chain_symmetries_and_source_identity() {
    let eta = [1.0, -1.0, -1.0, -1.0];
    for (name, field) in curvature_families() {
        let b = tensor_bundle(&field, &X, 2.5, None).unwrap();
        let kappa2 = field.kappa(&X).unwrap().powi(2);
        let trace: f64 = (0..DIM).map(|k| eta[k] * b.ricci(k, k)).sum();
        assert!((kappa2 * b.scalar - trace).abs() <= 1e-12 * trace.abs().max(1.0), "{name}");
        assert!((b.stress_trace + b.factor * b.scalar).abs() <= 1e-10, "{name}");
        for i in 0..DIM {
            for k in 0..DIM {
                assert!((b.ricci(i, k) - b.ricci(k, i)).abs() <= 1e-13, "{name}");
                for l in 0..DIM {
                    for m in 0..DIM {
                        assert!((b.riemann(i, k, l, m) + b.riemann(i, k, m, l)).abs() <= 1e-13, "{name}");
                    }
                }
            }
        }
    }
}

#[test]
fn constant_exponent_is_flat() {
    let b = tensor_bundle(&ConformalExponentField::constant(0.7), &X, 1.0, None).unwrap();
    assert_eq!(b.scalar, 0.0);
    assert!(b.riemann.iter().all(|v| *v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn full_stress_is_traceless(g in prop::array::uniform4(-3.0f64..3.0)) {
        let t = full_stress_from_gradient(&g);
        let trace: f64 = (0..DIM).map(|k| t[k][k]).sum();
        let scale = g.iter().map(|v| v * v).sum::<f64>().powi(2).max(1.0);
        prop_assert!(trace.abs() <= 1e-13 * scale, "{trace}");
    }
}
