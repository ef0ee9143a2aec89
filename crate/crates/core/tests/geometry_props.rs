use finsler_core::geometry::{
    generalized_momenta, indicatrix_residual, kappa_from_field, metric_function, tangential_indicatrix_residual, FieldSpec,
    KappaSource, SpaceSpec,
};
use finsler_core::grid::Lattice;
use proptest::prelude::*;

fn spaces() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec::euclidean(3).unwrap(),
        SpaceSpec::pseudo(4).unwrap(),
        SpaceSpec::berwald_moore().unwrap(),
        SpaceSpec::regularized(0.5).unwrap(),
    ]
}

/// Maps a raw vector to an admissible direction of the space.
fn admissible(spec: &SpaceSpec, raw: &[f64]) -> Vec<f64> {
    let n = spec.dimension();
    let v = &raw[..n];
    match spec.dimension() {
        3 => v.to_vec(),
        _ if matches!(spec.kind, finsler_core::geometry::SpaceKind::BerwaldMooreConformal) => v.iter().map(|c| c.abs() + 0.1).collect(),
        _ => {
            let mut out = v.to_vec();
            let spatial = v[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
            out[0] = spatial * 1.05 + v[0].abs() + 0.1;
            out
        }
    }
}

fn kappa_spec(spec: SpaceSpec, k: f64) -> SpaceSpec {
    spec.with_constant_kappa(k).unwrap()
}

proptest! {
    #[test]
    fn metric_function_is_one_homogeneous(
        raw in prop::collection::vec(-3.0f64..3.0, 4),
        t in 0.01f64..100.0,
        k in 0.1f64..10.0,
        which in 0usize..4,
    ) {
        let spec = kappa_spec(spaces()[which].clone(), k);
        let x = vec![0.3; spec.dimension()];
        let dx = admissible(&spec, &raw);
        let scaled: Vec<f64> = dx.iter().map(|c| c * t).collect();
        let a = metric_function(&spec, &x, &dx).unwrap();
        let b = metric_function(&spec, &x, &scaled).unwrap();
        prop_assert!((b - t * a).abs() <= 1e-12 * b.abs().max(1.0), "{b} vs {}", t * a);
    }

    #[test]
    fn momenta_lie_on_the_tangential_indicatrix(
        raw in prop::collection::vec(-3.0f64..3.0, 4),
        k in 0.1f64..10.0,
        which in 0usize..4,
    ) {
        let spec = kappa_spec(spaces()[which].clone(), k);
        let x = vec![0.3; spec.dimension()];
        let dx = admissible(&spec, &raw);
        let p = generalized_momenta(&spec, &x, &dx).unwrap();
        let r = tangential_indicatrix_residual(&spec, &x, &p).unwrap();
        let scale = p.iter().map(|c| c * c).sum::<f64>().max(k * k).max(1.0);
        prop_assert!(r.abs() <= 1e-12 * scale.powi(2), "residual {r}");
    }

    #[test]
    fn unit_vectors_lie_on_the_indicatrix(
        raw in prop::collection::vec(-3.0f64..3.0, 4),
        k in 0.1f64..10.0,
        which in 0usize..4,
    ) {
        let spec = kappa_spec(spaces()[which].clone(), k);
        let x = vec![0.3; spec.dimension()];
        let dx = admissible(&spec, &raw);
        let l = metric_function(&spec, &x, &dx).unwrap();
        let unit: Vec<f64> = dx.iter().map(|c| c / l).collect();
        prop_assert!(indicatrix_residual(&spec, &x, &unit).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn kappa_from_field_matches_closed_form(
        x in prop::collection::vec(0.2f64..3.0, 4),
        c in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0],
    ) {
        let radial = FieldSpec::radial_log(c, 1.0).unwrap();
        let k1 = kappa_from_field(&SpaceSpec::euclidean(4).unwrap(), &radial, &x).unwrap();
        let k2 = radial.closed_form_kappa(&x).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-12 * k2);

        let mut y = x.clone();
        y[0] = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt() + x[0];
        let interval = FieldSpec::interval_log(c, 1.0).unwrap();
        let k1 = kappa_from_field(&SpaceSpec::pseudo(4).unwrap(), &interval, &y).unwrap();
        let k2 = interval.closed_form_kappa(&y).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-12 * k2);

        let bm = FieldSpec::berwald_moore_log(c, 1.0).unwrap();
        let k1 = kappa_from_field(&SpaceSpec::berwald_moore().unwrap(), &bm, &x).unwrap();
        let k2 = bm.closed_form_kappa(&x).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-12 * k2);
    }
}

#[test]
fn spec_examples() {
    let e2 = SpaceSpec::euclidean(2).unwrap();
    assert_eq!(metric_function(&e2, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    let p4 = SpaceSpec::pseudo(4).unwrap();
    assert_eq!(metric_function(&p4, &[0.0; 4], &[5.0, 3.0, 0.0, 0.0]).unwrap(), 4.0);
    let p = generalized_momenta(&e2, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
    assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    assert!(tangential_indicatrix_residual(&e2, &[0.0, 0.0], &[0.6, 0.8]).unwrap().abs() < 1e-15);
}

#[test]
fn regularized_space_uses_the_tangential_quadratic() {
    let field = FieldSpec::Affine { value: 0.0, gradient: vec![2.0, 0.3, -0.2, 0.1] };
    let spec = SpaceSpec::regularized(0.5).unwrap().with_kappa(KappaSource::FromField(field.clone())).unwrap();
    let x = [0.0; 4];
    let k = spec.kappa_at(&x).unwrap();
    let g = field.gradient(&x).unwrap();
    assert!(tangential_indicatrix_residual(&spec, &x, &g).unwrap().abs() < 1e-13, "kappa {k}");
}

/// Grid-sampled field: kappa from lattice gradients converges at second order.
#[test]
fn grid_kappa_converges_quadratically() {
    let c = 1.4;
    let field = FieldSpec::radial_log(c, 1.0).unwrap();
    let spec = SpaceSpec::euclidean(3).unwrap();
    let point = [1.5, 1.0, 0.75];
    let exact = field.closed_form_kappa(&point).unwrap();
    let mut errors = Vec::new();
    for points in [9, 17, 33] {
        let lat = Lattice::sample_box(&[1.0, 0.5, 0.25], &[2.0, 1.5, 1.25], points, |x| field.value(x)).unwrap();
        let k = kappa_from_field(&spec, &FieldSpec::grid(lat), &point).unwrap();
        errors.push((k - exact).abs());
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "order {order}, errors {errors:?}");
    }
}
