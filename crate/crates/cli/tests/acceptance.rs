//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion with the
//! measured values, then exits non-zero if any criterion failed.

use std::process::{Command, Output};
use std::sync::Arc;
use std::time::{Duration, Instant};

use finsler_core::cosmology::{hubble, hubble_series, integrate_phi, integrate_phi_with, CosmoParams, IntegratorConfig};
use finsler_core::curvature::{
    conformal_metric, full_stress_from_gradient, generic_oracle_curvature, scalar_curvature_diagnostic, tensor_bundle,
    BundleDelta, ConformalExponentField,
};
use finsler_core::field::{
    euler_lagrange_residual, field_equation_residual, grid_convergence, observed_orders, radial_residual,
    two_dim_degeneration_check, DegenerationKind, LagrangianForm, RadialFamily,
};
use finsler_core::geodesics::{
    cosmo_radius_by_quadrature, cosmo_trajectory, direction_drift, integrate_flow, interval_fit, isotropic_ratio_drift,
    straightness_deviation, FlowSpec,
};
use finsler_core::geometry::{FieldSpec, SpaceSpec};
use finsler_core::grid::Lattice;
use finsler_core::oracle::monte_carlo_hyperboloid_volume;
use finsler_core::series::phi_series;
use finsler_core::volume::{conformal_indicatrix_volume, ellipsoid_volume, regularized_hyperboloid_volume, unit_ball_volume};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    notes: Vec<String>,
    passed: bool,
}

impl Outcome {
    fn new() -> Self {
        Self { notes: Vec::new(), passed: true }
    }

    fn at_most(&mut self, label: &str, value: f64, limit: f64) {
        let ok = value <= limit;
        self.passed &= ok;
        self.notes.push(format!("{label} = {value:e} (<= {limit:e}{})", if ok { "" } else { ", MISSED" }));
    }

    fn at_least(&mut self, label: &str, value: f64, limit: f64) {
        let ok = value >= limit;
        self.passed &= ok;
        self.notes.push(format!("{label} = {value:.4} (>= {limit}{})", if ok { "" } else { ", MISSED" }));
    }

    fn holds(&mut self, label: &str, ok: bool) {
        self.passed &= ok;
        self.notes.push(format!("{label}: {}", if ok { "yes" } else { "NO" }));
    }

    fn fail(&mut self, label: &str, err: impl std::fmt::Display) {
        self.passed = false;
        self.notes.push(format!("{label}: error {err}"));
    }
}

fn run_criterion(n: u8, title: &str, budget: Duration, body: impl FnOnce(&mut Outcome)) -> bool {
    let mut out = Outcome::new();
    let start = Instant::now();
    body(&mut out);
    let elapsed = start.elapsed();
    out.holds(&format!("runtime {:.2?} within {:?}", elapsed, budget), elapsed <= budget);
    println!("criterion {n} {}: {title}", if out.passed { "PASS" } else { "FAIL" });
    for note in &out.notes {
        println!("    {note}");
    }
    out.passed
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler-lab")).args(args).output().expect("binary runs")
}

fn csv_column(text: &str, column: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let Some(idx) = header.iter().position(|h| *h == column) else {
        return Vec::new();
    };
    lines.map(|l| l.split(',').nth(idx).unwrap_or("").to_string()).collect()
}

fn criterion_1() -> bool {
    run_criterion(1, "series coefficients 1, 0, -1/5", Duration::from_secs(1), |o| {
        o.holds("phi_series(3) == (1, 0, -1/5)", phi_series(3).to_string() == "1, 0, -1/5");
        let out = cli(&["series", "--order", "3"]);
        let col = csv_column(&String::from_utf8_lossy(&out.stdout), "coefficient");
        o.holds("`series --order 3` coefficient column", out.status.success() && col == ["1", "0", "-1/5"]);
    })
}

fn criterion_2() -> bool {
    run_criterion(2, "Hubble law at H0 r/c = 0.1", Duration::from_secs(5), |o| {
        let p = CosmoParams::default();
        o.at_most("|closed-form H/H0 - 0.998|", (hubble_series(&p, 0.1) / p.h0() - 0.998).abs(), 1e-12);
        match integrate_phi(1.0, 1e-10) {
            Ok(sol) => {
                match hubble(&sol, 0.1) {
                    Ok(h) => o.at_most("|integrated H/H0 - 0.998|", (h / sol.params.h0() - 0.998).abs(), 1e-6),
                    Err(e) => o.fail("integrated H", e),
                }
                match hubble(&sol, 0.0) {
                    Ok(h) => o.holds("H(0) == H0 exactly", h == sol.params.h0()),
                    Err(e) => o.fail("H(0)", e),
                }
            }
            Err(e) => o.fail("integrate_phi", e),
        }
        let out = cli(&["cosmo", "hubble", "--xi", "0.1"]);
        let text = String::from_utf8_lossy(&out.stdout);
        let series: Vec<f64> = csv_column(&text, "h_over_h0_series").iter().filter_map(|v| v.parse().ok()).collect();
        o.holds("`cosmo hubble --xi 0.1` series column is 0.998", out.status.success() && series == [0.998]);
    })
}

fn criterion_3() -> bool {
    run_criterion(3, "singularity at phi = 1/sqrt(3)", Duration::from_secs(10), |o| {
        let a = integrate_phi(1.0, 1e-10);
        let b = integrate_phi_with(1.0, &IntegratorConfig { rel_tol: 1e-10, safety: 0.75, beta: 0.0, h_init: Some(1e-6) });
        match (a, b) {
            (Ok(a), Ok(b)) => match (a.singular_xi(), b.singular_xi()) {
                (Some(xa), Some(xb)) => {
                    let phi = a.phi(xa).unwrap_or(f64::NAN);
                    o.at_most("|phi(xi*) - 1/sqrt(3)|", (phi - 1.0 / 3f64.sqrt()).abs(), 1e-6);
                    o.at_most("|xi* - xi*'| across step controls", (xa - xb).abs(), 1e-6);
                    o.notes.push(format!("xi* = {xa}"));
                }
                _ => o.fail("singular_xi", "integration did not halt at the singular set"),
            },
            (Err(e), _) | (_, Err(e)) => o.fail("integrate_phi", e),
        }
    })
}

fn criterion_4() -> bool {
    run_criterion(4, "closed-form field solutions", Duration::from_secs(120), |o| {
        let fams = [
            ("radial log of r", RadialFamily::RadialLog { c: -1.1, r0: 2.0 }, vec![2, 3, 4, 6]),
            ("radial log of s", RadialFamily::IntervalLog { c: 2.3, s0: 0.5 }, vec![4]),
            ("isotropic log", RadialFamily::BerwaldMooreLog { amplitude: 0.8, s0: 1.5 }, vec![4]),
        ];
        for (label, fam, dims) in fams {
            let mut worst = 0.0f64;
            for n in dims {
                for k in 1..=20 {
                    match radial_residual(&fam, n, 0.25 * k as f64) {
                        Ok(v) => worst = worst.max(v.abs()),
                        Err(e) => return o.fail(label, e),
                    }
                }
            }
            o.at_most(&format!("max radial residual, {label}"), worst, 1e-12);
        }
        let points = [9, 17, 33];
        match grid_convergence(&LagrangianForm::EuclideanPower { n: 3 }, &FieldSpec::RadialLog { c: 0.9, r0: 1.0 }, &[1.0, 0.5, 0.25], &[2.0, 1.5, 1.25], &points) {
            Ok(s) => o.at_least("grid order, log of r (3-D)", s.min_order(), 1.9),
            Err(e) => o.fail("grid, log of r", e),
        }
        match grid_convergence(&LagrangianForm::PseudoPower { n: 4 }, &FieldSpec::IntervalLog { c: 1.2, s0: 1.0 }, &[3.0, 0.0, 0.0, 0.0], &[4.0, 1.0, 1.0, 1.0], &points) {
            Ok(s) => o.at_least("grid order, log of s (4-D)", s.min_order(), 1.9),
            Err(e) => o.fail("grid, log of s", e),
        }
        match grid_convergence(&LagrangianForm::BerwaldMooreProduct, &FieldSpec::BerwaldMooreLog { amplitude: 0.8, s0: 1.0 }, &[1.0; 4], &[2.0; 4], &points) {
            Ok(s) => o.at_most("grid residual, isotropic log (discrete-exact)", s.max_residuals_all.iter().cloned().fold(0.0, f64::max), 1e-9),
            Err(e) => o.fail("grid, isotropic log", e),
        }
    })
}

fn criterion_5() -> bool {
    run_criterion(5, "harmonic and eikonal degenerations", Duration::from_secs(60), |o| {
        let harmonic: [fn(&[f64]) -> f64; 3] = [|x| x[0] * x[0] - x[1] * x[1], |x| 3.0 * x[0] * x[1] + x[0] - 2.0, |x| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1]];
        let mut worst = 0.0f64;
        for (i, f) in harmonic.iter().enumerate() {
            let rep = Lattice::sample_box(&[-1.0, -1.0], &[1.0, 1.0], 41, |x| Ok(f(x))).and_then(|l| two_dim_degeneration_check(&l, DegenerationKind::Laplace));
            match rep {
                Ok(r) => worst = worst.max(r.linear.max),
                Err(e) => return o.fail(&format!("harmonic field {i}"), e),
            }
        }
        o.at_most("Laplace residual on harmonic polynomials", worst, 1e-10);

        let eikonal: [fn(&[f64]) -> f64; 3] = [
            |x| x[0] - x[1],
            |x| x[0] + (x[1] - x[2] + x[3]) / 3f64.sqrt(),
            |x| (x[0] - x[3]).powi(2) + 0.5 * (x[0] - x[3]),
        ];
        let mut worst = 0.0f64;
        for (i, f) in eikonal.iter().enumerate() {
            let r = Lattice::sample_box(&[0.0; 4], &[1.0; 4], 9, |x| Ok(f(x))).and_then(|l| euler_lagrange_residual(&LagrangianForm::PseudoPower { n: 4 }, &l));
            match r {
                Ok(r) => worst = worst.max(r.norms.max),
                Err(e) => return o.fail(&format!("eikonal field {i}"), e),
            }
        }
        o.at_most("n = 4 lattice residual on eikonal fields", worst, 1e-10);

        let quad = FieldSpec::Quadratic {
            constant: 0.0,
            linear: vec![0.5, 0.0, 0.0, -0.5],
            hessian: vec![vec![2.0, 0.0, 0.0, -2.0], vec![0.0; 4], vec![0.0; 4], vec![-2.0, 0.0, 0.0, 2.0]],
        };
        match field_equation_residual(&LagrangianForm::PseudoPower { n: 4 }, &quad, &[0.4, 0.1, -0.3, 0.8]) {
            Ok(v) => o.at_most("n = 4 analytic residual on an eikonal quadratic", v.abs(), 1e-12),
            Err(e) => o.fail("analytic eikonal residual", e),
        }
    })
}

fn criterion_6() -> bool {
    run_criterion(6, "indicatrix volumes", Duration::from_secs(60), |o| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst = 0.0f64;
        for _ in 0..500 {
            let n = rng.gen_range(1..=5);
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let g = &b * b.transpose() + DMatrix::identity(n, n) * 0.3;
            let det: f64 = g.clone().lu().determinant();
            let reference = unit_ball_volume(n) / det.sqrt();
            match ellipsoid_volume(&g) {
                Ok(v) => worst = worst.max((v.value - reference).abs() / reference),
                Err(e) => return o.fail("ellipsoid_volume", e),
            }
        }
        o.at_most("ellipsoid vs omega_n / sqrt(det g), relative", worst, 1e-12);

        let mut worst = 0.0f64;
        for (spec, x) in [
            (SpaceSpec::euclidean(2), vec![0.0; 2]),
            (SpaceSpec::euclidean(5), vec![0.0; 5]),
            (SpaceSpec::pseudo(4), vec![0.0; 4]),
            (SpaceSpec::berwald_moore(), vec![1.0; 4]),
        ] {
            let spec = spec.expect("valid space");
            let n = spec.dimension() as i32;
            let base = conformal_indicatrix_volume(&spec, &x).expect("unit kappa").value;
            for _ in 0..100 {
                let k = rng.gen_range(0.01..50.0);
                let v = spec.clone().with_constant_kappa(k).and_then(|s| conformal_indicatrix_volume(&s, &x)).expect("volume");
                worst = worst.max((v.value * k.powi(n) - base).abs() / base);
            }
        }
        o.at_most("V kappa^n spread, relative", worst, 1e-12);

        let qs = [0.25, 0.5, 1.0, 2.0];
        let mut volumes = Vec::new();
        for (i, q0) in qs.iter().enumerate() {
            let v = regularized_hyperboloid_volume(*q0).expect("quadrature").value;
            let mc = monte_carlo_hyperboloid_volume(*q0, 10_000_000, 2024 + i as u64).expect("monte carlo");
            o.at_most(&format!("|V({q0}) - MC| / std error"), (v - mc.mean).abs() / mc.std_error, 3.0);
            volumes.push(v);
        }
        o.holds("V strictly decreasing over q0 = 0.25, 0.5, 1, 2", volumes.windows(2).all(|w| w[0] > w[1]));
    })
}

fn criterion_7() -> bool {
    run_criterion(7, "conformal curvature", Duration::from_secs(60), |o| {
        let x = [1.5, -0.2, 0.6, 0.1];
        let families = [
            ("exponential", ConformalExponentField::exponential(-0.4)),
            ("inverse interval", ConformalExponentField::interval_log(0.8).expect("nonzero")),
            (
                "quadratic exponent",
                ConformalExponentField::quadratic(
                    -0.2,
                    [0.1, 0.3, -0.2, 0.0],
                    [[0.2, 0.0, 0.1, 0.0], [0.0, 0.3, 0.0, -0.1], [0.1, 0.0, -0.25, 0.05], [0.0, -0.1, 0.05, 0.15]],
                ),
            ),
        ];
        let steps = [0.02, 0.01, 0.005];
        for (label, field) in &families {
            let exact = tensor_bundle(field, &x, 1.0, None).expect("closed forms");
            let errors: Vec<f64> = steps
                .iter()
                .map(|h| BundleDelta::between(&exact, &generic_oracle_curvature(|y| conformal_metric(field, y), &x, *h, 1.0).expect("oracle")).max())
                .collect();
            let order = observed_orders(&steps, &errors).into_iter().fold(f64::INFINITY, f64::min);
            o.at_least(&format!("oracle order, {label}"), order, 1.9);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let g = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let t = full_stress_from_gradient(&g);
            let scale = g.iter().map(|v| v * v).sum::<f64>().powi(2);
            worst = worst.max((t[0][0] + t[1][1] + t[2][2] + t[3][3]).abs() / scale);
        }
        o.at_most("full stress trace / |g|^4 over 1000 gradients", worst, 1e-13);

        let mut identity = 0.0f64;
        let mut ratio = 0.0f64;
        for (_, field) in &families {
            for factor in [0.5, 1.0, 3.0] {
                let b = tensor_bundle(field, &x, factor, None).expect("bundle");
                identity = identity.max((b.stress_trace + factor * b.scalar).abs());
            }
            ratio = ratio.max((scalar_curvature_diagnostic(field, &x).expect("diagnostic").ratio - 2.0).abs());
        }
        o.at_most("|T + factor R|", identity, 1e-10);
        o.at_most("|closed scalar / Ricci trace - 2|", ratio, 1e-6);
    })
}

fn criterion_8() -> bool {
    run_criterion(8, "straight geodesics", Duration::from_secs(30), |o| {
        let start = [1.2, 0.4, -0.3, 0.2];
        let flows = [
            ("radial log", FlowSpec::radial_log(4, -0.7)),
            ("interval log", FlowSpec::interval_log(4, 1.6)),
            ("isotropic log", FlowSpec::berwald_moore_log(0.5)),
        ];
        for (label, flow) in flows {
            let isotropic_start = [0.7, 1.3, 0.4, 0.9];
            let x = if label == "isotropic log" { &isotropic_start } else { &start };
            match flow.and_then(|f| integrate_flow(&f, x, (0.0, 2.0), 1e-10)) {
                Ok(t) => {
                    o.at_most(&format!("straightness, {label}"), straightness_deviation(&t).unwrap_or(f64::NAN), 1e-9);
                    if label == "interval log" {
                        let fit = interval_fit(&t).expect("fit");
                        o.at_most("|interval slope - sqrt(1 - sum C^2)|", (fit.slope - fit.expected_slope).abs(), 1e-8);
                    }
                    if label == "isotropic log" {
                        o.at_most("isotropic ratio drift", isotropic_ratio_drift(&t).unwrap_or(f64::NAN), 1e-10);
                    }
                }
                Err(e) => o.fail(label, e),
            }
        }
        let sol = Arc::new(integrate_phi(1.0, 1e-10).expect("cosmology"));
        let x0 = [-0.08, 0.12, 0.05];
        match cosmo_trajectory(&sol, &x0, (0.0, 0.2), 1e-12) {
            Ok(t) => {
                o.at_most("cosmological direction drift", direction_drift(&t).unwrap_or(f64::NAN), 1e-10);
                let r0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut worst = 0.0f64;
                for (tau, p) in t.taus.iter().zip(&t.points) {
                    let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    worst = worst.max((r - cosmo_radius_by_quadrature(&sol, r0, *tau).unwrap_or(f64::NAN)).abs());
                }
                o.at_most("cosmological radius vs 1-D quadrature", worst, 1e-8);
            }
            Err(e) => o.fail("cosmological ray", e),
        }
    })
}

fn criterion_9() -> bool {
    run_criterion(9, "`verify` end to end", Duration::from_secs(300), |o| {
        let a = cli(&["verify", "--seed", "42", "--format", "json"]);
        let b = cli(&["verify", "--seed", "42", "--format", "json"]);
        o.holds(&format!("exit code 0 (got {:?})", a.status.code()), a.status.code() == Some(0));
        o.holds("two runs with --seed 42 byte-identical", a.stdout == b.stdout && !a.stdout.is_empty());
        let csv = cli(&["verify", "--seed", "42"]);
        let failing: Vec<String> = String::from_utf8_lossy(&csv.stdout)
            .lines()
            .skip(1)
            .filter(|l| l.contains(",false,"))
            .map(str::to_string)
            .collect();
        for line in failing {
            o.notes.push(format!("failing check: {line}"));
        }
    })
}

fn main() {
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
