#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_core::cosmology::{hubble, hubble_series, integrate_phi, CosmoParams, CosmoSolution};
use finsler_core::curvature::{
    conformal_metric, generic_oracle_curvature, scalar_curvature_diagnostic, tensor_bundle, BundleDelta,
    ConformalExponentField, TensorBundle, DIM,
};
use finsler_core::field::{grid_convergence, LagrangianForm};
use finsler_core::geodesics::{
    cosmo_trajectory, direction_drift, integrate_flow, interval_fit, isotropic_ratio_drift, straightness_deviation,
    FlowSpec, Trajectory,
};
use finsler_core::geometry::{FieldSpec, SpaceSpec};
use finsler_core::oracle::monte_carlo_hyperboloid_volume;
use finsler_core::series::phi_series;
use finsler_core::verification::{self, VerifyConfig};
use finsler_core::volume::{conformal_indicatrix_volume, ellipsoid_volume, lagrangian_from_volume, regularized_hyperboloid_volume};
use nalgebra::DMatrix;
use serde::Serialize;

use output::{emit, envelope, Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "finsler-lab", version, about = "Conformal Finsler geometry toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Indicatrix volume tables.
    #[command(subcommand)]
    Volume(VolumeCmd),
    /// Cosmological solution.
    #[command(subcommand)]
    Cosmo(CosmoCmd),
    /// Exact series coefficients of phi.
    Series(SeriesArgs),
    /// Field-equation residual norms on nested grids.
    Residual(ResidualArgs),
    /// Curvature tensors at a point, closed form vs finite-difference oracle.
    Curvature(CurvatureArgs),
    /// Trajectory of a gradient congruence.
    Geodesic(GeodesicArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum VolumeCmd {
    /// Unit ellipsoid of each SPD matrix (rows separated by ';').
    Ellipsoid {
        #[arg(long, required = true)]
        matrix: Vec<String>,
    },
    /// Conformal indicatrix volume over constant kappa values.
    Conformal {
        #[arg(long, value_enum, default_value_t = Space::Euclidean)]
        space: Space,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        kappa: Vec<f64>,
    },
    /// Regularized hyperboloid body over q0 values.
    Regularized {
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2")]
        q0: Vec<f64>,
        /// Add a Monte Carlo estimate with this many samples (0 disables).
        #[arg(long, default_value_t = 0)]
        mc_samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Space {
    Euclidean,
    Pseudo,
    BerwaldMoore,
}

#[derive(Args, Debug, Serialize)]
struct CosmoScales {
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    s0: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum CosmoCmd {
    /// Sampled solution up to the singular set or xi_max.
    Integrate {
        #[arg(long, default_value_t = 1.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[command(flatten)]
        scales: CosmoScales,
    },
    /// Hubble ratio at given distances.
    Hubble {
        /// Dimensionless distances H0 r / c.
        #[arg(long, value_delimiter = ',', conflicts_with = "r", required_unless_present = "r")]
        xi: Option<Vec<f64>>,
        /// Physical distances.
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<f64>>,
        #[command(flatten)]
        scales: CosmoScales,
    },
}

#[derive(Args, Debug, Serialize)]
struct SeriesArgs {
    #[arg(long, default_value_t = 3)]
    order: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
#[allow(clippy::enum_variant_names)]
enum Family {
    RadialLog,
    IntervalLog,
    BerwaldMooreLog,
}

#[derive(Args, Debug, Serialize)]
struct ResidualArgs {
    #[arg(long, value_enum, default_value_t = Family::RadialLog)]
    family: Family,
    /// Dimension of the radial family.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Amplitude of the logarithm.
    #[arg(long, default_value_t = 1.3)]
    c: f64,
    #[arg(long, value_delimiter = ',', default_value = "9,17,33")]
    points: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    lo: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    hi: Option<Vec<f64>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CurvatureFamily {
    Exponential,
    IntervalLog,
    Cosmo,
}

#[derive(Args, Debug, Serialize)]
struct CurvatureArgs {
    #[arg(long, value_enum, default_value_t = CurvatureFamily::Exponential)]
    family: CurvatureFamily,
    /// beta for the exponential family, C for the interval family.
    #[arg(long, default_value_t = 0.3)]
    param: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,0.3,-0.4,0.5")]
    point: Vec<f64>,
    /// Proportionality factor in the source term.
    #[arg(long, default_value_t = 1.0)]
    factor: f64,
    /// Oracle step.
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Flow {
    RadialLog,
    IntervalLog,
    BerwaldMooreLog,
    Cosmo,
}

#[derive(Args, Debug, Serialize)]
struct GeodesicArgs {
    #[arg(long, value_enum, default_value_t = Flow::IntervalLog)]
    flow: Flow,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Amplitude of the logarithm.
    #[arg(long, default_value_t = 0.9)]
    c: f64,
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<f64>>,
    /// End of the parameter range (x0 range for the cosmological flow).
    #[arg(long, default_value_t = 2.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10_000_000)]
    mc_samples: usize,
}

type CmdResult = Result<(String, bool), String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, ok)) => {
            if let Err(e) = emit(&text, cli.output.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn finish<R: Serialize>(cli: &Cli, name: &str, result: &R, table: &Table) -> Result<String, String> {
    match cli.format {
        Format::Csv => table.to_csv().map_err(e),
        Format::Json => {
            let params = serde_json::json!({ "format": cli.format, "arguments": &cli.command });
            envelope(name, &params, result).map_err(e)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Volume(v) => volume(cli, v).map(|s| (s, true)),
        Command::Cosmo(c) => cosmo(cli, c).map(|s| (s, true)),
        Command::Series(a) => series(cli, a).map(|s| (s, true)),
        Command::Residual(a) => residual(cli, a).map(|s| (s, true)),
        Command::Curvature(a) => curvature(cli, a).map(|s| (s, true)),
        Command::Geodesic(a) => geodesic(cli, a).map(|s| (s, true)),
        Command::Verify(a) => verify(cli, a),
    }
}

fn parse_matrix(s: &str) -> Result<DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| r.split(',').map(|v| v.trim().parse::<f64>().map_err(e)).collect())
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix '{s}' is not square"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Serialize)]
struct VolumeRow {
    label: String,
    value: f64,
    volume: f64,
    method: String,
    error_estimate: f64,
    lagrangian: Option<f64>,
    mc_mean: Option<f64>,
    mc_std_error: Option<f64>,
}

fn method_label<T: Serialize>(m: &T) -> String {
    serde_json::to_value(m).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn volume(cli: &Cli, cmd: &VolumeCmd) -> Result<String, String> {
    let mut rows = Vec::new();
    let mut table;
    match cmd {
        VolumeCmd::Ellipsoid { matrix } => {
            table = Table::new(&["n", "determinant", "volume", "method"]);
            for m in matrix {
                let g = parse_matrix(m)?;
                let v = ellipsoid_volume(&g).map_err(e)?;
                let det = g.clone().lu().determinant();
                table.push(vec![g.nrows().into(), det.into(), v.value.into(), method_label(&v.method).into()]);
                rows.push(VolumeRow {
                    label: m.clone(),
                    value: det,
                    volume: v.value,
                    method: method_label(&v.method),
                    error_estimate: v.error_estimate,
                    lagrangian: None,
                    mc_mean: None,
                    mc_std_error: None,
                });
            }
        }
        VolumeCmd::Conformal { space, n, kappa } => {
            table = Table::new(&["kappa", "volume", "lagrangian", "method"]);
            let (base, x) = match space {
                Space::Euclidean => (SpaceSpec::euclidean(*n), vec![0.0; *n]),
                Space::Pseudo => (SpaceSpec::pseudo(*n), vec![0.0; *n]),
                Space::BerwaldMoore => (SpaceSpec::berwald_moore(), vec![1.0; 4]),
            };
            let base = base.map_err(e)?;
            for k in kappa {
                let spec = base.clone().with_constant_kappa(*k).map_err(e)?;
                let v = conformal_indicatrix_volume(&spec, &x).map_err(e)?;
                let l = lagrangian_from_volume(&spec, &x).map_err(e)?;
                table.push(vec![(*k).into(), v.value.into(), l.into(), method_label(&v.method).into()]);
                rows.push(VolumeRow {
                    label: "kappa".into(),
                    value: *k,
                    volume: v.value,
                    method: method_label(&v.method),
                    error_estimate: v.error_estimate,
                    lagrangian: Some(l),
                    mc_mean: None,
                    mc_std_error: None,
                });
            }
        }
        VolumeCmd::Regularized { q0, mc_samples, seed } => {
            let mut header = vec!["q0", "volume", "error_estimate"];
            if *mc_samples > 0 {
                header.extend(["mc_mean", "mc_std_error"]);
            }
            table = Table::new(&header);
            for (i, q) in q0.iter().enumerate() {
                let v = regularized_hyperboloid_volume(*q).map_err(e)?;
                let err = v.error_estimate;
                let mut row: Vec<Cell> = vec![(*q).into(), v.value.into(), err.into()];
                let mut mc = None;
                if *mc_samples > 0 {
                    let m = monte_carlo_hyperboloid_volume(*q, *mc_samples, seed.wrapping_add(i as u64)).map_err(e)?;
                    row.extend([m.mean.into(), m.std_error.into()]);
                    mc = Some(m);
                }
                table.push(row);
                rows.push(VolumeRow {
                    label: "q0".into(),
                    value: *q,
                    volume: v.value,
                    method: method_label(&v.method),
                    error_estimate: v.error_estimate,
                    lagrangian: None,
                    mc_mean: mc.map(|m| m.mean),
                    mc_std_error: mc.map(|m| m.std_error),
                });
            }
        }
    }
    finish(cli, "volume", &rows, &table)
}

fn solve(scales: &CosmoScales, xi_max: f64) -> Result<CosmoSolution, String> {
    let params = CosmoParams::new(scales.gamma, scales.s0, scales.c).map_err(e)?;
    Ok(integrate_phi(xi_max, scales.rel_tol).map_err(e)?.with_params(params))
}

fn cosmo(cli: &Cli, cmd: &CosmoCmd) -> Result<String, String> {
    match cmd {
        CosmoCmd::Integrate { xi_max, samples, scales } => {
            if *samples < 2 {
                return Err("--samples must be at least 2".into());
            }
            let sol = solve(scales, *xi_max)?;
            let mut table = Table::new(&["xi", "phi", "dphi", "psi", "h_over_h0"]);
            #[derive(Serialize)]
            struct Row {
                xi: f64,
                phi: f64,
                dphi: f64,
                psi: f64,
                h_over_h0: f64,
            }
            let mut rows = Vec::with_capacity(*samples);
            let end = sol.xi_end();
            for k in 0..*samples {
                let xi = end * k as f64 / (*samples - 1) as f64;
                let (phi, dphi) = sol.phi_and_derivative(xi).map_err(e)?;
                let psi = sol.psi(xi).map_err(e)?;
                let h = if xi == 0.0 { 1.0 } else { phi / xi };
                table.push(vec![xi.into(), phi.into(), dphi.into(), psi.into(), h.into()]);
                rows.push(Row { xi, phi, dphi, psi, h_over_h0: h });
            }
            #[derive(Serialize)]
            struct Summary {
                xi_end: f64,
                singular_xi: Option<f64>,
                residual_norm: f64,
                rows: Vec<Row>,
            }
            let summary = Summary { xi_end: end, singular_xi: sol.singular_xi(), residual_norm: sol.residual_norm(), rows };
            finish(cli, "cosmo integrate", &summary, &table)
        }
        CosmoCmd::Hubble { xi, r, scales } => {
            let sol = solve(scales, 1.0)?;
            let p = sol.params;
            let radii: Vec<f64> = match (xi, r) {
                (Some(xi), _) => xi.iter().map(|x| x * p.c / p.h0()).collect(),
                (None, Some(r)) => r.clone(),
                (None, None) => unreachable!("clap requires one of --xi, --r"),
            };
            let mut table = Table::new(&["r", "xi", "h", "h_over_h0", "h_over_h0_series"]);
            #[derive(Serialize)]
            struct Row {
                r: f64,
                xi: f64,
                h: f64,
                h_over_h0: f64,
                h_over_h0_series: f64,
            }
            let mut rows = Vec::new();
            for r in radii {
                let h = hubble(&sol, r).map_err(e)?;
                let xi = p.h0() * r / p.c;
                let row = Row { r, xi, h, h_over_h0: h / p.h0(), h_over_h0_series: hubble_series(&p, r) / p.h0() };
                table.push(vec![row.r.into(), row.xi.into(), row.h.into(), row.h_over_h0.into(), row.h_over_h0_series.into()]);
                rows.push(row);
            }
            finish(cli, "cosmo hubble", &rows, &table)
        }
    }
}

fn series(cli: &Cli, a: &SeriesArgs) -> Result<String, String> {
    if a.order == 0 {
        return Err("--order must be at least 1".into());
    }
    let s = phi_series(a.order);
    let mut table = Table::new(&["k", "coefficient", "value"]);
    #[derive(Serialize)]
    struct Row {
        k: usize,
        coefficient: String,
        value: f64,
    }
    let mut rows = Vec::new();
    for (i, (q, v)) in s.coefficients().iter().zip(s.coefficients_f64()).enumerate() {
        table.push(vec![(i + 1).into(), q.to_string().into(), v.into()]);
        rows.push(Row { k: i + 1, coefficient: q.to_string(), value: v });
    }
    finish(cli, "series", &rows, &table)
}

fn residual(cli: &Cli, a: &ResidualArgs) -> Result<String, String> {
    let (form, field, lo, hi) = match a.family {
        Family::RadialLog => {
            let lo: Vec<f64> = (0..a.n).map(|i| 1.0 - 0.25 * i as f64).collect();
            let hi: Vec<f64> = lo.iter().map(|v| v + 1.0).collect();
            (LagrangianForm::EuclideanPower { n: a.n }, FieldSpec::RadialLog { c: a.c, r0: 1.0 }, lo, hi)
        }
        Family::IntervalLog => {
            let mut lo = vec![0.0; a.n];
            lo[0] = 3.0;
            let hi: Vec<f64> = lo.iter().map(|v| v + 1.0).collect();
            (LagrangianForm::PseudoPower { n: a.n }, FieldSpec::IntervalLog { c: a.c, s0: 1.0 }, lo, hi)
        }
        Family::BerwaldMooreLog => {
            (LagrangianForm::BerwaldMooreProduct, FieldSpec::BerwaldMooreLog { amplitude: a.c, s0: 1.0 }, vec![1.0; 4], vec![2.0; 4])
        }
    };
    let lo = a.lo.clone().unwrap_or(lo);
    let hi = a.hi.clone().unwrap_or(hi);
    let study = grid_convergence(&form, &field, &lo, &hi, &a.points).map_err(e)?;
    let mut table = Table::new(&["points", "h", "max_shared", "max_all", "rms", "order"]);
    for i in 0..study.spacings.len() {
        let order = if i == 0 { f64::NAN } else { study.orders[i - 1] };
        table.push(vec![
            a.points[i].into(),
            study.spacings[i].into(),
            study.max_residuals[i].into(),
            study.max_residuals_all[i].into(),
            study.rms_residuals[i].into(),
            order.into(),
        ]);
    }
    finish(cli, "residual", &study, &table)
}

fn index_label(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn curvature(cli: &Cli, a: &CurvatureArgs) -> Result<String, String> {
    if a.point.len() != DIM {
        return Err(format!("--point needs {DIM} coordinates"));
    }
    if !(a.h > 0.0) {
        return Err("--h must be positive".into());
    }
    let field = match a.family {
        CurvatureFamily::Exponential => ConformalExponentField::exponential(a.param),
        CurvatureFamily::IntervalLog => ConformalExponentField::interval_log(a.param).map_err(e)?,
        CurvatureFamily::Cosmo => ConformalExponentField::from_cosmology(Arc::new(integrate_phi(1.0, 1e-10).map_err(e)?)),
    };
    let exact = tensor_bundle(&field, &a.point, a.factor, None).map_err(e)?;
    let oracle = generic_oracle_curvature(|y| conformal_metric(&field, y), &a.point, a.h, a.factor).map_err(e)?;
    let delta = BundleDelta::between(&exact, &oracle);
    let diagnostic = scalar_curvature_diagnostic(&field, &a.point).map_err(e)?;

    let mut table = Table::new(&["tensor", "index", "closed_form", "oracle", "delta"]);
    let mut push = |name: &str, idx: &[usize], x: f64, y: f64| {
        table.push(vec![name.into(), index_label(idx).into(), x.into(), y.into(), (x - y).abs().into()]);
    };
    for i in 0..DIM {
        for k in 0..DIM {
            for l in 0..DIM {
                push("christoffel", &[i, k, l], exact.gamma(i, k, l), oracle.gamma(i, k, l));
            }
        }
    }
    for i in 0..DIM {
        for k in 0..DIM {
            for l in 0..DIM {
                for m in 0..DIM {
                    push("riemann", &[i, k, l, m], exact.riemann(i, k, l, m), oracle.riemann(i, k, l, m));
                }
            }
        }
    }
    for k in 0..DIM {
        for m in 0..DIM {
            push("ricci", &[k, m], exact.ricci(k, m), oracle.ricci(k, m));
        }
    }
    push("scalar", &[], exact.scalar, oracle.scalar);
    for k in 0..DIM {
        for m in 0..DIM {
            push("stress", &[k, m], exact.stress(k, m), oracle.stress(k, m));
        }
    }
    push("stress_trace", &[], exact.stress_trace, oracle.stress_trace);

    #[derive(Serialize)]
    struct Out<'a> {
        closed_form: &'a TensorBundle,
        oracle: &'a TensorBundle,
        delta: BundleDelta,
        scalar_diagnostic: finsler_core::curvature::ScalarCurvatureDiagnostic,
    }
    finish(cli, "curvature", &Out { closed_form: &exact, oracle: &oracle, delta, scalar_diagnostic: diagnostic }, &table)
}

#[derive(Serialize, Default)]
struct Diagnostics {
    straightness: Option<f64>,
    interval_slope: Option<f64>,
    expected_interval_slope: Option<f64>,
    interval_fit_residual: Option<f64>,
    isotropic_ratio_drift: Option<f64>,
    direction_drift: Option<f64>,
}

fn geodesic(cli: &Cli, a: &GeodesicArgs) -> Result<String, String> {
    let default_start = [1.0, 0.5, 0.3, 0.1];
    let mut diag = Diagnostics::default();
    let traj: Trajectory = if a.flow == Flow::Cosmo {
        let start = a.start.clone().unwrap_or_else(|| vec![0.06, 0.03, -0.02]);
        if start.len() != 3 {
            return Err("--start needs 3 spatial coordinates for the cosmological flow".into());
        }
        let sol = integrate_phi(1.0, 1e-10).map_err(e)?;
        let t = cosmo_trajectory(&sol, &start, (0.0, a.tau_max), a.tol).map_err(e)?;
        diag.direction_drift = Some(direction_drift(&t).map_err(e)?);
        t
    } else {
        let flow = match a.flow {
            Flow::RadialLog => FlowSpec::radial_log(a.n, a.c),
            Flow::IntervalLog => FlowSpec::interval_log(a.n, a.c),
            _ => FlowSpec::berwald_moore_log(a.c),
        }
        .map_err(e)?;
        let n = flow.space.dimension();
        let start = match &a.start {
            Some(s) => s.clone(),
            None if n <= default_start.len() => default_start[..n].to_vec(),
            None => return Err(format!("--start is required for n = {n}")),
        };
        let t = integrate_flow(&flow, &start, (0.0, a.tau_max), a.tol).map_err(e)?;
        diag.straightness = Some(straightness_deviation(&t).map_err(e)?);
        if a.flow == Flow::IntervalLog {
            let f = interval_fit(&t).map_err(e)?;
            diag.interval_slope = Some(f.slope);
            diag.expected_interval_slope = Some(f.expected_slope);
            diag.interval_fit_residual = Some(f.max_residual);
        }
        if a.flow == Flow::BerwaldMooreLog {
            diag.isotropic_ratio_drift = Some(isotropic_ratio_drift(&t).map_err(e)?);
        }
        t
    };
    let dim = traj.points.first().map_or(0, Vec::len);
    let mut header = vec!["tau".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header);
    for (t, p) in traj.taus.iter().zip(&traj.points) {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(p.iter().map(|v| Cell::F(*v)));
        table.push(row);
    }
    if cli.format == Format::Csv {
        let d = serde_json::to_value(&diag).map_err(e)?;
        if let Some(obj) = d.as_object() {
            for (k, v) in obj.iter().filter(|(_, v)| !v.is_null()) {
                eprintln!("{k} = {v}");
            }
        }
    }
    #[derive(Serialize)]
    struct Out<'a> {
        trajectory: &'a Trajectory,
        diagnostics: &'a Diagnostics,
    }
    finish(cli, "geodesic", &Out { trajectory: &traj, diagnostics: &diag }, &table)
}

fn verify(cli: &Cli, a: &VerifyArgs) -> CmdResult {
    if a.mc_samples < 2 {
        return Err("--mc-samples must be at least 2".into());
    }
    let report = verification::run(&VerifyConfig { seed: a.seed, mc_samples: a.mc_samples });
    let mut table = Table::new(&["criterion", "name", "passed", "value", "threshold", "comparison", "source"]);
    for c in &report.checks {
        table.push(vec![
            c.criterion.into(),
            c.name.clone().into(),
            c.passed.into(),
            c.value.into(),
            c.threshold.into(),
            method_label(&c.comparison).into(),
            c.source.clone().into(),
        ]);
    }
    #[derive(Serialize)]
    struct Out<'a> {
        passed: bool,
        checks: &'a [verification::Check],
    }
    let text = finish(cli, "verify", &Out { passed: report.passed(), checks: &report.checks }, &table)?;
    Ok((text, report.passed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> CmdResult {
        let cli = Cli::try_parse_from(std::iter::once("finsler-lab").chain(args.iter().copied())).expect("valid flags");
        run(&cli)
    }

    #[test]
    fn bad_flags_exit_with_two() {
        for args in [&["series", "--order", "x"][..], &["volume", "regularized", "--q0", "a"], &["nope"], &["cosmo", "hubble"]] {
            let err = Cli::try_parse_from(std::iter::once("finsler-lab").chain(args.iter().copied())).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{args:?}");
        }
    }

    #[test]
    fn series_table() {
        let (text, ok) = run_args(&["series", "--order", "5"]).unwrap();
        assert!(ok);
        assert_eq!(text, "k,coefficient,value\n1,1,1\n2,0,0\n3,-1/5,-0.2\n4,0,0\n5,6/35,0.17142857142857143\n");
    }

    #[test]
    fn json_envelope_echoes_parameters() {
        let (text, _) = run_args(&["series", "--format", "json"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["tool"], "finsler-lab");
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["parameters"]["arguments"]["series"]["order"], 3);
        assert_eq!(v["result"][2]["coefficient"], "-1/5");
    }

    #[test]
    fn hubble_columns() {
        let (text, _) = run_args(&["cosmo", "hubble", "--xi", "0,0.1"]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "r,xi,h,h_over_h0,h_over_h0_series");
        assert_eq!(lines[1], "0,0,1,1,1");
        assert!(lines[2].ends_with(",0.998"));
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let args = ["volume", "regularized", "--mc-samples", "50000", "--seed", "9"];
        assert_eq!(run_args(&args).unwrap(), run_args(&args).unwrap());
    }

    #[test]
    fn domain_errors_are_reported() {
        assert!(run_args(&["volume", "regularized", "--q0=-1"]).is_err());
        assert!(run_args(&["volume", "ellipsoid", "--matrix", "1,2;2,1"]).is_err());
        assert!(run_args(&["curvature", "--point", "1,2"]).is_err());
    }

    #[test]
    fn geodesic_and_residual_headers() {
        let (text, _) = run_args(&["geodesic", "--flow", "radial-log", "--n", "3"]).unwrap();
        assert!(text.starts_with("tau,x0,x1,x2\n"));
        let (text, _) = run_args(&["residual", "--points", "5,9"]).unwrap();
        assert!(text.starts_with("points,h,max_shared,max_all,rms,order\n"));
    }
}
