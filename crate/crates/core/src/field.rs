//! Lagrangian densities built from field gradients and Euler-Lagrange
//! residuals, point-wise and on lattices.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{minkowski_form, FieldSpec};
use crate::grid::{unflatten, Lattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialVariable {
    /// Euclidean radius `r`.
    Radius,
    /// Pseudo-Euclidean interval `s`.
    Interval,
}

/// Density family; reduced forms act on lattices over their own variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LagrangianForm {
    /// `(sum (dS)^2)^(n/2)`.
    EuclideanPower { n: usize },
    /// `(eta^ij dS_i dS_j)^(n/2)`.
    PseudoPower { n: usize },
    /// `rho^(n-1) |S'|^n` on a 1-D lattice over `rho`.
    RadialReduced { n: usize, variable: RadialVariable },
    /// `r^2 ((dS/dx0)^2 - (dS/dr)^2)^2` on a lattice over `(x0, r)`.
    SphericalReduced,
    /// `dS1 dS2 dS3 dS4` in the isotropic basis.
    BerwaldMooreProduct,
    /// `s^3 (S')^4` on a 1-D lattice over `s`.
    BerwaldMooreRadial,
}

impl LagrangianForm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LagrangianForm::EuclideanPower { n } | LagrangianForm::PseudoPower { n } | LagrangianForm::RadialReduced { n, .. }
                if n < 2 =>
            {
                Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")))
            }
            _ => Ok(()),
        }
    }

    /// Number of lattice axes the form acts on.
    pub fn arity(&self) -> usize {
        match *self {
            LagrangianForm::EuclideanPower { n } | LagrangianForm::PseudoPower { n } => n,
            LagrangianForm::RadialReduced { .. } | LagrangianForm::BerwaldMooreRadial => 1,
            LagrangianForm::SphericalReduced => 2,
            LagrangianForm::BerwaldMooreProduct => 4,
        }
    }

    /// Homogeneity degree in the gradient.
    pub fn degree(&self) -> usize {
        match *self {
            LagrangianForm::EuclideanPower { n } | LagrangianForm::PseudoPower { n } | LagrangianForm::RadialReduced { n, .. } => n,
            _ => 4,
        }
    }

    fn check(&self, x: &[f64], grad: &[f64]) -> Result<()> {
        self.validate()?;
        let a = self.arity();
        if grad.len() != a {
            return Err(Error::DimensionMismatch { expected: a, got: grad.len() });
        }
        if x.len() != a {
            return Err(Error::DimensionMismatch { expected: a, got: x.len() });
        }
        Ok(())
    }
}

impl fmt::Display for LagrangianForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LagrangianForm::EuclideanPower { n } => write!(f, "euclidean-power({n})"),
            LagrangianForm::PseudoPower { n } => write!(f, "pseudo-power({n})"),
            LagrangianForm::RadialReduced { n, variable } => write!(f, "radial-reduced({n}, {variable:?})"),
            LagrangianForm::SphericalReduced => f.write_str("spherical-reduced"),
            LagrangianForm::BerwaldMooreProduct => f.write_str("berwald-moore-product"),
            LagrangianForm::BerwaldMooreRadial => f.write_str("berwald-moore-radial"),
        }
    }
}

fn signature(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `q^(p/2)` for integer `p`, rejecting a negative base when `p` is odd.
fn half_power(q: f64, p: i32) -> Result<f64> {
    if p % 2 == 0 {
        Ok(q.powi(p / 2))
    } else if q < 0.0 {
        Err(Error::NegativeBase(q))
    } else {
        Ok(q.powf(p as f64 / 2.0))
    }
}

fn signed_pow(v: f64, p: i32) -> f64 {
    v.signum() * v.abs().powi(p)
}

/// Density value. `x` are the form's own coordinates; only reduced forms
/// depend on it.
pub fn lagrangian_density(form: &LagrangianForm, x: &[f64], grad: &[f64]) -> Result<f64> {
    form.check(x, grad)?;
    match *form {
        LagrangianForm::EuclideanPower { n } => half_power(grad.iter().map(|g| g * g).sum(), n as i32),
        LagrangianForm::PseudoPower { n } => half_power(minkowski_form(grad), n as i32),
        LagrangianForm::RadialReduced { n, .. } => Ok(x[0].powi(n as i32 - 1) * grad[0].abs().powi(n as i32)),
        LagrangianForm::SphericalReduced => {
            let q = grad[0] * grad[0] - grad[1] * grad[1];
            Ok(x[1] * x[1] * q * q)
        }
        LagrangianForm::BerwaldMooreProduct => Ok(grad.iter().product()),
        LagrangianForm::BerwaldMooreRadial => Ok(x[0].powi(3) * grad[0].powi(4)),
    }
}

/// Component `d` of the flux whose divergence is the field equation
/// (the density's gradient derivative up to a constant factor).
pub fn flux_component(form: &LagrangianForm, x: &[f64], grad: &[f64], d: usize) -> Result<f64> {
    match *form {
        LagrangianForm::EuclideanPower { n } => {
            let q: f64 = grad.iter().map(|g| g * g).sum();
            Ok(grad[d] * half_power(q, n as i32 - 2)?)
        }
        LagrangianForm::PseudoPower { n } => {
            let q = minkowski_form(grad);
            Ok(signature(d) * grad[d] * half_power(q, n as i32 - 2)?)
        }
        LagrangianForm::RadialReduced { n, .. } => Ok(x[0].powi(n as i32 - 1) * signed_pow(grad[0], n as i32 - 1)),
        LagrangianForm::SphericalReduced => {
            let q = grad[0] * grad[0] - grad[1] * grad[1];
            let r2 = x[1] * x[1];
            Ok(if d == 0 { r2 * grad[0] * q } else { -r2 * grad[1] * q })
        }
        LagrangianForm::BerwaldMooreProduct => Ok((0..4).filter(|j| *j != d).map(|j| grad[j]).product()),
        LagrangianForm::BerwaldMooreRadial => Ok(x[0].powi(3) * grad[0].powi(3)),
    }
}

/// `d F_d / d g_j` for the unreduced forms.
fn flux_jacobian(form: &LagrangianForm, grad: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = grad.len();
    match *form {
        LagrangianForm::EuclideanPower { n: p } | LagrangianForm::PseudoPower { n: p } => {
            let pseudo = matches!(form, LagrangianForm::PseudoPower { .. });
            let sig = |i: usize| if pseudo { signature(i) } else { 1.0 };
            let q: f64 = (0..n).map(|i| sig(i) * grad[i] * grad[i]).sum();
            let m = p as f64 / 2.0 - 1.0;
            let qm = half_power(q, p as i32 - 2)?;
            let qm1 = if m == 0.0 { 0.0 } else { m * half_power(q, p as i32 - 4)? };
            Ok((0..n)
                .map(|d| {
                    (0..n)
                        .map(|j| {
                            let diag = if d == j { qm } else { 0.0 };
                            sig(d) * (diag + grad[d] * qm1 * 2.0 * sig(j) * grad[j])
                        })
                        .collect()
                })
                .collect())
        }
        LagrangianForm::BerwaldMooreProduct => Ok((0..4)
            .map(|d| {
                (0..4)
                    .map(|j| if j == d { 0.0 } else { (0..4).filter(|k| *k != d && *k != j).map(|k| grad[k]).product() })
                    .collect()
            })
            .collect()),
        _ => Err(Error::InvalidParameter(format!("{form} has no point-wise expansion; use radial_residual"))),
    }
}

fn check_unreduced(form: &LagrangianForm, field: &FieldSpec, x: &[f64]) -> Result<()> {
    form.validate()?;
    if matches!(form, LagrangianForm::RadialReduced { .. } | LagrangianForm::SphericalReduced | LagrangianForm::BerwaldMooreRadial) {
        return Err(Error::InvalidParameter(format!("{form} has no point-wise expansion; use radial_residual")));
    }
    let a = form.arity();
    if x.len() != a {
        return Err(Error::DimensionMismatch { expected: a, got: x.len() });
    }
    if let Some(n) = field.dimension() {
        if n != a {
            return Err(Error::DimensionMismatch { expected: a, got: n });
        }
    }
    Ok(())
}

/// Field equation `sum_d d/dx^d F_d` at `x`, expanded with the analytic
/// Hessian of the field.
pub fn field_equation_residual(form: &LagrangianForm, field: &FieldSpec, x: &[f64]) -> Result<f64> {
    check_unreduced(form, field, x)?;
    let g = field.gradient(x)?;
    let h = field.hessian(x)?;
    let jac = flux_jacobian(form, &g)?;
    let mut total = 0.0;
    for d in 0..x.len() {
        for j in 0..x.len() {
            total += jac[d][j] * h[j][d];
        }
    }
    Ok(total)
}

/// Same quantity as [`field_equation_residual`], by 4th-order central
/// differences of the exact flux with step `h`.
pub fn field_equation_residual_fd(form: &LagrangianForm, field: &FieldSpec, x: &[f64], h: f64) -> Result<f64> {
    check_unreduced(form, field, x)?;
    let mut total = 0.0;
    let mut xp = x.to_vec();
    for d in 0..x.len() {
        let mut f = |off: f64| -> Result<f64> {
            xp[d] = x[d] + off;
            let g = field.gradient(&xp)?;
            flux_component(form, &xp, &g, d)
        };
        let (f2, f1, m1, m2) = (f(2.0 * h)?, f(h)?, f(-h)?, f(-2.0 * h)?);
        xp[d] = x[d];
        total += (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub max: f64,
    pub rms: f64,
    pub count: usize,
}

impl ResidualNorms {
    fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let (mut max, mut sum, mut count) = (0.0f64, 0.0, 0usize);
        for v in values {
            max = max.max(v.abs());
            sum += v * v;
            count += 1;
        }
        let rms = if count > 0 { (sum / count as f64).sqrt() } else { 0.0 };
        Self { max, rms, count }
    }
}

/// Residual on a lattice; boundary nodes hold 0 and are excluded from norms.
#[derive(Debug, Clone)]
pub struct ResidualField {
    pub residual: Lattice,
    pub norms: ResidualNorms,
}

const MIN_POINTS: usize = 5;

fn check_lattice(lattice: &Lattice, arity: usize) -> Result<()> {
    if lattice.ndim() != arity {
        return Err(Error::DimensionMismatch { expected: arity, got: lattice.ndim() });
    }
    if lattice.dims().iter().any(|d| *d < MIN_POINTS) {
        return Err(Error::GridTooSmall);
    }
    Ok(())
}

/// Divergence-form residual of the field equation on interior nodes.
///
/// Fluxes live at half steps: the normal derivative is a one-sided
/// difference across the cell face, tangential derivatives average the
/// central differences of the two adjacent nodes.
pub fn euler_lagrange_residual(form: &LagrangianForm, lattice: &Lattice) -> Result<ResidualField> {
    form.validate()?;
    check_lattice(lattice, form.arity())?;
    let n = lattice.ndim();
    let dims = lattice.dims().to_vec();
    let strides = lattice.strides();
    let h = lattice.spacing().to_vec();
    let origin = lattice.origin().to_vec();
    let v = lattice.values();

    let central = |q: usize, j: usize| (v[q + strides[j]] - v[q - strides[j]]) / (2.0 * h[j]);
    // flux through the face between `p` and `p + e_d`
    let face_flux = |p: usize, idx: &[usize], d: usize, g: &mut [f64], x: &mut [f64]| -> Result<f64> {
        let q = p + strides[d];
        for j in 0..n {
            x[j] = origin[j] + h[j] * idx[j] as f64;
            g[j] = if j == d { (v[q] - v[p]) / h[d] } else { 0.5 * (central(p, j) + central(q, j)) };
        }
        x[d] += 0.5 * h[d];
        flux_component(form, x, g, d)
    };

    let values: Vec<Result<f64>> = (0..lattice.len())
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], vec![0usize; n], vec![0.0; n], vec![0.0; n]),
            |(idx, lower, g, x), p| {
                unflatten(p, &dims, idx);
                if !lattice.is_interior(idx) {
                    return Ok(0.0);
                }
                let mut total = 0.0;
                for d in 0..n {
                    let up = face_flux(p, idx, d, g, x)?;
                    lower.copy_from_slice(idx);
                    lower[d] -= 1;
                    let down = face_flux(p - strides[d], lower, d, g, x)?;
                    total += (up - down) / h[d];
                }
                Ok(total)
            },
        )
        .collect();
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let norms = interior_norms(lattice, &values);
    let residual = Lattice::new(origin, h, dims, values)?;
    Ok(ResidualField { residual, norms })
}

fn interior_norms(lattice: &Lattice, values: &[f64]) -> ResidualNorms {
    let mut idx = vec![0; lattice.ndim()];
    let dims = lattice.dims();
    ResidualNorms::from_values((0..values.len()).filter_map(|p| {
        unflatten(p, dims, &mut idx);
        lattice.is_interior(&idx).then_some(values[p])
    }))
}

/// A one-variable profile `S(rho)` for [`radial_residual`].
#[derive(Clone)]
pub enum RadialFamily {
    RadialLog { c: f64, r0: f64 },
    IntervalLog { c: f64, s0: f64 },
    BerwaldMooreLog { amplitude: f64, s0: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RadialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFamily::RadialLog { c, r0 } => write!(f, "RadialLog {{ c: {c}, r0: {r0} }}"),
            RadialFamily::IntervalLog { c, s0 } => write!(f, "IntervalLog {{ c: {c}, s0: {s0} }}"),
            RadialFamily::BerwaldMooreLog { amplitude, s0 } => {
                write!(f, "BerwaldMooreLog {{ amplitude: {amplitude}, s0: {s0} }}")
            }
            RadialFamily::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Reduced field equation: `d/drho [rho^(n-1) sgn(S') |S'|^(n-1)]`, or
/// `d/ds [s S']` for the Berwald-Moore profile.
pub fn radial_residual(family: &RadialFamily, n: usize, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::NonpositiveRadius(rho));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
    }
    let p = n as i32 - 1;
    let power_law = |ds: f64, dds: f64| {
        p as f64 * rho.powi(p - 1) * signed_pow(ds, p) + rho.powi(p) * p as f64 * ds.abs().powi(p - 1) * dds
    };
    match family {
        RadialFamily::RadialLog { c, .. } | RadialFamily::IntervalLog { c, .. } => {
            Ok(power_law(c / rho, -c / (rho * rho)))
        }
        RadialFamily::BerwaldMooreLog { amplitude, .. } => {
            let (ds, dds) = (amplitude / rho, -amplitude / (rho * rho));
            Ok(ds + rho * dds)
        }
        RadialFamily::Custom(s) => {
            let h = 1e-4 * rho.max(1e-3);
            if rho - 2.0 * h <= 0.0 {
                return Err(Error::NonpositiveRadius(rho - 2.0 * h));
            }
            let flux = |t: f64| {
                let ds = (s(t + h) - s(t - h)) / (2.0 * h);
                t.powi(p) * signed_pow(ds, p)
            };
            Ok((flux(rho + h) - flux(rho - h)) / (2.0 * h))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerationKind {
    /// `S_xx + S_yy`.
    Laplace,
    /// `S_tt - S_xx`, axis 0 is time.
    Wave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerationReport {
    pub linear: ResidualNorms,
    pub nonlinear: ResidualNorms,
}

/// Linear 5-point residual on an `n = 2` lattice next to the nonlinear one.
pub fn two_dim_degeneration_check(lattice: &Lattice, kind: DegenerationKind) -> Result<DegenerationReport> {
    check_lattice(lattice, 2)?;
    let strides = lattice.strides();
    let h = lattice.spacing();
    let v = lattice.values();
    let sign = match kind {
        DegenerationKind::Laplace => 1.0,
        DegenerationKind::Wave => -1.0,
    };
    let second = |p: usize, j: usize| (v[p + strides[j]] - 2.0 * v[p] + v[p - strides[j]]) / (h[j] * h[j]);
    let mut idx = [0usize; 2];
    let linear = ResidualNorms::from_values((0..lattice.len()).filter_map(|p| {
        unflatten(p, lattice.dims(), &mut idx);
        lattice.is_interior(&idx).then(|| second(p, 0) + sign * second(p, 1))
    }));
    let form = match kind {
        DegenerationKind::Laplace => LagrangianForm::EuclideanPower { n: 2 },
        DegenerationKind::Wave => LagrangianForm::PseudoPower { n: 2 },
    };
    let nonlinear = euler_lagrange_residual(&form, lattice)?.norms;
    Ok(DegenerationReport { linear, nonlinear })
}

/// `eta^ij dS_i dS_j` at `x`.
pub fn eikonal_residual(field: &FieldSpec, x: &[f64]) -> Result<f64> {
    Ok(minkowski_form(&field.gradient(x)?))
}

/// Scalar fields `f_a` with signs `eps_a`.
#[derive(Debug, Clone)]
pub struct MetricAssembly {
    pub fields: Vec<FieldSpec>,
    pub signs: Vec<f64>,
}

impl MetricAssembly {
    pub fn new(fields: Vec<FieldSpec>, signs: Vec<f64>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidParameter("at least one field is required".into()));
        }
        if fields.len() != signs.len() {
            return Err(Error::DimensionMismatch { expected: fields.len(), got: signs.len() });
        }
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::InvalidParameter("signs must be +1 or -1".into()));
        }
        Ok(Self { fields, signs })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledMetric {
    pub matrix: DMatrix<f64>,
    pub determinant: f64,
}

impl AssembledMetric {
    /// `det g / max|g_ij|^n`, comparable across scales.
    pub fn scaled_determinant(&self) -> f64 {
        let scale = self.matrix.amax();
        if scale == 0.0 {
            return 0.0;
        }
        self.determinant / scale.powi(self.matrix.nrows() as i32)
    }
}

/// `g_ij = sum_a eps_a df_a/dx^i df_a/dx^j`.
pub fn assemble_metric(assembly: &MetricAssembly, x: &[f64]) -> Result<AssembledMetric> {
    let n = x.len();
    let mut g = DMatrix::zeros(n, n);
    for (f, eps) in assembly.fields.iter().zip(&assembly.signs) {
        let d = f.gradient(x)?;
        if d.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: d.len() });
        }
        let col = nalgebra::DVector::from_vec(d);
        g += *eps * &col * col.transpose();
    }
    let determinant = g.determinant();
    Ok(AssembledMetric { matrix: g, determinant })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub spacings: Vec<f64>,
    /// Max residual over the coarsest grid's interior nodes, which every
    /// refinement contains.
    pub max_residuals: Vec<f64>,
    /// Max residual over all interior nodes of each grid.
    pub max_residuals_all: Vec<f64>,
    pub rms_residuals: Vec<f64>,
    /// Observed orders between consecutive refinements, from `max_residuals`.
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Samples `field` on `[lo, hi]` with each point count and records the
/// residual maxima. Point counts must nest: `(m_k - 1)` a multiple of
/// `(m_0 - 1)`.
pub fn grid_convergence(form: &LagrangianForm, field: &FieldSpec, lo: &[f64], hi: &[f64], points: &[usize]) -> Result<ConvergenceStudy> {
    let coarse = *points.first().ok_or(Error::TooFewSamples)?;
    if coarse < MIN_POINTS {
        return Err(Error::GridTooSmall);
    }
    if points.iter().any(|m| (m - 1) % (coarse - 1) != 0) {
        return Err(Error::InvalidParameter("grid point counts must nest".into()));
    }
    let mut study = ConvergenceStudy {
        spacings: Vec::new(),
        max_residuals: Vec::new(),
        max_residuals_all: Vec::new(),
        rms_residuals: Vec::new(),
        orders: Vec::new(),
    };
    for &m in points {
        let lattice = Lattice::sample_box(lo, hi, m, |x| field.value(x))?;
        let r = euler_lagrange_residual(form, &lattice)?;
        let ratio = (m - 1) / (coarse - 1);
        let n = lo.len();
        let mut cidx = vec![0usize; n];
        let cdims = vec![coarse; n];
        let cfield = Lattice::new(vec![0.0; n], vec![1.0; n], cdims.clone(), vec![0.0; coarse.pow(n as u32)])?;
        let mut shared = 0.0f64;
        let mut fidx = vec![0usize; n];
        for c in 0..cfield.len() {
            unflatten(c, &cdims, &mut cidx);
            if !cfield.is_interior(&cidx) {
                continue;
            }
            for d in 0..n {
                fidx[d] = cidx[d] * ratio;
            }
            shared = shared.max(r.residual.at(&fidx).abs());
        }
        study.spacings.push(lattice.spacing()[0]);
        study.max_residuals.push(shared);
        study.max_residuals_all.push(r.norms.max);
        study.rms_residuals.push(r.norms.rms);
    }
    study.orders = observed_orders(&study.spacings, &study.max_residuals);
    Ok(study)
}

/// `ln(e_k / e_{k+1}) / ln(h_k / h_{k+1})`.
pub fn observed_orders(spacings: &[f64], errors: &[f64]) -> Vec<f64> {
    spacings
        .windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}
