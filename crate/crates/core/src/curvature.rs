//! Curvature of the conformally flat metric `g = kappa^2 eta` in four
//! dimensions, written through `a = ln kappa^2`, plus a generic
//! finite-difference oracle for arbitrary metrics.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cosmology::{psi_and_field, CosmoSolution};
use crate::error::{Error, Result};
use crate::geometry::{eta, FieldSpec};

pub const DIM: usize = 4;

type Vec4 = [f64; DIM];
type Mat4 = [[f64; DIM]; DIM];

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// How `a(x)` and its derivatives are obtained.
#[derive(Clone)]
pub enum ExponentProvider {
    Constant(f64),
    /// `a = 2 beta x0`, i.e. `kappa = exp(beta x0)`.
    Linear { beta: f64 },
    /// `a = ln(C^2 / s^2)`, i.e. `kappa = |C| / s`.
    IntervalLog { c: f64 },
    /// `a = a0 + b.x + x^T H x / 2`.
    Quadratic { a0: f64, linear: Vec4, hessian: Mat4 },
    /// `kappa(x)` evaluated directly; derivatives of `ln kappa^2` by central
    /// differences with step `1e-4 (1 + |x|)`.
    FiniteDifference(ScalarFn),
}

impl fmt::Debug for ExponentProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentProvider::Constant(a) => write!(f, "Constant({a})"),
            ExponentProvider::Linear { beta } => write!(f, "Linear {{ beta: {beta} }}"),
            ExponentProvider::IntervalLog { c } => write!(f, "IntervalLog {{ c: {c} }}"),
            ExponentProvider::Quadratic { a0, linear, hessian } => {
                write!(f, "Quadratic {{ a0: {a0}, linear: {linear:?}, hessian: {hessian:?} }}")
            }
            ExponentProvider::FiniteDifference(_) => f.write_str("FiniteDifference(..)"),
        }
    }
}

/// `a(x) = ln kappa^2(x)` with first and second derivatives.
#[derive(Debug, Clone)]
pub struct ConformalExponentField {
    provider: ExponentProvider,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentJet {
    pub a: f64,
    pub da: Vec4,
    pub dda: Mat4,
}

impl ConformalExponentField {
    pub fn new(provider: ExponentProvider) -> Self {
        Self { provider }
    }

    pub fn constant(a: f64) -> Self {
        Self::new(ExponentProvider::Constant(a))
    }

    pub fn exponential(beta: f64) -> Self {
        Self::new(ExponentProvider::Linear { beta })
    }

    pub fn interval_log(c: f64) -> Result<Self> {
        if c == 0.0 {
            return Err(Error::InvalidParameter("C must be nonzero".into()));
        }
        Ok(Self::new(ExponentProvider::IntervalLog { c }))
    }

    pub fn quadratic(a0: f64, linear: Vec4, hessian: Mat4) -> Self {
        Self::new(ExponentProvider::Quadratic { a0, linear, hessian })
    }

    pub fn from_kappa<F>(kappa: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self::new(ExponentProvider::FiniteDifference(Arc::new(kappa)))
    }

    /// `kappa = gamma sqrt(1 - phi^2) S` of an integrated solution.
    pub fn from_cosmology(sol: Arc<CosmoSolution>) -> Self {
        Self::from_kappa(move |x: &[f64]| {
            let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
            Ok(psi_and_field(&sol, x[0], r)?.kappa)
        })
    }

    pub fn provider(&self) -> &ExponentProvider {
        &self.provider
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.provider, ExponentProvider::FiniteDifference(_))
    }

    pub fn kappa(&self, x: &[f64]) -> Result<f64> {
        Ok((0.5 * self.value(x)?).exp())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(x)?;
        match &self.provider {
            ExponentProvider::Constant(a) => Ok(*a),
            ExponentProvider::Linear { beta } => Ok(2.0 * beta * x[0]),
            ExponentProvider::IntervalLog { c } => Ok((c * c / interval2(x)?).ln()),
            ExponentProvider::Quadratic { a0, linear, hessian } => {
                let mut v = *a0;
                for i in 0..DIM {
                    v += linear[i] * x[i];
                    for j in 0..DIM {
                        v += 0.5 * x[i] * hessian[i][j] * x[j];
                    }
                }
                Ok(v)
            }
            ExponentProvider::FiniteDifference(kappa) => {
                let k = kappa(x)?;
                if !(k > 0.0) {
                    return Err(Error::NonpositiveKappa(k));
                }
                Ok((k * k).ln())
            }
        }
    }

    /// `a`, `da` and `dda` at `x`.
    pub fn jet(&self, x: &[f64]) -> Result<ExponentJet> {
        check_point(x)?;
        let a = self.value(x)?;
        let mut da = [0.0; DIM];
        let mut dda = [[0.0; DIM]; DIM];
        match &self.provider {
            ExponentProvider::Constant(_) => {}
            ExponentProvider::Linear { beta } => da[0] = 2.0 * beta,
            ExponentProvider::IntervalLog { .. } => {
                let s2 = interval2(x)?;
                let lx: Vec<f64> = (0..DIM).map(|i| eta(i, i) * x[i]).collect();
                for i in 0..DIM {
                    da[i] = -2.0 * lx[i] / s2;
                    for j in 0..DIM {
                        dda[i][j] = -2.0 * eta(i, j) / s2 + 4.0 * lx[i] * lx[j] / (s2 * s2);
                    }
                }
            }
            ExponentProvider::Quadratic { linear, hessian, .. } => {
                for i in 0..DIM {
                    da[i] = linear[i] + (0..DIM).map(|j| hessian[i][j] * x[j]).sum::<f64>();
                }
                dda = *hessian;
            }
            ExponentProvider::FiniteDifference(_) => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let h = 1e-4 * (1.0 + norm);
                let at = |shift: &[(usize, f64)]| -> Result<f64> {
                    let mut y = x.to_vec();
                    for (i, s) in shift {
                        y[*i] += s;
                    }
                    self.value(&y).map_err(|e| Error::DerivativeUnavailable(e.to_string()))
                };
                for i in 0..DIM {
                    let (p, m) = (at(&[(i, h)])?, at(&[(i, -h)])?);
                    da[i] = (p - m) / (2.0 * h);
                    dda[i][i] = (p - 2.0 * a + m) / (h * h);
                    for j in 0..i {
                        let v = (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                            + at(&[(i, -h), (j, -h)])?)
                            / (4.0 * h * h);
                        dda[i][j] = v;
                        dda[j][i] = v;
                    }
                }
            }
        }
        Ok(ExponentJet { a, da, dda })
    }
}

fn check_point(x: &[f64]) -> Result<()> {
    if x.len() != DIM {
        return Err(Error::DimensionMismatch { expected: DIM, got: x.len() });
    }
    Ok(())
}

fn interval2(x: &[f64]) -> Result<f64> {
    let s2 = x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - x[3] * x[3];
    if !(s2 > 0.0) {
        return Err(Error::OutsideDomain(format!("interval^2 = {s2} is not positive")));
    }
    Ok(s2)
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `eta^is v_s`; `eta` is its own inverse.
fn raise(v: &Vec4) -> Vec4 {
    let mut out = *v;
    for (i, o) in out.iter_mut().enumerate() {
        *o *= eta(i, i);
    }
    out
}

fn box_of(dda: &Mat4) -> f64 {
    (0..DIM).map(|i| eta(i, i) * dda[i][i]).sum()
}

fn grad2(da: &Vec4) -> f64 {
    (0..DIM).map(|i| eta(i, i) * da[i] * da[i]).sum()
}

/// Point-wise curvature tensors. Indices are stored row-major in the
/// order they are written: `christoffel[i][k][l] = Gamma^i_kl`,
/// `riemann[i][k][l][m] = R^i_klm`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorBundle {
    pub point: Vec<f64>,
    pub dim: usize,
    pub christoffel: Vec<f64>,
    pub riemann: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub stress: Vec<f64>,
    pub stress_trace: f64,
    pub factor: f64,
    /// `T^k_m` of the field, when one was supplied.
    pub full_stress: Option<Vec<f64>>,
}

impl TensorBundle {
    pub fn gamma(&self, i: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.christoffel[(i * n + k) * n + l]
    }

    pub fn riemann(&self, i: usize, k: usize, l: usize, m: usize) -> f64 {
        let n = self.dim;
        self.riemann[((i * n + k) * n + l) * n + m]
    }

    pub fn ricci(&self, k: usize, m: usize) -> f64 {
        self.ricci[k * self.dim + m]
    }

    pub fn stress(&self, k: usize, m: usize) -> f64 {
        self.stress[k * self.dim + m]
    }
}

fn jet_of(field: &ConformalExponentField, x: &[f64]) -> Result<ExponentJet> {
    field.jet(x).map_err(|e| match e {
        Error::DimensionMismatch { .. } | Error::DerivativeUnavailable(_) => e,
        other => Error::DerivativeUnavailable(other.to_string()),
    })
}

/// `Gamma^i_kl = (a_l delta^i_k + a_k delta^i_l - eta^is a_s eta_kl) / 2`.
pub fn christoffel(field: &ConformalExponentField, x: &[f64]) -> Result<[[[f64; DIM]; DIM]; DIM]> {
    let j = jet_of(field, x)?;
    Ok(christoffel_from(&j.da))
}

fn christoffel_from(da: &Vec4) -> [[[f64; DIM]; DIM]; DIM] {
    let up = raise(da);
    let mut g = [[[0.0; DIM]; DIM]; DIM];
    for (i, gi) in g.iter_mut().enumerate() {
        for k in 0..DIM {
            for l in 0..DIM {
                gi[k][l] = 0.5 * (da[l] * delta(i, k) + da[k] * delta(i, l) - up[i] * eta(k, l));
            }
        }
    }
    g
}

/// `R^i_klm` in closed form in terms of `da` and `dda`.
pub fn riemann(field: &ConformalExponentField, x: &[f64]) -> Result<Vec<f64>> {
    let j = jet_of(field, x)?;
    Ok(riemann_from(&j.da, &j.dda))
}

fn riemann_from(da: &Vec4, dda: &Mat4) -> Vec<f64> {
    let up = raise(da);
    let q = grad2(da);
    let mut out = vec![0.0; DIM * DIM * DIM * DIM];
    for i in 0..DIM {
        // eta^is a_sl
        let up2: Vec4 = std::array::from_fn(|l| eta(i, i) * dda[i][l]);
        for k in 0..DIM {
            for l in 0..DIM {
                for m in 0..DIM {
                    let second = 0.5
                        * (dda[l][k] * delta(i, m) - dda[k][m] * delta(i, l) - up2[l] * eta(k, m) + up2[m] * eta(k, l));
                    let first = 0.25
                        * (da[m] * da[k] * delta(i, l) - da[l] * da[k] * delta(i, m) - q * delta(i, l) * eta(k, m)
                            + da[l] * eta(k, m) * up[i]
                            + q * delta(i, m) * eta(k, l)
                            - da[m] * eta(k, l) * up[i]);
                    out[((i * DIM + k) * DIM + l) * DIM + m] = second + first;
                }
            }
        }
    }
    out
}

/// `R_km = -a_km + a_k a_m / 2 - (box a + |da|^2) eta_km / 2`.
pub fn ricci(field: &ConformalExponentField, x: &[f64]) -> Result<Mat4> {
    let j = jet_of(field, x)?;
    Ok(ricci_from(&j.da, &j.dda))
}

fn ricci_from(da: &Vec4, dda: &Mat4) -> Mat4 {
    let b = box_of(dda);
    let q = grad2(da);
    let mut r = [[0.0; DIM]; DIM];
    for k in 0..DIM {
        for m in 0..DIM {
            r[k][m] = 0.5 * (-2.0 * dda[k][m] - b * eta(k, m) + da[k] * da[m] - q * eta(k, m));
        }
    }
    r
}

/// `R = kappa^-2 eta^km R_km`.
pub fn scalar_curvature(field: &ConformalExponentField, x: &[f64]) -> Result<f64> {
    let j = jet_of(field, x)?;
    Ok(scalar_from(&j))
}

fn scalar_from(j: &ExponentJet) -> f64 {
    let r = ricci_from(&j.da, &j.dda);
    let trace: f64 = (0..DIM).map(|k| eta(k, k) * r[k][k]).sum();
    trace * (-j.a).exp()
}

/// The traced Ricci curvature next to the alternative closed expression
/// `-3 kappa^-2 (2 box a + |da|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarCurvatureDiagnostic {
    pub trace: f64,
    pub closed_expression: f64,
    /// `closed_expression / trace`; NaN when the trace vanishes.
    pub ratio: f64,
}

pub fn scalar_curvature_diagnostic(field: &ConformalExponentField, x: &[f64]) -> Result<ScalarCurvatureDiagnostic> {
    let j = jet_of(field, x)?;
    let trace = scalar_from(&j);
    let closed_expression = -3.0 * (-j.a).exp() * (2.0 * box_of(&j.dda) + grad2(&j.da));
    let ratio = if trace == 0.0 { f64::NAN } else { closed_expression / trace };
    Ok(ScalarCurvatureDiagnostic { trace, closed_expression, ratio })
}

/// `T_km = factor (R_km - kappa^2 eta_km R / 2)` and its trace
/// `T = kappa^-2 eta^km T_km`.
pub fn stress_energy(field: &ConformalExponentField, x: &[f64], factor: f64) -> Result<(Mat4, f64)> {
    let j = jet_of(field, x)?;
    let r = ricci_from(&j.da, &j.dda);
    let scalar = scalar_from(&j);
    let k2 = j.a.exp();
    let mut t = [[0.0; DIM]; DIM];
    for k in 0..DIM {
        for m in 0..DIM {
            t[k][m] = factor * (r[k][m] - 0.5 * k2 * eta(k, m) * scalar);
        }
    }
    let trace = (0..DIM).map(|k| eta(k, k) * t[k][k]).sum::<f64>() / k2;
    Ok((t, trace))
}

/// `T^k_m = 4 eta^ks S_s S_m Q - delta^k_m Q^2`, `Q = eta^rs S_r S_s`.
pub fn full_stress_energy(field: &FieldSpec, x: &[f64]) -> Result<Mat4> {
    check_point(x)?;
    let g = field.gradient(x).map_err(|e| match e {
        Error::BoundaryPoint => e,
        other => Error::DerivativeUnavailable(other.to_string()),
    })?;
    if g.len() != DIM {
        return Err(Error::DimensionMismatch { expected: DIM, got: g.len() });
    }
    Ok(full_stress_from_gradient(&[g[0], g[1], g[2], g[3]]))
}

pub fn full_stress_from_gradient(g: &Vec4) -> Mat4 {
    let up = raise(g);
    let q = grad2(g);
    let mut t = [[0.0; DIM]; DIM];
    for k in 0..DIM {
        for m in 0..DIM {
            t[k][m] = 4.0 * up[k] * g[m] * q - delta(k, m) * q * q;
        }
    }
    t
}

/// Every tensor of the chain at `x`.
pub fn tensor_bundle(field: &ConformalExponentField, x: &[f64], factor: f64, s_field: Option<&FieldSpec>) -> Result<TensorBundle> {
    let j = jet_of(field, x)?;
    let gamma = christoffel_from(&j.da);
    let riem = riemann_from(&j.da, &j.dda);
    let ric = ricci_from(&j.da, &j.dda);
    let (t, t_trace) = stress_energy(field, x, factor)?;
    let full = match s_field {
        Some(f) => Some(full_stress_energy(f, x)?.iter().flatten().copied().collect()),
        None => None,
    };
    Ok(TensorBundle {
        point: x.to_vec(),
        dim: DIM,
        christoffel: gamma.iter().flatten().flatten().copied().collect(),
        riemann: riem,
        ricci: ric.iter().flatten().copied().collect(),
        scalar: scalar_from(&j),
        stress: t.iter().flatten().copied().collect(),
        stress_trace: t_trace,
        factor,
        full_stress: full,
    })
}

/// Curvature of an arbitrary metric `g(x)` by central differences with step
/// `h`: Christoffel symbols from differenced `g`, Riemann from differenced
/// Christoffel symbols, then the textbook contractions.
pub fn generic_oracle_curvature<G>(metric: G, x: &[f64], h: f64, factor: f64) -> Result<TensorBundle>
where
    G: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let n = x.len();
    if !(h > 0.0) {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }
    let shifted = |base: &[f64], i: usize, s: f64| {
        let mut y = base.to_vec();
        y[i] += s;
        y
    };
    let gamma_at = |y: &[f64]| -> Result<Vec<f64>> {
        let g = metric(y)?;
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.nrows() });
        }
        let inv = g.clone().try_inverse().ok_or(Error::SingularMetric)?;
        let mut dg = Vec::with_capacity(n);
        for l in 0..n {
            dg.push((metric(&shifted(y, l, h))? - metric(&shifted(y, l, -h))?) / (2.0 * h));
        }
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for s in 0..n {
                        v += inv[(i, s)] * (dg[l][(s, k)] + dg[k][(s, l)] - dg[s][(k, l)]);
                    }
                    out[(i * n + k) * n + l] = 0.5 * v;
                }
            }
        }
        Ok(out)
    };
    let g0 = metric(x)?;
    let inv0 = g0.clone().try_inverse().ok_or(Error::SingularMetric)?;
    let gamma = gamma_at(x)?;
    let mut dgamma = Vec::with_capacity(n);
    for l in 0..n {
        let p = gamma_at(&shifted(x, l, h))?;
        let m = gamma_at(&shifted(x, l, -h))?;
        dgamma.push(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let gi = |i: usize, k: usize, l: usize| gamma[(i * n + k) * n + l];
    let mut riem = vec![0.0; n * n * n * n];
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    let mut v = dgamma[l][(i * n + k) * n + m] - dgamma[m][(i * n + k) * n + l];
                    for s in 0..n {
                        v += gi(i, l, s) * gi(s, k, m) - gi(i, m, s) * gi(s, k, l);
                    }
                    riem[((i * n + k) * n + l) * n + m] = v;
                }
            }
        }
    }
    let mut ric = vec![0.0; n * n];
    for k in 0..n {
        for m in 0..n {
            ric[k * n + m] = (0..n).map(|l| riem[((l * n + k) * n + l) * n + m]).sum();
        }
    }
    let mut scalar = 0.0;
    for k in 0..n {
        for m in 0..n {
            scalar += inv0[(k, m)] * ric[k * n + m];
        }
    }
    let mut stress = vec![0.0; n * n];
    let mut stress_trace = 0.0;
    for k in 0..n {
        for m in 0..n {
            stress[k * n + m] = factor * (ric[k * n + m] - 0.5 * g0[(k, m)] * scalar);
        }
    }
    for k in 0..n {
        for m in 0..n {
            stress_trace += inv0[(k, m)] * stress[k * n + m];
        }
    }
    Ok(TensorBundle {
        point: x.to_vec(),
        dim: n,
        christoffel: gamma,
        riemann: riem,
        ricci: ric,
        scalar,
        stress,
        stress_trace,
        factor,
        full_stress: None,
    })
}

/// `exp(a(x)) eta` as a matrix, for feeding the oracle.
pub fn conformal_metric(field: &ConformalExponentField, x: &[f64]) -> Result<DMatrix<f64>> {
    let k2 = field.value(x)?.exp();
    Ok(DMatrix::from_fn(DIM, DIM, |i, j| k2 * eta(i, j)))
}

/// Largest absolute component differences between two bundles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BundleDelta {
    pub christoffel: f64,
    pub riemann: f64,
    pub ricci: f64,
    pub scalar: f64,
}

impl BundleDelta {
    pub fn between(a: &TensorBundle, b: &TensorBundle) -> Self {
        let md = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        Self {
            christoffel: md(&a.christoffel, &b.christoffel),
            riemann: md(&a.riemann, &b.riemann),
            ricci: md(&a.ricci, &b.ricci),
            scalar: (a.scalar - b.scalar).abs(),
        }
    }

    pub fn max(&self) -> f64 {
        self.christoffel.max(self.riemann).max(self.ricci).max(self.scalar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [f64; 4] = [2.0, 0.3, -0.4, 0.5];

    #[test]
    fn constant_exponent_is_flat() {
        let f = ConformalExponentField::constant(0.7);
        let b = tensor_bundle(&f, &X, 1.0, None).unwrap();
        assert!(b.christoffel.iter().chain(&b.riemann).chain(&b.ricci).all(|v| *v == 0.0));
        assert_eq!(b.scalar, 0.0);
        assert_eq!(b.stress_trace, 0.0);
    }

    #[test]
    fn linear_exponent_christoffels() {
        let beta = 0.3;
        let g = christoffel(&ConformalExponentField::exponential(beta), &X).unwrap();
        assert!((g[0][0][0] - beta).abs() < 1e-15);
        assert!((g[0][1][1] - beta).abs() < 1e-15);
        for i in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    assert_eq!(g[i][k][l], g[i][l][k]);
                }
            }
        }
    }

    #[test]
    fn symmetries_and_identities() {
        let fields = [
            ConformalExponentField::exponential(0.4),
            ConformalExponentField::interval_log(1.5).unwrap(),
            ConformalExponentField::quadratic(
                0.1,
                [0.2, -0.1, 0.3, 0.05],
                [[0.3, 0.1, 0.0, 0.2], [0.1, -0.2, 0.05, 0.0], [0.0, 0.05, 0.1, 0.0], [0.2, 0.0, 0.0, 0.4]],
            ),
        ];
        for f in &fields {
            let b = tensor_bundle(f, &X, 2.5, None).unwrap();
            for i in 0..4 {
                for k in 0..4 {
                    assert!((b.ricci(i, k) - b.ricci(k, i)).abs() < 1e-14);
                    for l in 0..4 {
                        for m in 0..4 {
                            assert!((b.riemann(i, k, l, m) + b.riemann(i, k, m, l)).abs() < 1e-14);
                        }
                    }
                }
            }
            // Ricci is the contraction of Riemann
            for k in 0..4 {
                for m in 0..4 {
                    let c: f64 = (0..4).map(|l| b.riemann(l, k, l, m)).sum();
                    assert!((c - b.ricci(k, m)).abs() < 1e-13);
                }
            }
            assert!((b.stress_trace + 2.5 * b.scalar).abs() < 1e-10);
            let d = scalar_curvature_diagnostic(f, &X).unwrap();
            assert!((d.ratio - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_stress_examples() {
        let t = full_stress_from_gradient(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!([t[0][0], t[1][1], t[2][2], t[3][3]], [3.0, -1.0, -1.0, -1.0]);
        let t = full_stress_from_gradient(&[1.0, 1.0, 0.0, 0.0]);
        assert!(t.iter().flatten().all(|v| *v == 0.0));
        let t = full_stress_from_gradient(&[0.7, -0.2, 1.3, 0.4]);
        let tr: f64 = (0..4).map(|k| t[k][k]).sum();
        assert!(tr.abs() < 1e-14);
    }

    #[test]
    fn oracle_flat_and_conformal() {
        let flat = generic_oracle_curvature(|_| Ok(DMatrix::from_fn(4, 4, eta)), &X, 1e-2, 1.0).unwrap();
        assert!(flat.riemann.iter().all(|v| v.abs() < 1e-10));
        let f = ConformalExponentField::exponential(0.3);
        let exact = tensor_bundle(&f, &X, 1.0, None).unwrap();
        let oracle = generic_oracle_curvature(|y| conformal_metric(&f, y), &X, 1e-3, 1.0).unwrap();
        assert!(BundleDelta::between(&exact, &oracle).max() < 1e-5);
    }

    #[test]
    fn finite_difference_provider_matches_analytic() {
        let fd = ConformalExponentField::from_kappa(|x: &[f64]| Ok((0.3 * x[0]).exp()));
        let an = ConformalExponentField::exponential(0.3);
        let a = fd.jet(&X).unwrap();
        let b = an.jet(&X).unwrap();
        for i in 0..4 {
            assert!((a.da[i] - b.da[i]).abs() < 1e-8);
            for j in 0..4 {
                assert!((a.dda[i][j] - b.dda[i][j]).abs() < 1e-5);
            }
        }
    }
}
