//! Space families, scalar fields and the point-wise quantities of Finsler
//! geometry: metric function, generalized momenta, indicatrix and
//! Hamilton-Jacobi residuals.

use std::sync::Arc;

use crate::cosmology::CosmoSolution;
use crate::error::{Error, Result};
use crate::grid::Lattice;

/// Flat metric function underlying a conformal family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceKind {
    /// `kappa(x) sqrt(sum dx_i^2)`.
    EuclideanConformal { n: usize },
    /// `kappa(x) sqrt(dx0^2 - dx1^2 - ...)`, signature `(+,-,...,-)`.
    PseudoEuclideanConformal { n: usize },
    /// `kappa(xi) (dxi1 dxi2 dxi3 dxi4)^(1/4)` in the isotropic basis.
    BerwaldMooreConformal,
    /// `kappa(x) (sqrt(dx0^2 - |dx|^2) + q0 dx0)` with `dx0 >= 0`, `n = 4`.
    RegularizedHyperboloid { q0: f64 },
}

impl SpaceKind {
    pub fn dimension(&self) -> usize {
        match *self {
            SpaceKind::EuclideanConformal { n } | SpaceKind::PseudoEuclideanConformal { n } => n,
            SpaceKind::BerwaldMooreConformal | SpaceKind::RegularizedHyperboloid { .. } => 4,
        }
    }
}

/// Where the conformal factor comes from.
#[derive(Debug, Clone)]
pub enum KappaSource {
    Constant(f64),
    /// `kappa` defined through the Hamilton-Jacobi relation of the space
    /// from the gradient of the field.
    FromField(FieldSpec),
    /// The closed-form factor of a solution family (`|C|/r`, `|C|/s`,
    /// `|A|/s`, `gamma sqrt(1 - phi^2) S`).
    ClosedForm(FieldSpec),
}

impl Default for KappaSource {
    fn default() -> Self {
        KappaSource::Constant(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub kappa: KappaSource,
}

impl SpaceSpec {
    pub fn new(kind: SpaceKind, kappa: KappaSource) -> Result<Self> {
        match kind {
            SpaceKind::EuclideanConformal { n } | SpaceKind::PseudoEuclideanConformal { n } if n < 2 => {
                return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
            }
            SpaceKind::RegularizedHyperboloid { q0 } if !(q0 > 0.0) => return Err(Error::NonpositiveQ0(q0)),
            _ => {}
        }
        if let KappaSource::Constant(k) = kappa {
            if !(k > 0.0) {
                return Err(Error::NonpositiveKappa(k));
            }
        }
        Ok(Self { kind, kappa })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(SpaceKind::EuclideanConformal { n }, KappaSource::default())
    }

    pub fn pseudo(n: usize) -> Result<Self> {
        Self::new(SpaceKind::PseudoEuclideanConformal { n }, KappaSource::default())
    }

    pub fn berwald_moore() -> Result<Self> {
        Self::new(SpaceKind::BerwaldMooreConformal, KappaSource::default())
    }

    pub fn regularized(q0: f64) -> Result<Self> {
        Self::new(SpaceKind::RegularizedHyperboloid { q0 }, KappaSource::default())
    }

    pub fn with_kappa(mut self, kappa: KappaSource) -> Result<Self> {
        self.kappa = kappa;
        Self::new(self.kind, self.kappa)
    }

    pub fn with_constant_kappa(self, k: f64) -> Result<Self> {
        self.with_kappa(KappaSource::Constant(k))
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    /// The conformal factor at `x`; always positive on success.
    pub fn kappa_at(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dimension(), x)?;
        let k = match &self.kappa {
            KappaSource::Constant(k) => *k,
            KappaSource::FromField(field) => kappa_from_field(self, field, x)?,
            KappaSource::ClosedForm(field) => field.closed_form_kappa(x)?,
        };
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::NonpositiveKappa(k));
        }
        Ok(k)
    }
}

fn check_dim(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: v.len() });
    }
    Ok(())
}

/// Pseudo-Euclidean quadratic form `v0^2 - v1^2 - ...`.
pub fn minkowski_form(v: &[f64]) -> f64 {
    v[0] * v[0] - v[1..].iter().map(|a| a * a).sum::<f64>()
}

fn euclidean_form(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Interval of a forward-cone vector; light-like vectors give 0.
fn forward_interval(dx: &[f64]) -> Result<f64> {
    if dx[0] < 0.0 {
        return Err(Error::InadmissibleDirection(format!("dx0 = {} < 0", dx[0])));
    }
    let q = minkowski_form(dx);
    let scale = dx[0] * dx[0];
    if q < 0.0 {
        if q >= -1e-14 * scale {
            return Ok(0.0);
        }
        return Err(Error::InadmissibleDirection("vector is spacelike".into()));
    }
    Ok(q.sqrt())
}

fn berwald_moore_product(dx: &[f64]) -> Result<f64> {
    if let Some(c) = dx.iter().find(|c| !(**c > 0.0)) {
        return Err(Error::InadmissibleDirection(format!("isotropic component {c} is not positive")));
    }
    Ok(dx.iter().product())
}

/// Base (kappa = 1) length of `dx` for a space kind.
fn base_norm(kind: SpaceKind, dx: &[f64]) -> Result<f64> {
    match kind {
        SpaceKind::EuclideanConformal { .. } => Ok(euclidean_form(dx).sqrt()),
        SpaceKind::PseudoEuclideanConformal { .. } => forward_interval(dx),
        SpaceKind::BerwaldMooreConformal => Ok(berwald_moore_product(dx)?.powf(0.25)),
        SpaceKind::RegularizedHyperboloid { q0 } => Ok(forward_interval(dx)? + q0 * dx[0]),
    }
}

/// Length element `ds = L(dx; x)`.
pub fn metric_function(spec: &SpaceSpec, x: &[f64], dx: &[f64]) -> Result<f64> {
    check_dim(spec.dimension(), dx)?;
    let k = spec.kappa_at(x)?;
    Ok(k * base_norm(spec.kind, dx)?)
}

/// `p_i = dL/d(dx^i)`.
pub fn generalized_momenta(spec: &SpaceSpec, x: &[f64], dx: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.dimension(), dx)?;
    if dx.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let k = spec.kappa_at(x)?;
    match spec.kind {
        SpaceKind::EuclideanConformal { .. } => {
            let norm = euclidean_form(dx).sqrt();
            Ok(dx.iter().map(|c| k * c / norm).collect())
        }
        SpaceKind::PseudoEuclideanConformal { .. } | SpaceKind::RegularizedHyperboloid { .. } => {
            let s = forward_interval(dx)?;
            if s == 0.0 {
                return Err(Error::ZeroDirection);
            }
            let mut p: Vec<f64> = dx.iter().map(|c| -k * c / s).collect();
            p[0] = k * dx[0] / s;
            if let SpaceKind::RegularizedHyperboloid { q0 } = spec.kind {
                p[0] += k * q0;
            }
            Ok(p)
        }
        SpaceKind::BerwaldMooreConformal => {
            let root = berwald_moore_product(dx)?.powf(0.25);
            Ok(dx.iter().map(|c| 0.25 * k * root / c).collect())
        }
    }
}

/// Left minus right side of the tangential equation of the indicatrix.
pub fn tangential_indicatrix_residual(spec: &SpaceSpec, x: &[f64], p: &[f64]) -> Result<f64> {
    check_dim(spec.dimension(), p)?;
    let k = spec.kappa_at(x)?;
    Ok(match spec.kind {
        SpaceKind::EuclideanConformal { .. } => euclidean_form(p) - k * k,
        SpaceKind::PseudoEuclideanConformal { .. } => minkowski_form(p) - k * k,
        SpaceKind::BerwaldMooreConformal => p.iter().product::<f64>() - k.powi(4) / 256.0,
        SpaceKind::RegularizedHyperboloid { q0 } => {
            let p0 = p[0] - k * q0;
            p0 * p0 - euclidean_form(&p[1..]) - k * k
        }
    })
}

/// `L(xi; x) - 1`, zero on the indicatrix.
pub fn indicatrix_residual(spec: &SpaceSpec, x: &[f64], xi: &[f64]) -> Result<f64> {
    Ok(metric_function(spec, x, xi)? - 1.0)
}

/// Left side of the Hamilton-Jacobi equation of the space for the gradient
/// `g`, and the quantity it must equal given the factor `kappa`.
fn hj_sides(kind: SpaceKind, g: &[f64], kappa: f64) -> (f64, f64) {
    match kind {
        SpaceKind::EuclideanConformal { .. } => (euclidean_form(g), kappa * kappa),
        SpaceKind::PseudoEuclideanConformal { .. } => (minkowski_form(g), kappa * kappa),
        SpaceKind::BerwaldMooreConformal => (g.iter().product(), kappa.powi(4) / 256.0),
        SpaceKind::RegularizedHyperboloid { q0 } => {
            let g0 = g[0] - kappa * q0;
            (g0 * g0 - euclidean_form(&g[1..]), kappa * kappa)
        }
    }
}

/// Hamilton-Jacobi left side minus its target built from the space's `kappa`.
pub fn hamilton_jacobi_residual(spec: &SpaceSpec, field: &FieldSpec, x: &[f64]) -> Result<f64> {
    check_dim(spec.dimension(), x)?;
    let g = field.gradient(x)?;
    let k = spec.kappa_at(x)?;
    let (lhs, rhs) = hj_sides(spec.kind, &g, k);
    Ok(lhs - rhs)
}

/// Conformal factor induced by the field through the Hamilton-Jacobi relation.
pub fn kappa_from_field(spec: &SpaceSpec, field: &FieldSpec, x: &[f64]) -> Result<f64> {
    check_dim(spec.dimension(), x)?;
    let g = field.gradient(x)?;
    check_dim(spec.dimension(), &g)?;
    let k = match spec.kind {
        SpaceKind::EuclideanConformal { .. } => euclidean_form(&g).sqrt(),
        SpaceKind::PseudoEuclideanConformal { .. } => {
            let q = minkowski_form(&g);
            if !(q > 0.0) {
                return Err(Error::SpacelikeGradient(q));
            }
            q.sqrt()
        }
        SpaceKind::BerwaldMooreConformal => {
            let prod: f64 = g.iter().product();
            if !(prod > 0.0) {
                return Err(Error::NonpositiveKappa(prod));
            }
            4.0 * prod.powf(0.25)
        }
        SpaceKind::RegularizedHyperboloid { q0 } => {
            // (g0 - k q0)^2 - |g|^2 = k^2  <=>  (1 - q0^2) k^2 + 2 q0 g0 k - Q = 0
            let q = minkowski_form(&g);
            if !(q > 0.0) {
                return Err(Error::SpacelikeGradient(q));
            }
            let a = 1.0 - q0 * q0;
            let b = 2.0 * q0 * g[0];
            if a.abs() < 1e-14 {
                q / b
            } else {
                let disc = b * b + 4.0 * a * q;
                if disc < 0.0 {
                    return Err(Error::SpacelikeGradient(q));
                }
                // positive root, written to avoid cancellation
                2.0 * q / (b + disc.sqrt())
            }
        }
    };
    if !(k > 0.0) {
        return Err(Error::NonpositiveKappa(k));
    }
    Ok(k)
}

/// A scalar field `S`.
#[derive(Debug, Clone)]
pub enum FieldSpec {
    /// `C ln(r / r0)`, `r` the Euclidean radius in any dimension.
    RadialLog { c: f64, r0: f64 },
    /// `C ln(s / s0)`, `s` the pseudo-Euclidean interval.
    IntervalLog { c: f64, s0: f64 },
    /// `A ln(s / s0)` with `s = (xi1 xi2 xi3 xi4)^(1/4)`.
    BerwaldMooreLog { amplitude: f64, s0: f64 },
    /// `S0 exp(-gamma x0) psi(gamma r)` on `(x0, x1, x2, x3)`.
    CosmoExp { solution: Arc<CosmoSolution> },
    /// `value + gradient . x`.
    Affine { value: f64, gradient: Vec<f64> },
    /// `constant + linear . x + x^T hessian x / 2`.
    Quadratic { constant: f64, linear: Vec<f64>, hessian: Vec<Vec<f64>> },
    /// Lattice samples; derivatives by central differences at interior nodes.
    Grid(Arc<Lattice>),
}

impl FieldSpec {
    pub fn radial_log(c: f64, r0: f64) -> Result<Self> {
        if c == 0.0 || !(r0 > 0.0) {
            return Err(Error::InvalidParameter("RadialLog needs C != 0 and r0 > 0".into()));
        }
        Ok(FieldSpec::RadialLog { c, r0 })
    }

    pub fn interval_log(c: f64, s0: f64) -> Result<Self> {
        if c == 0.0 || !(s0 > 0.0) {
            return Err(Error::InvalidParameter("IntervalLog needs C != 0 and s0 > 0".into()));
        }
        Ok(FieldSpec::IntervalLog { c, s0 })
    }

    pub fn berwald_moore_log(amplitude: f64, s0: f64) -> Result<Self> {
        if amplitude == 0.0 || !(s0 > 0.0) {
            return Err(Error::InvalidParameter("BerwaldMooreLog needs S0 != 0 and s0 > 0".into()));
        }
        Ok(FieldSpec::BerwaldMooreLog { amplitude, s0 })
    }

    pub fn cosmo(solution: Arc<CosmoSolution>) -> Self {
        FieldSpec::CosmoExp { solution }
    }

    pub fn grid(lattice: Lattice) -> Self {
        FieldSpec::Grid(Arc::new(lattice))
    }

    /// Fixed dimension of the field, if it has one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            FieldSpec::RadialLog { .. } | FieldSpec::IntervalLog { .. } => None,
            FieldSpec::BerwaldMooreLog { .. } | FieldSpec::CosmoExp { .. } => Some(4),
            FieldSpec::Affine { gradient, .. } => Some(gradient.len()),
            FieldSpec::Quadratic { linear, .. } => Some(linear.len()),
            FieldSpec::Grid(l) => Some(l.ndim()),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        match self.dimension() {
            Some(n) => check_dim(n, x),
            None if x.len() < 2 => Err(Error::DimensionMismatch { expected: 2, got: x.len() }),
            None => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        match self {
            FieldSpec::RadialLog { c, r0 } => Ok(c * (radius(x)? / r0).ln()),
            FieldSpec::IntervalLog { c, s0 } => Ok(c * (interval(x)? / s0).ln()),
            FieldSpec::BerwaldMooreLog { amplitude, s0 } => Ok(amplitude * (bm_radius(x)? / s0).ln()),
            FieldSpec::CosmoExp { solution } => {
                let r = radius(&x[1..]).unwrap_or(0.0);
                Ok(crate::cosmology::psi_and_field(solution, x[0], r)?.s)
            }
            FieldSpec::Affine { value, gradient } => Ok(value + dot(gradient, x)),
            FieldSpec::Quadratic { constant, linear, hessian } => {
                let quad: f64 = (0..x.len()).map(|i| x[i] * dot(&hessian[i], x)).sum();
                Ok(constant + dot(linear, x) + 0.5 * quad)
            }
            FieldSpec::Grid(l) => {
                let idx = l.locate(x)?;
                Ok(l.at(&idx))
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        match self {
            FieldSpec::RadialLog { c, .. } => {
                let r2 = radius(x)?.powi(2);
                Ok(x.iter().map(|xi| c * xi / r2).collect())
            }
            FieldSpec::IntervalLog { c, .. } => {
                let s2 = interval(x)?.powi(2);
                Ok(lower(x).iter().map(|v| c * v / s2).collect())
            }
            FieldSpec::BerwaldMooreLog { amplitude, .. } => {
                bm_radius(x)?;
                Ok(x.iter().map(|xi| 0.25 * amplitude / xi).collect())
            }
            FieldSpec::CosmoExp { solution } => {
                let p = solution.params;
                let r = x[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                let s = crate::cosmology::psi_and_field(solution, x[0], r)?.s;
                let phi = solution.phi(p.gamma * r)?;
                let mut g = vec![-p.gamma * s, 0.0, 0.0, 0.0];
                if r > 0.0 {
                    for mu in 1..4 {
                        g[mu] = s * p.gamma * phi * x[mu] / r;
                    }
                }
                Ok(g)
            }
            FieldSpec::Affine { gradient, .. } => Ok(gradient.clone()),
            FieldSpec::Quadratic { linear, hessian, .. } => {
                Ok((0..x.len()).map(|i| linear[i] + dot(&hessian[i], x)).collect())
            }
            FieldSpec::Grid(l) => l.gradient_at(&l.locate(x)?),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check(x)?;
        let n = x.len();
        match self {
            FieldSpec::RadialLog { c, .. } => {
                let r2 = radius(x)?.powi(2);
                Ok(outer_fill(n, |i, j| c * (delta(i, j) / r2 - 2.0 * x[i] * x[j] / (r2 * r2))))
            }
            FieldSpec::IntervalLog { c, .. } => {
                let s2 = interval(x)?.powi(2);
                let lx = lower(x);
                Ok(outer_fill(n, |i, j| c * (eta(i, j) / s2 - 2.0 * lx[i] * lx[j] / (s2 * s2))))
            }
            FieldSpec::BerwaldMooreLog { amplitude, .. } => {
                bm_radius(x)?;
                Ok(outer_fill(n, |i, j| if i == j { -0.25 * amplitude / (x[i] * x[i]) } else { 0.0 }))
            }
            FieldSpec::CosmoExp { solution } => {
                let p = solution.params;
                let gm = p.gamma;
                let r = x[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                let s = crate::cosmology::psi_and_field(solution, x[0], r)?.s;
                let (phi, dphi) = solution.phi_and_derivative(gm * r)?;
                let g = self.gradient(x)?;
                let mut h = vec![vec![0.0; 4]; 4];
                h[0][0] = gm * gm * s;
                for mu in 1..4 {
                    h[0][mu] = -gm * g[mu];
                    h[mu][0] = h[0][mu];
                    for nu in 1..4 {
                        h[mu][nu] = if r > 0.0 {
                            let (u, v) = (x[mu] / r, x[nu] / r);
                            s * (gm * gm * (phi * phi + dphi) * u * v + gm * phi / r * (delta(mu, nu) - u * v))
                        } else {
                            s * gm * gm * delta(mu, nu)
                        };
                    }
                }
                Ok(h)
            }
            FieldSpec::Affine { .. } => Ok(vec![vec![0.0; n]; n]),
            FieldSpec::Quadratic { hessian, .. } => Ok(hessian.clone()),
            FieldSpec::Grid(l) => l.hessian_at(&l.locate(x)?),
        }
    }

    /// Central-difference gradient of [`FieldSpec::value`] with step `h`.
    pub fn gradient_fd(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut xp = x.to_vec();
        let mut out = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = self.value(&xp)?;
            xp[i] = x[i] - h;
            let fm = self.value(&xp)?;
            xp[i] = x[i];
            out.push((fp - fm) / (2.0 * h));
        }
        Ok(out)
    }

    /// The family's own expression for the conformal factor.
    pub fn closed_form_kappa(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        match self {
            FieldSpec::RadialLog { c, .. } => Ok(c.abs() / radius(x)?),
            FieldSpec::IntervalLog { c, .. } => Ok(c.abs() / interval(x)?),
            FieldSpec::BerwaldMooreLog { amplitude, .. } => Ok(amplitude.abs() / bm_radius(x)?),
            FieldSpec::CosmoExp { solution } => {
                let r = x[1..].iter().map(|a| a * a).sum::<f64>().sqrt();
                Ok(crate::cosmology::psi_and_field(solution, x[0], r)?.kappa)
            }
            _ => Err(Error::InvalidParameter("field family has no closed-form conformal factor".into())),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Diagonal flat metric of signature `(+,-,...,-)`.
pub fn eta(i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 0) => 1.0,
        (a, b) if a == b => -1.0,
        _ => 0.0,
    }
}

/// `eta_ij x^j`.
fn lower(x: &[f64]) -> Vec<f64> {
    x.iter().enumerate().map(|(i, v)| if i == 0 { *v } else { -v }).collect()
}

fn outer_fill<F: Fn(usize, usize) -> f64>(n: usize, f: F) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

fn radius(x: &[f64]) -> Result<f64> {
    let r = euclidean_form(x).sqrt();
    if !(r > 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    Ok(r)
}

fn interval(x: &[f64]) -> Result<f64> {
    let s2 = minkowski_form(x);
    if !(s2 > 0.0) {
        return Err(Error::OutsideDomain(format!("interval^2 = {s2} is not positive")));
    }
    Ok(s2.sqrt())
}

fn bm_radius(x: &[f64]) -> Result<f64> {
    if x.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::OutsideDomain("isotropic coordinates must be positive".into()));
    }
    Ok(x.iter().product::<f64>().powf(0.25))
}
