//! Normal congruences of a World function `S`: velocity field, integrated
//! trajectories and their straight-line diagnostics.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::cosmology::CosmoSolution;
use crate::error::{Error, Result};
use crate::geometry::{minkowski_form, FieldSpec, SpaceKind, SpaceSpec};
use crate::ode::rk4_adaptive;
use crate::quadrature::adaptive_simpson_abs;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Scalar `lambda(x)` multiplying the gradient in the flow.
#[derive(Clone)]
pub enum LambdaChoice {
    Unit,
    /// The family-specific choice that reduces the flow to `xdot = x`:
    /// `r^2 / C`, `s^2 / C`, `64 s^4 / A^3`.
    Reducing,
    Custom(PointFn),
}

impl fmt::Debug for LambdaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaChoice::Unit => f.write_str("Unit"),
            LambdaChoice::Reducing => f.write_str("Reducing"),
            LambdaChoice::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub space: SpaceSpec,
    pub field: FieldSpec,
    pub lambda: LambdaChoice,
}

impl FlowSpec {
    pub fn new(space: SpaceSpec, field: FieldSpec, lambda: LambdaChoice) -> Result<Self> {
        if matches!(space.kind, SpaceKind::RegularizedHyperboloid { .. }) {
            return Err(Error::InvalidParameter("no congruence flow for the regularized hyperboloid".into()));
        }
        Ok(Self { space, field, lambda })
    }

    /// Radial-log field in Euclidean `n` space with the reducing lambda.
    pub fn radial_log(n: usize, c: f64) -> Result<Self> {
        Self::new(SpaceSpec::euclidean(n)?, FieldSpec::radial_log(c, 1.0)?, LambdaChoice::Reducing)
    }

    pub fn interval_log(n: usize, c: f64) -> Result<Self> {
        Self::new(SpaceSpec::pseudo(n)?, FieldSpec::interval_log(c, 1.0)?, LambdaChoice::Reducing)
    }

    pub fn berwald_moore_log(amplitude: f64) -> Result<Self> {
        Self::new(SpaceSpec::berwald_moore()?, FieldSpec::berwald_moore_log(amplitude, 1.0)?, LambdaChoice::Reducing)
    }

    pub fn lambda_at(&self, x: &[f64]) -> Result<f64> {
        let l = match &self.lambda {
            LambdaChoice::Unit => 1.0,
            LambdaChoice::Custom(f) => f(x),
            LambdaChoice::Reducing => match self.field {
                FieldSpec::RadialLog { c, .. } => x.iter().map(|v| v * v).sum::<f64>() / c,
                FieldSpec::IntervalLog { c, .. } => minkowski_form(x) / c,
                FieldSpec::BerwaldMooreLog { amplitude, .. } => 64.0 * x.iter().product::<f64>() / amplitude.powi(3),
                _ => return Err(Error::InvalidParameter("field family has no reducing lambda".into())),
            },
        };
        if l == 0.0 || !l.is_finite() {
            return Err(Error::ZeroLambda);
        }
        Ok(l)
    }
}

/// `xdot` of the congruence at `x`.
pub fn congruence_velocity(flow: &FlowSpec, x: &[f64]) -> Result<Vec<f64>> {
    let n = flow.space.dimension();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let g = flow.field.gradient(x).map_err(|e| match e {
        Error::BoundaryPoint | Error::DimensionMismatch { .. } => e,
        other => Error::DerivativeUnavailable(other.to_string()),
    })?;
    let lambda = flow.lambda_at(x)?;
    Ok(match flow.space.kind {
        SpaceKind::EuclideanConformal { .. } => g.iter().map(|v| v * lambda).collect(),
        SpaceKind::PseudoEuclideanConformal { .. } => {
            g.iter().enumerate().map(|(i, v)| if i == 0 { v * lambda } else { -v * lambda }).collect()
        }
        SpaceKind::BerwaldMooreConformal => {
            (0..4).map(|i| (0..4).filter(|j| *j != i).map(|j| g[j]).product::<f64>() * lambda).collect()
        }
        SpaceKind::RegularizedHyperboloid { .. } => unreachable!("rejected by FlowSpec::new"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOrientation {
    FutureDirected,
    PastDirected,
    /// Euclidean flows have no time direction.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub taus: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Sign of `lambda` at the start point.
    pub lambda_sign: f64,
    pub orientation: TimeOrientation,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.points.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Whether `y` lies in the same cone sheet (pseudo-Euclidean) or orthant
/// (isotropic basis) as `x`; the fields are singular on the boundaries.
fn same_sheet(kind: SpaceKind, x: &[f64], y: &[f64]) -> bool {
    match kind {
        SpaceKind::EuclideanConformal { .. } => true,
        SpaceKind::BerwaldMooreConformal => x.iter().zip(y).all(|(a, b)| a * b > 0.0),
        _ => x[0] * y[0] > 0.0 && minkowski_form(x).signum() == minkowski_form(y).signum(),
    }
}

/// Integrates the congruence from `x_start` over `tau_span` with adaptive
/// RK4 at tolerance `tol`.
pub fn integrate_flow(flow: &FlowSpec, x_start: &[f64], tau_span: (f64, f64), tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let v0 = congruence_velocity(flow, x_start)?;
    let lambda_sign = flow.lambda_at(x_start)?.signum();
    let orientation = match flow.space.kind {
        SpaceKind::EuclideanConformal { .. } => TimeOrientation::None,
        SpaceKind::BerwaldMooreConformal => {
            if v0.iter().sum::<f64>() > 0.0 {
                TimeOrientation::FutureDirected
            } else {
                TimeOrientation::PastDirected
            }
        }
        _ => {
            if v0[0] > 0.0 {
                TimeOrientation::FutureDirected
            } else {
                TimeOrientation::PastDirected
            }
        }
    };
    let path = rk4_adaptive(
        |_, y, dy| {
            if !same_sheet(flow.space.kind, x_start, y) {
                return Err(Error::LeftDomain(format!("passed through the apex of the domain at {y:?}")));
            }
            let v = congruence_velocity(flow, y).map_err(|e| Error::LeftDomain(e.to_string()))?;
            dy.copy_from_slice(&v);
            Ok(())
        },
        tau_span.0,
        x_start,
        tau_span.1,
        tol,
    )
    .map_err(|e| match e {
        // step underflow: the velocity blows up at the edge of the field's domain
        Error::ToleranceNotMet(msg) => Error::LeftDomain(msg),
        other => other,
    })?;
    Ok(Trajectory { taus: path.times, points: path.states, lambda_sign, orientation })
}

/// Max over samples of `|x - (x.u) u| / |x|`, with `u` the direction of the
/// last sample.
pub fn straightness_deviation(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples);
    }
    let last = traj.last();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ln = norm(last);
    if ln == 0.0 {
        return Err(Error::OutsideDomain("last sample at the origin".into()));
    }
    let u: Vec<f64> = last.iter().map(|a| a / ln).collect();
    let mut worst = 0.0f64;
    for x in &traj.points {
        let r = norm(x);
        if r == 0.0 {
            continue;
        }
        let p: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum();
        let perp = x.iter().zip(&u).map(|(a, b)| (a - p * b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(perp / r);
    }
    Ok(worst)
}

/// Least-squares line `s = slope x0 + intercept` through the interval values
/// of a pseudo-Euclidean trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// `sqrt(1 - sum C_mu^2)` with `C_mu = x_mu(0) / x0(0)`.
    pub expected_slope: f64,
}

pub fn interval_fit(traj: &Trajectory) -> Result<IntervalFit> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples);
    }
    let mut xs = Vec::with_capacity(traj.len());
    let mut ss = Vec::with_capacity(traj.len());
    for p in &traj.points {
        let q = minkowski_form(p);
        if q < 0.0 {
            return Err(Error::OutsideDomain("sample outside the light cone".into()));
        }
        xs.push(p[0]);
        ss.push(q.sqrt());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let ms = ss.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxs: f64 = xs.iter().zip(&ss).map(|(x, s)| (x - mx) * (s - ms)).sum();
    let slope = sxs / sxx;
    let intercept = ms - slope * mx;
    let max_residual = xs.iter().zip(&ss).map(|(x, s)| (s - slope * x - intercept).abs()).fold(0.0, f64::max);
    let p0 = &traj.points[0];
    let c2: f64 = p0[1..].iter().map(|v| (v / p0[0]).powi(2)).sum();
    Ok(IntervalFit { slope, intercept, max_residual, expected_slope: (1.0 - c2).sqrt() })
}

/// Largest drift of `xi^i / (xi^1 + ... + xi^4)` from its starting value.
pub fn isotropic_ratio_drift(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    let ratios = |p: &[f64]| {
        let x0: f64 = p.iter().sum();
        p.iter().map(|v| v / x0).collect::<Vec<f64>>()
    };
    let r0 = ratios(&traj.points[0]);
    Ok(traj
        .points
        .iter()
        .flat_map(|p| ratios(p).into_iter().zip(r0.clone()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max))
}

/// Sample body in the cosmological field: `dx/dx0 = phi(gamma r) x / r` for
/// the spatial position `x`, parameterised by `x0`.
pub fn cosmo_trajectory(sol: &CosmoSolution, x_start: &[f64], x0_span: (f64, f64), tol: f64) -> Result<Trajectory> {
    if x_start.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: x_start.len() });
    }
    let gamma = sol.params.gamma;
    let r0 = x_start.iter().map(|v| v * v).sum::<f64>().sqrt();
    if gamma * r0 > sol.xi_end() {
        return Err(Error::OutOfRange { xi: gamma * r0, max: sol.xi_end() });
    }
    let path = rk4_adaptive(
        |_, y, dy| {
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r == 0.0 {
                dy.fill(0.0);
                return Ok(());
            }
            let phi = sol.phi(gamma * r).map_err(|e| Error::LeftDomain(e.to_string()))?;
            for i in 0..3 {
                dy[i] = phi * y[i] / r;
            }
            Ok(())
        },
        x0_span.0,
        x_start,
        x0_span.1,
        tol,
    )?;
    Ok(Trajectory {
        taus: path.times,
        points: path.states,
        lambda_sign: 1.0,
        orientation: if x0_span.1 >= x0_span.0 { TimeOrientation::FutureDirected } else { TimeOrientation::PastDirected },
    })
}

/// Largest change of the unit direction `x / |x|` along a trajectory.
pub fn direction_drift(traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::TooFewSamples);
    }
    let unit = |p: &[f64]| {
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        p.iter().map(|v| v / r).collect::<Vec<f64>>()
    };
    let u0 = unit(&traj.points[0]);
    Ok(traj
        .points
        .iter()
        .flat_map(|p| unit(p).into_iter().zip(u0.clone()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max))
}

/// Radius reached after advancing `dx0` from radius `r0`, from
/// `x0 = int dr / phi(gamma r)` solved by Newton iteration.
pub fn cosmo_radius_by_quadrature(sol: &CosmoSolution, r0: f64, dx0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::NonpositiveRadius(r0));
    }
    let gamma = sol.params.gamma;
    let inv = |r: f64| -> f64 { sol.phi(gamma * r).map(|p| 1.0 / p).unwrap_or(f64::NAN) };
    let elapsed = |r: f64| adaptive_simpson_abs(inv, r0, r, 1e-14).value;
    // start from the linearised motion
    let mut r = r0 + dx0 * sol.phi(gamma * r0)?;
    for _ in 0..50 {
        if gamma * r > sol.xi_end() {
            r = sol.xi_end() / gamma;
        }
        let g = elapsed(r) - dx0;
        if !g.is_finite() {
            return Err(Error::LeftDomain("quadrature left the resolved range".into()));
        }
        let step = g * sol.phi(gamma * r)?;
        r -= step;
        if step.abs() <= 1e-15 * r.max(1.0) {
            return Ok(r);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reducing_lambdas_give_identity_velocity() {
        let cases = [
            (FlowSpec::radial_log(3, 1.7).unwrap(), vec![0.4, -1.1, 2.0]),
            (FlowSpec::interval_log(4, -0.8).unwrap(), vec![2.0, 0.5, 0.3, -0.1]),
            (FlowSpec::berwald_moore_log(1.3).unwrap(), vec![0.5, 1.5, 2.0, 0.7]),
        ];
        for (flow, x) in cases {
            let v = congruence_velocity(&flow, &x).unwrap();
            for (a, b) in v.iter().zip(&x) {
                assert!((a - b).abs() < 1e-14 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_lambda_is_rejected() {
        let mut flow = FlowSpec::radial_log(2, 1.0).unwrap();
        flow.lambda = LambdaChoice::Custom(Arc::new(|_| 0.0));
        assert_eq!(congruence_velocity(&flow, &[1.0, 1.0]), Err(Error::ZeroLambda));
    }

    #[test]
    fn identity_flow_is_exponential() {
        let flow = FlowSpec::interval_log(4, 1.0).unwrap();
        let x0 = [1.0, 0.5, 0.3, 0.1];
        let t = integrate_flow(&flow, &x0, (0.0, 1.0), 1e-12).unwrap();
        for (a, b) in t.last().iter().zip(&x0) {
            assert!((a - b * 1f64.exp()).abs() < 1e-10);
        }
        assert_eq!(t.orientation, TimeOrientation::FutureDirected);
        assert!(straightness_deviation(&t).unwrap() < 1e-12);
        let fit = interval_fit(&t).unwrap();
        assert!((fit.slope - fit.expected_slope).abs() < 1e-10);
    }

    #[test]
    fn straightness_examples() {
        let ray = |k: usize| vec![k as f64, 2.0 * k as f64, -0.5 * k as f64];
        let mut t = Trajectory {
            taus: (1..6).map(|k| k as f64).collect(),
            points: (1..6).map(ray).collect(),
            lambda_sign: 1.0,
            orientation: TimeOrientation::None,
        };
        assert!(straightness_deviation(&t).unwrap() < 1e-15);
        t.points[1][2] += 1e-3;
        assert!(straightness_deviation(&t).unwrap() >= 1e-4);
        t.points.truncate(2);
        t.taus.truncate(2);
        assert_eq!(straightness_deviation(&t), Err(Error::TooFewSamples));
    }

    #[test]
    fn leaving_the_cone_is_reported() {
        let flow = FlowSpec::new(
            SpaceSpec::pseudo(2).unwrap(),
            FieldSpec::interval_log(1.0, 1.0).unwrap(),
            LambdaChoice::Custom(Arc::new(|_| -1.0)),
        )
        .unwrap();
        let r = integrate_flow(&flow, &[1.0, 0.5], (0.0, 50.0), 1e-8);
        assert!(matches!(r, Err(Error::LeftDomain(_))), "{r:?}");
    }
}
