//! The model cosmological equation in the space conformally connected to
//! Minkowski space.
//!
//! With `S = S0 exp(-gamma x0) psi(gamma r)` and `psi = exp(int_0^xi phi)`,
//! the field equation reduces to
//!
//! ```text
//! xi (1 - 3 phi^2) phi' + 2 phi (1 - phi^2) - 3 xi (1 - phi^2)^2 = 0
//! ```
//!
//! which is integrated from a power-series start near the origin up to the
//! first point where `1 - 3 phi^2` drops below [`EPS_SING`]. Close to that
//! point `phi'` blows up like an inverse square root, so the last stretch is
//! integrated with `phi` as the independent variable, where the equation is
//! regular.

use crate::error::{Error, Result};
use crate::ode::{dopri5, gauss_legendre5, Control, DenseStep, Dopri5Config};
use crate::series::{phi_series, SeriesExpansion};

/// Below this `xi` the power series is used instead of the integrator.
pub const XI_SWITCH: f64 = 1e-3;
/// Integration halts once `1 - 3 phi^2` falls below this.
pub const EPS_SING: f64 = 1e-6;
/// Once `1 - 3 phi^2` falls below this the integrator switches to `xi(phi)`.
pub const TAIL_SWITCH: f64 = 0.05;
/// Order of the series used on `[0, XI_SWITCH]`.
pub const BOOTSTRAP_ORDER: usize = 15;

/// Rearranged right-hand side `dphi/dxi`.
pub fn phi_rhs(xi: f64, phi: f64) -> Result<f64> {
    if xi == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let den = 1.0 - 3.0 * phi * phi;
    if den.abs() < EPS_SING {
        return Err(Error::SingularDenominator(den));
    }
    let w = 1.0 - phi * phi;
    Ok((3.0 * xi * w * w - 2.0 * phi * w) / (xi * den))
}

/// Flux-form residual `d/dxi[xi^2 phi (1 - phi^2)] - 3 xi^2 (1 - phi^2)^2`
/// for given `phi` and `phi'` at `xi`.
pub fn flux_form_residual(xi: f64, phi: f64, dphi: f64) -> f64 {
    let w = 1.0 - phi * phi;
    2.0 * xi * phi * w + xi * xi * (1.0 - 3.0 * phi * phi) * dphi - 3.0 * xi * xi * w * w
}

/// Physical scales attached to a dimensionless solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoParams {
    /// Inverse length; `xi = gamma r`.
    pub gamma: f64,
    pub s0: f64,
    /// Speed of light; `x0 = c t`.
    pub c: f64,
}

impl CosmoParams {
    pub fn new(gamma: f64, s0: f64, c: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        if !(s0 > 0.0) {
            return Err(Error::InvalidParameter(format!("S0 must be positive so that kappa > 0, got {s0}")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        Ok(Self { gamma, s0, c })
    }

    /// Hubble constant `H0 = c gamma`.
    pub fn h0(&self) -> f64 {
        self.c * self.gamma
    }
}

impl Default for CosmoParams {
    fn default() -> Self {
        Self { gamma: 1.0, s0: 1.0, c: 1.0 }
    }
}

/// Step-control settings for [`integrate_phi_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub safety: f64,
    pub beta: f64,
    pub h_init: Option<f64>,
}

impl IntegratorConfig {
    pub fn new(rel_tol: f64) -> Self {
        Self { rel_tol, safety: 0.9, beta: 0.04, h_init: None }
    }

    fn dopri(&self) -> Dopri5Config {
        Dopri5Config {
            rtol: self.rel_tol,
            atol: self.rel_tol,
            safety: self.safety,
            beta: self.beta,
            h_init: self.h_init,
            ..Dopri5Config::default()
        }
    }
}

/// Sample of the solution at an accepted node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub xi: f64,
    pub phi: f64,
    pub dphi: f64,
}

/// Dense solution `phi(xi)` on `[0, xi_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosmoSolution {
    series: SeriesExpansion,
    series_f64: Vec<f64>,
    /// Steps in `xi` (t = xi, y = phi).
    xi_steps: Vec<DenseStep>,
    /// Steps in `phi` (t = phi, y = xi), only near the singular set.
    tail_steps: Vec<DenseStep>,
    xi_cumulative: Vec<f64>,
    tail_cumulative: Vec<f64>,
    xi_end: f64,
    singular_xi: Option<f64>,
    residual_norm: f64,
    rel_tol: f64,
    pub params: CosmoParams,
}

/// Integrates with default step control and unit physical scales.
pub fn integrate_phi(xi_max: f64, rel_tol: f64) -> Result<CosmoSolution> {
    integrate_phi_with(xi_max, &IntegratorConfig::new(rel_tol))
}

pub fn integrate_phi_with(xi_max: f64, cfg: &IntegratorConfig) -> Result<CosmoSolution> {
    if !(xi_max > 0.0) || !xi_max.is_finite() {
        return Err(Error::InvalidParameter(format!("xi_max must be positive, got {xi_max}")));
    }
    if !(1e-13..=1e-3).contains(&cfg.rel_tol) {
        return Err(Error::InvalidParameter(format!("rel_tol must lie in [1e-13, 1e-3], got {}", cfg.rel_tol)));
    }
    let series = phi_series(BOOTSTRAP_ORDER);
    let series_f64 = series.coefficients_f64();
    let dopri = cfg.dopri();

    let mut xi_steps = Vec::new();
    let mut tail_steps = Vec::new();
    let mut singular_xi = None;
    let mut xi_end = xi_max.min(XI_SWITCH);

    if xi_max > XI_SWITCH {
        let phi_start = series.eval(XI_SWITCH);
        let mut hit_tail = false;
        xi_steps = dopri5(
            |xi, phi| {
                // stay well clear of the singular set inside a step
                if 1.0 - 3.0 * phi * phi < 0.2 * TAIL_SWITCH {
                    return None;
                }
                phi_rhs(xi, phi).ok()
            },
            XI_SWITCH,
            phi_start,
            xi_max,
            &dopri,
            |s| {
                if 1.0 - 3.0 * s.y1 * s.y1 < TAIL_SWITCH {
                    hit_tail = true;
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )?;
        let last = xi_steps.last().expect("at least one step");
        xi_end = last.t1();

        if hit_tail && xi_end < xi_max {
            let phi_a = last.y1;
            let phi_end = ((1.0 - EPS_SING) / 3.0).sqrt();
            let mut past_max = false;
            tail_steps = dopri5(
                |phi, xi| {
                    let w = 1.0 - phi * phi;
                    let num = 3.0 * xi * w * w - 2.0 * phi * w;
                    if !(num > 0.0) {
                        return None;
                    }
                    Some(xi * (1.0 - 3.0 * phi * phi) / num)
                },
                phi_a,
                xi_end,
                phi_end,
                &dopri,
                |s| {
                    if s.y1 >= xi_max {
                        past_max = true;
                        Control::Stop
                    } else {
                        Control::Continue
                    }
                },
            )?;
            let last_tail = tail_steps.last().expect("at least one tail step");
            if past_max {
                xi_end = xi_max;
            } else {
                xi_end = last_tail.y1;
                singular_xi = Some(xi_end);
            }
        }
    }

    let mut xi_cumulative = Vec::with_capacity(xi_steps.len());
    let mut acc = series.integral(XI_SWITCH.min(xi_end));
    for s in &xi_steps {
        xi_cumulative.push(acc);
        acc += s.integral_to(s.t1());
    }
    let mut tail_cumulative = Vec::with_capacity(tail_steps.len());
    for s in &tail_steps {
        tail_cumulative.push(acc);
        acc += gauss_legendre5(|phi| phi * s.deriv(phi), s.t0, s.t1());
    }

    let mut sol = CosmoSolution {
        series,
        series_f64,
        xi_steps,
        tail_steps,
        xi_cumulative,
        tail_cumulative,
        xi_end,
        singular_xi,
        residual_norm: 0.0,
        rel_tol: cfg.rel_tol,
        params: CosmoParams::default(),
    };
    sol.residual_norm = sol
        .nodes()
        .iter()
        .map(|n| flux_form_residual(n.xi, n.phi, n.dphi).abs())
        .fold(0.0, f64::max);
    Ok(sol)
}

impl CosmoSolution {
    /// Attaches physical scales.
    pub fn with_params(mut self, params: CosmoParams) -> Self {
        self.params = params;
        self
    }

    pub fn xi_end(&self) -> f64 {
        self.xi_end
    }

    pub fn singular_xi(&self) -> Option<f64> {
        self.singular_xi
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn series(&self) -> &SeriesExpansion {
        &self.series
    }

    /// Accepted nodes, starting with the series hand-off point.
    pub fn nodes(&self) -> Vec<Node> {
        let mut out = Vec::with_capacity(self.xi_steps.len() + self.tail_steps.len() + 2);
        out.push(Node { xi: 0.0, phi: 0.0, dphi: 1.0 });
        if let Some(first) = self.xi_steps.first() {
            out.push(Node { xi: first.t0, phi: first.y0, dphi: first.f0 });
        }
        for s in &self.xi_steps {
            out.push(Node { xi: s.t1(), phi: s.y1, dphi: s.f1 });
        }
        for s in &self.tail_steps {
            out.push(Node { xi: s.y1, phi: s.t1(), dphi: 1.0 / s.f1 });
        }
        out
    }

    /// Largest residual at step midpoints, where the dense output is least accurate.
    pub fn midpoint_residual_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.xi_steps {
            let xi = s.t0 + 0.5 * s.h;
            worst = worst.max(flux_form_residual(xi, s.eval(xi), s.deriv(xi)).abs());
        }
        for s in &self.tail_steps {
            let phi = s.t0 + 0.5 * s.h;
            worst = worst.max(flux_form_residual(s.eval(phi), phi, 1.0 / s.deriv(phi)).abs());
        }
        worst
    }

    fn check(&self, xi: f64) -> Result<()> {
        if !(xi >= 0.0) || xi > self.xi_end * (1.0 + 1e-14) {
            return Err(Error::OutOfRange { xi, max: self.xi_end });
        }
        Ok(())
    }

    fn series_eval(&self, xi: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (k, a) in self.series_f64.iter().enumerate().rev() {
            v = (v + a) * xi;
            d = d * xi + (k + 1) as f64 * a;
        }
        (v, d)
    }

    fn xi_step(&self, xi: f64) -> Option<usize> {
        let last = self.xi_steps.last()?;
        if xi > last.t1() {
            return None;
        }
        let i = self.xi_steps.partition_point(|s| s.t1() < xi);
        Some(i.min(self.xi_steps.len() - 1))
    }

    /// Tail step index and the `phi` at which its dense output equals `xi`.
    fn tail_locate(&self, xi: f64) -> Option<(usize, f64)> {
        if self.tail_steps.is_empty() {
            return None;
        }
        let i = self.tail_steps.partition_point(|s| s.y1 < xi).min(self.tail_steps.len() - 1);
        let s = &self.tail_steps[i];
        // xi(phi) is increasing on the step; bisection followed by Newton polish
        let (mut lo, mut hi) = (s.t0, s.t1());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if s.eval(mid) < xi {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs() {
                break;
            }
        }
        let mut phi = 0.5 * (lo + hi);
        for _ in 0..3 {
            let d = s.deriv(phi);
            if d > 0.0 {
                phi = (phi - (s.eval(phi) - xi) / d).clamp(s.t0, s.t1());
            }
        }
        Some((i, phi))
    }

    /// `phi(xi)` and `dphi/dxi`.
    pub fn phi_and_derivative(&self, xi: f64) -> Result<(f64, f64)> {
        self.check(xi)?;
        let xi = xi.min(self.xi_end);
        if xi <= XI_SWITCH || self.xi_steps.is_empty() {
            return Ok(self.series_eval(xi));
        }
        if let Some(i) = self.xi_step(xi) {
            let s = &self.xi_steps[i];
            return Ok((s.eval(xi), s.deriv(xi)));
        }
        let (i, phi) = self.tail_locate(xi).ok_or(Error::OutOfRange { xi, max: self.xi_end })?;
        Ok((phi, 1.0 / self.tail_steps[i].deriv(phi)))
    }

    pub fn phi(&self, xi: f64) -> Result<f64> {
        Ok(self.phi_and_derivative(xi)?.0)
    }

    /// `int_0^xi phi`.
    pub fn phi_integral(&self, xi: f64) -> Result<f64> {
        self.check(xi)?;
        let xi = xi.min(self.xi_end);
        if xi <= XI_SWITCH || self.xi_steps.is_empty() {
            return Ok(self.series.integral(xi));
        }
        if let Some(i) = self.xi_step(xi) {
            return Ok(self.xi_cumulative[i] + self.xi_steps[i].integral_to(xi));
        }
        let (i, phi) = self.tail_locate(xi).ok_or(Error::OutOfRange { xi, max: self.xi_end })?;
        let s = &self.tail_steps[i];
        Ok(self.tail_cumulative[i] + gauss_legendre5(|p| p * s.deriv(p), s.t0, phi))
    }

    pub fn psi(&self, xi: f64) -> Result<f64> {
        Ok(self.phi_integral(xi)?.exp())
    }
}

/// `psi`, the field `S` and the conformal factor `kappa` at `(x0, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValues {
    pub psi: f64,
    pub s: f64,
    pub kappa: f64,
}

pub fn psi_and_field(sol: &CosmoSolution, x0: f64, r: f64) -> Result<FieldValues> {
    if !(r >= 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    let p = sol.params;
    let xi = p.gamma * r;
    let (phi, _) = sol.phi_and_derivative(xi)?;
    let psi = sol.psi(xi)?;
    let s = p.s0 * (-p.gamma * x0).exp() * psi;
    let w = 1.0 - phi * phi;
    if !(w > 0.0) {
        return Err(Error::SpacelikeGradient(w));
    }
    Ok(FieldValues { psi, s, kappa: p.gamma * w.sqrt() * s })
}

/// `H(r) = H0 phi(xi) / xi` with `xi = H0 r / c`; `H(0) = H0`.
pub fn hubble(sol: &CosmoSolution, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    let h0 = sol.params.h0();
    let xi = h0 * r / sol.params.c;
    if xi == 0.0 {
        return Ok(h0);
    }
    Ok(h0 * sol.phi(xi)? / xi)
}

/// The small-distance law `H0 (1 - (H0 r / c)^2 / 5)`.
pub fn hubble_series(params: &CosmoParams, r: f64) -> f64 {
    let h0 = params.h0();
    let xi = h0 * r / params.c;
    h0 * (1.0 - xi * xi / 5.0)
}

/// Radial velocity `dr/dt = c phi(gamma r)` of a sample body.
pub fn body_velocity(sol: &CosmoSolution, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::NonpositiveRadius(r));
    }
    Ok(sol.params.c * sol.phi(sol.params.gamma * r)?)
}

/// Flux-form residual of the dense solution at `xi`.
pub fn cosmo_field_residual(sol: &CosmoSolution, xi: f64) -> Result<f64> {
    let (phi, dphi) = sol.phi_and_derivative(xi)?;
    Ok(flux_form_residual(xi, phi, dphi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        assert!((phi_rhs(1.0, 0.0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(phi_rhs(0.7, 1.0).unwrap(), 0.0);
        assert!(matches!(phi_rhs(0.5, 1.0 / 3f64.sqrt()), Err(Error::SingularDenominator(_))));
        assert_eq!(phi_rhs(0.0, 0.1), Err(Error::OriginSingularity));
    }

    #[test]
    fn flux_form_examples() {
        // phi = 1 is a constant solution
        assert_eq!(flux_form_residual(0.3, 1.0, 0.0), 0.0);
        assert!((flux_form_residual(0.3, 1.0, 5.0) + 0.9).abs() < 1e-15);
        // truncated series leaves an O(xi^6) residual in this form
        let r = |xi: f64| flux_form_residual(xi, xi - xi.powi(3) / 5.0, 1.0 - 0.6 * xi * xi);
        let ratio = r(1e-2) / r(5e-3);
        assert!((ratio.log2() - 6.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn short_range_uses_series_only() {
        let sol = integrate_phi(5e-4, 1e-10).unwrap();
        assert_eq!(sol.xi_end(), 5e-4);
        assert!(sol.singular_xi().is_none());
        assert!((sol.phi(4e-4).unwrap() - (4e-4 - (4e-4f64).powi(3) / 5.0)).abs() < 1e-17);
        assert!(sol.phi(6e-4).is_err());
    }

    #[test]
    fn bad_parameters() {
        assert!(integrate_phi(-1.0, 1e-8).is_err());
        assert!(integrate_phi(1.0, 1e-2).is_err());
        assert!(integrate_phi(1.0, 1e-15).is_err());
        assert!(CosmoParams::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn stops_before_singularity_when_range_is_short() {
        let sol = integrate_phi(0.3, 1e-9).unwrap();
        assert!(sol.singular_xi().is_none());
        assert!((sol.xi_end() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn psi_starts_at_one() {
        let sol = integrate_phi(0.5, 1e-9).unwrap().with_params(CosmoParams::new(2.0, 3.0, 1.5).unwrap());
        let v = psi_and_field(&sol, 0.4, 0.0).unwrap();
        assert_eq!(v.psi, 1.0);
        assert!((v.s - 3.0 * (-0.8f64).exp()).abs() < 1e-15);
        assert!((v.kappa - 2.0 * 3.0 * (-0.8f64).exp()).abs() < 1e-14);
        assert_eq!(hubble(&sol, 0.0).unwrap(), 3.0);
        assert_eq!(body_velocity(&sol, 0.0).unwrap(), 0.0);
    }
}
