//! Indicatrix volumes and the Lagrangian `1 / V`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{SpaceKind, SpaceSpec};
use crate::quadrature::integrate_panels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ClosedForm,
    ScalingLaw,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeResult {
    /// `+inf` only for the unregularized pseudo-Euclidean indicatrix.
    pub value: f64,
    pub method: VolumeMethod,
    pub error_estimate: f64,
}

impl VolumeResult {
    fn closed(value: f64) -> Self {
        Self { value, method: VolumeMethod::ClosedForm, error_estimate: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    let (mut w, start) = if n.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Volume of `{xi : xi^T g xi <= 1}`.
pub fn ellipsoid_volume(g: &DMatrix<f64>) -> Result<VolumeResult> {
    let n = g.nrows();
    if n == 0 || g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.ncols() });
    }
    let scale = g.amax().max(f64::MIN_POSITIVE);
    if (g - g.transpose()).amax() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    // sqrt(det g) = prod of the Cholesky diagonal
    let sqrt_det: f64 = chol.l_dirty().diagonal().iter().product();
    Ok(VolumeResult::closed(unit_ball_volume(n) / sqrt_det))
}

/// Volume at `kappa = 1` for each family.
pub fn base_volume(kind: SpaceKind) -> Result<VolumeResult> {
    match kind {
        SpaceKind::EuclideanConformal { n } => Ok(VolumeResult::closed(unit_ball_volume(n))),
        SpaceKind::PseudoEuclideanConformal { .. } | SpaceKind::BerwaldMooreConformal => Ok(VolumeResult::closed(1.0)),
        SpaceKind::RegularizedHyperboloid { q0 } => regularized_hyperboloid_volume(q0),
    }
}

/// `V_base / kappa(x)^n`.
pub fn conformal_indicatrix_volume(spec: &SpaceSpec, x: &[f64]) -> Result<VolumeResult> {
    let k = spec.kappa_at(x)?;
    let base = base_volume(spec.kind)?;
    let kn = k.powi(spec.dimension() as i32);
    let method = match base.method {
        VolumeMethod::Quadrature => VolumeMethod::Quadrature,
        _ => VolumeMethod::ScalingLaw,
    };
    Ok(VolumeResult { value: base.value / kn, method, error_estimate: base.error_estimate / kn })
}

/// Euclidean measure of the set the indicatrix bounds before any
/// regularization; infinite for the hyperboloid.
pub fn raw_indicatrix_volume(spec: &SpaceSpec, x: &[f64]) -> Result<VolumeResult> {
    match spec.kind {
        SpaceKind::PseudoEuclideanConformal { .. } => {
            spec.kappa_at(x)?;
            Ok(VolumeResult::closed(f64::INFINITY))
        }
        _ => conformal_indicatrix_volume(spec, x),
    }
}

/// 4-volume of `{xi0 >= 0, |xi| <= xi0 : sqrt(xi0^2 - |xi|^2) + q0 xi0 <= 1}`.
pub fn regularized_hyperboloid_volume(q0: f64) -> Result<VolumeResult> {
    if !(q0 > 0.0) || !q0.is_finite() {
        return Err(Error::NonpositiveQ0(q0));
    }
    let t_break = 1.0 / (1.0 + q0);
    let t_end = 1.0 / q0;
    let q = integrate_panels(|t| hyperboloid_slice(q0, t), &[0.0, t_break, t_end], 1e-9);
    Ok(VolumeResult { value: q.value, method: VolumeMethod::Quadrature, error_estimate: q.error_estimate })
}

/// 3-volume of the body's slice at `xi0 = t`.
pub fn hyperboloid_slice(q0: f64, t: f64) -> f64 {
    if t <= 0.0 || q0 * t >= 1.0 {
        return 0.0;
    }
    let inner2 = t * t - (1.0 - q0 * t).powi(2);
    let outer = t.powi(3);
    let inner = if inner2 > 0.0 { inner2 * inner2.sqrt() } else { 0.0 };
    4.0 * PI / 3.0 * (outer - inner)
}

/// Lagrangian density `V_base / V_ind`, equal to `kappa^n` for the conformal
/// families.
pub fn lagrangian_from_volume(spec: &SpaceSpec, x: &[f64]) -> Result<f64> {
    let v = conformal_indicatrix_volume(spec, x)?;
    let base = match spec.kind {
        SpaceKind::RegularizedHyperboloid { .. } => 1.0,
        kind => base_volume(kind)?.value,
    };
    lagrangian_of(&v, base)
}

/// `base / v`, refusing an infinite volume.
pub fn lagrangian_of(v: &VolumeResult, base: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::InfiniteVolume);
    }
    Ok(base / v.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipsoid_examples() {
        let v = ellipsoid_volume(&DMatrix::identity(3, 3)).unwrap();
        assert!((v.value - 4.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(v.error_estimate, 0.0);
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        assert!((ellipsoid_volume(&g).unwrap().value - PI / 2.0).abs() < 1e-15);
        assert!((ellipsoid_volume(&DMatrix::identity(4, 4)).unwrap().value - PI * PI / 2.0).abs() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(ellipsoid_volume(&bad), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn conformal_examples() {
        let x = [0.0; 4];
        let p1 = SpaceSpec::pseudo(4).unwrap();
        let p2 = p1.clone().with_constant_kappa(2.0).unwrap();
        let r = conformal_indicatrix_volume(&p2, &x).unwrap().value / conformal_indicatrix_volume(&p1, &x).unwrap().value;
        assert_eq!(r, 1.0 / 16.0);
        let e = SpaceSpec::euclidean(3).unwrap().with_constant_kappa(2.0).unwrap();
        assert!((conformal_indicatrix_volume(&e, &[0.0; 3]).unwrap().value - 4.0 * PI / 24.0).abs() < 1e-15);
        let b2 = SpaceSpec::berwald_moore().unwrap().with_constant_kappa(2.0).unwrap();
        assert_eq!(conformal_indicatrix_volume(&b2, &[1.0; 4]).unwrap().value, 1.0 / 16.0);
    }

    #[test]
    fn lagrangian_examples() {
        let e = SpaceSpec::euclidean(3).unwrap().with_constant_kappa(2.0).unwrap();
        assert!((lagrangian_from_volume(&e, &[0.0; 3]).unwrap() - 8.0).abs() < 1e-12);
        let p = SpaceSpec::pseudo(4).unwrap().with_constant_kappa(3.0).unwrap();
        assert!((lagrangian_from_volume(&p, &[0.0; 4]).unwrap() - 81.0).abs() < 1e-12);
        let raw = raw_indicatrix_volume(&p, &[0.0; 4]).unwrap();
        assert!(!raw.is_finite());
        assert_eq!(lagrangian_of(&raw, 1.0), Err(Error::InfiniteVolume));
        let r = SpaceSpec::regularized(1.0).unwrap();
        let v1 = regularized_hyperboloid_volume(1.0).unwrap().value;
        assert!((lagrangian_from_volume(&r, &[0.0; 4]).unwrap() - 1.0 / v1).abs() < 1e-12);
    }

    #[test]
    fn cone_piece_of_unit_q0() {
        let q = crate::quadrature::adaptive_simpson(|t| hyperboloid_slice(1.0, t), 0.0, 0.5, 1e-12);
        assert!((q.value - PI / 48.0).abs() < 1e-12);
    }

    #[test]
    fn regularized_is_decreasing() {
        let v: Vec<f64> = [0.1, 0.2, 0.4].iter().map(|q| regularized_hyperboloid_volume(*q).unwrap().value).collect();
        assert!(v[0] > v[1] && v[1] > v[2]);
        assert_eq!(regularized_hyperboloid_volume(0.0), Err(Error::NonpositiveQ0(0.0)));
    }
}
