//! Exact-rational truncated power series and the small-xi expansion of the
//! cosmological equation
//!
//! ```text
//! xi (1 - 3 phi^2) phi' + 2 phi (1 - phi^2) - 3 xi (1 - phi^2)^2 = 0,   phi(0) = 0.
//! ```

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Power series `sum c_k x^k` truncated after `x^order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<BigRational>,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![BigRational::zero(); order + 1] }
    }

    pub fn constant(c: BigRational, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The series `x` truncated at `order`.
    pub fn variable(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = BigRational::one();
        }
        s
    }

    pub fn from_coeffs(mut coeffs: Vec<BigRational>, order: usize) -> Self {
        coeffs.resize(order + 1, BigRational::zero());
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &BigRational {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn derivative(&self) -> Self {
        let order = self.order();
        let mut out = Self::zero(order);
        for k in 1..=order {
            out.coeffs[k - 1] = &self.coeffs[k] * BigRational::from_integer(BigInt::from(k));
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(c)))
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries { coeffs: (0..=order).map(|k| &self.coeffs[k] + &rhs.coeffs[k]).collect() }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        TruncatedSeries { coeffs: (0..=order).map(|k| &self.coeffs[k] - &rhs.coeffs[k]).collect() }
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let order = self.order().min(rhs.order());
        let mut out = TruncatedSeries::zero(order);
        for (i, a) in self.coeffs.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(order + 1 - i) {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

/// Left side of the cosmological equation for a series `phi`, truncated at
/// the order of `phi`.
pub fn cosmo_equation_series(phi: &TruncatedSeries) -> TruncatedSeries {
    let order = phi.order();
    let one = TruncatedSeries::constant(BigRational::one(), order);
    let x = TruncatedSeries::variable(order);
    let phi2 = phi * phi;
    let one_minus_phi2 = &one - &phi2;
    let dphi = phi.derivative();

    let term1 = &(&x * &(&one - &phi2.scale_int(3))) * &dphi;
    let term2 = (phi * &one_minus_phi2).scale_int(2);
    let term3 = (&x * &(&one_minus_phi2 * &one_minus_phi2)).scale_int(3);
    &(&term1 + &term2) - &term3
}

/// Coefficients `a_1 .. a_N` of `phi(xi) = sum a_k xi^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesExpansion {
    coefficients: Vec<BigRational>,
}

impl SeriesExpansion {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// `a_k` for `k = 1..=order`.
    pub fn coefficient(&self, k: usize) -> &BigRational {
        &self.coefficients[k - 1]
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coefficients
    }

    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let c = self.coefficients_f64();
        c.iter().rev().fold(0.0, |acc, a| (acc + a) * xi)
    }

    pub fn deriv(&self, xi: f64) -> f64 {
        let c = self.coefficients_f64();
        let mut acc = 0.0;
        for (k, a) in c.iter().enumerate().rev() {
            acc = acc * xi + (k + 1) as f64 * a;
        }
        acc
    }

    /// `int_0^xi phi`.
    pub fn integral(&self, xi: f64) -> f64 {
        let c = self.coefficients_f64();
        let mut acc = 0.0;
        for (k, a) in c.iter().enumerate().rev() {
            acc = acc * xi + a / (k + 2) as f64;
        }
        acc * xi * xi
    }

    pub fn as_strings(&self) -> Vec<String> {
        self.coefficients.iter().map(rational_string).collect()
    }
}

impl fmt::Display for SeriesExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_strings().join(", "))
    }
}

pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Solves the cosmological equation order by order for `a_1 .. a_order`.
///
/// At order `k` the equation is affine in `a_k` once lower coefficients are
/// fixed, so two trial evaluations determine it exactly.
pub fn phi_series(order: usize) -> SeriesExpansion {
    assert!(order >= 1, "series order must be at least 1");
    let mut coeffs: Vec<BigRational> = vec![BigRational::zero(); order + 1];
    for k in 1..=order {
        coeffs[k] = BigRational::zero();
        let r0 = cosmo_equation_series(&TruncatedSeries::from_coeffs(coeffs[..=k].to_vec(), k));
        coeffs[k] = BigRational::one();
        let r1 = cosmo_equation_series(&TruncatedSeries::from_coeffs(coeffs[..=k].to_vec(), k));
        let c0 = r0.coeff(k).clone();
        let slope = r1.coeff(k) - &c0;
        assert!(!slope.is_zero(), "order {k} does not determine a_{k}");
        coeffs[k] = -c0 / slope;
    }
    SeriesExpansion { coefficients: coeffs[1..].to_vec() }
}
