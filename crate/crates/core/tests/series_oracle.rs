//! Independent rational recursion for the cosmological series, from the
//! flux form d/dxi[xi^2 phi (1 - phi^2)] = 3 xi^2 (1 - phi^2)^2.
//!
//! Comparing the xi^(k+1) coefficients gives the explicit recursion
//! a_k = [phi^3]_k + 3 [(1 - phi^2)^2]_(k-1) / (k + 2), whose right side
//! only involves a_1 .. a_(k-2).

use finsler_core::series::phi_series;
use num_rational::Ratio;
use num_traits::{One, Zero};

type Q = Ratio<i128>;

fn mul(a: &[Q], b: &[Q], len: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn oracle(order: usize) -> Vec<Q> {
    let len = order + 1;
    let mut a = vec![Q::zero(); len];
    for k in 1..=order {
        let phi2 = mul(&a, &a, len);
        let phi3 = mul(&phi2, &a, len);
        let mut w = phi2.iter().map(|c| -c).collect::<Vec<_>>();
        w[0] += Q::one();
        let w2 = mul(&w, &w, len);
        a[k] = phi3[k] + Q::from_integer(3) * w2[k - 1] / Q::from_integer(k as i128 + 2);
    }
    a[1..].to_vec()
}

fn as_string(q: &Q) -> String {
    if *q.denom() == 1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[test]
fn leading_coefficients() {
    assert_eq!(phi_series(3).to_string(), "1, 0, -1/5");
    let o = oracle(5);
    assert_eq!(o[4], Q::new(6, 35));
}

#[test]
fn matches_oracle_to_order_eleven() {
    let s = phi_series(11);
    let o = oracle(11);
    assert_eq!(s.as_strings(), o.iter().map(as_string).collect::<Vec<_>>());
}

#[test]
fn even_coefficients_vanish() {
    let s = phi_series(11);
    for k in (2..=11).step_by(2) {
        assert!(s.coefficient(k).is_zero(), "a_{k} = {}", s.coefficient(k));
    }
}

#[test]
fn higher_order_reproduces_lower() {
    let hi = phi_series(11);
    for n in 1..11 {
        assert_eq!(phi_series(n).coefficients(), &hi.coefficients()[..n]);
    }
}
