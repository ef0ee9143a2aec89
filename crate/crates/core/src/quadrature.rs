//! Adaptive Simpson quadrature with a Richardson error estimate.

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// The absolute target is `rel_tol` times a coarse estimate of `|∫ f|`, so
/// integrands with a large cancellation need an absolute floor via
/// [`adaptive_simpson_abs`].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Quadrature {
    let coarse = gauss_scale(&f, a, b);
    adaptive_simpson_abs(f, a, b, (rel_tol * coarse).max(f64::MIN_POSITIVE))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn adaptive_simpson_abs<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let (value, err) = recurse(&f, a, b, fa, fm, fb, whole, abs_tol, MAX_DEPTH, &mut evals);
    Quadrature { value, error_estimate: err, evaluations: evals }
}

/// Sum of adaptive integrals over consecutive panels `[p0, p1], [p1, p2], ...`.
///
/// Breakpoints where the integrand loses smoothness belong in `panels`.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, panels: &[f64], rel_tol: f64) -> Quadrature {
    let mut total = Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 };
    let scale: f64 = panels.windows(2).map(|w| gauss_scale(&f, w[0], w[1])).sum();
    let n = panels.len().saturating_sub(1).max(1) as f64;
    for w in panels.windows(2) {
        let q = adaptive_simpson_abs(&f, w[0], w[1], (rel_tol * scale / n).max(f64::MIN_POSITIVE));
        total.value += q.value;
        total.error_estimate += q.error_estimate;
        total.evaluations += q.evaluations;
    }
    total
}

fn gauss_scale<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    crate::ode::gauss_legendre5(|x| f(x).abs(), a, b).abs()
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return (left + right + delta / 15.0, delta.abs() / 15.0);
    }
    let (lv, le) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals);
    let (rv, re) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals);
    (lv + rv, le + re)
}
