//! Explicit Runge-Kutta integrators: a Dormand-Prince 5(4) pair with PI step
//! control and continuous extension for scalar problems, and a classical RK4
//! with step-doubling error control for vector problems.

use crate::error::{Error, Result};

// Dormand-Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-control settings for [`dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Config {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    /// PI stabilisation exponent; 0 gives the plain I controller.
    pub beta: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Dopri5Config {
    pub fn with_tolerance(rtol: f64) -> Self {
        Self { rtol, atol: rtol, ..Self::default() }
    }
}

impl Default for Dopri5Config {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-8,
            safety: 0.9,
            beta: 0.04,
            fac_min: 0.2,
            fac_max: 10.0,
            h_init: None,
            h_min: 1e-14,
            max_steps: 200_000,
        }
    }
}

/// One accepted step together with its quartic continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    pub y0: f64,
    pub y1: f64,
    pub f0: f64,
    pub f1: f64,
    rcont: [f64; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.h >= 0.0 { (self.t0, self.t1()) } else { (self.t1(), self.t0) };
        t >= lo && t <= hi
    }

    pub fn eval(&self, t: f64) -> f64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])))
    }

    /// Derivative of the continuous extension with respect to `t`.
    pub fn deriv(&self, t: f64) -> f64 {
        let th = (t - self.t0) / self.h;
        let r = &self.rcont;
        // y = r0 + r1 th + r2 (th - th^2) + r3 (th^2 - th^3) + r4 (th^2 - 2 th^3 + th^4)
        let dy = r[1]
            + r[2] * (1.0 - 2.0 * th)
            + r[3] * (2.0 * th - 3.0 * th * th)
            + r[4] * (2.0 * th - 6.0 * th * th + 4.0 * th * th * th);
        dy / self.h
    }

    /// Integral of the continuous extension from `t0` to `t`.
    pub fn integral_to(&self, t: f64) -> f64 {
        gauss_legendre5(|s| self.eval(s), self.t0, t)
    }
}

/// What the caller wants after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Integrates the scalar problem `y' = f(t, y)` from `t0` towards `t_end`.
///
/// `f` returns `None` when the state is outside its domain; the step is then
/// retried with a quarter of the step size. `on_step` is called after every
/// accepted step and may stop the integration early.
pub fn dopri5<F, G>(
    mut f: F,
    t0: f64,
    y0: f64,
    t_end: f64,
    cfg: &Dopri5Config,
    mut on_step: G,
) -> Result<Vec<DenseStep>>
where
    F: FnMut(f64, f64) -> Option<f64>,
    G: FnMut(&DenseStep) -> Control,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    if span == 0.0 {
        return Ok(Vec::new());
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y).ok_or_else(|| Error::ToleranceNotMet("initial state outside domain".into()))?;
    let mut h = cfg.h_init.unwrap_or_else(|| initial_step(&mut f, t, y, k1, dir, cfg)).min(span) * dir;
    let expo1 = 0.2 - 0.75 * cfg.beta;
    let mut fac_old: f64 = 1e-4;
    let mut steps = Vec::new();
    let mut rejected_last = false;

    for _ in 0..cfg.max_steps {
        if (t_end - t) * dir <= 0.0 {
            return Ok(steps);
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < cfg.h_min * (1.0 + t.abs()) {
            return Err(Error::ToleranceNotMet(format!("step size underflow at t = {t}")));
        }

        let Some(trial) = try_step(&mut f, t, y, k1, h) else {
            h *= 0.25;
            rejected_last = true;
            continue;
        };
        let Trial { y_new, k7, err: err_abs, rcont5 } = trial;
        let sc = cfg.atol + cfg.rtol * y.abs().max(y_new.abs());
        let err = (err_abs / sc).max(1e-300);

        let fac11 = err.powf(expo1);
        let mut fac = fac11 / fac_old.powf(cfg.beta);
        fac = (fac / cfg.safety).clamp(1.0 / cfg.fac_max, 1.0 / cfg.fac_min);

        if err <= 1.0 {
            fac_old = err.max(1e-4);
            let step = DenseStep {
                t0: t,
                h,
                y0: y,
                y1: y_new,
                f0: k1,
                f1: k7,
                rcont: [y, y_new - y, h * k1 - (y_new - y), (y_new - y) - h * k7 - (h * k1 - (y_new - y)), rcont5],
            };
            t += h;
            y = y_new;
            k1 = k7;
            steps.push(step);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = if dir > 0.0 { h_new.min(h) } else { h_new.max(h) };
            }
            rejected_last = false;
            h = h_new;
            if on_step(&step) == Control::Stop {
                return Ok(steps);
            }
        } else {
            h /= (fac11 / cfg.safety).min(1.0 / cfg.fac_min);
            rejected_last = true;
        }
    }
    Err(Error::ToleranceNotMet(format!("exceeded {} steps", cfg.max_steps)))
}

struct Trial {
    y_new: f64,
    k7: f64,
    err: f64,
    rcont5: f64,
}

fn try_step<F>(f: &mut F, t: f64, y: f64, k1: f64, h: f64) -> Option<Trial>
where
    F: FnMut(f64, f64) -> Option<f64>,
{
    let k2 = f(t + C2 * h, y + h * A21 * k1)?;
    let k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
    let k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
    let y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    if !y_new.is_finite() {
        return None;
    }
    let k7 = f(t + h, y_new)?;
    let err = (h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)).abs();
    let rcont5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
    if !(err.is_finite() && k7.is_finite()) {
        return None;
    }
    Some(Trial { y_new, k7, err, rcont5 })
}

fn initial_step<F>(f: &mut F, t: f64, y: f64, f0: f64, dir: f64, cfg: &Dopri5Config) -> f64
where
    F: FnMut(f64, f64) -> Option<f64>,
{
    let sk = cfg.atol + cfg.rtol * y.abs();
    let dnf = (f0 / sk).powi(2);
    let dny = (y / sk).powi(2);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    if let Some(f1) = f(t + dir * h, y + dir * h * f0) {
        let der2 = ((f1 - f0) / sk).abs() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        h = (100.0 * h).min(h1);
    }
    h
}

/// Five-point Gauss-Legendre rule on `[a, b]`; exact for polynomials of degree nine.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * X.iter().zip(W).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Output of [`rk4_adaptive`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rk4Path {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Classical RK4 with step-doubling error control.
///
/// `f` fills the derivative into its third argument and may fail, which aborts
/// the integration with that error.
pub fn rk4_adaptive<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, tol: f64) -> Result<Rk4Path>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = 0.01 * (t_end - t0).abs().max(1e-12) * dir;
    let mut path = Rk4Path { times: vec![t0], states: vec![y.clone()] };
    let mut full = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut guard = 0usize;

    while (t_end - t) * dir > 0.0 {
        guard += 1;
        if guard > 2_000_000 {
            return Err(Error::ToleranceNotMet("rk4: too many steps".into()));
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        rk4_step(&mut f, t, &y, h, &mut full)?;
        rk4_step(&mut f, t, &y, 0.5 * h, &mut tmp)?;
        rk4_step(&mut f, t + 0.5 * h, &tmp.clone(), 0.5 * h, &mut half)?;
        let mut err: f64 = 0.0;
        for i in 0..n {
            let sc = tol * (1.0 + half[i].abs());
            err = err.max((half[i] - full[i]).abs() / 15.0 / sc);
        }
        if err <= 1.0 {
            t += h;
            for i in 0..n {
                // Richardson extrapolation of the two half steps.
                y[i] = half[i] + (half[i] - full[i]) / 15.0;
            }
            path.times.push(t);
            path.states.push(y.clone());
            let fac = if err == 0.0 { 4.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 4.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::ToleranceNotMet(format!("rk4 step underflow at t = {t}")));
            }
        }
    }
    Ok(path)
}

fn rk4_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, out: &mut [f64]) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut s = vec![0.0; n];
    f(t, y, &mut k1)?;
    for i in 0..n {
        s[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, &s, &mut k2)?;
    for i in 0..n {
        s[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, &s, &mut k3)?;
    for i in 0..n {
        s[i] = y[i] + h * k3[i];
    }
    f(t + h, &s, &mut k4)?;
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}
