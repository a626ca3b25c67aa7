//! Adaptive Dormand–Prince 5(4) integration with dense output, and the
//! reduced-trajectory driver with conservation monitors.

use std::io::Write;

use crate::error::{Error, Result};
use crate::reduced::{casimir, Model, ReducedState};

/// Right-hand side of an autonomous or time-dependent ODE in ℝᴺ.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;

    /// Called on every accepted step; an error aborts integration.
    fn check(&self, _t: f64, _y: &[f64; N]) -> Result<()> {
        Ok(())
    }
}

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

/// Smallest and largest accepted tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-14, 1e-3);
const MAX_STEPS: usize = 20_000_000;
/// The controller holds the local error estimate below `ERROR_SAFETY * tol`
/// so that accumulated drift over long horizons stays of order `tol`.
const ERROR_SAFETY: f64 = 0.02;

pub fn validate_tolerance(tol: f64) -> Result<()> {
    if !(tol >= TOL_RANGE.0 && tol <= TOL_RANGE.1) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

/// Quartic interpolant over one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrates from `t0` towards `t_end` (either direction) and calls
/// `on_step(dense, t, y)` after each accepted step. The final step lands
/// exactly on `t_end`.
pub fn drive<const N: usize, S, F>(
    sys: &S,
    y0: [f64; N],
    t0: f64,
    t_end: f64,
    tol: f64,
    mut on_step: F,
) -> Result<[f64; N]>
where
    S: OdeSystem<N>,
    F: FnMut(&DenseStep<N>, f64, &[f64; N]) -> Result<()>,
{
    validate_tolerance(tol)?;
    if !t_end.is_finite() || !t0.is_finite() {
        return Err(Error::InvalidParameter("non-finite integration time".into()));
    }
    sys.check(t0, &y0)?;
    if t_end == t0 {
        return Ok(y0);
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let etol = tol * ERROR_SAFETY;
    let scale = |y: &[f64; N], z: &[f64; N], i: usize| etol + etol * y[i].abs().max(z[i].abs());
    let norm = |e: &[f64; N], y: &[f64; N], z: &[f64; N]| -> f64 {
        let s: f64 = (0..N).map(|i| (e[i] / scale(y, z, i)).powi(2)).sum();
        (s / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y)?;

    // Initial step guess.
    let d0 = norm(&y, &y, &y);
    let d1 = norm(&k1, &y, &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span);
    {
        let y1 = axpy(&y, dir * h, &[(1.0, &k1)]);
        if let Ok(k) = sys.rhs(t + dir * h, &y1) {
            let diff: [f64; N] = std::array::from_fn(|i| k[i] - k1[i]);
            let d2 = norm(&diff, &y, &y) / h;
            let dm = d1.max(d2);
            let h1 = if dm <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
            h = (100.0 * h).min(h1).min(span);
        }
    }

    let mut reject_streak = 0usize;
    for _ in 0..MAX_STEPS {
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            return Ok(y);
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, h });
        }
        let hs = dir * h;
        let stages = (|| -> Result<_> {
            let k2 = sys.rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
            let k3 = sys.rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = sys.rhs(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = sys.rhs(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = sys.rhs(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new =
                axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = sys.rhs(t + hs, &y_new)?;
            Ok((k2, k3, k4, k5, k6, k7, y_new))
        })();
        let (k3, k4, k5, k6, k7, y_new) = match stages {
            Ok((_, k3, k4, k5, k6, k7, y_new)) => (k3, k4, k5, k6, k7, y_new),
            Err(Error::Domain { .. }) | Err(Error::NonFinite) => {
                // A trial stage left the domain: shrink and retry.
                h *= 0.25;
                reject_streak += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let err_vec: [f64; N] = std::array::from_fn(|i| {
            hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let err = norm(&err_vec, &y, &y_new);
        if !err.is_finite() {
            h *= 0.25;
            reject_streak += 1;
            continue;
        }
        if err <= 1.0 {
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = hs * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - hs * k7[i] - bspl;
                rcont[4][i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let t_new = if last { t_end } else { t + hs };
            sys.check(t_new, &y_new)?;
            let dense = DenseStep { t0: t, h: t_new - t, rcont };
            on_step(&dense, t_new, &y_new)?;
            t = t_new;
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= if reject_streak > 0 { fac.min(1.0) } else { fac };
            reject_streak = 0;
            if last {
                return Ok(y);
            }
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            reject_streak += 1;
        }
    }
    Err(Error::StepFailure { t, h })
}

/// Integrates and samples at `times` (monotone in the direction of
/// integration, all between `t0` and `t_end`).
pub fn integrate_at<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    y0: [f64; N],
    t0: f64,
    times: &[f64],
    tol: f64,
) -> Result<Vec<[f64; N]>> {
    let Some(&t_end) = times.last() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0usize;
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    while next < times.len() && (times[next] - t0) * dir <= 0.0 {
        out.push(y0);
        next += 1;
    }
    drive(sys, y0, t0, t_end, tol, |dense, t_new, y_new| {
        while next < times.len() && (times[next] - t_new) * dir <= 0.0 {
            let ts = times[next];
            out.push(if ts == t_new { *y_new } else { dense.eval(ts) });
            next += 1;
        }
        Ok(())
    })?;
    while out.len() < times.len() {
        // only reachable when t_end == t0
        out.push(y0);
    }
    Ok(out)
}

/// Output sampling for [`integrate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Sampling {
    /// Every accepted step.
    Steps,
    /// `n + 1` equally spaced times including both ends.
    Uniform(usize),
    /// Explicit times.
    Times(Vec<f64>),
}

/// Integration settings for the reduced system.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub tol: f64,
    pub sampling: Sampling,
    /// Admissible separation band; defaults to [1e-6, q_max − 1e-6].
    pub q_bounds: Option<(f64, f64)>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions { tol: 1e-10, sampling: Sampling::Steps, q_bounds: None }
    }
}

/// Sampled reduced trajectory with conservation diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    pub energy: Vec<f64>,
    pub casimir: Vec<f64>,
    /// max |H(t) − H(0)| / |H(0)| over all accepted steps.
    pub energy_drift: f64,
    /// max |C(t) − C(0)| / |C(0)| over all accepted steps.
    pub casimir_drift: f64,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,m_x,m_y,m_z,q,p,H,C")?;
        for i in 0..self.times.len() {
            let s = &self.states[i];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], s.m[0], s.m[1], s.m[2], s.q, s.p, self.energy[i], self.casimir[i]
            )?;
        }
        Ok(())
    }
}

pub(crate) struct ReducedSystem<'a> {
    pub model: &'a Model,
    pub q_lo: f64,
    pub q_hi: f64,
}

impl<'a> ReducedSystem<'a> {
    pub fn new(model: &'a Model, bounds: Option<(f64, f64)>) -> Self {
        let (q_lo, q_hi) = bounds.unwrap_or((1e-6, model.geometry.q_max() - 1e-6));
        ReducedSystem { model, q_lo, q_hi }
    }
}

impl OdeSystem<5> for ReducedSystem<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
        self.model.vector_field(&ReducedState::from_array(y))
    }

    fn check(&self, t: f64, y: &[f64; 5]) -> Result<()> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if y[3] < self.q_lo || y[3] > self.q_hi {
            return Err(Error::SingularityApproach { t, q: y[3] });
        }
        Ok(())
    }
}

fn relative(x: f64, x0: f64) -> f64 {
    let d = (x - x0).abs();
    if d == 0.0 {
        0.0
    } else {
        d / x0.abs().max(f64::MIN_POSITIVE)
    }
}

/// Integrates `sys` over `[0, t_end]`, recording states at the requested
/// sampling. `on_accept` sees the state after every accepted step.
pub fn sample<const N: usize, S, F>(
    sys: &S,
    y0: [f64; N],
    t_end: f64,
    tol: f64,
    sampling: &Sampling,
    mut on_accept: F,
) -> Result<(Vec<f64>, Vec<[f64; N]>)>
where
    S: OdeSystem<N>,
    F: FnMut(&[f64; N]) -> Result<()>,
{
    let mut times = vec![0.0];
    let mut ys = vec![y0];
    let requested: Option<Vec<f64>> = match sampling {
        Sampling::Steps => None,
        Sampling::Uniform(n) => {
            let n = (*n).max(1);
            Some((0..=n).map(|i| t_end * i as f64 / n as f64).collect())
        }
        Sampling::Times(v) => Some(v.clone()),
    };
    let mut next = 0usize;
    if let Some(req) = &requested {
        times.clear();
        ys.clear();
        while next < req.len() && req[next] * t_end.signum() <= 0.0 {
            times.push(req[next]);
            ys.push(y0);
            next += 1;
        }
    }
    let dir = if t_end >= 0.0 { 1.0 } else { -1.0 };
    drive(sys, y0, 0.0, t_end, tol, |dense, t_new, y| {
        on_accept(y)?;
        match &requested {
            None => {
                times.push(t_new);
                ys.push(*y);
            }
            Some(req) => {
                while next < req.len() && (req[next] - t_new) * dir <= 0.0 {
                    let ts = req[next];
                    times.push(ts);
                    ys.push(if ts == t_new { *y } else { dense.eval(ts) });
                    next += 1;
                }
            }
        }
        Ok(())
    })?;
    Ok((times, ys))
}

/// Integrates the reduced flow from `s0` over `[0, t_end]`.
pub fn integrate(
    model: &Model,
    s0: &ReducedState,
    t_end: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    validate_tolerance(opts.tol)?;
    model.check_state(s0)?;
    let sys = ReducedSystem::new(model, opts.q_bounds);
    let h0 = model.hamiltonian(s0)?;
    let c0 = casimir(s0.m, model.geometry);
    let mut energy_drift: f64 = 0.0;
    let mut casimir_drift: f64 = 0.0;
    let (times, ys) = sample(&sys, s0.to_array(), t_end, opts.tol, &opts.sampling, |y| {
        let s = ReducedState::from_array(y);
        energy_drift = energy_drift.max(relative(model.hamiltonian(&s)?, h0));
        casimir_drift = casimir_drift.max(relative(casimir(s.m, model.geometry), c0));
        Ok(())
    })?;
    let states: Vec<ReducedState> = ys.iter().map(|y| ReducedState::from_array(y)).collect();
    let mut energy = Vec::with_capacity(states.len());
    for s in &states {
        energy.push(model.hamiltonian(s)?);
    }
    let casimir_values = states.iter().map(|s| casimir(s.m, model.geometry)).collect();
    Ok(Trajectory { times, states, energy, casimir: casimir_values, energy_drift, casimir_drift })
}
