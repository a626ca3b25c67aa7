//! Lifting reduced trajectories to the ambient space: Euler angles of the
//! moving frame, particle positions and velocities, and the fixed-frame
//! momentum.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::integrator::{sample, validate_tolerance, IntegrationOptions, OdeSystem, ReducedSystem, Trajectory};
use crate::reduced::{casimir, Model, ReducedState};

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

/// Relative size of the chart denominator at which reconstruction stops.
pub const BREAKDOWN_TOL: f64 = 1e-10;

/// Which Euler-angle chart is used for the group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameChart {
    /// g = R^Z_ψ R^X_θ R^Z_φ on SO(3), M = (0, 0, M₀).
    Sphere,
    /// Same ordering on SO(2,1) with hyperbolic R^X_θ, M = (0, 0, M₀).
    Elliptic,
    /// g = R^X_κ R^Z_ψ R^X_θ with both R^X hyperbolic, M = (M₀, 0, 0).
    Hyperbolic,
}

impl FrameChart {
    pub fn for_state(geometry: Geometry, s: &ReducedState) -> Result<Self> {
        let c = casimir(s.m, geometry);
        match geometry {
            Geometry::Sphere if c > 0.0 => Ok(FrameChart::Sphere),
            Geometry::Lobachevsky if c > 0.0 => Ok(FrameChart::Elliptic),
            Geometry::Lobachevsky if c < 0.0 => Ok(FrameChart::Hyperbolic),
            _ => Err(Error::ChartDomain(format!("no reconstruction chart for C = {c}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameChart::Sphere => "sphere",
            FrameChart::Elliptic => "l2_elliptic",
            FrameChart::Hyperbolic => "l2_hyperbolic",
        }
    }

    fn geometry(self) -> Geometry {
        match self {
            FrameChart::Sphere => Geometry::Sphere,
            _ => Geometry::Lobachevsky,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EulerAngles {
    Zxz { theta: f64, phi: f64, psi: f64 },
    Xzx { kappa: f64, psi: f64, theta: f64 },
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn boost_x(a: f64) -> Mat3 {
    let (s, c) = (a.sinh(), a.cosh());
    [[1.0, 0.0, 0.0], [0.0, c, s], [0.0, s, c]]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

pub fn mat_vec(a: &Mat3, v: &Vec3) -> Vec3 {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

fn transpose(a: &Mat3) -> Mat3 {
    [0, 1, 2].map(|i| [a[0][i], a[1][i], a[2][i]])
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn hat(w: &Vec3) -> Mat3 {
    [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]]
}

fn metric(geometry: Geometry) -> Vec3 {
    match geometry {
        Geometry::Sphere => [1.0, 1.0, 1.0],
        Geometry::Lobachevsky => [1.0, 1.0, -1.0],
    }
}

fn scale_cols(a: &Mat3, d: &Vec3) -> Mat3 {
    [0, 1, 2].map(|i| [a[i][0] * d[0], a[i][1] * d[1], a[i][2] * d[2]])
}

fn dot(a: &Vec3, b: &Vec3, k: &Vec3) -> f64 {
    a[0] * b[0] * k[0] + a[1] * b[1] * k[1] + a[2] * b[2] * k[2]
}

impl EulerAngles {
    pub fn matrix(&self, chart: FrameChart) -> Mat3 {
        match (*self, chart) {
            (EulerAngles::Zxz { theta, phi, psi }, FrameChart::Sphere) => {
                mat_mul(&mat_mul(&rot_z(psi), &rot_x(theta)), &rot_z(phi))
            }
            (EulerAngles::Zxz { theta, phi, psi }, _) => {
                mat_mul(&mat_mul(&rot_z(psi), &boost_x(theta)), &rot_z(phi))
            }
            (EulerAngles::Xzx { kappa, psi, theta }, _) => {
                mat_mul(&mat_mul(&boost_x(kappa), &rot_z(psi)), &boost_x(theta))
            }
        }
    }
}

/// Inverse of a group element: gᵀ on SO(3), K gᵀ K on SO(2,1).
pub fn group_inverse(g: &Mat3, geometry: Geometry) -> Mat3 {
    let k = metric(geometry);
    let t = transpose(g);
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| k[i] * t[i][j] * k[j]))
}

/// max |gᵀKg − K|.
pub fn group_defect(g: &Mat3, geometry: Geometry) -> f64 {
    let k = metric(geometry);
    let kg = [0, 1, 2].map(|i| [g[i][0] * k[i], g[i][1] * k[i], g[i][2] * k[i]]);
    let gtkg = mat_mul(&transpose(g), &kg);
    let mut d: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { k[i] } else { 0.0 };
            d = d.max((gtkg[i][j] - target).abs());
        }
    }
    d
}

/// Body-frame positions r₁ = (0, 0, 1), r₂ = (0, sn q, cs q).
pub fn body_positions(geometry: Geometry, q: f64) -> (Vec3, Vec3) {
    ([0.0, 0.0, 1.0], [0.0, geometry.sn(q), geometry.cs(q)])
}

struct LiftedSystem<'a> {
    reduced: ReducedSystem<'a>,
    chart: FrameChart,
    m0: f64,
}

impl LiftedSystem<'_> {
    /// Chart denominator and the numerator of the angle rate.
    fn rate_parts(&self, s: &ReducedState) -> Result<(f64, f64)> {
        let w = self.reduced.model.angular_velocity(s)?;
        let [mx, my, mz] = s.m;
        let m0 = self.m0;
        Ok(match self.chart {
            FrameChart::Sphere | FrameChart::Elliptic => (m0 * m0 - mz * mz, m0 * (mx * w[0] + my * w[1])),
            FrameChart::Hyperbolic => (m0 * m0 - mx * mx, m0 * (my * w[1] + mz * w[2])),
        })
    }
}

impl OdeSystem<6> for LiftedSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64; 6]) -> Result<[f64; 6]> {
        let r = [y[0], y[1], y[2], y[3], y[4]];
        let f = self.reduced.rhs(t, &r)?;
        let (den, num) = self.rate_parts(&ReducedState::from_array(&r))?;
        if den == 0.0 {
            return Err(Error::NonFinite);
        }
        Ok([f[0], f[1], f[2], f[3], f[4], num / den])
    }

    fn check(&self, t: f64, y: &[f64; 6]) -> Result<()> {
        let r = [y[0], y[1], y[2], y[3], y[4]];
        self.reduced.check(t, &r)?;
        let s = ReducedState::from_array(&r);
        let (den, _) = self.rate_parts(&s)?;
        if den.abs() < BREAKDOWN_TOL * self.m0 * self.m0 {
            return Err(Error::ChartBreakdown { t });
        }
        if self.chart == FrameChart::Elliptic && !(s.m[2] > 0.0) {
            return Err(Error::ChartBreakdown { t });
        }
        Ok(())
    }
}

/// Ambient motion of both particles.
#[derive(Clone, Debug)]
pub struct AmbientTrajectory {
    pub chart: FrameChart,
    /// Modulus of the fixed-frame momentum.
    pub m0: f64,
    pub times: Vec<f64>,
    pub angles: Vec<EulerAngles>,
    pub frames: Vec<Mat3>,
    pub r1: Vec<Vec3>,
    pub r2: Vec<Vec3>,
    pub v1: Vec<Vec3>,
    pub v2: Vec<Vec3>,
    /// Fixed-frame momentum evaluated from positions and velocities.
    pub momentum: Vec<Vec3>,
    /// Kinetic plus potential energy in the ambient space.
    pub energy: Vec<f64>,
    pub reduced: Trajectory,
    /// max |⟨R, R⟩ ∓ 1| over both particles.
    pub constraint_drift: f64,
    /// max |gᵀKg − K|.
    pub group_drift: f64,
    /// max |M(t) − M(0)| / |M(0)|.
    pub momentum_drift: f64,
    /// max |E_ambient − H| / |H|.
    pub energy_mismatch: f64,
}

/// Fixed-frame momentum expected in each chart.
pub fn frame_momentum(chart: FrameChart, m0: f64) -> Vec3 {
    match chart {
        FrameChart::Sphere | FrameChart::Elliptic => [0.0, 0.0, m0],
        FrameChart::Hyperbolic => [m0, 0.0, 0.0],
    }
}

fn unwrap(prev: f64, next: f64) -> f64 {
    let mut d = next - prev;
    d -= (2.0 * PI) * (d / (2.0 * PI)).round();
    prev + d
}

/// Euler angles except the integrated one, recovered from m.
fn angles_from_m(chart: FrameChart, m: &Vec3, m0: f64, integrated: f64) -> EulerAngles {
    let [mx, my, mz] = *m;
    match chart {
        FrameChart::Sphere => EulerAngles::Zxz {
            theta: (mz / m0).clamp(-1.0, 1.0).acos(),
            phi: mx.atan2(my).rem_euclid(2.0 * PI),
            psi: integrated,
        },
        FrameChart::Elliptic => EulerAngles::Zxz {
            theta: (mz / m0).max(1.0).acosh(),
            phi: (-mx).atan2(-my).rem_euclid(2.0 * PI),
            psi: integrated,
        },
        FrameChart::Hyperbolic => {
            let theta = (-mz / my).atanh();
            let psi = (-my / theta.cosh()).atan2(mx).rem_euclid(2.0 * PI);
            EulerAngles::Xzx { kappa: integrated, psi, theta }
        }
    }
}

fn unwrap_angles(prev: &EulerAngles, next: EulerAngles) -> EulerAngles {
    match (prev, next) {
        (EulerAngles::Zxz { phi: p0, .. }, EulerAngles::Zxz { theta, phi, psi }) => {
            EulerAngles::Zxz { theta, phi: unwrap(*p0, phi), psi }
        }
        (EulerAngles::Xzx { psi: p0, .. }, EulerAngles::Xzx { kappa, psi, theta }) => {
            EulerAngles::Xzx { kappa, psi: unwrap(*p0, psi), theta }
        }
        _ => next,
    }
}

/// Integrates the reduced flow together with the remaining Euler angle and
/// rebuilds the ambient motion. The initial integrated angle is zero.
pub fn reconstruct(model: &Model, s0: &ReducedState, t_end: f64, opts: &IntegrationOptions) -> Result<AmbientTrajectory> {
    validate_tolerance(opts.tol)?;
    model.check_state(s0)?;
    let geometry = model.geometry;
    let chart = FrameChart::for_state(geometry, s0)?;
    let c0 = casimir(s0.m, geometry);
    let m0 = c0.abs().sqrt();
    if chart == FrameChart::Elliptic && !(s0.m[2] > 0.0) {
        return Err(Error::ChartDomain("elliptic momentum reconstruction needs m_z > 0".into()));
    }
    let sys = LiftedSystem { reduced: ReducedSystem::new(model, opts.q_bounds), chart, m0 };
    sys.check(0.0, &lift(s0))?;
    let h0 = model.hamiltonian(s0)?;
    let mut energy_drift: f64 = 0.0;
    let mut casimir_drift: f64 = 0.0;
    let (times, ys) = sample(&sys, lift(s0), t_end, opts.tol, &opts.sampling, |y| {
        let s = ReducedState::from_array(&[y[0], y[1], y[2], y[3], y[4]]);
        energy_drift = energy_drift.max(rel(model.hamiltonian(&s)?, h0));
        casimir_drift = casimir_drift.max(rel(casimir(s.m, geometry), c0));
        Ok(())
    })?;
    let k = metric(geometry);
    let norm = match geometry {
        Geometry::Sphere => 1.0,
        Geometry::Lobachevsky => -1.0,
    };
    let (mu1, mu2) = (model.masses.mu1, model.masses.mu2);
    let n = times.len();
    let mut out = AmbientTrajectory {
        chart,
        m0,
        times: times.clone(),
        angles: Vec::with_capacity(n),
        frames: Vec::with_capacity(n),
        r1: Vec::with_capacity(n),
        r2: Vec::with_capacity(n),
        v1: Vec::with_capacity(n),
        v2: Vec::with_capacity(n),
        momentum: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        reduced: Trajectory {
            times,
            states: Vec::with_capacity(n),
            energy: Vec::with_capacity(n),
            casimir: Vec::with_capacity(n),
            energy_drift,
            casimir_drift,
        },
        constraint_drift: 0.0,
        group_drift: 0.0,
        momentum_drift: 0.0,
        energy_mismatch: 0.0,
    };
    for y in &ys {
        let s = ReducedState::from_array(&[y[0], y[1], y[2], y[3], y[4]]);
        let mut angles = angles_from_m(chart, &s.m, m0, y[5]);
        if let Some(prev) = out.angles.last() {
            angles = unwrap_angles(prev, angles);
        }
        let g = angles.matrix(chart);
        let grad = model.gradient(&s)?;
        // ġ = g ω̂ K (K = Id on the sphere)
        let gdot = mat_mul(&g, &scale_cols(&hat(&grad.dm), &k));
        let (b1, b2) = body_positions(geometry, s.q);
        let b2dot = [0.0, geometry.cs(s.q) * grad.dp, -geometry.sigma() * geometry.sn(s.q) * grad.dp];
        let r1 = mat_vec(&g, &b1);
        let r2 = mat_vec(&g, &b2);
        let v1 = mat_vec(&gdot, &b1);
        let gd2 = mat_vec(&gdot, &b2);
        let gb2 = mat_vec(&g, &b2dot);
        let v2 = [gd2[0] + gb2[0], gd2[1] + gb2[1], gd2[2] + gb2[2]];
        let kv = |v: &Vec3| [v[0] * k[0], v[1] * k[1], v[2] * k[2]];
        let c1 = cross(&kv(&r1), &kv(&v1));
        let c2 = cross(&kv(&r2), &kv(&v2));
        let mom = [0, 1, 2].map(|i| mu1 * c1[i] + mu2 * c2[i]);
        let kinetic = 0.5 * (mu1 * dot(&v1, &v1, &k) + mu2 * dot(&v2, &v2, &k));
        let e = kinetic + model.potential.u(s.q);
        let h = model.hamiltonian(&s)?;
        out.constraint_drift = out
            .constraint_drift
            .max((dot(&r1, &r1, &k) - norm).abs())
            .max((dot(&r2, &r2, &k) - norm).abs());
        out.group_drift = out.group_drift.max(group_defect(&g, geometry));
        out.energy_mismatch = out.energy_mismatch.max(rel(e, h));
        out.angles.push(angles);
        out.frames.push(g);
        out.r1.push(r1);
        out.r2.push(r2);
        out.v1.push(v1);
        out.v2.push(v2);
        out.momentum.push(mom);
        out.energy.push(e);
        out.reduced.states.push(s);
        out.reduced.energy.push(h);
        out.reduced.casimir.push(casimir(s.m, geometry));
    }
    let first = out.momentum[0];
    let scale = (first[0].powi(2) + first[1].powi(2) + first[2].powi(2)).sqrt().max(f64::MIN_POSITIVE);
    out.momentum_drift = out
        .momentum
        .iter()
        .map(|m| ((m[0] - first[0]).powi(2) + (m[1] - first[1]).powi(2) + (m[2] - first[2]).powi(2)).sqrt() / scale)
        .fold(0.0, f64::max);
    Ok(out)
}

fn lift(s: &ReducedState) -> [f64; 6] {
    let a = s.to_array();
    [a[0], a[1], a[2], a[3], a[4], 0.0]
}

fn rel(x: f64, x0: f64) -> f64 {
    let d = (x - x0).abs();
    if d == 0.0 {
        0.0
    } else {
        d / x0.abs().max(f64::MIN_POSITIVE)
    }
}

impl AmbientTrajectory {
    /// For a relative equilibrium g(0)⁻¹g(t) is a one-parameter subgroup;
    /// returns max ‖[g₀⁻¹g(t_i), g₀⁻¹g(t_2i)]‖ over samples with t_2i = 2 t_i.
    /// Needs uniform sampling starting at t = 0.
    pub fn commutation_defect(&self) -> f64 {
        let geometry = self.chart.geometry();
        let g0inv = group_inverse(&self.frames[0], geometry);
        let mut worst: f64 = 0.0;
        for i in 1..self.times.len() {
            let j = 2 * i;
            if j >= self.times.len() {
                break;
            }
            if (self.times[j] - 2.0 * self.times[i]).abs() > 1e-12 * self.times[j].abs().max(1.0) {
                continue;
            }
            let a = mat_mul(&g0inv, &self.frames[i]);
            let b = mat_mul(&g0inv, &self.frames[j]);
            let ab = mat_mul(&a, &b);
            let ba = mat_mul(&b, &a);
            for r in 0..3 {
                for c in 0..3 {
                    worst = worst.max((ab[r][c] - ba[r][c]).abs());
                }
            }
        }
        worst
    }

    /// max |g(t) m(t) − M| where M is the chart's fixed-frame momentum.
    pub fn frame_momentum_mismatch(&self) -> f64 {
        let target = frame_momentum(self.chart, self.m0);
        self.frames
            .iter()
            .zip(&self.reduced.states)
            .map(|(g, s)| {
                let gm = mat_vec(g, &s.m);
                (0..3).map(|i| (gm[i] - target[i]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = match self.chart {
            FrameChart::Hyperbolic => "t,kappa,psi,theta",
            _ => "t,theta,phi,psi",
        };
        writeln!(w, "{header},R1_x,R1_y,R1_z,R2_x,R2_y,R2_z")?;
        for i in 0..self.times.len() {
            let (a, b, c) = match self.angles[i] {
                EulerAngles::Zxz { theta, phi, psi } => (theta, phi, psi),
                EulerAngles::Xzx { kappa, psi, theta } => (kappa, psi, theta),
            };
            let (r1, r2) = (self.r1[i], self.r2[i]);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], a, b, c, r1[0], r1[1], r1[2], r2[0], r2[1], r2[2]
            )?;
        }
        Ok(())
    }

    /// Planar projection of both paths: (X, Y) on the sphere, the Poincaré
    /// disk X/(1+Z), Y/(1+Z) on L².
    pub fn projected_paths(&self) -> [Vec<(f64, f64)>; 2] {
        let proj = |r: &Vec3| match self.chart.geometry() {
            Geometry::Sphere => (r[0], r[1]),
            Geometry::Lobachevsky => (r[0] / (1.0 + r[2]), r[1] / (1.0 + r[2])),
        };
        [self.r1.iter().map(proj).collect(), self.r2.iter().map(proj).collect()]
    }

    pub fn write_svg<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let size = 480.0;
        let paths = self.projected_paths();
        let extent = paths
            .iter()
            .flatten()
            .fold(1e-12f64, |m, (x, y)| m.max(x.abs()).max(y.abs()))
            * 1.05;
        let map = |(x, y): (f64, f64)| (size / 2.0 * (1.0 + x / extent), size / 2.0 * (1.0 - y / extent));
        writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#)?;
        writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
        if self.chart.geometry() == Geometry::Lobachevsky {
            let (cx, cy) = map((0.0, 0.0));
            writeln!(w, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#bbb"/>"##, size / 2.0 / extent)?;
        }
        for (path, colour) in paths.iter().zip(["#c0392b", "#2c3e50"]) {
            let pts: Vec<String> = path.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            writeln!(w, r##"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"##, pts.join(" "))?;
        }
        writeln!(w, "</svg>")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Sampling;
    use crate::rel_equilibria::{angular_speed, solve_l2_elliptic, solve_l2_hyperbolic, solve_sphere};
    use std::f64::consts::FRAC_PI_3;

    fn uniform(n: usize) -> IntegrationOptions {
        IntegrationOptions { tol: 1e-11, sampling: Sampling::Uniform(n), q_bounds: None }
    }

    fn rate(tr: &AmbientTrajectory, i: usize) -> f64 {
        let a = |k: usize| match tr.angles[k] {
            EulerAngles::Zxz { psi, .. } => psi,
            EulerAngles::Xzx { kappa, .. } => kappa,
        };
        (a(i + 1) - a(i)) / (tr.times[i + 1] - tr.times[i])
    }

    /// Velocities from finite differences of the sampled positions.
    fn fd_velocity_error(tr: &AmbientTrajectory) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..tr.times.len() - 1 {
            let dt = tr.times[i + 1] - tr.times[i - 1];
            for (r, v) in [(&tr.r1, &tr.v1), (&tr.r2, &tr.v2)] {
                for c in 0..3 {
                    let fd = (r[i + 1][c] - r[i - 1][c]) / dt;
                    worst = worst.max((fd - v[i][c]).abs() / (1.0 + v[i][c].abs()));
                }
            }
        }
        worst
    }

    #[test]
    fn sphere_re_is_uniform_rotation() {
        let model = Model::normalized_gravity(Geometry::Sphere, 1.0).unwrap();
        let re = solve_sphere(FRAC_PI_3, &model).unwrap();
        let tr = reconstruct(&model, &re.state, 10.0, &uniform(200)).unwrap();
        let w = angular_speed(&re, &model);
        for i in 0..tr.times.len() - 1 {
            assert!((rate(&tr, i).abs() - w).abs() < 1e-10 * w.max(1.0), "{} vs {w}", rate(&tr, i));
        }
        let EulerAngles::Zxz { theta: t0, phi: p0, .. } = tr.angles[0] else { panic!() };
        for a in &tr.angles {
            let EulerAngles::Zxz { theta, phi, .. } = *a else { panic!() };
            assert!((theta - t0).abs() < 1e-12 && (phi - p0).abs() < 1e-12);
        }
        assert!(tr.commutation_defect() < 1e-8);
        assert!(tr.momentum_drift < 1e-9);
        assert!(tr.energy_mismatch < 1e-9);
    }

    #[test]
    fn sphere_generic_orbit_consistency() {
        let model = Model::normalized_gravity(Geometry::Sphere, 0.7).unwrap();
        let s0 = ReducedState::new([0.3, 0.5, 1.1], 1.2, 0.1);
        let tr = reconstruct(&model, &s0, 5.0, &uniform(20000)).unwrap();
        assert!(tr.constraint_drift < 1e-10);
        assert!(tr.group_drift < 1e-10);
        assert!(tr.momentum_drift < 1e-9, "{}", tr.momentum_drift);
        assert!(tr.energy_mismatch < 1e-9);
        assert!(tr.frame_momentum_mismatch() < 1e-9);
        assert!(fd_velocity_error(&tr) < 1e-6, "{}", fd_velocity_error(&tr));
        let m0 = tr.m0;
        let m = tr.momentum[0];
        assert!(m[0].abs() < 1e-9 && m[1].abs() < 1e-9 && (m[2] - m0).abs() < 1e-9 * m0);
        for i in 0..tr.times.len() {
            let (a, b) = (tr.r1[i], tr.r2[i]);
            let sep = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0).acos();
            assert!((sep - tr.reduced.states[i].q).abs() < 1e-10);
        }
    }

    #[test]
    fn elliptic_re_matches_closed_form() {
        let model = Model::normalized_gravity(Geometry::Lobachevsky, 1.0).unwrap();
        let re = solve_l2_elliptic(1.0, &model).unwrap();
        let tr = reconstruct(&model, &re.state, 20.0, &uniform(400)).unwrap();
        let w = angular_speed(&re, &model);
        for a in &tr.angles {
            let EulerAngles::Zxz { theta, phi, .. } = *a else { panic!() };
            assert!((theta - re.alpha).abs() < 1e-10);
            assert!((phi - PI).abs() < 1e-10);
        }
        for i in 0..tr.times.len() - 1 {
            assert!((rate(&tr, i).powi(2) - w * w).abs() < 1e-10 * w * w);
        }
        // distance α from the point (0, 0, 1)
        for r in &tr.r1 {
            assert!((r[2].acosh() - re.alpha).abs() < 1e-10);
        }
        assert!(tr.constraint_drift < 1e-10);
        assert!(tr.commutation_defect() < 1e-8);
        assert!(tr.momentum_drift < 1e-9 && tr.energy_mismatch < 1e-9);
        assert!(tr.frame_momentum_mismatch() < 1e-9);
    }

    #[test]
    fn elliptic_generic_orbit_consistency() {
        let model = Model::normalized_gravity(Geometry::Lobachevsky, 0.6).unwrap();
        let re = solve_l2_elliptic(0.8, &model).unwrap();
        let mut s0 = re.state;
        s0.p += 0.05;
        s0.m[0] += 0.02;
        let tr = reconstruct(&model, &s0, 5.0, &uniform(20000)).unwrap();
        assert!(tr.constraint_drift < 1e-10 && tr.group_drift < 1e-10);
        assert!(tr.momentum_drift < 1e-9 && tr.energy_mismatch < 1e-9);
        assert!(tr.frame_momentum_mismatch() < 1e-9);
        assert!(fd_velocity_error(&tr) < 1e-6, "{}", fd_velocity_error(&tr));
    }

    #[test]
    fn hyperbolic_re_matches_closed_form() {
        let model = Model::normalized_gravity(Geometry::Lobachevsky, 1.0).unwrap();
        let re = solve_l2_hyperbolic(1.0, &model).unwrap();
        let tr = reconstruct(&model, &re.state, 3.0, &uniform(300)).unwrap();
        let w = angular_speed(&re, &model);
        for a in &tr.angles {
            let EulerAngles::Xzx { psi, theta, .. } = *a else { panic!() };
            assert!((theta + re.alpha).abs() < 1e-10);
            assert!((psi.rem_euclid(2.0 * PI) - 1.5 * PI).abs() < 1e-10);
        }
        let k = rate(&tr, 0);
        assert!((k * k - w * w).abs() < 1e-10 * w * w);
        for (i, r) in tr.r1.iter().enumerate() {
            let t = tr.times[i];
            let expect = (k * t).cosh() * re.alpha.cosh();
            assert!((r[2] - expect).abs() < 1e-9 * expect);
        }
        assert!(tr.constraint_drift < 1e-10);
        assert!(tr.commutation_defect() < 1e-8);
        assert!(tr.momentum_drift < 1e-9 && tr.energy_mismatch < 1e-9);
        assert!(tr.frame_momentum_mismatch() < 1e-9);
    }

    #[test]
    fn hyperbolic_generic_orbit_consistency() {
        let model = Model::normalized_gravity(Geometry::Lobachevsky, 0.8).unwrap();
        let re = solve_l2_hyperbolic(0.9, &model).unwrap();
        let mut s0 = re.state;
        s0.p += 0.01;
        let tr = reconstruct(&model, &s0, 1.0, &uniform(10000)).unwrap();
        assert!(tr.constraint_drift < 1e-10 && tr.group_drift < 1e-10);
        assert!(tr.momentum_drift < 1e-9 && tr.energy_mismatch < 1e-9);
        assert!(tr.frame_momentum_mismatch() < 1e-9);
        assert!(fd_velocity_error(&tr) < 1e-6, "{}", fd_velocity_error(&tr));
    }

    #[test]
    fn parabolic_momentum_has_no_chart() {
        let model = Model::normalized_gravity(Geometry::Lobachevsky, 1.0).unwrap();
        let s0 = ReducedState::new([0.0, 1.0, 1.0], 1.0, 0.0);
        assert!(matches!(reconstruct(&model, &s0, 1.0, &uniform(10)), Err(Error::ChartDomain(_))));
    }

    #[test]
    fn group_inverse_is_inverse() {
        let g = EulerAngles::Xzx { kappa: 0.4, psi: 1.2, theta: -0.7 }.matrix(FrameChart::Hyperbolic);
        let p = mat_mul(&g, &group_inverse(&g, Geometry::Lobachevsky));
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(group_defect(&g, Geometry::Lobachevsky) < 1e-12);
    }
}
