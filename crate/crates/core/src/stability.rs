//! Leaf-wise stability of relative equilibria: Andoyer-type charts on the
//! symplectic leaves, Hessians of the restricted Hamiltonian, signatures,
//! linearised spectra and the resonance indicators.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::jet::Jet4;
use crate::reduced::{casimir, Model, ReducedState};
use crate::rel_equilibria::{
    lobachevsky_alpha, q_branches, solve_l2_elliptic, solve_l2_hyperbolic, solve_sphere, Family,
    RelativeEquilibrium,
};

pub type Mat4 = [[f64; 4]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChartKind {
    /// m = (z, √(M²−z²) sin α, √(M²−z²) cos α).
    SphereAndoyer,
    /// m = (z, √(M²+z²) sinh α, √(M²+z²) cosh α), leaf C = M².
    L2Elliptic,
    /// m = (z, √(M²−z²) cosh α, √(M²−z²) sinh α), leaf C = −M².
    L2Hyperbolic,
}

/// Chart (α, q, z, p) on a symplectic leaf {C = c}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafChart {
    pub geometry: Geometry,
    pub kind: ChartKind,
    pub casimir: f64,
}

impl LeafChart {
    pub fn new(geometry: Geometry, casimir: f64) -> Result<Self> {
        let kind = match geometry {
            Geometry::Sphere if casimir > 0.0 => ChartKind::SphereAndoyer,
            Geometry::Lobachevsky if casimir > 0.0 => ChartKind::L2Elliptic,
            Geometry::Lobachevsky if casimir < 0.0 => ChartKind::L2Hyperbolic,
            _ => {
                return Err(Error::ChartDomain(format!(
                    "no Andoyer chart on the leaf C = {casimir} of {geometry}"
                )))
            }
        };
        Ok(LeafChart { geometry, kind, casimir })
    }

    pub fn for_re(re: &RelativeEquilibrium) -> Result<Self> {
        LeafChart::new(re.geometry, re.casimir)
    }

    pub fn m_squared(&self) -> f64 {
        self.casimir.abs()
    }

    /// Value of the bracket {α, z} in this chart ({q, p} = 1 always).
    pub fn bracket_sign(&self) -> f64 {
        match self.kind {
            ChartKind::SphereAndoyer => 1.0,
            ChartKind::L2Elliptic | ChartKind::L2Hyperbolic => -1.0,
        }
    }

    /// Canonical structure matrix in the order (α, q, z, p).
    pub fn structure_matrix(&self) -> Mat4 {
        let s = self.bracket_sign();
        [[0.0, 0.0, s, 0.0], [0.0, 0.0, 0.0, 1.0], [-s, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]]
    }

    fn radial(&self, z: f64) -> Result<f64> {
        let m2 = self.m_squared();
        let r2 = match self.kind {
            ChartKind::SphereAndoyer | ChartKind::L2Hyperbolic => m2 - z * z,
            ChartKind::L2Elliptic => m2 + z * z,
        };
        if !(r2 > 0.0) {
            return Err(Error::ChartDomain(format!("|z| = {} not below M = {}", z.abs(), m2.sqrt())));
        }
        Ok(r2.sqrt())
    }

    /// Leaf point (α, q, z, p) → reduced state.
    pub fn to_state(&self, x: [f64; 4]) -> Result<ReducedState> {
        let [a, q, z, p] = x;
        let r = self.radial(z)?;
        let m = match self.kind {
            ChartKind::SphereAndoyer => [z, r * a.sin(), r * a.cos()],
            ChartKind::L2Elliptic => [z, r * a.sinh(), r * a.cosh()],
            ChartKind::L2Hyperbolic => [z, r * a.cosh(), r * a.sinh()],
        };
        Ok(ReducedState::new(m, q, p))
    }

    /// Reduced state on this leaf → (α, q, z, p).
    pub fn from_state(&self, s: &ReducedState) -> Result<[f64; 4]> {
        let c = casimir(s.m, self.geometry);
        if (c - self.casimir).abs() > 1e-9 * self.casimir.abs().max(1.0) {
            return Err(Error::ChartDomain(format!("state has C = {c}, chart leaf C = {}", self.casimir)));
        }
        let [mx, my, mz] = s.m;
        let a = match self.kind {
            ChartKind::SphereAndoyer => my.atan2(mz),
            ChartKind::L2Elliptic => {
                if !(mz > 0.0) {
                    return Err(Error::ChartDomain("elliptic chart needs m_z > 0".into()));
                }
                (my / mz).atanh()
            }
            ChartKind::L2Hyperbolic => {
                if !(my > mz.abs()) {
                    return Err(Error::ChartDomain("hyperbolic chart needs m_y > |m_z|".into()));
                }
                (mz / my).atanh()
            }
        };
        Ok([a, s.q, mx, s.p])
    }

    /// Taylor series of the restricted Hamiltonian about `x0` in the
    /// displacement variables (δα, δq, δz, δp).
    pub fn restricted_jet(&self, model: &Model, x0: [f64; 4], order: usize) -> Result<Jet4> {
        self.radial(x0[2])?;
        let a = Jet4::variable(0, x0[0]);
        let q = Jet4::variable(1, x0[1]);
        let z = Jet4::variable(2, x0[2]);
        let p = Jet4::variable(3, x0[3]);
        let m2 = self.m_squared();
        let zz = z.square();
        let (my, mz) = match self.kind {
            ChartKind::SphereAndoyer => {
                let r = zz.scale(-1.0).add_const(m2).sqrt();
                (r.mul_jet(&a.sin()), r.mul_jet(&a.cos()))
            }
            ChartKind::L2Elliptic => {
                let r = zz.add_const(m2).sqrt();
                (r.mul_jet(&a.sinh()), r.mul_jet(&a.cosh()))
            }
            ChartKind::L2Hyperbolic => {
                let r = zz.scale(-1.0).add_const(m2).sqrt();
                (r.mul_jet(&a.cosh()), r.mul_jet(&a.sinh()))
            }
        };
        model.hamiltonian_jet([&z, &my, &mz], &q, &p, order)
    }
}

/// The Hamiltonian restricted to a leaf, evaluated through the chart.
pub fn restricted_hamiltonian(chart: &LeafChart, x: [f64; 4], model: &Model) -> Result<f64> {
    model.hamiltonian(&chart.to_state(x)?)
}

fn re_point(re: &RelativeEquilibrium) -> [f64; 4] {
    [re.alpha, re.q, 0.0, 0.0]
}

/// Hessian of the restricted Hamiltonian at the RE from exact second-order
/// Taylor coefficients, in the order (α, q, z, p).
pub fn hessian_at_re(re: &RelativeEquilibrium, model: &Model) -> Result<Mat4> {
    let chart = LeafChart::for_re(re)?;
    Ok(chart.restricted_jet(model, re_point(re), 2)?.hessian())
}

/// Hessian by central finite differences of the restricted Hamiltonian.
pub fn hessian_finite_difference(re: &RelativeEquilibrium, model: &Model, h: f64) -> Result<Mat4> {
    let chart = LeafChart::for_re(re)?;
    let x0 = re_point(re);
    let f = |dx: [f64; 4]| -> Result<f64> {
        let x = [x0[0] + dx[0], x0[1] + dx[1], x0[2] + dx[2], x0[3] + dx[3]];
        restricted_hamiltonian(&chart, x, model)
    };
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let mut v = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut dx = [0.0; 4];
                dx[i] += si * h;
                dx[j] += sj * h;
                v += w * f(dx)?;
            }
            out[i][j] = v / (4.0 * h * h);
            out[j][i] = out[i][j];
        }
    }
    Ok(out)
}

/// Closed-form Hessian blocks for the gravitational potential.
pub fn hessian_closed_form(re: &RelativeEquilibrium, model: &Model) -> Result<Mat4> {
    let k = model.potential.gravitational_coupling().ok_or_else(|| {
        Error::InvalidParameter("closed-form Hessian requires the gravitational potential".into())
    })?;
    let mu1 = model.masses.mu1;
    let mu = model.mu();
    let (q, a) = (re.q, re.alpha);
    // Momentum in units where μ₁ = k = 1.
    let m2 = re.m_squared / (mu1 * k);
    let (n1, n2) = match re.family {
        Family::Elliptic | Family::Hyperbolic => {
            let (s, c) = (q.sinh(), q.cosh());
            let n11 = m2 * ((2.0 * (q - a)).cosh() + mu * (2.0 * a).cosh()) / (s * s);
            let n12 = -m2 * (-s * (2.0 * a).cosh() + (1.0 + mu) * c * (2.0 * a).sinh()) / (s * s * s);
            let n2_12 = -1.0;
            if re.family == Family::Hyperbolic {
                let n22 = m2 * (1.0 + mu) * a.sinh().powi(2) / s.powi(4);
                let z11 = (-(2.0 * (q - a)).cosh() + (2.0 * q).cosh() - 2.0 * mu * a.sinh().powi(2))
                    / ((2.0 * q).cosh() - 1.0);
                ([[n11, n12], [n12, n22]], [[z11, n2_12], [n2_12, 1.0 + mu]])
            } else {
                let n22 = m2 * (1.0 + mu) * a.cosh().powi(2) / s.powi(4);
                let z11 = a.cosh() * ((2.0 * q - a).cosh() + mu * a.cosh()) / (s * s);
                ([[n11, n12], [n12, n22]], [[z11, n2_12], [n2_12, 1.0 + mu]])
            }
        }
        _ => {
            let (s, c) = (q.sin(), q.cos());
            let n11 = -m2 * ((2.0 * (q - a)).cos() + mu * (2.0 * a).cos()) / (s * s);
            let n22 = m2 * (1.0 + mu) * a.cos().powi(2) / s.powi(4);
            let n12 = m2 * (-s * (2.0 * a).cos() + (1.0 + mu) * c * (2.0 * a).sin()) / (s * s * s);
            let z11 = -a.cos() * ((2.0 * q - a).cos() + mu * a.cos()) / (s * s);
            ([[n11, n12], [n12, n22]], [[z11, 1.0], [1.0, 1.0 + mu]])
        }
    };
    let mut h = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = k * n1[i][j];
            h[i + 2][j + 2] = n2[i][j] / mu1;
        }
    }
    Ok(h)
}

/// Inertia (n₊, n₋, n₀) of a symmetric matrix; eigenvalues with
/// |λ| ≤ tol·max|λ| count as zero.
pub fn signature(m: &Mat4, tol: f64) -> (usize, usize, usize) {
    let mat = Matrix4::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(mat).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let (mut p, mut n, mut z) = (0, 0, 0);
    for &l in eig.iter() {
        if l.abs() <= tol * scale || scale == 0.0 {
            z += 1;
        } else if l > 0.0 {
            p += 1;
        } else {
            n += 1;
        }
    }
    (p, n, z)
}

/// Inertia of the leaf Hessian. When it splits into (α, q) and (z, p)
/// blocks each block gets its own zero threshold, since their scales can
/// differ by many orders of magnitude near collision.
pub fn leaf_signature(h: &Mat4, tol: f64) -> (usize, usize, usize) {
    if !block_diagonal(h) {
        return signature(h, tol);
    }
    let mut out = (0, 0, 0);
    for o in [0, 2] {
        let mut b = [[0.0; 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                b[i][j] = h[o + i][o + j];
            }
        }
        // the padding zeros are not eigenvalues of the block
        let (p, n, z) = signature(&b, tol);
        out = (out.0 + p, out.1 + n, out.2 + z - 2);
    }
    out
}

pub const SIGNATURE_TOL: f64 = 1e-9;
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Linearisation J·N of the leaf dynamics at the RE.
pub fn linearization(chart: &LeafChart, hessian: &Mat4) -> Mat4 {
    let j = chart.structure_matrix();
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            l[i][k] = (0..4).map(|r| j[i][r] * hessian[r][k]).sum();
        }
    }
    l
}

/// Coefficients (a, b) of the characteristic polynomial λ⁴ + aλ² + b of a
/// Hamiltonian 4×4 linearisation.
pub fn char_coeffs_from_linearization(l: &Mat4) -> (f64, f64) {
    let lm = Matrix4::from_fn(|i, j| l[i][j]);
    let a = -0.5 * (lm * lm).trace();
    (a, lm.determinant())
}

/// (a, b) at the RE, from the linearisation.
pub fn char_coeffs(re: &RelativeEquilibrium, model: &Model) -> Result<(f64, f64)> {
    let chart = LeafChart::for_re(re)?;
    let h = hessian_at_re(re, model)?;
    Ok(char_coeffs_from_linearization(&linearization(&chart, &h)))
}

/// Closed forms on the sphere for the gravitational potential:
/// a = M²(1 + cos 2(q−α))/(sin²q sin²α), b = a² f / 4 (scaled to μ₁, k).
pub fn sphere_char_coeffs_closed_form(re: &RelativeEquilibrium, model: &Model) -> Result<(f64, f64)> {
    let k = model.potential.gravitational_coupling().ok_or_else(|| {
        Error::InvalidParameter("closed-form coefficients require the gravitational potential".into())
    })?;
    if re.geometry != Geometry::Sphere {
        return Err(Error::InvalidParameter("closed-form (a, b) are for the sphere".into()));
    }
    let mu1 = model.masses.mu1;
    let m2 = re.m_squared / (mu1 * k);
    let (q, al) = (re.q, re.alpha);
    let a = (k / mu1) * m2 * (1.0 + (2.0 * (q - al)).cos()) / (q.sin().powi(2) * al.sin().powi(2));
    Ok((a, a * a * f_indicator(re.family, q, al) / 4.0))
}

/// Sign-determining factor of det N along each family.
pub fn f_indicator(family: Family, q: f64, alpha: f64) -> f64 {
    match family {
        Family::Elliptic => 1.0 - 4.0 * alpha.sinh().powi(2) * (q - alpha).sinh().powi(2),
        Family::Hyperbolic => 1.0 - 4.0 * alpha.cosh().powi(2) * (q - alpha).cosh().powi(2),
        _ => 1.0 - 4.0 * alpha.sin().powi(2) * (q - alpha).sin().powi(2),
    }
}

/// (R₁, R₂, R₃) = (a²/4 − b, 4a²/25 − b, 9a²/100 − b).
pub fn resonance_indicators(a: f64, b: f64) -> (f64, f64, f64) {
    let a2 = a * a;
    (a2 / 4.0 - b, 4.0 * a2 / 25.0 - b, 9.0 * a2 / 100.0 - b)
}

/// Squared normal frequencies Ω² = (a ± √(a² − 4b))/2, ascending, when real.
pub fn squared_frequencies(a: f64, b: f64) -> Option<(f64, f64)> {
    let disc = a * a - 4.0 * b;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    // stable evaluation of the smaller root
    let big = 0.5 * (a + r.copysign(a));
    let small = if big != 0.0 { b / big } else { 0.0 };
    Some(if small <= big { (small, big) } else { (big, small) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Hessian definite on the leaf: Lyapunov stable.
    DefiniteStable,
    /// Purely imaginary, simple spectrum with indefinite Hessian.
    Elliptic,
    LinearlyUnstable,
    Degenerate,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::DefiniteStable => "definite_stable",
            Verdict::Elliptic => "elliptic",
            Verdict::LinearlyUnstable => "linearly_unstable",
            Verdict::Degenerate => "degenerate",
        }
    }

    /// Spectrally stable verdicts.
    pub fn is_stable(self) -> bool {
        matches!(self, Verdict::DefiniteStable | Verdict::Elliptic)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub re: RelativeEquilibrium,
    pub hessian: Mat4,
    pub signature: (usize, usize, usize),
    pub char_a: f64,
    pub char_b: f64,
    pub f_indicator: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub eigenvalues: [Complex<f64>; 4],
    pub verdict: Verdict,
}

impl StabilityReport {
    /// Normal frequencies Ω₁ ≤ Ω₂ when the spectrum is purely imaginary.
    pub fn frequencies(&self) -> Option<(f64, f64)> {
        let (s, b) = squared_frequencies(self.char_a, self.char_b)?;
        if s < 0.0 {
            return None;
        }
        Some((s.sqrt(), b.sqrt()))
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.re.abs()))
    }
}

/// Eigenvalues of a 4×4 real matrix, sorted by (re, im).
pub fn eigenvalues4(l: &Mat4) -> [Complex<f64>; 4] {
    let m = balance(Matrix4::from_fn(|i, j| l[i][j]));
    let ev = m.complex_eigenvalues();
    let mut v: Vec<Complex<f64>> = ev.iter().copied().collect();
    v.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    [v[0], v[1], v[2], v[3]]
}

/// Osborne balancing by powers of two: a diagonal similarity that evens out
/// row and column norms so small eigenvalues keep their relative accuracy.
fn balance(mut m: Matrix4<f64>) -> Matrix4<f64> {
    for _ in 0..100 {
        let mut done = true;
        for i in 0..4 {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..4 {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if (c + r) < 0.95 * s {
                done = false;
                for j in 0..4 {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    m
}

/// Roots of λ⁴ + aλ² + b.
pub fn resolvent_eigenvalues(a: f64, b: f64) -> [Complex<f64>; 4] {
    let disc = Complex::new(a * a - 4.0 * b, 0.0).sqrt();
    let x1 = (Complex::new(-a, 0.0) + disc) * 0.5;
    let x2 = (Complex::new(-a, 0.0) - disc) * 0.5;
    let (l1, l2) = (x1.sqrt(), x2.sqrt());
    [l1, -l1, l2, -l2]
}

fn block_diagonal(h: &Mat4) -> bool {
    let scale = h.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..2).all(|i| (2..4).all(|j| h[i][j].abs() <= 1e-12 * scale.max(1.0)))
}

/// Full linear stability analysis of an RE on its leaf.
pub fn classify(re: &RelativeEquilibrium, model: &Model) -> Result<StabilityReport> {
    let chart = LeafChart::for_re(re)?;
    let hessian = hessian_at_re(re, model)?;
    let sig = leaf_signature(&hessian, SIGNATURE_TOL);
    let lin = linearization(&chart, &hessian);
    let (a, b) = char_coeffs_from_linearization(&lin);
    let f = f_indicator(re.family, re.q, re.alpha);
    let (r1, r2, r3) = resonance_indicators(a, b);
    let eigenvalues = if block_diagonal(&hessian) {
        let mut ev = resolvent_eigenvalues(a, b);
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
        ev
    } else {
        eigenvalues4(&lin)
    };
    let lam_max = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.norm()));
    let re_max = eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.re.abs()));
    let verdict = if f.abs() < DEGENERACY_TOL || sig.2 > 0 {
        Verdict::Degenerate
    } else if sig.1 == 0 || sig.0 == 0 {
        Verdict::DefiniteStable
    } else if sig.1 % 2 == 1 {
        Verdict::LinearlyUnstable
    } else if a > 0.0 && b > 0.0 && r1 > 0.0 {
        Verdict::Elliptic
    } else if re_max > 1e-8 * lam_max {
        Verdict::LinearlyUnstable
    } else {
        Verdict::Degenerate
    };
    Ok(StabilityReport {
        re: *re,
        hessian,
        signature: sig,
        char_a: a,
        char_b: b,
        f_indicator: f,
        r1,
        r2,
        r3,
        eigenvalues,
        verdict,
    })
}

/// Critical chart angle α* and separation q* at which the leaf Hessian
/// degenerates along the L² elliptic or S² obtuse branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalAngle {
    pub alpha: f64,
    pub q: f64,
}

fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn newton_polish<F: Fn(f64) -> f64>(g: F, x: f64) -> f64 {
    let h = 1e-7 * x.abs().max(1e-3);
    let d = (g(x + h) - g(x - h)) / (2.0 * h);
    if d == 0.0 || !d.is_finite() {
        return x;
    }
    let step = g(x) / d;
    if step.abs() < 1e-10 {
        x - step
    } else {
        x
    }
}

pub fn critical_angle(mu: f64, geometry: Geometry) -> Result<CriticalAngle> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mass ratio {mu} must be positive")));
    }
    // q* is invariant under exchanging the bodies.
    let mu = if mu > 1.0 { 1.0 / mu } else { mu };
    match geometry {
        Geometry::Lobachevsky => {
            let g = |a: f64| {
                let s2 = a.sinh().powi(2);
                2.0 * s2 + 1.0 - 2.0 * s2 * (1.0 + (mu * (2.0 * a).sinh()).powi(2)).sqrt()
            };
            let mut hi = 1.0;
            while g(hi) > 0.0 {
                hi *= 2.0;
            }
            let alpha = newton_polish(g, bisect(g, 0.0, hi));
            let q = alpha + 0.5 * (mu * (2.0 * alpha).sinh()).asinh();
            Ok(CriticalAngle { alpha, q })
        }
        Geometry::Sphere => {
            let g = |a: f64| {
                (2.0 * a).cos() - 2.0 * a.sin().powi(2) * (1.0 - (mu * (2.0 * a).sin()).powi(2)).max(0.0).sqrt()
            };
            let alpha = newton_polish(g, bisect(g, 0.0, FRAC_PI_2));
            let (_, q) = q_branches(alpha, mu);
            Ok(CriticalAngle { alpha, q })
        }
    }
}

/// (q, C) samples of a family's Casimir value along a grid of separations.
pub fn momentum_along_branch(model: &Model, family: Family, q_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    q_grid
        .iter()
        .map(|&q| {
            let re = match family {
                Family::Elliptic => solve_l2_elliptic(q, model)?,
                Family::Hyperbolic => solve_l2_hyperbolic(q, model)?,
                _ => solve_sphere(q, model)?,
            };
            if re.family != family {
                return Err(Error::NoSolution(format!("q = {q} lies on the {} family", re.family)));
            }
            Ok((q, re.casimir))
        })
        .collect()
}

/// f̃(u) with u = sinh²α: the L² critical-angle condition written as a
/// polynomial-radical equation.
pub fn lobachevsky_critical_poly(u: f64, mu: f64) -> f64 {
    2.0 * u * (1.0 - (1.0 + 4.0 * mu * mu * u * (1.0 + u)).sqrt()) + 1.0
}

/// α on L² branch (re-exported for convenience in sweeps).
pub fn l2_alpha(q: f64, mu: f64) -> f64 {
    lobachevsky_alpha(q, mu)
}

/// det of a 2×2 block of a 4×4 matrix.
pub fn block_det(h: &Mat4, offset: usize) -> f64 {
    Matrix2::new(h[offset][offset], h[offset][offset + 1], h[offset + 1][offset], h[offset + 1][offset + 1])
        .determinant()
}
