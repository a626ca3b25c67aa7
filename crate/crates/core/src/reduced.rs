//! Reduced Hamiltonian system on so(3)* × T*ℝ₊ (sphere) or so(2,1)* × T*ℝ₊
//! (Lobachevsky plane): phase-space coordinates (m, q, p).

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::jet::Jet4;
use crate::potentials::Potential;

/// Point of the reduced phase space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedState {
    pub m: [f64; 3],
    pub q: f64,
    pub p: f64,
}

impl ReducedState {
    pub fn new(m: [f64; 3], q: f64, p: f64) -> Self {
        ReducedState { m, q, p }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.m[0], self.m[1], self.m[2], self.q, self.p]
    }

    pub fn from_array(y: &[f64]) -> Self {
        ReducedState { m: [y[0], y[1], y[2]], q: y[3], p: y[4] }
    }
}

/// Positive masses of the two bodies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Masses {
    pub mu1: f64,
    pub mu2: f64,
}

impl Masses {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 > 0.0 && mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::InvalidMasses { mu1, mu2 });
        }
        Ok(Masses { mu1, mu2 })
    }

    /// Masses with μ₁ = 1 and the given ratio μ = μ₁/μ₂.
    pub fn from_ratio(mu: f64) -> Result<Self> {
        Masses::new(1.0, 1.0 / mu)
    }

    /// μ = μ₁ / μ₂.
    pub fn ratio(&self) -> f64 {
        self.mu1 / self.mu2
    }
}

/// Symmetric matrix of the kinetic quadratic form in m.
pub fn a_matrix(q: f64, mu: f64, geometry: Geometry) -> Result<[[f64; 3]; 3]> {
    check_q(q, geometry)?;
    let (s, c, sigma) = (geometry.sn(q), geometry.cs(q), geometry.sigma());
    let off = sigma * c / s;
    Ok([[1.0, 0.0, 0.0], [0.0, 1.0, off], [0.0, off, (mu + c * c) / (s * s)]])
}

/// Casimir function: |m|² on the sphere, −m_x² − m_y² + m_z² on L².
pub fn casimir(m: [f64; 3], geometry: Geometry) -> f64 {
    match geometry {
        Geometry::Sphere => m[0] * m[0] + m[1] * m[1] + m[2] * m[2],
        Geometry::Lobachevsky => -m[0] * m[0] - m[1] * m[1] + m[2] * m[2],
    }
}

fn check_q(q: f64, geometry: Geometry) -> Result<()> {
    if !q.is_finite() && q != f64::INFINITY {
        return Err(Error::NonFinite);
    }
    if !geometry.contains(q) {
        return Err(Error::Domain { q });
    }
    Ok(())
}

/// Partial derivatives of the reduced Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gradient {
    /// ∂H/∂m, the body angular velocity.
    pub dm: [f64; 3],
    pub dq: f64,
    pub dp: f64,
}

/// Reduced two-body model: geometry, masses and potential.
#[derive(Clone, Debug)]
pub struct Model {
    pub geometry: Geometry,
    pub masses: Masses,
    pub potential: Potential,
}

impl Model {
    pub fn new(geometry: Geometry, masses: Masses, potential: Potential) -> Result<Self> {
        if potential.geometry() != geometry {
            return Err(Error::InvalidParameter(format!(
                "potential defined on {} used with geometry {}",
                potential.geometry(),
                geometry
            )));
        }
        Ok(Model { geometry, masses, potential })
    }

    /// Gravitational model with μ₁ = k = 1 and the given mass ratio.
    pub fn normalized_gravity(geometry: Geometry, mu: f64) -> Result<Self> {
        Model::new(geometry, Masses::from_ratio(mu)?, Potential::gravitational(geometry, 1.0)?)
    }

    pub fn mu(&self) -> f64 {
        self.masses.ratio()
    }

    pub fn check_state(&self, s: &ReducedState) -> Result<()> {
        if s.m.iter().any(|x| !x.is_finite()) || !s.p.is_finite() || !s.q.is_finite() {
            return Err(Error::NonFinite);
        }
        check_q(s.q, self.geometry)
    }

    pub fn hamiltonian(&self, s: &ReducedState) -> Result<f64> {
        self.check_state(s)?;
        let a = a_matrix(s.q, self.mu(), self.geometry)?;
        let m = s.m;
        let mut quad = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                quad += m[i] * a[i][j] * m[j];
            }
        }
        let sigma = self.geometry.sigma();
        let kinetic = quad + 2.0 * sigma * m[0] * s.p + (1.0 + self.mu()) * s.p * s.p;
        Ok(kinetic / (2.0 * self.masses.mu1) + self.potential.u(s.q))
    }

    pub fn gradient(&self, s: &ReducedState) -> Result<Gradient> {
        self.check_state(s)?;
        let (mu, mu1, geometry) = (self.mu(), self.masses.mu1, self.geometry);
        let a = a_matrix(s.q, mu, geometry)?;
        let sigma = geometry.sigma();
        let m = s.m;
        let mut dm = [0.0; 3];
        for i in 0..3 {
            dm[i] = (a[i][0] * m[0] + a[i][1] * m[1] + a[i][2] * m[2]) / mu1;
        }
        dm[0] += sigma * s.p / mu1;
        let dp = (sigma * m[0] + (1.0 + mu) * s.p) / mu1;
        let (sn, cs) = (geometry.sn(s.q), geometry.cs(s.q));
        let da23 = -sigma / (sn * sn);
        let da33 = -2.0 * cs * (1.0 + mu) / (sn * sn * sn);
        let dq = (2.0 * da23 * m[1] * m[2] + da33 * m[2] * m[2]) / (2.0 * mu1) + self.potential.du(s.q);
        Ok(Gradient { dm, dq, dp })
    }

    /// Body angular velocity ∂H/∂m.
    pub fn angular_velocity(&self, s: &ReducedState) -> Result<[f64; 3]> {
        Ok(self.gradient(s)?.dm)
    }

    /// Hamiltonian vector field (ṁ, q̇, ṗ).
    pub fn vector_field(&self, s: &ReducedState) -> Result<[f64; 5]> {
        let g = self.gradient(s)?;
        let k = self.geometry.metric_signs();
        let km = [k[0] * s.m[0], k[1] * s.m[1], k[2] * s.m[2]];
        let w = g.dm;
        Ok([
            km[1] * w[2] - km[2] * w[1],
            km[2] * w[0] - km[0] * w[2],
            km[0] * w[1] - km[1] * w[0],
            g.dp,
            -g.dq,
        ])
    }

    /// Hamiltonian evaluated on Taylor series. `order` bounds the potential
    /// derivatives that are required to be exact.
    pub fn hamiltonian_jet(
        &self,
        m: [&Jet4; 3],
        q: &Jet4,
        p: &Jet4,
        order: usize,
    ) -> Result<Jet4> {
        check_q(q.value(), self.geometry)?;
        let (sn, cs) = match self.geometry {
            Geometry::Sphere => (q.sin(), q.cos()),
            Geometry::Lobachevsky => (q.sinh(), q.cosh()),
        };
        let sigma = self.geometry.sigma();
        let mu = self.mu();
        let inv_s = sn.recip();
        let off = cs.mul_jet(&inv_s).scale(sigma);
        let a33 = cs.square().add_const(mu).mul_jet(&inv_s.square());
        let [mx, my, mz] = m;
        let quad = &(&(&mx.square() + &my.square()) + &off.mul_jet(my).mul_jet(mz).scale(2.0))
            + &a33.mul_jet(&mz.square());
        let kinetic =
            &(&quad + &mx.mul_jet(p).scale(2.0 * sigma)) + &p.square().scale(1.0 + mu);
        let u = self.potential.jet(q, order)?;
        Ok(&kinetic.scale(1.0 / (2.0 * self.masses.mu1)) + &u)
    }
}

/// Poisson tensor P with ẋ = P ∇H in coordinates (m_x, m_y, m_z, q, p).
pub fn poisson_tensor(geometry: Geometry, m: [f64; 3]) -> [[f64; 5]; 5] {
    let c = structure_constants(geometry);
    let mut p = [[0.0; 5]; 5];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = (0..3).map(|l| c[i][j][l] * m[l]).sum();
        }
    }
    p[3][4] = 1.0;
    p[4][3] = -1.0;
    p
}

/// c[i][j][l] with {m_i, m_j} = Σ_l c[i][j][l] m_l.
pub fn structure_constants(geometry: Geometry) -> [[[f64; 3]; 3]; 3] {
    let mut c = [[[0.0; 3]; 3]; 3];
    let mut set = |i: usize, j: usize, l: usize, v: f64| {
        c[i][j][l] = v;
        c[j][i][l] = -v;
    };
    match geometry {
        Geometry::Sphere => {
            set(0, 1, 2, -1.0);
            set(1, 2, 0, -1.0);
            set(2, 0, 1, -1.0);
        }
        Geometry::Lobachevsky => {
            set(0, 1, 2, 1.0);
            set(1, 2, 0, -1.0);
            set(2, 0, 1, -1.0);
        }
    }
    c
}

/// Largest coefficient of the Jacobiator of the linear bracket on m.
pub fn jacobi_residual(geometry: Geometry) -> f64 {
    let c = structure_constants(geometry);
    let mut worst: f64 = 0.0;
    for (i, j, k) in [(0, 1, 2), (0, 0, 1), (1, 1, 2), (0, 2, 2)] {
        for n in 0..3 {
            let mut s = 0.0;
            for l in 0..3 {
                s += c[j][k][l] * c[i][l][n] + c[k][i][l] * c[j][l][n] + c[i][j][l] * c[k][l][n];
            }
            worst = worst.max(s.abs());
        }
    }
    worst
}

/// Compares the vector field against P ∇H with ∇H from fourth-order central
/// differences. Returns the largest componentwise discrepancy scaled by
/// `1 + |field|`.
pub fn bracket_check(model: &Model, s: &ReducedState) -> Result<f64> {
    let field = model.vector_field(s)?;
    let y = s.to_array();
    let mut grad = [0.0; 5];
    for i in 0..5 {
        let h = 1e-3 * y[i].abs().max(1.0).min(if i == 3 { y[3] / 4.0 } else { f64::INFINITY });
        let eval = |d: f64| -> Result<f64> {
            let mut z = y;
            z[i] += d;
            model.hamiltonian(&ReducedState::from_array(&z))
        };
        grad[i] = (-eval(2.0 * h)? + 8.0 * eval(h)? - 8.0 * eval(-h)? + eval(-2.0 * h)?) / (12.0 * h);
    }
    let p = poisson_tensor(model.geometry, s.m);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let v: f64 = (0..5).map(|j| p[i][j] * grad[j]).sum();
        worst = worst.max((v - field[i]).abs() / (1.0 + field[i].abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere(mu1: f64, mu2: f64) -> Model {
        Model::new(
            Geometry::Sphere,
            Masses::new(mu1, mu2).unwrap(),
            Potential::gravitational(Geometry::Sphere, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sphere_energy_example() {
        let model = sphere(1.0, 1.0);
        let s = ReducedState::new([0.0, 0.0, 1.0], PI / 2.0, 0.0);
        assert!((model.hamiltonian(&s).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sphere_energy_explicit_form() {
        let model = sphere(1.3, 0.6);
        let mu = 1.3 / 0.6;
        let (m, q, p) = ([0.3, -0.7, 1.1], 1.2, 0.4);
        let s = ReducedState::new(m, q, p);
        let cot = 1.0 / q.tan();
        let want = (m[0] * m[0]
            + m[1] * m[1]
            + 2.0 * cot * m[1] * m[2]
            + (mu + q.cos().powi(2)) / q.sin().powi(2) * m[2] * m[2]
            + 2.0 * m[0] * p
            + (1.0 + mu) * p * p)
            / (2.0 * 1.3)
            - cot;
        assert!((model.hamiltonian(&s).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn lobachevsky_energy_explicit_form() {
        let model = Model::normalized_gravity(Geometry::Lobachevsky, 0.5).unwrap();
        let mu = 0.5;
        let (m, q, p) = ([0.3, -0.7, 1.1], 0.8, -0.4);
        let s = ReducedState::new(m, q, p);
        let coth = 1.0 / q.tanh();
        let want = (m[0] * m[0] + m[1] * m[1] - 2.0 * coth * m[1] * m[2]
            + (mu + q.cosh().powi(2)) / q.sinh().powi(2) * m[2] * m[2]
            - 2.0 * m[0] * p
            + (1.0 + mu) * p * p)
            / 2.0
            - coth;
        assert!((model.hamiltonian(&s).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let model = sphere(1.0, 1.0);
        for q in [0.0, -0.1, PI, 4.0] {
            let s = ReducedState::new([0.0, 0.0, 1.0], q, 0.0);
            assert!(matches!(model.hamiltonian(&s), Err(Error::Domain { .. })));
        }
        let l = Model::normalized_gravity(Geometry::Lobachevsky, 1.0).unwrap();
        assert!(l.hamiltonian(&ReducedState::new([0.0; 3], 0.0, 0.0)).is_err());
        assert!(l.hamiltonian(&ReducedState::new([0.0; 3], 10.0, 0.0)).is_ok());
        let bad = ReducedState::new([f64::NAN, 0.0, 0.0], 1.0, 0.0);
        assert!(matches!(model.hamiltonian(&bad), Err(Error::NonFinite)));
    }

    #[test]
    fn rejects_invalid_masses() {
        assert!(Masses::new(0.0, 1.0).is_err());
        assert!(Masses::new(1.0, -2.0).is_err());
    }

    #[test]
    fn a_matrix_symmetric() {
        for g in [Geometry::Sphere, Geometry::Lobachevsky] {
            let a = a_matrix(0.9, 0.4, g).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(a[i][j], a[j][i]);
                }
            }
        }
    }

    #[test]
    fn jacobi_identity_exact() {
        assert_eq!(jacobi_residual(Geometry::Sphere), 0.0);
        assert_eq!(jacobi_residual(Geometry::Lobachevsky), 0.0);
    }

    #[test]
    fn lobachevsky_bracket_relations() {
        let c = structure_constants(Geometry::Lobachevsky);
        assert_eq!(c[0][1], [0.0, 0.0, 1.0]);
        assert_eq!(c[1][2], [-1.0, 0.0, 0.0]);
        assert_eq!(c[2][0], [0.0, -1.0, 0.0]);
    }

    #[test]
    fn gradient_matches_jet() {
        for g in [Geometry::Sphere, Geometry::Lobachevsky] {
            let model = Model::new(g, Masses::new(0.8, 1.9).unwrap(), Potential::gravitational(g, 1.4).unwrap())
                .unwrap();
            let s = ReducedState::new([0.2, -0.5, 0.9], 1.05, 0.3);
            let mx = Jet4::variable(0, s.m[0]);
            let my = Jet4::variable(1, s.m[1]);
            let mz = Jet4::variable(2, s.m[2]);
            let q = Jet4::variable(3, s.q);
            let p = Jet4::constant(s.p);
            let h = model.hamiltonian_jet([&mx, &my, &mz], &q, &p, 4).unwrap();
            let grad = model.gradient(&s).unwrap();
            assert!((h.value() - model.hamiltonian(&s).unwrap()).abs() < 1e-14);
            let jg = h.gradient();
            for i in 0..3 {
                assert!((jg[i] - grad.dm[i]).abs() < 1e-13);
            }
            assert!((jg[3] - grad.dq).abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_check_small() {
        for g in [Geometry::Sphere, Geometry::Lobachevsky] {
            let model = Model::normalized_gravity(g, 0.7).unwrap();
            let s = ReducedState::new([0.4, 0.3, 1.2], 1.0, -0.2);
            assert!(bracket_check(&model, &s).unwrap() < 1e-10);
        }
    }

    #[test]
    fn casimir_is_conserved_by_field() {
        for g in [Geometry::Sphere, Geometry::Lobachevsky] {
            let model = Model::normalized_gravity(g, 0.3).unwrap();
            let s = ReducedState::new([0.4, -0.3, 1.2], 1.3, 0.5);
            let f = model.vector_field(&s).unwrap();
            let k = g.metric_signs();
            let dc: f64 = (0..3).map(|i| 2.0 * k[i] * s.m[i] * f[i]).sum();
            let dc = if g == Geometry::Lobachevsky { -dc } else { dc };
            assert!(dc.abs() < 1e-14);
            let dh: f64 = {
                let gr = model.gradient(&s).unwrap();
                (0..3).map(|i| gr.dm[i] * f[i]).sum::<f64>() + gr.dq * f[3] + gr.dp * f[4]
            };
            assert!(dh.abs() < 1e-13);
        }
    }
}
