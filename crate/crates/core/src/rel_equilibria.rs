//! Relative equilibria: closed forms on the Lobachevsky plane, bracketed root
//! finding on the sphere.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::reduced::{casimir, Model, ReducedState};

/// Equal-mass detection threshold on |μ − 1|.
pub const EQUAL_MASS_TOL: f64 = 1e-12;
/// Distance from π/2 below which an unequal-mass sphere separation is
/// treated as right-angled (no relative equilibrium).
pub const RIGHT_ANGLE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// L², positive Casimir: rotation about a point.
    Elliptic,
    /// L², negative Casimir: translation along a geodesic.
    Hyperbolic,
    /// S², q < π/2.
    Acute,
    /// S², q > π/2.
    Obtuse,
    /// S², equal masses, bodies symmetric about the axis.
    Isosceles,
    /// S², equal masses, q = π/2.
    RightAngled,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Elliptic => "elliptic",
            Family::Hyperbolic => "hyperbolic",
            Family::Acute => "acute",
            Family::Obtuse => "obtuse",
            Family::Isosceles => "isosceles",
            Family::RightAngled => "right_angled",
        }
    }

    pub fn geometry(self) -> Geometry {
        match self {
            Family::Elliptic | Family::Hyperbolic => Geometry::Lobachevsky,
            _ => Geometry::Sphere,
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        [
            Family::Elliptic,
            Family::Hyperbolic,
            Family::Acute,
            Family::Obtuse,
            Family::Isosceles,
            Family::RightAngled,
        ]
        .into_iter()
        .find(|f| f.name() == s.to_ascii_lowercase().replace('-', "_"))
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A relative equilibrium, canonicalised with M₀ > 0, ω > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeEquilibrium {
    pub geometry: Geometry,
    pub family: Family,
    pub q: f64,
    /// Angle of body 1 from the symmetry axis (chart angle).
    pub alpha: f64,
    /// M₀² = |C|.
    pub m_squared: f64,
    /// Signed Casimir value.
    pub casimir: f64,
    /// ½ μ₁ sin 2α (sinh on L²).
    pub zeta: f64,
    pub omega: f64,
    pub state: ReducedState,
}

impl RelativeEquilibrium {
    pub fn m0(&self) -> f64 {
        self.m_squared.sqrt()
    }

    /// Angles of the two bodies from the axis (θ₁ = α, θ₂ = q − α).
    pub fn body_angles(&self) -> (f64, f64) {
        (self.alpha, self.q - self.alpha)
    }

    /// Largest component of the reduced vector field at the equilibrium.
    pub fn residual(&self, model: &Model) -> Result<f64> {
        Ok(model.vector_field(&self.state)?.iter().fold(0.0, |m, x| m.max(x.abs())))
    }
}

fn zeta(geometry: Geometry, mu1: f64, alpha: f64) -> f64 {
    0.5 * mu1 * geometry.sn(2.0 * alpha)
}

/// ω = √(U'(q)/ζ).
pub fn angular_speed(re: &RelativeEquilibrium, model: &Model) -> f64 {
    (model.potential.du(re.q) / re.zeta).sqrt()
}

fn finish(
    model: &Model,
    family: Family,
    q: f64,
    alpha: f64,
    m_squared: f64,
    m: [f64; 3],
) -> Result<RelativeEquilibrium> {
    if !(m_squared > 0.0) || !m_squared.is_finite() {
        return Err(Error::NoSolution(format!("non-positive momentum M² = {m_squared} at q = {q}")));
    }
    let state = ReducedState::new(m, q, 0.0);
    let z = zeta(model.geometry, model.masses.mu1, alpha);
    let mut re = RelativeEquilibrium {
        geometry: model.geometry,
        family,
        q,
        alpha,
        m_squared,
        casimir: casimir(m, model.geometry),
        zeta: z,
        omega: 0.0,
        state,
    };
    re.omega = angular_speed(&re, model);
    Ok(re)
}

fn require(model: &Model, geometry: Geometry, q: f64) -> Result<()> {
    if model.geometry != geometry {
        return Err(Error::InvalidParameter(format!(
            "model geometry {} but {} requested",
            model.geometry, geometry
        )));
    }
    if !q.is_finite() || !geometry.contains(q) {
        return Err(Error::Domain { q });
    }
    Ok(())
}

/// Chart angle shared by both L² families.
pub fn lobachevsky_alpha(q: f64, mu: f64) -> f64 {
    let e = (-2.0 * q).exp();
    0.5 * q + 0.25 * ((mu * e).ln_1p() - (mu + e).ln())
}

/// Elliptic (C > 0) relative equilibrium on L² at separation q.
pub fn solve_l2_elliptic(q: f64, model: &Model) -> Result<RelativeEquilibrium> {
    require(model, Geometry::Lobachevsky, q)?;
    let (mu, mu1) = (model.mu(), model.masses.mu1);
    let a = lobachevsky_alpha(q, mu);
    let den = mu * a.cosh().powi(2) * q.cosh() + a.cosh() * (q - a).cosh();
    let m2 = mu1 * q.sinh().powi(3) * model.potential.du(q) / den;
    let m0 = m2.sqrt();
    finish(model, Family::Elliptic, q, a, m2, [0.0, m0 * a.sinh(), m0 * a.cosh()])
}

/// Hyperbolic (C < 0) relative equilibrium on L² at separation q.
pub fn solve_l2_hyperbolic(q: f64, model: &Model) -> Result<RelativeEquilibrium> {
    require(model, Geometry::Lobachevsky, q)?;
    let (mu, mu1) = (model.mu(), model.masses.mu1);
    let a = lobachevsky_alpha(q, mu);
    let den = hyperbolic_denominator(q, mu);
    let m2 = mu1 * q.sinh().powi(3) * model.potential.du(q) / den;
    let m0 = m2.sqrt();
    finish(model, Family::Hyperbolic, q, a, m2, [0.0, m0 * a.cosh(), m0 * a.sinh()])
}

/// μ sinh²α cosh q − sinh α sinh(q−α) along the L² branch.
pub fn hyperbolic_denominator(q: f64, mu: f64) -> f64 {
    let a = lobachevsky_alpha(q, mu);
    mu * a.sinh().powi(2) * q.cosh() - a.sinh() * (q - a).sinh()
}

/// Evidence that no RE with vanishing Casimir exists on L².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicReport {
    /// min over the grid of |cosh 2q ± sinh 2q + μ|.
    pub min_value: f64,
    pub mu: f64,
    pub points: usize,
}

impl ParabolicReport {
    pub fn excludes_solutions(&self) -> bool {
        self.min_value >= self.mu && self.mu > 0.0
    }
}

pub fn parabolic_l2_check(q_grid: &[f64], mu: f64) -> ParabolicReport {
    let mut min_value = f64::INFINITY;
    for &q in q_grid {
        // cosh 2q ± sinh 2q = e^{±2q}, evaluated without cancellation
        let (plus, minus) = ((2.0 * q).exp(), (-2.0 * q).exp());
        min_value = min_value.min((plus + mu).abs()).min((minus + mu).abs());
    }
    ParabolicReport { min_value, mu, points: q_grid.len() }
}

/// Solver entry point for C = 0: always fails.
pub fn solve_l2_parabolic(q: f64, model: &Model) -> Result<RelativeEquilibrium> {
    require(model, Geometry::Lobachevsky, q)?;
    Err(Error::NoSolution("no relative equilibrium with vanishing Casimir".into()))
}

/// (q₋, q₊) for a chart angle α on the sphere.
pub fn q_branches(alpha: f64, mu: f64) -> (f64, f64) {
    let s = 0.5 * (mu * (2.0 * alpha).sin()).asin();
    ((alpha + s).rem_euclid(PI), (alpha + FRAC_PI_2 - s).rem_euclid(PI))
}

/// Momentum of the sphere RE at chart angle α and separation q.
fn sphere_m_squared(model: &Model, q: f64, alpha: f64) -> f64 {
    let mu = model.mu();
    let f = alpha.cos() * (mu * q.cos() * alpha.cos() + (q - alpha).cos());
    model.masses.mu1 * q.sin().powi(3) * model.potential.du(q) / f
}

fn sphere_state(m2: f64, alpha: f64) -> [f64; 3] {
    let m0 = m2.sqrt();
    [0.0, m0 * alpha.sin(), m0 * alpha.cos()]
}

/// Sphere RE at separation q: acute, obtuse or (equal masses) isosceles.
pub fn solve_sphere(q: f64, model: &Model) -> Result<RelativeEquilibrium> {
    require(model, Geometry::Sphere, q)?;
    let mu = model.mu();
    if (mu - 1.0).abs() <= EQUAL_MASS_TOL {
        let alpha = 0.5 * q;
        let m2 = sphere_m_squared(model, q, alpha);
        return finish(model, Family::Isosceles, q, alpha, m2, sphere_state(m2, alpha));
    }
    if (q - FRAC_PI_2).abs() < RIGHT_ANGLE_TOL {
        return Err(Error::NoSolution(format!(
            "no relative equilibrium at right-angled separation q = {q} for mass ratio {mu}"
        )));
    }
    let g = |a: f64| (2.0 * (q - a)).sin() - mu * (2.0 * a).sin();
    let (mut lo, mut hi) = (0.0, q.min(FRAC_PI_2));
    let glo = g(lo);
    if glo == 0.0 || glo.signum() == g(hi).signum() {
        return Err(Error::NoSolution(format!("no sign change bracketing α at q = {q}")));
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
        } else if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    let dg = -2.0 * (2.0 * (q - alpha)).cos() - 2.0 * mu * (2.0 * alpha).cos();
    if dg != 0.0 {
        let step = g(alpha) / dg;
        if step.abs() < 1e-10 {
            alpha -= step;
        }
    }
    let family = if q < FRAC_PI_2 { Family::Acute } else { Family::Obtuse };
    let m2 = sphere_m_squared(model, q, alpha);
    finish(model, family, q, alpha, m2, sphere_state(m2, alpha))
}

/// Sphere RE on the acute (`q = q₋(α)`) or obtuse (`q = q₊(α)`) branch,
/// parametrised by the chart angle instead of the separation.
pub fn sphere_re_from_alpha(alpha: f64, model: &Model, obtuse: bool) -> Result<RelativeEquilibrium> {
    if model.geometry != Geometry::Sphere {
        return Err(Error::InvalidParameter("sphere branch requested on L²".into()));
    }
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("α = {alpha} outside (0, π/2)")));
    }
    let mu = model.mu();
    if mu > 1.0 + EQUAL_MASS_TOL {
        return Err(Error::InvalidParameter("branch parametrisation needs μ ≤ 1".into()));
    }
    let (qm, qp) = q_branches(alpha, mu.min(1.0));
    let q = if obtuse { qp } else { qm };
    let family = if (mu - 1.0).abs() <= EQUAL_MASS_TOL {
        Family::Isosceles
    } else if obtuse {
        Family::Obtuse
    } else {
        Family::Acute
    };
    let m2 = sphere_m_squared(model, q, alpha);
    finish(model, family, q, alpha, m2, sphere_state(m2, alpha))
}

/// Equal-mass right-angled RE with body 1 at angle θ from the axis.
pub fn solve_sphere_right_angled(theta: f64, model: &Model) -> Result<RelativeEquilibrium> {
    if model.geometry != Geometry::Sphere {
        return Err(Error::InvalidParameter("right-angled family lives on the sphere".into()));
    }
    let mu = model.mu();
    if (mu - 1.0).abs() > EQUAL_MASS_TOL {
        return Err(Error::UnequalMasses(mu));
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("θ = {theta} outside (0, π/2)")));
    }
    let q = FRAC_PI_2;
    let m2 = model.masses.mu1 * model.potential.du(q) / (theta.cos() * theta.sin());
    finish(model, Family::RightAngled, q, theta, m2, sphere_state(m2, theta))
}

/// All canonical relative equilibria at separation q (the two L² families,
/// or the single sphere family). An empty list means none exist.
pub fn find_all(q: f64, model: &Model) -> Result<Vec<RelativeEquilibrium>> {
    match model.geometry {
        Geometry::Lobachevsky => Ok(vec![solve_l2_elliptic(q, model)?, solve_l2_hyperbolic(q, model)?]),
        Geometry::Sphere => match solve_sphere(q, model) {
            Ok(re) => Ok(vec![re]),
            Err(Error::NoSolution(_)) => Ok(Vec::new()),
            Err(e) => Err(e),
        },
    }
}

/// F evaluated along the two sphere branches: (F(q₋(α), α), F(q₊(α), α)).
pub fn sphere_branch_factors(alpha: f64, mu: f64) -> (f64, f64) {
    let f = |q: f64| alpha.cos() * (mu * q.cos() * alpha.cos() + (q - alpha).cos());
    let (qm, qp) = q_branches(alpha, mu);
    (f(qm), f(qp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Potential;
    use crate::reduced::Masses;

    fn sphere(mu: f64) -> Model {
        Model::normalized_gravity(Geometry::Sphere, mu).unwrap()
    }

    fn l2(mu: f64) -> Model {
        Model::normalized_gravity(Geometry::Lobachevsky, mu).unwrap()
    }

    #[test]
    fn equal_mass_l2_alpha_is_half_q() {
        for q in [0.1, 1.0, 3.0, 20.0] {
            assert!((lobachevsky_alpha(q, 1.0) - q / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn l2_alpha_solves_condition() {
        let (q, mu) = (1.0, 0.5);
        let a = lobachevsky_alpha(q, mu);
        assert!(((2.0 * (q - a)).sinh() - mu * (2.0 * a).sinh()).abs() < 1e-13);
        let closed = q / 2.0 + 0.25 * ((mu + (2.0 * q).exp()) / (1.0 + mu * (2.0 * q).exp())).ln();
        assert!((a - closed).abs() < 1e-14);
    }

    #[test]
    fn l2_elliptic_residual() {
        let model = l2(1.0);
        let re = solve_l2_elliptic(0.5, &model).unwrap();
        assert!(re.residual(&model).unwrap() < 1e-12);
        assert!(re.casimir > 0.0);
    }

    #[test]
    fn l2_hyperbolic_residual() {
        let model = l2(1.0);
        let re = solve_l2_hyperbolic(1.0, &model).unwrap();
        assert!(re.casimir < 0.0);
        assert!(re.residual(&model).unwrap() < 1e-12);
    }

    #[test]
    fn hyperbolic_momentum_blows_up_near_collision() {
        let model = l2(1.0);
        let mut prev = 0.0;
        for q in [0.1, 0.03, 0.01, 0.003, 0.001] {
            let m2 = solve_l2_hyperbolic(q, &model).unwrap().m_squared;
            assert!(m2 > prev);
            prev = m2;
        }
        assert!(prev > 1e5);
    }

    #[test]
    fn hyperbolic_denominator_positive() {
        for i in 1..10 {
            let mu = i as f64 / 10.0;
            for j in 1..=500 {
                let q = 5.0 * j as f64 / 500.0;
                assert!(hyperbolic_denominator(q, mu) > 0.0, "mu={mu} q={q}");
            }
        }
    }

    #[test]
    fn parabolic_family_empty() {
        let grid: Vec<f64> = (1..=1000).map(|i| i as f64 / 100.0).collect();
        let r = parabolic_l2_check(&grid, 0.5);
        assert!(r.excludes_solutions());
        assert!(r.min_value >= 0.5);
        let model = l2(0.5);
        assert!(matches!(solve_l2_parabolic(1.0, &model), Err(Error::NoSolution(_))));
    }

    #[test]
    fn q_branch_examples() {
        let (qm, qp) = q_branches(PI / 4.0, 0.7);
        assert!((qm - (PI / 4.0 + 0.5 * 0.7f64.asin())).abs() < 1e-15);
        assert!(qm < PI / 2.0 && qp > PI / 2.0);
        let (qm, qp) = q_branches(0.3, 0.0);
        assert!((qm - 0.3).abs() < 1e-15 && (qp - 0.3 - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn sphere_equal_mass_example() {
        let model = sphere(1.0);
        let re = solve_sphere(PI / 3.0, &model).unwrap();
        assert_eq!(re.family, Family::Isosceles);
        assert!((re.alpha - PI / 6.0).abs() < 1e-15);
        assert!((re.m_squared - 4.0 * 3f64.sqrt() / 9.0).abs() < 1e-14);
        assert!((re.omega.powi(2) - 16.0 / (3.0 * 3f64.sqrt())).abs() < 1e-13);
        assert!(re.residual(&model).unwrap() < 1e-12);
    }

    #[test]
    fn sphere_unequal_mass_ordering() {
        let model = sphere(0.7);
        let re = solve_sphere(PI / 3.0, &model).unwrap();
        assert_eq!(re.family, Family::Acute);
        let (t1, t2) = re.body_angles();
        assert!(t2 < t1);
        assert!(re.residual(&model).unwrap() < 1e-12);
        let ob = solve_sphere(2.0, &model).unwrap();
        assert_eq!(ob.family, Family::Obtuse);
        let (t1, t2) = ob.body_angles();
        assert!(t1 < t2);
        assert!(ob.residual(&model).unwrap() < 1e-12);
    }

    #[test]
    fn sphere_right_angle_unequal_has_no_solution() {
        let model = sphere(0.5);
        assert!(matches!(solve_sphere(FRAC_PI_2, &model), Err(Error::NoSolution(_))));
        assert!(find_all(FRAC_PI_2, &model).unwrap().is_empty());
    }

    #[test]
    fn right_angled_family() {
        let model = sphere(1.0);
        let re = solve_sphere_right_angled(PI / 4.0, &model).unwrap();
        assert!((re.m_squared - 2.0).abs() < 1e-14);
        let iso = solve_sphere(FRAC_PI_2, &model).unwrap();
        assert!((iso.m_squared - 2.0).abs() < 1e-14);
        let re = solve_sphere_right_angled(PI / 6.0, &model).unwrap();
        assert!((re.m_squared - 4.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!(re.residual(&model).unwrap() < 1e-12);
        assert!(matches!(
            solve_sphere_right_angled(0.5, &sphere(0.9)),
            Err(Error::UnequalMasses(_))
        ));
    }

    #[test]
    fn l2_angular_speed_equal_masses() {
        let model = l2(1.0);
        let re = solve_l2_elliptic(1.0, &model).unwrap();
        let want = model.potential.du(1.0) / (0.5 * 1f64.sinh());
        assert!((re.omega.powi(2) - want).abs() < 1e-13);
    }

    #[test]
    fn sphere_omega_matches_angular_velocity_norm() {
        let model = sphere(0.4);
        let re = solve_sphere(0.8, &model).unwrap();
        let w = model.angular_velocity(&re.state).unwrap();
        let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        assert!((norm - re.omega).abs() < 1e-12);
    }

    #[test]
    fn zeta_agrees_between_bodies() {
        let model = Model::new(
            Geometry::Sphere,
            Masses::new(0.6, 1.5).unwrap(),
            Potential::gravitational(Geometry::Sphere, 1.0).unwrap(),
        )
        .unwrap();
        for q in [0.3, 1.0, 2.0, 2.8] {
            let re = solve_sphere(q, &model).unwrap();
            let (t1, t2) = re.body_angles();
            let z2 = 0.5 * 1.5 * (2.0 * t2).sin();
            let z1 = 0.5 * 0.6 * (2.0 * t1).sin();
            assert!((z1 - z2).abs() < 1e-13, "q={q}");
        }
    }

    #[test]
    fn branch_factors_positive() {
        for i in 1..1000 {
            let a = FRAC_PI_2 * i as f64 / 1000.0;
            for mu in [0.1, 0.5, 0.9, 0.999] {
                let (gm, gp) = sphere_branch_factors(a, mu);
                assert!(gm > 0.0 && gp > 0.0, "alpha={a} mu={mu}");
                // and negative just past π/2
                let (gm, gp) = sphere_branch_factors(PI - a, mu);
                assert!(gm <= 0.0 || gp <= 0.0);
            }
        }
    }

    #[test]
    fn alpha_parametrisation_agrees_with_q_solver() {
        let model = sphere(0.6);
        for alpha in [0.2, 0.7, 1.2] {
            for obtuse in [false, true] {
                let re = sphere_re_from_alpha(alpha, &model, obtuse).unwrap();
                let back = solve_sphere(re.q, &model).unwrap();
                assert!((back.alpha - alpha).abs() < 1e-12);
                assert!(re.residual(&model).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn custom_potential_re() {
        let model = Model::new(
            Geometry::Sphere,
            Masses::new(1.0, 2.0).unwrap(),
            Potential::custom(Geometry::Sphere, |q| q, |_| 1.0, |_| 0.0).unwrap(),
        )
        .unwrap();
        let re = solve_sphere(1.0, &model).unwrap();
        assert!(re.residual(&model).unwrap() < 1e-12);
    }
}
