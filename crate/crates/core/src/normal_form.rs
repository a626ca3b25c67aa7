//! Fourth-order Birkhoff normal form at elliptic relative equilibria.
//!
//! Polynomials live in canonical coordinates (x₁, y₁, x₂, y₂) with
//! {x_j, y_j} = 1, and actions are I_j = x_j² + y_j².

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix, DVector, Matrix4};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::jet::{degree_range, monomial_exponents, monomial_index, tables, Exponents, Jet4, NTERMS, NVARS};
use crate::reduced::Model;
use crate::rel_equilibria::{sphere_re_from_alpha, RelativeEquilibrium};
use crate::stability::{
    resonance_indicators, squared_frequencies, LeafChart, Mat4, StabilityReport, Verdict,
};

/// Relative band on R/a² inside which a resonance is considered hit.
pub const RESONANCE_BAND: f64 = 1e-6;
/// Relative threshold on |k·α| below which a denominator is rejected.
pub const SMALL_DENOMINATOR_TOL: f64 = 1e-8;
/// Minimum frequency gap for the linear normalisation.
pub const FREQUENCY_GAP_TOL: f64 = 1e-8;
/// |D| must exceed this times (|α₁| + |α₂|)³.
pub const ARNOLD_TOL: f64 = 1e-8;

/// Real polynomial of degree 2..=4 in (x₁, y₁, x₂, y₂).
#[derive(Clone, Debug, PartialEq)]
pub struct Poly4 {
    jet: Jet4,
}

impl Poly4 {
    /// Drops the constant and linear parts of `jet`.
    pub fn from_jet(jet: &Jet4) -> Self {
        let mut j = jet.clone();
        for i in degree_range(0).chain(degree_range(1)) {
            j.c[i] = 0.0;
        }
        Poly4 { jet: j }
    }

    pub fn from_terms(terms: &[(Exponents, f64)]) -> Self {
        let mut j = Jet4::zero();
        for &(e, c) in terms {
            let i = monomial_index(e).expect("monomial degree exceeds four");
            j.c[i] += c;
        }
        Self::from_jet(&j)
    }

    pub fn jet(&self) -> &Jet4 {
        &self.jet
    }

    pub fn coeff(&self, e: Exponents) -> f64 {
        self.jet.coeff(e)
    }

    pub fn homogeneous(&self, d: usize) -> Poly4 {
        Poly4 { jet: self.jet.homogeneous(d) }
    }

    /// Symmetric matrix Q with quadratic part ½ wᵀQw.
    pub fn quadratic_matrix(&self) -> Mat4 {
        self.jet.hessian()
    }

    /// The polynomial w ↦ P(Tw).
    pub fn compose_linear(&self, t: &Mat4) -> Poly4 {
        Poly4 { jet: self.jet.compose_linear(t) }
    }

    pub fn eval(&self, w: [f64; 4]) -> f64 {
        self.jet.eval(w)
    }
}

/// Canonical Poisson bracket of two real jets.
pub fn poisson_bracket(f: &Jet4, g: &Jet4) -> Jet4 {
    let mut r = Jet4::zero();
    for j in 0..2 {
        let (x, y) = (2 * j, 2 * j + 1);
        let t = &f.derivative(x).mul_jet(&g.derivative(y)) - &f.derivative(y).mul_jet(&g.derivative(x));
        r = &r + &t;
    }
    r
}

/// Resonance margins R_i/a² with flags for |R_i/a²| < [`RESONANCE_BAND`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceFlags {
    pub margin_11: f64,
    pub margin_21: f64,
    pub margin_31: f64,
    pub near_11: bool,
    pub near_21: bool,
    pub near_31: bool,
}

impl ResonanceFlags {
    pub fn from_frequencies(omega1: f64, omega2: f64) -> Self {
        let (w1, w2) = (omega1 * omega1, omega2 * omega2);
        Self::from_char_coeffs(w1 + w2, w1 * w2)
    }

    pub fn from_char_coeffs(a: f64, b: f64) -> Self {
        let (r1, r2, r3) = resonance_indicators(a, b);
        let a2 = a * a;
        let (m1, m2, m3) = (r1 / a2, r2 / a2, r3 / a2);
        ResonanceFlags {
            margin_11: m1,
            margin_21: m2,
            margin_31: m3,
            near_11: m1.abs() < RESONANCE_BAND,
            near_21: m2.abs() < RESONANCE_BAND,
            near_31: m3.abs() < RESONANCE_BAND,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalForm4 {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta11: f64,
    pub beta12: f64,
    pub beta22: f64,
    pub arnold_d: f64,
    pub resonance_flags: ResonanceFlags,
}

impl NormalForm4 {
    fn assemble(alpha1: f64, alpha2: f64, beta: [f64; 3]) -> Self {
        let mut nf = NormalForm4 {
            omega1: alpha1.abs(),
            omega2: alpha2.abs(),
            alpha1,
            alpha2,
            beta11: beta[0],
            beta12: beta[1],
            beta22: beta[2],
            arnold_d: 0.0,
            resonance_flags: ResonanceFlags::from_frequencies(alpha1.abs(), alpha2.abs()),
        };
        nf.arnold_d = arnold_determinant(&nf);
        nf
    }
}

/// D = 2β₁₂α₁α₂ − β₁₁α₂² − β₂₂α₁².
pub fn arnold_determinant(nf: &NormalForm4) -> f64 {
    let (a1, a2) = (nf.alpha1, nf.alpha2);
    2.0 * nf.beta12 * a1 * a2 - nf.beta11 * a2 * a2 - nf.beta22 * a1 * a1
}

/// Taylor expansion of the restricted Hamiltonian at an RE, reordered to
/// canonical coordinates.
pub fn taylor4(chart: &LeafChart, re: &RelativeEquilibrium, model: &Model) -> Result<Poly4> {
    let jet = chart.restricted_jet(model, [re.alpha, re.q, 0.0, 0.0], 4)?;
    Ok(Poly4::from_jet(&jet.permute(canonical_order(chart))))
}

/// Chart variables (α, q, z, p) feeding (x₁, y₁, x₂, y₂).
pub fn canonical_order(chart: &LeafChart) -> [usize; 4] {
    if chart.bracket_sign() > 0.0 {
        [0, 2, 1, 3]
    } else {
        [2, 0, 1, 3]
    }
}

const J: Mat4 = [[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -1.0, 0.0]];

fn to_na(m: &Mat4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j])
}

fn from_na(m: &Matrix4<f64>) -> Mat4 {
    let mut r = [[0.0; 4]; 4];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    r
}

/// Residual max|TᵀJT − J|.
pub fn symplectic_defect(t: &Mat4) -> f64 {
    let t = to_na(t);
    let j = to_na(&J);
    (t.transpose() * j * t - j).amax()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearNormalization {
    /// Old coordinates in terms of new ones: x = T w.
    pub transform: Mat4,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Symplectic change of variables bringing the quadratic part to
/// ½α₁I₁ + ½α₂I₂ with |α₁| < |α₂|.
pub fn linear_normalize(quadratic: &Poly4) -> Result<LinearNormalization> {
    let q = to_na(&quadratic.quadratic_matrix());
    let a = to_na(&J) * q;
    let a2 = a * a;
    let ca = -0.5 * a2.trace();
    let cb = a.determinant();
    let scale = ca.abs().max(f64::MIN_POSITIVE);
    let disc = ca * ca - 4.0 * cb;
    if !(ca > 0.0 && cb > 0.0) {
        return Err(Error::NotElliptic);
    }
    // Ω₂ − Ω₁ = √disc / (Ω₁ + Ω₂) and (Ω₁ + Ω₂)² = a + 2√b.
    let gap = disc.abs().sqrt() / (ca + 2.0 * cb.sqrt()).sqrt();
    if gap < FREQUENCY_GAP_TOL * scale.sqrt().max(1.0) {
        return Err(Error::ResonantLinearPart { gap });
    }
    if disc < 0.0 {
        return Err(Error::NotElliptic);
    }
    let (w1, w2) = squared_frequencies(ca, cb).ok_or(Error::NotElliptic)?;
    let omegas = [w1.sqrt(), w2.sqrt()];
    let mut t = Matrix4::zeros();
    let mut alphas = [0.0; 2];
    for plane in 0..2 {
        let om = omegas[plane];
        let other = omegas[1 - plane];
        // The invariant plane for Ω is the range of A² + Ω_other².
        let proj = a2 + Matrix4::identity() * (other * other);
        let mut col = 0;
        for k in 1..4 {
            if proj.column(k).norm() > proj.column(col).norm() {
                col = k;
            }
        }
        let mut u = proj.column(col).into_owned();
        if u[col] < 0.0 {
            u = -u;
        }
        let w = -(a * u) / om;
        let kappa = (u.transpose() * to_na(&J) * w)[(0, 0)];
        let n = kappa.abs().sqrt();
        let (e, f, alpha) = if kappa > 0.0 { (u / n, w / n, om) } else { (u / n, -w / n, -om) };
        t.set_column(2 * plane, &e);
        t.set_column(2 * plane + 1, &f);
        alphas[plane] = alpha;
    }
    Ok(LinearNormalization { transform: from_na(&t), alpha1: alphas[0], alpha2: alphas[1] })
}

/// Coefficients below this fraction of the largest one count as absent when
/// deciding whether a resonant cubic monomial obstructs the normal form.
const NEGLIGIBLE_COEFF: f64 = 1e-12;

/// Rejects the cubic part when a monomial z^a z̄^b with |k·α| small is present.
fn check_denominators(p3: &CPoly, alpha1: f64, alpha2: f64) -> Result<()> {
    let tol = SMALL_DENOMINATOR_TOL * (alpha1.abs() + alpha2.abs());
    let scale = p3.c.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    for i in degree_range(3) {
        if p3.c[i].norm() <= NEGLIGIBLE_COEFF * scale {
            continue;
        }
        let (k1, k2) = harmonic_of(monomial_exponents(i));
        if (k1 as f64 * alpha1 + k2 as f64 * alpha2).abs() < tol {
            let (k1, k2) = if k1 < 0 || (k1 == 0 && k2 < 0) { (-k1, -k2) } else { (k1, k2) };
            return Err(Error::SmallDenominator { k1, k2 });
        }
    }
    Ok(())
}

fn harmonic_of(e: Exponents) -> (i32, i32) {
    (e[0] as i32 - e[1] as i32, e[2] as i32 - e[3] as i32)
}

fn harmonic_quadratic(alpha1: f64, alpha2: f64) -> Jet4 {
    Poly4::from_terms(&[
        ([2, 0, 0, 0], 0.5 * alpha1),
        ([0, 2, 0, 0], 0.5 * alpha1),
        ([0, 0, 2, 0], 0.5 * alpha2),
        ([0, 0, 0, 2], 0.5 * alpha2),
    ])
    .jet
}

/// Average of cos^a φ sin^b φ over a period.
fn angle_average(a: u8, b: u8) -> f64 {
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    let dfact = |n: i32| -> f64 { (1..=n).rev().step_by(2).map(|k| k as f64).product() };
    dfact(a as i32 - 1) * dfact(b as i32 - 1) / dfact((a + b) as i32)
}

/// (β₁₁, β₁₂, β₂₂) from the torus average of a real quartic.
fn average_quartic(k4: &Jet4) -> [f64; 3] {
    let mut s = [0.0; 3];
    for i in degree_range(4) {
        let e = monomial_exponents(i);
        let avg = angle_average(e[0], e[1]) * angle_average(e[2], e[3]);
        let slot = match (e[0] + e[1], e[2] + e[3]) {
            (4, 0) => 0,
            (2, 2) => 1,
            (0, 4) => 2,
            _ => continue,
        };
        s[slot] += k4.c[i] * avg;
    }
    [4.0 * s[0], 2.0 * s[1], 4.0 * s[2]]
}

/// Removes the cubic terms of `p` by one Lie-series step with a cubic
/// generator and averages the quartic over both angles. The quadratic part of
/// `p` is taken to be ½α₁I₁ + ½α₂I₂.
pub fn birkhoff4(p: &Poly4, alpha1: f64, alpha2: f64) -> Result<NormalForm4> {
    check_denominators(&CPoly::from_real(&p.jet.homogeneous(3)), alpha1, alpha2)?;
    let h2 = harmonic_quadratic(alpha1, alpha2);
    let p3 = p.jet.homogeneous(3);
    let p4 = p.jet.homogeneous(4);
    let cubic = degree_range(3);
    let n = cubic.len();
    let mut lmat = DMatrix::<f64>::zeros(n, n);
    for (col, idx) in cubic.clone().enumerate() {
        let mut basis = Jet4::zero();
        basis.c[idx] = 1.0;
        let image = poisson_bracket(&h2, &basis);
        for (row, r) in cubic.clone().enumerate() {
            lmat[(row, col)] = image.c[r];
        }
    }
    let rhs = DVector::from_iterator(n, cubic.clone().map(|i| -p3.c[i]));
    // Least squares: an exactly resonant direction with zero right-hand side
    // is left out of the generator.
    let tol = SMALL_DENOMINATOR_TOL * (alpha1.abs() + alpha2.abs());
    let sol = lmat.svd(true, true).solve(&rhs, tol).map_err(|e| Error::InvalidParameter(e.into()))?;
    let mut w = Jet4::zero();
    for (k, idx) in cubic.enumerate() {
        w.c[idx] = sol[k];
    }
    let k4 = &p4 + &poisson_bracket(&p3, &w).scale(0.5);
    Ok(NormalForm4::assemble(alpha1, alpha2, average_quartic(&k4.homogeneous(4))))
}

/// Truncated polynomial with complex coefficients in (z₁, z̄₁, z₂, z̄₂).
#[derive(Clone, Debug)]
struct CPoly {
    c: Vec<Complex<f64>>,
}

impl CPoly {
    fn zero() -> Self {
        CPoly { c: vec![Complex::new(0.0, 0.0); NTERMS] }
    }

    fn linear(coeffs: [Complex<f64>; NVARS]) -> Self {
        let mut p = Self::zero();
        for (v, &c) in coeffs.iter().enumerate() {
            let mut e = [0u8; NVARS];
            e[v] = 1;
            p.c[monomial_index(e).unwrap()] = c;
        }
        p
    }

    fn constant(v: Complex<f64>) -> Self {
        let mut p = Self::zero();
        p.c[0] = v;
        p
    }

    fn mul(&self, o: &CPoly) -> CPoly {
        let mut r = Self::zero();
        for &(i, j, k) in &tables().products {
            r.c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        r
    }

    fn add(&self, o: &CPoly) -> CPoly {
        CPoly { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    fn scale(&self, s: Complex<f64>) -> CPoly {
        CPoly { c: self.c.iter().map(|a| a * s).collect() }
    }

    fn derivative(&self, v: usize) -> CPoly {
        let mut r = Self::zero();
        for (idx, e) in tables().exps.iter().enumerate() {
            if e[v] == 0 {
                continue;
            }
            let mut f = *e;
            f[v] -= 1;
            r.c[monomial_index(f).unwrap()] += self.c[idx] * e[v] as f64;
        }
        r
    }

    fn homogeneous(&self, d: usize) -> CPoly {
        let mut r = Self::zero();
        for i in degree_range(d) {
            r.c[i] = self.c[i];
        }
        r
    }

    /// {f, g} = −2i Σ_j (f_{z_j} g_{z̄_j} − f_{z̄_j} g_{z_j}).
    fn bracket(&self, g: &CPoly) -> CPoly {
        let mut r = Self::zero();
        for j in 0..2 {
            let (z, zb) = (2 * j, 2 * j + 1);
            let t = self.derivative(z).mul(&g.derivative(zb));
            let u = self.derivative(zb).mul(&g.derivative(z));
            r = r.add(&t).add(&u.scale(Complex::new(-1.0, 0.0)));
        }
        r.scale(Complex::new(0.0, -2.0))
    }

    /// Rewrites a real polynomial in x_j = (z_j + z̄_j)/2, y_j = −i(z_j − z̄_j)/2.
    fn from_real(p: &Jet4) -> CPoly {
        let h = Complex::new(0.5, 0.0);
        let ih = Complex::new(0.0, 0.5);
        let mut vars = Vec::with_capacity(NVARS);
        for j in 0..2 {
            let mut x = [Complex::new(0.0, 0.0); NVARS];
            x[2 * j] = h;
            x[2 * j + 1] = h;
            vars.push(CPoly::linear(x));
            let mut y = [Complex::new(0.0, 0.0); NVARS];
            y[2 * j] = -ih;
            y[2 * j + 1] = ih;
            vars.push(CPoly::linear(y));
        }
        let mut powers: Vec<Vec<CPoly>> = Vec::with_capacity(NVARS);
        for v in &vars {
            let mut pw = vec![CPoly::constant(Complex::new(1.0, 0.0))];
            for k in 1..=4 {
                let next = pw[k - 1].mul(v);
                pw.push(next);
            }
            powers.push(pw);
        }
        let mut r = CPoly::zero();
        for (idx, e) in tables().exps.iter().enumerate() {
            if p.c[idx] == 0.0 {
                continue;
            }
            let mut term = CPoly::constant(Complex::new(p.c[idx], 0.0));
            for v in 0..NVARS {
                if e[v] > 0 {
                    term = term.mul(&powers[v][e[v] as usize]);
                }
            }
            r = r.add(&term);
        }
        r
    }
}

/// Same normal form computed in complex coordinates z_j = x_j + i y_j, where
/// the homological operator is diagonal.
pub fn birkhoff4_complex(p: &Poly4, alpha1: f64, alpha2: f64) -> Result<NormalForm4> {
    let cp = CPoly::from_real(&p.jet);
    let p3 = cp.homogeneous(3);
    let p4 = cp.homogeneous(4);
    check_denominators(&p3, alpha1, alpha2)?;
    let scale = p3.c.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut w = CPoly::zero();
    for i in degree_range(3) {
        if p3.c[i].norm() <= NEGLIGIBLE_COEFF * scale {
            continue;
        }
        let (k1, k2) = harmonic_of(monomial_exponents(i));
        let den = k1 as f64 * alpha1 + k2 as f64 * alpha2;
        // {H₂, m} = i(k·α) m
        w.c[i] = p3.c[i] * Complex::new(0.0, 1.0) / den;
    }
    let k4 = p4.add(&p3.bracket(&w).scale(Complex::new(0.5, 0.0)));
    let at = |e: Exponents| k4.c[monomial_index(e).unwrap()].re;
    let beta = [4.0 * at([2, 2, 0, 0]), 2.0 * at([1, 1, 1, 1]), 4.0 * at([0, 0, 2, 2])];
    Ok(NormalForm4::assemble(alpha1, alpha2, beta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult {
    pub taylor: Poly4,
    pub linear: LinearNormalization,
    pub normal_form: NormalForm4,
}

/// Full pipeline at an RE: Taylor expansion, linear normalisation, Birkhoff.
pub fn normal_form_at_re(re: &RelativeEquilibrium, model: &Model) -> Result<NormalFormResult> {
    let chart = LeafChart::for_re(re)?;
    let taylor = taylor4(&chart, re, model)?;
    let linear = linear_normalize(&taylor.homogeneous(2))?;
    let normal = taylor.compose_linear(&linear.transform);
    let normal_form = birkhoff4(&normal, linear.alpha1, linear.alpha2)?;
    Ok(NormalFormResult { taylor, linear, normal_form })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KamVerdict {
    NonlinearlyStable,
    Inconclusive,
}

impl KamVerdict {
    pub fn name(self) -> &'static str {
        match self {
            KamVerdict::NonlinearlyStable => "nonlinearly_stable",
            KamVerdict::Inconclusive => "inconclusive",
        }
    }
}

pub fn arnold_threshold(nf: &NormalForm4) -> f64 {
    ARNOLD_TOL * (nf.alpha1.abs() + nf.alpha2.abs()).powi(3)
}

pub fn kam_verdict(report: &StabilityReport, nf: &NormalForm4) -> KamVerdict {
    let flags = ResonanceFlags::from_char_coeffs(report.char_a, report.char_b);
    let resonant = flags.near_21 || flags.near_31 || nf.resonance_flags.near_21 || nf.resonance_flags.near_31;
    if report.verdict != Verdict::Elliptic || resonant || nf.arnold_d.abs() <= arnold_threshold(nf) {
        KamVerdict::Inconclusive
    } else {
        KamVerdict::NonlinearlyStable
    }
}

/// Values of R₂/a², R₃/a² and D at an acute sphere RE with q = q₋(α).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcuteSample {
    pub mu: f64,
    pub alpha: f64,
    pub r2: f64,
    pub r3: f64,
    /// NaN where the normal form is undefined.
    pub d: f64,
}

pub fn acute_sample(mu: f64, alpha: f64) -> Result<AcuteSample> {
    let model = Model::normalized_gravity(Geometry::Sphere, mu)?;
    let re = sphere_re_from_alpha(alpha, &model, false)?;
    let report = crate::stability::classify(&re, &model)?;
    let flags = ResonanceFlags::from_char_coeffs(report.char_a, report.char_b);
    let d = normal_form_at_re(&re, &model).map_or(f64::NAN, |r| r.normal_form.arnold_d);
    Ok(AcuteSample { mu, alpha, r2: flags.margin_21, r3: flags.margin_31, d })
}

/// (α, a, b) along the acute branch at fixed μ.
pub fn acute_branch_path(mu: f64, alphas: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let model = Model::normalized_gravity(Geometry::Sphere, mu)?;
    alphas
        .iter()
        .map(|&alpha| {
            let re = sphere_re_from_alpha(alpha, &model, false)?;
            let (a, b) = crate::stability::char_coeffs(&re, &model)?;
            Ok((alpha, a, b))
        })
        .collect()
}

pub type Polyline = Vec<(f64, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Fig10Curves {
    pub r2: Vec<Polyline>,
    pub r3: Vec<Polyline>,
    pub d: Vec<Polyline>,
    pub samples: Vec<AcuteSample>,
}

impl Fig10Curves {
    /// CSV with columns component, point, mu, alpha.
    pub fn write_csv<W: std::io::Write>(curves: &[Polyline], mut out: W) -> std::io::Result<()> {
        writeln!(out, "component,point,mu,alpha")?;
        for (c, line) in curves.iter().enumerate() {
            for (k, (m, a)) in line.iter().enumerate() {
                writeln!(out, "{c},{k},{m:.16e},{a:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Zero loci of R₂, R₃ and D over a (μ, α) grid of acute RE.
///
/// D has poles on R₂ = 0 (the cubic generator blows up there), so cells
/// straddling that curve do not contribute to the D locus.
pub fn fig10_curves(mu_grid: &[f64], alpha_grid: &[f64]) -> Result<Fig10Curves> {
    for &m in mu_grid {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::InvalidParameter(format!("μ = {m} outside (0, 1)")));
        }
    }
    let samples: Vec<AcuteSample> = mu_grid
        .par_iter()
        .flat_map_iter(|&mu| alpha_grid.iter().map(move |&alpha| acute_sample(mu, alpha)))
        .collect::<Result<_>>()?;
    let na = alpha_grid.len();
    let field = |f: &dyn Fn(&AcuteSample) -> f64| -> Vec<Vec<f64>> {
        (0..mu_grid.len()).map(|i| (0..na).map(|j| f(&samples[i * na + j])).collect()).collect()
    };
    let r2 = field(&|s| s.r2);
    let r3 = field(&|s| s.r3);
    let d = field(&|s| s.d);
    let pole = |i: usize, j: usize| {
        let v = [r2[i][j], r2[i + 1][j], r2[i][j + 1], r2[i + 1][j + 1]];
        v.iter().any(|x| *x > 0.0) && v.iter().any(|x| *x <= 0.0)
    };
    Ok(Fig10Curves {
        r2: zero_contours(mu_grid, alpha_grid, &r2, &|_, _| false),
        r3: zero_contours(mu_grid, alpha_grid, &r3, &|_, _| false),
        d: zero_contours(mu_grid, alpha_grid, &d, &pole),
        samples,
    })
}

/// Grid edge identified by its lower-left node and direction (0: along x, 1: along y).
type EdgeId = (usize, usize, u8);

/// Marching-squares extraction of the zero set of `v[i][j]` sampled at
/// (xs[i], ys[j]), chained into polylines. Cells with a non-finite corner or
/// with `skip(i, j)` are ignored.
pub fn zero_contours(xs: &[f64], ys: &[f64], v: &[Vec<f64>], skip: &dyn Fn(usize, usize) -> bool) -> Vec<Polyline> {
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    let mut points: HashMap<EdgeId, (f64, f64)> = HashMap::new();
    let crossing = |a: f64, b: f64| (a > 0.0) != (b > 0.0);
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let c = [v[i][j], v[i + 1][j], v[i + 1][j + 1], v[i][j + 1]];
            if c.iter().any(|x| !x.is_finite()) || skip(i, j) {
                continue;
            }
            // edges in cyclic order: bottom, right, top, left
            let edges: [(EdgeId, usize, usize); 4] = [
                ((i, j, 0), 0, 1),
                ((i + 1, j, 1), 1, 2),
                ((i, j + 1, 0), 3, 2),
                ((i, j, 1), 0, 3),
            ];
            let mut hits = Vec::with_capacity(4);
            for &(id, a, b) in &edges {
                if crossing(c[a], c[b]) {
                    let t = c[a] / (c[a] - c[b]);
                    let (x0, y0) = node(xs, ys, i, j, a);
                    let (x1, y1) = node(xs, ys, i, j, b);
                    points.insert(id, (x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
                    hits.push(id);
                }
            }
            match hits.len() {
                2 => segments.push((hits[0], hits[1])),
                4 => {
                    let center = c.iter().sum::<f64>() / 4.0;
                    // corner 0 sign decides which corners connect through the middle
                    if (center > 0.0) == (c[0] > 0.0) {
                        segments.push((hits[0], hits[1]));
                        segments.push((hits[2], hits[3]));
                    } else {
                        segments.push((hits[0], hits[3]));
                        segments.push((hits[1], hits[2]));
                    }
                }
                _ => {}
            }
        }
    }
    chain(&segments, &points)
}

fn node(xs: &[f64], ys: &[f64], i: usize, j: usize, corner: usize) -> (f64, f64) {
    let (di, dj) = [(0, 0), (1, 0), (1, 1), (0, 1)][corner];
    (xs[i + di], ys[j + dj])
}

fn chain(segments: &[(EdgeId, EdgeId)], points: &HashMap<EdgeId, (f64, f64)>) -> Vec<Polyline> {
    let mut adj: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adj.entry(*a).or_default().push(k);
        adj.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start: EdgeId, first: usize, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut path = vec![start];
        let mut cur = start;
        let mut seg = Some(first);
        while let Some(s) = seg {
            used[s] = true;
            let (a, b) = segments[s];
            cur = if a == cur { b } else { a };
            path.push(cur);
            seg = adj[&cur].iter().copied().find(|&t| !used[t]);
        }
        path
    };
    // open curves first, starting from edges with a single segment
    let mut starts: Vec<EdgeId> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    starts.sort();
    for s in starts {
        if let Some(&first) = adj[&s].iter().find(|&&t| !used[t]) {
            let path = walk(s, first, &mut used);
            lines.push(path.iter().map(|e| points[e]).collect());
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            let path = walk(segments[k].0, k, &mut used);
            lines.push(path.iter().map(|e| points[e]).collect());
        }
    }
    lines
}
