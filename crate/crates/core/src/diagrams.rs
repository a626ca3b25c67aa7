//! Energy–momentum diagrams of the RE families, the stability region q*(μ)
//! and plain SVG/CSV emitters for them.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::normal_form::{Fig10Curves, Polyline};
use crate::reduced::{casimir, Model, ReducedState};
use crate::rel_equilibria::{
    solve_l2_elliptic, solve_l2_hyperbolic, solve_sphere, solve_sphere_right_angled, Family, RelativeEquilibrium,
    EQUAL_MASS_TOL,
};
use crate::stability::{classify, critical_angle, f_indicator, Verdict};

/// Minimum number of samples per branch.
pub const MIN_BRANCH_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    /// Separation q, or the body angle θ on the right-angled family.
    pub param: f64,
    pub q: f64,
    pub alpha: f64,
    pub casimir: f64,
    pub energy: f64,
    pub signature: (usize, usize, usize),
    pub verdict: Verdict,
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SingularKind {
    Cusp,
    Pitchfork,
}

impl SingularKind {
    pub fn name(self) -> &'static str {
        match self {
            SingularKind::Cusp => "cusp",
            SingularKind::Pitchfork => "pitchfork",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPoint {
    pub kind: SingularKind,
    pub param: f64,
    pub re: RelativeEquilibrium,
    pub energy: f64,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchCurve {
    pub family: Family,
    pub points: Vec<BranchPoint>,
    pub singular: Vec<SingularPoint>,
}

fn solve_on_branch(model: &Model, family: Family, param: f64) -> Result<RelativeEquilibrium> {
    let re = match family {
        Family::Elliptic => solve_l2_elliptic(param, model)?,
        Family::Hyperbolic => solve_l2_hyperbolic(param, model)?,
        Family::RightAngled => solve_sphere_right_angled(param, model)?,
        _ => solve_sphere(param, model)?,
    };
    if re.family != family {
        return Err(Error::NoSolution(format!("parameter {param} lies on the {} family", re.family)));
    }
    Ok(re)
}

fn branch_point(model: &Model, family: Family, param: f64) -> Result<BranchPoint> {
    let re = solve_on_branch(model, family, param)?;
    let report = classify(&re, model)?;
    Ok(BranchPoint {
        param,
        q: re.q,
        alpha: re.alpha,
        casimir: casimir(re.state.m, model.geometry),
        energy: model.hamiltonian(&re.state)?,
        signature: report.signature,
        verdict: report.verdict,
        f: report.f_indicator,
    })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Parameter interval sampled for each family.
pub fn branch_range(family: Family) -> (f64, f64) {
    match family {
        Family::Elliptic | Family::Hyperbolic => (0.05, 3.0),
        Family::Acute => (0.05, FRAC_PI_2 - 1e-3),
        Family::Isosceles => (0.05, PI - 0.05),
        Family::Obtuse => (FRAC_PI_2 + 1e-3, PI - 0.05),
        Family::RightAngled => (0.05, FRAC_PI_2 - 0.05),
    }
}

/// The RE families present for this geometry and mass ratio.
pub fn families(model: &Model) -> Vec<Family> {
    match model.geometry {
        Geometry::Lobachevsky => vec![Family::Elliptic, Family::Hyperbolic],
        Geometry::Sphere if (model.mu() - 1.0).abs() <= EQUAL_MASS_TOL => vec![Family::Isosceles, Family::RightAngled],
        Geometry::Sphere => vec![Family::Acute, Family::Obtuse],
    }
}

/// Samples every RE family of `model` on `samples` parameter values and
/// locates the points where the leaf Hessian degenerates (f = 0).
pub fn em_diagram(model: &Model, samples: usize) -> Result<Vec<BranchCurve>> {
    if samples < MIN_BRANCH_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_BRANCH_SAMPLES} samples per branch, got {samples}"
        )));
    }
    let mut curves = Vec::new();
    for family in families(model) {
        let (a, b) = branch_range(family);
        let grid = linspace(a, b, samples);
        let points: Vec<BranchPoint> = grid
            .par_iter()
            .map(|&p| branch_point(model, family, p))
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|r| match r {
                Ok(pt) => Some(Ok(pt)),
                Err(Error::NoSolution(_)) => None,
                Err(e) => Some(Err(e)),
            })
            .collect::<Result<_>>()?;
        let singular = find_singular(model, family, &points)?;
        curves.push(BranchCurve { family, points, singular });
    }
    Ok(curves)
}

fn f_along(model: &Model, family: Family, param: f64) -> Result<(f64, RelativeEquilibrium)> {
    let re = solve_on_branch(model, family, param)?;
    Ok((f_indicator(family, re.q, re.alpha), re))
}

/// Sign changes of f are bracketed and bisected; local minima of |f| that
/// refine to zero catch the tangential ones.
fn find_singular(model: &Model, family: Family, points: &[BranchPoint]) -> Result<Vec<SingularPoint>> {
    let mut found: Vec<SingularPoint> = Vec::new();
    let step = points.windows(2).map(|w| w[1].param - w[0].param).fold(0.0, f64::max);
    let push = |s: SingularPoint, found: &mut Vec<SingularPoint>| {
        if found.iter().all(|o| (o.param - s.param).abs() > step) {
            found.push(s);
        }
    };
    let sign = |f: f64| if f > 0.0 { 1 } else if f < 0.0 { -1 } else { 0 };
    for i in 0..points.len() {
        if i + 1 < points.len() && sign(points[i].f) * sign(points[i + 1].f) < 0 {
            push(locate_singular(model, family, points[i].param, points[i + 1].param)?, &mut found);
        }
        if i > 0 && i + 1 < points.len() {
            let (l, c, r) = (points[i - 1].f.abs(), points[i].f.abs(), points[i + 1].f.abs());
            if c <= l && c < r {
                if let Some(s) = touch_zero(model, family, points[i - 1].param, points[i + 1].param)? {
                    push(s, &mut found);
                }
            }
        }
    }
    found.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(found)
}

const TOUCH_TOL: f64 = 1e-9;

fn touch_zero(model: &Model, family: Family, mut a: f64, mut b: f64) -> Result<Option<SingularPoint>> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let abs_f = |x: f64| f_along(model, family, x).map(|(f, _)| f.abs());
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (abs_f(c)?, abs_f(d)?);
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = abs_f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = abs_f(d)?;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    let param = 0.5 * (a + b);
    let (f, re) = f_along(model, family, param)?;
    if f.abs() > TOUCH_TOL {
        return Ok(None);
    }
    Ok(Some(SingularPoint { kind: singular_kind(family), param, re, energy: model.hamiltonian(&re.state)?, f }))
}

fn singular_kind(family: Family) -> SingularKind {
    match family {
        Family::Isosceles | Family::RightAngled => SingularKind::Pitchfork,
        _ => SingularKind::Cusp,
    }
}

fn locate_singular(model: &Model, family: Family, mut lo: f64, mut hi: f64) -> Result<SingularPoint> {
    let (mut f_lo, _) = f_along(model, family, lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (fm, _) = f_along(model, family, mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    let param = 0.5 * (lo + hi);
    let (f, re) = f_along(model, family, param)?;
    Ok(SingularPoint { kind: singular_kind(family), param, re, energy: model.hamiltonian(&re.state)?, f })
}

/// CSV with columns family, param, q, alpha, C, H, n_plus, n_minus, n_zero, verdict.
pub fn write_branch_csv<W: Write>(curves: &[BranchCurve], mut w: W) -> std::io::Result<()> {
    writeln!(w, "family,param,q,alpha,C,H,n_plus,n_minus,n_zero,verdict")?;
    for c in curves {
        for p in &c.points {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}",
                c.family, p.param, p.q, p.alpha, p.casimir, p.energy, p.signature.0, p.signature.1, p.signature.2,
                p.verdict
            )?;
        }
    }
    Ok(())
}

/// CSV of the located singular points.
pub fn write_singular_csv<W: Write>(curves: &[BranchCurve], mut w: W) -> std::io::Result<()> {
    writeln!(w, "family,kind,param,q,alpha,C,H,f")?;
    for c in curves {
        for s in &c.singular {
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                c.family,
                s.kind.name(),
                s.param,
                s.re.q,
                s.re.alpha,
                s.re.casimir,
                s.energy,
                s.f
            )?;
        }
    }
    Ok(())
}

/// Admissible (C, H) values at random reduced states.
pub fn em_scatter(model: &Model, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_max = model.geometry.q_max().min(4.0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let m = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let q = rng.random_range(0.05..q_max - 0.05);
        let p = rng.random_range(-2.0..2.0);
        let s = ReducedState::new(m, q, p);
        out.push((casimir(m, model.geometry), model.hamiltonian(&s)?));
    }
    Ok(out)
}

/// q*(μ) for each μ of the grid.
pub fn stability_region(mu_grid: &[f64], geometry: Geometry) -> Result<Vec<(f64, f64)>> {
    mu_grid
        .par_iter()
        .map(|&mu| {
            if geometry == Geometry::Sphere && !(mu > 0.0 && mu < 1.0) {
                return Err(Error::InvalidParameter(format!("μ = {mu} outside (0, 1)")));
            }
            Ok((mu, critical_angle(mu, geometry)?.q))
        })
        .collect()
}

/// Whether the elliptic (L²) or obtuse (S²) RE at separation q is on the
/// stable side of q*(μ).
pub fn in_stable_region(q: f64, mu: f64, geometry: Geometry) -> Result<bool> {
    let qs = critical_angle(mu, geometry)?.q;
    Ok(match geometry {
        Geometry::Lobachevsky => q < qs,
        Geometry::Sphere => q > FRAC_PI_2 && q < qs,
    })
}

pub fn write_region_csv<W: Write>(region: &[(f64, f64)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "mu,q_star")?;
    for (mu, q) in region {
        writeln!(w, "{mu:.16e},{q:.16e}")?;
    }
    Ok(())
}

/// A named polyline for [`svg_plot`].
pub struct Series<'a> {
    pub label: &'a str,
    pub colour: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Draw as dots instead of a line.
    pub scatter: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal deterministic SVG line plot.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], markers: &[(f64, f64)], log_x: bool) -> String {
    let (w, h, pad) = (640.0, 480.0, 60.0);
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let all = series.iter().flat_map(|s| s.points.iter()).chain(markers.iter()).filter(|(x, y)| {
        x.is_finite() && y.is_finite() && (!log_x || *x > 0.0)
    });
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (tx(x) - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{x_label}</text>"#, w / 2.0, h - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 15 {})">{y_label}</text>"#,
        h / 2.0,
        h / 2.0
    );
    let fmt_tick = |v: f64| if log_x { format!("{:.3}", 10f64.powf(v)) } else { format!("{v:.3}") };
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}" font-size="11">{}</text>"#,
            pad + (v - x0) / (x1 - x0) * (w - 2.0 * pad),
            h - pad + 15.0,
            fmt_tick(v)
        );
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{v:.3}</text>"#, pad - 4.0, sy(v));
    }
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = ser
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_x || *x > 0.0))
            .collect();
        if ser.scatter {
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1" fill="{}" opacity="0.4"/>"#, sx(*x), sy(*y), ser.colour);
            }
        } else {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                ser.colour,
                path.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{}">{}</text>"#,
            w - pad - 110.0,
            pad + 18.0 * (k as f64 + 1.0),
            ser.colour,
            ser.label
        );
    }
    for (x, y) in markers {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black"/>"#, sx(*x), sy(*y));
    }
    s.push_str("</svg>\n");
    s
}

/// (C, H) plot of all branches with singular points circled.
pub fn em_svg(curves: &[BranchCurve], scatter: &[(f64, f64)], title: &str) -> String {
    let mut series: Vec<Series> = Vec::new();
    if !scatter.is_empty() {
        series.push(Series { label: "admissible", colour: "#bbbbbb", points: scatter.to_vec(), scatter: true });
    }
    for (k, c) in curves.iter().enumerate() {
        series.push(Series {
            label: c.family.name(),
            colour: PALETTE[k % PALETTE.len()],
            points: c.points.iter().map(|p| (p.casimir, p.energy)).collect(),
            scatter: false,
        });
    }
    let markers: Vec<(f64, f64)> =
        curves.iter().flat_map(|c| c.singular.iter().map(|s| (s.re.casimir, s.energy))).collect();
    svg_plot(title, "C", "H", &series, &markers, false)
}

pub fn region_svg(region: &[(f64, f64)], geometry: Geometry, log_x: bool) -> String {
    let series = [Series { label: "q*", colour: PALETTE[0], points: region.to_vec(), scatter: false }];
    svg_plot(&format!("critical separation on {}", geometry.short_name()), "mu", "q*", &series, &[], log_x)
}

pub fn fig10_svg(curves: &Fig10Curves) -> String {
    let mut series = Vec::new();
    for (name, lines, colour) in [("R2 = 0", &curves.r2, PALETTE[0]), ("R3 = 0", &curves.r3, PALETTE[1]), ("D = 0", &curves.d, PALETTE[2])] {
        for (k, l) in lines.iter().enumerate() {
            series.push(Series { label: if k == 0 { name } else { "" }, colour, points: l.clone(), scatter: false });
        }
    }
    svg_plot("resonance and twist loci, acute RE", "mu", "alpha", &series, &[], false)
}

/// Total number of vertices over a set of polylines.
pub fn vertex_count(lines: &[Polyline]) -> usize {
    lines.iter().map(|l| l.len()).sum()
}
