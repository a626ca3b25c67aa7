//! `twobody`: command-line access to the reduced two-body toolkit.

mod config;
mod model;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use twobody::diagrams::{
    em_diagram, em_scatter, em_svg, fig10_svg, region_svg, stability_region, write_branch_csv, write_region_csv,
    write_singular_csv, MIN_BRANCH_SAMPLES,
};
use twobody::integrator::{integrate, IntegrationOptions, Sampling};
use twobody::normal_form::{fig10_curves, kam_verdict, normal_form_at_re, Fig10Curves};
use twobody::reconstruction::reconstruct;
use twobody::reduced::casimir;
use twobody::rel_equilibria::{
    find_all, solve_l2_elliptic, solve_l2_hyperbolic, solve_sphere, solve_sphere_right_angled, sphere_re_from_alpha,
    Family, RelativeEquilibrium,
};
use twobody::stability::classify;
use twobody::{Error, Geometry, Model, ReducedState};

use config::{usage, Usage};
use model::{Common, Setup};
use output::{create, float, num, nums, sink, Record};

#[derive(Parser)]
#[command(name = "twobody", version, about = "Two bodies on the sphere or the Lobachevsky plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the reduced equations and write a CSV trajectory.
    Simulate(SimulateArgs),
    /// Relative equilibria at a separation (JSON, one record per RE).
    FindRe(ReArgs),
    /// Leaf Hessian signature, spectrum and verdict at each RE.
    Stability(ReArgs),
    /// Fourth-order normal form and the KAM verdict at each RE.
    Kam(ReArgs),
    /// Stability classification over a (μ, q) grid (CSV).
    Sweep(SweepArgs),
    /// Energy-momentum diagram and the stability region q*(μ).
    Diagram(DiagramArgs),
    /// Zero loci of the resonance indicators and the twist determinant on the acute branch.
    Fig10(Fig10Args),
    /// Lift a reduced trajectory to the motion of both bodies.
    Reconstruct(ReconstructArgs),
}

#[derive(Args)]
struct StateArgs {
    /// Initial body-frame momentum "m_x,m_y,m_z".
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Start at the RE of this family at separation q instead of (m, q, p).
    #[arg(long)]
    from_re: Option<String>,
    /// Added to p of the starting state.
    #[arg(long, allow_hyphen_values = true)]
    kick: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Uniform output samples; default is every accepted step.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    state: StateArgs,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReArgs {
    #[command(flatten)]
    common: Common,
    /// Separation of the bodies.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Body angle of the equal-mass right-angled family.
    #[arg(long)]
    theta: Option<f64>,
    /// Chart angle on the sphere; selects the acute RE unless --obtuse.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    obtuse: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    mu_min: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long)]
    mu_steps: Option<usize>,
    #[arg(long)]
    q_min: Option<f64>,
    #[arg(long)]
    q_max: Option<f64>,
    #[arg(long)]
    q_steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    common: Common,
    /// Samples per branch.
    #[arg(long)]
    samples: Option<usize>,
    /// Number of random admissible (C, H) points drawn behind the branches.
    #[arg(long)]
    scatter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also compute q*(μ) on this many μ values.
    #[arg(long)]
    region_steps: Option<usize>,
    /// Logarithmic μ axis for the region plot.
    #[arg(long)]
    log_mu: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct Fig10Args {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    mu_steps: Option<usize>,
    #[arg(long)]
    alpha_steps: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::FindRe(a) => find_re(a),
        Command::Stability(a) => stability(a),
        Command::Kam(a) => kam(a),
        Command::Sweep(a) => sweep(a),
        Command::Diagram(a) => diagram(a),
        Command::Fig10(a) => fig10(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::Domain { .. }
            | Error::NonPositiveCoupling(_)
            | Error::AttractivityViolation { .. }
            | Error::InvalidMasses { .. }
            | Error::InvalidParameter(_)
            | Error::UnequalMasses(_)
            | Error::ChartDomain(_)
            | Error::InsufficientDerivatives { .. },
        ) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn parse_vec3(s: &str) -> anyhow::Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(usage(format!("--m expects three comma-separated numbers, got {s:?}")));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| usage(format!("--m component {p:?}: {e}")))?;
    }
    Ok(out)
}

fn solve_family(family: Family, param: f64, model: &Model) -> twobody::Result<RelativeEquilibrium> {
    match family {
        Family::Elliptic => solve_l2_elliptic(param, model),
        Family::Hyperbolic => solve_l2_hyperbolic(param, model),
        Family::RightAngled => solve_sphere_right_angled(param, model),
        _ => {
            let re = solve_sphere(param, model)?;
            if re.family != family {
                return Err(Error::NoSolution(format!("separation {param} carries the {} family", re.family)));
            }
            Ok(re)
        }
    }
}

struct Start {
    state: ReducedState,
    re: Option<RelativeEquilibrium>,
    t_end: f64,
    opts: IntegrationOptions,
}

fn start_state(setup: &Setup, a: &StateArgs, model: &Model) -> anyhow::Result<Start> {
    let cfg = &setup.cfg;
    let q: f64 = cfg.require(a.q, "q")?;
    let from_re: Option<String> = cfg.pick(a.from_re.clone(), "from_re")?;
    let (mut state, re) = match from_re {
        Some(name) => {
            let family = Family::parse(&name).ok_or_else(|| usage(format!("unknown family {name:?}")))?;
            if family.geometry() != model.geometry {
                return Err(usage(format!("family {family} does not live on {}", model.geometry)));
            }
            let re = solve_family(family, q, model)?;
            (re.state, Some(re))
        }
        None => {
            let m = parse_vec3(&cfg.require(a.m.clone(), "m")?)?;
            (ReducedState::new(m, q, cfg.or(a.p, "p", 0.0)?), None)
        }
    };
    state.p += cfg.or(a.kick, "kick", 0.0)?;
    let t_end: f64 = cfg.require(a.t_end, "t_end")?;
    if !t_end.is_finite() {
        return Err(usage("--t-end must be finite"));
    }
    let tol = cfg.or(a.tol, "tol", 1e-10)?;
    let sampling = match cfg.pick(a.samples, "samples")? {
        Some(0) => return Err(usage("--samples must be positive")),
        Some(n) if t_end != 0.0 => Sampling::Uniform(n),
        _ => Sampling::Steps,
    };
    Ok(Start { state, re, t_end, opts: IntegrationOptions { tol, sampling, q_bounds: None } })
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let setup = Setup::new(&a.common)?;
    let model = setup.model()?;
    let start = start_state(&setup, &a.state, &model)?;
    let tr = integrate(&model, &start.state, start.t_end, &start.opts)?;
    let out: Option<PathBuf> = setup.cfg.pick(a.out, "out")?;
    let mut w = sink(out.as_deref())?;
    tr.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn re_record(re: &RelativeEquilibrium, model: &Model) -> anyhow::Result<Record> {
    let (t1, t2) = re.body_angles();
    Ok(Record::new()
        .s("status", "ok")
        .s("geometry", re.geometry.short_name())
        .f("mu", model.mu())
        .s("family", re.family.name())
        .f("q", re.q)
        .f("alpha", re.alpha)
        .v("body_angles", nums(&[t1, t2]))
        .f("m_squared", re.m_squared)
        .f("casimir", re.casimir)
        .f("zeta", re.zeta)
        .f("omega", re.omega)
        .v("m", nums(&re.state.m))
        .f("p", re.state.p)
        .f("energy", model.hamiltonian(&re.state)?)
        .f("residual", re.residual(model)?))
}

/// RE selected by the flags, or the reason none exists.
fn select(setup: &Setup, a: &ReArgs, model: &Model) -> anyhow::Result<Result<Vec<RelativeEquilibrium>, String>> {
    let cfg = &setup.cfg;
    let q: Option<f64> = cfg.pick(a.q, "q")?;
    let theta: Option<f64> = cfg.pick(a.theta, "theta")?;
    let alpha: Option<f64> = cfg.pick(a.alpha, "alpha")?;
    let found = match (q, theta, alpha) {
        (Some(q), None, None) => find_all(q, model),
        (None, Some(t), None) => solve_sphere_right_angled(t, model).map(|r| vec![r]),
        (None, None, Some(al)) => {
            let obtuse = a.obtuse || cfg.or::<bool>(None, "obtuse", false)?;
            sphere_re_from_alpha(al, model, obtuse).map(|r| vec![r])
        }
        _ => return Err(usage("give exactly one of --q, --theta, --alpha")),
    };
    match found {
        Ok(v) if v.is_empty() => Ok(Err("no relative equilibrium at these parameters".into())),
        Ok(v) => Ok(Ok(v)),
        Err(Error::NoSolution(why)) => Ok(Err(why)),
        Err(e) => Err(e.into()),
    }
}

fn no_solution(model: &Model, a: &ReArgs, why: String) -> Record {
    let mut r = Record::new().s("status", "no_solution").s("geometry", model.geometry.short_name()).f("mu", model.mu());
    for (k, v) in [("q", a.q), ("theta", a.theta), ("alpha", a.alpha)] {
        if let Some(x) = v {
            r = r.f(k, x);
        }
    }
    r.s("reason", why)
}

fn for_each_re(a: ReArgs, mut f: impl FnMut(&RelativeEquilibrium, &Model) -> anyhow::Result<Record>) -> anyhow::Result<()> {
    let setup = Setup::new(&a.common)?;
    let model = setup.model()?;
    let mut out = std::io::stdout().lock();
    match select(&setup, &a, &model)? {
        Err(why) => no_solution(&model, &a, why).print(&mut out)?,
        Ok(list) => {
            for re in &list {
                f(re, &model)?.print(&mut out)?;
            }
        }
    }
    Ok(())
}

fn find_re(a: ReArgs) -> anyhow::Result<()> {
    for_each_re(a, re_record)
}

fn stability(a: ReArgs) -> anyhow::Result<()> {
    for_each_re(a, |re, model| {
        let r = classify(re, model)?;
        let ev = serde_json::Value::Array(r.eigenvalues.iter().map(|l| nums(&[l.re, l.im])).collect());
        let freq = r.frequencies().map_or(serde_json::Value::Null, |(a, b)| nums(&[a, b]));
        Ok(re_record(re, model)?
            .v("signature", serde_json::json!([r.signature.0, r.signature.1, r.signature.2]))
            .s("verdict", r.verdict.name())
            .f("char_a", r.char_a)
            .f("char_b", r.char_b)
            .f("f_indicator", r.f_indicator)
            .v("resonance", nums(&[r.r1, r.r2, r.r3]))
            .v("eigenvalues", ev)
            .v("frequencies", freq))
    })
}

fn kam(a: ReArgs) -> anyhow::Result<()> {
    for_each_re(a, |re, model| {
        let report = classify(re, model)?;
        let rec = re_record(re, model)?.s("stability_verdict", report.verdict.name());
        match normal_form_at_re(re, model) {
            Ok(res) => {
                let nf = res.normal_form;
                let fl = nf.resonance_flags;
                Ok(rec
                    .v("frequencies", nums(&[nf.omega1, nf.omega2]))
                    .v("alpha", nums(&[nf.alpha1, nf.alpha2]))
                    .f("beta11", nf.beta11)
                    .f("beta12", nf.beta12)
                    .f("beta22", nf.beta22)
                    .f("arnold_d", nf.arnold_d)
                    .v("near_resonance", serde_json::json!({"1:1": fl.near_11, "2:1": fl.near_21, "3:1": fl.near_31}))
                    .s("kam_verdict", kam_verdict(&report, &nf).name()))
            }
            // The normal form needs an elliptic, non-resonant linear part.
            Err(e @ (Error::NotElliptic | Error::ResonantLinearPart { .. } | Error::SmallDenominator { .. })) => {
                Ok(rec.s("kam_verdict", "inconclusive").s("normal_form_error", e.to_string()))
            }
            Err(e) => Err(e.into()),
        }
    })
}

fn grid(lo: f64, hi: f64, n: usize, name: &str) -> anyhow::Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(hi > lo)) {
        return Err(usage(format!("{name} grid needs finite bounds with min < max and at least one step")));
    }
    Ok(if n == 1 { vec![lo] } else { (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect() })
}

fn sweep(a: SweepArgs) -> anyhow::Result<()> {
    let setup = Setup::new(&a.common)?;
    let geometry = setup.geometry()?;
    let cfg = &setup.cfg;
    let mus = grid(cfg.or(a.mu_min, "mu_min", 0.1)?, cfg.or(a.mu_max, "mu_max", 1.0)?, cfg.or(a.mu_steps, "mu_steps", 10)?, "mu")?;
    let q_hi = if geometry == Geometry::Sphere { std::f64::consts::PI - 0.05 } else { 3.0 };
    let qs = grid(cfg.or(a.q_min, "q_min", 0.05)?, cfg.or(a.q_max, "q_max", q_hi)?, cfg.or(a.q_steps, "q_steps", 50)?, "q")?;
    let models = mus.iter().map(|&mu| setup.model_with_mu(Some(mu))).collect::<anyhow::Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64)> = (0..mus.len()).flat_map(|i| qs.iter().map(move |&q| (i, q))).collect();
    let rows: Vec<anyhow::Result<Vec<String>>> = cells
        .par_iter()
        .map(|&(i, q)| {
            let model = &models[i];
            let res = match find_all(q, model) {
                Ok(v) => v,
                Err(Error::NoSolution(_)) => vec![],
                Err(e) => return Err(e.into()),
            };
            res.iter()
                .map(|re| {
                    let r = classify(re, model)?;
                    Ok(format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        float(mus[i]),
                        float(q),
                        re.family,
                        float(re.alpha),
                        float(re.casimir),
                        float(model.hamiltonian(&re.state)?),
                        r.signature.0,
                        r.signature.1,
                        r.signature.2,
                        r.verdict,
                        float(r.char_a),
                        float(r.char_b),
                        float(r.f_indicator)
                    ))
                })
                .collect()
        })
        .collect();
    let out: Option<PathBuf> = cfg.pick(a.out, "out")?;
    let mut w = sink(out.as_deref())?;
    writeln!(w, "mu,q,family,alpha,C,H,n_plus,n_minus,n_zero,verdict,char_a,char_b,f")?;
    for r in rows {
        for line in r? {
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn diagram(a: DiagramArgs) -> anyhow::Result<()> {
    let setup = Setup::new(&a.common)?;
    let model = setup.model()?;
    let cfg = &setup.cfg;
    let dir: PathBuf = cfg.or(a.out_dir, "out_dir", PathBuf::from("."))?;
    let samples = cfg.or(a.samples, "samples", 200)?;
    if samples < MIN_BRANCH_SAMPLES {
        return Err(usage(format!("--samples must be at least {MIN_BRANCH_SAMPLES}")));
    }
    let curves = em_diagram(&model, samples)?;
    let scatter = match cfg.or(a.scatter, "scatter", 0)? {
        0 => vec![],
        n => em_scatter(&model, n, cfg.or(a.seed, "seed", 0)?)?,
    };
    write_branch_csv(&curves, create(&dir, "branches.csv")?)?;
    write_singular_csv(&curves, create(&dir, "singular.csv")?)?;
    let title = format!("energy-momentum diagram, {} mu = {}", model.geometry, model.mu());
    create(&dir, "diagram.svg")?.write_all(em_svg(&curves, &scatter, &title).as_bytes())?;
    let mut out = std::io::stdout().lock();
    for c in &curves {
        for s in &c.singular {
            Record::new()
                .s("kind", s.kind.name())
                .s("family", c.family.name())
                .f("param", s.param)
                .f("q", s.re.q)
                .f("alpha", s.re.alpha)
                .f("C", s.re.casimir)
                .f("H", s.energy)
                .print(&mut out)?;
        }
    }
    if let Some(n) = cfg.pick(a.region_steps, "region_steps")? {
        let log = a.log_mu || cfg.or::<bool>(None, "log_mu", false)?;
        let mus: Vec<f64> = match (model.geometry, log) {
            (Geometry::Sphere, false) => grid(0.01, 0.99, n, "mu")?,
            (Geometry::Sphere, true) => grid(-2.0, -0.005, n, "mu")?.into_iter().map(|e| 10f64.powf(e)).collect(),
            (Geometry::Lobachevsky, false) => grid(0.01, 1.0, n, "mu")?,
            (Geometry::Lobachevsky, true) => grid(-2.0, 0.0, n, "mu")?.into_iter().map(|e| 10f64.powf(e)).collect(),
        };
        let region = stability_region(&mus, model.geometry)?;
        write_region_csv(&region, create(&dir, "region.csv")?)?;
        create(&dir, "region.svg")?.write_all(region_svg(&region, model.geometry, log).as_bytes())?;
    }
    Ok(())
}

fn fig10(a: Fig10Args) -> anyhow::Result<()> {
    let setup = Setup::new(&a.common)?;
    let cfg = &setup.cfg;
    let nm = cfg.or(a.mu_steps, "mu_steps", 200)?;
    let na = cfg.or(a.alpha_steps, "alpha_steps", 200)?;
    if nm < 2 || na < 2 {
        return Err(usage("--mu-steps and --alpha-steps must be at least 2"));
    }
    let dir: PathBuf = cfg.or(a.out_dir, "out_dir", PathBuf::from("."))?;
    let mus = grid(0.005, 0.995, nm, "mu")?;
    let alphas = grid(0.005, std::f64::consts::FRAC_PI_2 - 0.005, na, "alpha")?;
    let curves = fig10_curves(&mus, &alphas)?;
    Fig10Curves::write_csv(&curves.r2, create(&dir, "r2.csv")?)?;
    Fig10Curves::write_csv(&curves.r3, create(&dir, "r3.csv")?)?;
    Fig10Curves::write_csv(&curves.d, create(&dir, "d.csv")?)?;
    let mut w = create(&dir, "samples.csv")?;
    writeln!(w, "mu,alpha,r2,r3,d")?;
    for s in &curves.samples {
        writeln!(w, "{},{},{},{},{}", float(s.mu), float(s.alpha), float(s.r2), float(s.r3), float(s.d))?;
    }
    w.flush()?;
    create(&dir, "fig10.svg")?.write_all(fig10_svg(&curves).as_bytes())?;
    let undefined = curves.samples.iter().filter(|s| s.d.is_nan()).count();
    Record::new()
        .v("components", serde_json::json!({"r2": curves.r2.len(), "r3": curves.r3.len(), "d": curves.d.len()}))
        .v("grid", serde_json::json!([nm, na]))
        .v("undefined_d", serde_json::json!(undefined))
        .print(&mut std::io::stdout().lock())?;
    Ok(())
}

fn reconstruct_cmd(a: ReconstructArgs) -> anyhow::Result<()> {
    let setup = Setup::new(&a.common)?;
    let model = setup.model()?;
    let start = start_state(&setup, &a.state, &model)?;
    let dir: PathBuf = setup.cfg.or(a.out_dir, "out_dir", PathBuf::from("."))?;
    let tr = reconstruct(&model, &start.state, start.t_end, &start.opts)?;
    tr.write_csv(create(&dir, "ambient.csv")?)?;
    tr.write_svg(create(&dir, "ambient.svg")?)?;
    let uniform = matches!(start.opts.sampling, Sampling::Uniform(_));
    let commutation = if start.re.is_some() && uniform && start.state.p == start.re.unwrap().state.p {
        num(tr.commutation_defect())
    } else {
        serde_json::Value::Null
    };
    Record::new()
        .s("chart", tr.chart.name())
        .f("m0", tr.m0)
        .f("casimir", casimir(start.state.m, model.geometry))
        .v("samples", serde_json::json!(tr.times.len()))
        .f("constraint_drift", tr.constraint_drift)
        .f("group_drift", tr.group_drift)
        .f("momentum_drift", tr.momentum_drift)
        .f("energy_mismatch", tr.energy_mismatch)
        .f("frame_momentum_mismatch", tr.frame_momentum_mismatch())
        .v("commutation_defect", commutation)
        .print(&mut std::io::stdout().lock())?;
    Ok(())
}
