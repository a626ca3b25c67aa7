//! Model assembly from flags and config values.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use clap::Args;

use twobody::{Geometry, Masses, Model, Potential};

use crate::config::{usage, ConfigFile};

#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Run file with `key = value` lines; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// s2 (sphere) or l2 (Lobachevsky plane).
    #[arg(long)]
    pub geometry: Option<String>,
    /// Mass ratio μ₁/μ₂ with μ₁ = 1.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Coupling constant of the gravitational potential.
    #[arg(long)]
    pub k: Option<f64>,
    /// gravitational (default) or table.
    #[arg(long)]
    pub potential: Option<String>,
    /// CSV with columns q,U,dU,ddU for `--potential table`.
    #[arg(long)]
    pub potential_table: Option<PathBuf>,
    /// Worker threads for grid commands.
    #[arg(long)]
    pub jobs: Option<usize>,
}

pub struct Setup {
    pub cfg: ConfigFile,
    pub geometry: Option<Geometry>,
    pub common: Common,
}

impl Setup {
    pub fn new(common: &Common) -> anyhow::Result<Self> {
        let cfg = ConfigFile::load(common.config.as_deref())?;
        let geometry = match cfg.pick(common.geometry.clone(), "geometry")? {
            None => None,
            Some(g) => Some(Geometry::parse(&g).ok_or_else(|| usage(format!("unknown geometry {g:?} (use s2 or l2)")))?),
        };
        if let Some(j) = cfg.pick(common.jobs, "jobs")? {
            if j == 0 {
                return Err(usage("--jobs must be at least 1"));
            }
            // Fails only if a pool already exists, which is harmless.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
        }
        Ok(Setup { cfg, geometry, common: common.clone() })
    }

    pub fn geometry(&self) -> anyhow::Result<Geometry> {
        self.geometry.ok_or_else(|| usage("missing required parameter --geometry"))
    }

    pub fn masses(&self, mu_override: Option<f64>) -> anyhow::Result<Masses> {
        let c = &self.common;
        let mu1 = self.cfg.pick(c.mu1, "mu1")?;
        let mu2 = self.cfg.pick(c.mu2, "mu2")?;
        let mu = match mu_override {
            Some(m) => Some(m),
            None => self.cfg.pick(c.mu, "mu")?,
        };
        Ok(match (mu, mu1, mu2) {
            (Some(m), None, None) => Masses::from_ratio(m)?,
            (None, Some(a), Some(b)) => Masses::new(a, b)?,
            (Some(m), Some(a), None) => Masses::new(a, a / m)?,
            (None, None, None) => Masses::from_ratio(1.0)?,
            _ => return Err(usage("give either --mu, or --mu1 with --mu2, or --mu with --mu1")),
        })
    }

    pub fn model(&self) -> anyhow::Result<Model> {
        self.model_with_mu(None)
    }

    pub fn model_with_mu(&self, mu: Option<f64>) -> anyhow::Result<Model> {
        let geometry = self.geometry()?;
        let masses = self.masses(mu)?;
        let c = &self.common;
        let kind = self.cfg.or(c.potential.clone(), "potential", "gravitational".to_string())?;
        let potential = match kind.as_str() {
            "gravitational" => Potential::gravitational(geometry, self.cfg.or(c.k, "k", 1.0)?)?,
            "table" => {
                let path: PathBuf = self.cfg.require(c.potential_table.clone(), "potential_table")?;
                table_potential(geometry, &path)?
            }
            other => return Err(usage(format!("unknown potential {other:?} (use gravitational or table)"))),
        };
        Ok(Model::new(geometry, masses, potential)?)
    }
}

/// Tabulated U, U', U'' with cubic Hermite interpolation of U and U'. Outside
/// the table U continues linearly with the end slope.
#[derive(Debug)]
struct Table {
    q: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    ddu: Vec<f64>,
}

impl Table {
    fn locate(&self, x: f64) -> usize {
        self.q.partition_point(|&v| v <= x).clamp(1, self.q.len() - 1) - 1
    }

    fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
    }

    fn outside(&self, x: f64) -> Option<usize> {
        let n = self.q.len();
        if x < self.q[0] {
            Some(0)
        } else if x > self.q[n - 1] {
            Some(n - 1)
        } else {
            None
        }
    }

    fn u(&self, x: f64) -> f64 {
        if let Some(e) = self.outside(x) {
            return self.u[e] + self.du[e] * (x - self.q[e]);
        }
        let i = self.locate(x);
        Self::hermite(self.q[i], self.q[i + 1], self.u[i], self.u[i + 1], self.du[i], self.du[i + 1], x)
    }

    fn du(&self, x: f64) -> f64 {
        if let Some(e) = self.outside(x) {
            return self.du[e];
        }
        let i = self.locate(x);
        let h = self.q[i + 1] - self.q[i];
        let t = (x - self.q[i]) / h;
        let (y0, y1, d0, d1) = (self.u[i], self.u[i + 1], self.du[i], self.du[i + 1]);
        ((6.0 * t * t - 6.0 * t) * (y0 - y1)) / h + (3.0 * t * t - 4.0 * t + 1.0) * d0 + (3.0 * t * t - 2.0 * t) * d1
    }

    fn ddu(&self, x: f64) -> f64 {
        if self.outside(x).is_some() {
            return 0.0;
        }
        let i = self.locate(x);
        let h = self.q[i + 1] - self.q[i];
        let t = (x - self.q[i]) / h;
        let (y0, y1, d0, d1) = (self.u[i], self.u[i + 1], self.du[i], self.du[i + 1]);
        ((12.0 * t - 6.0) * (y0 - y1)) / (h * h) + ((6.0 * t - 4.0) * d0 + (6.0 * t - 2.0) * d1) / h
    }
}

fn table_potential(geometry: Geometry, path: &Path) -> anyhow::Result<Potential> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading potential table {}", path.display()))?;
    let mut t = Table { q: vec![], u: vec![], du: vec![], ddu: vec![] };
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() < 3 {
            return Err(usage(format!("potential table row {}: need q,U,dU[,ddU]", n + 1)));
        }
        let field = |i: usize| -> anyhow::Result<f64> {
            row.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| usage(format!("potential table row {} column {}: {e}", n + 1, i + 1)))
        };
        t.q.push(field(0)?);
        t.u.push(field(1)?);
        t.du.push(field(2)?);
        t.ddu.push(if row.len() > 3 { field(3)? } else { f64::NAN });
    }
    if t.q.len() < 2 || t.q.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(usage("potential table needs at least two rows with strictly increasing q"));
    }
    let t = Arc::new(t);
    let (a, b, c) = (t.clone(), t.clone(), t);
    Ok(Potential::custom(geometry, move |q| a.u(q), move |q| b.du(q), move |q| c.ddu(q))?)
}
