//! Python access to the reduced two-body toolkit.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twobody::integrator::{integrate, IntegrationOptions, Sampling};
use twobody::normal_form::{kam_verdict, normal_form_at_re};
use twobody::rel_equilibria::{find_all, RelativeEquilibrium};
use twobody::stability::{classify, critical_angle};
use twobody::{reduced, Error, Geometry, ReducedState};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::SingularityApproach { .. }
        | Error::StepFailure { .. }
        | Error::NonFinite
        | Error::ChartBreakdown { .. }
        | Error::NotElliptic
        | Error::ResonantLinearPart { .. }
        | Error::SmallDenominator { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn geometry(name: &str) -> PyResult<Geometry> {
    Geometry::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown geometry {name:?} (use s2 or l2)")))
}

/// Reduced model with the gravitational potential of coupling `k`.
#[pyclass(frozen)]
struct Model {
    inner: reduced::Model,
}

impl Model {
    fn equilibria(&self, q: f64) -> PyResult<Vec<RelativeEquilibrium>> {
        match find_all(q, &self.inner) {
            Ok(v) => Ok(v),
            Err(Error::NoSolution(_)) => Ok(vec![]),
            Err(e) => Err(to_py(e)),
        }
    }

    fn re_dict<'py>(&self, py: Python<'py>, re: &RelativeEquilibrium) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("family", re.family.name())?;
        d.set_item("q", re.q)?;
        d.set_item("alpha", re.alpha)?;
        d.set_item("m_squared", re.m_squared)?;
        d.set_item("casimir", re.casimir)?;
        d.set_item("omega", re.omega)?;
        d.set_item("m", re.state.m.to_vec())?;
        d.set_item("p", re.state.p)?;
        d.set_item("energy", self.inner.hamiltonian(&re.state).map_err(to_py)?)?;
        d.set_item("residual", re.residual(&self.inner).map_err(to_py)?)?;
        Ok(d)
    }
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (geometry_name, mu = 1.0, k = 1.0))]
    fn new(geometry_name: &str, mu: f64, k: f64) -> PyResult<Self> {
        let g = geometry(geometry_name)?;
        let masses = reduced::Masses::from_ratio(mu).map_err(to_py)?;
        let potential = twobody::Potential::gravitational(g, k).map_err(to_py)?;
        Ok(Model { inner: reduced::Model::new(g, masses, potential).map_err(to_py)? })
    }

    #[getter]
    fn geometry(&self) -> &'static str {
        self.inner.geometry.short_name()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    fn hamiltonian(&self, m: [f64; 3], q: f64, p: f64) -> PyResult<f64> {
        self.inner.hamiltonian(&ReducedState::new(m, q, p)).map_err(to_py)
    }

    fn casimir(&self, m: [f64; 3]) -> f64 {
        reduced::casimir(m, self.inner.geometry)
    }

    /// Time derivative of (m_x, m_y, m_z, q, p).
    fn vector_field(&self, m: [f64; 3], q: f64, p: f64) -> PyResult<[f64; 5]> {
        self.inner.vector_field(&ReducedState::new(m, q, p)).map_err(to_py)
    }

    /// Relative equilibria at separation `q`; empty when none exists.
    fn find_re<'py>(&self, py: Python<'py>, q: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.equilibria(q)?.iter().map(|re| self.re_dict(py, re)).collect()
    }

    /// Linear and, where defined, nonlinear stability of each RE at `q`.
    fn stability<'py>(&self, py: Python<'py>, q: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let mut out = vec![];
        for re in self.equilibria(q)? {
            let r = classify(&re, &self.inner).map_err(to_py)?;
            let d = self.re_dict(py, &re)?;
            d.set_item("signature", (r.signature.0, r.signature.1, r.signature.2))?;
            d.set_item("verdict", r.verdict.name())?;
            d.set_item("frequencies", r.frequencies())?;
            match normal_form_at_re(&re, &self.inner) {
                Ok(res) => {
                    let nf = res.normal_form;
                    d.set_item("beta", (nf.beta11, nf.beta12, nf.beta22))?;
                    d.set_item("arnold_d", nf.arnold_d)?;
                    d.set_item("kam_verdict", kam_verdict(&r, &nf).name())?;
                }
                Err(Error::NotElliptic | Error::ResonantLinearPart { .. } | Error::SmallDenominator { .. }) => {
                    d.set_item("kam_verdict", "inconclusive")?;
                }
                Err(e) => return Err(to_py(e)),
            }
            out.push(d);
        }
        Ok(out)
    }

    /// Integrate from (m, q, p); returns columns t, m, q, p, H, C.
    #[pyo3(signature = (m, q, p, t_end, tol = 1e-10, samples = None))]
    fn integrate<'py>(
        &self,
        py: Python<'py>,
        m: [f64; 3],
        q: f64,
        p: f64,
        t_end: f64,
        tol: f64,
        samples: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let sampling = match samples {
            Some(n) if t_end != 0.0 => Sampling::Uniform(n),
            _ => Sampling::Steps,
        };
        let opts = IntegrationOptions { tol, sampling, q_bounds: None };
        let tr = py
            .detach(|| integrate(&self.inner, &ReducedState::new(m, q, p), t_end, &opts))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("t", tr.times)?;
        d.set_item("m", tr.states.iter().map(|s| s.m).collect::<Vec<_>>())?;
        d.set_item("q", tr.states.iter().map(|s| s.q).collect::<Vec<_>>())?;
        d.set_item("p", tr.states.iter().map(|s| s.p).collect::<Vec<_>>())?;
        d.set_item("H", tr.energy)?;
        d.set_item("C", tr.casimir)?;
        d.set_item("energy_drift", tr.energy_drift)?;
        d.set_item("casimir_drift", tr.casimir_drift)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, mu={})", self.inner.geometry.short_name(), self.inner.mu())
    }
}

/// Boundary (alpha*, q*) of linear stability on the acute or elliptic branch.
#[pyfunction]
fn stability_boundary(geometry_name: &str, mu: f64) -> PyResult<(f64, f64)> {
    let c = critical_angle(mu, geometry(geometry_name)?).map_err(to_py)?;
    Ok((c.alpha, c.q))
}

#[pymodule]
fn twobody_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(stability_boundary, m)?)?;
    Ok(())
}
