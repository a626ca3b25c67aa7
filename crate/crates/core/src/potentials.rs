//! Central potentials U(q) depending only on the geodesic separation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::jet::Jet4;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Gravitational { k: f64 },
    Custom { u: ScalarFn, du: ScalarFn, ddu: ScalarFn },
}

/// An attractive central potential on a given geometry.
#[derive(Clone)]
pub struct Potential {
    geometry: Geometry,
    kind: Kind,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Gravitational { k } => f
                .debug_struct("Potential::Gravitational")
                .field("geometry", &self.geometry)
                .field("k", k)
                .finish(),
            Kind::Custom { .. } => f
                .debug_struct("Potential::Custom")
                .field("geometry", &self.geometry)
                .finish_non_exhaustive(),
        }
    }
}

/// Number of points used to check attractivity of a custom potential.
pub const VALIDATION_POINTS: usize = 1000;

/// Log-spaced sample points clustering at the ends of the separation domain.
pub fn validation_grid(geometry: Geometry) -> Vec<f64> {
    let n = VALIDATION_POINTS;
    let log_space = |lo: f64, hi: f64, count: usize| -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect()
    };
    match geometry {
        Geometry::Sphere => {
            let half = std::f64::consts::FRAC_PI_2;
            let left = log_space(1e-6, half, n / 2);
            let right: Vec<f64> = left.iter().rev().map(|t| std::f64::consts::PI - t).collect();
            left.into_iter().chain(right).collect()
        }
        Geometry::Lobachevsky => log_space(1e-6, 1e3, n),
    }
}

impl Potential {
    /// `U = -k cot q` on the sphere, `U = -k coth q` on the Lobachevsky plane.
    pub fn gravitational(geometry: Geometry, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::NonPositiveCoupling(k));
        }
        Ok(Potential { geometry, kind: Kind::Gravitational { k } })
    }

    /// User potential given by U, U' and U''. Attractivity (U' > 0) is checked
    /// on [`validation_grid`].
    pub fn custom<U, D, DD>(geometry: Geometry, u: U, du: D, ddu: DD) -> Result<Self>
    where
        U: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        DD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        for q in validation_grid(geometry) {
            let d = du(q);
            if !(d > 0.0) {
                return Err(Error::AttractivityViolation { q, du: d });
            }
        }
        Ok(Potential {
            geometry,
            kind: Kind::Custom { u: Arc::new(u), du: Arc::new(du), ddu: Arc::new(ddu) },
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Coupling constant when this is the gravitational potential.
    pub fn gravitational_coupling(&self) -> Option<f64> {
        match self.kind {
            Kind::Gravitational { k } => Some(k),
            Kind::Custom { .. } => None,
        }
    }

    /// Highest derivative order available for Taylor expansion.
    pub fn max_order(&self) -> usize {
        match self.kind {
            Kind::Gravitational { .. } => 4,
            Kind::Custom { .. } => 2,
        }
    }

    pub fn u(&self, q: f64) -> f64 {
        match &self.kind {
            Kind::Gravitational { k } => -k * self.geometry.cs(q) / self.geometry.sn(q),
            Kind::Custom { u, .. } => u(q),
        }
    }

    pub fn du(&self, q: f64) -> f64 {
        match &self.kind {
            Kind::Gravitational { k } => {
                let s = self.geometry.sn(q);
                k / (s * s)
            }
            Kind::Custom { du, .. } => du(q),
        }
    }

    pub fn ddu(&self, q: f64) -> f64 {
        match &self.kind {
            Kind::Gravitational { k } => {
                let s = self.geometry.sn(q);
                -2.0 * k * self.geometry.cs(q) / (s * s * s)
            }
            Kind::Custom { ddu, .. } => ddu(q),
        }
    }

    /// Taylor series of U composed with the series `q`, valid up to `order`.
    pub fn jet(&self, q: &Jet4, order: usize) -> Result<Jet4> {
        if order > self.max_order() {
            return Err(Error::InsufficientDerivatives { available: self.max_order(), required: order });
        }
        match &self.kind {
            Kind::Gravitational { k } => {
                let (c, s) = match self.geometry {
                    Geometry::Sphere => (q.cos(), q.sin()),
                    Geometry::Lobachevsky => (q.cosh(), q.sinh()),
                };
                Ok(c.div_jet(&s).scale(-k))
            }
            Kind::Custom { u, du, ddu } => {
                let a = q.value();
                Ok(q.compose([u(a), du(a), ddu(a), 0.0, 0.0]))
            }
        }
    }
}
