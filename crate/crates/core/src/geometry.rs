use std::f64::consts::PI;

/// Constant-curvature surface carrying the two bodies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// Unit sphere S², separations in (0, π).
    Sphere,
    /// Lobachevsky plane L² (upper sheet of the hyperboloid), separations in (0, ∞).
    Lobachevsky,
}

impl Geometry {
    /// +1 on the sphere, −1 on the Lobachevsky plane. Threads every sign
    /// difference between the two reduced systems.
    pub fn sigma(self) -> f64 {
        match self {
            Geometry::Sphere => 1.0,
            Geometry::Lobachevsky => -1.0,
        }
    }

    /// Diagonal of the ambient metric K.
    pub fn metric_signs(self) -> [f64; 3] {
        match self {
            Geometry::Sphere => [1.0, 1.0, 1.0],
            Geometry::Lobachevsky => [1.0, 1.0, -1.0],
        }
    }

    /// Upper end of the open separation interval.
    pub fn q_max(self) -> f64 {
        match self {
            Geometry::Sphere => PI,
            Geometry::Lobachevsky => f64::INFINITY,
        }
    }

    pub fn contains(self, q: f64) -> bool {
        q > 0.0 && q < self.q_max()
    }

    /// sin q or sinh q.
    pub fn sn(self, q: f64) -> f64 {
        match self {
            Geometry::Sphere => q.sin(),
            Geometry::Lobachevsky => q.sinh(),
        }
    }

    /// cos q or cosh q.
    pub fn cs(self, q: f64) -> f64 {
        match self {
            Geometry::Sphere => q.cos(),
            Geometry::Lobachevsky => q.cosh(),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Geometry::Sphere => "s2",
            Geometry::Lobachevsky => "l2",
        }
    }

    pub fn parse(s: &str) -> Option<Geometry> {
        match s.to_ascii_lowercase().as_str() {
            "s2" | "sphere" => Some(Geometry::Sphere),
            "l2" | "lobachevsky" | "hyperbolic" => Some(Geometry::Lobachevsky),
            _ => None,
        }
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.short_name())
    }
}
