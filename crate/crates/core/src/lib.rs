//! Two point masses on the sphere or the Lobachevsky plane interacting through
//! a central potential: reduced dynamics, relative equilibria, their
//! stability, fourth-order Birkhoff normal forms and reconstruction of the
//! motion in the ambient space.

pub mod diagrams;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod jet;
pub mod normal_form;
pub mod potentials;
pub mod reconstruction;
pub mod reduced;
pub mod rel_equilibria;
pub mod stability;

pub use error::{Error, Result};
pub use geometry::Geometry;
pub use potentials::Potential;
pub use reduced::{Masses, Model, ReducedState};
