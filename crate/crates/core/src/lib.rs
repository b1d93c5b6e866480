//! Topology identifiability for networked dynamical systems under partial
//! linear measurements.
//!
//! The crate checks whether two networks with different coupling topologies
//! produce measurements that contract to each other: the auxiliary family
//! interpolating the two vector fields must be contractive in the observable
//! space of `C`, and the difference of the fields must be invisible to `C`.
//! Everything is cross-checked by direct simulation.
//!
//! - [`graph`]: complete-graph incidence matrices, weighted Laplacians, λ₂.
//! - [`spectral`]: `C A C†`, spectral abscissae, nullspace invariance, LMI
//!   residuals and certificate construction.
//! - [`dynamics`]: Kuramoto, edge-perturbation, general network and linear
//!   vector fields with analytic Jacobians.
//! - [`indistinguishability`]: free edges, candidate topologies and the
//!   combined verdict.
//! - [`sim`]: RK4 integration, measurement, the output length functional and
//!   comparison metrics.
//! - [`fournode`]: the four-oscillator example and its bundled configuration.

pub mod dynamics;
pub mod error;
pub mod fournode;
pub mod graph;
pub mod indistinguishability;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
