//! Orthogonal geodesic chords in strongly concave Riemannian disks, found by
//! a discrete shortening flow with a multistart minimax driver, and the brake
//! orbits of natural Hamiltonian systems they encode through the Jacobi
//! metric.
//!
//! The `examples/` directory walks through each capability; `ogc` is a thin
//! command-line front end over [`pipeline`].

pub mod builtins;
pub mod chords;
pub mod config;
pub mod critical;
pub mod domain;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod maupertuis;
pub mod pipeline;
pub mod svg;
pub mod verify;

pub use error::{Error, Result};
