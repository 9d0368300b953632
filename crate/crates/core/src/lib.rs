//! Liquid-vapor capillarity in reduced van der Waals units.
//!
//! * [`eos`]: homogeneous thermodynamics, spinodals and the Maxwell construction.
//! * [`planar`]: flat diffuse interfaces, profiles and surface tension.
//! * [`droplet`]: spherical droplets and bubbles, pressure jumps and Laplace sweeps.
//! * [`sharp`]: the zero-thickness model, its surface tension and the distributional limit.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod droplet;
pub mod eos;
pub mod error;
pub mod interp;
pub mod ode;
pub mod planar;
pub mod quadrature;
pub mod sharp;

pub use eos::{CoexistenceState, EosKind, EosModel, TOL_COEX};
pub use error::{CapillaryError, Result};
pub use planar::{CapillarityParams, DensityProfile, Geometry, SurfaceTensionReport};
