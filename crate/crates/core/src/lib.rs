//! Affine local models for flows near a surgered periodic orbit: the
//! cross-shaped neighbourhood and its closed-form transit dynamics, the
//! boundary gluing surgery with its tangent cocycle, a numerical cone-field
//! hyperbolicity criterion with a radius feasibility search, the integer
//! combinatorics of Birkhoff section boundary data, and the helicoidal
//! local section with its transversality certificate.

pub mod affine_flow;
pub mod birkhoff;
pub mod cocycle;
pub mod config;
pub mod error;
pub mod geometry;
pub mod hyperbolicity;
pub mod linalg;
pub mod report;
pub mod sections;
pub mod surgery;

pub use error::{ModelError, Result};
pub use geometry::{ModelParams, Point3};
