//! Finite elements for frictionless adhesive contact between a rigid rough
//! indenter and a deformable, possibly heterogeneous, elastic layer.
//!
//! Surface topography and spatially varying adhesion parameters measured on
//! a pixel grid are embedded point-wise into zero-thickness interface
//! elements on a nominally flat interface, so the mesh never needs to follow
//! the rough geometry and no contact search is required.
//!
//! The crate is organized along the pipeline:
//!
//! * [`scan`] — gridded field ingestion and preprocessing,
//! * [`law`] — the regularized Lennard-Jones traction–gap law,
//! * [`mesh`] — structured graded meshes and phase assignment,
//! * [`bulk`] — linear elastic element kernels,
//! * [`interface`] — embedded-profile interface elements,
//! * [`solver`] — assembly, Newton iteration and load ramps,
//! * [`config`]/[`output`] — run configuration and result writers.
//!
//! Strict-positivity guards are written as `!(x > 0.0)` on purpose: the
//! negated form rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]


pub mod bulk;
pub mod config;
pub mod error;
pub mod interface;
pub mod law;
pub mod mesh;
pub mod output;
pub mod scan;
pub mod solver;
pub mod sparse;

pub use bulk::Material;
pub use error::{Error, Result};
pub use law::{instability_check, InterfaceLaw, LjParams};
pub use scan::{effective_modulus, load_scan_grid, segment_phases, FieldKind, PhaseMask, ScanGrid};
