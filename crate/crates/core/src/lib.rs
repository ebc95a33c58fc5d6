//! Conformal deformations of the round sphere carrying Zoll families of
//! minimal hypersurfaces, together with the operators needed to build and
//! certify them: graphs over equators, the area functional and its
//! Euler–Lagrange and Jacobi operators, generalised Funk transforms with
//! their singular kernel, a Newton corrector, and Killing-tensor metrics
//! with minimal equators.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, command line
//! handling and thread pools live in the companion CLI crate.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod exec;
pub mod funk;
pub mod graphs;
pub mod jet;
pub mod killing;
pub mod setup;
pub mod solver;
pub mod sphere;
pub mod variational;
pub mod vec4;

pub use error::{Error, Result};
