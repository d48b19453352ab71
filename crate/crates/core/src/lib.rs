//! Additive Schwarz methods for convex optimization, cast as abstract gradient
//! methods, together with a structured P1 finite element testbed.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod decomposition;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod objectives;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
