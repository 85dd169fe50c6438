//! Conformal submanifold geometry on coordinate charts.
//!
//! The crate is `no_std` with `alloc`; the `std` feature only matters for
//! tests and for the optional `parallel` quadrature backend.
//!
//! Layers, bottom to top:
//! - [`tensor`]: dense tensors, Kronecker deltas, Kulkarni–Nomizu products, Pfaffians.
//! - [`expr`]: the expression language used for charts and immersions.
//! - [`chart`] and [`catalog`]: metrics on coordinate boxes and their curvature.
//! - [`submanifold`]: second fundamental forms, Gauss equations, Fialkow tensors.
//! - [`jets`] and [`expansion`]: exact truncated series and the minimal-graph recursion.
//! - [`ambient`]: the canonical ambient metric and straightening identities.
//! - [`renorm`]: cut-off integrals and Hadamard finite parts.
//! - [`functionals`]: Gauss–Bonnet–Chern checks and rigidity integrals.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod ambient;
pub mod catalog;
pub mod chart;
pub mod combinatorics;
pub mod error;
pub mod expansion;
pub mod expr;
pub mod field;
pub mod functionals;
pub mod jets;
pub mod linalg;
pub mod quadrature;
pub mod renorm;
pub mod sampling;
pub mod scalar;
pub mod submanifold;
pub mod tensor;

pub use error::{Error, Result};
