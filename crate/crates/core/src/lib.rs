//! Seed-reproducible simulation of the one-dimensional asymmetric simple
//! exclusion process on a finite window.
//!
//! The crate is layered bottom-up:
//!
//! * [`kernel_profile`] holds the jump kernel and the closed-form
//!   hydrodynamic density profile with its exact integral.
//! * [`engine`] is the graphical construction: keyed per-site Poisson clocks,
//!   exclusion moves, deterministic evolution and the light-cone tracker
//!   used to certify that a finite window behaves like the infinite lattice.
//! * [`coupling`] evolves nested families of configurations under one event
//!   stream and provides the class decompositions, truncations, particle-hole
//!   reflection and class re-splitting.
//! * [`observables`] measures fluxes, interval densities, the subadditive
//!   array of second-class counts and product-marginal statistics.
//! * [`harness`] parses experiment descriptions, runs replicas and writes
//!   CSV result tables; it also backs the `exclusion-lab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod engine;
pub mod error;
pub mod harness;
pub mod kernel_profile;
pub mod observables;

pub use error::{Error, Result};
pub use kernel_profile::{JumpKernel, StepProfileParams};
