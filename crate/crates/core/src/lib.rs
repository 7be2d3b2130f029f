//! Finite volume and hybrid mimetic schemes on generic polygonal meshes of
//! the unit square, with flux audits and superconvergence diagnostics.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command line
//! live in the `polyfv` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod fluxes;
pub mod diagnostics;
pub mod geometry;
pub mod harness;
pub mod hmm;
pub mod linalg;
pub mod mesh;
pub mod meshgen;
pub mod quadrature;
pub mod tpfa;
