//! Coupled finite volume / Crouzeix-Raviart / Raviart-Thomas scheme for
//! contaminant transport with thermal effects in porous media.

pub mod cli;
pub mod fields;
pub mod linsolve;
pub mod mesh;
pub mod operators;
pub mod physics;
pub mod quadrature;
pub mod scheme;
pub mod verification;
