//! Numerical laboratory for the stochastic incompressible Euler equations with
//! additive noise on the flat 2-torus, in Eulerian and Lagrangian form, together
//! with a finite-dimensional Stratonovich SDE-on-manifolds lab.

pub mod eulerian;
pub mod forcing;
pub mod lagrangian;
pub mod manifold;
pub mod rng;
pub mod spectral;
pub mod harness;
