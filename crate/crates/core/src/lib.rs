//! Exact-arithmetic toolkit for the two-dimensional Jacobi-Perron algorithm.

pub mod exactnum;
pub mod conjugates;
pub mod convergence;
pub mod expansion;
pub mod geometry;
pub mod report;
pub mod selftest;
