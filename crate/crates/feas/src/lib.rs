//! Feasibility solver for systems of linear inequalities `a_i^T x >= b_i`.
//!
//! The solver lifts the Euclidean problem onto the unit sphere and runs
//! relaxation algorithms whose iterates are centers of touching spheres of
//! active constraint subsets. Four variants are provided (combinatorial,
//! monotone, polynomial with equator stretching, and violation-triggered
//! rescaling), together with a phase-I simplex baseline, deterministic
//! random-instance generators, and instance file I/O.

pub mod baseline;
pub mod numkit;
pub mod problems;
pub mod solver;
pub mod sphere;
