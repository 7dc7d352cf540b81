//! Landau–Ginzburg potentials of compact toric manifolds over the Novikov
//! field: critical points, Jacobian-ring rank, residue pairings, Clifford
//! traces and quantum Stanley–Reisner checks.

pub mod critsolve;
pub mod frobenius;
pub mod novikov;
pub mod polytope;
pub mod potential;
pub mod qh;
pub mod rational;
pub mod report;

pub use novikov::NovikovSeries;
pub use polytope::{PrimitiveCollection, ToricData};
pub use potential::{LaurentPolynomial, PotentialFunction, PotentialKind};
pub use rational::{Rational, Valuation};
