pub mod bivalued;
pub mod config;
pub mod curve;
pub mod error;
pub mod mobius;
pub mod numerics;
pub mod orbit;
pub mod quadrature;
pub mod solver;
pub mod sphere;
pub mod su11;
pub mod word;
