//! Probabilistic metric spaces with step-function distances, contraction
//! checks and fixed-point iteration on finite spaces.

pub mod algebra;
pub mod contraction;
pub mod ddf;
pub mod generate;
pub mod solver;
pub mod space;
