pub mod bessel;
pub mod coloured;
pub mod current;
pub mod elimination;
pub mod error;
pub mod bkt;
pub mod graph;
pub mod inequalities;
pub mod loops;
pub mod samplers;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::{CutPath, GraphFile, PlanarGraph};
