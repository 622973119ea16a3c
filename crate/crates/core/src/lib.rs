pub mod bundle;
pub mod checks;
pub mod class;
pub mod error;
pub mod lie;
pub mod mesh;
pub mod moment;
pub mod forms;
pub mod quadrature;
pub mod rng;
pub mod scenarios;
pub mod words;

pub use error::{Error, Result};
pub use lie::{AlgebraElement, CoAlgebraElement, Family, Group, GroupElement, GroupSpec};
