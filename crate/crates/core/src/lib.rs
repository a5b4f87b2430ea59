pub mod env;
pub mod error;
pub mod rng;

pub use error::{Error, Result};
pub mod solvers;
pub mod umdp;
pub mod levelgen;
pub mod learners;
pub mod ued;
pub mod theory;
pub mod experiment;
