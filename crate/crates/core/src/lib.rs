pub mod error;
pub mod glm;
pub mod harness;
pub mod links;
pub mod quadrature;
pub mod rng;
pub mod sa;
pub mod saa;
pub mod single_obs;
pub mod vi;

pub use error::{Error, Result};
