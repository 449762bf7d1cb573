pub mod closed_form;
pub mod error;
pub mod params;
pub mod quadrature;
pub mod riccati;
pub mod simulator;
pub mod transform;

pub use error::{Error, Result};
