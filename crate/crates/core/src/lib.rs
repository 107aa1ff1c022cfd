pub mod error;
pub mod evolve;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod rates;

pub use error::{Error, Result};
