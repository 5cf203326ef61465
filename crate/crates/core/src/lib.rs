pub mod cli;
pub mod conformal;
pub mod error;
pub mod func;
pub mod market;
pub mod predictors;
pub mod series;
pub mod server;
pub mod simlab;

pub use error::{Error, ParseError, Result};
