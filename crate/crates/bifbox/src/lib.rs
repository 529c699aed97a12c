pub mod classify;
pub mod desingular;
pub mod error;
pub mod expr;
pub mod field;
pub mod flowbox;
pub mod jet;
pub mod numeric;
pub mod ode;
pub mod parse;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;
