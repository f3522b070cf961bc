pub mod bench;
pub mod cli;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod materials;
pub mod state;
pub mod stepper;
pub mod tensor;

pub use error::{Error, Result};
