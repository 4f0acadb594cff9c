pub mod arith;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod memory;
pub mod pir;
pub mod ue;

pub use error::{CoreError, Result};
pub use kernel::*;
