pub mod bundle;
pub mod cli;
pub mod error;
pub mod extract;
pub mod linalg;
pub mod multires;
pub mod mesh;
pub mod pipeline;
pub mod product;
pub mod solve;

pub use error::{Error, Result};
