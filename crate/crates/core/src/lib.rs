pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod error;
pub mod features;
pub mod forest;
pub mod lexres;
pub mod matrix;
pub mod synthetic;
pub mod textprep;

pub use error::{Error, Result};
