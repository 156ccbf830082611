pub mod cache;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod filtration;
pub mod groups;
pub mod mmspace;
pub mod numeric;
pub mod stats;
pub mod transport;
pub mod treewalk;
pub mod walksim;

pub use error::{Error, Result};
