pub mod compose;
pub mod digest;
pub mod error;
pub mod loss;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod metrics;
pub mod par;
pub mod phantom;
pub mod shape;
pub mod solver;
pub mod texture;
pub mod volume;

pub use error::{Error, Result};
