//! ε-orthogonal weight initialization, baseline initializers, property checks
//! and a small feedforward training harness.

pub mod data;
pub mod error;
pub mod init;
pub mod linalg;
pub mod nn;
pub mod props;
pub mod rng;

pub use error::{Error, Result};
pub use init::{init_weights, InitKind, InitMethod};
pub use linalg::{Matrix, QrPair, Vector};
