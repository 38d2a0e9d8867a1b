//! Coherence decay of an oscillator coupled to a near-resonant two-level
//! system (TLS) that is dephased by thermal two-level fluctuators (TLFs).

pub mod error;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod single;
pub mod dissipative;
pub mod ensemble;
pub mod microscopic;
pub mod analysis;
pub mod scenario;

pub use error::{Error, Result};
pub use model::*;
