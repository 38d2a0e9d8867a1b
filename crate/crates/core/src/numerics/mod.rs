pub mod ode;
pub mod quad;
pub mod sum;

pub use ode::{DormandPrince, Tolerances};
pub use quad::{QuadOptions, QuadResult};
pub use sum::CompensatedSum;
