//! Power sampling, stability gating and net-energy analysis for profiling the
//! energy of individual deep-learning API calls.

pub mod analysis;
pub mod clock;
pub mod component;
pub mod daemon;
pub mod record;
pub mod sampler;
pub mod sim;
pub mod stability;

pub use component::{Component, PerComponent};
