pub mod degradation;
pub mod error;
pub mod features;
pub mod imaging;
pub mod metrics;
pub mod registration;
pub mod synth;
