pub mod covariance;
pub mod criteria;
pub mod error;
pub mod fourier;
pub mod gaussian;
pub mod harness;
pub mod roughpath;
pub mod she;
pub mod variation;
