//! Homogeneous multilinear polynomial chaoses over independent inputs.
//!
//! * [`tensor`]: symmetric, diagonal-free coefficient tensors and named
//!   families.
//! * [`laws`]: standardized input laws, including uniform-plus-background
//!   mixtures.
//! * [`chaos`] and [`wick`]: sampling and exact or Monte-Carlo moments.
//! * [`metrics`]: Kolmogorov, Wasserstein and histogram total-variation
//!   distances.
//! * [`jacobi`]: exact generator calculus on the cube.
//! * [`anticoncentration`]: small-ball and reciprocal-Γ scans.
//! * [`experiment`]: scenario configs, runs and CSV reports.

pub mod anticoncentration;
pub mod batch;
pub mod chaos;
pub mod experiment;
pub mod jacobi;
pub mod laws;
pub mod metrics;
pub mod rng;
pub mod tensor;
pub mod wick;

pub use batch::SampleBatch;
pub use laws::InputLaw;
pub use tensor::{family_generate, CoefficientTensor, Family};
