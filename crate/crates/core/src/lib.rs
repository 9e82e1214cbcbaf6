//! Structure learning for bounded-degree Markov random fields.
//!
//! - [`model`]: graphs and clique-factorized models
//! - [`oracle`]: exact inference by enumeration, condition verification, closed-form bounds
//! - [`sampler`]: exact and Gibbs sampling, observation noise
//! - [`estimator`]: empirical or exact marginals behind one interface
//! - [`reconstruct`]: neighborhood-search reconstruction and sample-size calculators
//! - [`experiment`]: success-rate sweeps over sample sizes

pub mod error;
pub mod estimator;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod reconstruct;
pub mod sampler;
pub mod table;

pub use error::{MrfError, Result};
pub use estimator::Estimator;
pub use model::{Graph, Model, Potential};
pub use oracle::DistTable;
pub use reconstruct::{Algorithm, ReconConfig, ReconResult};
pub use sampler::SampleMatrix;
