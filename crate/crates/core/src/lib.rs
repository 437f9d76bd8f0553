pub mod acquisition;
pub mod bo;
pub mod error;
pub mod gp;
pub mod oracle;
pub mod special;

pub use error::{Error, Result};
pub use gp::{fit, tune_hyperparams, Dataset, GpHyperparams, GpModel, Observation, PosteriorGaussian};
