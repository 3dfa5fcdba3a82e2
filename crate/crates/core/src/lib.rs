//! Company profiling with collaborative topic regression: joint learning of
//! per-job positive/negative opinion topics and latent salary/rating factors
//! from employee reviews, plus salary prediction, baselines and evaluation.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod inference;
pub mod linalg;
pub mod model_io;
pub mod par;
pub mod predict;
pub mod sampling;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{Hyperparams, PairKey, Vocabulary};
