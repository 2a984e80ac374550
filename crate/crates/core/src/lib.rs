//! Smoothed conformal prediction for classification, exact efficiency
//! criteria, and the conformity measures that optimise them.

pub mod criteria;
pub mod cli;
pub mod domain;
pub mod error;
pub mod formats;
pub mod idealized;
pub mod knn;
pub mod numeric;
pub mod oracle;
pub mod stats;
pub mod transducer;

pub use domain::*;
pub use error::{Error, Result};
pub use numeric::{Rational, Scalar};
