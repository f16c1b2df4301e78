//! Sparse feature selection and scaled-Mahalanobis nearest-centroid
//! classification for high-dimensional Gaussian data with possibly many
//! classes.
//!
//! The pipeline is:
//!
//! 1. [`feature_selection`] screens every feature with a between-class
//!    chi-square statistic against an analytic threshold (known variances) or
//!    an inflated threshold (estimated variances).
//! 2. [`classifier`] assigns new vectors to the class whose centroid is
//!    nearest in the scaled Mahalanobis metric restricted to the selected
//!    features.
//!
//! Around it sit [`stat_bounds`] (chi-square tail bounds and samplers),
//! [`covariance`] (structured, estimated and factorized covariance objects),
//! [`theory`] (checkable separation, effect-size and lower-bound conditions)
//! and [`sim`] (the Monte Carlo harness and split-evaluation protocol).

// `!(x > 0.0)` rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod cli;
pub mod covariance;
pub mod data;
pub mod error;
pub mod feature_selection;
pub mod linalg;
pub mod manifest;
pub mod sim;
pub mod stat_bounds;
pub mod theory;

pub use classifier::{ClassifierModel, FitOptions, Prediction};
pub use covariance::{CovarianceModel, CovarianceStructure, FactorizedSubmatrix};
pub use data::Dataset;
pub use error::{Error, Result};
pub use feature_selection::{ClassSummaries, SelectionOutcome, Threshold};
