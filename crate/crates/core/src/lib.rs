//! Arrhythmia risk stratification from Holter monitoring indices.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`rhythm`] turns an annotated beat series into heart-rate-variability,
//!    heart-rate-turbulence and trigger-event features.
//! 2. [`dataset`] loads cohorts, groups features into the three arrhythmogenic
//!    hubs (myocardial substrate, autonomic nervous system, triggers) and
//!    generates synthetic cohorts with planted signal.
//! 3. [`selection`] ranks features by Gram–Schmidt orthogonal forward
//!    selection and keeps those whose random-probe risk stays below a threshold.
//! 4. [`neural`] and [`evaluation`] train least-squares sigmoid networks
//!    (a conventional single-hidden-layer net and a three-hub "ad hoc" net),
//!    pick their complexity by K-fold cross-validation and estimate NPV, PPV
//!    and implant reduction by K'-fold cross-test.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod evaluation;
pub mod neural;
pub mod rhythm;
pub mod selection;
pub mod stats;

mod error;

pub use error::{Error, Result};
