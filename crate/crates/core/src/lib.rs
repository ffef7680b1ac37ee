//! Coarse-to-fine autonomous water survey planning.
//!
//! A lawnmower pass samples water quality and sonar detections over a
//! rectangular workspace. Detection sites are clustered into circular regions
//! of interest, a short tour visits them with dense coverage, and a logistic
//! model maps water readings to fish-occurrence probability.
//!
//! The cargo examples walk through each stage:
//!
//! - `enclosing_circle`: minimal circles around point sets
//! - `field_and_detections`: synthetic water field and sonar draws
//! - `survey_clusters`: zigzag survey, site selection, k-means ROIs
//! - `roi_route`: tour ordering, circle coverage, budget, GeoJSON
//! - `seven_waypoint_track`: LOS/PID tracking with a thruster failure
//! - `occurrence_model`: label alignment, fitting and evaluation
//! - `coarse_to_fine_demo`: the full pipeline into an output directory

// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envsim;
pub mod error;
pub mod geo;
pub mod nav;
pub mod numeric;
pub mod pipeline;
pub mod predictor;
pub mod route;
pub mod survey;

pub use error::{Error, Result};
pub use geo::{GeoPoint, LocalPoint};
