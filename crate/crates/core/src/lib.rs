//! Comparison geometry on finite samples of Alexandrov spaces.
//!
//! The crate builds strainer coordinate charts on finite metric spaces, glues
//! local almost isometries into a global map with weighted centers of mass,
//! and measures how far the result is from preserving distances.

pub mod chart;
pub mod error;
pub mod glue;
pub mod json;
pub mod kplane;
pub mod mspace;
pub mod strainer;
pub mod verify;

pub use chart::{Chart, Preimage, WeightVector};
pub use error::{Error, Result};
pub use glue::{GhMap, GlueConfig, GlueResult};
pub use kplane::{comparison_angle, CurvatureBound, TriangleSides};
pub use mspace::{FiniteMetricSpace, Model, SampleSpec, ValidationReport};
pub use strainer::{StrainQuality, Strainer};
pub use verify::DistortionReport;
