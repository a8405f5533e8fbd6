//! Toolkit for evaluating organ-at-risk auto-contours on CT label volumes:
//! NIfTI label I/O, label harmonization, surface-distance metrics, the
//! nonparametric statistics used for model and subgroup comparisons, and
//! reporting aggregates.

pub mod components;
pub mod error;
pub mod harmonize;
pub mod manifest;
pub mod metrics;
pub mod nifti;
pub mod pipeline;
pub mod report;
pub mod resample;
pub mod review;
pub mod schema;
pub mod stats;
pub mod volume;

pub use error::{Error, ErrorClass, Result};
pub use manifest::{load_manifest, CaseRecord, Manifest};
pub use schema::OrganSchema;
pub use volume::{AxisCode, AxisCodes, Grid, ImageVolume, LabelVolume, Mask, Volume, VoxelData};
