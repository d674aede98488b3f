//! Dataset preparation: resampling truth onto the radar grid, split
//! assignment, min-max scaling, height masking and patch extraction.

mod patch;
mod resample;
mod scaler;
mod split;

pub use patch::{height_mask, patchify, PatchDataset, PatchRecord, PatchSpec};
pub use resample::{resample_to_radar, Mapping};
pub use scaler::{apply_scaler, fit_scaler, fit_scaler_multi, invert_scaler, ScalerParams};
pub use split::{joint_fractions, quadrant_split, Split, SplitAssignment, SplitFractions};
