//! Partial tomographic processing: ground steering, multilooked covariance
//! estimation, three-vector feature extraction and SLC subset selection.

mod covariance;
mod features;
mod steer;
mod subset;

pub use covariance::{estimate_covariance, estimate_covariance_row, CovarianceField, Window};
pub use features::{extract_features, features_from_matrix, slice_features, FeatureStack};
pub use steer::{ground_steer, ground_steer_row};
pub use subset::{select_subset, SubsetSelection};
