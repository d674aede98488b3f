//! Feature, covariance and subset artifacts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tomochm_core::tomo::{CovarianceField, FeatureStack, SubsetSelection, Window};

use crate::error::{Error, Result};
use crate::hash::{read_json, write_json};
use crate::npy;

pub const FEATURES_NPY: &str = "features.npy";
pub const FEATURES_JSON: &str = "features.json";
pub const COVARIANCE_NPY: &str = "covariance.npy";
pub const COVARIANCE_JSON: &str = "covariance.json";
pub const SUBSET_JSON: &str = "subset.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub window: Window,
    pub normalized: bool,
    /// Stack image indices the channels refer to.
    pub subset: Vec<usize>,
    /// Whether ground steering was applied before the covariance.
    pub steered: bool,
    /// sha256 of the source `stack.json`.
    pub source_stack_sha256: String,
    pub config_hash: String,
}

/// Writes `features.npy` as float32 `(H, W, 3n)` with its sidecar.
pub fn write_features(dir: &Path, features: &FeatureStack, meta: &FeatureMeta) -> Result<()> {
    let (rows, cols) = features.shape();
    npy::write_f64_as_f32(&dir.join(FEATURES_NPY), &[rows, cols, features.channels()], features.as_slice())?;
    write_json(&dir.join(FEATURES_JSON), meta)
}

pub fn read_features(dir: &Path) -> Result<(FeatureStack, FeatureMeta)> {
    let meta: FeatureMeta = read_json(&dir.join(FEATURES_JSON))?;
    let path = dir.join(FEATURES_NPY);
    let a = npy::read_f32_as_f64(&path)?;
    a.expect_ndim(&path, 3)?;
    let n = meta.subset.len();
    if a.shape[2] != 3 * n {
        return Err(Error::format(&path, format!("{} channels but the subset has {n} images", a.shape[2])));
    }
    let f = FeatureStack::new(a.shape[0], a.shape[1], n, a.data, meta.subset.clone())?;
    Ok((f, meta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMeta {
    pub window: Window,
    pub normalized: bool,
    pub steered: bool,
    pub source_stack_sha256: String,
    pub config_hash: String,
}

/// Writes `covariance.npy` as complex64 `(H, W, n, n)`.
pub fn write_covariance(dir: &Path, cov: &CovarianceField, meta: &CovarianceMeta) -> Result<()> {
    let (rows, cols) = cov.shape();
    let n = cov.n();
    npy::write_c64(&dir.join(COVARIANCE_NPY), &[rows, cols, n, n], cov.as_slice())?;
    write_json(&dir.join(COVARIANCE_JSON), meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub n: usize,
    pub total: usize,
    pub seed: u64,
    pub indices: Vec<usize>,
    pub config_hash: String,
}

impl SubsetRecord {
    pub fn selection(&self) -> SubsetSelection {
        SubsetSelection { indices: self.indices.clone(), seed: self.seed }
    }
}

pub fn write_subset(path: &Path, record: &SubsetRecord) -> Result<()> {
    write_json(path, record)
}

pub fn read_subset(path: &Path) -> Result<SubsetRecord> {
    read_json(path)
}
