//! Run configuration: one TOML file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tomochm_core::datapipe::SplitFractions;
use tomochm_core::geometry::Polarization;
use tomochm_core::simulate::{HeightRecipe, SceneSpec, Snr};
use tomochm_core::specest::{SpectralMethod, VerticalGrid, DEFAULT_LOADING, DEFAULT_THRESHOLD_DB};
use tomochm_core::tomo::Window;

use crate::error::{Error, Result};
use crate::hash::canonical_hash;

pub const SCHEMA: u32 = 1;

/// Subset sizes a run may request.
pub const SLC_COUNTS: [usize; 3] = [3, 7, 28];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Worker threads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub stack: StackConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

fn default_seed() -> u64 {
    42
}

fn default_output() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackConfig {
    /// Holds one stack directory per heading. Defaults to `<output>/stack`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub headings: Vec<String>,
    pub polarization: Polarization,
}

impl Default for StackConfig {
    fn default() -> Self {
        Self { dir: None, headings: vec!["SE".into()], polarization: Polarization::VV }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub rows: usize,
    pub cols: usize,
    /// 7 selects the fixed seven-image layout; any other count draws an
    /// irregular layout from the run seed.
    pub n_images: usize,
    pub resolution_m: f64,
    pub dtm: HeightRecipe,
    pub chm: HeightRecipe,
    pub ground_amplitude: f64,
    pub canopy_amplitude: f64,
    pub speckle: bool,
    /// Absent means noiseless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            rows: 128,
            cols: 128,
            n_images: 7,
            resolution_m: 3.0,
            dtm: HeightRecipe::Ramp { base: 100.0, row_slope: 0.05, col_slope: 0.02 },
            chm: HeightRecipe::Blocks { size: 16, values: vec![2.0, 12.0, 20.0, 28.0] },
            ground_amplitude: 1.0,
            canopy_amplitude: 1.0,
            speckle: true,
            snr_db: Some(20.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    /// `[azimuth, range]`, both odd.
    pub window: [usize; 2],
    pub normalized: bool,
    /// Subset size; absent keeps every image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_slc: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { window: [9, 9], normalized: false, n_slc: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub patch_size: usize,
    /// Train stride; evaluation splits always use `patch_size / 2`.
    pub train_stride: usize,
    pub height_filter_m: f64,
    pub fractions: [f64; 3],
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { patch_size: 32, train_stride: 32, height_filter_m: 0.0, fractions: [0.64, 0.20, 0.16] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Beamforming,
    Capon,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "beamforming" => Ok(Method::Beamforming),
            "capon" => Ok(Method::Capon),
            other => Err(format!("unknown method {other:?}, expected beamforming or capon")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub method: Method,
    pub loading: f64,
    pub threshold_db: f64,
    pub grid: VerticalGrid,
    /// Pixel whose profile is written to `profile_sample.csv`.
    pub sample_pixel: [usize; 2],
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: Method::Beamforming,
            loading: DEFAULT_LOADING,
            threshold_db: DEFAULT_THRESHOLD_DB,
            grid: VerticalGrid::default(),
            sample_pixel: [0, 0],
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            seed: default_seed(),
            output: default_output(),
            threads: None,
            stack: StackConfig::default(),
            scene: SceneConfig::default(),
            features: FeatureConfig::default(),
            dataset: DatasetConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str::<RunConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema != SCHEMA {
            return bad(format!("unsupported schema {}, expected {SCHEMA}", self.schema));
        }
        if self.stack.headings.is_empty() {
            return bad("at least one heading is required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for h in &self.stack.headings {
            if h.is_empty() || !h.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("heading {h:?} must be a non-empty alphanumeric label"));
            }
            if !seen.insert(h) {
                return bad(format!("heading {h:?} listed twice"));
            }
        }
        if let Some(n) = self.features.n_slc {
            if !SLC_COUNTS.contains(&n) {
                return bad(format!("n_slc {n} must be one of {SLC_COUNTS:?}"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        self.window().map_err(|e| Error::Config(e.to_string()))?;
        self.scene_spec(0).map_err(|e| Error::Config(e.to_string()))?.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.scene.n_images < 1 || !(self.scene.resolution_m > 0.0) {
            return bad("scene needs at least one image and a positive resolution".into());
        }
        self.fractions().validate().map_err(|e| Error::Config(e.to_string()))?;
        let p = self.dataset.patch_size;
        if p < 4 || !p.is_multiple_of(4) {
            return bad(format!("patch_size {p} must be a positive multiple of 4"));
        }
        if self.dataset.train_stride != p && self.dataset.train_stride != p / 2 {
            return bad(format!("train_stride must be {p} or {}", p / 2));
        }
        if !(self.dataset.height_filter_m >= 0.0) {
            return bad("height_filter_m must be non-negative".into());
        }
        self.baseline.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.baseline.loading >= 0.0) || !(self.baseline.threshold_db < 0.0) {
            return bad("baseline loading must be >= 0 and threshold_db < 0".into());
        }
        Ok(())
    }

    /// Digest of every field that can change an artifact's contents. Thread
    /// count and directory locations are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.output = PathBuf::new();
        c.stack.dir = None;
        canonical_hash(&c)
    }

    pub fn stack_root(&self) -> PathBuf {
        self.stack.dir.clone().unwrap_or_else(|| self.output.join("stack"))
    }

    pub fn stack_dir(&self, heading: &str) -> PathBuf {
        self.stack_root().join(heading)
    }

    pub fn window(&self) -> tomochm_core::Result<Window> {
        Window::new(self.features.window[0], self.features.window[1])
    }

    pub fn fractions(&self) -> SplitFractions {
        let [train, val, test] = self.dataset.fractions;
        SplitFractions { train, val, test }
    }

    pub fn method(&self) -> SpectralMethod {
        match self.baseline.method {
            Method::Beamforming => SpectralMethod::Beamforming,
            Method::Capon => SpectralMethod::Capon { loading: self.baseline.loading },
        }
    }

    /// Simulation seed of the `index`-th heading.
    pub fn heading_seed(&self, index: usize) -> u64 {
        tomochm_core::rng::mix64(self.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn scene_spec(&self, heading_index: usize) -> tomochm_core::Result<SceneSpec> {
        let s = &self.scene;
        Ok(SceneSpec {
            rows: s.rows,
            cols: s.cols,
            dtm: s.dtm.clone(),
            chm: s.chm.clone(),
            ground_amplitude: s.ground_amplitude,
            canopy_amplitude: s.canopy_amplitude,
            speckle: s.speckle,
            snr: s.snr_db.map_or(Snr::Noiseless, Snr::Db),
            seed: self.heading_seed(heading_index),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_tracks_window_but_not_threads_or_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.threads = Some(4);
        b.output = PathBuf::from("elsewhere");
        b.stack.dir = Some(PathBuf::from("stacks"));
        assert_eq!(a.hash(), b.hash());
        b.features.window = [7, 9];
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn minimal_file() {
        let cfg = RunConfig::from_toml("schema = 1\n[features]\nwindow = [5, 5]\nnormalized = true\nn_slc = 3\n").unwrap();
        assert_eq!(cfg.features.n_slc, Some(3));
        assert_eq!(cfg.dataset, DatasetConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "schema = 2",
            "schema = 1\nbogus = 1",
            "schema = 1\n[features]\nwindow = [4, 5]\nnormalized = false",
            "schema = 1\n[features]\nwindow = [5, 5]\nnormalized = false\nn_slc = 5",
            "schema = 1\n[dataset]\npatch_size = 30\ntrain_stride = 30\nheight_filter_m = 0.0\nfractions = [0.64, 0.2, 0.16]",
            "schema = 1\n[stack]\nheadings = []\npolarization = \"VV\"",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}
