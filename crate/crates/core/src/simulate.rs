//! Two-layer forward model: ground and canopy-top point scatterers per pixel.
//!
//! For pixel `p` and image `i`:
//!
//! ```text
//! u_i(p) = s_g(p)·exp(j·kz_i·z_g(p)) + s_c(p)·exp(j·kz_i·z_c(p)) + w_i(p)
//! ```
//!
//! with `z_g = dtm`, `z_c = dtm + chm`. Without speckle the amplitudes are
//! real constants; with speckle they are circular complex Gaussians of mean
//! power `amplitude²`. The noise `w` is circular complex Gaussian with power
//! `(ground² + canopy²) / 10^(snr/10)`.
//!
//! Each pixel draws from its own SplitMix64 stream keyed on `(seed, row, col)`
//! in a fixed order: ground amplitude, canopy amplitude, then one noise sample
//! per image. Draws happen whether or not they are used, so toggling speckle
//! or noise never shifts the other streams.

use crate::error::{invalid, Result};
use crate::geometry::{AcquisitionGeometry, SlcStack};
use crate::math::{cis, db_to_linear};
use crate::raster::{Grid, HeightKind, HeightRaster};
use crate::rng::SplitMix64;
use crate::C64;
use alloc::vec::Vec;

pub use crate::geometry::rayleigh_resolution;

/// Recipe for a synthetic height raster.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum HeightRecipe {
    Constant { value: f64 },
    /// `base + row_slope·row + col_slope·col`.
    Ramp { base: f64, row_slope: f64, col_slope: f64 },
    /// Square blocks of side `size` pixels; block `(bi, bj)` takes
    /// `values[(bi + bj) % values.len()]`.
    Blocks { size: usize, values: Vec<f64> },
}

impl HeightRecipe {
    pub fn render(&self, rows: usize, cols: usize) -> Result<Grid<f64>> {
        match self {
            HeightRecipe::Constant { value } => Ok(Grid::filled(rows, cols, *value)),
            HeightRecipe::Ramp { base, row_slope, col_slope } => Ok(Grid::from_fn(rows, cols, |r, c| {
                base + row_slope * r as f64 + col_slope * c as f64
            })),
            HeightRecipe::Blocks { size, values } => {
                if *size == 0 || values.is_empty() {
                    return Err(invalid("block recipe needs a positive size and at least one value"));
                }
                Ok(Grid::from_fn(rows, cols, |r, c| values[(r / size + c / size) % values.len()]))
            }
        }
    }
}

/// Signal-to-noise ratio of the simulated acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Noiseless,
    Db(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    pub dtm: HeightRecipe,
    pub chm: HeightRecipe,
    pub ground_amplitude: f64,
    pub canopy_amplitude: f64,
    pub speckle: bool,
    pub snr: Snr,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid("scene shape must be positive"));
        }
        let (g, c) = (self.ground_amplitude, self.canopy_amplitude);
        if !(g >= 0.0) || !(c >= 0.0) || !g.is_finite() || !c.is_finite() {
            return Err(invalid("amplitudes must be finite and non-negative"));
        }
        if g == 0.0 && c == 0.0 {
            return Err(invalid("at least one of ground and canopy amplitude must be positive"));
        }
        if let Snr::Db(db) = self.snr {
            if !db.is_finite() {
                return Err(invalid("snr must be finite or noiseless"));
            }
        }
        Ok(())
    }

    fn noise_power(&self) -> f64 {
        match self.snr {
            Snr::Noiseless => 0.0,
            Snr::Db(db) => {
                let signal = self.ground_amplitude * self.ground_amplitude
                    + self.canopy_amplitude * self.canopy_amplitude;
                signal / db_to_linear(db)
            }
        }
    }
}

/// Rendered truth rasters plus everything needed to synthesise rows.
#[derive(Debug, Clone)]
pub struct Scene {
    spec: SceneSpec,
    kz: Vec<f64>,
    pub dtm: HeightRaster,
    pub chm: HeightRaster,
}

impl Scene {
    pub fn new(spec: SceneSpec, geometry: &AcquisitionGeometry) -> Result<Self> {
        spec.validate()?;
        if geometry.is_empty() {
            return Err(invalid("geometry needs at least one image"));
        }
        let dtm = HeightRaster::new(HeightKind::Dtm, spec.dtm.render(spec.rows, spec.cols)?);
        let chm = HeightRaster::new(HeightKind::Chm, spec.chm.render(spec.rows, spec.cols)?);
        chm.check_chm()?;
        Ok(Self { kz: geometry.kz(), spec, dtm, chm })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    /// Samples of one azimuth row, laid out `[image][col]`.
    pub fn synthesize_row(&self, row: usize) -> Vec<Vec<C64>> {
        let spec = &self.spec;
        let n = self.kz.len();
        let noise_power = spec.noise_power();
        let mut out: Vec<Vec<C64>> = (0..n).map(|_| Vec::with_capacity(spec.cols)).collect();
        for col in 0..spec.cols {
            let mut rng = SplitMix64::for_pixel(spec.seed, row, col);
            let speckle_g = rng.complex_normal(spec.ground_amplitude * spec.ground_amplitude);
            let speckle_c = rng.complex_normal(spec.canopy_amplitude * spec.canopy_amplitude);
            let (s_g, s_c) = if spec.speckle {
                (speckle_g, speckle_c)
            } else {
                (C64::new(spec.ground_amplitude, 0.0), C64::new(spec.canopy_amplitude, 0.0))
            };
            let z_g = *self.dtm.values.get(row, col);
            let z_c = z_g + *self.chm.values.get(row, col);
            for (i, &kz) in self.kz.iter().enumerate() {
                let noise = rng.complex_normal(noise_power);
                let w = if noise_power > 0.0 { noise } else { C64::new(0.0, 0.0) };
                out[i].push(s_g * cis(kz * z_g) + s_c * cis(kz * z_c) + w);
            }
        }
        out
    }

    /// Assembles a stack from rows produced by [`Scene::synthesize_row`].
    pub fn assemble(&self, geometry: &AcquisitionGeometry, rows: Vec<Vec<Vec<C64>>>) -> Result<SlcStack> {
        let n = self.kz.len();
        let mut layers: Vec<Vec<C64>> =
            (0..n).map(|_| Vec::with_capacity(self.spec.rows * self.spec.cols)).collect();
        for row in rows {
            for (layer, samples) in layers.iter_mut().zip(row) {
                layer.extend(samples);
            }
        }
        let layers = layers
            .into_iter()
            .map(|data| Grid::from_vec(self.spec.rows, self.spec.cols, data))
            .collect::<Result<Vec<_>>>()?;
        SlcStack::new(geometry.clone(), layers)
    }
}

/// Synthesises a full stack and its DTM/CHM truth.
pub fn synthesize_slc_stack(
    spec: &SceneSpec,
    geometry: &AcquisitionGeometry,
) -> Result<(SlcStack, HeightRaster, HeightRaster)> {
    let scene = Scene::new(spec.clone(), geometry)?;
    let rows = (0..spec.rows).map(|r| scene.synthesize_row(r)).collect();
    let stack = scene.assemble(geometry, rows)?;
    Ok((stack, scene.dtm, scene.chm))
}
