//! Stack directories: `stack.json` plus one `slc_###.npy` per image, and
//! float32 height rasters with NaN nodata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tomochm_core::geometry::{AcquisitionGeometry, ImageSpec, Polarization, SlcStack};
use tomochm_core::raster::{Grid, HeightKind, HeightRaster};

use crate::error::{Error, Result};
use crate::hash::{read_json, write_json};
use crate::npy;

pub const STACK_MANIFEST: &str = "stack.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: u32,
    pub perpendicular_baseline_m: f64,
    pub kz_rad_per_m: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub wavelength_m: f64,
    pub reference_range_m: f64,
    pub incidence_rad: f64,
    pub heading: String,
    pub polarization: Polarization,
    pub images: Vec<ImageEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

pub fn slc_file_name(index: usize) -> String {
    format!("slc_{index:03}.npy")
}

pub fn write_stack(dir: &Path, stack: &SlcStack, config_hash: Option<&str>) -> Result<()> {
    let (rows, cols) = stack.shape();
    let g = &stack.geometry;
    let images = g
        .images()
        .iter()
        .enumerate()
        .map(|(i, rec)| ImageEntry {
            id: rec.id,
            perpendicular_baseline_m: rec.perpendicular_baseline_m,
            kz_rad_per_m: rec.kz_rad_per_m,
            file: slc_file_name(i),
        })
        .collect::<Vec<_>>();
    for (entry, layer) in images.iter().zip(&stack.layers) {
        npy::write_c64(&dir.join(&entry.file), &[rows, cols], layer.as_slice())?;
    }
    let manifest = StackManifest {
        rows,
        cols,
        dtype: "<c8".into(),
        wavelength_m: g.wavelength_m,
        reference_range_m: g.reference_range_m,
        incidence_rad: g.incidence_rad,
        heading: g.heading_label.clone(),
        polarization: g.polarization,
        images,
        config_hash: config_hash.map(str::to_owned),
    };
    write_json(&dir.join(STACK_MANIFEST), &manifest)
}

pub fn read_manifest(dir: &Path) -> Result<StackManifest> {
    read_json(&dir.join(STACK_MANIFEST))
}

pub fn read_stack(dir: &Path) -> Result<SlcStack> {
    let path = dir.join(STACK_MANIFEST);
    let m = read_manifest(dir)?;
    if m.dtype != "<c8" {
        return Err(Error::format(&path, format!("unsupported dtype {}", m.dtype)));
    }
    let specs: Vec<ImageSpec> = m
        .images
        .iter()
        .map(|e| ImageSpec { id: e.id, perpendicular_baseline_m: e.perpendicular_baseline_m, kz_rad_per_m: Some(e.kz_rad_per_m) })
        .collect();
    let geometry = AcquisitionGeometry::new(
        m.wavelength_m,
        m.reference_range_m,
        m.incidence_rad,
        m.heading.clone(),
        m.polarization,
        &specs,
    )?;
    // Geometry sorts by id; load layers in that order.
    let mut layers = Vec::with_capacity(m.images.len());
    for rec in geometry.images() {
        let entry = m.images.iter().find(|e| e.id == rec.id).expect("ids come from the manifest");
        let file = dir.join(&entry.file);
        let a = npy::read_c64(&file)?;
        if a.shape != [m.rows, m.cols] {
            return Err(Error::format(&file, format!("shape {:?}, manifest says ({}, {})", a.shape, m.rows, m.cols)));
        }
        layers.push(Grid::from_vec(m.rows, m.cols, a.data)?);
    }
    Ok(SlcStack::new(geometry, layers)?)
}

pub fn write_height(path: &Path, raster: &HeightRaster) -> Result<()> {
    let (rows, cols) = raster.shape();
    let values: Vec<f64> =
        raster.values.as_slice().iter().map(|v| if raster.is_nodata(*v) { f64::NAN } else { *v }).collect();
    npy::write_f64_as_f32(path, &[rows, cols], &values)
}

pub fn read_height(path: &Path, kind: HeightKind) -> Result<HeightRaster> {
    let a = npy::read_f32_as_f64(path)?;
    a.expect_ndim(path, 2)?;
    let raster = HeightRaster::new(kind, Grid::from_vec(a.shape[0], a.shape[1], a.data)?);
    if kind == HeightKind::Chm {
        raster.check_chm()?;
    }
    Ok(raster)
}

pub fn truth_dir(stack_dir: &Path) -> PathBuf {
    stack_dir.join("truth")
}
