//! Evaluation protocol: masked metrics and the centered strided error.
//!
//! A region is tiled with `P × P` windows at stride `s = P/2`. Only the
//! central `s × s` crop (offset `P/4`) of each prediction is kept. Crops
//! never overlap and assemble into a mosaic covering the region minus a
//! `P/4` frame; metrics are computed over the masked-true mosaic pixels.

use crate::datapipe::Split;
use crate::error::{invalid, Error, Result};
use crate::math::{sqrt, CompensatedSum};
use crate::raster::{Grid, HeightKind, HeightRaster};
use crate::tomo::FeatureStack;
use alloc::format;
use alloc::vec::Vec;

fn check_lengths(pred: &[f64], truth: &[f64], mask: &[bool]) -> Result<()> {
    if pred.len() != truth.len() || mask.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            what: "metric inputs",
            expected: (truth.len(), 1),
            found: (pred.len(), mask.len()),
        });
    }
    Ok(())
}

fn masked_residuals<'a>(pred: &'a [f64], truth: &'a [f64], mask: &'a [bool]) -> impl Iterator<Item = f64> + 'a {
    pred.iter().zip(truth).zip(mask).filter(|(_, m)| **m).map(|((p, t), _)| p - t)
}

/// Mean absolute error over masked-true pixels.
pub fn mae(pred: &[f64], truth: &[f64], mask: &[bool]) -> Result<f64> {
    check_lengths(pred, truth, mask)?;
    let mut n = 0usize;
    let sum: CompensatedSum = masked_residuals(pred, truth, mask).inspect(|_| n += 1).map(f64::abs).collect();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum.value() / n as f64)
}

/// Root mean squared error over masked-true pixels.
pub fn rmse(pred: &[f64], truth: &[f64], mask: &[bool]) -> Result<f64> {
    check_lengths(pred, truth, mask)?;
    let mut n = 0usize;
    let sum: CompensatedSum = masked_residuals(pred, truth, mask).inspect(|_| n += 1).map(|d| d * d).collect();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sqrt(sum.value() / n as f64))
}

/// `1 − SS_res/SS_tot` with `SS_tot` about the masked truth mean.
pub fn r2(pred: &[f64], truth: &[f64], mask: &[bool]) -> Result<f64> {
    check_lengths(pred, truth, mask)?;
    let valid: Vec<(f64, f64)> = pred.iter().zip(truth).zip(mask).filter(|(_, m)| **m).map(|((p, t), _)| (*p, *t)).collect();
    if valid.is_empty() {
        return Err(Error::EmptyMask);
    }
    if valid.len() < 2 {
        return Err(invalid("R² needs at least two pixels"));
    }
    let mean = valid.iter().map(|(_, t)| *t).collect::<CompensatedSum>().value() / valid.len() as f64;
    let ss_tot = valid.iter().map(|(_, t)| (t - mean) * (t - mean)).collect::<CompensatedSum>().value();
    let ss_res = valid.iter().map(|(p, t)| (p - t) * (p - t)).collect::<CompensatedSum>().value();
    if !(ss_tot > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Window origins at stride `P/2` that fit entirely inside `rect`.
pub fn rect_tiles(rect: Rect, patch: usize) -> Result<Vec<(usize, usize)>> {
    check_patch(patch)?;
    if rect.rows < patch || rect.cols < patch {
        return Err(invalid(format!(
            "region {}x{} is smaller than the patch {patch}",
            rect.rows, rect.cols
        )));
    }
    let s = patch / 2;
    let mut out = Vec::new();
    for r in (0..=rect.rows - patch).step_by(s) {
        for c in (0..=rect.cols - patch).step_by(s) {
            out.push((rect.row + r, rect.col + c));
        }
    }
    Ok(out)
}

/// Window origins at multiples of `P/2` whose footprint lies inside the
/// region labelled `split`.
pub fn split_tiles(labels: &Grid<Option<Split>>, split: Split, patch: usize) -> Result<Vec<(usize, usize)>> {
    check_patch(patch)?;
    let (rows, cols) = labels.shape();
    let mut out = Vec::new();
    if rows < patch || cols < patch {
        return Ok(out);
    }
    for r0 in (0..=rows - patch).step_by(patch / 2) {
        for c0 in (0..=cols - patch).step_by(patch / 2) {
            if (r0..r0 + patch).all(|r| labels.row(r)[c0..c0 + patch].iter().all(|l| *l == Some(split))) {
                out.push((r0, c0));
            }
        }
    }
    Ok(out)
}

fn check_patch(patch: usize) -> Result<()> {
    if patch < 4 || !patch.is_multiple_of(4) {
        // P/2 crops offset by P/4 need P divisible by 4.
        return Err(invalid(format!("patch size {patch} must be a positive multiple of 4")));
    }
    Ok(())
}

/// Features of one window, channel-major `(C, P, P)`.
#[derive(Debug, Clone)]
pub struct FeaturePatch {
    pub row: usize,
    pub col: usize,
    pub size: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeaturePatch {
    pub fn extract(features: Option<&FeatureStack>, row: usize, col: usize, size: usize) -> Self {
        let Some(f) = features else {
            return Self { row, col, size, channels: 0, data: Vec::new() };
        };
        let channels = f.channels();
        let mut data = Vec::with_capacity(channels * size * size);
        for k in 0..channels {
            for r in row..row + size {
                for c in col..col + size {
                    data.push(f.get(r, c, k));
                }
            }
        }
        Self { row, col, size, channels, data }
    }
}

/// A square crop placed at `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crop {
    pub row: usize,
    pub col: usize,
    pub size: usize,
    pub values: Vec<f64>,
}

/// Places crops on a `rows × cols` raster; uncovered pixels are nodata.
pub fn mosaic_reconstruction(crops: &[Crop], rows: usize, cols: usize) -> Result<HeightRaster> {
    let mut values = Grid::filled(rows, cols, f64::NAN);
    let mut covered = Grid::filled(rows, cols, false);
    for crop in crops {
        if crop.values.len() != crop.size * crop.size {
            return Err(invalid("crop buffer is not size²"));
        }
        if crop.row + crop.size > rows || crop.col + crop.size > cols {
            return Err(invalid(format!("crop at ({}, {}) leaves the raster", crop.row, crop.col)));
        }
        for i in 0..crop.size {
            for j in 0..crop.size {
                let (r, c) = (crop.row + i, crop.col + j);
                if *covered.get(r, c) {
                    return Err(Error::OverlappingCrops { row: r, col: c });
                }
                *covered.get_mut(r, c) = true;
                *values.get_mut(r, c) = crop.values[i * crop.size + j];
            }
        }
    }
    Ok(HeightRaster::new(HeightKind::Chm, values))
}

/// Outcome of [`centered_strided_error`].
#[derive(Debug, Clone)]
pub struct StridedEval {
    pub mae: f64,
    pub rmse: f64,
    /// `None` when fewer than two pixels are counted or truth is constant.
    pub r2: Option<f64>,
    pub counted_px: usize,
    /// Pixels of the tiled footprint not covered by any central crop.
    pub border_excluded_px: usize,
    pub mosaic_pred: HeightRaster,
    pub mosaic_truth: HeightRaster,
}

/// Runs `predict` on every window in `tiles` and scores the central crops.
///
/// `predict` receives the window's features (empty when `features` is
/// `None`) and returns `P·P` row-major heights.
pub fn centered_strided_error<F>(
    mut predict: F,
    features: Option<&FeatureStack>,
    truth: &Grid<f64>,
    mask: &Grid<bool>,
    tiles: &[(usize, usize)],
    patch: usize,
) -> Result<StridedEval>
where
    F: FnMut(&FeaturePatch) -> Result<Vec<f64>>,
{
    check_patch(patch)?;
    let (rows, cols) = truth.shape();
    if mask.shape() != truth.shape() {
        return Err(Error::ShapeMismatch { what: "mask", expected: truth.shape(), found: mask.shape() });
    }
    if let Some(f) = features {
        if f.shape() != truth.shape() {
            return Err(Error::ShapeMismatch { what: "features", expected: truth.shape(), found: f.shape() });
        }
    }
    if tiles.is_empty() {
        return Err(invalid("region holds no complete window"));
    }
    let (s, off) = (patch / 2, patch / 4);
    let mut pred_crops = Vec::with_capacity(tiles.len());
    let mut truth_crops = Vec::with_capacity(tiles.len());
    let mut footprint = Grid::filled(rows, cols, false);
    for &(r0, c0) in tiles {
        if r0 + patch > rows || c0 + patch > cols {
            return Err(invalid(format!("window at ({r0}, {c0}) leaves the raster")));
        }
        let input = FeaturePatch::extract(features, r0, c0, patch);
        let out = predict(&input)?;
        if out.len() != patch * patch {
            return Err(invalid(format!("prediction has {} values, expected {}", out.len(), patch * patch)));
        }
        let mut pv = Vec::with_capacity(s * s);
        let mut tv = Vec::with_capacity(s * s);
        for i in 0..s {
            for j in 0..s {
                pv.push(out[(off + i) * patch + off + j]);
                tv.push(*truth.get(r0 + off + i, c0 + off + j));
            }
        }
        for r in r0..r0 + patch {
            for c in c0..c0 + patch {
                *footprint.get_mut(r, c) = true;
            }
        }
        pred_crops.push(Crop { row: r0 + off, col: c0 + off, size: s, values: pv });
        truth_crops.push(Crop { row: r0 + off, col: c0 + off, size: s, values: tv });
    }
    let mosaic_pred = mosaic_reconstruction(&pred_crops, rows, cols)?;
    let mosaic_truth = mosaic_reconstruction(&truth_crops, rows, cols)?;

    let mut covered = Grid::filled(rows, cols, false);
    for crop in &pred_crops {
        for r in crop.row..crop.row + s {
            for c in crop.col..crop.col + s {
                *covered.get_mut(r, c) = true;
            }
        }
    }
    let mut p = Vec::new();
    let mut t = Vec::new();
    for (i, &is_covered) in covered.as_slice().iter().enumerate() {
        if is_covered && mask.as_slice()[i] {
            p.push(mosaic_pred.values.as_slice()[i]);
            t.push(mosaic_truth.values.as_slice()[i]);
        }
    }
    let covered = covered.as_slice().iter().filter(|v| **v).count();
    let all = alloc::vec![true; p.len()];
    let mae = mae(&p, &t, &all)?;
    let rmse = rmse(&p, &t, &all)?;
    let r2 = r2(&p, &t, &all).ok();
    let footprint_px = footprint.as_slice().iter().filter(|v| **v).count();
    Ok(StridedEval {
        mae,
        rmse,
        r2,
        counted_px: p.len(),
        border_excluded_px: footprint_px - covered,
        mosaic_pred,
        mosaic_truth,
    })
}
