use crate::error::{Error, Result};
use crate::geometry::SlcStack;
use crate::math::cis;
use crate::raster::{Grid, HeightRaster};
use crate::C64;
use alloc::vec::Vec;

fn check(stack: &SlcStack, dtm: &HeightRaster) -> Result<()> {
    if dtm.shape() != stack.shape() {
        return Err(Error::ShapeMismatch { what: "dtm", expected: stack.shape(), found: dtm.shape() });
    }
    Ok(())
}

/// Steered samples of one row, laid out `[image][col]`.
pub fn ground_steer_row(stack: &SlcStack, dtm: &HeightRaster, row: usize) -> Result<Vec<Vec<C64>>> {
    check(stack, dtm)?;
    let cols = stack.shape().1;
    let heights: Vec<f64> = (0..cols)
        .map(|col| dtm.value(row, col).ok_or(Error::Nodata { row, col }))
        .collect::<Result<_>>()?;
    Ok(stack
        .layers
        .iter()
        .zip(stack.geometry.images())
        .map(|(layer, image)| {
            let kz = image.kz_rad_per_m;
            layer
                .row(row)
                .iter()
                .zip(&heights)
                .map(|(u, &z)| if kz == 0.0 { *u } else { u * cis(-kz * z) })
                .collect()
        })
        .collect())
}

/// Removes the terrain phase `kz_i·dtm` from every image so the ground
/// response sits at zero height. The master image is returned unchanged.
pub fn ground_steer(stack: &SlcStack, dtm: &HeightRaster) -> Result<SlcStack> {
    check(stack, dtm)?;
    let (rows, cols) = stack.shape();
    let mut layers: Vec<Vec<C64>> = (0..stack.len()).map(|_| Vec::with_capacity(rows * cols)).collect();
    for row in 0..rows {
        for (layer, samples) in layers.iter_mut().zip(ground_steer_row(stack, dtm, row)?) {
            layer.extend(samples);
        }
    }
    let layers = layers
        .into_iter()
        .map(|d| Grid::from_vec(rows, cols, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(SlcStack { geometry: stack.geometry.clone(), layers })
}
