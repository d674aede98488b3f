//! Row-parallel drivers over the core kernels. Each row is computed
//! independently and rows are gathered in order, so results do not depend
//! on the thread count.

use rayon::prelude::*;
use rayon::ThreadPool;
use tomochm_core::geometry::{AcquisitionGeometry, SlcStack};
use tomochm_core::raster::{Grid, HeightKind, HeightRaster};
use tomochm_core::simulate::{Scene, SceneSpec};
use tomochm_core::specest::{baseline_row, SpectralMethod, SteeringTable, VerticalGrid};
use tomochm_core::tomo::{estimate_covariance_row, ground_steer_row, CovarianceField, Window};
use tomochm_core::C64;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "TOMOCHM_THREADS";

/// Explicit count, then `TOMOCHM_THREADS`, then all cores (`None`).
pub fn resolve_threads(explicit: Option<usize>) -> Result<Option<usize>> {
    if explicit.is_some() {
        return Ok(explicit);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        _ => Ok(None),
    }
}

pub fn pool(threads: Option<usize>) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn layers_from_rows(rows: usize, cols: usize, per_row: Vec<Vec<Vec<C64>>>, n: usize) -> Result<Vec<Grid<C64>>> {
    let mut layers: Vec<Vec<C64>> = (0..n).map(|_| Vec::with_capacity(rows * cols)).collect();
    for row in per_row {
        for (layer, samples) in layers.iter_mut().zip(row) {
            layer.extend(samples);
        }
    }
    Ok(layers.into_iter().map(|d| Grid::from_vec(rows, cols, d)).collect::<tomochm_core::Result<_>>()?)
}

pub fn simulate(
    pool: &ThreadPool,
    spec: &SceneSpec,
    geometry: &AcquisitionGeometry,
) -> Result<(SlcStack, HeightRaster, HeightRaster)> {
    let scene = Scene::new(spec.clone(), geometry)?;
    let rows = pool.install(|| (0..spec.rows).into_par_iter().map(|r| scene.synthesize_row(r)).collect());
    let stack = scene.assemble(geometry, rows)?;
    Ok((stack, scene.dtm, scene.chm))
}

pub fn ground_steer(pool: &ThreadPool, stack: &SlcStack, dtm: &HeightRaster) -> Result<SlcStack> {
    let (rows, cols) = stack.shape();
    let per_row = pool.install(|| {
        (0..rows).into_par_iter().map(|r| ground_steer_row(stack, dtm, r)).collect::<tomochm_core::Result<Vec<_>>>()
    })?;
    let layers = layers_from_rows(rows, cols, per_row, stack.len())?;
    Ok(SlcStack::new(stack.geometry.clone(), layers)?)
}

pub fn covariance(pool: &ThreadPool, stack: &SlcStack, window: Window, normalized: bool) -> Result<CovarianceField> {
    window.validate()?;
    let (rows, cols) = stack.shape();
    let per_row = pool.install(|| {
        (0..rows)
            .into_par_iter()
            .map(|r| estimate_covariance_row(stack, window, normalized, r))
            .collect::<tomochm_core::Result<Vec<_>>>()
    })?;
    Ok(CovarianceField::from_rows(rows, cols, stack.len(), window, normalized, per_row)?)
}

/// Full-tomography CHM over a ground-steered stack.
pub fn baseline(
    pool: &ThreadPool,
    steered: &SlcStack,
    window: Window,
    grid: &VerticalGrid,
    method: SpectralMethod,
    threshold_db: f64,
) -> Result<HeightRaster> {
    window.validate()?;
    let table = SteeringTable::new(&steered.geometry.kz(), *grid)?;
    let (rows, cols) = steered.shape();
    let per_row = pool.install(|| {
        (0..rows)
            .into_par_iter()
            .map(|r| baseline_row(steered, window, &table, method, threshold_db, r))
            .collect::<tomochm_core::Result<Vec<_>>>()
    })?;
    let values = Grid::from_vec(rows, cols, per_row.into_iter().flatten().collect())?;
    Ok(HeightRaster::new(HeightKind::Chm, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tomochm_core::geometry::Polarization;
    use tomochm_core::simulate::{synthesize_slc_stack, HeightRecipe, Snr};
    use tomochm_core::specest::tomo_chm_baseline;
    use tomochm_core::tomo::estimate_covariance;

    fn scene() -> (SceneSpec, AcquisitionGeometry) {
        let spec = SceneSpec {
            rows: 20,
            cols: 13,
            dtm: HeightRecipe::Ramp { base: 50.0, row_slope: 0.5, col_slope: 0.1 },
            chm: HeightRecipe::Blocks { size: 5, values: vec![3.0, 18.0] },
            ground_amplitude: 1.0,
            canopy_amplitude: 0.8,
            speckle: true,
            snr: Snr::Db(15.0),
            seed: 9,
        };
        (spec, AcquisitionGeometry::desk_seven(3.0, Polarization::VV).unwrap())
    }

    #[test]
    fn matches_serial_kernels() {
        let (spec, g) = scene();
        let serial = synthesize_slc_stack(&spec, &g).unwrap();
        for threads in [1, 3] {
            let pool = pool(Some(threads)).unwrap();
            let (stack, dtm, _) = simulate(&pool, &spec, &g).unwrap();
            assert_eq!(stack.layers, serial.0.layers);
            let steered = ground_steer(&pool, &stack, &dtm).unwrap();
            assert_eq!(steered.layers, tomochm_core::tomo::ground_steer(&stack, &dtm).unwrap().layers);
            let w = Window::new(3, 5).unwrap();
            assert_eq!(
                covariance(&pool, &stack, w, true).unwrap().as_slice(),
                estimate_covariance(&stack, w, true).unwrap().as_slice()
            );
            let grid = VerticalGrid::default();
            let par = baseline(&pool, &steered, w, &grid, SpectralMethod::Beamforming, -3.0).unwrap();
            let ser = tomo_chm_baseline(&stack, &dtm, w, &grid, SpectralMethod::Beamforming, -3.0).unwrap();
            assert_eq!(par.values, ser.values);
        }
    }
}
