//! Classical full-tomography comparator: vertical power spectra from a
//! per-pixel covariance and a profile based canopy height estimate.

use crate::error::{invalid, Error, Result};
use crate::geometry::SlcStack;
use crate::linalg::{CMatrix, Cholesky};
use crate::math::{cis, db_to_linear, floor};
use crate::raster::{Grid, HeightKind, HeightRaster};
use crate::tomo::{estimate_covariance_row, ground_steer, Window};
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Default diagonal loading factor for Capon.
pub const DEFAULT_LOADING: f64 = 1e-3;
/// Default relative threshold for [`chm_from_profile`].
pub const DEFAULT_THRESHOLD_DB: f64 = -3.0;

/// Uniform height axis `z_k = z_min + k·dz`, `z_k ≤ z_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerticalGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub dz: f64,
}

impl Default for VerticalGrid {
    fn default() -> Self {
        Self { z_min: -10.0, z_max: 40.0, dz: 0.5 }
    }
}

impl VerticalGrid {
    pub fn new(z_min: f64, z_max: f64, dz: f64) -> Result<Self> {
        let g = Self { z_min, z_max, dz };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dz > 0.0) || !(self.z_max > self.z_min) || !self.z_min.is_finite() || !self.z_max.is_finite() {
            return Err(invalid("vertical grid needs z_max > z_min and dz > 0"));
        }
        if self.len() < 8 {
            return Err(invalid(format!("vertical grid has {} samples, need at least 8", self.len())));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        floor((self.z_max - self.z_min) / self.dz + 1e-9) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn z(&self, k: usize) -> f64 {
        self.z_min + k as f64 * self.dz
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.z(k)).collect()
    }
}

/// Non-negative power over a [`VerticalGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    pub power: Vec<f64>,
}

impl PowerProfile {
    /// Index of the first global maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.power.iter().enumerate() {
            if p > self.power[best] {
                best = k;
            }
        }
        best
    }

    pub fn peak(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }
}

/// `a_i(z) = exp(j·kz_i·z)`.
pub fn steering_vector(kz: &[f64], z: f64) -> Vec<C64> {
    kz.iter().map(|&k| cis(k * z)).collect()
}

/// Steering vectors for every height of a grid, computed once and shared
/// across pixels.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    n: usize,
    grid: VerticalGrid,
    vectors: Vec<C64>,
}

impl SteeringTable {
    pub fn new(kz: &[f64], grid: VerticalGrid) -> Result<Self> {
        grid.validate()?;
        if kz.is_empty() {
            return Err(invalid("steering needs at least one image"));
        }
        let vectors = (0..grid.len()).flat_map(|k| steering_vector(kz, grid.z(k))).collect();
        Ok(Self { n: kz.len(), grid, vectors })
    }

    pub fn grid(&self) -> &VerticalGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn vector(&self, k: usize) -> &[C64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    fn check(&self, r: &CMatrix) -> Result<()> {
        if r.n() != self.n {
            return Err(invalid(format!("covariance is {}x{}, steering expects {}", r.n(), r.n(), self.n)));
        }
        r.check_hermitian()
    }

    /// `P(z) = aᴴ·R·a / n²` on the Hermitian part of `R`.
    pub fn beamforming(&self, r: &CMatrix) -> Result<PowerProfile> {
        self.check(r)?;
        let n = self.n;
        let sym = hermitian_part(r);
        let norm = (n * n) as f64;
        let power = (0..self.grid.len())
            .map(|k| (sym.quadratic_form(self.vector(k)).re / norm).max(0.0))
            .collect();
        Ok(PowerProfile { power })
    }

    /// `P(z) = 1 / (aᴴ·(R + εI)⁻¹·a)` with `ε = loading·trace(R)/n`.
    pub fn capon(&self, r: &CMatrix, loading: f64) -> Result<PowerProfile> {
        self.check(r)?;
        if !(loading >= 0.0) {
            return Err(invalid("diagonal loading must be non-negative"));
        }
        let n = self.n;
        let eps = loading * r.trace().re / n as f64;
        let mut loaded = hermitian_part(r);
        for i in 0..n {
            loaded.set(i, i, loaded.get(i, i) + eps);
        }
        let chol = Cholesky::new(&loaded)?;
        let mut scratch = vec![C64::new(0.0, 0.0); n];
        let power = (0..self.grid.len())
            .map(|k| {
                let q = chol.inverse_quadratic_form(self.vector(k), &mut scratch);
                if q > 0.0 && q.is_finite() {
                    Ok(1.0 / q)
                } else {
                    Err(Error::Singular)
                }
            })
            .collect::<Result<_>>()?;
        Ok(PowerProfile { power })
    }

    pub fn spectrum(&self, r: &CMatrix, method: SpectralMethod) -> Result<PowerProfile> {
        match method {
            SpectralMethod::Beamforming => self.beamforming(r),
            SpectralMethod::Capon { loading } => self.capon(r, loading),
        }
    }
}

fn hermitian_part(r: &CMatrix) -> CMatrix {
    let n = r.n();
    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, (r.get(i, j) + r.get(j, i).conj()) * 0.5);
        }
    }
    out
}

/// Beamforming (matched filter) vertical spectrum.
pub fn beamforming_spectrum(r: &CMatrix, kz: &[f64], grid: &VerticalGrid) -> Result<PowerProfile> {
    SteeringTable::new(kz, *grid)?.beamforming(r)
}

/// Capon (minimum variance) vertical spectrum with diagonal loading.
pub fn capon_spectrum(r: &CMatrix, kz: &[f64], grid: &VerticalGrid, loading: f64) -> Result<PowerProfile> {
    SteeringTable::new(kz, *grid)?.capon(r, loading)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum SpectralMethod {
    Beamforming,
    Capon { loading: f64 },
}

/// Highest height whose power reaches `peak·10^(threshold_db/10)`, floored
/// at 0 (ground-steered profiles put the terrain at zero).
pub fn chm_from_profile(profile: &PowerProfile, grid: &VerticalGrid, threshold_db: f64) -> Result<f64> {
    if profile.power.len() != grid.len() {
        return Err(invalid("profile length differs from the vertical grid"));
    }
    let peak = profile.peak();
    if !(peak > 0.0) {
        return Err(Error::ZeroProfile);
    }
    let level = peak * db_to_linear(threshold_db);
    let top = profile
        .power
        .iter()
        .rposition(|&p| p >= level)
        .expect("the peak itself qualifies");
    Ok(grid.z(top).max(0.0))
}

/// Width of the mainlobe around the global maximum, measured where the
/// profile falls `drop_db` below the peak. Crossings are linearly
/// interpolated; a lobe reaching the grid edge is cut there.
pub fn mainlobe_width(profile: &PowerProfile, grid: &VerticalGrid, drop_db: f64) -> Result<f64> {
    let peak = profile.peak();
    if !(peak > 0.0) {
        return Err(Error::ZeroProfile);
    }
    let level = peak * db_to_linear(-drop_db.abs());
    let p = &profile.power;
    let k0 = profile.argmax();
    let crossing = |inside: usize, outside: usize| {
        let (pi, po) = (p[inside], p[outside]);
        let t = (pi - level) / (pi - po);
        grid.z(inside) + t * (grid.z(outside) - grid.z(inside))
    };
    let mut lo = k0;
    while lo > 0 && p[lo - 1] >= level {
        lo -= 1;
    }
    let left = if lo == 0 { grid.z(0) } else { crossing(lo, lo - 1) };
    let mut hi = k0;
    while hi + 1 < p.len() && p[hi + 1] >= level {
        hi += 1;
    }
    let right = if hi + 1 == p.len() { grid.z(hi) } else { crossing(hi, hi + 1) };
    Ok(right - left)
}

/// Per-row worker of [`tomo_chm_baseline`]; `steered` must already be ground
/// steered.
pub fn baseline_row(
    steered: &SlcStack,
    window: Window,
    table: &SteeringTable,
    method: SpectralMethod,
    threshold_db: f64,
    row: usize,
) -> Result<Vec<f64>> {
    let n = steered.len();
    let nn = n * n;
    let cov = estimate_covariance_row(steered, window, false, row)?;
    cov.chunks_exact(nn)
        .map(|m| {
            let r = CMatrix::from_vec(n, m.to_vec())?;
            let profile = table.spectrum(&r, method)?;
            chm_from_profile(&profile, table.grid(), threshold_db)
        })
        .collect()
}

/// Full-tomography CHM: ground steer, multilook, spectrum, profile threshold.
pub fn tomo_chm_baseline(
    stack: &SlcStack,
    dtm: &HeightRaster,
    window: Window,
    grid: &VerticalGrid,
    method: SpectralMethod,
    threshold_db: f64,
) -> Result<HeightRaster> {
    window.validate()?;
    let steered = ground_steer(stack, dtm)?;
    let table = SteeringTable::new(&stack.geometry.kz(), *grid)?;
    let (rows, cols) = stack.shape();
    let mut data = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        data.extend(baseline_row(&steered, window, &table, method, threshold_db, row)?);
    }
    Ok(HeightRaster::new(HeightKind::Chm, Grid::from_vec(rows, cols, data)?))
}
