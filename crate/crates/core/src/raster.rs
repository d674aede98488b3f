//! Row-major 2D rasters.

use crate::error::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// A dense row-major 2D array. Row index is azimuth, column index is range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                what: "grid buffer",
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.cols + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }
}

/// What a height raster measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HeightKind {
    /// Terrain elevation.
    Dtm,
    /// Vegetation height above terrain.
    Chm,
}

/// Height values in meters. `NaN` (or the explicit sentinel) marks nodata.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightRaster {
    pub kind: HeightKind,
    pub values: Grid<f64>,
    pub nodata: f64,
}

impl HeightRaster {
    pub fn new(kind: HeightKind, values: Grid<f64>) -> Self {
        Self { kind, values, nodata: f64::NAN }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    #[inline]
    pub fn is_nodata(&self, v: f64) -> bool {
        v.is_nan() || v == self.nodata
    }

    /// `None` for nodata cells.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        let v = *self.values.get(row, col);
        (!self.is_nodata(v)).then_some(v)
    }

    /// Checks the CHM invariant: values are ≥ 0 or nodata.
    pub fn check_chm(&self) -> Result<()> {
        for (i, &v) in self.values.as_slice().iter().enumerate() {
            if !self.is_nodata(v) && !(v >= 0.0) {
                let cols = self.values.cols();
                return Err(crate::error::invalid(alloc::format!(
                    "negative canopy height {v} at row {}, col {}",
                    i / cols,
                    i % cols
                )));
            }
        }
        Ok(())
    }
}
