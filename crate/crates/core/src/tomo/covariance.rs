use crate::error::{invalid, Result};
use crate::geometry::SlcStack;
use crate::linalg::CMatrix;
use crate::math::sqrt;
use crate::C64;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Multilook window in pixels (azimuth × range). Both sides are odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub azimuth: usize,
    pub range: usize,
}

impl Window {
    pub fn new(azimuth: usize, range: usize) -> Result<Self> {
        let w = Self { azimuth, range };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.azimuth.is_multiple_of(2) || self.range.is_multiple_of(2) {
            return Err(invalid(format!(
                "window {}x{} must have odd positive sides",
                self.azimuth, self.range
            )));
        }
        Ok(())
    }

    /// Nominal look count `wa·wr` (border pixels see fewer).
    pub fn looks(&self) -> usize {
        self.azimuth * self.range
    }
}

impl Default for Window {
    fn default() -> Self {
        Self { azimuth: 9, range: 9 }
    }
}

/// Per-pixel N×N sample covariance over a raster.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceField {
    rows: usize,
    cols: usize,
    n: usize,
    pub window: Window,
    pub normalized: bool,
    data: Vec<C64>,
}

impl CovarianceField {
    pub fn from_rows(
        rows: usize,
        cols: usize,
        n: usize,
        window: Window,
        normalized: bool,
        row_data: Vec<Vec<C64>>,
    ) -> Result<Self> {
        let data: Vec<C64> = row_data.into_iter().flatten().collect();
        if data.len() != rows * cols * n * n {
            return Err(invalid("covariance buffer does not match rows·cols·n²"));
        }
        Ok(Self { rows, cols, n, window, normalized, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Matrix order N.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major N×N entries of one pixel.
    pub fn pixel(&self, row: usize, col: usize) -> &[C64] {
        let nn = self.n * self.n;
        let off = (row * self.cols + col) * nn;
        &self.data[off..off + nn]
    }

    pub fn matrix(&self, row: usize, col: usize) -> CMatrix {
        CMatrix::from_vec(self.n, self.pixel(row, col).to_vec()).expect("pixel buffer is n²")
    }

    /// Flat buffer ordered `(row, col, i, j)`.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

fn clamp_span(center: usize, half: usize, len: usize) -> (usize, usize) {
    (center.saturating_sub(half), (center + half + 1).min(len))
}

/// Covariance matrices of one output row, `cols·n²` entries ordered
/// `(col, i, j)`.
///
/// The window is clamped at the raster borders, so border pixels average
/// over fewer looks. With `normalized`, entries are divided by
/// `sqrt(R_ii·R_jj)` and a zero denominator yields 0.
pub fn estimate_covariance_row(
    stack: &SlcStack,
    window: Window,
    normalized: bool,
    row: usize,
) -> Result<Vec<C64>> {
    window.validate()?;
    let (rows, cols) = stack.shape();
    if row >= rows {
        return Err(invalid(format!("row {row} outside raster of {rows} rows")));
    }
    let n = stack.len();
    let nn = n * n;
    let (r0, r1) = clamp_span(row, window.azimuth / 2, rows);

    // Column sums of u·uᴴ over the clamped azimuth span (upper triangle).
    let mut column_sums = vec![C64::new(0.0, 0.0); cols * nn];
    let mut u = vec![C64::new(0.0, 0.0); n];
    for q in r0..r1 {
        for c in 0..cols {
            for (k, layer) in stack.layers.iter().enumerate() {
                u[k] = *layer.get(q, c);
            }
            let acc = &mut column_sums[c * nn..(c + 1) * nn];
            for i in 0..n {
                for j in i..n {
                    acc[i * n + j] += u[i] * u[j].conj();
                }
            }
        }
    }

    let mut out = vec![C64::new(0.0, 0.0); cols * nn];
    for c in 0..cols {
        let (c0, c1) = clamp_span(c, window.range / 2, cols);
        let looks = ((r1 - r0) * (c1 - c0)) as f64;
        let m = &mut out[c * nn..(c + 1) * nn];
        for cc in c0..c1 {
            let src = &column_sums[cc * nn..(cc + 1) * nn];
            for i in 0..n {
                for j in i..n {
                    m[i * n + j] += src[i * n + j];
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                m[i * n + j] /= looks;
            }
            // The diagonal is real by construction; drop rounding residue.
            m[i * n + i].im = 0.0;
        }
        if normalized {
            for i in 0..n {
                for j in i + 1..n {
                    let d = sqrt(m[i * n + i].re * m[j * n + j].re);
                    m[i * n + j] = if d > 0.0 { m[i * n + j] / d } else { C64::new(0.0, 0.0) };
                }
            }
            for i in 0..n {
                m[i * n + i] = if m[i * n + i].re > 0.0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            }
        }
        for i in 0..n {
            for j in 0..i {
                m[i * n + j] = m[j * n + i].conj();
            }
        }
    }
    Ok(out)
}

/// Sample covariance `R(p) = (1/L)·Σ u(q)·u(q)ᴴ` over the clamped window
/// around every pixel.
pub fn estimate_covariance(stack: &SlcStack, window: Window, normalized: bool) -> Result<CovarianceField> {
    window.validate()?;
    let (rows, cols) = stack.shape();
    let row_data = (0..rows)
        .map(|r| estimate_covariance_row(stack, window, normalized, r))
        .collect::<Result<Vec<_>>>()?;
    CovarianceField::from_rows(rows, cols, stack.len(), window, normalized, row_data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AcquisitionGeometry, Polarization};
    use crate::math::cabs;
    use crate::raster::Grid;
    use crate::rng::SplitMix64;

    fn stack_from(layers: Vec<Grid<C64>>) -> SlcStack {
        let g = AcquisitionGeometry::irregular(layers.len(), 3.0, 5, Polarization::HV).unwrap();
        SlcStack::new(g, layers).unwrap()
    }

    #[test]
    fn even_window_rejected() {
        assert!(Window::new(4, 3).is_err());
        let s = stack_from(alloc::vec![Grid::filled(3, 3, C64::new(1.0, 0.0))]);
        assert!(estimate_covariance(&s, Window { azimuth: 3, range: 2 }, false).is_err());
    }

    #[test]
    fn single_image_is_mean_power() {
        let mut rng = SplitMix64::new(9);
        let layer = Grid::from_fn(5, 5, |_, _| rng.complex_normal(2.0));
        let s = stack_from(alloc::vec![layer.clone()]);
        let cov = estimate_covariance(&s, Window::new(3, 3).unwrap(), false).unwrap();
        // Corner pixel (0,0) sees rows 0..2 and cols 0..2.
        let mut acc = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                acc += layer.get(r, c).norm_sqr();
            }
        }
        assert!((cov.pixel(0, 0)[0].re - acc / 4.0).abs() < 1e-12);
        assert_eq!(cov.pixel(0, 0)[0].im, 0.0);
    }

    #[test]
    fn identical_images_fully_coherent() {
        let mut rng = SplitMix64::new(10);
        let layer = Grid::from_fn(5, 5, |_, _| rng.complex_normal(1.0));
        let s = stack_from(alloc::vec![layer.clone(), layer]);
        let cov = estimate_covariance(&s, Window::new(3, 3).unwrap(), false).unwrap();
        let p = cov.pixel(2, 2);
        for z in p {
            assert!((z - p[0]).norm() < 1e-12);
        }
        let coh = estimate_covariance(&s, Window::new(3, 3).unwrap(), true).unwrap();
        assert!((cabs(coh.pixel(2, 2)[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_power_normalises_to_zero() {
        let zero = Grid::filled(3, 3, C64::new(0.0, 0.0));
        let one = Grid::filled(3, 3, C64::new(1.0, 0.0));
        let s = stack_from(alloc::vec![one, zero]);
        let coh = estimate_covariance(&s, Window::new(3, 3).unwrap(), true).unwrap();
        assert_eq!(coh.pixel(1, 1), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    }
}
