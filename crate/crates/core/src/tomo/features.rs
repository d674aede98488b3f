use super::{CovarianceField, SubsetSelection};
use crate::error::{invalid, Error, Result};
use crate::C64;
use alloc::format;
use alloc::vec::Vec;

/// Per-pixel real features `(rows, cols, 3n)`, channels ordered
/// `[diag(0..n), Re(row 0)(0..n), Im(row 0)(0..n)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    rows: usize,
    cols: usize,
    n: usize,
    data: Vec<f64>,
    /// Image indices (into the full stack) the channels were taken from.
    pub indices: Vec<usize>,
}

impl FeatureStack {
    pub fn new(rows: usize, cols: usize, n: usize, data: Vec<f64>, indices: Vec<usize>) -> Result<Self> {
        if data.len() != rows * cols * 3 * n {
            return Err(Error::ShapeMismatch {
                what: "feature buffer",
                expected: (rows * cols, 3 * n),
                found: (data.len(), 1),
            });
        }
        if indices.len() != n {
            return Err(invalid("feature provenance must list one index per image"));
        }
        Ok(Self { rows, cols, n, data, indices })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of images the features describe.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        3 * self.n
    }

    pub fn pixel(&self, row: usize, col: usize) -> &[f64] {
        let c = self.channels();
        let off = (row * self.cols + col) * c;
        &self.data[off..off + c]
    }

    pub fn pixel_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let c = self.channels();
        let off = (row * self.cols + col) * c;
        &mut self.data[off..off + c]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.cols + col) * self.channels() + channel]
    }

    /// Flat `(row, col, channel)` buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Writes the three feature vectors of one N×N matrix into `out` (`3n` long).
pub fn features_from_matrix(m: &[C64], n: usize, out: &mut [f64]) {
    debug_assert_eq!(m.len(), n * n);
    debug_assert_eq!(out.len(), 3 * n);
    for i in 0..n {
        out[i] = m[i * n + i].re;
        out[n + i] = m[i].re;
        out[2 * n + i] = m[i].im;
    }
}

/// Diagonal, real part of the master row and imaginary part of the master
/// row of every pixel's covariance.
pub fn extract_features(cov: &CovarianceField) -> FeatureStack {
    let (rows, cols) = cov.shape();
    let n = cov.n();
    let mut data = alloc::vec![0.0; rows * cols * 3 * n];
    for (p, out) in data.chunks_exact_mut(3 * n).enumerate() {
        features_from_matrix(cov.pixel(p / cols, p % cols), n, out);
    }
    FeatureStack { rows, cols, n, data, indices: (0..n).collect() }
}

/// Keeps only the selected images in each of the three feature groups.
/// The covariance is not recomputed.
pub fn slice_features(features: &FeatureStack, selection: &SubsetSelection) -> Result<FeatureStack> {
    let n = features.n;
    if let Some(&bad) = selection.indices.iter().find(|&&i| i >= n) {
        return Err(invalid(format!("subset index {bad} out of range for {n} images")));
    }
    let m = selection.indices.len();
    let mut data = Vec::with_capacity(features.rows * features.cols * 3 * m);
    for px in features.data.chunks_exact(3 * n) {
        for group in 0..3 {
            data.extend(selection.indices.iter().map(|&i| px[group * n + i]));
        }
    }
    let indices = selection.indices.iter().map(|&i| features.indices[i]).collect();
    FeatureStack::new(features.rows, features.cols, m, data, indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::tomo::Window;
    use alloc::vec;

    fn field_of(m: &CMatrix, rows: usize, cols: usize) -> CovarianceField {
        let row: Vec<C64> = (0..cols).flat_map(|_| m.as_slice().iter().copied()).collect();
        CovarianceField::from_rows(rows, cols, m.n(), Window::default(), false, vec![row; rows]).unwrap()
    }

    #[test]
    fn channel_counts() {
        for (n, c) in [(28, 84), (7, 21), (3, 9)] {
            let f = extract_features(&field_of(&CMatrix::identity(n), 1, 1));
            assert_eq!(f.channels(), c);
        }
    }

    #[test]
    fn identity_layout() {
        let f = extract_features(&field_of(&CMatrix::identity(4), 2, 3));
        assert_eq!(
            f.pixel(1, 2),
            &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn slicing() {
        let mut m = CMatrix::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, C64::new((10 * i + j) as f64, j as f64 - i as f64));
            }
        }
        let f = extract_features(&field_of(&m, 1, 2));
        let full = SubsetSelection { indices: vec![0, 1, 2], seed: 0 };
        assert_eq!(slice_features(&f, &full).unwrap(), f);
        let master = SubsetSelection { indices: vec![0], seed: 0 };
        let s = slice_features(&f, &master).unwrap();
        assert_eq!(s.pixel(0, 1), &[0.0, 0.0, 0.0]);
        let pick = SubsetSelection { indices: vec![0, 2], seed: 0 };
        let s = slice_features(&f, &pick).unwrap();
        assert_eq!(s.pixel(0, 0), &[0.0, 22.0, 0.0, 2.0, 0.0, 2.0]);
        assert_eq!(s.indices, vec![0, 2]);
        let bad = SubsetSelection { indices: vec![0, 3], seed: 0 };
        assert!(slice_features(&f, &bad).is_err());
    }
}
