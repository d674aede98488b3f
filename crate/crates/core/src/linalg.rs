//! Small dense complex matrices: Hermitian checks and Cholesky solves.

use crate::error::{invalid, Error, Result};
use crate::math::{cabs, sqrt};
use crate::C64;
use alloc::vec;
use alloc::vec::Vec;

/// Relative tolerance used for the Hermitian invariant.
pub const HERMITIAN_TOL: f64 = 1e-6;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid("matrix buffer length is not n²"));
        }
        Ok(Self { n, data })
    }

    /// `v·vᴴ`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| cabs(*z)).fold(0.0, f64::max)
    }

    /// `max |R − Rᴴ| / max |R|` (0 for the zero matrix).
    pub fn hermitian_deviation(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max(cabs(self.get(i, j) - self.get(j, i).conj()));
            }
        }
        dev / scale
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL || deviation.is_nan() {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    /// Quadratic form `vᴴ·M·v`.
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += self.data[i * n + j] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L·Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    /// Factorises a Hermitian positive definite matrix; only the lower
    /// triangle is read.
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = m.n();
        let mut l = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = m.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Singular);
            }
            let djj = sqrt(d);
            l.set(j, j, C64::new(djj, 0.0));
            for i in j + 1..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / djj);
            }
        }
        Ok(Self { l })
    }

    /// Solves `L·y = b` by forward substitution.
    pub fn forward(&self, b: &[C64], y: &mut [C64]) {
        let n = self.l.n();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * y[k];
            }
            y[i] = s / self.l.get(i, i).re;
        }
    }

    /// `bᴴ·M⁻¹·b = ‖L⁻¹·b‖²`.
    pub fn inverse_quadratic_form(&self, b: &[C64], scratch: &mut [C64]) -> f64 {
        self.forward(b, scratch);
        scratch.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Solves `M·x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.l.n();
        let mut y = vec![C64::new(0.0, 0.0); n];
        self.forward(b, &mut y);
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l.get(k, i).conj() * x[k];
            }
            x[i] = s / self.l.get(i, i).re;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        // A·Aᴴ + I for a fixed A is Hermitian positive definite.
        let a = [
            C64::new(1.0, 0.5),
            C64::new(-0.3, 0.2),
            C64::new(0.7, -1.1),
            C64::new(0.0, 0.4),
            C64::new(2.0, 0.0),
            C64::new(-0.6, -0.6),
            C64::new(0.1, 0.9),
            C64::new(0.5, 0.5),
            C64::new(-1.2, 0.3),
        ];
        let mut m = CMatrix::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = m.get(i, j);
                for k in 0..3 {
                    s += a[i * 3 + k] * a[j * 3 + k].conj();
                }
                m.set(i, j, s);
            }
        }
        m
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let m = sample();
        let b = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(0.5, 2.0)];
        let x = Cholesky::new(&m).unwrap().solve(&b);
        for i in 0..3 {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..3 {
                s += m.get(i, j) * x[j];
            }
            assert!((s - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_quadratic_form_matches_solve() {
        let m = sample();
        let b = [C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.2, 0.2)];
        let ch = Cholesky::new(&m).unwrap();
        let x = ch.solve(&b);
        let direct: C64 = b.iter().zip(&x).map(|(bi, xi)| bi.conj() * xi).sum();
        let mut scratch = [C64::new(0.0, 0.0); 3];
        assert!((ch.inverse_quadratic_form(&b, &mut scratch) - direct.re).abs() < 1e-12);
    }

    #[test]
    fn singular_rejected() {
        assert_eq!(Cholesky::new(&CMatrix::zeros(2)).unwrap_err(), Error::Singular);
    }

    #[test]
    fn hermitian_deviation_detects_asymmetry() {
        let mut m = sample();
        assert!(m.check_hermitian().is_ok());
        m.set(0, 1, m.get(0, 1) + C64::new(0.5, 0.0));
        assert!(m.check_hermitian().is_err());
    }
}
