#![allow(dead_code)]

use nalgebra::DMatrix;
use tomochm_core::geometry::{AcquisitionGeometry, Polarization, SlcStack};
use tomochm_core::linalg::CMatrix;
use tomochm_core::raster::Grid;
use tomochm_core::rng::SplitMix64;
use tomochm_core::C64;

pub fn random_stack(rows: usize, cols: usize, n: usize, seed: u64) -> SlcStack {
    let g = AcquisitionGeometry::irregular(n, 3.0, seed, Polarization::VV).unwrap();
    let mut rng = SplitMix64::new(seed.wrapping_mul(31).wrapping_add(7));
    let layers = (0..n)
        .map(|_| Grid::from_fn(rows, cols, |_, _| {
            let power = 1.0 + rng.next_f64();
            rng.complex_normal(power)
        }))
        .collect();
    SlcStack::new(g, layers).unwrap()
}

/// Per-pixel double loop over the clamped window, written independently of
/// the separable production path.
pub fn brute_force_covariance(stack: &SlcStack, wa: usize, wr: usize, row: usize, col: usize) -> Vec<Vec<C64>> {
    let (rows, cols) = stack.shape();
    let n = stack.len();
    let mut r = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut looks = 0.0;
    for q in 0..rows as isize {
        for p in 0..cols as isize {
            if (q - row as isize).abs() > (wa / 2) as isize || (p - col as isize).abs() > (wr / 2) as isize {
                continue;
            }
            looks += 1.0;
            let u = stack.pixel(q as usize, p as usize);
            for i in 0..n {
                for j in 0..n {
                    r[i][j] += u[i] * u[j].conj();
                }
            }
        }
    }
    for row in r.iter_mut() {
        for v in row.iter_mut() {
            *v /= looks;
        }
    }
    r
}

/// diag, Re(row 0), Im(row 0) of a brute-force matrix.
pub fn brute_force_features(r: &[Vec<C64>]) -> Vec<f64> {
    let n = r.len();
    let mut out = Vec::with_capacity(3 * n);
    out.extend((0..n).map(|i| r[i][i].re));
    out.extend((0..n).map(|i| r[0][i].re));
    out.extend((0..n).map(|i| r[0][i].im));
    out
}

/// Eigenvalues of a Hermitian matrix from its real symmetric embedding
/// `[[Re, −Im], [Im, Re]]` (each eigenvalue appears twice), ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.n();
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m.get(i % n, j % n);
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = big.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}
