#![allow(clippy::needless_range_loop)]

mod common;

use common::{brute_force_covariance, brute_force_features, hermitian_eigenvalues, random_stack};
use proptest::prelude::*;
use tomochm_core::geometry::{AcquisitionGeometry, Polarization};
use tomochm_core::simulate::{synthesize_slc_stack, HeightRecipe, SceneSpec, Snr};
use tomochm_core::tomo::{
    estimate_covariance, extract_features, ground_steer, select_subset, slice_features, SubsetSelection, Window,
};

#[test]
fn features_match_brute_force() {
    for (k, n) in [1usize, 2, 3, 7].into_iter().enumerate() {
        for seed in 0..5u64 {
            let stack = random_stack(8, 8, n, seed * 10 + k as u64);
            let cov = estimate_covariance(&stack, Window::new(3, 3).unwrap(), false).unwrap();
            let features = extract_features(&cov);
            for r in 0..8 {
                for c in 0..8 {
                    let oracle = brute_force_features(&brute_force_covariance(&stack, 3, 3, r, c));
                    let got = features.pixel(r, c);
                    let diff = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    assert!(diff < 1e-6, "n={n} pixel ({r},{c}) diff {diff}");
                }
            }
        }
    }
}

#[test]
fn asymmetric_window_matches_brute_force() {
    let stack = random_stack(9, 11, 3, 77);
    let cov = estimate_covariance(&stack, Window::new(5, 3).unwrap(), false).unwrap();
    for r in 0..9 {
        for c in 0..11 {
            let oracle = brute_force_covariance(&stack, 5, 3, r, c);
            let m = cov.matrix(r, c);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((m.get(i, j) - oracle[i][j]).norm() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn slicing_matches_gather_on_oracle() {
    let stack = random_stack(8, 8, 10, 3);
    let full = extract_features(&estimate_covariance(&stack, Window::new(3, 3).unwrap(), false).unwrap());
    let selection = SubsetSelection { indices: vec![0, 4, 9], seed: 0 };
    let sliced = slice_features(&full, &selection).unwrap();
    assert_eq!(sliced.channels(), 9);
    for r in 0..8 {
        for c in 0..8 {
            let oracle = brute_force_covariance(&stack, 3, 3, r, c);
            let mut expected = Vec::new();
            expected.extend(selection.indices.iter().map(|&i| oracle[i][i].re));
            expected.extend(selection.indices.iter().map(|&i| oracle[0][i].re));
            expected.extend(selection.indices.iter().map(|&i| oracle[0][i].im));
            for (a, b) in sliced.pixel(r, c).iter().zip(&expected) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn subset_golden() {
    // Produced by an independent Python SplitMix64 + Fisher–Yates reference.
    assert_eq!(select_subset(3, 28, 42).unwrap().indices, vec![0, 3, 20]);
    assert_eq!(select_subset(7, 28, 42).unwrap().indices, vec![0, 3, 11, 16, 20, 23, 26]);
    assert_eq!(select_subset(3, 7, 42).unwrap().indices, vec![0, 2, 3]);
}

#[test]
fn subset_is_pure_and_seed_sensitive() {
    let first = select_subset(3, 28, 42).unwrap();
    for _ in 0..1000 {
        assert_eq!(select_subset(3, 28, 42).unwrap(), first);
    }
    let distinct = (0..100u64)
        .map(|s| select_subset(3, 28, s).unwrap().indices)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    // 351 possible pairs; 100 seeds should almost never collide much.
    assert!(distinct > 80, "only {distinct} distinct subsets");
}

#[test]
fn noiseless_scene_is_low_rank() {
    let g = AcquisitionGeometry::desk_seven(3.0, Polarization::VV).unwrap();
    for (ground, canopy) in [(1.0, 0.0), (1.0, 0.8)] {
        let spec = SceneSpec {
            rows: 12,
            cols: 12,
            dtm: HeightRecipe::Constant { value: 5.0 },
            chm: HeightRecipe::Constant { value: 18.0 },
            ground_amplitude: ground,
            canopy_amplitude: canopy,
            speckle: false,
            snr: Snr::Noiseless,
            seed: 1,
        };
        let (stack, _, _) = synthesize_slc_stack(&spec, &g).unwrap();
        let cov = estimate_covariance(&stack, Window::new(3, 3).unwrap(), false).unwrap();
        for (r, c) in [(0, 0), (5, 7), (11, 11)] {
            let ev = hermitian_eigenvalues(&cov.matrix(r, c));
            let largest = ev[ev.len() - 1];
            assert!(ev[ev.len() - 3] < 1e-6 * largest, "{ev:?}");
        }
    }
}

#[test]
fn steered_ground_scene_is_real_and_flat() {
    let g = AcquisitionGeometry::desk_seven(3.0, Polarization::VV).unwrap();
    let spec = SceneSpec {
        rows: 10,
        cols: 10,
        dtm: HeightRecipe::Ramp { base: 40.0, row_slope: 1.3, col_slope: 0.4 },
        chm: HeightRecipe::Constant { value: 0.0 },
        ground_amplitude: 1.5,
        canopy_amplitude: 0.0,
        speckle: false,
        snr: Snr::Noiseless,
        seed: 1,
    };
    let (stack, dtm, _) = synthesize_slc_stack(&spec, &g).unwrap();
    let steered = ground_steer(&stack, &dtm).unwrap();
    let cov = estimate_covariance(&steered, Window::new(5, 5).unwrap(), false).unwrap();
    for z in cov.as_slice() {
        assert!((z.re - 2.25).abs() < 1e-6 && z.im.abs() < 1e-6, "{z}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covariance_is_hermitian_psd(seed in any::<u64>(), n in 1usize..6, wa in 0usize..3, wr in 0usize..3, normalized in any::<bool>()) {
        let stack = random_stack(6, 7, n, seed);
        let cov = estimate_covariance(&stack, Window::new(2 * wa + 1, 2 * wr + 1).unwrap(), normalized).unwrap();
        for r in 0..6 {
            for c in 0..7 {
                let m = cov.matrix(r, c);
                prop_assert!(m.hermitian_deviation() < 1e-6);
                for i in 0..n {
                    prop_assert!(m.get(i, i).im == 0.0 && m.get(i, i).re >= 0.0);
                    if normalized {
                        for j in 0..n {
                            prop_assert!(m.get(i, j).norm() <= 1.0 + 1e-6);
                        }
                    }
                }
                let ev = hermitian_eigenvalues(&m);
                prop_assert!(ev[0] >= -1e-6 * ev[n - 1].abs().max(1e-300));
            }
        }
        let f = extract_features(&cov);
        for r in 0..6 {
            for c in 0..7 {
                let px = f.pixel(r, c);
                prop_assert!(px[..n].iter().all(|v| *v >= 0.0));
                prop_assert_eq!(px[n], px[0]);
                prop_assert_eq!(px[2 * n], 0.0);
            }
        }
    }
}
