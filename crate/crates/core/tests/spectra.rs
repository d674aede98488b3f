use core::f64::consts::PI;

use proptest::prelude::*;
use tomochm_core::geometry::{rayleigh_resolution, AcquisitionGeometry, Polarization};
use tomochm_core::linalg::CMatrix;
use tomochm_core::raster::Grid;
use tomochm_core::simulate::{synthesize_slc_stack, HeightRecipe, SceneSpec, Snr};
use tomochm_core::specest::{
    beamforming_spectrum, capon_spectrum, chm_from_profile, mainlobe_width, steering_vector, tomo_chm_baseline,
    SpectralMethod, SteeringTable, VerticalGrid, DEFAULT_LOADING, DEFAULT_THRESHOLD_DB,
};
use tomochm_core::tomo::Window;
use tomochm_core::C64;

fn desk_kz() -> Vec<f64> {
    AcquisitionGeometry::desk_seven(3.0, Polarization::VV).unwrap().kz()
}

fn two_scatterers(kz: &[f64], z1: f64, z2: f64, p1: f64, p2: f64) -> CMatrix {
    CMatrix::outer(&steering_vector(kz, z1))
        .scale(p1)
        .add(&CMatrix::outer(&steering_vector(kz, z2)).scale(p2))
}

fn local_maxima(p: &[f64]) -> Vec<usize> {
    (1..p.len() - 1).filter(|&k| p[k] > p[k - 1] && p[k] >= p[k + 1]).collect()
}

#[test]
fn two_scatterers_resolve_with_both_methods() {
    let kz = desk_kz();
    let grid = VerticalGrid::new(-10.0, 40.0, 0.25).unwrap();
    let r = two_scatterers(&kz, 0.0, 20.0, 1.0, 1.0).add(&CMatrix::identity(7).scale(1e-3));
    for profile in [
        beamforming_spectrum(&r, &kz, &grid).unwrap(),
        capon_spectrum(&r, &kz, &grid, DEFAULT_LOADING).unwrap(),
    ] {
        let peak = profile.peak();
        let strong: Vec<f64> = local_maxima(&profile.power)
            .into_iter()
            .filter(|&k| profile.power[k] > 0.5 * peak)
            .map(|k| grid.z(k))
            .collect();
        assert!(strong.iter().any(|z| z.abs() <= grid.dz), "{strong:?}");
        assert!(strong.iter().any(|z| (z - 20.0).abs() <= grid.dz), "{strong:?}");
    }
}

#[test]
fn capon_peaks_at_single_scatterer() {
    let kz = desk_kz();
    let grid = VerticalGrid::default();
    for z0 in [-4.0, 0.0, 7.5, 22.0, 35.0] {
        let r = CMatrix::outer(&steering_vector(&kz, z0)).add(&CMatrix::identity(7).scale(1e-2));
        let profile = capon_spectrum(&r, &kz, &grid, DEFAULT_LOADING).unwrap();
        assert!((grid.z(profile.argmax()) - z0).abs() <= grid.dz / 2.0 + 1e-9);
    }
}

#[test]
fn beamforming_integrates_to_trace_over_one_period() {
    // Uniform kz spacing makes the spectrum periodic in z with period
    // 2π/Δkz; its mean over a period equals tr(R)/n².
    let n = 5;
    let dk = 0.2;
    let kz: Vec<f64> = (0..n).map(|i| i as f64 * dk).collect();
    let period = 2.0 * PI / dk;
    let samples = 400;
    let grid = VerticalGrid::new(0.0, period * (samples - 1) as f64 / samples as f64, period / samples as f64).unwrap();
    let r = two_scatterers(&kz, 3.0, 11.0, 2.0, 0.5).add(&CMatrix::identity(n).scale(0.3));
    let profile = beamforming_spectrum(&r, &kz, &grid).unwrap();
    assert_eq!(profile.power.len(), samples);
    let mean = profile.power.iter().sum::<f64>() / samples as f64;
    let expected = r.trace().re / (n * n) as f64;
    assert!((mean - expected).abs() < 1e-9 * expected, "{mean} vs {expected}");
}

#[test]
fn capon_mainlobe_is_not_wider() {
    let kz = desk_kz();
    let grid = VerticalGrid::new(-10.0, 40.0, 0.1).unwrap();
    let r = CMatrix::outer(&steering_vector(&kz, 10.0)).add(&CMatrix::identity(7).scale(0.05));
    let bf = mainlobe_width(&beamforming_spectrum(&r, &kz, &grid).unwrap(), &grid, -3.0).unwrap();
    let cp = mainlobe_width(&capon_spectrum(&r, &kz, &grid, DEFAULT_LOADING).unwrap(), &grid, -3.0).unwrap();
    assert!(cp <= bf, "capon {cp} vs beamforming {bf}");
}

#[test]
fn profile_threshold_examples() {
    let grid = VerticalGrid::new(0.0, 10.0, 1.0).unwrap();
    let flat = tomochm_core::specest::PowerProfile { power: vec![1.0; grid.len()] };
    assert_eq!(chm_from_profile(&flat, &grid, -3.0).unwrap(), 10.0);
    let mut p = vec![0.01; grid.len()];
    p[2] = 1.0;
    p[6] = 0.6;
    let profile = tomochm_core::specest::PowerProfile { power: p };
    assert_eq!(chm_from_profile(&profile, &grid, -3.0).unwrap(), 6.0);
    assert_eq!(chm_from_profile(&profile, &grid, -1.0).unwrap(), 2.0);
    let below = VerticalGrid::new(-10.0, -1.0, 1.0).unwrap();
    let low = tomochm_core::specest::PowerProfile { power: vec![1.0; below.len()] };
    assert_eq!(chm_from_profile(&low, &below, -3.0).unwrap(), 0.0);
}

fn blocks_scene(canopy: f64, snr: Snr, seed: u64) -> SceneSpec {
    SceneSpec {
        rows: 24,
        cols: 24,
        dtm: HeightRecipe::Ramp { base: 120.0, row_slope: 0.5, col_slope: -0.25 },
        chm: HeightRecipe::Blocks { size: 12, values: vec![10.0, 25.0] },
        ground_amplitude: 1.0,
        canopy_amplitude: canopy,
        speckle: true,
        snr,
        seed,
    }
}

#[test]
fn baseline_is_flat_for_ground_only() {
    let g = AcquisitionGeometry::desk_seven(3.0, Polarization::VV).unwrap();
    let (stack, dtm, _) = synthesize_slc_stack(&blocks_scene(0.0, Snr::Noiseless, 3), &g).unwrap();
    let chm = tomo_chm_baseline(
        &stack,
        &dtm,
        Window::default(),
        &VerticalGrid::default(),
        SpectralMethod::Capon { loading: DEFAULT_LOADING },
        DEFAULT_THRESHOLD_DB,
    )
    .unwrap();
    assert!(chm.values.as_slice().iter().all(|v| v.abs() <= 1.0), "{:?}", chm.values.as_slice());
}

#[test]
fn capon_baseline_recovers_blocks_within_half_resolution() {
    let g = AcquisitionGeometry::desk_seven(3.0, Polarization::VV).unwrap();
    let half = rayleigh_resolution(&g.kz()).unwrap() / 2.0;
    let (stack, dtm, truth) = synthesize_slc_stack(&blocks_scene(1.0, Snr::Db(30.0), 11), &g).unwrap();
    let chm = tomo_chm_baseline(
        &stack,
        &dtm,
        Window::new(5, 5).unwrap(),
        &VerticalGrid::default(),
        SpectralMethod::Capon { loading: DEFAULT_LOADING },
        DEFAULT_THRESHOLD_DB,
    )
    .unwrap();
    // Interior of each block, away from the mixing band at block edges.
    let interior = Grid::from_fn(24, 24, |r, c| (r % 12).abs_diff(6) < 4 && (c % 12).abs_diff(6) < 4);
    for i in 0..24 * 24 {
        if interior.as_slice()[i] {
            let (p, t) = (chm.values.as_slice()[i], truth.values.as_slice()[i]);
            assert!((p - t).abs() <= half, "pixel {i}: {p} vs {t}");
        }
    }
}

proptest! {
    #[test]
    fn spectra_scale_linearly(seed in any::<u64>(), alpha in 0.01f64..100.0) {
        let kz = desk_kz();
        let grid = VerticalGrid::default();
        let mut rng = tomochm_core::rng::SplitMix64::new(seed);
        let vs: Vec<Vec<C64>> = (0..3).map(|_| (0..7).map(|_| rng.complex_normal(1.0)).collect()).collect();
        let mut r = CMatrix::identity(7).scale(0.1);
        for v in &vs {
            r = r.add(&CMatrix::outer(v));
        }
        let table = SteeringTable::new(&kz, grid).unwrap();
        let scaled = r.scale(alpha);
        for method in [SpectralMethod::Beamforming, SpectralMethod::Capon { loading: DEFAULT_LOADING }] {
            let a = table.spectrum(&r, method).unwrap();
            let b = table.spectrum(&scaled, method).unwrap();
            for (x, y) in a.power.iter().zip(&b.power) {
                prop_assert!((y - alpha * x).abs() <= 1e-9 * (alpha * x).abs().max(1e-300));
                prop_assert!(*x >= 0.0);
            }
        }
    }
}
