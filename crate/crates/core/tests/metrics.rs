use proptest::prelude::*;
use tomochm_core::datapipe::{quadrant_split, Split, SplitFractions};
use tomochm_core::evalkit::{centered_strided_error, mae, r2, rect_tiles, rmse, split_tiles, Rect};
use tomochm_core::raster::Grid;
use tomochm_core::Error;

fn window_values(truth: &Grid<f64>, r0: usize, c0: usize, p: usize, bias: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p * p);
    for r in r0..r0 + p {
        for c in c0..c0 + p {
            out.push(truth.get(r, c) + bias);
        }
    }
    out
}

fn truth64() -> Grid<f64> {
    Grid::from_fn(64, 64, |r, c| (r as f64 * 0.3 + c as f64 * 0.7).sin() * 5.0 + 15.0)
}

#[test]
fn identity_and_bias() {
    let truth = truth64();
    let mask = Grid::filled(64, 64, true);
    let tiles = rect_tiles(Rect { row: 0, col: 0, rows: 64, cols: 64 }, 32).unwrap();
    assert_eq!(tiles.len(), 9);
    let exact = centered_strided_error(|w| Ok(window_values(&truth, w.row, w.col, 32, 0.0)), None, &truth, &mask, &tiles, 32)
        .unwrap();
    assert_eq!(exact.mae, 0.0);
    assert_eq!(exact.counted_px, 48 * 48);
    assert_eq!(exact.border_excluded_px, 64 * 64 - 48 * 48);
    let biased = centered_strided_error(|w| Ok(window_values(&truth, w.row, w.col, 32, 1.0)), None, &truth, &mask, &tiles, 32)
        .unwrap();
    assert!((biased.mae - 1.0).abs() < 1e-12);
    assert!((biased.rmse - 1.0).abs() < 1e-12);
}

#[test]
fn border_values_never_reach_the_score() {
    let truth = truth64();
    let mask = Grid::filled(64, 64, true);
    let tiles = rect_tiles(Rect { row: 0, col: 0, rows: 64, cols: 64 }, 32).unwrap();
    let poisoned = centered_strided_error(
        |w| {
            let mut v = window_values(&truth, w.row, w.col, 32, 0.0);
            for (i, x) in v.iter_mut().enumerate() {
                let (r, c) = (i / 32, i % 32);
                if !(8..24).contains(&r) || !(8..24).contains(&c) {
                    *x = if (r + c) % 2 == 0 { 1e6 } else { -1e6 };
                }
            }
            Ok(v)
        },
        None,
        &truth,
        &mask,
        &tiles,
        32,
    )
    .unwrap();
    assert_eq!(poisoned.mae, 0.0);
}

#[test]
fn one_bad_crop_gives_exact_fraction() {
    let truth = truth64();
    let mask = Grid::filled(64, 64, true);
    let tiles = rect_tiles(Rect { row: 0, col: 0, rows: 64, cols: 64 }, 32).unwrap();
    let eval = centered_strided_error(
        |w| Ok(window_values(&truth, w.row, w.col, 32, if (w.row, w.col) == (16, 16) { 2.0 } else { 0.0 })),
        None,
        &truth,
        &mask,
        &tiles,
        32,
    )
    .unwrap();
    assert!((eval.mae - 2.0 * 256.0 / 2304.0).abs() < 1e-12, "{}", eval.mae);
}

#[test]
fn masked_pixels_are_skipped() {
    let truth = truth64();
    let mask = Grid::from_fn(64, 64, |r, _| r < 32);
    let tiles = rect_tiles(Rect { row: 0, col: 0, rows: 64, cols: 64 }, 32).unwrap();
    let eval = centered_strided_error(
        |w| {
            let mut v = window_values(&truth, w.row, w.col, 32, 0.0);
            for (i, x) in v.iter_mut().enumerate() {
                if w.row + i / 32 >= 32 {
                    *x += 100.0;
                }
            }
            Ok(v)
        },
        None,
        &truth,
        &mask,
        &tiles,
        32,
    )
    .unwrap();
    assert_eq!(eval.mae, 0.0);
    assert_eq!(eval.counted_px, 24 * 48);
}

#[test]
fn patch_size_must_divide_by_four() {
    let truth = truth64();
    let mask = Grid::filled(64, 64, true);
    let err = centered_strided_error(|_| Ok(vec![0.0; 36]), None, &truth, &mask, &[(0, 0)], 6).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter(_)));
}

#[test]
fn split_tiles_stay_inside_region() {
    let a = quadrant_split(128, 160, 16, SplitFractions::default()).unwrap();
    let labels = a.pixel_labels();
    for split in Split::ALL {
        for (r0, c0) in split_tiles(&labels, split, 16).unwrap() {
            assert_eq!(r0 % 8, 0);
            assert_eq!(c0 % 8, 0);
            for r in r0..r0 + 16 {
                for c in c0..c0 + 16 {
                    assert_eq!(*labels.get(r, c), Some(split));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn rmse_dominates_mae(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0, any::<bool>()), 1..200)) {
        let p: Vec<f64> = v.iter().map(|x| x.0).collect();
        let t: Vec<f64> = v.iter().map(|x| x.1).collect();
        let mut m: Vec<bool> = v.iter().map(|x| x.2).collect();
        m[0] = true;
        let a = mae(&p, &t, &m).unwrap();
        let b = rmse(&p, &t, &m).unwrap();
        prop_assert!(b + 1e-12 >= a);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn metrics_are_permutation_invariant(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..100), seed in any::<u64>()) {
        let p: Vec<f64> = v.iter().map(|x| x.0).collect();
        let t: Vec<f64> = v.iter().map(|x| x.1).collect();
        let m = vec![true; v.len()];
        let mut order: Vec<usize> = (0..v.len()).collect();
        let mut rng = tomochm_core::rng::SplitMix64::new(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let pp: Vec<f64> = order.iter().map(|&i| p[i]).collect();
        let tp: Vec<f64> = order.iter().map(|&i| t[i]).collect();
        prop_assert!((mae(&p, &t, &m).unwrap() - mae(&pp, &tp, &m).unwrap()).abs() < 1e-10);
        prop_assert!((rmse(&p, &t, &m).unwrap() - rmse(&pp, &tp, &m).unwrap()).abs() < 1e-10);
        if let (Ok(a), Ok(b)) = (r2(&p, &t, &m), r2(&pp, &tp, &m)) {
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }
}
