//! Scoring predictions against a dataset directory.

use std::path::{Path, PathBuf};

use tomochm_core::datapipe::Split;
use tomochm_core::evalkit::{centered_strided_error, mae, r2, rmse};
use tomochm_core::raster::{Grid, HeightRaster};

use crate::dataset::{paint_truth, read_index, DatasetIndex};
use crate::error::{Error, Result};
use crate::npy;
use crate::report::EvalReport;

/// Predictions for one split, or one raster shared by all splits.
#[derive(Debug, Clone)]
pub enum Predictions {
    /// `(num, 1, P, P)` in the dataset's file order for `split`.
    Patches { split: Split, data: Vec<f32> },
    /// `(H, W)` heights covering the single source raster.
    Raster(Grid<f64>),
}

/// Resolves `--pred`: a directory holding `preds_{val,test}.npy`, one
/// `preds_{split}.npy` file (its sibling for the other split is picked up
/// when present), any other 4-D patch file (taken as test), or a 2-D raster.
pub fn load_predictions(path: &Path, index: &DatasetIndex) -> Result<Vec<Predictions>> {
    let p = index.patch_size;
    let candidates: Vec<(Split, PathBuf)> = if path.is_dir() {
        [Split::Val, Split::Test].iter().map(|s| (*s, path.join(format!("preds_{}.npy", s.name())))).collect()
    } else {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let named = [Split::Train, Split::Val, Split::Test].into_iter().find(|s| name == format!("preds_{}.npy", s.name()));
        let mut v = vec![(named.unwrap_or(Split::Test), path.to_path_buf())];
        if let Some(s) = named {
            let dir = path.parent().unwrap_or(Path::new("."));
            for other in [Split::Val, Split::Test] {
                if other != s {
                    v.push((other, dir.join(format!("preds_{}.npy", other.name()))));
                }
            }
        }
        v
    };
    let mut out = Vec::new();
    for (i, (split, file)) in candidates.into_iter().enumerate() {
        let explicit = i == 0 && !path.is_dir();
        if !explicit && !file.exists() {
            continue;
        }
        let a = npy::read::<f32>(&file)?;
        match a.shape.as_slice() {
            [rows, cols] if explicit => {
                if index.sources.len() != 1 {
                    return Err(Error::format(&file, "raster predictions need a single-source dataset"));
                }
                let src = &index.sources[0];
                if (*rows, *cols) != (src.rows, src.cols) {
                    return Err(Error::format(&file, format!("raster {rows}x{cols}, dataset is {}x{}", src.rows, src.cols)));
                }
                let values = a.data.iter().map(|v| *v as f64).collect();
                return Ok(vec![Predictions::Raster(Grid::from_vec(*rows, *cols, values)?)]);
            }
            [num, 1, pp, pq] if *pp == p && *pq == p => {
                let expected = index.positions.get(&split).map_or(0, Vec::len);
                if *num != expected {
                    return Err(Error::format(&file, format!("{num} patches, {} split has {expected}", split.name())));
                }
                out.push(Predictions::Patches { split, data: a.data });
            }
            other => {
                return Err(Error::format(&file, format!("expected (num, 1, {p}, {p}) or (H, W), found {other:?}")));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::format(path, "no prediction files found"));
    }
    Ok(out)
}

/// Metrics of one split, pooled over sources.
#[derive(Debug, Clone)]
pub struct SplitScore {
    pub mae: f64,
    pub rmse: f64,
    pub r2: Option<f64>,
    pub counted_px: usize,
    pub border_excluded_px: usize,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub val: Option<SplitScore>,
    pub test: Option<SplitScore>,
    /// Per source, the prediction and truth mosaics over val and test crops.
    pub mosaics: Vec<(HeightRaster, HeightRaster)>,
}

fn predictions_for(preds: &[Predictions], split: Split) -> Option<&Predictions> {
    preds.iter().find(|p| match p {
        Predictions::Patches { split: s, .. } => *s == split,
        Predictions::Raster(_) => true,
    })
}

/// Runs the centered strided protocol on the val and test windows of every
/// source. `height_filter_m` further masks truth below the threshold.
pub fn evaluate(dir: &Path, index: &DatasetIndex, preds: &[Predictions], height_filter_m: f64) -> Result<Evaluation> {
    let p = index.patch_size;
    let mut mosaics = Vec::with_capacity(index.sources.len());
    let mut scores = [None, None];
    let mut pooled: [(Vec<f64>, Vec<f64>, usize); 2] = Default::default();
    let splits = [Split::Val, Split::Test];
    for (source, info) in index.sources.iter().enumerate() {
        let (truth, valid) = paint_truth(dir, index, source, &splits)?;
        let mask = Grid::from_vec(
            info.rows,
            info.cols,
            truth.as_slice().iter().zip(valid.as_slice()).map(|(t, v)| *v && *t >= height_filter_m).collect(),
        )?;
        let mut mosaic_pred = Grid::filled(info.rows, info.cols, f64::NAN);
        let mut mosaic_truth = Grid::filled(info.rows, info.cols, f64::NAN);
        for (k, split) in splits.into_iter().enumerate() {
            let Some(pred) = predictions_for(preds, split) else { continue };
            let positions = index.positions.get(&split).map(Vec::as_slice).unwrap_or_default();
            let windows: Vec<(usize, (usize, usize))> = positions
                .iter()
                .enumerate()
                .filter(|(_, pos)| pos[0] == source)
                .map(|(i, pos)| (i, (pos[1], pos[2])))
                .collect();
            if windows.is_empty() {
                continue;
            }
            let tiles: Vec<(usize, usize)> = windows.iter().map(|w| w.1).collect();
            let mut next = windows.iter().map(|w| w.0);
            // The metric mask is applied below so that fully filtered
            // sources still produce mosaics.
            let all = Grid::filled(info.rows, info.cols, true);
            let truth_filled = truth.map(|v| if v.is_nan() { 0.0 } else { *v });
            let res = centered_strided_error(
                |w| {
                    let i = next.next().expect("one call per tile");
                    Ok(match pred {
                        Predictions::Patches { data, .. } => {
                            data[i * p * p..(i + 1) * p * p].iter().map(|v| *v as f64).collect()
                        }
                        Predictions::Raster(g) => {
                            let mut out = Vec::with_capacity(p * p);
                            for r in w.row..w.row + p {
                                out.extend_from_slice(&g.row(r)[w.col..w.col + p]);
                            }
                            out
                        }
                    })
                },
                None,
                &truth_filled,
                &all,
                &tiles,
                p,
            )?;
            let acc = &mut pooled[k];
            acc.2 += res.border_excluded_px;
            for (i, (pv, tv)) in
                res.mosaic_pred.values.as_slice().iter().zip(res.mosaic_truth.values.as_slice()).enumerate()
            {
                if tv.is_nan() {
                    continue;
                }
                mosaic_pred.as_mut_slice()[i] = *pv;
                mosaic_truth.as_mut_slice()[i] = if valid.as_slice()[i] { *tv } else { f64::NAN };
                if mask.as_slice()[i] {
                    acc.0.push(*pv);
                    acc.1.push(*tv);
                }
            }
        }
        mosaics.push((
            HeightRaster::new(tomochm_core::raster::HeightKind::Chm, mosaic_pred),
            HeightRaster::new(tomochm_core::raster::HeightKind::Chm, mosaic_truth),
        ));
    }
    for (k, split) in splits.into_iter().enumerate() {
        if predictions_for(preds, split).is_none() {
            continue;
        }
        let (pv, tv, border) = &pooled[k];
        if pv.is_empty() {
            return Err(Error::Core(tomochm_core::Error::EmptyMask));
        }
        let m = vec![true; pv.len()];
        scores[k] = Some(SplitScore {
            mae: mae(pv, tv, &m)?,
            rmse: rmse(pv, tv, &m)?,
            r2: r2(pv, tv, &m).ok(),
            counted_px: pv.len(),
            border_excluded_px: *border,
        });
    }
    let [val, test] = scores;
    Ok(Evaluation { val, test, mosaics })
}

/// Builds the report for an evaluation of the dataset at `dir`.
pub fn build_report(index: &DatasetIndex, ev: &Evaluation, height_filter_m: f64, model: &str) -> EvalReport {
    let heading = index.sources.iter().map(|s| s.heading.as_str()).collect::<Vec<_>>().join("+");
    EvalReport {
        val_mae: ev.val.as_ref().map(|s| s.mae),
        test_mae: ev.test.as_ref().map(|s| s.mae),
        test_rmse: ev.test.as_ref().map(|s| s.rmse),
        test_r2: ev.test.as_ref().and_then(|s| s.r2),
        n_slc: index.subset.len(),
        polarization: index.polarization.clone(),
        heading,
        height_filter_m,
        model: model.to_owned(),
        config_hash: index.config_hash.clone(),
        border_excluded_px: ev.val.iter().chain(&ev.test).map(|s| s.border_excluded_px).sum(),
        val_px: ev.val.as_ref().map_or(0, |s| s.counted_px),
        test_px: ev.test.as_ref().map_or(0, |s| s.counted_px),
    }
}

/// Reads the dataset index, scores, and returns both.
pub fn evaluate_dir(dataset: &Path, pred: &Path, height_filter_m: f64) -> Result<(DatasetIndex, Evaluation)> {
    let index = read_index(dataset)?;
    let preds = load_predictions(pred, &index)?;
    let ev = evaluate(dataset, &index, &preds, height_filter_m)?;
    Ok((index, ev))
}
