use super::{Split, SplitAssignment};
use crate::error::{invalid, Error, Result};
use crate::tomo::FeatureStack;
use alloc::vec;
use alloc::vec::Vec;

/// Per-channel min and max fitted on training pixels.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Fits on the train-labelled pixels of one raster.
pub fn fit_scaler(features: &FeatureStack, assignment: &SplitAssignment) -> Result<ScalerParams> {
    fit_scaler_multi(&[(features, assignment)])
}

/// Fits on the train-labelled pixels of several rasters jointly.
pub fn fit_scaler_multi(sources: &[(&FeatureStack, &SplitAssignment)]) -> Result<ScalerParams> {
    let channels = sources.first().map(|(f, _)| f.channels()).ok_or(Error::EmptyMask)?;
    let mut min = vec![f64::INFINITY; channels];
    let mut max = vec![f64::NEG_INFINITY; channels];
    let mut seen = 0usize;
    for (features, assignment) in sources {
        if features.channels() != channels {
            return Err(invalid("all sources must have the same channel count"));
        }
        if features.shape() != assignment.raster {
            return Err(Error::ShapeMismatch {
                what: "split assignment",
                expected: features.shape(),
                found: assignment.raster,
            });
        }
        let labels = assignment.pixel_labels();
        let (rows, cols) = features.shape();
        for r in 0..rows {
            for c in 0..cols {
                if *labels.get(r, c) != Some(Split::Train) {
                    continue;
                }
                seen += 1;
                for (k, &v) in features.pixel(r, c).iter().enumerate() {
                    min[k] = min[k].min(v);
                    max[k] = max[k].max(v);
                }
            }
        }
    }
    if seen == 0 {
        return Err(invalid("cannot fit a scaler on an empty train split"));
    }
    Ok(ScalerParams { min, max })
}

/// `x' = (x − min)/(max − min)`; degenerate channels map to 0. Values outside
/// the fitted range are not clamped.
pub fn apply_scaler(features: &FeatureStack, params: &ScalerParams) -> Result<FeatureStack> {
    transform(features, params, |x, lo, hi| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
}

/// Inverse of [`apply_scaler`] on non-degenerate channels; degenerate
/// channels map back to `min`.
pub fn invert_scaler(features: &FeatureStack, params: &ScalerParams) -> Result<FeatureStack> {
    transform(features, params, |x, lo, hi| if hi > lo { x * (hi - lo) + lo } else { lo })
}

fn transform(features: &FeatureStack, params: &ScalerParams, f: impl Fn(f64, f64, f64) -> f64) -> Result<FeatureStack> {
    let c = features.channels();
    if params.min.len() != c || params.max.len() != c {
        return Err(invalid("scaler channel count differs from features"));
    }
    let mut out = features.clone();
    for px in out.as_mut_slice().chunks_exact_mut(c) {
        for (k, v) in px.iter_mut().enumerate() {
            *v = f(*v, params.min[k], params.max[k]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::{quadrant_split, SplitFractions};

    fn one_channel(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> FeatureStack {
        // n = 1 gives three channels; fill all three with the same value.
        let mut data = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = f(r, c);
                data.extend([v, v, v]);
            }
        }
        FeatureStack::new(rows, cols, 1, data, vec![0]).unwrap()
    }

    #[test]
    fn examples() {
        let p = ScalerParams { min: vec![2.0; 3], max: vec![10.0; 3] };
        let f = one_channel(1, 3, |_, c| [6.0, 2.0, 10.0][c]);
        let s = apply_scaler(&f, &p).unwrap();
        assert_eq!(s.pixel(0, 0)[0], 0.5);
        assert_eq!(s.pixel(0, 1)[0], 0.0);
        assert_eq!(s.pixel(0, 2)[0], 1.0);
    }

    #[test]
    fn degenerate_and_unclamped() {
        let p = ScalerParams { min: vec![1.0, 0.0, 0.0], max: vec![1.0, 1.0, 1.0] };
        let f = one_channel(1, 1, |_, _| 3.0);
        let s = apply_scaler(&f, &p).unwrap();
        assert_eq!(s.pixel(0, 0), &[0.0, 3.0, 3.0]);
    }

    #[test]
    fn fit_uses_train_only() {
        let a = quadrant_split(64, 64, 16, SplitFractions::default()).unwrap();
        let labels = a.pixel_labels();
        let f = one_channel(64, 64, |r, c| if *labels.get(r, c) == Some(Split::Train) { (r + c) as f64 } else { 1e9 });
        let p = fit_scaler(&f, &a).unwrap();
        assert!(p.max[0] < 1e9);
        let none = SplitAssignment { labels: vec![Split::Test; a.labels.len()], ..a };
        assert!(fit_scaler(&f, &none).is_err());
    }
}
