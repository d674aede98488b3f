use crate::error::{Error, Result};
use crate::math::{floor, round};
use crate::raster::{Grid, HeightRaster};

/// Maps output (radar) pixel `(row, col)` to fractional source raster
/// coordinates. Pixel centers sit at integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Mapping {
    /// `[src_row, src_col] = M·[row, col, 1]`, sampled bilinearly.
    Affine([[f64; 3]; 2]),
    /// Per-pixel `(src_row, src_col)`, sampled by nearest neighbour. NaN
    /// entries produce nodata.
    Lookup(Grid<(f64, f64)>),
}

impl Mapping {
    pub fn identity() -> Self {
        Mapping::Affine([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    }
}

enum Sample {
    Value(f64),
    Nodata,
    Outside,
}

fn bilinear(src: &HeightRaster, y: f64, x: f64) -> Sample {
    let (rows, cols) = src.shape();
    if !y.is_finite() || !x.is_finite() {
        return Sample::Outside;
    }
    let max_y = (rows - 1) as f64;
    let max_x = (cols - 1) as f64;
    if y < 0.0 || x < 0.0 || y > max_y || x > max_x {
        return Sample::Outside;
    }
    let y0 = (floor(y) as usize).min(rows.saturating_sub(2));
    let x0 = (floor(x) as usize).min(cols.saturating_sub(2));
    let y1 = (y0 + 1).min(rows - 1);
    let x1 = (x0 + 1).min(cols - 1);
    let ty = y - y0 as f64;
    let tx = x - x0 as f64;
    let corners = [src.value(y0, x0), src.value(y0, x1), src.value(y1, x0), src.value(y1, x1)];
    let [Some(a), Some(b), Some(c), Some(d)] = corners else {
        return Sample::Nodata;
    };
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    Sample::Value(top + (bottom - top) * ty)
}

fn nearest(src: &HeightRaster, y: f64, x: f64) -> Sample {
    if y.is_nan() || x.is_nan() {
        return Sample::Nodata;
    }
    let (rows, cols) = src.shape();
    let (ry, rx) = (round(y), round(x));
    if ry < 0.0 || rx < 0.0 || ry > (rows - 1) as f64 || rx > (cols - 1) as f64 {
        return Sample::Outside;
    }
    match src.value(ry as usize, rx as usize) {
        Some(v) => Sample::Value(v),
        None => Sample::Nodata,
    }
}

/// Resamples a map-coordinate raster onto a `rows × cols` radar grid.
/// Bilinear for affine mappings (any nodata corner gives nodata), nearest
/// neighbour for lookup tables. Fails if any output pixel maps outside the
/// source raster.
pub fn resample_to_radar(raster: &HeightRaster, mapping: &Mapping, rows: usize, cols: usize) -> Result<HeightRaster> {
    let (src_rows, src_cols) = raster.shape();
    if src_rows == 0 || src_cols == 0 {
        return Err(Error::Uncovered { fraction: 1.0 });
    }
    if let Mapping::Lookup(lut) = mapping {
        if lut.shape() != (rows, cols) {
            return Err(Error::ShapeMismatch { what: "lookup table", expected: (rows, cols), found: lut.shape() });
        }
    }
    let mut outside = 0usize;
    let values = Grid::from_fn(rows, cols, |r, c| {
        let sample = match mapping {
            Mapping::Affine(m) => {
                let (rf, cf) = (r as f64, c as f64);
                let y = m[0][0] * rf + m[0][1] * cf + m[0][2];
                let x = m[1][0] * rf + m[1][1] * cf + m[1][2];
                bilinear(raster, y, x)
            }
            Mapping::Lookup(lut) => {
                let (y, x) = *lut.get(r, c);
                nearest(raster, y, x)
            }
        };
        match sample {
            Sample::Value(v) => v,
            Sample::Nodata => f64::NAN,
            Sample::Outside => {
                outside += 1;
                f64::NAN
            }
        }
    });
    if outside > 0 {
        return Err(Error::Uncovered { fraction: outside as f64 / (rows * cols) as f64 });
    }
    Ok(HeightRaster { kind: raster.kind, values, nodata: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::HeightKind;

    fn ramp(rows: usize, cols: usize) -> HeightRaster {
        HeightRaster::new(HeightKind::Dtm, Grid::from_fn(rows, cols, |r, c| r as f64 + 2.0 * c as f64))
    }

    #[test]
    fn identity() {
        let src = ramp(5, 7);
        assert_eq!(resample_to_radar(&src, &Mapping::identity(), 5, 7).unwrap().values, src.values);
    }

    #[test]
    fn integer_translation() {
        let src = ramp(6, 6);
        let m = Mapping::Affine([[1.0, 0.0, 2.0], [0.0, 1.0, 1.0]]);
        let out = resample_to_radar(&src, &m, 4, 5).unwrap();
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(out.value(r, c), src.value(r + 2, c + 1));
            }
        }
    }

    #[test]
    fn downscale_ramp_is_exact_at_block_centres() {
        let src = ramp(8, 8);
        let m = Mapping::Affine([[2.0, 0.0, 0.5], [0.0, 2.0, 0.5]]);
        let out = resample_to_radar(&src, &m, 4, 4).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = (2 * r) as f64 + 0.5 + 2.0 * ((2 * c) as f64 + 0.5);
                assert!((out.value(r, c).unwrap() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nodata_corner_propagates() {
        let mut src = ramp(4, 4);
        *src.values.get_mut(1, 1) = f64::NAN;
        let m = Mapping::Affine([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]);
        let out = resample_to_radar(&src, &m, 3, 3).unwrap();
        assert!(out.value(0, 0).is_none());
        assert!(out.value(1, 1).is_none());
        assert!(out.value(2, 2).is_some());
    }

    #[test]
    fn uncovered_fraction_reported() {
        let src = ramp(4, 4);
        let m = Mapping::Affine([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0]]);
        match resample_to_radar(&src, &m, 4, 4) {
            Err(Error::Uncovered { fraction }) => assert!((fraction - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lookup_nearest() {
        let src = ramp(4, 4);
        let lut = Grid::from_vec(1, 3, alloc::vec![(0.4, 0.6), (2.6, 3.0), (f64::NAN, 0.0)]).unwrap();
        let out = resample_to_radar(&src, &Mapping::Lookup(lut), 1, 3).unwrap();
        assert_eq!(out.value(0, 0), Some(2.0));
        assert_eq!(out.value(0, 1), Some(9.0));
        assert_eq!(out.value(0, 2), None);
    }
}
