use super::Split;
use crate::error::{invalid, Error, Result};
use crate::raster::{Grid, HeightRaster};
use crate::tomo::FeatureStack;
use alloc::format;
use alloc::vec::Vec;

/// `true` where the canopy height is valid and at least `threshold_m`.
pub fn height_mask(chm: &HeightRaster, threshold_m: f64) -> Grid<bool> {
    chm.values.map(|&v| !chm.is_nodata(v) && v >= threshold_m)
}

/// Patch size, stride and which splits to emit.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSpec {
    pub size: usize,
    pub stride: usize,
    pub splits: Vec<Split>,
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || !self.size.is_multiple_of(2) {
            return Err(invalid(format!("patch size {} must be even and positive", self.size)));
        }
        if self.stride != self.size && self.stride != self.size / 2 {
            return Err(invalid(format!("stride {} must be P or P/2 for P = {}", self.stride, self.size)));
        }
        Ok(())
    }
}

/// One extracted patch. Features are channel-major `(C, P, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub split: Split,
    /// Index of the source raster (heading) the patch came from.
    pub source: usize,
    pub row: usize,
    pub col: usize,
    pub features: Vec<f32>,
    /// Heights in meters, `(P, P)`. Masked-out cells hold 0.
    pub target: Vec<f32>,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchDataset {
    pub patch_size: usize,
    pub channels: usize,
    pub records: Vec<PatchRecord>,
    /// Positions whose footprint straddled a split boundary or left the
    /// assigned region.
    pub dropped: usize,
}

impl PatchDataset {
    pub fn new(patch_size: usize, channels: usize) -> Self {
        Self { patch_size, channels, records: Vec::new(), dropped: 0 }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &PatchRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn extend(&mut self, other: PatchDataset) {
        self.records.extend(other.records);
        self.dropped += other.dropped;
    }
}

/// Emits every `size × size` patch at multiples of `stride` whose footprint
/// lies entirely inside one split region listed in `spec.splits`.
/// Footprints crossing a boundary are dropped and counted.
pub fn patchify(
    features: &FeatureStack,
    targets: &HeightRaster,
    mask: &Grid<bool>,
    labels: &Grid<Option<Split>>,
    spec: &PatchSpec,
    source: usize,
) -> Result<PatchDataset> {
    spec.validate()?;
    let shape = features.shape();
    for (what, found) in [("targets", targets.shape()), ("mask", mask.shape()), ("split labels", labels.shape())] {
        if found != shape {
            return Err(Error::ShapeMismatch { what, expected: shape, found });
        }
    }
    let (rows, cols) = shape;
    let (p, s) = (spec.size, spec.stride);
    let channels = features.channels();
    let mut out = PatchDataset::new(p, channels);
    if rows < p || cols < p {
        return Ok(out);
    }
    for r0 in (0..=rows - p).step_by(s) {
        for c0 in (0..=cols - p).step_by(s) {
            let first = *labels.get(r0, c0);
            let uniform = first.is_some()
                && (r0..r0 + p).all(|r| labels.row(r)[c0..c0 + p].iter().all(|l| *l == first));
            let Some(split) = first.filter(|_| uniform) else {
                out.dropped += 1;
                continue;
            };
            if !spec.splits.contains(&split) {
                continue;
            }
            let mut feats = Vec::with_capacity(channels * p * p);
            for k in 0..channels {
                for r in r0..r0 + p {
                    for c in c0..c0 + p {
                        feats.push(features.get(r, c, k) as f32);
                    }
                }
            }
            let mut target = Vec::with_capacity(p * p);
            let mut m = Vec::with_capacity(p * p);
            for r in r0..r0 + p {
                for c in c0..c0 + p {
                    let valid = *mask.get(r, c);
                    m.push(valid);
                    target.push(match targets.value(r, c) {
                        Some(v) if valid => v as f32,
                        _ => 0.0,
                    });
                }
            }
            out.records.push(PatchRecord { split, source, row: r0, col: c0, features: feats, target, mask: m });
        }
    }
    Ok(out)
}
