//! Dataset directories consumed by the trainer and by `eval`.
//!
//! ```text
//! patches_{split}.npy  float32 (num, C, P, P)   scaled features
//! targets_{split}.npy  float32 (num, 1, P, P)   heights in meters, 0 where masked
//! mask_{split}.npy     bool    (num, 1, P, P)
//! index.json           see [`DatasetIndex`]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tomochm_core::datapipe::{PatchDataset, PatchRecord, ScalerParams, Split, SplitAssignment};
use tomochm_core::raster::Grid;

use crate::error::{Error, Result};
use crate::hash::{read_json, write_json};
use crate::npy;

pub const INDEX_JSON: &str = "index.json";
pub const INDEX_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub heading: String,
    pub rows: usize,
    pub cols: usize,
    pub split: SplitAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub schema: u32,
    pub patch_size: usize,
    pub channels: usize,
    /// Stack image indices behind the feature channels.
    pub subset: Vec<usize>,
    pub polarization: String,
    pub height_filter_m: f64,
    pub strides: BTreeMap<Split, usize>,
    pub counts: BTreeMap<Split, usize>,
    /// Positions skipped because their footprint crossed a split boundary.
    pub dropped: usize,
    pub scaler: ScalerParams,
    pub sources: Vec<SourceInfo>,
    /// `[source, row, col]` of every patch, in file order.
    pub positions: BTreeMap<Split, Vec<[usize; 3]>>,
    pub config_hash: String,
}

pub fn file_name(kind: &str, split: Split) -> String {
    format!("{kind}_{}.npy", split.name())
}

/// Reorders records by split (train, val, test), keeping their relative
/// order. This is the order in which they are stored.
pub fn group_by_split(mut ds: PatchDataset) -> PatchDataset {
    ds.records.sort_by_key(|r| r.split);
    ds
}

/// Writes the arrays and index. Records are stored grouped by split; the
/// `positions` and `counts` of `index` are filled in here.
pub fn export_dataset(dir: &Path, dataset: &PatchDataset, index: &DatasetIndex) -> Result<DatasetIndex> {
    let p = dataset.patch_size;
    let c = dataset.channels;
    let mut index = index.clone();
    index.patch_size = p;
    index.channels = c;
    index.dropped = dataset.dropped;
    index.positions.clear();
    index.counts.clear();
    for split in Split::ALL {
        let records: Vec<&PatchRecord> = dataset.split(split).collect();
        let num = records.len();
        let mut feats = Vec::with_capacity(num * c * p * p);
        let mut targets = Vec::with_capacity(num * p * p);
        let mut masks = Vec::with_capacity(num * p * p);
        for r in &records {
            if r.features.len() != c * p * p || r.target.len() != p * p || r.mask.len() != p * p {
                return Err(Error::format(dir, "patch record buffers do not match the dataset shape"));
            }
            feats.extend_from_slice(&r.features);
            targets.extend_from_slice(&r.target);
            masks.extend_from_slice(&r.mask);
        }
        npy::write(&dir.join(file_name("patches", split)), &[num, c, p, p], &feats)?;
        npy::write(&dir.join(file_name("targets", split)), &[num, 1, p, p], &targets)?;
        npy::write(&dir.join(file_name("mask", split)), &[num, 1, p, p], &masks)?;
        index.positions.insert(split, records.iter().map(|r| [r.source, r.row, r.col]).collect());
        index.counts.insert(split, num);
    }
    write_json(&dir.join(INDEX_JSON), &index)?;
    Ok(index)
}

pub fn read_index(dir: &Path) -> Result<DatasetIndex> {
    let path = dir.join(INDEX_JSON);
    let index: DatasetIndex = read_json(&path)?;
    if index.schema != INDEX_SCHEMA {
        return Err(Error::format(&path, format!("unsupported index schema {}", index.schema)));
    }
    Ok(index)
}

fn check_shape(path: &Path, found: &[usize], want: &[usize]) -> Result<()> {
    if found != want {
        return Err(Error::format(path, format!("shape {found:?}, expected {want:?}")));
    }
    Ok(())
}

/// Reads one split's targets and masks as `(num·P·P)` buffers.
pub fn read_targets(dir: &Path, index: &DatasetIndex, split: Split) -> Result<(Vec<f32>, Vec<bool>)> {
    let p = index.patch_size;
    let num = index.positions.get(&split).map_or(0, Vec::len);
    let tpath = dir.join(file_name("targets", split));
    let t = npy::read::<f32>(&tpath)?;
    check_shape(&tpath, &t.shape, &[num, 1, p, p])?;
    let mpath = dir.join(file_name("mask", split));
    let m = npy::read::<bool>(&mpath)?;
    check_shape(&mpath, &m.shape, &[num, 1, p, p])?;
    Ok((t.data, m.data))
}

pub fn import_dataset(dir: &Path) -> Result<(PatchDataset, DatasetIndex)> {
    let index = read_index(dir)?;
    let (p, c) = (index.patch_size, index.channels);
    let mut ds = PatchDataset::new(p, c);
    ds.dropped = index.dropped;
    for split in Split::ALL {
        let positions = index.positions.get(&split).cloned().unwrap_or_default();
        let num = positions.len();
        let fpath = dir.join(file_name("patches", split));
        let f = npy::read::<f32>(&fpath)?;
        check_shape(&fpath, &f.shape, &[num, c, p, p])?;
        let (t, m) = read_targets(dir, &index, split)?;
        for (i, [source, row, col]) in positions.into_iter().enumerate() {
            ds.records.push(PatchRecord {
                split,
                source,
                row,
                col,
                features: f.data[i * c * p * p..(i + 1) * c * p * p].to_vec(),
                target: t[i * p * p..(i + 1) * p * p].to_vec(),
                mask: m[i * p * p..(i + 1) * p * p].to_vec(),
            });
        }
    }
    Ok((ds, index))
}

/// Truth heights and validity of one source, painted from the stored
/// patches of `splits`. Pixels no patch covers are invalid.
pub fn paint_truth(
    dir: &Path,
    index: &DatasetIndex,
    source: usize,
    splits: &[Split],
) -> Result<(Grid<f64>, Grid<bool>)> {
    let info = index.sources.get(source).ok_or_else(|| Error::format(dir, format!("no source {source}")))?;
    let p = index.patch_size;
    let mut truth = Grid::filled(info.rows, info.cols, f64::NAN);
    let mut valid = Grid::filled(info.rows, info.cols, false);
    for &split in splits {
        let (t, m) = read_targets(dir, index, split)?;
        for (i, &[s, r0, c0]) in index.positions.get(&split).into_iter().flatten().enumerate() {
            if s != source {
                continue;
            }
            if r0 + p > info.rows || c0 + p > info.cols {
                return Err(Error::format(dir, format!("patch at ({r0}, {c0}) leaves source {source}")));
            }
            for k in 0..p * p {
                let (r, c) = (r0 + k / p, c0 + k % p);
                *truth.get_mut(r, c) = t[i * p * p + k] as f64;
                *valid.get_mut(r, c) = m[i * p * p + k];
            }
        }
    }
    Ok((truth, valid))
}
