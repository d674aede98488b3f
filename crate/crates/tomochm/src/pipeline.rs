//! One function per subcommand. Every stage reads the artifacts of earlier
//! stages from the run's output directory and writes its own.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use tomochm_core::datapipe::{
    fit_scaler_multi, height_mask, joint_fractions, patchify, quadrant_split, PatchDataset, PatchSpec, ScalerParams,
    Split, SplitAssignment,
};
use tomochm_core::evalkit::mae;
use tomochm_core::geometry::{AcquisitionGeometry, SlcStack};
use tomochm_core::linalg::CMatrix;
use tomochm_core::raster::{HeightKind, HeightRaster};
use tomochm_core::specest::SteeringTable;
use tomochm_core::tomo::{
    estimate_covariance_row, extract_features, select_subset, slice_features, FeatureStack, SubsetSelection,
};

use crate::artifacts::{
    read_features, write_covariance, write_features, write_subset, CovarianceMeta, FeatureMeta, SubsetRecord,
};
use crate::config::{RunConfig, SceneConfig};
use crate::dataset::{export_dataset, group_by_split, DatasetIndex, SourceInfo, INDEX_SCHEMA};
use crate::error::{Error, Result};
use crate::evaluate::{build_report, evaluate_dir};
use crate::hash::{file_sha256, read_json, write_json};
use crate::report::{append_csv, write_report, EvalReport};
use crate::stack_io::{read_height, read_manifest, read_stack, truth_dir, write_height, write_stack, STACK_MANIFEST};
use crate::{npy, parallel};

/// A validated config with its hash and worker pool.
pub struct Context {
    pub cfg: RunConfig,
    pub hash: String,
    pub pool: ThreadPool,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let threads = parallel::resolve_threads(cfg.threads)?;
        let pool = parallel::pool(threads)?;
        Ok(Self { hash: cfg.hash(), cfg, pool })
    }

    fn out(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.cfg.output.clone(), |p, s| p.join(s))
    }

    pub fn steered_dir(&self, heading: &str) -> PathBuf {
        self.out(&["steered", heading])
    }

    pub fn covariance_dir(&self, heading: &str) -> PathBuf {
        self.out(&["covariance", heading])
    }

    pub fn features_dir(&self, heading: &str) -> PathBuf {
        self.out(&["features", heading])
    }

    pub fn scaled_dir(&self, heading: &str) -> PathBuf {
        self.out(&["scaled", heading])
    }

    pub fn split_path(&self, heading: &str) -> PathBuf {
        self.out(&["split", &format!("{heading}.json")])
    }

    pub fn baseline_dir(&self, heading: &str) -> PathBuf {
        self.out(&["baseline", heading])
    }

    pub fn subset_path(&self) -> PathBuf {
        self.out(&["subset.json"])
    }

    pub fn scaler_path(&self) -> PathBuf {
        self.out(&["scaler.json"])
    }

    pub fn patchify_path(&self) -> PathBuf {
        self.out(&["patchify.json"])
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.out(&["dataset"])
    }

    pub fn headings(&self) -> &[String] {
        &self.cfg.stack.headings
    }
}

/// Acquisition layout used by `simulate`.
pub fn simulation_geometry(cfg: &RunConfig, heading: &str) -> Result<AcquisitionGeometry> {
    let s = &cfg.scene;
    let pol = cfg.stack.polarization;
    let mut g = if s.n_images == 7 {
        AcquisitionGeometry::desk_seven(s.resolution_m, pol)?
    } else {
        AcquisitionGeometry::irregular(s.n_images, s.resolution_m, cfg.seed, pol)?
    };
    g.heading_label = heading.to_owned();
    Ok(g)
}

#[derive(Debug, Serialize)]
struct SceneEcho<'a> {
    config_hash: &'a str,
    heading: &'a str,
    run_seed: u64,
    /// Derived per-heading simulation seed, hex (TOML integers are signed).
    scene_seed: String,
    scene: &'a SceneConfig,
}

pub fn simulate(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for (i, heading) in ctx.headings().iter().enumerate() {
        let dir = ctx.cfg.stack_dir(heading);
        let spec = ctx.cfg.scene_spec(i)?;
        let geometry = simulation_geometry(&ctx.cfg, heading)?;
        let (stack, dtm, chm) = parallel::simulate(&ctx.pool, &spec, &geometry)?;
        write_stack(&dir, &stack, Some(&ctx.hash))?;
        let truth = truth_dir(&dir);
        write_height(&truth.join("dtm.npy"), &dtm)?;
        write_height(&truth.join("chm.npy"), &chm)?;
        let echo = SceneEcho {
            config_hash: &ctx.hash,
            heading,
            run_seed: ctx.cfg.seed,
            scene_seed: format!("{:#018x}", spec.seed),
            scene: &ctx.cfg.scene,
        };
        let text = toml::to_string(&echo).map_err(|e| Error::Config(e.to_string()))?;
        let path = dir.join("scene.toml");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        log::info!("simulated {heading}: {}x{} with {} images", spec.rows, spec.cols, geometry.len());
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Finds a height raster next to a stack: `truth/<name>` first, then `<name>`.
pub fn height_path(stack_dir: &Path, name: &str) -> PathBuf {
    let truth = truth_dir(stack_dir).join(name);
    if truth.exists() {
        truth
    } else {
        stack_dir.join(name)
    }
}

pub fn load_stack(ctx: &Context, heading: &str) -> Result<(SlcStack, HeightRaster)> {
    let dir = ctx.cfg.stack_dir(heading);
    let stack = read_stack(&dir)?;
    let dtm = read_height(&height_path(&dir, "dtm.npy"), HeightKind::Dtm)?;
    Ok((stack, dtm))
}

fn steered(ctx: &Context, heading: &str) -> Result<SlcStack> {
    let (stack, dtm) = load_stack(ctx, heading)?;
    parallel::ground_steer(&ctx.pool, &stack, &dtm)
}

pub fn steer(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for heading in ctx.headings() {
        let dir = ctx.steered_dir(heading);
        write_stack(&dir, &steered(ctx, heading)?, Some(&ctx.hash))?;
        dirs.push(dir);
    }
    Ok(dirs)
}

fn stack_sha(ctx: &Context, heading: &str) -> Result<String> {
    file_sha256(&ctx.cfg.stack_dir(heading).join(STACK_MANIFEST))
}

pub fn covariance(ctx: &Context) -> Result<Vec<PathBuf>> {
    let window = ctx.cfg.window()?;
    let normalized = ctx.cfg.features.normalized;
    let mut dirs = Vec::new();
    for heading in ctx.headings() {
        let cov = parallel::covariance(&ctx.pool, &steered(ctx, heading)?, window, normalized)?;
        let dir = ctx.covariance_dir(heading);
        let meta = CovarianceMeta {
            window,
            normalized,
            steered: true,
            source_stack_sha256: stack_sha(ctx, heading)?,
            config_hash: ctx.hash.clone(),
        };
        write_covariance(&dir, &cov, &meta)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// The configured subset of a `total`-image stack; all images when `n_slc`
/// is unset.
pub fn subset_selection(cfg: &RunConfig, total: usize) -> Result<SubsetSelection> {
    let n = cfg.features.n_slc.unwrap_or(total);
    if n > total {
        return Err(Error::Config(format!("n_slc {n} exceeds the {total} images in the stack")));
    }
    Ok(select_subset(n, total, cfg.seed)?)
}

pub fn stack_size(ctx: &Context) -> Result<usize> {
    let heading = &ctx.headings()[0];
    Ok(read_manifest(&ctx.cfg.stack_dir(heading))?.images.len())
}

pub fn subset(ctx: &Context, total: Option<usize>) -> Result<SubsetRecord> {
    let total = match total {
        Some(t) => t,
        None => stack_size(ctx)?,
    };
    let sel = subset_selection(&ctx.cfg, total)?;
    let record = SubsetRecord { n: sel.n(), total, seed: sel.seed, indices: sel.indices, config_hash: ctx.hash.clone() };
    write_subset(&ctx.subset_path(), &record)?;
    Ok(record)
}

pub fn features(ctx: &Context) -> Result<Vec<PathBuf>> {
    let window = ctx.cfg.window()?;
    let normalized = ctx.cfg.features.normalized;
    let mut dirs = Vec::new();
    for heading in ctx.headings() {
        let s = steered(ctx, heading)?;
        let sel = subset_selection(&ctx.cfg, s.len())?;
        let cov = parallel::covariance(&ctx.pool, &s, window, normalized)?;
        let full = extract_features(&cov);
        let sliced = slice_features(&full, &sel)?;
        let meta = FeatureMeta {
            window,
            normalized,
            subset: sel.indices.clone(),
            steered: true,
            source_stack_sha256: stack_sha(ctx, heading)?,
            config_hash: ctx.hash.clone(),
        };
        let dir = ctx.features_dir(heading);
        write_features(&dir, &sliced, &meta)?;
        log::info!("features {heading}: {} channels", sliced.channels());
        dirs.push(dir);
    }
    Ok(dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub assignment: SplitAssignment,
    /// Train, val, test fractions of patch cells.
    pub achieved: [f64; 3],
    pub config_hash: String,
}

pub fn split(ctx: &Context) -> Result<Vec<SplitRecord>> {
    let mut out = Vec::new();
    for heading in ctx.headings() {
        let (features, _) = read_features(&ctx.features_dir(heading))?;
        let (rows, cols) = features.shape();
        let assignment = quadrant_split(rows, cols, ctx.cfg.dataset.patch_size, ctx.cfg.fractions())?;
        let record = SplitRecord { achieved: assignment.achieved(), assignment, config_hash: ctx.hash.clone() };
        write_json(&ctx.split_path(heading), &record)?;
        out.push(record);
    }
    let refs: Vec<&SplitAssignment> = out.iter().map(|r| &r.assignment).collect();
    log::info!("joint split fractions {:?}", joint_fractions(&refs));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerRecord {
    pub scaler: ScalerParams,
    pub headings: Vec<String>,
    pub config_hash: String,
}

pub fn scale(ctx: &Context) -> Result<ScalerRecord> {
    let mut loaded = Vec::new();
    for heading in ctx.headings() {
        let (f, meta) = read_features(&ctx.features_dir(heading))?;
        let split: SplitRecord = read_json(&ctx.split_path(heading))?;
        loaded.push((f, meta, split.assignment));
    }
    let sources: Vec<(&FeatureStack, &SplitAssignment)> = loaded.iter().map(|(f, _, a)| (f, a)).collect();
    let scaler = fit_scaler_multi(&sources)?;
    for ((f, meta, _), heading) in loaded.iter().zip(ctx.headings()) {
        let scaled = tomochm_core::datapipe::apply_scaler(f, &scaler)?;
        let meta = FeatureMeta { config_hash: ctx.hash.clone(), ..meta.clone() };
        write_features(&ctx.scaled_dir(heading), &scaled, &meta)?;
    }
    let record = ScalerRecord { scaler, headings: ctx.headings().to_vec(), config_hash: ctx.hash.clone() };
    write_json(&ctx.scaler_path(), &record)?;
    Ok(record)
}

/// Patches every heading from the scaled features: train at the configured
/// stride, val and test at half the patch size.
pub fn build_dataset(ctx: &Context) -> Result<(PatchDataset, DatasetIndex)> {
    let d = &ctx.cfg.dataset;
    let p = d.patch_size;
    let scaler: ScalerRecord = read_json(&ctx.scaler_path())?;
    let mut dataset: Option<PatchDataset> = None;
    let mut sources = Vec::new();
    let mut subset = None;
    for (source, heading) in ctx.headings().iter().enumerate() {
        let (features, meta) = read_features(&ctx.scaled_dir(heading))?;
        if subset.get_or_insert_with(|| meta.subset.clone()) != &meta.subset {
            return Err(Error::Config("headings were featurized with different subsets".into()));
        }
        let split: SplitRecord = read_json(&ctx.split_path(heading))?;
        let chm = read_height(&height_path(&ctx.cfg.stack_dir(heading), "chm.npy"), HeightKind::Chm)?;
        let mask = height_mask(&chm, d.height_filter_m);
        let labels = split.assignment.pixel_labels();
        let train = PatchSpec { size: p, stride: d.train_stride, splits: vec![Split::Train] };
        let eval = PatchSpec { size: p, stride: p / 2, splits: vec![Split::Val, Split::Test] };
        for spec in [train, eval] {
            let part = patchify(&features, &chm, &mask, &labels, &spec, source)?;
            match dataset.as_mut() {
                Some(ds) => ds.extend(part),
                None => dataset = Some(part),
            }
        }
        let (rows, cols) = features.shape();
        sources.push(SourceInfo { heading: heading.clone(), rows, cols, split: split.assignment });
    }
    let dataset = group_by_split(dataset.expect("at least one heading"));
    let index = DatasetIndex {
        schema: INDEX_SCHEMA,
        patch_size: p,
        channels: dataset.channels,
        subset: subset.unwrap_or_default(),
        polarization: ctx.cfg.stack.polarization.to_string(),
        height_filter_m: d.height_filter_m,
        strides: [(Split::Train, d.train_stride), (Split::Val, p / 2), (Split::Test, p / 2)].into_iter().collect(),
        counts: Split::ALL.iter().map(|s| (*s, dataset.count(*s))).collect(),
        dropped: dataset.dropped,
        scaler: scaler.scaler,
        sources,
        positions: Default::default(),
        config_hash: ctx.hash.clone(),
    };
    Ok((dataset, index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSummary {
    pub patch_size: usize,
    pub counts: std::collections::BTreeMap<Split, usize>,
    pub dropped: usize,
    /// Train, val, test fractions of patch cells over all headings.
    pub cell_fractions: [f64; 3],
    pub config_hash: String,
}

pub fn patchify_summary(ctx: &Context) -> Result<PatchSummary> {
    let (dataset, index) = build_dataset(ctx)?;
    let refs: Vec<&SplitAssignment> = index.sources.iter().map(|s| &s.split).collect();
    let summary = PatchSummary {
        patch_size: dataset.patch_size,
        counts: index.counts.clone(),
        dropped: dataset.dropped,
        cell_fractions: joint_fractions(&refs),
        config_hash: ctx.hash.clone(),
    };
    write_json(&ctx.patchify_path(), &summary)?;
    Ok(summary)
}

pub fn export(ctx: &Context) -> Result<DatasetIndex> {
    let (dataset, index) = build_dataset(ctx)?;
    export_dataset(&ctx.dataset_dir(), &dataset, &index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub heading: String,
    pub method: crate::config::Method,
    pub threshold_db: f64,
    pub window: tomochm_core::tomo::Window,
    pub grid: tomochm_core::specest::VerticalGrid,
    /// Against `chm.npy` when the stack carries one.
    pub mae_m: Option<f64>,
    pub config_hash: String,
}

pub fn baseline(ctx: &Context) -> Result<Vec<BaselineRecord>> {
    let b = &ctx.cfg.baseline;
    let window = ctx.cfg.window()?;
    let method = ctx.cfg.method();
    let mut out = Vec::new();
    for heading in ctx.headings() {
        let s = steered(ctx, heading)?;
        let chm = parallel::baseline(&ctx.pool, &s, window, &b.grid, method, b.threshold_db)?;
        let dir = ctx.baseline_dir(heading);
        write_height(&dir.join("chm_pred.npy"), &chm)?;

        let [row, col] = b.sample_pixel;
        let (rows, cols) = s.shape();
        if row >= rows || col >= cols {
            return Err(Error::Config(format!("sample_pixel ({row}, {col}) outside {rows}x{cols}")));
        }
        let n = s.len();
        let cov_row = estimate_covariance_row(&s, window, false, row)?;
        let r = CMatrix::from_vec(n, cov_row[col * n * n..(col + 1) * n * n].to_vec())?;
        let table = SteeringTable::new(&s.geometry.kz(), b.grid)?;
        let profile = table.spectrum(&r, method)?;
        let mut csv = String::from("z_m,power\n");
        for (k, p) in profile.power.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", b.grid.z(k), p));
        }
        let path = dir.join("profile_sample.csv");
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

        let truth_path = height_path(&ctx.cfg.stack_dir(heading), "chm.npy");
        let mae_m = if truth_path.exists() {
            let truth = read_height(&truth_path, HeightKind::Chm)?;
            let valid: Vec<bool> = truth.values.as_slice().iter().map(|v| !truth.is_nodata(*v)).collect();
            Some(mae(chm.values.as_slice(), truth.values.as_slice(), &valid)?)
        } else {
            None
        };
        let record = BaselineRecord {
            heading: heading.clone(),
            method: b.method,
            threshold_db: b.threshold_db,
            window,
            grid: b.grid,
            mae_m,
            config_hash: ctx.hash.clone(),
        };
        write_json(&dir.join("baseline.json"), &record)?;
        out.push(record);
    }
    Ok(out)
}

/// Scores `pred` against `dataset`, writes `out` (JSON), appends
/// `out` with a `.csv` extension, and writes the mosaics beside `out`.
pub fn eval(dataset: &Path, pred: &Path, height_filter_m: f64, out: &Path, model: &str) -> Result<EvalReport> {
    let (index, ev) = evaluate_dir(dataset, pred, height_filter_m)?;
    let report = build_report(&index, &ev, height_filter_m, model);
    write_report(out, &report)?;
    append_csv(&out.with_extension("csv"), &report)?;
    let dir = out.parent().unwrap_or(Path::new("."));
    let single = index.sources.len() == 1;
    for (info, (pred, truth)) in index.sources.iter().zip(&ev.mosaics) {
        let suffix = if single { String::new() } else { format!("_{}", info.heading) };
        write_height(&dir.join(format!("mosaic_pred{suffix}.npy")), pred)?;
        write_height(&dir.join(format!("mosaic_truth{suffix}.npy")), truth)?;
    }
    Ok(report)
}

/// Markdown table over saved reports.
pub fn report_table(paths: &[PathBuf]) -> Result<String> {
    let mut text = String::from(crate::report::markdown_header());
    text.push('\n');
    for path in paths {
        text.push_str(&crate::report::read_report(path)?.markdown_row());
        text.push('\n');
    }
    Ok(text)
}

/// Writes the identity predictions (`targets_{split}.npy` copied to
/// `preds_{split}.npy`) for val and test into `dir`.
pub fn write_identity_predictions(dataset: &Path, dir: &Path) -> Result<()> {
    for split in [Split::Val, Split::Test] {
        let from = dataset.join(crate::dataset::file_name("targets", split));
        let a = npy::read::<f32>(&from)?;
        npy::write(&dir.join(format!("preds_{}.npy", split.name())), &a.shape, &a.data)?;
    }
    Ok(())
}
