//! Command-line front end. Flags override values from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::parallel::THREADS_ENV;
use crate::pipeline::{self, Context};

#[derive(Debug, Parser)]
#[command(name = "tomochm", version, about = "Canopy height from SAR image stacks: simulation, features, datasets, baseline tomography and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Run configuration file (TOML, `schema = 1`)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved plan without writing anything
    #[arg(long)]
    pub dry_run: bool,
    /// Worker threads; falls back to TOMOCHM_THREADS, then all cores
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Output directory of the run
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Run seed (simulation and subset selection)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Heading labels, comma separated
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub headings: Option<Vec<String>>,
    /// Directory holding one stack directory per heading
    #[arg(long, value_name = "DIR")]
    pub stack_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowArgs {
    /// Multilook window as AZIMUTH,RANGE (odd sizes)
    #[arg(long, value_parser = parse_pair, value_name = "AZ,RG")]
    pub window: Option<[usize; 2]>,
    /// Normalize covariance entries to coherences
    #[arg(long)]
    pub normalized: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PatchArgs {
    /// Patch size in pixels (multiple of 4)
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// Train patch stride (patch size or half of it)
    #[arg(long)]
    pub train_stride: Option<usize>,
    /// Mask out pixels whose canopy height is below this many meters
    #[arg(long, value_name = "M")]
    pub height_filter: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a stack per heading with DTM/CHM truth
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Scene rows
        #[arg(long)]
        rows: Option<usize>,
        /// Scene columns
        #[arg(long)]
        cols: Option<usize>,
        /// Number of images
        #[arg(long)]
        n_images: Option<usize>,
        /// Signal-to-noise ratio in dB
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Remove the terrain phase from every image
    Steer {
        #[command(flatten)]
        common: Common,
    },
    /// Multilooked covariance matrices of the steered stack
    Covariance {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Covariance features (diagonal, real and imaginary master row)
    Features {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
        /// Number of images to keep (3, 7 or 28)
        #[arg(long)]
        n_slc: Option<usize>,
    },
    /// Deterministic image subset, written to subset.json
    Subset {
        #[command(flatten)]
        common: Common,
        /// Subset size (3, 7 or 28)
        #[arg(long)]
        n: Option<usize>,
        /// Stack size; read from the first stack when omitted
        #[arg(long)]
        total: Option<usize>,
    },
    /// Train/val/test band assignment per heading
    Split {
        #[command(flatten)]
        common: Common,
        /// Patch size in pixels (multiple of 4)
        #[arg(long)]
        patch_size: Option<usize>,
    },
    /// Fit the min-max scaler on train pixels and scale the features
    Scale {
        #[command(flatten)]
        common: Common,
    },
    /// Count patches per split without writing the dataset
    Patchify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        patch: PatchArgs,
    },
    /// Write the patch dataset directory
    Export {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        patch: PatchArgs,
    },
    /// Full-tomography canopy height (beamforming or Capon)
    Baseline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
        /// Spectral estimator: beamforming or capon
        #[arg(long)]
        method: Option<Method>,
        /// Profile threshold below the peak, in dB (negative)
        #[arg(long, allow_hyphen_values = true)]
        threshold_db: Option<f64>,
        /// Pixel whose profile goes to profile_sample.csv, as ROW,COL
        #[arg(long, value_parser = parse_pair, value_name = "ROW,COL")]
        sample_pixel: Option<[usize; 2]>,
    },
    /// Score predictions against a dataset directory
    Eval {
        #[command(flatten)]
        common: Common,
        /// Predictions: preds_{split}.npy, a directory of them, or an (H, W) raster
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// Dataset directory written by `export`
        #[arg(long, value_name = "DIR")]
        dataset: PathBuf,
        /// Ignore pixels whose true height is below this many meters
        #[arg(long, value_name = "M", default_value_t = 0.0)]
        height_filter: f64,
        /// Report path (JSON); a CSV row is appended next to it
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Model name recorded in the report
        #[arg(long, default_value = "external")]
        model: String,
    },
    /// Summarize report files as a Markdown table
    Report {
        #[command(flatten)]
        common: Common,
        /// Report JSON files
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the table to this file
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Steer { .. } => "steer",
            Command::Covariance { .. } => "covariance",
            Command::Features { .. } => "features",
            Command::Subset { .. } => "subset",
            Command::Split { .. } => "split",
            Command::Scale { .. } => "scale",
            Command::Patchify { .. } => "patchify",
            Command::Export { .. } => "export",
            Command::Baseline { .. } => "baseline",
            Command::Eval { .. } => "eval",
            Command::Report { .. } => "report",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Steer { common }
            | Command::Covariance { common, .. }
            | Command::Features { common, .. }
            | Command::Subset { common, .. }
            | Command::Split { common, .. }
            | Command::Scale { common }
            | Command::Patchify { common, .. }
            | Command::Export { common, .. }
            | Command::Baseline { common, .. }
            | Command::Eval { common, .. }
            | Command::Report { common, .. } => common,
        }
    }
}

fn parse_pair(s: &str) -> std::result::Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([a.parse().map_err(|e| format!("{a:?}: {e}"))?, b.parse().map_err(|e| format!("{b:?}: {e}"))?]),
        _ => Err(format!("expected two comma-separated integers, got {s:?}")),
    }
}

fn apply_window(cfg: &mut RunConfig, w: &WindowArgs) {
    if let Some(v) = w.window {
        cfg.features.window = v;
    }
    if w.normalized {
        cfg.features.normalized = true;
    }
}

fn apply_patch(cfg: &mut RunConfig, p: &PatchArgs) {
    if let Some(v) = p.patch_size {
        cfg.dataset.patch_size = v;
        if p.train_stride.is_none() {
            cfg.dataset.train_stride = v;
        }
    }
    if let Some(v) = p.train_stride {
        cfg.dataset.train_stride = v;
    }
    if let Some(v) = p.height_filter {
        cfg.dataset.height_filter_m = v;
    }
}

/// Config file (or defaults) with every flag applied, validated.
pub fn resolve_config(command: &Command) -> Result<RunConfig> {
    let common = command.common();
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &common.output {
        cfg.output = v.clone();
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = &common.headings {
        cfg.stack.headings = v.clone();
    }
    if let Some(v) = &common.stack_dir {
        cfg.stack.dir = Some(v.clone());
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    match command {
        Command::Simulate { rows, cols, n_images, snr_db, .. } => {
            if let Some(v) = rows {
                cfg.scene.rows = *v;
            }
            if let Some(v) = cols {
                cfg.scene.cols = *v;
            }
            if let Some(v) = n_images {
                cfg.scene.n_images = *v;
            }
            if snr_db.is_some() {
                cfg.scene.snr_db = *snr_db;
            }
        }
        Command::Covariance { window, .. } => apply_window(&mut cfg, window),
        Command::Features { window, n_slc, .. } => {
            apply_window(&mut cfg, window);
            if n_slc.is_some() {
                cfg.features.n_slc = *n_slc;
            }
        }
        Command::Subset { n, .. } => {
            if n.is_some() {
                cfg.features.n_slc = *n;
            }
        }
        Command::Split { patch_size, .. } => {
            apply_patch(&mut cfg, &PatchArgs { patch_size: *patch_size, ..Default::default() })
        }
        Command::Patchify { patch, .. } | Command::Export { patch, .. } => apply_patch(&mut cfg, patch),
        Command::Baseline { window, method, threshold_db, sample_pixel, .. } => {
            apply_window(&mut cfg, window);
            if let Some(m) = method {
                cfg.baseline.method = *m;
            }
            if let Some(t) = threshold_db {
                cfg.baseline.threshold_db = *t;
            }
            if let Some(p) = sample_pixel {
                cfg.baseline.sample_pixel = *p;
            }
        }
        Command::Steer { .. } | Command::Scale { .. } | Command::Eval { .. } | Command::Report { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Inputs and outputs of a command, one per line.
pub fn plan(command: &Command, cfg: &RunConfig) -> Vec<String> {
    let mut lines = vec![format!("command: {}", command.name()), format!("config_hash: {}", cfg.hash())];
    let out = |p: PathBuf| format!("write: {}", p.display());
    let read = |p: PathBuf| format!("read: {}", p.display());
    let o = &cfg.output;
    for h in &cfg.stack.headings {
        let stack = cfg.stack_dir(h);
        match command {
            Command::Simulate { .. } => {
                lines.push(out(stack.join("stack.json")));
                lines.push(out(stack.join("truth")));
                lines.push(out(stack.join("scene.toml")));
            }
            Command::Steer { .. } => {
                lines.push(read(stack.clone()));
                lines.push(out(o.join("steered").join(h)));
            }
            Command::Covariance { .. } => {
                lines.push(read(stack.clone()));
                lines.push(out(o.join("covariance").join(h).join("covariance.npy")));
            }
            Command::Features { .. } => {
                lines.push(read(stack.clone()));
                lines.push(out(o.join("features").join(h).join("features.npy")));
            }
            Command::Split { .. } => {
                lines.push(read(o.join("features").join(h)));
                lines.push(out(o.join("split").join(format!("{h}.json"))));
            }
            Command::Scale { .. } => {
                lines.push(read(o.join("features").join(h)));
                lines.push(out(o.join("scaled").join(h).join("features.npy")));
            }
            Command::Patchify { .. } | Command::Export { .. } => {
                lines.push(read(o.join("scaled").join(h)));
                lines.push(read(stack.join("truth").join("chm.npy")));
            }
            Command::Baseline { .. } => {
                lines.push(read(stack.clone()));
                lines.push(out(o.join("baseline").join(h).join("chm_pred.npy")));
                lines.push(out(o.join("baseline").join(h).join("profile_sample.csv")));
            }
            Command::Subset { .. } | Command::Eval { .. } | Command::Report { .. } => {}
        }
    }
    match command {
        Command::Subset { .. } => lines.push(out(o.join("subset.json"))),
        Command::Scale { .. } => lines.push(out(o.join("scaler.json"))),
        Command::Patchify { .. } => lines.push(out(o.join("patchify.json"))),
        Command::Export { .. } => lines.push(out(o.join("dataset"))),
        Command::Eval { pred, dataset, out: report, .. } => {
            lines.push(read(pred.clone()));
            lines.push(read(dataset.clone()));
            lines.push(out(report.clone()));
            lines.push(out(report.with_extension("csv")));
        }
        Command::Report { reports, out: table, .. } => {
            lines.extend(reports.iter().map(|r| read(r.clone())));
            if let Some(t) = table {
                lines.push(out(t.clone()));
            }
        }
        _ => {}
    }
    lines
}

pub fn run(cli: Cli) -> Result<()> {
    let command = cli.command;
    let cfg = resolve_config(&command)?;
    if command.common().dry_run {
        for line in plan(&command, &cfg) {
            println!("{line}");
        }
        return Ok(());
    }
    let ctx = Context::new(cfg)?;
    match &command {
        Command::Simulate { .. } => {
            pipeline::simulate(&ctx)?;
        }
        Command::Steer { .. } => {
            pipeline::steer(&ctx)?;
        }
        Command::Covariance { .. } => {
            pipeline::covariance(&ctx)?;
        }
        Command::Features { .. } => {
            pipeline::features(&ctx)?;
        }
        Command::Subset { total, .. } => {
            let record = pipeline::subset(&ctx, *total)?;
            println!("subset: {:?}", record.indices);
        }
        Command::Split { .. } => {
            for (h, r) in ctx.headings().iter().zip(pipeline::split(&ctx)?) {
                println!("{h}: train {:.4} val {:.4} test {:.4}", r.achieved[0], r.achieved[1], r.achieved[2]);
            }
        }
        Command::Scale { .. } => {
            pipeline::scale(&ctx)?;
        }
        Command::Patchify { .. } => {
            let s = pipeline::patchify_summary(&ctx)?;
            let counts: Vec<String> = s.counts.iter().map(|(k, v)| format!("{} {v}", k.name())).collect();
            println!("patches: {}; dropped {}", counts.join(", "), s.dropped);
        }
        Command::Export { .. } => {
            let index = pipeline::export(&ctx)?;
            let counts: Vec<String> = index.counts.iter().map(|(k, v)| format!("{} {v}", k.name())).collect();
            println!("dataset {}: {}", ctx.dataset_dir().display(), counts.join(", "));
        }
        Command::Baseline { .. } => {
            for r in pipeline::baseline(&ctx)? {
                match r.mae_m {
                    Some(m) => println!("{}: baseline MAE {m:.3} m", r.heading),
                    None => println!("{}: baseline written", r.heading),
                }
            }
        }
        Command::Eval { pred, dataset, height_filter, out, model, .. } => {
            let r = pipeline::eval(dataset, pred, *height_filter, out, model)?;
            println!("{}", crate::report::markdown_header());
            println!("{}", r.markdown_row());
        }
        Command::Report { reports, out, .. } => {
            let table = pipeline::report_table(reports)?;
            print!("{table}");
            if let Some(path) = out {
                std::fs::write(path, &table).map_err(|e| Error::io(path, e))?;
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error (exit {code}): {e}");
            code
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env).target(env_logger::Target::Stderr).try_init();
    log::debug!("thread override variable: {THREADS_ENV}");
}
