//! Command-line front end: `match`, `confidence`, `eval` and `ablate`.
//!
//! Every command starts from a [`RunConfig`] (a TOML file given with
//! `--config`, or defaults) and applies its flags on top.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::confidence::{sweep_confidence, ConfidenceParams};
use crate::config::{MatcherChoice, RunConfig, DEFAULT_TIMEOUT_SECS};
use crate::error::{Error, Result};
use crate::eval::{
    msm_confidence, random_confidence, sparsification_auc, sparsification_auc_pooled,
    EvalParams, EvalReport,
};
use crate::imagery::{
    load_ground_truth, load_image, save_disparity, save_gray_visualization, save_pfm,
    DisparityFormat,
};
use crate::matcher::{ExternalMatcherSpec, StereoMatcher};
use crate::parallel::map_indexed;
use crate::raster::{ConfidenceMap, DisparityMap, RasterImage};
use crate::sweep::{SweepOptions, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "dpsconf", version, about = "Stereo confidence from disparity plane sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match one pair and write the zero-shift disparity.
    Match(CommonArgs),
    /// Sweep one pair and write disparity, unreliability and confidence.
    Confidence(CommonArgs),
    /// Score confidence methods by sparsification AUC over a dataset.
    Eval(CommonArgs),
    /// Evaluate the sweep for each value of N or of the step size K.
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatcherKind {
    Builtin,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Number of unit-step shifts.
    N,
    /// Step size of the three-shift sweep `[-K, 0, K]`.
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "N",
            Axis::K => "K",
        }
    }

    pub fn spec(self, value: u32) -> Result<SweepSpec> {
        match self {
            Axis::N => SweepSpec::with_count(value),
            Axis::K => SweepSpec::three_point(value),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub left: Option<PathBuf>,
    #[arg(long)]
    pub right: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Directory with `left/`, `right/` and `gt/` subdirectories.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Explicit comma-separated shift list, e.g. `-2,-1,0,1,2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub shifts: Option<Vec<i32>>,
    /// Number of shifts (shorthand, needs N = 2K + 1).
    #[arg(long)]
    pub n: Option<u32>,
    /// Largest shift of the symmetric shorthand.
    #[arg(long)]
    pub k: Option<u32>,
    /// Bad-pixel threshold in pixels.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub d_max: Option<u32>,
    #[arg(long, value_enum)]
    pub matcher: Option<MatcherKind>,
    /// External matcher command with `{left}`, `{right}` and `{out}`.
    #[arg(long)]
    pub external_cmd: Option<String>,
    /// Disparity format the external matcher writes.
    #[arg(long)]
    pub format: Option<DisparityFormat>,
    /// Maximum concurrent matcher calls and images (0: one per shift).
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Seed of the random control.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write every shifted image and per-shift disparity here.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
    /// Rank all dataset pixels together instead of averaging per image.
    #[arg(long)]
    pub pooled_auc: bool,
    /// Write the effective configuration to this file.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated axis values, e.g. `2,3,5,7`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<u32>,
}

impl CommonArgs {
    /// Loads `--config` (or defaults) and applies every flag.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let io = &mut cfg.io;
        for (flag, slot) in [
            (&self.left, &mut io.left),
            (&self.right, &mut io.right),
            (&self.gt, &mut io.gt),
            (&self.dataset, &mut io.dataset),
            (&self.dump_dir, &mut io.dump_dir),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(out) = &self.out {
            io.out_dir.clone_from(out);
        }
        if let Some(shifts) = &self.shifts {
            cfg.sweep.shifts = Some(shifts.clone());
            cfg.sweep.n = None;
            cfg.sweep.k = None;
        } else if self.n.is_some() || self.k.is_some() {
            cfg.sweep.shifts = None;
            cfg.sweep.n = self.n;
            cfg.sweep.k = self.k;
        }
        if let Some(tau) = self.tau {
            cfg.eval.tau = tau;
        }
        if let Some(sigma) = self.sigma {
            cfg.confidence.sigma = Some(sigma);
        }
        if let Some(d_max) = self.d_max {
            cfg.matcher_config.d_max = d_max;
        }
        if let Some(p) = self.parallel {
            cfg.parallelism = p;
        }
        if let Some(seed) = self.seed {
            cfg.eval.seed = seed;
        }
        if self.pooled_auc {
            cfg.eval.pooled_auc = true;
        }
        self.apply_matcher(cfg)
    }

    fn apply_matcher(&self, cfg: &mut RunConfig) -> Result<()> {
        if self.matcher == Some(MatcherKind::Builtin) {
            if self.external_cmd.is_some() {
                return Err(Error::InvalidConfig(
                    "--external-cmd conflicts with --matcher builtin".into(),
                ));
            }
            cfg.matcher = MatcherChoice::Builtin;
            return Ok(());
        }
        if let Some(cmd) = &self.external_cmd {
            let mut spec = match &cfg.matcher {
                MatcherChoice::External(spec) => spec.clone(),
                MatcherChoice::Builtin => ExternalMatcherSpec {
                    command_template: String::new(),
                    work_dir: std::env::temp_dir(),
                    output_format: DisparityFormat::Pfm,
                    timeout_secs: DEFAULT_TIMEOUT_SECS,
                },
            };
            spec.command_template.clone_from(cmd);
            cfg.matcher = MatcherChoice::External(spec);
        }
        match &mut cfg.matcher {
            MatcherChoice::External(spec) => {
                if let Some(format) = self.format {
                    spec.output_format = format;
                }
            }
            MatcherChoice::Builtin if self.matcher == Some(MatcherKind::External) => {
                return Err(Error::InvalidConfig(
                    "--matcher external needs --external-cmd or an external matcher in the config"
                        .into(),
                ));
            }
            MatcherChoice::Builtin => {}
        }
        Ok(())
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.kind().exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let (common, ablate) = match &cli.command {
        Command::Match(a) | Command::Confidence(a) | Command::Eval(a) => (a, None),
        Command::Ablate(a) => (&a.common, Some(a)),
    };
    let cfg = common.resolve()?;
    cfg.validate()?;
    if let Some(path) = &common.save_config {
        cfg.save(path)?;
    }
    match &cli.command {
        Command::Match(_) => cmd_match(&cfg).map(|_| ()),
        Command::Confidence(_) => {
            let summary = cmd_confidence(&cfg)?;
            match summary {
                Some((lo, mean, hi)) => {
                    println!("confidence: min {lo:.4} mean {mean:.4} max {hi:.4}")
                }
                None => println!("confidence: no valid pixels"),
            }
            Ok(())
        }
        Command::Eval(_) => {
            let outcome = cmd_eval(&cfg)?;
            print!("{}", outcome.table());
            Ok(())
        }
        Command::Ablate(_) => {
            let a = ablate.expect("ablate arguments");
            let rows = cmd_ablate(&cfg, a.axis, &a.values)?;
            print!("{}", ablation_csv(&rows));
            Ok(())
        }
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("--{flag} is required")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_pair(left: &Path, right: &Path) -> Result<(RasterImage, RasterImage)> {
    let l = load_image(left)?;
    let r = load_image(right)?;
    if !l.same_dims(&r) {
        return Err(Error::DimensionMismatch(format!(
            "left is {}x{}, right is {}x{}",
            l.width(),
            l.height(),
            r.width(),
            r.height()
        )));
    }
    Ok((l, r))
}

fn gt_format(cfg: &RunConfig, path: &Path) -> Result<DisparityFormat> {
    cfg.io
        .gt_format
        .or_else(|| DisparityFormat::from_path(path))
        .ok_or_else(|| Error::FormatMismatch {
            path: path.to_path_buf(),
            detail: "cannot infer the disparity format from the extension".into(),
        })
}

fn save_disparity_outputs(disp: &DisparityMap, out: &Path, d_max: u32) -> Result<()> {
    save_disparity(disp, out.join("disp_0.pfm"), DisparityFormat::Pfm)?;
    save_gray_visualization(disp, out.join("disp_0_vis.png"), 255.0 / f64::from(d_max))
}

/// Writes `disp_0.pfm` and `disp_0_vis.png`.
pub fn cmd_match(cfg: &RunConfig) -> Result<DisparityMap> {
    let (left, right) = load_pair(require(&cfg.io.left, "left")?, require(&cfg.io.right, "right")?)?;
    let matcher = cfg.build_matcher()?;
    let disp = matcher.compute(&left, &right)?;
    create_dir(&cfg.io.out_dir)?;
    save_disparity_outputs(&disp, &cfg.io.out_dir, cfg.matcher_config.d_max)?;
    Ok(disp)
}

fn sweep_options(cfg: &RunConfig, dump_dir: Option<PathBuf>) -> Result<SweepOptions> {
    if let Some(dir) = &dump_dir {
        create_dir(dir)?;
    }
    Ok(SweepOptions {
        parallelism: cfg.parallelism,
        dump_dir,
    })
}

/// Writes the anchor disparity, `unreliability.pfm`, `confidence.pfm`
/// and `confidence.png`; returns the `(min, mean, max)` confidence.
pub fn cmd_confidence(cfg: &RunConfig) -> Result<Option<(f64, f64, f64)>> {
    let (left, right) = load_pair(require(&cfg.io.left, "left")?, require(&cfg.io.right, "right")?)?;
    let matcher = cfg.build_matcher()?;
    let spec = cfg.sweep_spec()?;
    let params = cfg.confidence_params()?;
    let options = sweep_options(cfg, cfg.io.dump_dir.clone())?;
    let sc = sweep_confidence(&left, &right, &spec, matcher.as_ref(), &params, &options)?;
    let out = &cfg.io.out_dir;
    create_dir(out)?;
    save_disparity_outputs(&sc.anchor, out, cfg.matcher_config.d_max)?;
    save_pfm(&sc.unreliability, out.join("unreliability.pfm"))?;
    save_pfm(&sc.confidence, out.join("confidence.pfm"))?;
    save_gray_visualization(&sc.confidence, out.join("confidence.png"), 255.0)?;
    Ok(sc.confidence.summary())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sweep,
    MsmBaseline,
    RandomControl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sweep => "sweep",
            Method::MsmBaseline => "msm-baseline",
            Method::RandomControl => "random-control",
        }
    }
}

/// What to compute for one stereo pair.
pub struct PairSetup<'a> {
    pub matcher: &'a dyn StereoMatcher,
    pub spec: SweepSpec,
    pub confidence: ConfidenceParams,
    pub eval: EvalParams,
    pub options: SweepOptions,
    /// Include the minimum-cost baseline (built-in matcher only).
    pub msm: bool,
    /// Include the random control with this seed.
    pub random_seed: Option<u64>,
}

/// Confidence maps and reports of every enabled method on one pair.
///
/// All methods are scored against the zero-shift disparity on the same
/// pixels: those where the sweep confidence is defined.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub anchor: DisparityMap,
    pub maps: Vec<(Method, ConfidenceMap)>,
    pub reports: Vec<(Method, EvalReport)>,
}

impl PairEvaluation {
    pub fn report(&self, method: Method) -> Option<&EvalReport> {
        self.reports.iter().find(|(m, _)| *m == method).map(|(_, r)| r)
    }

    pub fn map(&self, method: Method) -> Option<&ConfidenceMap> {
        self.maps.iter().find(|(m, _)| *m == method).map(|(_, c)| c)
    }
}

pub fn evaluate_pair(
    setup: &PairSetup<'_>,
    left: &RasterImage,
    right: &RasterImage,
    gt: &DisparityMap,
) -> Result<PairEvaluation> {
    let sc = sweep_confidence(
        left,
        right,
        &setup.spec,
        setup.matcher,
        &setup.confidence,
        &setup.options,
    )?;
    let mask = sc.confidence.valid_mask().to_vec();
    let mut maps = Vec::new();
    if setup.msm {
        let (msm, _) = msm_confidence(setup.matcher, left, right)?;
        maps.push((Method::MsmBaseline, msm.restricted_to(&mask)?));
    }
    if let Some(seed) = setup.random_seed {
        let rnd = random_confidence(left.width(), left.height(), &mask, seed);
        maps.push((Method::RandomControl, rnd));
    }
    maps.insert(0, (Method::Sweep, sc.confidence));
    let reports = maps
        .iter()
        .map(|(m, c)| Ok((*m, sparsification_auc(c, &sc.anchor, gt, &setup.eval)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PairEvaluation {
        anchor: sc.anchor,
        maps,
        reports,
    })
}

/// One `left/right/gt` triplet of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub name: String,
    pub left: PathBuf,
    pub right: PathBuf,
    pub gt: Option<PathBuf>,
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Pairs `<root>/left/<name>` with `<root>/right/<name>` and the file in
/// `<root>/gt` sharing its stem. Missing partners surface when the entry
/// is loaded.
pub fn list_dataset(root: &Path) -> Result<Vec<DatasetEntry>> {
    let lefts = sorted_files(&root.join("left"))?;
    let gts = sorted_files(&root.join("gt")).unwrap_or_default();
    let entries: Vec<DatasetEntry> = lefts
        .into_iter()
        .map(|left| {
            let name = stem(&left);
            let file_name = left.file_name().expect("listed files have names");
            DatasetEntry {
                right: root.join("right").join(file_name),
                gt: gts.iter().find(|g| stem(g) == name).cloned(),
                name,
                left,
            }
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "dataset {} has no images in left/",
            root.display()
        )));
    }
    Ok(entries)
}

fn dataset_entries(cfg: &RunConfig) -> Result<Vec<DatasetEntry>> {
    if let Some(root) = &cfg.io.dataset {
        return list_dataset(root);
    }
    let left = require(&cfg.io.left, "left or --dataset")?;
    Ok(vec![DatasetEntry {
        name: stem(left),
        left: left.to_path_buf(),
        right: require(&cfg.io.right, "right")?.to_path_buf(),
        gt: Some(require(&cfg.io.gt, "gt")?.to_path_buf()),
    }])
}

fn load_entry(cfg: &RunConfig, entry: &DatasetEntry) -> Result<(RasterImage, RasterImage, DisparityMap)> {
    let gt_path = entry.gt.as_ref().ok_or_else(|| {
        Error::MissingFile(PathBuf::from("gt").join(format!("{}.*", entry.name)))
    })?;
    let (left, right) = load_pair(&entry.left, &entry.right)?;
    let gt = load_ground_truth(
        gt_path,
        gt_format(cfg, gt_path)?,
        f64::from(cfg.matcher_config.d_max),
    )?;
    Ok((left, right, gt))
}

fn image_limit(cfg: &RunConfig, spec: &SweepSpec) -> usize {
    if cfg.parallelism == 0 {
        spec.len()
    } else {
        cfg.parallelism
    }
}

struct Finished {
    name: String,
    pe: PairEvaluation,
    /// Kept only for pooled scoring.
    gt: Option<DisparityMap>,
}

/// Per-image results of a batch run; images that failed are listed with
/// their error message.
struct Batch {
    done: Vec<Finished>,
    failed: Vec<(String, String)>,
}

fn run_batch(cfg: &RunConfig, spec: &SweepSpec, full: bool) -> Result<Batch> {
    let entries = dataset_entries(cfg)?;
    let matcher = cfg.build_matcher()?;
    let confidence = cfg.confidence_params()?;
    let eval = cfg.eval_params()?;
    let pooled = cfg.eval.pooled_auc;
    let results = map_indexed(entries.len(), image_limit(cfg, spec), |i| -> Result<Finished> {
        let entry = &entries[i];
        let dump_dir = cfg.io.dump_dir.as_ref().map(|d| d.join(&entry.name));
        let setup = PairSetup {
            matcher: matcher.as_ref(),
            spec: spec.clone(),
            confidence,
            eval: eval.clone(),
            options: sweep_options(cfg, dump_dir)?,
            msm: full && cfg.is_builtin(),
            random_seed: full.then(|| cfg.eval.seed.wrapping_add(i as u64)),
        };
        let (left, right, gt) = load_entry(cfg, entry)?;
        let mut pe = evaluate_pair(&setup, &left, &right, &gt)?;
        if !pooled {
            pe.maps.clear();
        }
        Ok(Finished {
            name: entry.name.clone(),
            pe,
            gt: pooled.then_some(gt),
        })
    });
    let mut batch = Batch {
        done: Vec::new(),
        failed: Vec::new(),
    };
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(f) => batch.done.push(f),
            Err(e) => {
                log::warn!("skipping {}: {e}", entry.name);
                batch.failed.push((entry.name.clone(), e.to_string()));
            }
        }
    }
    if batch.done.is_empty() {
        return Err(Error::AllImagesFailed);
    }
    Ok(batch)
}

/// Dataset-level score of one method. Rates are fractions, not scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    /// `"mean"` over images or `"pooled"` pixels.
    pub aggregation: &'static str,
    pub images: usize,
    pub epsilon: f64,
    pub auc: f64,
    pub optimal_auc: f64,
}

fn summarize(batch: &Batch, method: Method, pooled: bool, params: &EvalParams) -> Result<Option<SummaryRow>> {
    let reports: Vec<&EvalReport> = batch
        .done
        .iter()
        .filter_map(|f| f.pe.report(method))
        .collect();
    if reports.is_empty() {
        return Ok(None);
    }
    let n = reports.len();
    if pooled {
        let items: Vec<_> = batch
            .done
            .iter()
            .filter_map(|f| Some((f.pe.map(method)?, &f.pe.anchor, f.gt.as_ref()?)))
            .collect();
        let report = sparsification_auc_pooled(&items, params)?;
        return Ok(Some(SummaryRow {
            method,
            aggregation: "pooled",
            images: n,
            epsilon: report.epsilon,
            auc: report.auc,
            optimal_auc: report.optimal_auc,
        }));
    }
    let mean = |f: fn(&EvalReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n as f64;
    Ok(Some(SummaryRow {
        method,
        aggregation: "mean",
        images: n,
        epsilon: mean(|r| r.epsilon),
        auc: mean(|r| r.auc),
        optimal_auc: mean(|r| r.optimal_auc),
    }))
}

/// Result of [`cmd_eval`].
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    /// `(image, method, report)` in dataset order.
    pub rows: Vec<(String, Method, EvalReport)>,
    pub summary: Vec<SummaryRow>,
    pub failed: Vec<(String, String)>,
}

impl EvalOutcome {
    pub fn summary_for(&self, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method)
    }

    pub fn per_image_csv(&self) -> String {
        let mut s = String::from("image,method,epsilon,auc_x100,optimal_x100,n_pixels\n");
        for (image, method, r) in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{}",
                csv_field(image),
                method.name(),
                r.epsilon,
                r.auc * 100.0,
                r.optimal_auc * 100.0,
                r.n_pixels
            );
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,aggregation,images,epsilon,auc_x100,optimal_x100\n");
        for r in &self.summary {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6}",
                r.method.name(),
                r.aggregation,
                r.images,
                r.epsilon,
                r.auc * 100.0,
                r.optimal_auc * 100.0
            );
        }
        s
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<16} {:>7} {:>10} {:>12} {:>14}\n",
            "method", "images", "epsilon", "AUC x100", "optimal x100"
        );
        for r in &self.summary {
            let _ = writeln!(
                s,
                "{:<16} {:>7} {:>10.4} {:>12.4} {:>14.4}",
                r.method.name(),
                r.images,
                r.epsilon,
                r.auc * 100.0,
                r.optimal_auc * 100.0
            );
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn curve_csv(report: &EvalReport) -> String {
    let mut s = String::from("density,error_rate\n");
    for (rho, err) in &report.curve {
        let _ = writeln!(s, "{rho:.6},{err:.6}");
    }
    s
}

/// Writes `per_image.csv`, `summary.csv` and `curves/<image>_<method>.csv`
/// to the output directory.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalOutcome> {
    let spec = cfg.sweep_spec()?;
    let params = cfg.eval_params()?;
    let batch = run_batch(cfg, &spec, true)?;
    let mut summary = Vec::new();
    for method in [Method::Sweep, Method::MsmBaseline, Method::RandomControl] {
        summary.extend(summarize(&batch, method, cfg.eval.pooled_auc, &params)?);
    }
    let rows = batch
        .done
        .iter()
        .flat_map(|f| f.pe.reports.iter().map(|(m, r)| (f.name.clone(), *m, r.clone())))
        .collect();
    let outcome = EvalOutcome {
        rows,
        summary,
        failed: batch.failed,
    };

    let out = &cfg.io.out_dir;
    let curves = out.join("curves");
    create_dir(&curves)?;
    write_text(&out.join("per_image.csv"), &outcome.per_image_csv())?;
    write_text(&out.join("summary.csv"), &outcome.summary_csv())?;
    for (image, method, report) in &outcome.rows {
        let path = curves.join(format!("{image}_{}.csv", method.name()));
        write_text(&path, &curve_csv(report))?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub axis: Axis,
    pub value: u32,
    pub shifts: Vec<i32>,
    pub summary: SummaryRow,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("axis,value,shifts,images,epsilon,auc_x100,optimal_x100\n");
    for r in rows {
        let shifts: Vec<String> = r.shifts.iter().map(i32::to_string).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            r.axis.name(),
            r.value,
            shifts.join(";"),
            r.summary.images,
            r.summary.epsilon,
            r.summary.auc * 100.0,
            r.summary.optimal_auc * 100.0
        );
    }
    s
}

/// Sweep-only evaluation for each axis value; writes
/// `ablation_<axis>.csv` to the output directory.
pub fn cmd_ablate(cfg: &RunConfig, axis: Axis, values: &[u32]) -> Result<Vec<AblationRow>> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one axis value".into()));
    }
    let specs = values
        .iter()
        .map(|&v| axis.spec(v))
        .collect::<Result<Vec<_>>>()?;
    let params = cfg.eval_params()?;
    let mut rows = Vec::new();
    for (&value, spec) in values.iter().zip(specs) {
        let batch = run_batch(cfg, &spec, false)?;
        let summary = summarize(&batch, Method::Sweep, cfg.eval.pooled_auc, &params)?
            .expect("every finished image has a sweep report");
        rows.push(AblationRow {
            axis,
            value,
            shifts: spec.shifts().to_vec(),
            summary,
        });
    }
    let out = &cfg.io.out_dir;
    create_dir(out)?;
    let name = format!("ablation_{}.csv", axis.name().to_lowercase());
    write_text(&out.join(name), &ablation_csv(&rows))?;
    Ok(rows)
}
