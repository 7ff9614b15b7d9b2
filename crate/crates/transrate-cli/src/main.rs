//! Command-line front end: score a single model's features, rank or evaluate
//! a whole model zoo from a manifest, generate synthetic datasets, and run
//! the histogram mutual-information oracle.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or malformed input files, 3 numeric
//! failure, 4 degenerate data. Reports are byte-identical across runs and
//! thread counts for the same inputs and flags.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use rayon::prelude::*;

use transrate::baselines::{self, BaselineError, PseudoLabelMatrix};
use transrate::coding::{self, ScoreError};
use transrate::io::{
    self, EvalReport, EvalRow, IoError, LabelKind, ModelEntry, TaskKind, ZooManifest,
};
use transrate::linalg::LinalgError;
use transrate::metrics::{self, MetricError, ScoreAccuracyPairs};
use transrate::synth::{self, BlobSpec, SynthError};
use transrate::{ClassWeighting, FeatureMatrix, LabelVector, ScoreConfig, TransferScore};

#[derive(Parser)]
#[command(
    name = "transrate",
    version,
    about = "Transferability scoring for pre-trained model selection"
)]
struct Cli {
    /// Worker threads (falls back to TRANSRATE_THREADS, then all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one model's extracted features against target labels
    Score(ScoreArgs),
    /// Rank every model in a zoo manifest, per method
    Rank(RankArgs),
    /// Correlate zoo scores against observed accuracy, per method
    Eval(EvalArgs),
    /// Generate synthetic feature/label files deterministically from a seed
    Gen(GenArgs),
    /// Histogram mutual-information estimate for low-dimensional features
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Transrate,
    Leep,
    Nce,
    Hscore,
    Logme,
    Lfc,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Empirical,
    Uniform,
    Rawsum,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Classification,
    Regression,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Blobs,
    SeparabilitySweep,
    ToyFig3Like,
}

/// Scoring configuration flags shared by `score`, `rank`, and `eval`.
#[derive(Args)]
struct ConfigOpts {
    /// Ridge parameter substituted into the 1/(n*eps) factor
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Skip per-row unit normalization of the features
    #[arg(long)]
    no_unit_norm: bool,
    /// Report the raw score instead of dividing by the feature dimension
    #[arg(long)]
    no_per_dim: bool,
    /// How per-class rates are combined
    #[arg(long, value_enum, default_value_t = WeightingArg::Empirical)]
    class_weighting: WeightingArg,
    /// Subtract the label entropy from the score
    #[arg(long)]
    subtract_label_entropy: bool,
    /// Class count when regression targets are binned
    #[arg(long, default_value_t = 10)]
    bins: u32,
}

impl ConfigOpts {
    fn to_config(&self) -> ScoreConfig {
        ScoreConfig {
            eps: self.eps,
            unit_norm: !self.no_unit_norm,
            per_dim: !self.no_per_dim,
            class_weighting: match self.class_weighting {
                WeightingArg::Empirical => ClassWeighting::Empirical,
                WeightingArg::Uniform => ClassWeighting::Uniform,
                WeightingArg::Rawsum => ClassWeighting::RawSum,
            },
            subtract_label_entropy: self.subtract_label_entropy,
            regression_bins: self.bins,
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Feature matrix (.csv for CSV, anything else raw binary)
    #[arg(long)]
    features: PathBuf,
    /// Label file, one value per line
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Transrate)]
    method: MethodArg,
    /// How the label file is interpreted
    #[arg(long, value_enum, default_value_t = TaskArg::Classification)]
    task_kind: TaskArg,
    /// Source-classifier soft labels (raw binary n x C_s), for leep/nce
    #[arg(long)]
    pseudo_labels: Option<PathBuf>,
    /// Model name used in reports (default: the features file stem)
    #[arg(long)]
    model_name: Option<String>,
    /// Also write the scores as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opts: ConfigOpts,
}

#[derive(Args)]
struct RankArgs {
    /// Zoo manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    /// Also write the ranking as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opts: ConfigOpts,
}

#[derive(Args)]
struct EvalArgs {
    /// Zoo manifest (JSON) with an accuracy_path entry
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    /// Also write the report as JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opts: ConfigOpts,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    /// Total sample count, split evenly across classes
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Within-class standard deviation
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    /// Inter-class mean distance scale
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    /// Separability levels (separability-sweep preset only)
    #[arg(long, default_value_t = 10)]
    levels: usize,
    /// Output directory, created if missing
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Feature matrix with at most 3 dimensions
    #[arg(long)]
    features: PathBuf,
    /// Classification labels, one id per line
    #[arg(long)]
    labels: PathBuf,
    /// Equal-width bins per feature dimension
    #[arg(long)]
    bins_per_dim: u32,
}

#[derive(Debug)]
enum AppError {
    Usage(String),
    Io(IoError),
    Score(ScoreError),
    Baseline(BaselineError),
    Metric(MetricError),
    Synth(SynthError),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(msg) => write!(f, "{msg}"),
            AppError::Io(e) => write!(f, "{e}"),
            AppError::Score(e) => write!(f, "{e}"),
            AppError::Baseline(e) => write!(f, "{e}"),
            AppError::Metric(e) => write!(f, "{e}"),
            AppError::Synth(e) => write!(f, "{e}"),
        }
    }
}

impl From<IoError> for AppError {
    fn from(e: IoError) -> Self {
        AppError::Io(e)
    }
}
impl From<ScoreError> for AppError {
    fn from(e: ScoreError) -> Self {
        AppError::Score(e)
    }
}
impl From<BaselineError> for AppError {
    fn from(e: BaselineError) -> Self {
        AppError::Baseline(e)
    }
}
impl From<MetricError> for AppError {
    fn from(e: MetricError) -> Self {
        AppError::Metric(e)
    }
}
impl From<SynthError> for AppError {
    fn from(e: SynthError) -> Self {
        AppError::Synth(e)
    }
}

fn linalg_code(e: &LinalgError) -> u8 {
    match e {
        LinalgError::NumericOverflow | LinalgError::NumericFailure { .. } => 3,
        _ => 4,
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Io(_) => 2,
            AppError::Score(e) => match e {
                ScoreError::InvalidConfig(_) => 1,
                ScoreError::Linalg(l) => linalg_code(l),
                _ => 4,
            },
            AppError::Baseline(e) => match e {
                BaselineError::SingularCovariance | BaselineError::ZeroKernel => 3,
                BaselineError::Linalg(l) => linalg_code(l),
                _ => 4,
            },
            AppError::Metric(_) => 4,
            AppError::Synth(e) => match e {
                SynthError::BadSpec(_) => 1,
                _ => 4,
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Method {
    Transrate,
    Leep,
    Nce,
    Hscore,
    Logme,
    Lfc,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Transrate => "transrate",
            Method::Leep => "leep",
            Method::Nce => "nce",
            Method::Hscore => "hscore",
            Method::Logme => "logme",
            Method::Lfc => "lfc",
        }
    }
}

fn expand_methods(arg: MethodArg) -> Vec<Method> {
    match arg {
        MethodArg::Transrate => vec![Method::Transrate],
        MethodArg::Leep => vec![Method::Leep],
        MethodArg::Nce => vec![Method::Nce],
        MethodArg::Hscore => vec![Method::Hscore],
        MethodArg::Logme => vec![Method::Logme],
        MethodArg::Lfc => vec![Method::Lfc],
        MethodArg::All => vec![
            Method::Transrate,
            Method::Leep,
            Method::Nce,
            Method::Hscore,
            Method::Logme,
            Method::Lfc,
        ],
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code: u8 = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), AppError> {
    let threads = resolve_threads(cli.threads)?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        warn!("thread pool already initialized: {e}");
    }
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, AppError> {
    let threads = match flag {
        Some(t) => t,
        None => match std::env::var("TRANSRATE_THREADS") {
            Ok(raw) => raw.trim().parse::<usize>().map_err(|_| {
                AppError::Usage(format!("TRANSRATE_THREADS is not a valid thread count: {raw:?}"))
            })?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if threads == 0 {
        return Err(AppError::Usage("--threads must be at least 1".into()));
    }
    Ok(threads)
}

fn label_kind(task: TaskKind) -> LabelKind {
    match task {
        TaskKind::Classification => LabelKind::Classification,
        TaskKind::Regression => LabelKind::Regression,
    }
}

/// Computes the requested scores for one model. Methods that need class ids
/// see regression targets through the configured equal-count binning; LogME
/// consumes the targets as-is. A missing pseudo-label matrix is a usage error
/// when leep/nce was requested explicitly, and a skip-with-warning under
/// `all`.
fn compute_for_model(
    name: &str,
    f: &FeatureMatrix,
    y: &LabelVector,
    pseudo: Option<&PseudoLabelMatrix>,
    methods: &[Method],
    cfg: &ScoreConfig,
    require_pseudo: bool,
) -> Result<Vec<TransferScore>, AppError> {
    cfg.validate()?;
    if y.len() != f.n() {
        return Err(ScoreError::LengthMismatch { labels: y.len(), rows: f.n() }.into());
    }
    if let Some(p) = pseudo {
        if p.n() != f.n() {
            return Err(BaselineError::LengthMismatch { labels: p.n(), rows: f.n() }.into());
        }
    }
    let needs_class_ids = methods
        .iter()
        .any(|m| matches!(m, Method::Leep | Method::Nce | Method::Hscore | Method::Lfc));
    let binned;
    let y_cls: Option<&LabelVector> = match y {
        LabelVector::Classification { .. } => Some(y),
        LabelVector::Regression { .. } if needs_class_ids => {
            binned = coding::bin_regression_labels(y, cfg.regression_bins)?;
            Some(&binned)
        }
        LabelVector::Regression { .. } => None,
    };
    let c_meta = y_cls.and_then(|v| v.num_classes()).unwrap_or(0) as usize;
    let fingerprint = cfg.fingerprint();
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let value = match method {
            Method::Transrate => {
                out.push(coding::transrate(f, y, cfg)?.named(name));
                continue;
            }
            Method::Leep | Method::Nce => {
                let Some(p) = pseudo else {
                    if require_pseudo {
                        return Err(AppError::Usage(format!(
                            "method {} needs pseudo-labels for model {name}",
                            method.name()
                        )));
                    }
                    warn!("skipping {} for model {name}: no pseudo-labels", method.name());
                    continue;
                };
                let yc = y_cls.expect("class ids available when leep/nce requested");
                match method {
                    Method::Leep => baselines::leep_score(p, yc)?,
                    _ => baselines::nce_score(p, yc)?,
                }
            }
            Method::Hscore => baselines::hscore(f, y_cls.expect("class ids"))?,
            Method::Lfc => baselines::lfc_score(f, y_cls.expect("class ids"))?,
            Method::Logme => baselines::logme_score(f, y)?,
        };
        out.push(TransferScore {
            model_name: name.to_owned(),
            method: method.name().to_owned(),
            value,
            config_fingerprint: fingerprint,
            n: f.n(),
            d: f.d(),
            c: c_meta,
        });
    }
    Ok(out)
}

fn cmd_score(args: ScoreArgs) -> Result<(), AppError> {
    let cfg = args.opts.to_config();
    let f = io::read_feature_file(&args.features, io::detect_format(&args.features))?;
    let kind = match args.task_kind {
        TaskArg::Classification => LabelKind::Classification,
        TaskArg::Regression => LabelKind::Regression,
    };
    let y = io::read_labels(&args.labels, kind)?;
    let pseudo = args.pseudo_labels.as_deref().map(io::read_pseudo_labels).transpose()?;
    let name = args.model_name.clone().unwrap_or_else(|| {
        args.features
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".to_owned())
    });
    let methods = expand_methods(args.method);
    let scores = compute_for_model(
        &name,
        &f,
        &y,
        pseudo.as_ref(),
        &methods,
        &cfg,
        args.method != MethodArg::All,
    )?;
    print!("{}", io::render_score_csv(&scores));
    if let Some(out) = &args.out {
        fs::write(out, io::render_score_json(&scores)).map_err(IoError::from)?;
    }
    Ok(())
}

/// Loads and scores every model in the manifest, in parallel across models,
/// returning per-model score lists in manifest order. Errors are reported
/// for the first failing model in manifest order so runs are reproducible.
fn score_manifest(
    manifest: &ZooManifest,
    methods: &[Method],
    cfg: &ScoreConfig,
    require_pseudo: bool,
) -> Result<Vec<Vec<TransferScore>>, AppError> {
    let results: Vec<Result<Vec<TransferScore>, AppError>> = manifest
        .models
        .par_iter()
        .map(|model| score_one_entry(manifest, model, methods, cfg, require_pseudo))
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

fn score_one_entry(
    manifest: &ZooManifest,
    model: &ModelEntry,
    methods: &[Method],
    cfg: &ScoreConfig,
    require_pseudo: bool,
) -> Result<Vec<TransferScore>, AppError> {
    let f = io::read_feature_file(&model.features_path, io::detect_format(&model.features_path))?;
    let y = io::read_labels(manifest.labels_for(model), label_kind(manifest.task_kind))?;
    let pseudo = model
        .pseudo_labels_path
        .as_deref()
        .map(io::read_pseudo_labels)
        .transpose()?;
    compute_for_model(&model.name, &f, &y, pseudo.as_ref(), methods, cfg, require_pseudo)
}

fn cmd_rank(args: RankArgs) -> Result<(), AppError> {
    let manifest = ZooManifest::from_file(&args.manifest)?;
    let cfg = args.opts.to_config();
    let methods = expand_methods(args.method);
    let per_model = score_manifest(&manifest, &methods, &cfg, args.method != MethodArg::All)?;
    let mut reports = Vec::new();
    for &method in &methods {
        let scores: Vec<TransferScore> = per_model
            .iter()
            .flat_map(|v| v.iter().filter(|s| s.method == method.name()).cloned())
            .collect();
        if scores.is_empty() {
            continue; // method skipped for every model
        }
        reports.push(metrics::rank_models(&scores)?);
    }
    print!("{}", io::render_rank_csv(&reports));
    if let Some(out) = &args.out {
        fs::write(out, io::render_rank_json(&reports)).map_err(IoError::from)?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), AppError> {
    let manifest = ZooManifest::from_file(&args.manifest)?;
    let Some(acc_path) = manifest.accuracy_path.clone() else {
        return Err(AppError::Usage(
            "eval needs a manifest with an accuracy_path entry".into(),
        ));
    };
    let accuracy = io::read_accuracy(&acc_path)?;
    let cfg = args.opts.to_config();
    let methods = expand_methods(args.method);
    let per_model = score_manifest(&manifest, &methods, &cfg, args.method != MethodArg::All)?;
    let mut rows = Vec::new();
    for &method in &methods {
        let mut entries = Vec::new();
        for scores in &per_model {
            for s in scores.iter().filter(|s| s.method == method.name()) {
                if let Some((_, acc)) = accuracy.iter().find(|(n, _)| *n == s.model_name) {
                    entries.push((s.model_name.clone(), s.value, *acc));
                }
            }
        }
        if entries.is_empty() {
            continue;
        }
        let pairs = ScoreAccuracyPairs::new(entries)?;
        rows.push(EvalRow {
            method: method.name().to_owned(),
            pearson: metrics::pearson(&pairs)?,
            kendall_tau: metrics::kendall_tau(&pairs)?,
            weighted_tau: metrics::weighted_tau(&pairs)?,
            models: pairs.len(),
        });
    }
    let report = EvalReport { rows };
    print!("{}", io::render_eval_csv(&report));
    if let Some(out) = &args.out {
        fs::write(out, io::render_eval_json(&report)).map_err(IoError::from)?;
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), AppError> {
    fs::create_dir_all(&args.out_dir).map_err(IoError::from)?;
    match args.preset {
        PresetArg::Blobs => gen_blobs_preset(&args),
        PresetArg::SeparabilitySweep => gen_sweep_preset(&args),
        PresetArg::ToyFig3Like => gen_toy_preset(&args),
    }
}

fn samples_per_class(args: &GenArgs) -> Result<usize, AppError> {
    if args.classes == 0 {
        return Err(AppError::Usage("--classes must be at least 1".into()));
    }
    let m = args.n / args.classes;
    if m == 0 {
        return Err(AppError::Usage(format!(
            "--n {} is too small for {} classes",
            args.n, args.classes
        )));
    }
    if args.n % args.classes != 0 {
        warn!(
            "sample count {} is not divisible by {} classes; writing {} samples",
            args.n,
            args.classes,
            m * args.classes
        );
    }
    Ok(m)
}

fn write_dataset(
    dir: &std::path::Path,
    stem: &str,
    f: &FeatureMatrix,
    y: Option<&LabelVector>,
) -> Result<(), AppError> {
    let feat_path = dir.join(format!("{stem}.trfm"));
    io::write_feature_file(&feat_path, f)?;
    println!("wrote {} ({} x {})", feat_path.display(), f.n(), f.d());
    if let Some(y) = y {
        let label_path = dir.join("labels.txt");
        io::write_labels(&label_path, y)?;
        println!("wrote {}", label_path.display());
    }
    Ok(())
}

fn gen_blobs_preset(args: &GenArgs) -> Result<(), AppError> {
    let m = samples_per_class(args)?;
    let spec = BlobSpec {
        means: synth::default_means(args.classes, args.d, args.separation, args.seed),
        std: args.std,
        samples_per_class: m,
        seed: args.seed,
    };
    let (f, y) = synth::gen_blobs(&spec)?;
    write_dataset(&args.out_dir, "features", &f, Some(&y))
}

fn gen_sweep_preset(args: &GenArgs) -> Result<(), AppError> {
    if args.levels < 3 || args.levels > 99 {
        return Err(AppError::Usage("--levels must be between 3 and 99".into()));
    }
    let m = samples_per_class(args)?;
    let base = BlobSpec {
        means: synth::default_means(args.classes, args.d, args.separation, args.seed),
        std: args.std,
        samples_per_class: m,
        seed: args.seed,
    };
    let datasets = synth::separability_sweep(args.levels, &base)?;
    let mut models = Vec::with_capacity(args.levels);
    let mut accuracy = String::from("model,accuracy\n");
    for (level, (f, y)) in datasets.iter().enumerate() {
        let stem = format!("level_{level:02}");
        write_dataset(&args.out_dir, &stem, f, if level == 0 { Some(y) } else { None })?;
        let t = level as f64 / (args.levels - 1) as f64;
        accuracy.push_str(&format!("{stem},{}\n", io::format_g17(t)));
        models.push(ModelEntry {
            name: stem.clone(),
            features_path: PathBuf::from(format!("{stem}.trfm")),
            labels_path: None,
            pseudo_labels_path: None,
        });
    }
    let acc_path = args.out_dir.join("accuracy.csv");
    fs::write(&acc_path, accuracy).map_err(IoError::from)?;
    println!("wrote {}", acc_path.display());
    let manifest = ZooManifest {
        task_kind: TaskKind::Classification,
        labels_path: Some(PathBuf::from("labels.txt")),
        accuracy_path: Some(PathBuf::from("accuracy.csv")),
        models,
    };
    let manifest_path = args.out_dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, body).map_err(IoError::from)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

/// Two 2-D classes: one centered at the origin, the other at `separation`
/// times a seeded unit direction.
fn gen_toy_preset(args: &GenArgs) -> Result<(), AppError> {
    if args.d != 2 || args.classes != 2 {
        return Err(AppError::Usage(
            "the toy-fig3-like preset is fixed at --d 2 --classes 2".into(),
        ));
    }
    let m = samples_per_class(args)?;
    let dir_seed = args.seed ^ 0x746f79; // distinct noise stream for the direction
    let (gx, gy) = (synth::normal(dir_seed, 0), synth::normal(dir_seed, 1));
    let norm = (gx * gx + gy * gy).sqrt();
    let u = if norm > 1e-12 { [gx / norm, gy / norm] } else { [1.0, 0.0] };
    let spec = BlobSpec {
        means: vec![
            vec![0.0, 0.0],
            vec![args.separation * u[0], args.separation * u[1]],
        ],
        std: args.std,
        samples_per_class: m,
        seed: args.seed,
    };
    let (f, y) = synth::gen_blobs(&spec)?;
    write_dataset(&args.out_dir, "features", &f, Some(&y))
}

fn cmd_oracle(args: OracleArgs) -> Result<(), AppError> {
    let f = io::read_feature_file(&args.features, io::detect_format(&args.features))?;
    let y = io::read_labels(&args.labels, LabelKind::Classification)?;
    let mi = synth::histogram_mi(&f, &y, args.bins_per_dim)?;
    print!("metric,value\nhistogram_mi,{}\n", io::format_g17(mi));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_expands_in_fixed_order() {
        let names: Vec<&str> = expand_methods(MethodArg::All)
            .into_iter()
            .map(Method::name)
            .collect();
        assert_eq!(names, ["transrate", "leep", "nce", "hscore", "logme", "lfc"]);
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(AppError::Usage("x".into()).exit_code(), 1);
        assert_eq!(AppError::Io(IoError::BadMagic).exit_code(), 2);
        assert_eq!(
            AppError::Score(ScoreError::InvalidConfig("eps")).exit_code(),
            1
        );
        assert_eq!(
            AppError::Score(ScoreError::DegenerateLabels { classes: 1 }).exit_code(),
            4
        );
        assert_eq!(
            AppError::Score(ScoreError::Linalg(LinalgError::NumericOverflow)).exit_code(),
            3
        );
        assert_eq!(AppError::Baseline(BaselineError::ZeroKernel).exit_code(), 3);
        assert_eq!(AppError::Metric(MetricError::AllTied).exit_code(), 4);
        assert_eq!(
            AppError::Synth(SynthError::BadSpec("std")).exit_code(),
            1
        );
        assert_eq!(
            AppError::Synth(SynthError::DimensionTooHigh { d: 4 }).exit_code(),
            4
        );
    }
}
