//! Command-line front end: `synth`, `split`, `train`, `eval`, `gradcheck`
//! and `export-figs`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::TrainConfig;
use crate::corpus::io::{write_features, write_interactions};
use crate::corpus::{
    gen_synthetic, load_features, load_interactions, load_split, make_split, make_split_with_cold, save_split,
    FeatureMatrix, InteractionLog, SplitBundle, SyntheticConfig,
};
use crate::eval::{evaluate, write_per_user_csv, MetricsReport, ScenarioKind, ScenarioSpec, Scorer, SplitKind};
use crate::model::snapshot::{load_snapshot, save_snapshot, SnapshotHeader, SNAPSHOT_VERSION};
use crate::optim::gradcheck::{finite_diff_check, tiny_instance};
use crate::optim::train::{train_with, TrainReport};
use crate::{Error, Result};

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_FILE: &str = "report.json";
pub const SNAPSHOT_FILE: &str = "snapshot.bin";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const LOG_FILE: &str = "run.log";

#[derive(Debug, Parser)]
#[command(name = "clcrec", version, about = "Contrastive cold-start recommendation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with known latent structure.
    Synth(SynthArgs),
    /// Split an interaction log into cold items and warm train/val/test.
    Split(SplitArgs),
    /// Train a model and write its report, snapshot and metrics stream.
    Train(TrainArgs),
    /// Evaluate a trained run.
    Eval(EvalArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Export training curves as tidy CSV, optionally running a sweep first.
    ExportFigs(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n_users: usize,
    #[arg(long, default_value_t = 300)]
    pub n_warm: usize,
    #[arg(long, default_value_t = 100)]
    pub n_cold: usize,
    #[arg(long, default_value_t = 8)]
    pub latent: usize,
    #[arg(long, default_value_t = 32)]
    pub feat_dim: usize,
    #[arg(long, default_value_t = 20)]
    pub per_user: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub interactions: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    pub cold_fraction: f64,
    /// File of item IDs (one per line) to force as the cold set.
    #[arg(long)]
    pub cold_items: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EncoderArg {
    Mf,
    Lightgcn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Clcrec,
    Bpr,
}

/// Config file plus per-field overrides, applied in that order.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub interactions: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Split manifest written by `split`.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub cold_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderArg>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    #[arg(long)]
    pub tau_ui: Option<f64>,
    #[arg(long)]
    pub tau_re: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub k_ui: Option<usize>,
    #[arg(long)]
    pub k_re: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        fn s<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(T::to_string)
        }
        let encoder = self.encoder.map(|e| match e {
            EncoderArg::Mf => "mf".to_owned(),
            EncoderArg::Lightgcn => "lightgcn".to_owned(),
        });
        let objective = self.objective.map(|o| match o {
            ObjectiveArg::Clcrec => "clcrec".to_owned(),
            ObjectiveArg::Bpr => "bpr".to_owned(),
        });
        [
            ("seed", s(&self.seed)),
            ("cold_fraction", s(&self.cold_fraction)),
            ("encoder", encoder),
            ("layers", s(&self.layers)),
            ("dim", s(&self.dim)),
            ("hidden", s(&self.hidden)),
            ("objective", objective),
            ("tau_ui", s(&self.tau_ui)),
            ("tau_re", s(&self.tau_re)),
            ("lambda", s(&self.lambda)),
            ("eta", s(&self.eta)),
            ("rho", s(&self.rho)),
            ("k_ui", s(&self.k_ui)),
            ("k_re", s(&self.k_re)),
            ("lr", s(&self.lr)),
            ("batch_size", s(&self.batch_size)),
            ("max_epochs", s(&self.max_epochs)),
            ("patience", s(&self.patience)),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    /// Loads `--config` (or starts from `base`) and applies every flag.
    pub fn resolve(&self, base: TrainConfig) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::load(path)?,
            None => base,
        };
        for (key, value) in self.overrides() {
            cfg.set(key, &value)
                .map_err(|e| Error::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
        if let Some(p) = &self.interactions {
            cfg.data.interactions = Some(p.clone());
        }
        if let Some(p) = &self.features {
            cfg.data.features = Some(p.clone());
        }
        if let Some(p) = &self.split {
            cfg.data.split = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// `param=v1,v2,...`; repeat for a Cartesian grid. The run with the best
    /// validation recall is copied to `--out`.
    #[arg(long, value_name = "PARAM=VALUES")]
    pub grid: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    Warm,
    Cold,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    /// Evaluate all six scenario × split combinations.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value = "all")]
    pub scenario: ScenarioArg,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    #[arg(long)]
    pub k: Option<usize>,
    /// Directory for per-user `user_id,recall,ndcg` CSV files.
    #[arg(long)]
    pub per_user: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Run directories to export.
    #[arg(long, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// `param=v1,v2,...`: train one run per value before exporting.
    #[arg(long, value_name = "PARAM=VALUES")]
    pub sweep: Option<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses the command line and runs it, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Split(a) => cmd_split(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
        Command::ExportFigs(a) => cmd_export_figs(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn absolute(path: &Path) -> Result<PathBuf> {
    fs::canonicalize(path).map_err(|e| Error::io(path, e))
}

fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let cfg = SyntheticConfig {
        n_users: a.n_users,
        n_warm: a.n_warm,
        n_cold: a.n_cold,
        latent: a.latent,
        feat_dim: a.feat_dim,
        per_user: a.per_user,
        noise: a.noise,
        seed: a.seed,
    };
    let (log, features, truth) = gen_synthetic(&cfg).map_err(|e| match e {
        Error::Input(msg) => Error::Config(msg),
        e => e,
    })?;
    create_dir(&a.out)?;
    write_interactions(&a.out.join("interactions.tsv"), &log, &log.interactions)?;
    write_features(&a.out.join("features.tsv"), &log, &features)?;
    write_json(&a.out.join("truth.json"), &truth)?;
    let cold: String = truth
        .cold_items
        .iter()
        .map(|&i| format!("{}\n", log.items.id(i)))
        .collect();
    let path = a.out.join("cold_items.txt");
    fs::write(&path, cold).map_err(|e| Error::io(&path, e))?;
    println!(
        "wrote {} interactions, {} items ({} cold) to {}",
        log.interactions.len(),
        log.n_items(),
        truth.cold_items.len(),
        a.out.display()
    );
    Ok(0)
}

/// Item IDs listed in `path`; IDs absent from the log (items nobody
/// interacted with) are skipped.
fn read_cold_items(path: &Path, log: &InteractionLog) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ids: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let items: Vec<usize> = ids.iter().filter_map(|id| log.items.get(id)).collect();
    if items.len() < ids.len() {
        eprintln!(
            "note: {} listed cold items have no interactions and were skipped",
            ids.len() - items.len()
        );
    }
    Ok(items)
}

pub fn cmd_split(a: &SplitArgs) -> Result<i32> {
    let log = load_interactions(&a.interactions)?;
    let bundle = match &a.cold_items {
        Some(path) => make_split_with_cold(&log, &read_cold_items(path, &log)?, a.seed)?,
        None => {
            if !(a.cold_fraction > 0.0 && a.cold_fraction < 1.0) {
                return Err(Error::Config(format!(
                    "--cold-fraction must lie in (0, 1), got {}",
                    a.cold_fraction
                )));
            }
            make_split(&log, a.cold_fraction, a.seed)?
        }
    };
    let manifest = save_split(&a.out, &absolute(&a.interactions)?, &log, &bundle)?;
    println!(
        "{} cold items, {} train / {} val / {} test warm interactions; manifest {}",
        bundle.cold_items.len(),
        bundle.train.len(),
        bundle.warm_val.len(),
        bundle.warm_test.len(),
        manifest.display()
    );
    Ok(0)
}

/// Corpus and split named by a configuration.
pub struct LoadedData {
    pub log: InteractionLog,
    pub bundle: SplitBundle,
    pub features: FeatureMatrix,
}

pub fn load_data(cfg: &TrainConfig) -> Result<LoadedData> {
    let features_path = cfg
        .data
        .features
        .as_ref()
        .ok_or_else(|| Error::Config("no feature file (--features or data.features)".into()))?;
    let (log, bundle) = match &cfg.data.split {
        Some(manifest) => load_split(manifest)?,
        None => {
            let path = cfg
                .data
                .interactions
                .as_ref()
                .ok_or_else(|| Error::Config("no interaction file (--interactions or data.interactions)".into()))?;
            let log = load_interactions(path)?;
            let bundle = make_split(&log, cfg.data.cold_fraction, cfg.seed)?;
            (log, bundle)
        }
    };
    let features = load_features(features_path, &log)?;
    Ok(LoadedData { log, bundle, features })
}

/// Trains one configuration into `out`. The effective configuration, with
/// absolute data paths and a pinned split, is echoed as `config.toml`.
pub fn train_run(cfg: &TrainConfig, out: &Path) -> Result<TrainReport> {
    create_dir(out)?;
    let mut log_lines = vec![format!("started {}", unix_time())];
    let data = load_data(cfg)?;
    let mut cfg = cfg.clone();
    if cfg.data.split.is_none() {
        let interactions = absolute(cfg.data.interactions.as_ref().expect("checked by load_data"))?;
        let manifest = save_split(&out.join("split"), &interactions, &data.log, &data.bundle)?;
        cfg.data.interactions = Some(interactions);
        cfg.data.split = Some(absolute(&manifest)?);
    } else {
        cfg.data.split = cfg.data.split.as_deref().map(absolute).transpose()?;
        cfg.data.interactions = cfg.data.interactions.as_deref().map(absolute).transpose()?;
    }
    cfg.data.features = cfg.data.features.as_deref().map(absolute).transpose()?;
    cfg.save(&out.join(CONFIG_FILE))?;

    let metrics_path = out.join(METRICS_FILE);
    let file = fs::File::create(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
    let mut metrics = BufWriter::new(file);
    let mut write_err = None;
    let result = train_with(&data.bundle, &data.features, &cfg, |step| {
        if write_err.is_none() {
            let line = serde_json::to_string(step).expect("step record serializes");
            if let Err(e) = writeln!(metrics, "{line}") {
                write_err = Some(e);
            }
        }
    });
    metrics.flush().map_err(|e| Error::io(&metrics_path, e))?;
    if let Some(e) = write_err {
        return Err(Error::io(&metrics_path, e));
    }
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            log_lines.push(format!("failed {}: {e}", unix_time()));
            let _ = fs::write(out.join(LOG_FILE), log_lines.join("\n") + "\n");
            return Err(e);
        }
    };

    write_json(&out.join(REPORT_FILE), &report)?;
    let params = report.best.as_ref().expect("train returns the best parameters");
    let header = SnapshotHeader {
        version: SNAPSHOT_VERSION,
        dims: params.dims,
        encoder: cfg.encoder(),
        seed: cfg.seed,
        config_hash: report.config_hash.clone(),
    };
    save_snapshot(&out.join(SNAPSHOT_FILE), &header, params)?;
    log_lines.push(format!("finished {}", unix_time()));
    let log_path = out.join(LOG_FILE);
    fs::write(&log_path, log_lines.join("\n") + "\n").map_err(|e| Error::io(&log_path, e))?;
    Ok(report)
}

/// Parses `param=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected PARAM=V1,V2,..., got {spec:?}")))?;
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_owned())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(Error::Config(format!("no values for {key}")));
    }
    TrainConfig::default().set(key.trim(), &values[0])?;
    Ok((key.trim().to_owned(), values))
}

/// Cartesian product of the axes, first axis varying slowest.
pub fn grid_points(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut points = vec![Vec::new()];
    for (key, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn point_label(point: &[(String, String)]) -> String {
    point
        .iter()
        .map(|(k, v)| format!("{k}-{v}"))
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Serialize)]
struct GridEntry {
    run: String,
    params: Vec<(String, String)>,
    best_epoch: usize,
    best_val_recall: f64,
    selected: bool,
}

pub fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let base = a.config.resolve(TrainConfig::default())?;
    if a.grid.is_empty() {
        let report = train_run(&base, &a.out)?;
        println!(
            "best epoch {} of {}: validation recall@{} = {:.6}",
            report.best_epoch, report.stopped_epoch, base.eval.k, report.best_val_recall
        );
        return Ok(0);
    }

    let axes = a.grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for point in grid_points(&axes) {
        let mut cfg = base.clone();
        for (k, v) in &point {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        let label = point_label(&point);
        let report = train_run(&cfg, &a.out.join("grid").join(&label))?;
        println!("{label}: validation recall = {:.6}", report.best_val_recall);
        if best.map_or(true, |(_, r)| report.best_val_recall > r) {
            best = Some((entries.len(), report.best_val_recall));
        }
        entries.push(GridEntry {
            run: label,
            params: point,
            best_epoch: report.best_epoch,
            best_val_recall: report.best_val_recall,
            selected: false,
        });
    }
    let (chosen, _) = best.expect("grid has at least one point");
    entries[chosen].selected = true;
    let src = a.out.join("grid").join(&entries[chosen].run);
    for name in [CONFIG_FILE, REPORT_FILE, SNAPSHOT_FILE, METRICS_FILE] {
        let (from, to) = (src.join(name), a.out.join(name));
        fs::copy(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    write_json(&a.out.join("grid.json"), &entries)?;
    println!("selected {}", entries[chosen].run);
    Ok(0)
}

/// Everything needed to score a finished run.
pub struct LoadedRun {
    pub config: TrainConfig,
    pub data: LoadedData,
    pub report: TrainReport,
    pub scorer: Scorer,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    if !dir.is_dir() {
        return Err(Error::Input(format!("run directory {} not found", dir.display())));
    }
    let config = TrainConfig::load(&dir.join(CONFIG_FILE))?;
    let (header, params) = load_snapshot(&dir.join(SNAPSHOT_FILE))?;
    if header.config_hash != config.config_hash() {
        return Err(Error::ArtifactMismatch(format!(
            "snapshot was trained with config {} but {} hashes to {}",
            header.config_hash,
            CONFIG_FILE,
            config.config_hash()
        )));
    }
    let report_path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
    let report: TrainReport = serde_json::from_str(&text)?;
    let data = load_data(&config)?;
    let expected = config.dims(data.bundle.n_users, data.bundle.n_items, data.features.dim());
    if header.dims != expected || header.encoder != config.encoder() {
        return Err(Error::ArtifactMismatch(format!(
            "snapshot dims {:?} do not match the data ({:?})",
            header.dims, expected
        )));
    }
    let scorer = Scorer::new(&params, header.encoder, &data.bundle, &data.features, config.eval.cold_scoring)?;
    Ok(LoadedRun {
        config,
        data,
        report,
        scorer,
    })
}

pub fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let run = load_run(&a.run)?;
    let k = a.k.unwrap_or(run.config.eval.k);
    let specs = if a.all {
        ScenarioSpec::all(k)
    } else {
        let kind = match a.scenario {
            ScenarioArg::Warm => ScenarioKind::Warm,
            ScenarioArg::Cold => ScenarioKind::Cold,
            ScenarioArg::All => ScenarioKind::All,
        };
        let split = match a.split {
            SplitArg::Val => SplitKind::Val,
            SplitArg::Test => SplitKind::Test,
        };
        vec![ScenarioSpec { kind, split, k }]
    };
    let mut reports: Vec<MetricsReport> = Vec::new();
    for spec in &specs {
        let report = evaluate(&run.scorer, &run.data.bundle, spec)?;
        if let Some(dir) = &a.per_user {
            create_dir(dir)?;
            let name = format!("{}.csv", spec.to_string().replace(['/', '@'], "_"));
            write_per_user_csv(&dir.join(name), &report, run.data.log.users.ids())?;
        }
        reports.push(MetricsReport {
            per_user: None,
            ..report
        });
    }
    match &a.out {
        Some(path) => write_json(path, &reports)?,
        None => println!("{}", serde_json::to_string_pretty(&reports)?),
    }
    Ok(0)
}

pub fn cmd_gradcheck(a: &GradcheckArgs) -> Result<i32> {
    let seed = a.config.seed.unwrap_or(0);
    let (tiny_bundle, tiny_features, tiny_cfg) = tiny_instance(seed)?;
    let cfg = a.config.resolve(tiny_cfg)?;
    let report = if cfg.data.features.is_some() {
        let data = load_data(&cfg)?;
        finite_diff_check(&data.bundle, &data.features, &cfg, a.trials)?
    } else {
        finite_diff_check(&tiny_bundle, &tiny_features, &cfg, a.trials)?
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.max_rel_error < GRADCHECK_TOLERANCE {
        println!("gradcheck passed: max relative error {:.3e}", report.max_rel_error);
        Ok(0)
    } else {
        eprintln!(
            "gradcheck FAILED: tensor {} entry {}: analytic {:e} vs numeric {:e} (relative error {:.3e})",
            report.tensor, report.index, report.analytic, report.numeric, report.max_rel_error
        );
        Ok(1)
    }
}

/// Tidy `run_id,epoch,metric,value` rows from a run's epoch history.
pub fn history_rows(run_id: &str, report: &TrainReport) -> Vec<String> {
    let mut rows = Vec::new();
    for h in &report.history {
        let metrics = [
            ("l_ui", Some(h.l_ui)),
            ("l_re", Some(h.l_re)),
            ("l_reg", Some(h.l_reg)),
            ("total", Some(h.total)),
            ("grad_mag", Some(h.grad_mag)),
            ("val_recall_warm", h.val_recall_warm),
            ("val_recall_cold", h.val_recall_cold),
            ("val_recall_all", Some(h.val_recall_all)),
        ];
        for (name, value) in metrics {
            if let Some(v) = value {
                rows.push(format!("{run_id},{},{name},{v}", h.epoch));
            }
        }
    }
    rows
}

fn run_id(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

pub fn cmd_export_figs(a: &ExportArgs) -> Result<i32> {
    let mut runs = a.runs.clone();
    let mut sweep_rows = Vec::new();
    if let Some(sweep) = &a.sweep {
        let (key, values) = parse_axis(sweep)?;
        let base = a.config.resolve(TrainConfig::default())?;
        for value in &values {
            let mut cfg = base.clone();
            cfg.set(&key, value)?;
            cfg.validate()?;
            let dir = a.out.join(format!("{key}-{value}"));
            train_run(&cfg, &dir)?;
            let run = load_run(&dir)?;
            for spec in ScenarioSpec::all(cfg.eval.k) {
                if spec.split != SplitKind::Test {
                    continue;
                }
                match evaluate(&run.scorer, &run.data.bundle, &spec) {
                    Ok(r) => {
                        let name = format!("{:?}", spec.kind).to_lowercase();
                        sweep_rows.push(format!("{},{key},{value},test_recall_{name},{}", run_id(&dir), r.recall_at_k));
                        sweep_rows.push(format!("{},{key},{value},test_ndcg_{name},{}", run_id(&dir), r.ndcg_at_k));
                    }
                    Err(Error::EmptyScenario(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            runs.push(dir);
        }
    }
    if runs.is_empty() {
        return Err(Error::Config("nothing to export: pass --runs or --sweep".into()));
    }

    create_dir(&a.out)?;
    let mut rows = vec!["run_id,epoch,metric,value".to_owned()];
    for dir in &runs {
        let path = dir.join(REPORT_FILE);
        if !dir.is_dir() {
            return Err(Error::Input(format!("run directory {} not found", dir.display())));
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let report: TrainReport = serde_json::from_str(&text)?;
        rows.extend(history_rows(&run_id(dir), &report));
    }
    let figs = a.out.join("figs.csv");
    fs::write(&figs, rows.join("\n") + "\n").map_err(|e| Error::io(&figs, e))?;
    if !sweep_rows.is_empty() {
        let path = a.out.join("sweep.csv");
        let mut text = String::from("run_id,param,param_value,metric,value\n");
        for r in &sweep_rows {
            text.push_str(r);
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    println!("wrote {} rows for {} runs to {}", rows.len() - 1, runs.len(), figs.display());
    Ok(0)
}
