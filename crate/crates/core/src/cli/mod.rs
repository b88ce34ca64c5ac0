//! The `mlbalance` command line.
//!
//! Exit codes: 0 on success, 1 for data errors (unreadable or invalid input,
//! undefined measures), 2 for usage errors (bad flags or configuration).
//! Logs go to standard error; results go to `--out` files (written through a
//! temporary file and renamed) or to standard output.

mod config;
mod io;

use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::dataset::{drop_rare_labels, label_class_info, ColumnKind, MultiLabelDataset};
use crate::ensemble::{cross_validate_ensemble, Diversify, EnsembleSettings};
use crate::error::Error;
use crate::evaluation::{correlate_measures, cross_validate, CvProtocol, CvSettings, EvaluationReport};
use crate::imbalance::{global_measures, limb, limb_sensitivity};
use crate::learners::LearnerKind;
use crate::neighbors::build_index_cached;
use crate::sampling::{sample, sample_with_index, Method, SamplerConfig};
use crate::synthetic;
pub use config::FileConfig;
use io::{emit, load, save_dataset, Format};

pub const CACHE_ENV: &str = "MLBALANCE_CACHE_DIR";
const DEFAULT_K: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "mlbalance",
    version,
    about = "Multi-label imbalance measures, resampling and evaluation"
)]
struct Cli {
    /// Worker threads for index, fold and member tasks (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with default values; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Dataset file (ARFF with a label XML, or CSV with trailing label columns).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Label XML for ARFF input (default: same path with .xml).
    #[arg(long)]
    xml: Option<PathBuf>,
    /// Input format: arff or csv (default: from the extension).
    #[arg(long)]
    format: Option<String>,
    /// Number of trailing label columns in CSV input.
    #[arg(long)]
    labels: Option<usize>,
    /// Drop labels with fewer minority-class instances than this.
    #[arg(long)]
    min_minority: Option<usize>,
}

#[derive(Debug, Args)]
struct SamplerArgs {
    /// mlsol, mlul, mlros or mlrus.
    #[arg(long)]
    method: Option<String>,
    /// Sampling ratio p.
    #[arg(long)]
    ratio: Option<f64>,
    /// Neighborhood size.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Global and local imbalance measures as JSON.
    Measure {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: Option<usize>,
        /// Also report LImb for each of these k values (comma separated).
        #[arg(long, value_delimiter = ',')]
        sensitivity: Vec<usize>,
        /// Directory for cached neighbor indexes.
        #[arg(long, env = CACHE_ENV)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resample a dataset; writes the result in the input format plus a provenance file.
    Sample {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Provenance JSON path (default: <out>.provenance.json).
        #[arg(long)]
        provenance: Option<PathBuf>,
        #[arg(long, env = CACHE_ENV)]
        cache_dir: Option<PathBuf>,
    },
    /// Cross-validate a learner, optionally resampling each training split.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        learner: Option<String>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV table with one row per fold.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// CSV with per-label metrics of every fold.
        #[arg(long)]
        per_label: Option<PathBuf>,
    },
    /// Cross-validate an ensemble of resampled learners.
    Ensemble {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        learner: Option<String>,
        #[arg(long)]
        members: Option<usize>,
        /// seed, p or k.
        #[arg(long)]
        diversify: Option<String>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Correlate imbalance measures with learner performance across datasets.
    Correlate {
        /// Dataset files (repeatable).
        #[arg(long = "in", value_name = "PATH")]
        inputs: Vec<PathBuf>,
        /// Label XML files, in the order of the ARFF inputs.
        #[arg(long)]
        xml: Vec<PathBuf>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        labels: Option<usize>,
        /// Add a generated family of this many datasets.
        #[arg(long)]
        synthetic: Option<usize>,
        /// Instances per generated dataset.
        #[arg(long, default_value_t = 400)]
        synthetic_n: usize,
        /// Learners to evaluate (comma separated).
        #[arg(long, value_delimiter = ',')]
        learners: Vec<String>,
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Shape, label statistics and parse report of a dataset.
    Inspect {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Measure { .. } => "measure",
            Command::Sample { .. } => "sample",
            Command::Evaluate { .. } => "evaluate",
            Command::Ensemble { .. } => "ensemble",
            Command::Correlate { .. } => "correlate",
            Command::Inspect { .. } => "inspect",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Data(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("MLBALANCE_LOG")
        .target(env_logger::Target::Stderr)
        .try_init();

    let name = cli.command.name();
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            let usage_text = cmd
                .find_subcommand_mut(name)
                .map(|c| c.render_usage().to_string())
                .unwrap_or_default();
            eprintln!("error: {msg}\n\n{usage_text}");
            2
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| usage(format!("--jobs: {e}")))?;
    pool.install(|| dispatch(cli.command, &file))
}

fn require_seed(flag: Option<u64>, file: &FileConfig, cmd: &str) -> CliResult<u64> {
    flag.or(file.seed).ok_or_else(|| {
        usage(format!(
            "`{cmd}` is stochastic and requires --seed (or `seed` in --config)"
        ))
    })
}

fn load_input(input: &InputArgs, file: &FileConfig) -> CliResult<io::Loaded> {
    let format = input.format.as_deref().or(file.format.as_deref());
    let mut loaded = load(&input.input, input.xml.as_deref(), input.labels.or(file.labels), format)?;
    if let Some(m) = input.min_minority.or(file.min_minority) {
        let before = loaded.dataset.q();
        loaded.dataset = drop_rare_labels(&loaded.dataset, m)?;
        if loaded.dataset.q() < before {
            log::info!("dropped {} rare labels", before - loaded.dataset.q());
        }
    }
    Ok(loaded)
}

fn sampler_config(
    args: &SamplerArgs,
    file: &FileConfig,
    seed: u64,
    required: bool,
) -> CliResult<Option<SamplerConfig>> {
    let method = match args.method.as_deref().or(file.method.as_deref()) {
        Some(m) => m.parse::<Method>()?,
        None if required => return Err(usage("--method is required")),
        None => return Ok(None),
    };
    let cfg = SamplerConfig::new(
        method,
        args.ratio.or(file.ratio).unwrap_or(method.default_ratio()),
        args.k.or(file.k).unwrap_or(DEFAULT_K),
        seed,
    );
    cfg.validate()?;
    Ok(Some(cfg))
}

fn learner_kind(flag: Option<&str>, file: &FileConfig) -> CliResult<LearnerKind> {
    Ok(flag
        .or(file.learner.as_deref())
        .unwrap_or("br_linear")
        .parse::<LearnerKind>()?)
}

fn protocol(args: &ProtocolArgs, file: &FileConfig) -> CvProtocol {
    let d = CvProtocol::default();
    CvProtocol {
        folds: args.folds.or(file.folds).unwrap_or(d.folds),
        repeats: args.repeats.or(file.repeats).unwrap_or(d.repeats),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn guard_output(input: &Path, out: Option<&Path>) -> CliResult<()> {
    if let Some(o) = out {
        if io::same_file(input, o) {
            return Err(usage(format!("output {} would overwrite the input", o.display())));
        }
    }
    Ok(())
}

fn dispatch(command: Command, file: &FileConfig) -> CliResult<()> {
    let params = file.learner_params.unwrap_or_default();
    match command {
        Command::Measure {
            input,
            k,
            sensitivity,
            cache_dir,
            out,
        } => {
            guard_output(&input.input, out.as_deref())?;
            let loaded = load_input(&input, file)?;
            let k = k.or(file.k).unwrap_or(DEFAULT_K);
            emit(
                out.as_deref(),
                &to_json(&measure_json(&loaded.dataset, k, &sensitivity, cache_dir.as_deref())?)?,
            )?;
        }
        Command::Sample {
            input,
            sampler,
            seed,
            out,
            provenance,
            cache_dir,
        } => {
            let seed = require_seed(seed, file, "sample")?;
            guard_output(&input.input, Some(&out))?;
            let loaded = load_input(&input, file)?;
            let cfg = sampler_config(&sampler, file, seed, true)?.expect("required");
            let ds = &loaded.dataset;
            let outcome = if cfg.method.needs_neighbors() {
                let idx = build_index_cached(ds, cfg.k, cache_dir.as_deref())?;
                sample_with_index(ds, &idx, &cfg)?
            } else {
                sample(ds, &cfg)?
            };
            let written = save_dataset(&outcome.dataset, &out, loaded.format)?;
            let sidecar = provenance.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".provenance.json");
                PathBuf::from(p)
            });
            let doc = json!({
                "method": cfg.method,
                "ratio": cfg.p,
                "k": cfg.k,
                "seed": cfg.rng_seed,
                "input_sha256": loaded.sha256,
                "input_n": ds.n(),
                "output_n": outcome.dataset.n(),
                "warnings": outcome.warnings,
                "provenance": outcome.provenance,
            });
            io::write_atomic(&sidecar, to_json(&doc)?.as_bytes())?;
            for p in written {
                log::info!("wrote {}", p.display());
            }
        }
        Command::Evaluate {
            input,
            sampler,
            learner,
            protocol: pargs,
            out,
            csv,
            per_label,
        } => {
            let seed = require_seed(pargs.seed, file, "evaluate")?;
            let loaded = load_input(&input, file)?;
            let settings = CvSettings {
                learner: learner_kind(learner.as_deref(), file)?,
                params,
                sampler: sampler_config(&sampler, file, seed, false)?,
                protocol: protocol(&pargs, file),
                seed,
            };
            let result = cross_validate(&loaded.dataset, &settings)?;
            let doc = json!({
                "learner": settings.learner,
                "sampler": settings.sampler,
                "protocol": settings.protocol,
                "seed": seed,
                "input_sha256": loaded.sha256,
                "reports": result.reports,
                "mean": result.mean,
            });
            emit(out.as_deref(), &to_json(&doc)?)?;
            if let Some(p) = csv {
                io::write_atomic(&p, fold_table(&result.reports, None)?.as_bytes())?;
            }
            if let Some(p) = per_label {
                io::write_atomic(&p, per_label_table(&result.reports)?.as_bytes())?;
            }
        }
        Command::Ensemble {
            input,
            sampler,
            learner,
            members,
            diversify,
            protocol: pargs,
            out,
            csv,
        } => {
            let seed = require_seed(pargs.seed, file, "ensemble")?;
            let loaded = load_input(&input, file)?;
            let sampler_args = SamplerArgs {
                method: sampler.method.or_else(|| file.method.clone()).or(Some("mlsol".into())),
                ..sampler
            };
            let diversify: Diversify = diversify
                .as_deref()
                .or(file.diversify.as_deref())
                .unwrap_or("seed")
                .parse()?;
            let settings = EnsembleSettings {
                sampler: sampler_config(&sampler_args, file, seed, true)?.expect("required"),
                learner: learner_kind(learner.as_deref(), file)?,
                params,
                members: members.or(file.members).unwrap_or(5),
                diversify,
            };
            let proto = protocol(&pargs, file);
            let result = cross_validate_ensemble(&loaded.dataset, &settings, proto, seed)?;
            let doc = json!({
                "learner": settings.learner,
                "sampler": settings.sampler,
                "members": settings.members,
                "diversify": settings.diversify,
                "protocol": proto,
                "seed": seed,
                "input_sha256": loaded.sha256,
                "runs": result.runs,
                "mean": result.mean,
                "mean_disagreement": result.mean_disagreement,
            });
            emit(out.as_deref(), &to_json(&doc)?)?;
            if let Some(p) = csv {
                let reports: Vec<EvaluationReport> = result.runs.iter().map(|r| r.report.clone()).collect();
                let disa: Vec<f64> = result.runs.iter().map(|r| r.disagreement).collect();
                io::write_atomic(&p, fold_table(&reports, Some(&disa))?.as_bytes())?;
            }
        }
        Command::Correlate {
            inputs,
            xml,
            format,
            labels,
            synthetic: family_size,
            synthetic_n,
            learners,
            k,
            protocol: pargs,
            out,
            csv,
        } => {
            let seed = require_seed(pargs.seed, file, "correlate")?;
            if !xml.is_empty() && xml.len() != inputs.len() {
                return Err(usage("--xml must be given once per --in, or not at all"));
            }
            let mut datasets: Vec<(String, MultiLabelDataset)> = Vec::new();
            for (i, path) in inputs.iter().enumerate() {
                let loaded = load(
                    path,
                    xml.get(i).map(PathBuf::as_path),
                    labels.or(file.labels),
                    format.as_deref().or(file.format.as_deref()),
                )?;
                datasets.push((path.display().to_string(), loaded.dataset));
            }
            if let Some(count) = family_size {
                datasets.extend(synthetic::family(count, synthetic_n, seed)?);
            }
            let kinds: Vec<LearnerKind> = if learners.is_empty() {
                LearnerKind::ALL.to_vec()
            } else {
                learners.iter().map(|l| l.parse()).collect::<crate::Result<_>>()?
            };
            let table = correlate_measures(
                &datasets,
                &kinds,
                &params,
                k.or(file.k).unwrap_or(DEFAULT_K),
                protocol(&pargs, file),
                seed,
            )?;
            emit(out.as_deref(), &to_json(&table)?)?;
            if let Some(p) = csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                let err = |e: csv::Error| Failure::Data(Error::InvalidDataset(e.to_string()));
                w.write_record(["measure", "learner", "metric", "rho", "rank"])
                    .map_err(err)?;
                for e in &table.entries {
                    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    w.write_record([
                        e.measure.to_string(),
                        e.learner.to_string(),
                        e.metric.to_string(),
                        opt(e.rho),
                        opt(e.rank),
                    ])
                    .map_err(err)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| Failure::Data(Error::InvalidDataset(e.to_string())))?;
                io::write_atomic(&p, &bytes)?;
            }
        }
        Command::Inspect { input, out } => {
            guard_output(&input.input, out.as_deref())?;
            let loaded = load_input(&input, file)?;
            emit(out.as_deref(), &to_json(&inspect_json(&loaded))?)?;
        }
    }
    Ok(())
}

fn measure_json(
    ds: &MultiLabelDataset,
    k: usize,
    sensitivity: &[usize],
    cache_dir: Option<&Path>,
) -> CliResult<serde_json::Value> {
    let g = global_measures(ds)?;
    let idx = build_index_cached(ds, k, cache_dir)?;
    let limb_value = limb(ds, &idx)?;
    let mut doc = json!({
        "labels": ds.label_names(),
        "n": ds.n(),
        "d": ds.d(),
        "q": ds.q(),
        "k": k,
        "per_label": { "irlbl": g.irlbl, "imr": g.imr },
        "mean_ir": g.mean_ir,
        "cvir": g.cvir,
        "mean_imr": g.mean_imr,
        "cvimr": g.cvimr,
        "scumble": g.scumble,
        "limb": limb_value,
    });
    if !sensitivity.is_empty() {
        let rows: Vec<serde_json::Value> = limb_sensitivity(ds, sensitivity)?
            .into_iter()
            .map(|(k, v)| json!({ "k": k, "limb": v }))
            .collect();
        doc["limb_sensitivity"] = serde_json::Value::Array(rows);
    }
    Ok(doc)
}

fn inspect_json(loaded: &io::Loaded) -> serde_json::Value {
    let ds = &loaded.dataset;
    let info = label_class_info(ds);
    let summary = ds.summary();
    let labels: Vec<serde_json::Value> = ds
        .label_names()
        .iter()
        .zip(&info.labels)
        .map(|(name, c)| {
            json!({ "name": name, "positives": c.count_pos, "negatives": c.count_neg, "minority": c.minority })
        })
        .collect();
    let features: Vec<serde_json::Value> = ds
        .columns()
        .iter()
        .map(|c| match &c.kind {
            ColumnKind::Numeric => json!({ "name": c.name, "kind": "numeric" }),
            ColumnKind::Nominal(v) => json!({ "name": c.name, "kind": "nominal", "values": v.len() }),
        })
        .collect();
    json!({
        "relation": ds.relation(),
        "format": match loaded.format { Format::Arff => "arff", Format::Csv => "csv" },
        "sha256": loaded.sha256,
        "n": summary.n,
        "d": summary.d,
        "q": summary.q,
        "cardinality": summary.cardinality,
        "density": summary.density,
        "labels": labels,
        "features": features,
        "parse_report": loaded.report,
    })
}

fn fold_table(reports: &[EvaluationReport], disagreement: Option<&[f64]>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Data(Error::InvalidDataset(e.to_string()));
    let mut header = vec![
        "repeat",
        "fold",
        "macro_f1",
        "macro_auc_roc",
        "macro_aucpr",
        "train_size",
        "test_size",
    ];
    if disagreement.is_some() {
        header.push("disagreement");
    }
    w.write_record(&header).map_err(err)?;
    for (i, r) in reports.iter().enumerate() {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut row = vec![
            opt(r.repeat),
            opt(r.fold),
            r.macro_f1.to_string(),
            r.macro_auc_roc.to_string(),
            r.macro_aucpr.to_string(),
            opt(r.train_size),
            opt(r.test_size),
        ];
        if let Some(d) = disagreement {
            row.push(d[i].to_string());
        }
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Data(Error::InvalidDataset(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn per_label_table(reports: &[EvaluationReport]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Data(Error::InvalidDataset(e.to_string()));
    w.write_record([
        "repeat",
        "fold",
        "label",
        "f1",
        "auc_roc",
        "aucpr",
        "threshold",
        "evaluable",
    ])
    .map_err(err)?;
    for r in reports {
        for l in &r.per_label {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                r.repeat.map(|x| x.to_string()).unwrap_or_default(),
                r.fold.map(|x| x.to_string()).unwrap_or_default(),
                l.label.clone(),
                l.f1.to_string(),
                opt(l.auc_roc),
                opt(l.aucpr),
                l.threshold.to_string(),
                l.evaluable.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Data(Error::InvalidDataset(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
