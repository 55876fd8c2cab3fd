use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bci_core::dataio::{random_mixing, read_dataset, splitmix64, synth_classes, write_dataset};
use bci_core::eval::{evaluate, evaluate_pairs, render_table, TableFormat};
use bci_core::{AccuracyResult, BandSpec, ClassLabel, ClassPair, EpochedDataset, ResultsTable, SynthSpec};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "BCI_PIPELINE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bci-pipeline", version, about = "Binary mental-task classification from epoched EEG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed. Overrides the config's eval.master_seed and seeds `synth`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on it. Defaults to all cores.
    #[arg(long, global = true, env = THREADS_ENV, value_parser = clap::value_parser!(u64).range(1..=4096))]
    pub threads: Option<u64>,

    /// Directory for csv, table and manifest output.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Report format on stdout.
    #[arg(long, global = true)]
    pub format: Option<TableFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset with a known discriminative source.
    Synth(SynthArgs),
    /// Summarise an .epo file.
    Info {
        path: PathBuf,
    },
    /// Evaluate one pipeline on one subject and class pair.
    Eval {
        config: PathBuf,
        /// Subject id; may be omitted when the config has exactly one.
        #[arg(long)]
        subject: Option<String>,
        /// Class pair such as WORD-FEET.
        #[arg(long)]
        pair: ClassPair,
        /// Pipeline name from the config.
        #[arg(long)]
        pipeline: String,
    },
    /// Evaluate every subject, pair and pipeline and render the tables.
    Table {
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Total trials, split evenly over the classes.
    #[arg(long, default_value_t = 80)]
    pub trials: usize,
    #[arg(long, default_value_t = 30)]
    pub channels: usize,
    #[arg(long, default_value_t = 1792)]
    pub samples: usize,
    #[arg(long, default_value_t = 256.0)]
    pub fs: f64,
    /// Variance ratio of the class-specific source.
    #[arg(long, default_value_t = 10.0)]
    pub ratio: f64,
    /// Std of the additive sensor noise.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Number of latent sources.
    #[arg(long, default_value_t = 4)]
    pub sources: usize,
    #[arg(long, default_value_t = 8.0)]
    pub band_low: f64,
    #[arg(long, default_value_t = 12.0)]
    pub band_high: f64,
    /// Comma-separated class names, or `all` for the five tasks.
    #[arg(long, default_value = "WORD,FEET")]
    pub classes: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

/// Resolved global options.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<TableFormat>,
}

/// Parses `args`, runs the command on a pool of the requested size and
/// writes the report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::usage(e.to_string()))?;
    execute(cli, out)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder.build().map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    let globals = Globals { seed: cli.seed, output_dir: cli.output_dir, format: cli.format };
    let mut buf: Vec<u8> = Vec::new();
    let sink = &mut buf;
    pool.install(|| match cli.command {
        Command::Synth(args) => cmd_synth(&args, &globals, sink),
        Command::Info { path } => cmd_info(&path, sink),
        Command::Eval { config, subject, pair, pipeline } => {
            cmd_eval(&config, subject.as_deref(), pair, &pipeline, &globals, sink)
        }
        Command::Table { config } => cmd_table(&config, &globals, sink),
    })?;
    out.write_all(&buf).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn parse_classes(s: &str) -> Result<Vec<ClassLabel>, CliError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ClassLabel::ALL.to_vec());
    }
    let mut classes = s.split(',').map(|c| c.parse::<ClassLabel>()).collect::<Result<Vec<_>, _>>()?;
    classes.sort();
    if classes.windows(2).any(|w| w[0] == w[1]) || classes.len() < 2 {
        return Err(CliError::usage(format!("--classes needs at least two distinct classes, got `{s}`")));
    }
    Ok(classes)
}

pub fn cmd_synth(args: &SynthArgs, g: &Globals, out: &mut dyn Write) -> Result<(), CliError> {
    let classes = parse_classes(&args.classes)?;
    if args.trials == 0 || !args.trials.is_multiple_of(classes.len()) {
        return Err(CliError::usage(format!(
            "--trials {} does not split evenly over {} classes",
            args.trials,
            classes.len()
        )));
    }
    if args.sources == 0 || args.sources > args.channels {
        return Err(CliError::usage(format!("--sources must be in 1..={}", args.channels)));
    }
    let seed = g.seed.unwrap_or(0);
    let spec = SynthSpec {
        n_trials_per_class: args.trials / classes.len(),
        n_channels: args.channels,
        n_samples: args.samples,
        fs_hz: args.fs,
        mixing: random_mixing(args.channels, args.sources, splitmix64(seed)),
        source_band: BandSpec::new(args.band_low, args.band_high),
        variance_ratio: args.ratio,
        noise_std: args.noise,
    };
    spec.validate()?;
    let ds = synth_classes(&spec, &classes, seed)?;
    let path = match &g.output_dir {
        Some(dir) if args.output.is_relative() => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            dir.join(&args.output)
        }
        _ => args.output.clone(),
    };
    write_dataset(&ds, &path)?;
    emit(
        out,
        &format!(
            "wrote {}: {} trials, {} channels, {} samples, {} Hz, seed {seed}\n",
            path.display(),
            ds.n_trials(),
            ds.n_channels(),
            ds.n_samples(),
            ds.fs_hz()
        ),
    )
}

pub fn cmd_info(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let ds = read_dataset(path)?;
    let mut s = format!(
        "file: {}\ntrials: {}\nchannels: {}\nsamples: {}\nfs_hz: {}\nduration_s: {}\n",
        path.display(),
        ds.n_trials(),
        ds.n_channels(),
        ds.n_samples(),
        ds.fs_hz(),
        ds.n_samples() as f64 / ds.fs_hz()
    );
    for (c, n) in ds.class_counts() {
        s.push_str(&format!("class {c}: {n}\n"));
    }
    emit(out, &s)
}

fn config_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_config(config_path: &Path, g: &Globals) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(seed) = g.seed {
        cfg.eval.master_seed = seed;
    }
    if let Some(f) = g.format {
        cfg.format = Some(f);
    }
    Ok(cfg)
}

fn load_subject(base: &Path, path: &Path) -> Result<EpochedDataset, CliError> {
    Ok(read_dataset(base.join(path))?)
}

fn output_dir(g: &Globals, cfg: &RunConfig, base: &Path) -> PathBuf {
    match (&g.output_dir, &cfg.output_dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => base.join("results"),
    }
}

/// Everything needed to reproduce a run.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<Selection>,
    /// Per-repetition split seeds, hexadecimal.
    rep_seeds: Vec<String>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct Selection {
    subject: String,
    pair: ClassPair,
    pipeline: String,
}

fn manifest_text(cfg: &RunConfig, command: &'static str, selection: Option<Selection>) -> Result<String, CliError> {
    let m = Manifest {
        tool: "bci-pipeline",
        version: env!("CARGO_PKG_VERSION"),
        command,
        selection,
        rep_seeds: cfg.eval.rep_seeds().iter().map(|s| format!("{s:016x}")).collect(),
        config: cfg,
    };
    toml::to_string(&m).map_err(|e| CliError::usage(format!("manifest: {e}")))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

pub fn cmd_eval(
    config_path: &Path,
    subject: Option<&str>,
    pair: ClassPair,
    pipeline: &str,
    g: &Globals,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(config_path, g)?;
    let entry = cfg.pipeline(pipeline)?;
    let subj = match subject {
        Some(id) => cfg.subject(id)?,
        None if cfg.subjects.len() == 1 => &cfg.subjects[0],
        None => return Err(CliError::usage("--subject is required when the config has several subjects")),
    };
    let base = config_dir(config_path);
    let ds = load_subject(&base, &subj.path)?.select_pair(pair.first(), pair.second())?;
    let result = evaluate(&ds, &entry.spec, &cfg.eval)?;

    let mut table = ResultsTable::new();
    table.add_pipeline(entry.info())?;
    table.push(&subj.id, pair, &entry.name, result.clone())?;
    let report = match cfg.format.unwrap_or(TableFormat::Text) {
        TableFormat::Text => eval_line(&subj.id, pair, &entry.name, &result),
        TableFormat::Csv => table.aggregate_csv(),
    };
    if let Some(dir) = &g.output_dir {
        write_file(dir, "raw.csv", &table.raw_csv())?;
        write_file(dir, "results.csv", &table.aggregate_csv())?;
        let sel = Selection { subject: subj.id.clone(), pair, pipeline: entry.name.clone() };
        write_file(dir, "manifest.toml", &manifest_text(&cfg, "eval", Some(sel))?)?;
    }
    emit(out, &report)
}

fn eval_line(subject: &str, pair: ClassPair, pipeline: &str, r: &AccuracyResult) -> String {
    format!("{subject} {pair} {pipeline}: {:.4}±{:.4} over {} repetitions\n", r.mean, r.std, r.per_rep.len())
}

/// Outputs of a full table run.
#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub table: ResultsTable,
    pub text: String,
    pub aggregate_csv: String,
    pub raw_csv: String,
    pub manifest: String,
}

/// Evaluates every subject × pair × pipeline of `cfg`. Relative subject
/// paths resolve against `base`.
pub fn build_table(cfg: &RunConfig, base: &Path) -> Result<TableReport, CliError> {
    if cfg.subjects.is_empty() {
        return Err(CliError::usage("config defines no [[subject]]"));
    }
    let mut table = ResultsTable::new();
    for p in &cfg.pipelines {
        table.add_pipeline(p.info())?;
    }
    for subj in &cfg.subjects {
        let ds = load_subject(base, &subj.path)?;
        for p in &cfg.pipelines {
            let rows = evaluate_pairs(&ds, &cfg.pairs, &p.spec, &cfg.eval)
                .map_err(|e| CliError::from(e).with_context(&format!("subject {} pipeline {}", subj.id, p.name)))?;
            for (pair, result) in rows {
                table.push(&subj.id, pair, &p.name, result)?;
            }
        }
    }
    Ok(TableReport {
        text: render_table(&table, TableFormat::Text)?,
        aggregate_csv: render_table(&table, TableFormat::Csv)?,
        raw_csv: table.raw_csv(),
        manifest: manifest_text(cfg, "table", None)?,
        table,
    })
}

pub fn cmd_table(config_path: &Path, g: &Globals, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(config_path, g)?;
    let base = config_dir(config_path);
    let report = build_table(&cfg, &base)?;
    let dir = output_dir(g, &cfg, &base);
    write_file(&dir, "results.csv", &report.aggregate_csv)?;
    write_file(&dir, "raw.csv", &report.raw_csv)?;
    write_file(&dir, "table.txt", &report.text)?;
    write_file(&dir, "manifest.toml", &report.manifest)?;
    match cfg.format.unwrap_or(TableFormat::Text) {
        TableFormat::Text => emit(out, &report.text),
        TableFormat::Csv => emit(out, &report.aggregate_csv),
    }
}
