use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use textgcn::gcn::{read_checkpoint, train_on, write_checkpoint};
use textgcn::harness::{
    emit_report, prepare, run_sweep, ConfigFile, Environment, ExperimentConfig, NodeFeature,
    ReportFormat, SweepSpec,
};
use textgcn::textgraph::EdgeConfig;

/// Text graphs, GCN training and ablation sweeps.
#[derive(Debug, Parser)]
#[command(name = "textgcn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the document/word graph and write it as a COO file.
    BuildGraph(Opts),
    /// Train one model and write its checkpoint and training history.
    Train(Opts),
    /// Score a checkpoint on the test documents.
    Evaluate {
        #[command(flatten)]
        opts: Opts,
        /// Checkpoint to score [default: <out>/model.ckpt].
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run the cross product of the given axes and write report tables.
    Sweep(Opts),
}

#[derive(Debug, Args)]
struct Opts {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Layer count; a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    layers: Vec<usize>,
    /// Edge configuration (d2w, d2w_w2w, d2w_w2w_d2d); a list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    edges: Vec<EdgeConfig>,
    /// `onehot` or the path of a feature file; a list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Train on this fraction of all documents (limited environment); a list for `sweep`.
    #[arg(long, value_delimiter = ',')]
    train_fraction: Vec<f64>,
    /// Base seed for training and for limited-environment sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Repeats per sweep cell.
    #[arg(long)]
    repeats: Option<usize>,
    /// Parallel sweep runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory [default: the config's output_dir, else ./textgcn-out].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn single<T: Clone>(flag: &str, values: &[T]) -> Result<Option<T>> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(v.clone())),
        _ => bail!("--{flag} takes a single value outside `sweep`"),
    }
}

fn limited(base: &ExperimentConfig, fraction: f64) -> Environment {
    let (seed, stratified) = match base.environment {
        Environment::Limited {
            seed, stratified, ..
        } => (seed, stratified),
        Environment::Full => (base.train.seed, true),
    };
    Environment::Limited {
        fraction,
        seed,
        stratified,
    }
}

impl Opts {
    /// Config with the single-value overrides applied, and the output directory.
    fn experiment(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let file = ConfigFile::load(&self.config)?;
        let mut c = file.experiment;
        self.apply_common(&mut c);
        if let Some(l) = single("layers", &self.layers)? {
            c.train.n_layers = l;
        }
        if let Some(e) = single("edges", &self.edges)? {
            c.edge_config = e;
        }
        if let Some(f) = single("features", &self.features)? {
            c.node_feature = NodeFeature::parse(&f);
        }
        if let Some(f) = single("train-fraction", &self.train_fraction)? {
            c.environment = limited(&c, f);
        }
        let out = self.out_dir(&c);
        c.output_dir = Some(out.clone());
        Ok((c, out))
    }

    fn apply_common(&self, c: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            c.train.seed = s;
            if let Environment::Limited { seed, .. } = &mut c.environment {
                *seed = s;
            }
        }
        if let Some(r) = self.repeats {
            c.n_repeats = r;
        }
    }

    fn out_dir(&self, c: &ExperimentConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| c.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("textgcn-out"))
    }

    /// Base config and sweep axes; command-line lists replace the config's axes.
    fn sweep(&self) -> Result<(ExperimentConfig, SweepSpec, PathBuf)> {
        let file = ConfigFile::load(&self.config)?;
        let mut base = file.experiment;
        let mut spec = file.sweep.unwrap_or_default();
        self.apply_common(&mut base);
        if !self.layers.is_empty() {
            spec.n_layers = self.layers.clone();
        }
        if !self.edges.is_empty() {
            spec.edge_config = self.edges.clone();
        }
        if !self.features.is_empty() {
            spec.node_feature = self
                .features
                .iter()
                .map(|f| NodeFeature::parse(f))
                .collect();
        }
        if !self.train_fraction.is_empty() {
            spec.train_fraction = self.train_fraction.clone();
        }
        let out = self.out_dir(&base);
        base.output_dir = Some(out.clone());
        Ok((base, spec, out))
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn build_graph_cmd(opts: &Opts) -> Result<ExitCode> {
    let (config, out) = opts.experiment()?;
    let p = prepare(&config)?;
    let g = &p.graph;
    let path = out
        .join("graphs")
        .join(format!("graph_{}.txt", g.edge_config()));
    println!(
        "{} nodes ({} documents, {} words), {} stored entries -> {}",
        g.n_nodes(),
        g.n_docs(),
        g.n_words(),
        g.adjacency().nnz(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(opts: &Opts) -> Result<ExitCode> {
    let (config, out) = opts.experiment()?;
    let p = prepare(&config)?;
    let a_hat = p.graph.normalized_adjacency()?;
    let train_docs = p.corpus.train_indices();
    let (model, history) = train_on(
        a_hat,
        &p.features,
        &p.corpus.doc_labels(),
        &train_docs,
        p.corpus.n_labels(),
        &config.train,
    )?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let ckpt = out.join("model.ckpt");
    write_checkpoint(
        BufWriter::new(
            File::create(&ckpt).with_context(|| format!("creating {}", ckpt.display()))?,
        ),
        &model,
    )?;
    write_json(&out.join("history.json"), &history)?;
    println!(
        "trained {} layers on {} documents ({} validation); stopped at epoch {}, best {} -> {}",
        model.n_layers(),
        history.n_train,
        history.n_val,
        history.stopping_epoch,
        history.best_epoch,
        ckpt.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn evaluate_cmd(opts: &Opts, checkpoint: Option<&Path>) -> Result<ExitCode> {
    let (config, out) = opts.experiment()?;
    let ckpt = checkpoint.map_or_else(|| out.join("model.ckpt"), Path::to_path_buf);
    let file = File::open(&ckpt).with_context(|| format!("opening {}", ckpt.display()))?;
    let model = read_checkpoint(BufReader::new(file))?;
    let p = prepare(&config)?;
    let result = p.score(&model)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("eval.json"), &result)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(ExitCode::SUCCESS)
}

fn sweep_cmd(opts: &Opts) -> Result<ExitCode> {
    let (base, spec, out) = opts.sweep()?;
    let report = run_sweep(&spec, &base, opts.jobs);
    for f in &report.failures {
        eprintln!("failed {} r{}: {}", f.cell, f.repeat, f.error);
    }
    let mut written = emit_report(&report, ReportFormat::Json, &out)?;
    if !report.records.is_empty() {
        written.extend(emit_report(&report, ReportFormat::CsvPivot, &out)?);
        written.extend(emit_report(&report, ReportFormat::CsvLong, &out)?);
    }
    println!(
        "{} runs succeeded, {} failed; wrote {} report files to {}",
        report.records.len(),
        report.failures.len(),
        written.len(),
        out.display()
    );
    Ok(ExitCode::from(report.status().exit_code() as u8))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::BuildGraph(o) => build_graph_cmd(o),
        Command::Train(o) => train_cmd(o),
        Command::Evaluate { opts, checkpoint } => evaluate_cmd(opts, checkpoint.as_deref()),
        Command::Sweep(o) => sweep_cmd(o),
    };
    outcome.unwrap_or_else(|e| {
        log::error!("{e:#}");
        ExitCode::FAILURE
    })
}
