//! The `sprint` command line.
//!
//! Options resolve as: command-line flag, then `--config FILE`, then the
//! built-in default. A config file is either a TOML table of
//! `flag-name = value` pairs or a run manifest written by an earlier
//! command, whose `options` are replayed. Exit codes: 0 ok, 2 usage,
//! 3 parse, 4 align, 5 numeric/diverge, 6 io.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::attention::{attn_demo, AttentionConfig};
use crate::error::{Result, SprintError};
use crate::eval::{evaluate, greedy_head_ranking, DrawMode, GreedyRule, Policy};
use crate::features::QuestionFeatures;
use crate::manifest::RunManifest;
use crate::model_file::{load_model, save_model};
use crate::outcomes::{gain_stats, load_outcomes, GroupBy, HeadCatalog};
use crate::selector::{select, RankedHead};
use crate::synth::{generate_synthetic, SynthSpec};
use crate::trainer::{train, OptimizerKind, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "sprint", version, about = "Question-conditioned attention-head pruning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the question encoder and head embeddings on an outcome matrix.
    Train(TrainArgs),
    /// Rank heads for each question with a trained model.
    Select(SelectArgs),
    /// Pass@N of selection policies on a held-out split.
    Eval(EvalArgs),
    /// Accuracy gains of the best pruned head over the unpruned baseline.
    Stats(StatsArgs),
    /// Write a synthetic train/test fixture with known structure.
    Synth(SynthArgs),
    /// Check that both pruning implementations agree on a random block.
    AttnDemo(AttnDemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerArg {
    Sgd,
    Momentum,
    Adam,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Outcome CSV (question_id[,subject][,base],L{l}H{h},...).
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Question features JSONL ({"id": ..., "features": [...]}).
    #[arg(long)]
    pub features: PathBuf,
    /// Head catalog JSON; when given, the CSV header must match it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    #[arg(long, default_value = "model.sprint")]
    pub out: PathBuf,
    /// Embedding dimension p.
    #[arg(long, default_value_t = 16)]
    pub embed_dim: usize,
    /// Weight of the diversity regularizer.
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Head embeddings are projected onto the ball of this radius.
    #[arg(long, default_value_t = 10.0)]
    pub radius: f64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    /// Momentum coefficient for `--optimizer momentum`.
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    /// Record the full training loss every this many steps.
    #[arg(long, default_value_t = 50)]
    pub trace_every: usize,
    /// Standard deviation of the Gaussian initialization.
    #[arg(long, default_value_t = 0.1)]
    pub init_std: f64,
    /// Config file (TOML key = value, or an earlier run manifest).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl TrainArgs {
    pub fn train_config(&self) -> TrainConfig {
        let optimizer = match self.optimizer {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Momentum => OptimizerKind::SgdMomentum { beta: self.momentum },
            OptimizerArg::Adam => OptimizerKind::Adam {
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
        };
        TrainConfig {
            embed_dim: self.embed_dim,
            lambda: self.lambda,
            learning_rate: self.learning_rate,
            steps: self.steps,
            batch_size: self.batch_size,
            seed: self.seed,
            radius: self.radius,
            optimizer,
            trace_every: self.trace_every,
            init_std: self.init_std,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub top_n: usize,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Sprint,
    Random,
    Fixed,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawModeArg {
    PerQuestion,
    PerRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyRuleArg {
    MarginalCoverage,
    RawCount,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Trained model (needed for the sprint policy).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Held-out outcome CSV.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Held-out question features JSONL.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sprint,random,oracle")]
    pub policies: Vec<PolicyArg>,
    /// Number of evaluation seeds for the random policy.
    #[arg(long, default_value_t = 30)]
    pub seeds: u64,
    /// First evaluation seed; runs use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training outcome CSV used to build the greedy random-head pool.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_outcomes: Option<PathBuf>,
    /// Random-head pool size (default: all heads).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = GreedyRuleArg::MarginalCoverage)]
    pub greedy_rule: GreedyRuleArg,
    #[arg(long, value_enum, default_value_t = DrawModeArg::PerQuestion)]
    pub draw_mode: DrawModeArg,
    /// Head indices for the fixed policy, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<usize>,
    #[arg(long, default_value = "eval_report.json")]
    pub report: PathBuf,
    /// Plot-ready CSV: policy,N,mean,stddev.
    #[arg(long, default_value = "pass_at_n.csv")]
    pub plot: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupByArg {
    Subject,
    None,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    /// Outcome CSV with a `base` column.
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupByArg::Subject)]
    pub group_by: GroupByArg,
    /// Writes `<prefix>_summary.csv` and `<prefix>_violin.csv`.
    #[arg(long, default_value = "stats")]
    pub out_prefix: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    /// Total prunable heads LH.
    #[arg(long, default_value_t = 8)]
    pub heads: usize,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 0.95)]
    pub p_hi: f64,
    #[arg(long, default_value_t = 0.3)]
    pub p_lo: f64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3.0)]
    pub center_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value = "synth")]
    pub out_dir: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AttnDemoArgs {
    #[arg(long, default_value_t = 4)]
    pub heads: usize,
    #[arg(long, default_value_t = 8)]
    pub head_dim: usize,
    #[arg(long, default_value_t = 5)]
    pub seq_len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model width; must equal heads x head-dim (default).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// The clap command with repeated flags overriding earlier ones, which is
/// what lets command-line flags beat config-file values.
pub fn command() -> clap::Command {
    Cli::command().mut_subcommands(|sub| sub.args_override_self(true))
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

fn value_to_arg(value: &toml::Value) -> Option<String> {
    Some(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items.iter().filter_map(value_to_arg).collect::<Vec<_>>().join(","),
        _ => return None,
    })
}

fn json_to_arg(value: &serde_json::Value) -> Option<String> {
    Some(match value {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        serde_json::Value::Bool(b) => b.to_string(),
        serde_json::Value::Array(items) => items.iter().filter_map(json_to_arg).collect::<Vec<_>>().join(","),
        _ => return None,
    })
}

/// `(flag, value)` pairs from a TOML config or a JSON run manifest.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| SprintError::io(path, e))?;
    let location = path.display().to_string();
    let pairs = if path.extension().is_some_and(|e| e == "json") {
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| SprintError::parse(&location, e))?;
        manifest
            .options
            .iter()
            .filter_map(|(k, v)| json_to_arg(v).map(|v| (k.clone(), v)))
            .collect()
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| SprintError::parse(&location, e))?;
        table
            .iter()
            .filter_map(|(k, v)| value_to_arg(v).map(|v| (k.replace('_', "-"), v)))
            .collect()
    };
    Ok(pairs)
}

/// Inserts config-file flags right after the subcommand so that any flag
/// given on the command line comes later and wins.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let Some(sub) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(args);
    };
    let insert_at = sub + 2;
    let mut injected = Vec::new();
    for (key, value) in read_config(&path)? {
        if key == "config" {
            continue;
        }
        injected.push(OsString::from(format!("--{key}")));
        injected.push(OsString::from(value));
    }
    let mut out = args;
    out.splice(insert_at..insert_at, injected);
    Ok(out)
}

fn options_of<T: Serialize>(args: &T) -> serde_json::Map<String, serde_json::Value> {
    match serde_json::to_value(args).expect("args serialize") {
        serde_json::Value::Object(map) => map.into_iter().map(|(k, v)| (k.replace('_', "-"), v)).collect(),
        _ => unreachable!("args are structs"),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| SprintError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| SprintError::io(path, e))
}

fn io_err(e: std::io::Error) -> SprintError {
    SprintError::io("<stdout>", e)
}

/// Runs the CLI with the given arguments (program name first) and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let text = e.render().ansi().to_string();
            return match e.kind() {
                DisplayHelp | DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return 2;
        }
    };
    let result = match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Select(a) => cmd_select(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::AttnDemo(a) => cmd_attn_demo(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn check_catalog(expected: &HeadCatalog, found: &HeadCatalog, what: &str) -> Result<()> {
    if expected != found {
        return Err(SprintError::CatalogMismatch(format!(
            "{what} heads {:?} differ from {:?}",
            found.column_names(),
            expected.column_names()
        )));
    }
    Ok(())
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let (z, catalog) = load_outcomes(&args.outcomes)?;
    if let Some(path) = &args.catalog {
        check_catalog(&HeadCatalog::load(path)?, &catalog, "outcome CSV")?;
    }
    let features = QuestionFeatures::load(&args.features)?.align_to(&z)?;
    let cfg = args.train_config();
    let model = train(&z, &features, &catalog, &cfg)?;
    save_model(&model, &args.out)?;

    let mut inputs = vec![args.outcomes.as_path(), args.features.as_path()];
    inputs.extend(args.catalog.as_deref());
    let manifest = RunManifest::new(
        "train",
        options_of(args),
        &inputs,
        &[&args.out],
        Some(cfg.seed),
        start.elapsed(),
    )?;
    manifest.save(RunManifest::path_for(&args.out))?;

    let first = model.loss_trace.first().expect("trace has the initial point");
    let last = model.loss_trace.last().expect("trace has the initial point");
    writeln!(
        out,
        "trained {} steps on {} questions ({} excluded, no solving head)\n\
         loss {:.6} -> {:.6} (alignment {:.6} -> {:.6})\nwrote {}",
        cfg.steps,
        z.n() - model.excluded_questions,
        model.excluded_questions,
        first.loss,
        last.loss,
        first.alignment,
        last.alignment,
        args.out.display()
    )
    .map_err(io_err)
}

#[derive(Serialize)]
struct SelectLine<'a> {
    id: &'a str,
    clamped: bool,
    ranked: Vec<RankedHead>,
}

pub fn cmd_select(args: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    if args.top_n == 0 {
        return Err(SprintError::Argument("--top-n must be >= 1".into()));
    }
    let model = load_model(&args.model)?;
    let features = QuestionFeatures::load(&args.features)?;
    let mut lines = Vec::with_capacity(features.n());
    for (i, id) in features.ids().iter().enumerate() {
        let mut ranked = select(&model, features.row(i))?.ranked;
        let clamped = args.top_n > ranked.len();
        ranked.truncate(args.top_n);
        lines.push(SelectLine { id, clamped, ranked });
    }
    let json = serde_json::to_string_pretty(&lines).expect("selection serializes") + "\n";
    match &args.out {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            let manifest = RunManifest::new(
                "select",
                options_of(args),
                &[&args.model, &args.features],
                &[path],
                None,
                start.elapsed(),
            )?;
            manifest.save(RunManifest::path_for(path))?;
            writeln!(out, "wrote {}", path.display()).map_err(io_err)
        }
        None => out.write_all(json.as_bytes()).map_err(io_err),
    }
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let (z, catalog) = load_outcomes(&args.outcomes)?;
    let features = QuestionFeatures::load(&args.features)?.align_to(&z)?;
    let mut inputs = vec![args.outcomes.clone(), args.features.clone()];

    let model = match &args.model {
        Some(path) => {
            let m = load_model(path)?;
            check_catalog(&catalog, &m.catalog, "model")?;
            inputs.push(path.clone());
            Some(m)
        }
        None => None,
    };
    let pool = match &args.train_outcomes {
        Some(path) => {
            let (z_train, train_catalog) = load_outcomes(path)?;
            check_catalog(&catalog, &train_catalog, "training outcomes")?;
            inputs.push(path.clone());
            let rule = match args.greedy_rule {
                GreedyRuleArg::MarginalCoverage => GreedyRule::MarginalCoverage,
                GreedyRuleArg::RawCount => GreedyRule::RawCount,
            };
            greedy_head_ranking(&z_train, args.pool_size.unwrap_or(catalog.len()), rule)?
        }
        None if args.pool_size.is_some() => {
            return Err(SprintError::Argument(
                "--pool-size needs --train-outcomes to rank heads greedily".into(),
            ))
        }
        None => (0..catalog.len()).collect(),
    };
    let mode = match args.draw_mode {
        DrawModeArg::PerQuestion => DrawMode::PerQuestion,
        DrawModeArg::PerRun => DrawMode::PerRun,
    };

    let mut policies = Vec::new();
    for p in &args.policies {
        policies.push(match p {
            PolicyArg::Sprint => Policy::Sprint(
                model
                    .as_ref()
                    .ok_or_else(|| SprintError::Argument("the sprint policy needs --model".into()))?,
            ),
            PolicyArg::Random => Policy::RandomHeads {
                pool: pool.clone(),
                mode,
            },
            PolicyArg::Fixed => {
                if args.fixed.is_empty() {
                    return Err(SprintError::Argument("the fixed policy needs --fixed j1,j2,...".into()));
                }
                Policy::Fixed(args.fixed.clone())
            }
            PolicyArg::Oracle => Policy::Oracle,
        });
    }
    let seeds: Vec<u64> = (0..args.seeds).map(|k| args.seed.wrapping_add(k)).collect();
    let report = evaluate(&policies, &z, &features, args.n_max, &seeds)?;
    write_file(&args.report, report.to_json().as_bytes())?;
    write_file(&args.plot, report.plot_csv().as_bytes())?;

    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let manifest = RunManifest::new(
        "eval",
        options_of(args),
        &input_refs,
        &[&args.report, &args.plot],
        Some(args.seed),
        start.elapsed(),
    )?;
    manifest.save(RunManifest::path_for(&args.report))?;
    write!(out, "{}", report.table()).map_err(io_err)
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    prefix.with_file_name(name)
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let (z, catalog) = load_outcomes(&args.outcomes)?;
    let group_by = match args.group_by {
        GroupByArg::Subject => GroupBy::Subject,
        GroupByArg::None => GroupBy::None,
    };
    let report = gain_stats(&z, group_by)?;
    let summary_path = prefixed(&args.out_prefix, "_summary.csv");
    let violin_path = prefixed(&args.out_prefix, "_violin.csv");
    let summary = report.summary_csv(&catalog);
    write_file(&summary_path, summary.as_bytes())?;
    write_file(&violin_path, report.violin_csv(&catalog).as_bytes())?;
    let manifest = RunManifest::new(
        "stats",
        options_of(args),
        &[&args.outcomes],
        &[&summary_path, &violin_path],
        None,
        start.elapsed(),
    )?;
    manifest.save(RunManifest::path_for(&summary_path))?;
    write!(out, "{summary}").map_err(io_err)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let start = Instant::now();
    let spec = SynthSpec {
        clusters: args.clusters,
        heads: args.heads,
        layers: args.layers,
        feature_dim: args.feature_dim,
        p_hi: args.p_hi,
        p_lo: args.p_lo,
        n: args.n,
        seed: args.seed,
        center_scale: args.center_scale,
        noise: args.noise,
    };
    let data = generate_synthetic(&spec)?;
    let paths = data.write_fixture(&args.out_dir, args.train_fraction)?;
    let outputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    let manifest = RunManifest::new("synth", options_of(args), &[], &outputs, Some(args.seed), start.elapsed())?;
    manifest.save(args.out_dir.join("fixture.manifest.json"))?;
    for p in &paths {
        writeln!(out, "wrote {}", p.display()).map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_attn_demo(args: &AttnDemoArgs, out: &mut dyn Write) -> Result<()> {
    let model_dim = args.model_dim.unwrap_or(args.heads * args.head_dim);
    let cfg = AttentionConfig::new(args.heads, args.head_dim, model_dim, args.seq_len)?;
    let report = attn_demo(&cfg, args.seed)?;
    write!(out, "{}", report.to_json_lines()).map_err(io_err)
}
