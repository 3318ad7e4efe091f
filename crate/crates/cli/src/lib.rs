//! Command-line front end for the boundary-tag SRL pipeline.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 usage error, 2 data or validation error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use boundsrl::conll::{extract_instances, Corpus, FormatConfig};
use boundsrl::decoder::predict_corpus;
use boundsrl::embedding::{load_pretrained, ExternalVectors, PretrainedVectors};
use boundsrl::gradcheck::toy_gradient_check;
use boundsrl::numerics::checkpoint::write_atomic;
use boundsrl::synth::{generate, GenConfig};
use boundsrl::train::{train, Dataset, EpochRecord};
use boundsrl::{
    augment_labels, compute_label_stats, decoder, evaluate, serialize_corpus, Error, LossWindow, SrlModel,
    StatsScope, TrainConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Gradient check threshold on the maximum relative error.
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "boundsrl", version, about = "Dependency SRL with argument boundary tags")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic corpus
    GenData(GenArgs),
    /// Insert <BOA>/<EOA> tags around every predicate's arguments
    Augment(AugmentArgs),
    /// Argument / non-argument label proportions
    Stats(StatsArgs),
    /// Train a model and write a checkpoint plus per-epoch history
    Train(TrainArgs),
    /// Label a corpus with a trained checkpoint
    Predict(PredictArgs),
    /// Labeled argument precision, recall and F1 of predictions against gold
    Eval(EvalArgs),
    /// Finite-difference check of the full model's gradients
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct FormatArg {
    /// Column layout: conll2009, simple, or a key=index mapping file
    #[arg(long, default_value = "conll2009")]
    pub format: String,
}

impl FormatArg {
    fn load(&self) -> boundsrl::Result<FormatConfig> {
        FormatConfig::from_name_or_file(&self.format)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub sentences: usize,
    #[arg(long, default_value_t = 6)]
    pub min_len: usize,
    #[arg(long, default_value_t = 16)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1)]
    pub min_predicates: usize,
    #[arg(long, default_value_t = 2)]
    pub max_predicates: usize,
    #[arg(long, default_value_t = 1)]
    pub min_args: usize,
    #[arg(long, default_value_t = 3)]
    pub max_args: usize,
    /// Maximum predicate-argument distance
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    #[arg(long, default_value_t = 12)]
    pub vocab_size: usize,
    /// Comma-separated argument labels
    #[arg(long, default_value = "A0,A1,A2,AM-TMP", value_delimiter = ',')]
    pub labels: Vec<String>,
    #[arg(long, default_value_t = 0.8)]
    pub position_bias: f64,
    #[arg(long, default_value_t = 0.3)]
    pub distractor_rate: f64,
    #[command(flatten)]
    pub format: FormatArg,
}

impl GenArgs {
    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            sentences: self.sentences,
            min_len: self.min_len,
            max_len: self.max_len,
            min_predicates: self.min_predicates,
            max_predicates: self.max_predicates,
            min_args: self.min_args,
            max_args: self.max_args,
            window: self.window,
            vocab_size: self.vocab_size,
            labels: self.labels.clone(),
            position_bias: self.position_bias,
            distractor_rate: self.distractor_rate,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// full_sequence or window_only
    #[arg(long, default_value = "full_sequence")]
    pub scope: StatsScope,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Base configuration: desk, toy or full
    #[arg(long, default_value = "desk")]
    pub preset: String,
    /// key=value configuration file applied over the preset
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Single key=value override, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub no_aux_tags: bool,
    #[arg(long)]
    pub no_self_attention: bool,
    /// full_sequence or window_only
    #[arg(long)]
    pub loss_window: Option<LossWindow>,
}

impl ModelArgs {
    /// Preset, then file, then `--set`, then dedicated flags.
    pub fn resolve(&self) -> boundsrl::Result<TrainConfig> {
        let mut config = TrainConfig::preset(&self.preset)?;
        if let Some(path) = &self.config {
            config.apply_text(&std::fs::read_to_string(path)?)?;
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got {:?}", kv)))?;
            config.set(k, v)?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        if self.no_aux_tags {
            config.use_aux_tags = false;
        }
        if self.no_self_attention {
            config.use_attention = false;
        }
        if let Some(w) = self.loss_window {
            config.loss_window = w;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Output checkpoint; the configuration sidecar goes to <checkpoint>.json
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Per-epoch history; defaults to <checkpoint>.history.tsv
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Word vectors in text format (word v1 v2 ...)
    #[arg(long)]
    pub pretrained: Option<PathBuf>,
    /// Per-token external vectors for the training corpus
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Per-token external vectors for the dev corpus
    #[arg(long)]
    pub dev_external: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold corpus
    #[arg(long)]
    pub data: PathBuf,
    /// Predicted corpus
    #[arg(long)]
    pub pred: PathBuf,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value = "toy")]
    pub preset: String,
    /// First seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds to check
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
}

pub fn history_path(checkpoint: &Path) -> PathBuf {
    let mut p = checkpoint.as_os_str().to_owned();
    p.push(".history.tsv");
    PathBuf::from(p)
}

pub fn history_tsv(history: &[EpochRecord], best_epoch: usize) -> String {
    let mut out = String::from("epoch\ttrain_loss\tdev_precision\tdev_recall\tdev_f1\tbest\n");
    for r in history {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
            r.epoch,
            r.train_loss,
            r.dev.precision,
            r.dev.recall,
            r.dev.f1,
            u8::from(r.epoch == best_epoch)
        ));
    }
    out
}

fn read_corpus(path: &Path, format: &FormatArg) -> boundsrl::Result<Corpus> {
    Corpus::from_path(path, &format.load()?)
}

fn read_external(path: Option<&PathBuf>) -> boundsrl::Result<Option<ExternalVectors>> {
    path.map(|p| ExternalVectors::read(p)).transpose()
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> boundsrl::Result<()> {
    let config = args.gen_config();
    let corpus = generate(&config)?;
    write_atomic(&args.out, serialize_corpus(&corpus, &args.format.load()?).as_bytes())?;
    writeln!(out, "sentences={}", corpus.len())?;
    writeln!(out, "predicates={}", corpus.predicate_count())?;
    if let Some(f) = config.expected_arg_fraction() {
        writeln!(out, "expected_arg_fraction={:.6}", f)?;
    }
    Ok(())
}

fn cmd_augment(args: &AugmentArgs, out: &mut dyn Write) -> boundsrl::Result<()> {
    let format = args.format.load()?;
    let mut corpus = Corpus::from_path(&args.data, &format)?;
    let instances = extract_instances(&corpus);
    for inst in &instances {
        let aug = augment_labels(inst)?;
        corpus.sentences[inst.sentence_id].set_frame_labels(inst.frame, &aug.gold_labels);
    }
    write_atomic(&args.out, serialize_corpus(&corpus, &format).as_bytes())?;
    writeln!(out, "instances={}", instances.len())?;
    Ok(())
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> boundsrl::Result<()> {
    let corpus = read_corpus(&args.data, &args.format)?;
    let mut instances = extract_instances(&corpus);
    if args.scope == StatsScope::WindowOnly {
        // Counting follows the tagged span, so tags must be present.
        instances = instances
            .iter()
            .map(|i| if i.gold_labels.iter().any(|l| boundsrl::tags::is_boundary(l)) { Ok(i.clone()) } else { augment_labels(i) })
            .collect::<boundsrl::Result<_>>()?;
    }
    let stats = compute_label_stats(&instances, args.scope)?;
    write!(out, "{}", stats.key_values())?;
    Ok(())
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> boundsrl::Result<()> {
    let config = args.model.resolve()?;
    let format = args.format.load()?;
    let train_data = Dataset {
        corpus: Corpus::from_path(&args.data, &format)?,
        external: read_external(args.external.as_ref())?,
    };
    let dev_data = match &args.dev {
        Some(p) => Some(Dataset {
            corpus: Corpus::from_path(p, &format)?,
            external: read_external(args.dev_external.as_ref())?,
        }),
        None => None,
    };
    let pretrained: Option<PretrainedVectors> = match &args.pretrained {
        Some(p) => Some(load_pretrained(BufReader::new(File::open(p)?), config.dims.pretrained)?),
        None => None,
    };
    log::info!(
        "training on {} instances, {} epochs, seed {}",
        extract_instances(&train_data.corpus).len(),
        config.max_epochs,
        config.seed
    );
    let outcome = train(&train_data, dev_data.as_ref(), &config, pretrained.as_ref(), &mut |_| {})?;
    outcome.model.save(&args.checkpoint)?;
    let history = args.history.clone().unwrap_or_else(|| history_path(&args.checkpoint));
    write_atomic(&history, history_tsv(&outcome.history, outcome.best_epoch).as_bytes())?;
    writeln!(out, "best_epoch={}", outcome.best_epoch)?;
    if let Some(best) = outcome.history.get(outcome.best_epoch.wrapping_sub(1)) {
        writeln!(out, "train_loss={:.6}", best.train_loss)?;
        write!(out, "{}", prefixed("dev_", &best.dev.key_values()))?;
    }
    Ok(())
}

fn prefixed(prefix: &str, kv: &str) -> String {
    kv.lines().map(|l| format!("{}{}\n", prefix, l)).collect()
}

fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> boundsrl::Result<()> {
    let model = SrlModel::load(&args.checkpoint)?;
    let format = args.format.load()?;
    let corpus = Corpus::from_path(&args.data, &format)?;
    let external = read_external(args.external.as_ref())?;
    let predicted = predict_corpus(&model, &corpus, external.as_ref())?;
    write_atomic(&args.out, serialize_corpus(&predicted, &format).as_bytes())?;
    writeln!(out, "instances={}", corpus.predicate_count())?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> boundsrl::Result<()> {
    let gold = read_corpus(&args.data, &args.format)?;
    let pred = read_corpus(&args.pred, &args.format)?;
    let report = evaluate(&decoder::gold_argument_sets(&pred), &decoder::gold_argument_sets(&gold))?;
    write!(out, "{}", report.key_values())?;
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs, out: &mut dyn Write) -> boundsrl::Result<bool> {
    if args.preset != "toy" {
        return Err(Error::Config(format!(
            "gradcheck only supports the toy preset, got {:?}",
            args.preset
        )));
    }
    let mut worst: f64 = 0.0;
    for seed in args.seed..args.seed + args.seeds.max(1) {
        let report = toy_gradient_check(seed)?;
        for p in &report.params {
            writeln!(out, "seed={} param={} elements={} max_rel_err={:.3e}", seed, p.name, p.elements, p.max_rel_err)?;
        }
        worst = worst.max(report.max_rel_err());
    }
    writeln!(out, "max_rel_err={:.3e}", worst)?;
    let ok = worst < GRADCHECK_TOL;
    writeln!(out, "status={}", if ok { "pass" } else { "fail" })?;
    Ok(ok)
}

/// Parses `argv` (including the program name) and runs the command with
/// results written to `out`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::GenData(a) => cmd_gen(a, out),
        Command::Augment(a) => cmd_augment(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Gradcheck(a) => match cmd_gradcheck(a, out) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: gradient check exceeded {:e}", GRADCHECK_TOL);
                return EXIT_DATA;
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e);
            EXIT_DATA
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = run_with(argv, &mut lock);
    let _ = lock.flush();
    code
}
