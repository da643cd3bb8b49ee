//! Command-line front end.
//!
//! Exit status: 0 success, 1 usage error, 2 data error (unreadable or
//! invalid input, incomplete report), 3 internal error.

use std::fmt::Display;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use varspace::corpus::{load_corpus, shuffle};
use varspace::overlap::{compare_pair, write_records_csv, Embeddings, OverlapError, PairId, RunId};
use varspace::pipeline::{
    emit_report, generate_synthetic_dialects, rerun_statistics, run_experiment, ErrorKind,
    ExperimentConfig, Outcome, PipelineError, SynthConfig,
};
use varspace::sgns::{load_vectors, train, TrainConfig, TrainError, VectorTable};

#[derive(Parser)]
#[command(
    name = "varspace",
    version,
    about = "Compare embedding spaces trained on different corpora against retraining noise"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole experiment: shuffle, train, overlap, statistics, report.
    Run(ExperimentArgs),
    /// Recompute statistics and the report from an existing output directory.
    Stats(ExperimentArgs),
    /// Render report.md for an output directory.
    Report(ReportArgs),
    /// Write a seeded copy of a corpus with its lines shuffled.
    Shuffle(ShuffleArgs),
    /// Train one space and write it in text vector format.
    Train(TrainArgs),
    /// Neighbor overlap of a word list between two vector files.
    Overlap(OverlapArgs),
    /// Generate a synthetic two-dialect fixture with its experiment config.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, short, env = "VARSPACE_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    runs_per_condition: Option<usize>,
    /// Comma-separated neighborhood sizes.
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    /// Concurrent training runs.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    train: TrainOverrides,
}

#[derive(Args, Default)]
struct TrainOverrides {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    bucket_count: Option<usize>,
    /// Initialization and sampling seed, shared by all runs.
    #[arg(long)]
    train_seed: Option<u64>,
    /// Hogwild training threads per run (not bit-reproducible).
    #[arg(long)]
    threads: Option<usize>,
}

impl TrainOverrides {
    fn apply(&self, t: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { t.$target = v; })*
            };
        }
        set!(dim => dim, negatives => negatives, epochs => epochs, learning_rate => learning_rate,
            window => window, min_count => min_count, bucket_count => bucket_count,
            train_seed => seed);
        if let Some(n) = self.threads {
            t.threads = n;
            t.deterministic = n <= 1;
        }
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory to summarize.
    #[arg(env = "VARSPACE_OUTPUT")]
    dir: PathBuf,
}

#[derive(Args)]
struct ShuffleArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    corpus: PathBuf,
    /// Vector file to write.
    output: PathBuf,
    /// Take training settings from the `[train]` table of an experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shuffle the corpus with this seed before training.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// Words to compose from subwords when outside the vocabulary; written to
    /// `<output stem>.query.vec`.
    #[arg(long)]
    words: Option<PathBuf>,
    #[command(flatten)]
    train: TrainOverrides,
}

#[derive(Args)]
struct OverlapArgs {
    a: PathBuf,
    b: PathBuf,
    /// Word list: one word per line, or a TSV whose first column is `word`.
    #[arg(long)]
    words: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 25, 50])]
    k: Vec<usize>,
    /// Extra vectors for query words missing from `a`.
    #[arg(long)]
    a_query: Option<PathBuf>,
    #[arg(long)]
    b_query: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for the corpora, annotations and experiment.toml.
    dir: PathBuf,
    #[arg(long, default_value_t = 2000)]
    vocab_size: usize,
    #[arg(long, default_value_t = 20)]
    classes: usize,
    #[arg(long, default_value_t = 1_000_000)]
    tokens: usize,
    #[arg(long, default_value_t = 0.2)]
    divergence_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl Display) -> Failure {
    Failure {
        code: 1,
        message: e.to_string(),
    }
}

fn data(e: impl Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

fn internal(e: impl Display) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e.kind() {
            ErrorKind::Usage => usage(e),
            ErrorKind::Data => data(e),
            ErrorKind::Internal => internal(e),
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) => usage(e),
            TrainError::EmptyCorpus | TrainError::EmptyVocab { .. } => data(e),
            TrainError::Divergence { .. } => internal(e),
        }
    }
}

fn load_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(o) = &args.output {
        config.output = o.clone();
    }
    if let Some(s) = args.master_seed {
        config.master_seed = s;
    }
    if let Some(r) = args.runs_per_condition {
        config.runs_per_condition = r;
    }
    if let Some(k) = &args.k_values {
        config.k_values = k.clone();
    }
    if let Some(j) = args.jobs {
        config.jobs = j;
    }
    args.train.apply(&mut config.train);
    Ok(config)
}

fn finish(outcome: Outcome) -> Result<(), Failure> {
    println!(
        "trained {} run(s), reused {}; report: {}",
        outcome.trained,
        outcome.reused,
        outcome.output.join("report.md").display()
    );
    if outcome.report.is_complete() {
        Ok(())
    } else {
        Err(data(format!(
            "run is incomplete: {}",
            outcome.report.problems.join("; ")
        )))
    }
}

fn report(args: &ReportArgs) -> Result<(), Failure> {
    match emit_report(&args.dir) {
        Ok(r) => {
            print!("{}", r.text);
            if r.is_complete() {
                Ok(())
            } else {
                Err(data(format!(
                    "{} problem(s) in {}",
                    r.problems.len(),
                    args.dir.display()
                )))
            }
        }
        Err(e) => Err(data(e)),
    }
}

fn shuffle_cmd(args: &ShuffleArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&args.input, "corpus").map_err(data)?;
    let shuffled = shuffle(&corpus, args.seed).map_err(data)?;
    let write = || -> io::Result<()> {
        let mut out = BufWriter::new(fs::File::create(&args.output)?);
        shuffled.write_text(&mut out)?;
        out.flush()
    };
    write().map_err(|e| data(format!("{}: {e}", args.output.display())))
}

fn read_words(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let mut words = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let first = line.split('\t').next().unwrap_or("").trim();
        if first.is_empty() || first.starts_with('#') || (i == 0 && first == "word") {
            continue;
        }
        words.push(first.to_string());
    }
    Ok(words)
}

fn train_cmd(args: &TrainArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?.train,
        None => TrainConfig::default(),
    };
    args.train.apply(&mut config);
    let mut corpus = load_corpus(&args.corpus, "corpus").map_err(data)?;
    if let Some(seed) = args.shuffle_seed {
        corpus = shuffle(&corpus, seed).map_err(data)?;
    }
    let space = train(&corpus, &config)?;
    space.save_vectors(&args.output).map_err(data)?;
    if let Some(path) = &args.words {
        let mut query = VectorTable::new(space.dim());
        for w in read_words(path)? {
            if space.vocab().id(&w).is_none() {
                query
                    .push(w.as_str(), &space.word_vector(&w))
                    .map_err(data)?;
            }
        }
        query
            .save(args.output.with_extension("query.vec"))
            .map_err(data)?;
    }
    log::info!("{} words, dim {}", space.vocab().len(), space.dim());
    Ok(())
}

fn overlap_cmd(args: &OverlapArgs) -> Result<(), Failure> {
    let open = |vec: &Path, query: &Option<PathBuf>| -> Result<Embeddings, Failure> {
        let table = load_vectors(vec).map_err(data)?;
        Ok(match query {
            Some(q) => Embeddings::with_extra(table, load_vectors(q).map_err(data)?),
            None => Embeddings::new(table),
        })
    };
    let a = open(&args.a, &args.a_query)?;
    let b = open(&args.b, &args.b_query)?;
    let words = read_words(&args.words)?;
    let refs: Vec<&str> = words.iter().map(String::as_str).collect();
    let pair = PairId {
        a: RunId::new("a", 0),
        b: RunId::new("b", 0),
    };
    let (records, skipped) = compare_pair(&a, &b, &pair, &refs, &args.k).map_err(|e| match e {
        OverlapError::InvalidK => usage(e),
        e => data(e),
    })?;
    for s in &skipped {
        log::warn!("skipped {}: {}", s.word, s.reason);
    }
    let out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    write_records_csv(&records, out).map_err(data)
}

fn synth_cmd(args: &SynthArgs) -> Result<(), Failure> {
    let dialects = generate_synthetic_dialects(&SynthConfig {
        vocab_size: args.vocab_size,
        classes: args.classes,
        tokens: args.tokens,
        divergence_rate: args.divergence_rate,
        seed: args.seed,
        ..Default::default()
    })
    .map_err(usage)?;
    dialects
        .write_fixture(&args.dir)
        .map_err(|e| data(format!("{}: {e}", args.dir.display())))?;
    println!("{}", args.dir.join("experiment.toml").display());
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Run(args) => finish(run_experiment(&load_config(args)?)?),
        Command::Stats(args) => finish(rerun_statistics(&load_config(args)?)?),
        Command::Report(args) => report(args),
        Command::Shuffle(args) => shuffle_cmd(args),
        Command::Train(args) => train_cmd(args),
        Command::Overlap(args) => overlap_cmd(args),
        Command::Synth(args) => synth_cmd(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
