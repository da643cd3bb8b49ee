//! End-to-end experiments: shuffle and train every run of every condition,
//! measure overlap over the pair schedule, run the statistics and write a
//! report. Every stage writes below one output directory whose
//! `manifest.json` records seeds, hashes, timings and all files produced.
//!
//! Shuffle seeds are `master_seed + run`; the training seed is the same for
//! every run, so runs differ only in line order. A run whose manifest entry
//! carries the same config hash and whose vector files exist is not
//! retrained.

pub mod analysis;
mod config;
pub mod manifest;
pub mod report;
pub mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use config::{AnalysisConfig, ConditionSpec, ExperimentConfig, LexiconSpec};
pub use manifest::{Manifest, PairEntry, RunEntry, Status};
pub use report::{emit_report, Report, ReportError};
pub use synth::{generate_synthetic_dialects, SynthConfig, SynthError, SyntheticDialects};

use crate::corpus::{count_frequencies, load_corpus, shuffle, Corpus, FrequencyTable};
use crate::lexicon::{
    join, load_domains, load_pos, load_ratings, summarize, write_summary_tsv, AnnotatedLexicon,
};
use crate::overlap::{
    compare_conditions, read_records_csv, write_records_csv, Embeddings, OverlapRecord, PairId,
    RunId, Skip,
};
use crate::sgns::{load_vectors, train, TrainConfig, VectorTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Corpus,
    Lexicon,
    Train,
    Overlap,
    Stats,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Setup => "setup",
            Stage::Corpus => "corpus",
            Stage::Lexicon => "lexicon",
            Stage::Train => "train",
            Stage::Overlap => "overlap",
            Stage::Stats => "stats",
            Stage::Report => "report",
        })
    }
}

/// Broad failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} stage failed: {message}")]
    Stage {
        stage: Stage,
        kind: ErrorKind,
        message: String,
    },
}

impl PipelineError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PipelineError::Config(_) => ErrorKind::Usage,
            PipelineError::Stage { kind, .. } => *kind,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Config(_) => None,
            PipelineError::Stage { stage, .. } => Some(*stage),
        }
    }
}

fn fail(stage: Stage, kind: ErrorKind) -> impl Fn(String) -> PipelineError {
    move |message| PipelineError::Stage {
        stage,
        kind,
        message,
    }
}

fn data<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| fail(stage, ErrorKind::Data)(e.to_string())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// What a finished experiment produced.
#[derive(Debug)]
pub struct Outcome {
    pub output: PathBuf,
    pub manifest: Manifest,
    pub report: Report,
    pub trained: usize,
    pub reused: usize,
}

pub fn vector_path(condition: &str, run: usize) -> String {
    format!("vectors/{condition}/run_{run}.vec")
}

pub fn query_vector_path(condition: &str, run: usize) -> String {
    format!("vectors/{condition}/run_{run}.query.vec")
}

pub fn overlap_path(pair: &PairId, k: usize) -> String {
    format!("overlap/k{k}/{}.csv", pair.slug())
}

fn run_hash(
    train: &TrainConfig,
    shuffle_seed: u64,
    corpus_digest: &str,
    words_digest: &str,
) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(train).expect("config serializes"));
    h.update(format!(
        "\nshuffle_seed={shuffle_seed}\ncorpus={corpus_digest}\nwords={words_digest}\n"
    ));
    hex(&h.finalize())
}

fn corpus_digest(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    for line in corpus.lines() {
        h.update(line.join(" "));
        h.update("\n");
    }
    hex(&h.finalize())
}

fn write_with<F>(path: &Path, body: F) -> io::Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    body(&mut out)?;
    out.flush()
}

fn remove_dir(path: &Path) -> io::Result<()> {
    match fs::remove_dir_all(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

struct Inputs {
    corpora: Vec<Corpus>,
    lexicon: AnnotatedLexicon,
}

fn load_inputs(config: &ExperimentConfig, dir: &Path) -> Result<Inputs, PipelineError> {
    let mut corpora = Vec::new();
    for c in &config.conditions {
        let corpus = load_corpus(&c.corpus, &c.label).map_err(data(Stage::Corpus))?;
        if corpus.is_empty() {
            return Err(fail(Stage::Corpus, ErrorKind::Data)(format!(
                "{}: corpus is empty",
                c.corpus.display()
            )));
        }
        log::info!(
            "{}: {} lines, {} tokens",
            c.label,
            corpus.len(),
            corpus.token_count()
        );
        corpora.push(corpus);
    }
    let all = Corpus::concat("all", &corpora.iter().collect::<Vec<_>>());
    let freq: FrequencyTable = count_frequencies(&all).map_err(data(Stage::Corpus))?;
    write_with(&dir.join("frequencies.tsv"), |w| freq.write_tsv(w)).map_err(data(Stage::Corpus))?;

    let spec = &config.lexicon;
    let conc = load_ratings(&spec.concreteness).map_err(data(Stage::Lexicon))?;
    let aoa = spec
        .aoa
        .as_ref()
        .map(load_ratings)
        .transpose()
        .map_err(data(Stage::Lexicon))?;
    let pos = load_pos(&spec.pos).map_err(data(Stage::Lexicon))?;
    let domains = load_domains(&spec.domain).map_err(data(Stage::Lexicon))?;
    let lexicon =
        join(&conc, aoa.as_ref(), &pos, &domains, Some(&freq)).map_err(data(Stage::Lexicon))?;
    log::info!("lexicon: {} entries", lexicon.len());
    lexicon
        .save_tsv(dir.join("lexicon.tsv"))
        .map_err(data(Stage::Lexicon))?;
    let summary = summarize(&lexicon).map_err(data(Stage::Lexicon))?;
    write_with(&dir.join("lexicon_summary.tsv"), |w| {
        write_summary_tsv(&summary, w)
    })
    .map_err(data(Stage::Lexicon))?;
    Ok(Inputs { corpora, lexicon })
}

struct Job<'a> {
    corpus: &'a Corpus,
    condition: String,
    run: usize,
    shuffle_seed: u64,
    hash: String,
}

fn train_one(job: &Job, config: &ExperimentConfig, words: &[&str], dir: &Path) -> RunEntry {
    let start = Instant::now();
    let mut entry = RunEntry {
        condition: job.condition.clone(),
        run: job.run,
        shuffle_seed: job.shuffle_seed,
        train_seed: config.train.seed,
        config_hash: job.hash.clone(),
        vectors: vector_path(&job.condition, job.run),
        query_vectors: query_vector_path(&job.condition, job.run),
        tokens: job.corpus.token_count(),
        vocab_size: 0,
        wall_time_secs: 0.0,
        status: Status::Failed,
        error: None,
    };
    let result = (|| -> Result<usize, String> {
        let shuffled = shuffle(job.corpus, job.shuffle_seed).map_err(|e| e.to_string())?;
        let space = train(&shuffled, &config.train).map_err(|e| e.to_string())?;
        let vec_path = dir.join(&entry.vectors);
        fs::create_dir_all(vec_path.parent().expect("has parent")).map_err(|e| e.to_string())?;
        space.save_vectors(&vec_path).map_err(|e| e.to_string())?;
        let mut query = VectorTable::new(space.dim());
        for w in words.iter().filter(|w| space.vocab().id(w).is_none()) {
            query
                .push(*w, &space.word_vector(w))
                .map_err(|e| e.to_string())?;
        }
        query
            .save(dir.join(&entry.query_vectors))
            .map_err(|e| e.to_string())?;
        Ok(space.vocab().len())
    })();
    entry.wall_time_secs = start.elapsed().as_secs_f64();
    match result {
        Ok(n) => {
            entry.vocab_size = n;
            entry.status = Status::Complete;
            log::info!(
                "trained {}#{} ({} words) in {:.1}s",
                job.condition,
                job.run,
                n,
                entry.wall_time_secs
            );
        }
        Err(e) => {
            log::error!("training {}#{} failed: {e}", job.condition, job.run);
            entry.error = Some(e);
        }
    }
    entry
}

fn train_stage(
    config: &ExperimentConfig,
    inputs: &Inputs,
    dir: &Path,
    previous: Option<&Manifest>,
    manifest: &mut Manifest,
) -> Result<(usize, usize), PipelineError> {
    let words: Vec<&str> = inputs.lexicon.words().collect();
    let words_digest = {
        let mut h = Sha256::new();
        for w in &words {
            h.update(w);
            h.update("\n");
        }
        hex(&h.finalize())
    };
    let mut jobs = Vec::new();
    let mut reused = Vec::new();
    for (spec, corpus) in config.conditions.iter().zip(&inputs.corpora) {
        let digest = corpus_digest(corpus);
        for run in 0..config.runs_per_condition {
            let shuffle_seed = config.master_seed.wrapping_add(run as u64);
            let hash = run_hash(&config.train, shuffle_seed, &digest, &words_digest);
            let done = previous.and_then(|m| m.run(&spec.label, run)).filter(|e| {
                e.status == Status::Complete
                    && e.config_hash == hash
                    && dir.join(&e.vectors).is_file()
                    && dir.join(&e.query_vectors).is_file()
            });
            match done {
                Some(e) => {
                    log::info!("reusing {}#{run}", spec.label);
                    reused.push(e.clone());
                }
                None => jobs.push(Job {
                    corpus,
                    condition: spec.label.clone(),
                    run,
                    shuffle_seed,
                    hash,
                }),
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| fail(Stage::Train, ErrorKind::Internal)(e.to_string()))?;
    let trained: Vec<RunEntry> = pool.install(|| {
        jobs.par_iter()
            .map(|j| train_one(j, config, &words, dir))
            .collect()
    });
    let (n_trained, n_reused) = (trained.len(), reused.len());
    manifest.runs = reused.into_iter().chain(trained).collect();
    manifest.runs.sort_by(|a, b| {
        (
            config.labels().iter().position(|l| *l == a.condition),
            a.run,
        )
            .cmp(&(
                config.labels().iter().position(|l| *l == b.condition),
                b.run,
            ))
    });
    if let Some(bad) = manifest.runs.iter().find(|r| r.status != Status::Complete) {
        return Err(fail(Stage::Train, ErrorKind::Internal)(format!(
            "{}#{}: {}",
            bad.condition,
            bad.run,
            bad.error.as_deref().unwrap_or("failed")
        )));
    }
    Ok((n_trained, n_reused))
}

/// Loads the saved vectors of every run.
pub fn load_spaces(
    dir: &Path,
    runs: &[RunEntry],
) -> Result<BTreeMap<RunId, Embeddings>, PipelineError> {
    runs.par_iter()
        .map(|r| {
            let table = load_vectors(dir.join(&r.vectors)).map_err(data(Stage::Overlap))?;
            let extra = load_vectors(dir.join(&r.query_vectors)).map_err(data(Stage::Overlap))?;
            Ok((
                RunId::new(&r.condition, r.run),
                Embeddings::with_extra(table, extra),
            ))
        })
        .collect()
}

fn write_skipped(path: &Path, skipped: &[Skip]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["word", "cond_a", "run_a", "cond_b", "run_b", "reason"])?;
    for s in skipped {
        w.write_record([
            s.word.as_str(),
            &s.pair.a.condition,
            &s.pair.a.run.to_string(),
            &s.pair.b.condition,
            &s.pair.b.run.to_string(),
            &s.reason,
        ])?;
    }
    w.flush()
}

fn overlap_stage(
    config: &ExperimentConfig,
    lexicon: &AnnotatedLexicon,
    dir: &Path,
    manifest: &mut Manifest,
) -> Result<Vec<OverlapRecord>, PipelineError> {
    let io_fail = data::<io::Error>(Stage::Overlap);
    remove_dir(&dir.join("overlap")).map_err(&io_fail)?;
    let spaces = load_spaces(dir, &manifest.runs)?;
    let words: Vec<&str> = lexicon.words().collect();
    let comparison = compare_conditions(
        &spaces,
        &config.labels(),
        config.runs_per_condition,
        &words,
        &config.k_values,
    )
    .map_err(data(Stage::Overlap))?;
    drop(spaces);

    let mut files: BTreeMap<(PairId, usize), Vec<&OverlapRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in &comparison.records {
        let key = (r.pair.clone(), r.k);
        if !files.contains_key(&key) {
            order.push(key.clone());
        }
        files.entry(key).or_default().push(r);
    }
    let mut skipped_per_pair: BTreeMap<&PairId, usize> = BTreeMap::new();
    for s in &comparison.skipped {
        *skipped_per_pair.entry(&s.pair).or_default() += 1;
    }
    manifest.pairs.clear();
    for (ca, cb) in crate::overlap::condition_pairs(&config.labels()) {
        let schedule = crate::overlap::schedule_pairs(config.runs_per_condition, &ca, &cb)
            .map_err(data(Stage::Overlap))?;
        for pair in schedule.pairs {
            for &k in &config.k_values {
                let rel = overlap_path(&pair, k);
                let recs = files.get(&(pair.clone(), k)).map_or(&[][..], Vec::as_slice);
                write_with(&dir.join(&rel), |w| {
                    write_records_csv(recs.iter().copied(), w).map_err(io::Error::other)
                })
                .map_err(&io_fail)?;
                manifest.pairs.push(PairEntry {
                    cond_a: pair.a.condition.clone(),
                    run_a: pair.a.run,
                    cond_b: pair.b.condition.clone(),
                    run_b: pair.b.run,
                    condition_type: pair.condition_type(),
                    k,
                    path: rel,
                    records: recs.len(),
                    skipped: skipped_per_pair.get(&pair).copied().unwrap_or(0),
                    status: Status::Complete,
                });
            }
        }
    }
    write_skipped(&dir.join("skipped.csv"), &comparison.skipped).map_err(&io_fail)?;
    log::info!(
        "overlap: {} records, {} skipped",
        comparison.records.len(),
        comparison.skipped.len()
    );
    Ok(comparison.records)
}

fn stats_stage(
    config: &ExperimentConfig,
    records: &[OverlapRecord],
    lexicon: &AnnotatedLexicon,
    dir: &Path,
    manifest: &mut Manifest,
) -> Result<(), PipelineError> {
    remove_dir(&dir.join("stats")).map_err(data(Stage::Stats))?;
    remove_dir(&dir.join("plots")).map_err(data(Stage::Stats))?;
    let input = analysis::AnalysisInput {
        records,
        lexicon,
        conditions: &config.labels(),
        runs: config.runs_per_condition,
        ks: &config.k_values,
        primary_k: config.primary_k(),
        config: &config.analysis,
    };
    let out = analysis::analyze(&input, dir).map_err(data(Stage::Stats))?;
    for w in &out.warnings {
        log::warn!("{w}");
    }
    manifest.warnings = out.warnings;
    Ok(())
}

/// Saves the manifest listing every file of the tree, itself included.
fn finalize(dir: &Path, manifest: &mut Manifest) -> io::Result<()> {
    let mut files: Vec<String> = manifest::list_files(dir)?
        .into_iter()
        .filter(|f| !f.starts_with(".manifest"))
        .collect();
    if !files.iter().any(|f| f == manifest::MANIFEST_FILE) {
        files.push(manifest::MANIFEST_FILE.to_string());
        files.sort();
    }
    manifest.artifacts = files;
    manifest.save(dir)
}

fn record_failure(dir: &Path, manifest: &mut Manifest, err: &PipelineError) {
    manifest.status = Status::Incomplete;
    manifest.failed_stage = err.stage().map(|s| s.to_string());
    manifest.error = Some(err.to_string());
    if let Err(e) = finalize(dir, manifest) {
        log::error!("cannot write manifest: {e}");
    }
}

fn finish(
    dir: &Path,
    mut manifest: Manifest,
    trained: usize,
    reused: usize,
) -> Result<Outcome, PipelineError> {
    manifest.status = Status::Complete;
    manifest.failed_stage = None;
    manifest.error = None;
    finalize(dir, &mut manifest).map_err(data(Stage::Report))?;
    let report = match emit_report(dir) {
        Ok(r) => r,
        Err(e) => {
            let err = data(Stage::Report)(e);
            record_failure(dir, &mut manifest, &err);
            return Err(err);
        }
    };
    finalize(dir, &mut manifest).map_err(data(Stage::Report))?;
    Ok(Outcome {
        output: dir.to_path_buf(),
        manifest,
        report,
        trained,
        reused,
    })
}

/// Runs the whole experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let dir = config.output.clone();
    fs::create_dir_all(&dir).map_err(data(Stage::Setup))?;
    let previous = match Manifest::load(&dir) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("ignoring unreadable manifest: {e}");
            None
        }
    };
    let mut manifest = Manifest::new(config.clone());
    let result = (|| {
        let inputs = load_inputs(config, &dir)?;
        let counts = train_stage(config, &inputs, &dir, previous.as_ref(), &mut manifest)?;
        let Inputs { corpora, lexicon } = inputs;
        drop(corpora);
        let records = overlap_stage(config, &lexicon, &dir, &mut manifest)?;
        stats_stage(config, &records, &lexicon, &dir, &mut manifest)?;
        Ok(counts)
    })();
    match result {
        Ok((trained, reused)) => finish(&dir, manifest, trained, reused),
        Err(e) => {
            record_failure(&dir, &mut manifest, &e);
            Err(e)
        }
    }
}

/// Recomputes statistics, plot data and the report from the overlap CSVs
/// and lexicon of a finished run, without touching vectors.
pub fn rerun_statistics(config: &ExperimentConfig) -> Result<Outcome, PipelineError> {
    config.validate()?;
    let dir = config.output.clone();
    let mut manifest = Manifest::load(&dir)
        .map_err(data(Stage::Stats))?
        .ok_or_else(|| {
            fail(Stage::Stats, ErrorKind::Data)(format!("no manifest in {}", dir.display()))
        })?;
    let lexicon =
        AnnotatedLexicon::load_tsv(dir.join("lexicon.tsv")).map_err(data(Stage::Stats))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for p in &manifest.pairs {
        if !seen.insert(p.path.clone()) {
            continue;
        }
        let file = fs::File::open(dir.join(&p.path)).map_err(data(Stage::Stats))?;
        records.extend(read_records_csv(file).map_err(data(Stage::Stats))?);
    }
    manifest.config.analysis = config.analysis.clone();
    let run_config = manifest.config.clone();
    if let Err(e) = stats_stage(&run_config, &records, &lexicon, &dir, &mut manifest) {
        record_failure(&dir, &mut manifest, &e);
        return Err(e);
    }
    finish(&dir, manifest, 0, 0)
}
