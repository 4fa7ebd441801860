//! Command-line front end. Every subcommand reads and writes files only, so
//! a run is reproducible from its inputs and one top-level seed.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cohort::{compare_means, event_counts, label_windows, summary_line, write_cohort_csv, CohortReport, EventCounts, EventSpec, WindowedTweet};
use crate::corpus::{
    apply_influential_labels, dedup_batches, generate_synthetic, ingest_corpus, read_stance_list, split_train_val, write_corpus, Corpus,
    Provenance, SyntheticConfig,
};
use crate::features::{AnalyzedDoc, FeatureKind};
use crate::geo::{aggregate_by_city, cluster_geo_sentiment, write_city_csv, write_cluster_csv, GeoPoint};
use crate::linear_models::{evaluate, format_table_row, EvalReport};
use crate::model::{Classifier, EmbeddingSource, ModelKind, TrainConfig};
use crate::neural::write_embeddings;
use crate::seed::derive;
use crate::{Error, Result, Stance};

pub const OUT_DIR_ENV: &str = "CLIMATE_STANCE_OUT_DIR";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;
pub const DEFAULT_GEO_K: usize = 4;
pub const DEFAULT_EMBEDDING_DIM: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "climate-stance", version, about = "Stance classification of climate tweets and pre/post event analysis")]
pub struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Top-level seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = OUT_DIR_ENV, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus (and optionally matching word vectors).
    Synth(SynthArgs),
    /// Validate a JSONL corpus, optionally removing records present in another batch.
    Ingest(IngestArgs),
    /// Label an influential-account corpus from a stance list.
    Label(LabelArgs),
    /// Stratified train/validation split.
    Split(SplitArgs),
    /// Train a classifier and save it with its feature pipeline.
    Train(TrainArgs),
    /// Score a saved model and print a comparison-table row.
    Eval(EvalArgs),
    /// Attach predicted stances to a corpus.
    Predict(PredictArgs),
    /// Cluster predicted sentiment with coordinates; aggregate by city.
    GeoCluster(GeoArgs),
    /// Overall and within-cohort pre/post comparison per event.
    Cohort(CohortArgs),
    /// Run the whole pipeline into one output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n_tweets: Option<usize>,
    #[arg(long)]
    pub label_noise: Option<f64>,
    /// Also write word vectors for the generator's lexicon.
    #[arg(long, value_name = "PATH")]
    pub embeddings_out: Option<PathBuf>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, default_value = "event_related")]
    pub provenance: Provenance,
    /// Influential batch whose records are removed from the input.
    #[arg(long, value_name = "PATH")]
    pub exclude: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// JSONL stance list, one {"handle", "stance"} object per line.
    #[arg(long, value_name = "PATH")]
    pub stances: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub train_out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub val_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Validation corpus, reported per epoch for the RNN.
    #[arg(long, value_name = "PATH")]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub features: Option<FeatureKind>,
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub model_file: PathBuf,
    /// Validation corpus.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    /// Also write the full evaluation as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    pub model_file: PathBuf,
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeoArgs {
    /// Corpus whose labels are predicted stances.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// NAME:START:END, repeatable.
    #[arg(long = "event", value_name = "NAME:START:END")]
    pub events: Vec<EventSpec>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub cities_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    /// Corpus whose labels are predicted stances.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long = "event", value_name = "NAME:START:END")]
    pub events: Vec<EventSpec>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub counts_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Labeled training corpus; a synthetic corpus is generated when absent.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Corpus to predict and analyse; defaults to the training corpus.
    #[arg(long, value_name = "PATH")]
    pub events_corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub features: Option<FeatureKind>,
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    #[arg(long = "event", value_name = "NAME:START:END")]
    pub events: Vec<EventSpec>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Contents of the `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub model: Option<ModelKind>,
    pub features: Option<FeatureKind>,
    pub stances: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embedding_dim: Option<usize>,
    pub train_fraction: Option<f64>,
    pub geo_k: Option<usize>,
    /// `NAME:START:END` strings.
    pub events: Vec<String>,
    pub train: TrainConfig,
    pub synthetic: SyntheticConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {}", path.display(), e.message())))
    }
}

/// Flags merged over the config file over built-in defaults.
struct Context {
    config: PipelineConfig,
    seed: u64,
    out_dir: PathBuf,
}

impl Context {
    fn new(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let explicit_seed = cli.seed.or(config.seed);
        if let Some(s) = explicit_seed {
            config.synthetic.seed = s;
        }
        let out_dir = cli
            .out_dir
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Context {
            seed: explicit_seed.unwrap_or(DEFAULT_SEED),
            config,
            out_dir,
        })
    }

    fn stage_seed(&self, stage: &str) -> u64 {
        derive(self.seed, stage)
    }

    fn out(&self, flag: &Option<PathBuf>, default_name: &str) -> PathBuf {
        flag.clone().unwrap_or_else(|| self.out_dir.join(default_name))
    }

    fn model_and_features(&self, model: Option<ModelKind>, features: Option<FeatureKind>) -> Result<(ModelKind, FeatureKind)> {
        let model = model.or(self.config.model).unwrap_or(ModelKind::Nb);
        let features = features.or(self.config.features).unwrap_or(if model == ModelKind::Rnn {
            FeatureKind::Tokenizer
        } else {
            FeatureKind::Unigram
        });
        model.check_features(features)?;
        Ok((model, features))
    }

    fn events(&self, flags: &[EventSpec]) -> Result<Vec<EventSpec>> {
        if !flags.is_empty() {
            return Ok(flags.to_vec());
        }
        if !self.config.events.is_empty() {
            return self.config.events.iter().map(|s| s.parse()).collect();
        }
        self.config
            .synthetic
            .events
            .iter()
            .map(|e| EventSpec::new(e.name.clone(), e.start, e.end))
            .collect()
    }

    fn train_fraction(&self, flag: Option<f64>) -> f64 {
        flag.or(self.config.train_fraction).unwrap_or(DEFAULT_TRAIN_FRACTION)
    }

    fn geo_k(&self, flag: Option<usize>) -> usize {
        flag.or(self.config.geo_k).unwrap_or(DEFAULT_GEO_K)
    }

    fn embedding_dim(&self, flag: Option<usize>) -> usize {
        flag.or(self.config.embedding_dim).unwrap_or(DEFAULT_EMBEDDING_DIM)
    }
}

fn read_corpus(path: &Path, provenance: Provenance) -> Result<Corpus> {
    ingest_corpus(path, provenance).map_err(|e| e.context(path.display()))
}

/// Opens `path` for writing, creating parent directories.
fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_corpus(corpus, &mut w).map_err(|e| e.context(path.display()))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn labeled_docs(corpus: &Corpus) -> Result<Vec<(AnalyzedDoc, Stance)>> {
    let labels = corpus.labels()?;
    Ok(corpus
        .records()
        .iter()
        .zip(labels)
        .map(|(r, y)| (AnalyzedDoc::from_text(&r.text), y))
        .collect())
}

fn texts(corpus: &Corpus) -> Vec<&str> {
    corpus.records().iter().map(|r| r.text.as_str()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub method: String,
    pub validation: EvalReport,
    pub test: Option<EvalReport>,
}

fn eval_on(classifier: &Classifier, corpus: &Corpus) -> Result<EvalReport> {
    let preds = classifier.predict_texts(&texts(corpus))?;
    evaluate(&preds, &corpus.labels()?)
}

fn percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Windowed tweets per event, with each record's label as its prediction.
fn windows_per_event(corpus: &Corpus, events: &[EventSpec]) -> Result<Vec<(EventSpec, Vec<WindowedTweet>)>> {
    let preds = corpus.labels().map_err(|e| e.context("stances are read from the label field"))?;
    events
        .iter()
        .map(|e| Ok((e.clone(), label_windows(corpus, &preds, e)?)))
        .collect()
}

fn run_geo(windowed: &[(EventSpec, Vec<WindowedTweet>)], k: usize, seed: u64, clusters: &Path, cities: &Path) -> Result<()> {
    let points: Vec<GeoPoint> = windowed
        .iter()
        .flat_map(|(_, w)| w.iter().filter_map(GeoPoint::from_windowed))
        .collect();
    let report = cluster_geo_sentiment(&points, k, seed)?;
    write_with(clusters, |w| write_cluster_csv(&report, w))?;
    let agg = aggregate_by_city(&points);
    write_with(cities, |w| write_city_csv(&agg, w))?;
    eprintln!(
        "clustered {} geotagged tweets into {k}; {} cities ({} tweets without a city)",
        points.len(),
        agg.cities.len(),
        agg.skipped
    );
    for j in 0..k {
        let c = report.centroids[j];
        eprintln!(
            "  cluster {j}: ({:.2}, {:.2}) size {} mean sentiment {:+.2}",
            c[1], c[2], report.sizes[j], report.mean_sentiment[j]
        );
    }
    Ok(())
}

pub const COUNTS_CSV_HEADER: &str = "event,total,pre,post,cohort_users,cohort_pre,cohort_post";

fn run_cohort(windowed: &[(EventSpec, Vec<WindowedTweet>)], out: &Path, counts_out: &Path) -> Result<()> {
    let mut reports: Vec<CohortReport> = Vec::new();
    let mut counts: Vec<(String, EventCounts)> = Vec::new();
    for (event, w) in windowed {
        counts.push((event.name.clone(), event_counts(w)));
        if w.is_empty() {
            eprintln!("{}: no tweets in the event windows", event.name);
            continue;
        }
        let r = compare_means(&event.name, w)?;
        eprintln!("{}", summary_line(&r));
        reports.push(r);
    }
    write_with(out, |w| write_cohort_csv(&reports, w))?;
    write_with(counts_out, |w| {
        writeln!(w, "{COUNTS_CSV_HEADER}")?;
        for (name, c) in &counts {
            writeln!(
                w,
                "{name},{},{},{},{},{},{}",
                c.total, c.pre, c.post, c.cohort_users, c.cohort_pre, c.cohort_post
            )?;
        }
        Ok(())
    })
}

fn train_classifier(
    ctx: &Context,
    model: ModelKind,
    features: FeatureKind,
    train: &Corpus,
    val: Option<&Corpus>,
    embeddings: Option<EmbeddingSource<'_>>,
) -> Result<Classifier> {
    let train_docs = labeled_docs(train)?;
    let val_docs = match val {
        Some(v) => labeled_docs(v)?,
        None => Vec::new(),
    };
    eprintln!(
        "training {} {} on {} tweets",
        features.display_name(),
        model.display_name(),
        train_docs.len()
    );
    let (classifier, history) = Classifier::train(
        model,
        features,
        &train_docs,
        &val_docs,
        &ctx.config.train,
        embeddings,
        ctx.stage_seed("train"),
    )?;
    for (i, e) in history.iter().flat_map(|h| h.epochs.iter()).enumerate() {
        match e.val_accuracy {
            Some(a) => eprintln!("  epoch {}: loss {:.4}, val accuracy {}", i + 1, e.train_loss, percent(a)),
            None => eprintln!("  epoch {}: loss {:.4}", i + 1, e.train_loss),
        }
    }
    Ok(classifier)
}

fn synth(ctx: &Context, a: &SynthArgs) -> Result<()> {
    let mut cfg = ctx.config.synthetic.clone();
    if let Some(n) = a.n_tweets {
        cfg.n_tweets = n;
    }
    if let Some(p) = a.label_noise {
        cfg.label_noise = p;
    }
    let synthetic = generate_synthetic(&cfg)?;
    let out = ctx.out(&a.out, "synthetic.jsonl");
    save_corpus(&synthetic.corpus, &out)?;
    eprintln!("wrote {} synthetic tweets to {}", synthetic.corpus.len(), out.display());
    if let Some(path) = &a.embeddings_out {
        let dim = ctx.embedding_dim(a.embedding_dim);
        let vectors = cfg.embeddings(dim, ctx.stage_seed("embeddings"));
        write_with(path, |w| write_embeddings(&vectors, w))?;
        eprintln!("wrote {} word vectors (dim {dim}) to {}", vectors.len(), path.display());
    }
    Ok(())
}

fn ingest(ctx: &Context, a: &IngestArgs) -> Result<()> {
    let mut corpus = read_corpus(&a.input, a.provenance)?;
    if let Some(ex) = &a.exclude {
        let influential = read_corpus(ex, Provenance::Influential)?;
        let before = corpus.len();
        corpus = dedup_batches(&influential, &corpus);
        eprintln!("removed {} records also in {}", before - corpus.len(), ex.display());
    }
    let out = ctx.out(&a.out, "ingested.jsonl");
    save_corpus(&corpus, &out)?;
    eprintln!("wrote {} records to {}", corpus.len(), out.display());
    Ok(())
}

fn label(ctx: &Context, a: &LabelArgs) -> Result<()> {
    let stances_path = a
        .stances
        .clone()
        .or_else(|| ctx.config.stances.clone())
        .ok_or_else(|| Error::InvalidConfig("label needs --stances".into()))?;
    let stances = read_stance_list(&stances_path).map_err(|e| e.context(stances_path.display()))?;
    let corpus = read_corpus(&a.input, Provenance::Influential)?;
    let labeled = apply_influential_labels(&corpus, &stances)?;
    let out = ctx.out(&a.out, "labeled.jsonl");
    save_corpus(&labeled, &out)?;
    eprintln!(
        "labeled {} of {} tweets from {} handles ({} positive); wrote {}",
        labeled.len(),
        corpus.len(),
        stances.len(),
        stances.count(Stance::Positive),
        out.display()
    );
    Ok(())
}

fn split(ctx: &Context, a: &SplitArgs) -> Result<()> {
    let corpus = read_corpus(&a.input, Provenance::EventRelated)?;
    let (train, val) = split_train_val(&corpus, ctx.train_fraction(a.train_fraction), ctx.stage_seed("split"))?;
    let (tp, vp) = (ctx.out(&a.train_out, "train.jsonl"), ctx.out(&a.val_out, "val.jsonl"));
    save_corpus(&train, &tp)?;
    save_corpus(&val, &vp)?;
    eprintln!("split {} records: {} train, {} validation", corpus.len(), train.len(), val.len());
    Ok(())
}

fn train(ctx: &Context, a: &TrainArgs) -> Result<()> {
    let (model, features) = ctx.model_and_features(a.model, a.features)?;
    let train = read_corpus(&a.input, Provenance::EventRelated)?;
    let val = a.val.as_deref().map(|p| read_corpus(p, Provenance::EventRelated)).transpose()?;
    let emb_path = a.embeddings.clone().or_else(|| ctx.config.embeddings.clone());
    let classifier = train_classifier(ctx, model, features, &train, val.as_ref(), emb_path.as_deref().map(EmbeddingSource::File))?;
    let out = ctx.out(&a.out, "model.json");
    classifier.save(&out)?;
    eprintln!("saved {} to {}", classifier.method_name(), out.display());
    Ok(())
}

fn eval(_ctx: &Context, a: &EvalArgs) -> Result<()> {
    let classifier = Classifier::load(&a.model_file)?;
    let val = read_corpus(&a.input, Provenance::EventRelated)?;
    let validation = eval_on(&classifier, &val)?;
    let test = match &a.test {
        Some(p) => Some(eval_on(&classifier, &read_corpus(p, Provenance::EventRelated)?)?),
        None => None,
    };
    let output = EvalOutput {
        method: classifier.method_name(),
        validation,
        test,
    };
    println!("{}", format_table_row(&output.method, validation.accuracy, test.map(|t| t.accuracy)));
    eprintln!(
        "validation: FNR {}, FPR {}",
        percent(validation.false_negative_rate),
        percent(validation.false_positive_rate)
    );
    if let Some(path) = &a.out {
        write_json(path, &output)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_with(path, |w| writeln!(w, "{text}"))
}

fn predict_corpus(classifier: &Classifier, corpus: &Corpus) -> Result<Corpus> {
    let preds = classifier.predict_texts(&texts(corpus))?;
    corpus.with_labels(&preds)
}

fn predict(ctx: &Context, a: &PredictArgs) -> Result<()> {
    let classifier = Classifier::load(&a.model_file)?;
    let corpus = read_corpus(&a.input, Provenance::EventRelated)?;
    let predicted = predict_corpus(&classifier, &corpus)?;
    let out = ctx.out(&a.out, "predictions.jsonl");
    save_corpus(&predicted, &out)?;
    let pos = predicted.labels()?.iter().filter(|&&s| s == Stance::Positive).count();
    eprintln!(
        "predicted {} tweets ({} positive); wrote {}",
        predicted.len(),
        percent(pos as f64 / predicted.len().max(1) as f64),
        out.display()
    );
    Ok(())
}

fn geo_cluster(ctx: &Context, a: &GeoArgs) -> Result<()> {
    let corpus = read_corpus(&a.input, Provenance::EventRelated)?;
    let windowed = windows_per_event(&corpus, &ctx.events(&a.events)?)?;
    run_geo(
        &windowed,
        ctx.geo_k(a.k),
        ctx.stage_seed("geo"),
        &ctx.out(&a.out, "clusters.csv"),
        &ctx.out(&a.cities_out, "cities.csv"),
    )
}

fn cohort(ctx: &Context, a: &CohortArgs) -> Result<()> {
    let corpus = read_corpus(&a.input, Provenance::EventRelated)?;
    let windowed = windows_per_event(&corpus, &ctx.events(&a.events)?)?;
    run_cohort(&windowed, &ctx.out(&a.out, "cohort.csv"), &ctx.out(&a.counts_out, "counts.csv"))
}

fn report(ctx: &Context, a: &ReportArgs) -> Result<()> {
    let dir = a.out.clone().unwrap_or_else(|| ctx.out_dir.clone());
    let (model, features) = ctx.model_and_features(a.model, a.features)?;
    let events = ctx.events(&a.events)?;

    let (corpus, synthetic_embeddings) = match &a.input {
        Some(p) => (read_corpus(p, Provenance::EventRelated)?, None),
        None => {
            let cfg = &ctx.config.synthetic;
            let corpus = generate_synthetic(cfg)?.corpus;
            save_corpus(&corpus, &dir.join("corpus.jsonl"))?;
            let vectors = cfg.embeddings(ctx.embedding_dim(None), ctx.stage_seed("embeddings"));
            let mut text = Vec::new();
            write_embeddings(&vectors, &mut text).map_err(|e| Error::io(dir.join("embeddings.txt"), e))?;
            let text = String::from_utf8(text).expect("embeddings are ASCII");
            eprintln!("generated {} synthetic tweets", corpus.len());
            (corpus, Some(text))
        }
    };

    let (train, val) = split_train_val(&corpus, ctx.train_fraction(None), ctx.stage_seed("split"))?;
    let emb_path = a.embeddings.clone().or_else(|| ctx.config.embeddings.clone());
    let embeddings = match (&emb_path, &synthetic_embeddings) {
        (Some(p), _) => Some(EmbeddingSource::File(p)),
        (None, Some(t)) => Some(EmbeddingSource::Text(t)),
        (None, None) => None,
    };
    let classifier = train_classifier(ctx, model, features, &train, Some(&val), embeddings)?;
    classifier.save(&dir.join("model.json"))?;

    let validation = eval_on(&classifier, &val)?;
    let output = EvalOutput {
        method: classifier.method_name(),
        validation,
        test: None,
    };
    let row = format_table_row(&output.method, validation.accuracy, None);
    write_json(&dir.join("eval.json"), &output)?;
    write_with(&dir.join("eval.txt"), |w| writeln!(w, "{row}"))?;
    println!("{row}");

    let targets = match &a.events_corpus {
        Some(p) => read_corpus(p, Provenance::EventRelated)?,
        None => corpus,
    };
    let predicted = predict_corpus(&classifier, &targets)?;
    save_corpus(&predicted, &dir.join("predictions.jsonl"))?;

    let windowed = windows_per_event(&predicted, &events)?;
    run_geo(
        &windowed,
        ctx.geo_k(a.k),
        ctx.stage_seed("geo"),
        &dir.join("clusters.csv"),
        &dir.join("cities.csv"),
    )?;
    run_cohort(&windowed, &dir.join("cohort.csv"), &dir.join("counts.csv"))?;
    eprintln!("report written to {}", dir.display());
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Label(a) => label(&ctx, a),
        Command::Split(a) => split(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Predict(a) => predict(&ctx, a),
        Command::GeoCluster(a) => geo_cluster(&ctx, a),
        Command::Cohort(a) => cohort(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

/// Parses `args` (program name first) and runs the command. Exit codes:
/// 0 success, 1 runtime or data error, 2 usage error.
pub fn run_command<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg: PipelineConfig = toml::from_str(
            r#"
            seed = 7
            model = "svm"
            features = "char5"
            events = ["florence:2018-08-31:2018-09-19"]
            [train]
            lambda = 0.001
            [synthetic]
            n_tweets = 50
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.model, Some(ModelKind::Svm));
        assert_eq!(cfg.features, Some(FeatureKind::Char5));
        assert_eq!(cfg.train.lambda, 0.001);
        assert_eq!(cfg.train.alpha, 1.0);
        assert_eq!(cfg.synthetic.n_tweets, 50);
        assert!(toml::from_str::<PipelineConfig>("modle = \"nb\"").is_err());
    }
}
