mod config;

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use anchorkit::bm25::Bm25Params;
use anchorkit::corpus::Corpus;
use anchorkit::dataset::{build_dataset, read_examples, write_examples, Example, FilterConfig, Split};
use anchorkit::eval::{compare, evaluate, EvalReport};
use anchorkit::fragment::{fragment_url, make_fragment};
use anchorkit::ranking::{
    build_ranker, read_predictions, training_lists, write_predictions, Endpoint, QueryLimits,
    RankerConfig, AVAILABLE_RANKERS,
};
use anchorkit::stats::{
    agreement_distribution, dataset_statistics, mean_pairwise_kappa, render_stats_table,
    split_statistics,
};

use config::RunConfig;

/// Build, rank and evaluate anchor prediction datasets.
#[derive(Parser)]
#[command(name = "anchorkit", version)]
struct Cli {
    /// TOML file supplying defaults for any flag below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset from a JSON Lines corpus.
    Build(BuildArgs),
    /// Predict an anchor for every example of a split.
    Rank(RankArgs),
    /// Score predictions, or tabulate existing reports with --compare.
    Evaluate(EvaluateArgs),
    /// Dataset statistics per split.
    Stats(StatsArgs),
    /// Export listwise training lists with serialized queries.
    SampleLists(SampleListsArgs),
    /// Agreement between annotators of a multi-annotator file.
    Kappa(KappaArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Dataset output (JSON Lines).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Funnel report output (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    min_tokens: Option<usize>,
    #[arg(long)]
    min_sections: Option<usize>,
    #[arg(long)]
    min_inlinks: Option<usize>,
    #[arg(long)]
    max_inlinks: Option<usize>,
    #[arg(long)]
    max_link_fraction: Option<f64>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// One of bm25-title, bm25-context, majority, random, oracle, external.
    #[arg(long)]
    ranker: Option<String>,
    /// Predictions output (JSON Lines).
    #[arg(long)]
    out: Option<PathBuf>,
    /// train, dev, test, eval_only or all.
    #[arg(long)]
    split: Option<String>,
    /// Dataset whose train split feeds the majority baseline (default: --dataset).
    #[arg(long)]
    train_dataset: Option<PathBuf>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Context tokens on each side of the link.
    #[arg(long)]
    window_tokens: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// External scorer: a command line, or tcp://host:port.
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Attach a text-fragment URL to every prediction.
    #[arg(long)]
    emit_urls: bool,
    #[arg(long)]
    url_base: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Report output (JSON); with --compare, the table as TSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
    /// Dataset name in the report (default: file stem and split).
    #[arg(long)]
    name: Option<String>,
    /// Ranker name in the report (default: predictions file stem).
    #[arg(long)]
    ranker_name: Option<String>,
    /// Report files to tabulate instead of scoring predictions.
    #[arg(long, num_args = 1.., conflicts_with_all = ["predictions", "dataset"])]
    compare: Vec<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Statistics output (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleListsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Default: train.
    #[arg(long)]
    split: Option<String>,
    /// List size.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct KappaArgs {
    /// Examples carrying relevant_by_annotator.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A problem with how the tool was invoked (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file)
        .ok_or_else(|| usage(format!("missing --{name} (flag or config key)")))
}

fn input(flag: Option<PathBuf>, file: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let path = required(flag, file, name)?;
    if !path.is_file() {
        return Err(usage(format!("{name} file not found: {}", path.display())));
    }
    Ok(path)
}

fn parse_split(name: &str) -> Result<Option<Split>> {
    if name == "all" {
        return Ok(None);
    }
    name.parse::<Split>()
        .map(Some)
        .map_err(|_| usage(format!("unknown split {name:?}; use train, dev, test, eval_only or all")))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Corpus::from_jsonl(BufReader::new(file)).with_context(|| format!("loading corpus {}", path.display()))
}

fn load_examples(path: &Path) -> Result<Vec<Example>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_examples(BufReader::new(file)).with_context(|| format!("loading dataset {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn select(examples: Vec<Example>, split: Option<Split>) -> Vec<Example> {
    match split {
        None => examples,
        Some(s) => examples.into_iter().filter(|e| e.split == s).collect(),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_build(a: BuildArgs, cfg: RunConfig) -> Result<()> {
    let corpus_path = input(a.corpus, cfg.corpus, "corpus")?;
    let out = required(a.out, cfg.out, "out")?;
    let defaults = FilterConfig::default();
    let filter = FilterConfig {
        min_tokens: a.min_tokens.or(cfg.min_tokens).unwrap_or(defaults.min_tokens),
        min_sections: a.min_sections.or(cfg.min_sections).unwrap_or(defaults.min_sections),
        min_inlinks: a.min_inlinks.or(cfg.min_inlinks).unwrap_or(defaults.min_inlinks),
        max_inlinks: a.max_inlinks.or(cfg.max_inlinks).unwrap_or(defaults.max_inlinks),
        max_link_fraction: a
            .max_link_fraction
            .or(cfg.max_link_fraction)
            .unwrap_or(defaults.max_link_fraction),
    };
    let corpus = load_corpus(&corpus_path)?;
    let dataset = build_dataset(&corpus, &filter)?;
    write_examples(&dataset.examples, create(&out)?)?;
    if let Some(report) = a.report.or(cfg.report) {
        write_json(&report, &dataset.report)?;
    }
    let r = &dataset.report;
    println!("articles            {}", r.articles);
    println!("targets accepted    {}", r.targets_accepted);
    println!("fragment links      {}", r.links_with_fragment);
    println!("anchored links      {}", r.anchored_links);
    println!("after dedup         {}", r.deduplicated);
    println!("after trivial       {}", r.non_trivial);
    println!("examples            {}", r.examples);
    for (split, n) in &r.splits {
        println!("  {:<17} {n}", split.as_str());
    }
    Ok(())
}

fn cmd_rank(a: RankArgs, cfg: RunConfig) -> Result<()> {
    let ranker = required(a.ranker, cfg.ranker, "ranker")?;
    if !AVAILABLE_RANKERS.contains(&ranker.as_str()) {
        return Err(usage(format!(
            "unknown ranker {ranker:?}; available: {}",
            AVAILABLE_RANKERS.join(", ")
        )));
    }
    let corpus_path = input(a.corpus, cfg.corpus, "corpus")?;
    let dataset_path = input(a.dataset, cfg.dataset, "dataset")?;
    let out = required(a.out, cfg.out, "out")?;
    let split = parse_split(&a.split.or(cfg.split).unwrap_or_else(|| "all".into()))?;
    let endpoint = match a.scorer.or(cfg.scorer) {
        Some(s) => Some(s.parse::<Endpoint>().map_err(|e| usage(e.to_string()))?),
        None if ranker == "external" => return Err(usage("the external ranker needs --scorer")),
        None => None,
    };
    let train_path = a.train_dataset.or(cfg.train_dataset);
    if let Some(p) = &train_path {
        if !p.is_file() {
            return Err(usage(format!("train-dataset file not found: {}", p.display())));
        }
    }
    let url_base = a.url_base.or(cfg.url_base).unwrap_or_default();

    let defaults = RankerConfig::default();
    let config = RankerConfig {
        bm25: Bm25Params {
            k1: a.k1.or(cfg.k1).unwrap_or(defaults.bm25.k1),
            b: a.b.or(cfg.b).unwrap_or(defaults.bm25.b),
        },
        window_tokens: a.window_tokens.or(cfg.window_tokens).unwrap_or(defaults.window_tokens),
        seed: a.seed.or(cfg.seed).unwrap_or(defaults.seed),
        endpoint,
        timeout: a
            .timeout_secs
            .or(cfg.timeout_secs)
            .map(Duration::from_secs)
            .unwrap_or(defaults.timeout),
        limits: QueryLimits::default(),
    };

    let corpus = load_corpus(&corpus_path)?;
    let all = load_examples(&dataset_path)?;
    let train: Vec<Example> = match &train_path {
        Some(p) => load_examples(p)?,
        None => all.clone(),
    };
    let examples = select(all, split);
    info!("ranking {} examples with {ranker}", examples.len());
    let ranker_impl = build_ranker(&ranker, &config, &corpus, &train)?;
    let mut predictions = ranker_impl.rank_all(&examples)?;

    if a.emit_urls {
        for (p, e) in predictions.iter_mut().zip(&examples) {
            let target = corpus.article(&e.target_id)?;
            match make_fragment(target, &e.candidates[p.chosen_index]) {
                Ok(f) => p.fragment_url = Some(fragment_url(&url_base, &target.id, &f)),
                Err(err) => warn!("{}: no fragment URL: {err}", e.example_id),
            }
        }
    }
    write_predictions(&predictions, create(&out)?)?;
    println!("wrote {} predictions to {}", predictions.len(), out.display());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, cfg: RunConfig) -> Result<()> {
    if !a.compare.is_empty() {
        let mut reports: Vec<EvalReport> = Vec::new();
        for path in &a.compare {
            if !path.is_file() {
                return Err(usage(format!("report file not found: {}", path.display())));
            }
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            reports.push(
                serde_json::from_reader(BufReader::new(file))
                    .with_context(|| format!("parsing report {}", path.display()))?,
            );
        }
        let table = compare(&reports)?;
        print!("{}", table.render_text());
        if let Some(out) = a.out.or(cfg.out) {
            let mut w = create(&out)?;
            w.write_all(table.render_tsv().as_bytes())?;
            w.flush()?;
        }
        return Ok(());
    }

    let dataset_path = input(a.dataset, cfg.dataset, "dataset")?;
    let predictions_path = input(a.predictions, cfg.predictions, "predictions")?;
    let split_name = a.split.or(cfg.split).unwrap_or_else(|| "all".into());
    let split = parse_split(&split_name)?;
    let examples = select(load_examples(&dataset_path)?, split);
    let file = File::open(&predictions_path)?;
    let predictions = read_predictions(BufReader::new(file))
        .with_context(|| format!("loading predictions {}", predictions_path.display()))?;
    let name = a
        .name
        .unwrap_or_else(|| format!("{}/{split_name}", stem(&dataset_path)));
    let ranker = a.ranker_name.unwrap_or_else(|| stem(&predictions_path));
    let report = evaluate(&predictions, &examples, &name, &ranker)?;
    println!(
        "{ranker} on {name}: {}/{} correct, accuracy {:.1}%",
        report.n_correct,
        report.n_examples,
        100.0 * report.accuracy
    );
    if let Some(deciles) = &report.deciles {
        println!("decile  candidates  examples  accuracy");
        for d in deciles {
            println!(
                "{:>6}  {:>4}-{:<5}  {:>8}  {:>7.1}%",
                d.decile,
                d.min_candidates,
                d.max_candidates,
                d.n_examples,
                100.0 * d.accuracy
            );
        }
    }
    if let Some(out) = a.out.or(cfg.out) {
        write_json(&out, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsOutput {
    all: anchorkit::stats::StatsReport,
    splits: Vec<(String, anchorkit::stats::StatsReport)>,
}

fn cmd_stats(a: StatsArgs, cfg: RunConfig) -> Result<()> {
    let corpus_path = input(a.corpus, cfg.corpus, "corpus")?;
    let dataset_path = input(a.dataset, cfg.dataset, "dataset")?;
    let corpus = load_corpus(&corpus_path)?;
    let examples = load_examples(&dataset_path)?;
    let all = dataset_statistics(&examples, &corpus)?;
    let splits = split_statistics(&examples, &corpus)?;
    let mut columns = splits.clone();
    columns.push(("all".into(), all.clone()));
    print!("{}", render_stats_table(&columns));
    if let Some(out) = a.out.or(cfg.out) {
        write_json(&out, &StatsOutput { all, splits })?;
    }
    Ok(())
}

fn cmd_sample_lists(a: SampleListsArgs, cfg: RunConfig) -> Result<()> {
    let corpus_path = input(a.corpus, cfg.corpus, "corpus")?;
    let dataset_path = input(a.dataset, cfg.dataset, "dataset")?;
    let out = required(a.out, cfg.out, "out")?;
    let split = parse_split(&a.split.or(cfg.split).unwrap_or_else(|| "train".into()))?;
    let m = a.m.or(cfg.m).unwrap_or(36);
    if m < 2 {
        return Err(usage("--m must be at least 2"));
    }
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let corpus = load_corpus(&corpus_path)?;
    let examples = select(load_examples(&dataset_path)?, split);
    let limits = QueryLimits::default();
    let mut w = create(&out)?;
    let (mut lists, mut skipped) = (0usize, 0usize);
    for e in &examples {
        if e.relevant.len() == e.candidates.len() {
            skipped += 1;
            warn!("{}: every candidate is relevant; no lists", e.example_id);
            continue;
        }
        for list in training_lists(e, m, seed, &corpus, &limits)? {
            serde_json::to_writer(&mut w, &list)?;
            writeln!(w)?;
            lists += 1;
        }
    }
    w.flush()?;
    println!("wrote {lists} lists to {} ({skipped} examples skipped)", out.display());
    Ok(())
}

#[derive(Serialize)]
struct KappaOutput {
    kappa: anchorkit::stats::KappaSummary,
    agreement: anchorkit::stats::AgreementHistogram,
}

fn cmd_kappa(a: KappaArgs) -> Result<()> {
    let path = input(Some(a.annotations), None, "annotations")?;
    let examples = load_examples(&path)?;
    let kappa = mean_pairwise_kappa(&examples)?;
    let agreement = agreement_distribution(&examples);
    println!(
        "mean pairwise kappa {:.3} over {} annotators",
        kappa.mean_kappa, kappa.n_annotators
    );
    for p in &kappa.pairs {
        println!("  {} vs {}: {:.3} ({} examples)", p.a, p.b, p.kappa, p.n_examples);
    }
    println!("distinct choices per example: {:?}", agreement.distinct);
    println!("largest agreeing group:       {:?}", agreement.max_agreement);
    if agreement.skipped > 0 {
        println!("skipped {} examples with fewer than two annotators", agreement.skipped);
    }
    if let Some(out) = a.out {
        write_json(&out, &KappaOutput { kappa, agreement })?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) if !path.is_file() => {
            return Err(usage(format!("config file not found: {}", path.display())))
        }
        Some(path) => RunConfig::load(path).map_err(|e| usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Build(a) => cmd_build(a, cfg),
        Command::Rank(a) => cmd_rank(a, cfg),
        Command::Evaluate(a) => cmd_evaluate(a, cfg),
        Command::Stats(a) => cmd_stats(a, cfg),
        Command::SampleLists(a) => cmd_sample_lists(a, cfg),
        Command::Kappa(a) => cmd_kappa(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
