use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use spanforge::augment::{augment, AugmentConfig, AugmentStrategy, SubstitutionLexicon};
use spanforge::corpus::{corpus_stats, load_corpus, write_corpus, Corpus, CorpusFormat, Split};
use spanforge::error::{Error, Result};
use spanforge::evaluate::evaluate;
use spanforge::features::{
    dep_distances, heuristic_chunk_tags, load_chunk_tags, load_features, write_features,
    DepDistanceMatrix, FeatureRecord, DEFAULT_DISTANCE_CAP,
};
use spanforge::jsonl::write_bytes;
use spanforge::pipeline::{exit_code, run_pipeline, RunManifest, DEFAULT_DEV_FRACTION, DEFAULT_SEED};
use spanforge::projection::{read_artifact, write_artifact, ProjectionArtifact};
use spanforge::reconstruct::{
    load_predictions, reconstruct_corpus, write_predictions, OverlapPolicy, ReconstructionConfig,
    Thresholds,
};
use spanforge::scoring::{build_lexicon, check_against, load_probabilities, score_corpus, write_probabilities};
use spanforge::tune::{carve_dev, grid_search, write_trace, ThresholdGrid};

#[derive(Parser)]
#[command(name = "spanforge", version, about = "Multiword expression identification toolkit")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a source corpus to the canonical JSONL format.
    Convert(ConvertArgs),
    /// Print corpus statistics as JSON.
    Stats(StatsArgs),
    /// Write a checksummed START/END/INSIDE projection artifact.
    Project(ProjectArgs),
    /// Check the digest of a projection artifact.
    Verify(VerifyArgs),
    /// Write chunk and dependency features.
    Features(FeaturesArgs),
    /// Score a corpus with the lexicon-lookup baseline.
    Score(ScoreArgs),
    /// Turn token probabilities into MWE predictions.
    Reconstruct(ReconstructArgs),
    /// Grid-search thresholds on dev sentences.
    Tune(TuneArgs),
    /// Exact-match evaluation of predictions against gold.
    Evaluate(EvaluateArgs),
    /// Append augmented copies of training sentences.
    Augment(AugmentArgs),
    /// Run every stage from a JSON manifest.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceFormat {
    Coam,
    Streusle,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Canonical,
    Coam,
    Streusle,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Canonical => CorpusFormat::Canonical,
            FormatArg::Coam => CorpusFormat::Coam,
            FormatArg::Streusle => CorpusFormat::Streusle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OverlapArg {
    Greedy,
    All,
}

impl From<OverlapArg> for OverlapPolicy {
    fn from(o: OverlapArg) -> Self {
        match o {
            OverlapArg::Greedy => OverlapPolicy::GreedyNonOverlap,
            OverlapArg::All => OverlapPolicy::AllowAll,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Oversample,
    Lexsub,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    from: SourceFormat,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fine-label to type table (TSV) for STREUSLE input.
    #[arg(long)]
    type_map: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "canonical")]
    format: FormatArg,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    version: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    artifact: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Derive noun-phrase chunks from UPOS tags.
    #[arg(long, conflicts_with = "chunks")]
    heuristic_chunks: bool,
    /// Feature file to take chunk tags from.
    #[arg(long)]
    chunks: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    probs: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Feature file; enables the dependency-distance filter.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    tau_start: f64,
    #[arg(long)]
    tau_end: f64,
    #[arg(long)]
    tau_inside: f64,
    #[arg(long, value_enum, default_value = "greedy")]
    overlap: OverlapArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    probs: PathBuf,
    #[arg(long, default_value = "0.2:0.6:0.05")]
    grid: String,
    /// Share of TRAIN relabelled as dev when the corpus has no DEV split.
    #[arg(long, default_value_t = DEFAULT_DEV_FRACTION)]
    dev_fraction: f64,
    #[arg(long, env = "SPANFORGE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "greedy")]
    overlap: OverlapArg,
    /// Trace output (TSV).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Restrict gold, and the predictions for it, to one split.
    #[arg(long, value_enum)]
    split: Option<SplitArg>,
    /// JSON report; the table goes to stdout and next to it with a .txt extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long)]
    ratio: f64,
    #[arg(long, env = "SPANFORGE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Used when the manifest has no seed.
    #[arg(long, env = "SPANFORGE_SEED")]
    seed: Option<u64>,
}

fn canonical(path: &Path) -> Result<Corpus> {
    load_corpus(path, CorpusFormat::Canonical)
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn matrices(
    corpus: &Corpus,
    features: &Path,
) -> Result<BTreeMap<String, DepDistanceMatrix>> {
    let records = load_features(features, corpus)?;
    corpus
        .sentences
        .iter()
        .map(|s| {
            let m = match records.get(&s.id) {
                Some(r) => r.distances(DEFAULT_DISTANCE_CAP)?,
                None => dep_distances(s, DEFAULT_DISTANCE_CAP)?,
            };
            Ok((s.id.clone(), m))
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Convert(a) => {
            let format = match a.from {
                SourceFormat::Coam => CorpusFormat::Coam,
                SourceFormat::Streusle => CorpusFormat::Streusle,
            };
            let corpus = match &a.type_map {
                Some(p) => spanforge::corpus::load_corpus_with(
                    &a.input,
                    format,
                    &spanforge::corpus::TypeMap::from_file(p)?,
                )?,
                None => load_corpus(&a.input, format)?,
            };
            write_corpus(&corpus, &a.out)?;
            info!("converted {} sentences, {} MWEs", corpus.len(), corpus.mwe_count());
        }
        Command::Stats(a) => {
            let corpus = load_corpus(&a.input, a.format.into())?;
            println!("{}", to_json(&corpus_stats(&corpus)));
        }
        Command::Project(a) => {
            let corpus = canonical(&a.input)?;
            let collisions = ProjectionArtifact::collisions(&corpus);
            if collisions > 0 {
                warn!("{collisions} MWE boundaries share a token with another MWE boundary");
            }
            let artifact = write_artifact(&corpus, &a.version, &a.out)?;
            println!("{}", artifact.checksum);
        }
        Command::Verify(a) => {
            let artifact = read_artifact(&a.artifact)?;
            println!("{}  {} sentences", artifact.checksum, artifact.projections.len());
        }
        Command::Features(a) => {
            let corpus = canonical(&a.input)?;
            let supplied = match &a.chunks {
                Some(p) => Some(load_chunk_tags(p, &corpus)?),
                None if a.heuristic_chunks => None,
                None => {
                    return Err(Error::Config(
                        "no chunk source: pass --heuristic-chunks or --chunks PATH".into(),
                    ))
                }
            };
            let records = corpus
                .sentences
                .iter()
                .map(|s| {
                    let chunks = match &supplied {
                        Some(map) => map.get(&s.id).cloned().ok_or_else(|| {
                            Error::Config(format!("no chunk tags for sentence `{}`", s.id))
                        })?,
                        None => heuristic_chunk_tags(s)?,
                    };
                    dep_distances(s, DEFAULT_DISTANCE_CAP)?;
                    Ok(FeatureRecord::new(s, chunks))
                })
                .collect::<Result<Vec<_>>>()?;
            write_features(&records, &a.out)?;
        }
        Command::Score(a) => {
            let train = canonical(&a.train)?.subset(Split::Train);
            let target = canonical(&a.input)?;
            let lexicon = build_lexicon(&train);
            info!("lexicon has {} entries", lexicon.len());
            write_probabilities(&score_corpus(&target, &lexicon), &a.out)?;
        }
        Command::Reconstruct(a) => {
            let corpus = canonical(&a.corpus)?;
            let probs = load_probabilities(&a.probs)?;
            check_against(&probs, &corpus)?;
            let mut scored = corpus.clone();
            scored.sentences.retain(|s| probs.contains_key(&s.id));
            let unscored = corpus.len() - scored.len();
            if unscored > 0 {
                warn!("{unscored} corpus sentences have no probabilities and are skipped");
            }
            let t = Thresholds::new(a.tau_start, a.tau_end, a.tau_inside)?;
            let cfg = ReconstructionConfig::default().with_policy(a.overlap.into());
            let m = a.features.as_deref().map(|f| matrices(&corpus, f)).transpose()?;
            let predictions = reconstruct_corpus(&scored, &probs, &t, &cfg, m.as_ref())?;
            write_predictions(&predictions, &a.out)?;
        }
        Command::Tune(a) => {
            let mut corpus = canonical(&a.corpus)?;
            if corpus.split(Split::Dev).next().is_none() {
                let seed = a.seed.unwrap_or(DEFAULT_SEED);
                corpus = carve_dev(&corpus, a.dev_fraction, seed)?;
                info!("carved {} dev sentences from train", corpus.split(Split::Dev).count());
            }
            let dev = corpus.subset(Split::Dev);
            if dev.is_empty() {
                return Err(Error::Config("no dev sentences to tune on".into()));
            }
            let probs = load_probabilities(&a.probs)?;
            let grid = ThresholdGrid::parse(&a.grid)?;
            let cfg = ReconstructionConfig::default().with_policy(a.overlap.into());
            let m = a.features.as_deref().map(|f| matrices(&corpus, f)).transpose()?;
            let result = grid_search(&dev, &probs, &grid, &cfg, m.as_ref())?;
            write_trace(&result.trace, &a.out)?;
            println!(
                "{}",
                serde_json::json!({ "best": result.best, "f1": result.best_f1 })
            );
        }
        Command::Evaluate(a) => {
            let mut gold = canonical(&a.gold)?;
            let mut predictions = load_predictions(&a.pred)?;
            if let Some(split) = a.split {
                let split = Split::from(split);
                predictions.retain(|p| gold.get(&p.sentence_id).is_none_or(|s| s.split == split));
                gold = gold.subset(split);
            }
            let report = evaluate(&predictions, &gold)?;
            let table = report.render_table();
            let mut json = to_json(&report);
            json.push('\n');
            write_bytes(&a.out, json.as_bytes())?;
            let mut table_path = a.out.with_extension("txt");
            if table_path == a.out {
                table_path = a.out.with_extension("table.txt");
            }
            write_bytes(&table_path, table.as_bytes())?;
            print!("{table}");
        }
        Command::Augment(a) => {
            let cfg = AugmentConfig {
                strategy: match a.strategy {
                    StrategyArg::Oversample => AugmentStrategy::Oversample,
                    StrategyArg::Lexsub => AugmentStrategy::LexSub,
                },
                ratio: a.ratio,
                seed: a.seed.unwrap_or(DEFAULT_SEED),
            };
            cfg.validate()?;
            if !cfg.is_standard_ratio() {
                warn!("ratio {} is outside the evaluated set 0.10/0.20/0.30/0.40", cfg.ratio);
            }
            let lexicon = a.lexicon.as_deref().map(SubstitutionLexicon::load).transpose()?;
            let corpus = canonical(&a.input)?;
            let outcome = augment(&corpus, &cfg, lexicon.as_ref())?;
            if outcome.skipped > 0 {
                warn!("{} selected sentences had no substitutable token", outcome.skipped);
            }
            write_corpus(&outcome.corpus, &a.out)?;
            info!("selected {}, emitted {}", outcome.selected, outcome.emitted);
        }
        Command::Pipeline(a) => {
            let (manifest, base) = RunManifest::load(&a.manifest)?;
            if let Some(aug) = &manifest.augmentation {
                let cfg = AugmentConfig { strategy: aug.strategy, ratio: aug.ratio, seed: 0 };
                if !cfg.is_standard_ratio() {
                    warn!("ratio {} is outside the evaluated set 0.10/0.20/0.30/0.40", aug.ratio);
                }
            }
            let outcome = run_pipeline(&manifest, &base, a.seed)?;
            print!("{}", outcome.report.render_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot set worker count: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
