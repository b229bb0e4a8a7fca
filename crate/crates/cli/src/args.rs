use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lexdm::builders::ReductionMethod;
use lexdm::composition::{Method, SvOrder};
use lexdm::corpus::{OptimizerKind, SenseMetric, TrainingConfig};
use lexdm::evaluation::DisambiguationMode;
use lexdm::trainers::ModelKind;

/// Thread count used when neither --threads nor --deterministic is given.
pub const THREADS_ENV: &str = "LEXDM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lexdm", version, about = "Density-matrix word representations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count a corpus and write the vocabulary.
    Vocab(VocabArgs),
    /// Train SGNS, Word2DM or multi-sense Word2DM.
    Train(TrainArgs),
    /// Build density matrices from contextual embeddings (CEB1).
    #[command(name = "build-bert2dm")]
    BuildBert2dm(Bert2dmArgs),
    /// Build density matrices from clustered context vectors.
    #[command(name = "build-context2dm")]
    BuildContext2dm(Context2dmArgs),
    /// Compose structure-tagged phrases read from standard input.
    Compose(ComposeArgs),
    /// Correlate lexicon similarities with word-similarity ratings.
    #[command(name = "eval-wordsim")]
    EvalWordsim(WordsimArgs),
    /// Compositional disambiguation on SV/SVO/ASVAO datasets.
    #[command(name = "eval-disambig")]
    EvalDisambig(DisambigArgs),
    /// Average entropy of verbs before and after composition.
    #[command(name = "vne-report")]
    VneReport(VneReportArgs),
    /// Correlate word entropy with synset counts.
    #[command(name = "vne-synsets")]
    VneSynsets(VneSynsetsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Sgns,
    Word2dm,
    MsWord2dm,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sgns => ModelKind::Sgns,
            KindArg::Word2dm => ModelKind::Word2Dm,
            KindArg::MsWord2dm => ModelKind::MsWord2Dm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Cosine,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReductionArg {
    Pca,
    Svd,
}

impl From<ReductionArg> for ReductionMethod {
    fn from(r: ReductionArg) -> Self {
        match r {
            ReductionArg::Pca => ReductionMethod::Pca,
            ReductionArg::Svd => ReductionMethod::Svd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Add,
    Mult,
    Tensor,
    Phaser,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Add => Method::Add,
            MethodArg::Mult => Method::Mult,
            MethodArg::Tensor => Method::Tensor,
            MethodArg::Phaser => Method::Phaser,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SvOrderArg {
    /// The subject is the functor: f(s, v).
    SubjectFirst,
    /// The verb is the functor: f(v, s).
    VerbFirst,
}

impl From<SvOrderArg> for SvOrder {
    fn from(o: SvOrderArg) -> Self {
        match o {
            SvOrderArg::SubjectFirst => SvOrder::SubjectFirst,
            SvOrderArg::VerbFirst => SvOrder::VerbFirst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    VerbOnly,
    Composed,
}

impl From<ModeArg> for DisambiguationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::VerbOnly => DisambiguationMode::VerbOnly,
            ModeArg::Composed => DisambiguationMode::Composed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    #[default]
    Table,
    Tsv,
}

/// Where a report goes.
#[derive(Debug, Args)]
pub struct ReportOut {
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    pub format: FormatArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub min_count: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub subsample: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// One sentence per line, whitespace-tokenized.
    #[arg(long)]
    pub corpus: PathBuf,
    /// A vocabulary written by `vocab`; built from the corpus when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Word2dm)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 5)]
    pub senses: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Cosine)]
    pub sense_metric: MetricArg,
    #[arg(long, default_value_t = 17)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    /// Subsampling rate; 0 disables subsampling.
    #[arg(long, default_value_t = 1e-5)]
    pub subsample: f64,
    #[arg(long, default_value_t = 50)]
    pub min_count: u64,
    #[arg(long, default_value_t = 4)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_sentences: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads [default: all cores].
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Single-threaded, bit-for-bit reproducible training.
    #[arg(long)]
    pub deterministic: bool,
    /// Also write the lexicon after every epoch under `checkpoints/`.
    #[arg(long)]
    pub checkpoints: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl TrainArgs {
    pub fn resolved_threads(&self) -> usize {
        if self.deterministic {
            return 1;
        }
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn config(&self) -> TrainingConfig {
        TrainingConfig {
            window: self.window,
            negatives: self.negatives,
            subsample: self.subsample,
            min_count: self.min_count,
            dim: self.dim,
            senses: self.senses,
            learning_rate: self.lr,
            batch_sentences: self.batch_sentences,
            epochs: self.epochs,
            seed: self.seed,
            optimizer: match self.optimizer {
                OptimizerArg::Adam => OptimizerKind::Adam,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            },
            sense_metric: match self.sense_metric {
                MetricArg::Cosine => SenseMetric::Cosine,
                MetricArg::Dot => SenseMetric::Dot,
            },
            threads: self.resolved_threads(),
        }
    }
}

#[derive(Debug, Args)]
pub struct Bert2dmArgs {
    /// CEB1 contextual embeddings.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, value_enum, default_value_t = ReductionArg::Pca)]
    pub method: ReductionArg,
    #[arg(long, default_value_t = 17)]
    pub dim: usize,
    /// Cluster each word's occurrences before reducing.
    #[arg(long)]
    pub cluster: bool,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// One word per line; their occurrences are dropped.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct Context2dmArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Word vectors in word2vec text format.
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long, value_enum, default_value_t = SvOrderArg::SubjectFirst)]
    pub sv_order: SvOrderArg,
    /// Read phrases from this file instead of standard input.
    #[arg(long)]
    pub phrases: Option<PathBuf>,
    /// Write the composed lexicon and a manifest here instead of standard output.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WordsimArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// TSV files `word1 word2 score`.
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    /// Divide the trace inner product by both Frobenius norms.
    #[arg(long)]
    pub normalized_trace: bool,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Args)]
pub struct DisambigArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// TSV files `id structure sentence1 sentence2 score`.
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Composed)]
    pub mode: ModeArg,
    /// Comma-separated composers [default: all the lexicon supports].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = SvOrderArg::SubjectFirst)]
    pub sv_order: SvOrderArg,
    #[arg(long)]
    pub normalized_trace: bool,
    /// Correlate every annotation row instead of per-pair means.
    #[arg(long)]
    pub per_annotation: bool,
    #[command(flatten)]
    pub report: ReportOut,
}

#[derive(Debug, Args)]
pub struct VneReportArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<MethodArg>,
    /// Normalize composed matrices to unit trace before taking entropy.
    #[arg(long)]
    pub renormalize: bool,
    /// Average over both sentences of each pair, not only the first.
    #[arg(long)]
    pub both_sentences: bool,
    #[arg(long, value_enum, default_value_t = SvOrderArg::SubjectFirst)]
    pub sv_order: SvOrderArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VneSynsetsArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    /// TSV `word count`.
    #[arg(long)]
    pub synsets: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory for the re-run.
    #[arg(long)]
    pub out_dir: PathBuf,
}
