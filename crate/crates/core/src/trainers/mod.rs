//! Gradient-trained models: SGNS vectors, Word2DM and multi-sense Word2DM.
//!
//! All three share the corpus pipeline, batch-accumulated gradients (one
//! optimizer step per batch of sentences) and the parameter store in
//! [`params`]. With one worker the run is bit-for-bit reproducible; with more,
//! workers own contiguous sentence shards and update shared parameters
//! without locking.

mod objectives;
mod params;

use std::thread;

use crate::corpus::{
    stream_rng, training_windows, NegativeLayout, RngStream, SamplingRngs, SenseMetric, TrainingConfig,
    TrainingPair, Vocabulary,
};
use crate::densecore::{density_from_intermediary, normalize_trace, IntermediaryMatrix};
use crate::error::{Error, Result};
use crate::lexicon::{DensityLexicon, Representations, VectorLexicon};

pub use objectives::{
    log_sigmoid, ms_context_embedding, ms_objective_and_grads, ms_select_sense, sgns_objective_and_grads,
    sigmoid, word2dm_grads, word2dm_objective, VectorGrads, Word2DmGrads,
};

use objectives::{axpy, best_sense, word2dm_accumulate, Word2DmScratch};
use params::{GradBatch, Optimizer, ParamTable, Trainable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Sgns,
    Word2Dm,
    MsWord2Dm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sgns => "sgns",
            ModelKind::Word2Dm => "word2dm",
            ModelKind::MsWord2Dm => "ms-word2dm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgns" => Ok(ModelKind::Sgns),
            "word2dm" => Ok(ModelKind::Word2Dm),
            "ms-word2dm" | "ms_word2dm" => Ok(ModelKind::MsWord2Dm),
            other => Err(Error::Config(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Skip-gram vectors: `V × n` target and context tables, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnsModel {
    pub dim: usize,
    pub target_vecs: Vec<f64>,
    pub context_vecs: Vec<f64>,
}

impl SgnsModel {
    pub fn target(&self, id: u32) -> &[f64] {
        row(&self.target_vecs, self.dim, id as usize)
    }
}

/// Target-side and context-side intermediary matrices, one `n × m` block per word.
#[derive(Clone, Debug, PartialEq)]
pub struct Word2DmModel {
    pub dim: usize,
    pub cols: usize,
    pub target_b: Vec<f64>,
    pub context_b: Vec<f64>,
}

impl Word2DmModel {
    pub fn target(&self, id: u32) -> IntermediaryMatrix {
        let block = row(&self.target_b, self.dim * self.cols, id as usize);
        IntermediaryMatrix::from_row_major(self.dim, self.cols, block.to_vec()).expect("finite parameters")
    }
}

/// Sense vectors (`m` per word, stored contiguously) and context vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct MsWord2DmModel {
    pub dim: usize,
    pub senses: usize,
    /// Word `w`'s sense `s` is row `w·m + s` of width `n`.
    pub sense_vecs: Vec<f64>,
    pub context_vecs: Vec<f64>,
}

impl MsWord2DmModel {
    /// The `n × m` intermediary matrix whose columns are the word's senses.
    pub fn senses_of(&self, id: u32) -> IntermediaryMatrix {
        let (n, m) = (self.dim, self.senses);
        let block = row(&self.sense_vecs, n * m, id as usize);
        let mut data = vec![0.0; n * m];
        for s in 0..m {
            for i in 0..n {
                data[i * m + s] = block[s * n + i];
            }
        }
        IntermediaryMatrix::from_row_major(n, m, data).expect("finite parameters")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainedModel {
    Sgns(SgnsModel),
    Word2Dm(Word2DmModel),
    MsWord2Dm(MsWord2DmModel),
}

impl TrainedModel {
    /// Exported representations keyed by vocabulary surface form.
    ///
    /// Density models export `B Bᵀ` of the target-side parameters,
    /// normalized to unit trace; SGNS exports its target vectors.
    pub fn export(&self, vocab: &Vocabulary) -> Result<Representations> {
        match self {
            TrainedModel::Sgns(m) => {
                let mut lex = VectorLexicon::new(m.dim);
                for (id, word) in vocab.words().iter().enumerate() {
                    lex.insert(word.clone(), m.target(id as u32).to_vec())?;
                }
                Ok(Representations::Vector(lex))
            }
            TrainedModel::Word2Dm(m) => {
                let mut lex = DensityLexicon::new(m.dim);
                for (id, word) in vocab.words().iter().enumerate() {
                    let rho = normalize_trace(&density_from_intermediary(&m.target(id as u32)))?;
                    lex.insert(word.clone(), rho)?;
                }
                Ok(Representations::Density(lex))
            }
            TrainedModel::MsWord2Dm(m) => {
                let mut lex = DensityLexicon::new(m.dim);
                for (id, word) in vocab.words().iter().enumerate() {
                    let rho = normalize_trace(&density_from_intermediary(&m.senses_of(id as u32)))?;
                    lex.insert(word.clone(), rho)?;
                }
                Ok(Representations::Density(lex))
            }
        }
    }
}

/// Loss summary of one epoch. `mean_loss` is the mean of `−J` per prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub predictions: u64,
}

/// Live view of a model during training, used for per-epoch checkpoints.
pub trait Snapshot {
    fn snapshot(&self) -> TrainedModel;
}

/// Trains `kind` on an encoded corpus.
pub fn train_model(
    kind: ModelKind,
    corpus: &[Vec<u32>],
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<(TrainedModel, Vec<EpochStats>)> {
    train_model_with(kind, corpus, vocab, config, |_, _| Ok(()))
}

/// [`train_model`] with a callback after every epoch.
pub fn train_model_with<F>(
    kind: ModelKind,
    corpus: &[Vec<u32>],
    vocab: &Vocabulary,
    config: &TrainingConfig,
    on_epoch: F,
) -> Result<(TrainedModel, Vec<EpochStats>)>
where
    F: FnMut(&EpochStats, &dyn Snapshot) -> Result<()>,
{
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary("cannot train on an empty vocabulary".into()));
    }
    match kind {
        ModelKind::Sgns => run(&SgnsTrainer::new(vocab.len(), config), corpus, vocab, config, on_epoch),
        ModelKind::Word2Dm => run(&Word2DmTrainer::new(vocab.len(), config), corpus, vocab, config, on_epoch),
        ModelKind::MsWord2Dm => run(&MsTrainer::new(vocab.len(), config), corpus, vocab, config, on_epoch),
    }
}

trait Objective: Sync + Snapshot {
    type Scratch;

    fn layout(&self) -> NegativeLayout;
    fn trainables(&self) -> Vec<&Trainable>;
    fn scratch(&self) -> Self::Scratch;
    /// Adds one pair's gradients to `batch`; returns `(Σ J, predictions)`.
    fn accumulate(&self, pair: &TrainingPair, batch: &mut GradBatch, scratch: &mut Self::Scratch) -> (f64, u64);
}

fn run<T, F>(
    trainer: &T,
    corpus: &[Vec<u32>],
    vocab: &Vocabulary,
    config: &TrainingConfig,
    mut on_epoch: F,
) -> Result<(TrainedModel, Vec<EpochStats>)>
where
    T: Objective,
    F: FnMut(&EpochStats, &dyn Snapshot) -> Result<()>,
{
    let optimizer = Optimizer::new(config.learning_rate);
    let workers = config.threads.min(corpus.len()).max(1);
    let mut rngs: Vec<SamplingRngs> = (0..workers as u64).map(|s| SamplingRngs::new(config.seed, s)).collect();
    let shard_len = corpus.len().div_ceil(workers).max(1);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let results: Vec<Result<(f64, u64)>> = if workers == 1 {
            vec![run_shard(trainer, corpus, vocab, config, &optimizer, &mut rngs[0])]
        } else {
            thread::scope(|scope| {
                let handles: Vec<_> = corpus
                    .chunks(shard_len)
                    .zip(rngs.iter_mut())
                    .map(|(shard, rng)| {
                        let optimizer = &optimizer;
                        scope.spawn(move || run_shard(trainer, shard, vocab, config, optimizer, rng))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };
        let mut objective = 0.0;
        let mut predictions = 0;
        for r in results {
            let (j, n) = r?;
            objective += j;
            predictions += n;
        }
        let mean_loss = if predictions > 0 { -objective / predictions as f64 } else { 0.0 };
        if !mean_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss diverged in epoch {}", epoch + 1)));
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            mean_loss,
            predictions,
        };
        on_epoch(&stats, trainer)?;
        history.push(stats);
    }
    Ok((trainer.snapshot(), history))
}

fn run_shard<T: Objective>(
    trainer: &T,
    sentences: &[Vec<u32>],
    vocab: &Vocabulary,
    config: &TrainingConfig,
    optimizer: &Optimizer,
    rngs: &mut SamplingRngs,
) -> Result<(f64, u64)> {
    let trainables = trainer.trainables();
    let mut batch = GradBatch::new(trainables.len());
    let mut scratch = trainer.scratch();
    let mut objective = 0.0;
    let mut predictions = 0;
    for chunk in sentences.chunks(config.batch_sentences) {
        for sentence in chunk {
            for pair in training_windows(sentence, config, vocab, rngs, trainer.layout())? {
                let (j, n) = trainer.accumulate(&pair, &mut batch, &mut scratch);
                objective += j;
                predictions += n;
            }
        }
        if !objective.is_finite() {
            return Err(Error::NonFinite("non-finite objective during training".into()));
        }
        batch.apply(optimizer, &trainables);
    }
    Ok((objective, predictions))
}

fn row(data: &[f64], width: usize, r: usize) -> &[f64] {
    &data[r * width..(r + 1) * width]
}

fn init_rng(config: &TrainingConfig) -> rand_chacha::ChaCha8Rng {
    stream_rng(config.seed, RngStream::Init, 0)
}

struct SgnsTrainer {
    dim: usize,
    target: Trainable,
    context: Trainable,
}

impl SgnsTrainer {
    fn new(vocab_len: usize, config: &TrainingConfig) -> Self {
        let mut rng = init_rng(config);
        let n = config.dim;
        let target = ParamTable::uniform(vocab_len, n, n, &mut rng);
        let context = ParamTable::uniform(vocab_len, n, n, &mut rng);
        SgnsTrainer {
            dim: n,
            target: Trainable::new(target, config.optimizer),
            context: Trainable::new(context, config.optimizer),
        }
    }
}

impl Snapshot for SgnsTrainer {
    fn snapshot(&self) -> TrainedModel {
        TrainedModel::Sgns(SgnsModel {
            dim: self.dim,
            target_vecs: self.target.params.snapshot(),
            context_vecs: self.context.params.snapshot(),
        })
    }
}

impl Objective for SgnsTrainer {
    type Scratch = ();

    fn layout(&self) -> NegativeLayout {
        NegativeLayout::PerContext
    }

    fn trainables(&self) -> Vec<&Trainable> {
        vec![&self.target, &self.context]
    }

    fn scratch(&self) {}

    fn accumulate(&self, pair: &TrainingPair, batch: &mut GradBatch, _: &mut ()) -> (f64, u64) {
        let vt = self.target.params.row(pair.target as usize);
        let mut objective = 0.0;
        for (&c, negs) in pair.contexts.iter().zip(&pair.negatives) {
            let vc = self.context.params.row(c as usize);
            let neg_vecs: Vec<Vec<f64>> = negs.iter().map(|&k| self.context.params.row(k as usize)).collect();
            let neg_refs: Vec<&[f64]> = neg_vecs.iter().map(Vec::as_slice).collect();
            let g = sgns_objective_and_grads(&vt, &vc, &neg_refs).expect("table widths agree");
            objective += g.objective;
            batch.add(0, pair.target as usize, &g.target);
            batch.add(1, c as usize, &g.context);
            for (&k, gk) in negs.iter().zip(&g.negatives) {
                batch.add(1, k as usize, gk);
            }
        }
        (objective, pair.contexts.len() as u64)
    }
}

struct Word2DmTrainer {
    dim: usize,
    cols: usize,
    target: Trainable,
    context: Trainable,
}

impl Word2DmTrainer {
    fn new(vocab_len: usize, config: &TrainingConfig) -> Self {
        let mut rng = init_rng(config);
        let (n, m) = (config.dim, config.senses);
        let target = ParamTable::uniform(vocab_len, n * m, n, &mut rng);
        let context = ParamTable::uniform(vocab_len, n * m, n, &mut rng);
        Word2DmTrainer {
            dim: n,
            cols: m,
            target: Trainable::new(target, config.optimizer),
            context: Trainable::new(context, config.optimizer),
        }
    }
}

impl Snapshot for Word2DmTrainer {
    fn snapshot(&self) -> TrainedModel {
        TrainedModel::Word2Dm(Word2DmModel {
            dim: self.dim,
            cols: self.cols,
            target_b: self.target.params.snapshot(),
            context_b: self.context.params.snapshot(),
        })
    }
}

struct Word2DmBuffers {
    scratch: Word2DmScratch,
    grad_t: Vec<f64>,
    grad_c: Vec<f64>,
    grad_negs: Vec<Vec<f64>>,
}

impl Objective for Word2DmTrainer {
    type Scratch = Word2DmBuffers;

    fn layout(&self) -> NegativeLayout {
        NegativeLayout::PerContext
    }

    fn trainables(&self) -> Vec<&Trainable> {
        vec![&self.target, &self.context]
    }

    fn scratch(&self) -> Word2DmBuffers {
        let w = self.dim * self.cols;
        Word2DmBuffers {
            scratch: Word2DmScratch::new(self.dim, self.cols),
            grad_t: vec![0.0; w],
            grad_c: vec![0.0; w],
            grad_negs: Vec::new(),
        }
    }

    fn accumulate(&self, pair: &TrainingPair, batch: &mut GradBatch, buf: &mut Word2DmBuffers) -> (f64, u64) {
        let (n, m) = (self.dim, self.cols);
        let bt = self.target.params.row(pair.target as usize);
        let mut objective = 0.0;
        for (&c, negs) in pair.contexts.iter().zip(&pair.negatives) {
            let bc = self.context.params.row(c as usize);
            let neg_bs: Vec<Vec<f64>> = negs.iter().map(|&k| self.context.params.row(k as usize)).collect();
            let neg_refs: Vec<&[f64]> = neg_bs.iter().map(Vec::as_slice).collect();
            buf.grad_t.iter_mut().for_each(|v| *v = 0.0);
            buf.grad_c.iter_mut().for_each(|v| *v = 0.0);
            buf.grad_negs.resize_with(negs.len(), || vec![0.0; n * m]);
            buf.grad_negs.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            objective += word2dm_accumulate(
                &bt,
                &bc,
                &neg_refs,
                n,
                m,
                &mut buf.scratch,
                &mut buf.grad_t,
                &mut buf.grad_c,
                &mut buf.grad_negs[..negs.len()],
                None,
            );
            batch.add(0, pair.target as usize, &buf.grad_t);
            batch.add(1, c as usize, &buf.grad_c);
            for (&k, gk) in negs.iter().zip(&buf.grad_negs) {
                batch.add(1, k as usize, gk);
            }
        }
        (objective, pair.contexts.len() as u64)
    }
}

struct MsTrainer {
    dim: usize,
    senses: usize,
    metric: SenseMetric,
    sense: Trainable,
    context: Trainable,
}

impl MsTrainer {
    fn new(vocab_len: usize, config: &TrainingConfig) -> Self {
        let mut rng = init_rng(config);
        let (n, m) = (config.dim, config.senses);
        let sense = ParamTable::uniform(vocab_len * m, n, n, &mut rng);
        let context = ParamTable::uniform(vocab_len, n, n, &mut rng);
        MsTrainer {
            dim: n,
            senses: m,
            metric: config.sense_metric,
            sense: Trainable::new(sense, config.optimizer),
            context: Trainable::new(context, config.optimizer),
        }
    }

    /// Index of the sense row selected for `target` given a window sum.
    fn select(&self, target: u32, context_sum: &[f64]) -> usize {
        let m = self.senses;
        let rows: Vec<Vec<f64>> = (0..m).map(|s| self.sense.params.row(target as usize * m + s)).collect();
        best_sense(rows.iter().map(Vec::as_slice), context_sum, self.metric)
    }
}

impl Snapshot for MsTrainer {
    fn snapshot(&self) -> TrainedModel {
        TrainedModel::MsWord2Dm(MsWord2DmModel {
            dim: self.dim,
            senses: self.senses,
            sense_vecs: self.sense.params.snapshot(),
            context_vecs: self.context.params.snapshot(),
        })
    }
}

impl Objective for MsTrainer {
    type Scratch = Vec<f64>;

    fn layout(&self) -> NegativeLayout {
        NegativeLayout::PerTarget
    }

    fn trainables(&self) -> Vec<&Trainable> {
        vec![&self.sense, &self.context]
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn accumulate(&self, pair: &TrainingPair, batch: &mut GradBatch, ctx: &mut Vec<f64>) -> (f64, u64) {
        ctx.iter_mut().for_each(|v| *v = 0.0);
        let mut buf = vec![0.0; self.dim];
        for &c in &pair.contexts {
            self.context.params.read_row(c as usize, &mut buf);
            axpy(1.0, &buf, ctx);
        }
        let sense = self.select(pair.target, ctx);
        let sense_row = pair.target as usize * self.senses + sense;
        let b = self.sense.params.row(sense_row);
        let negs = &pair.negatives[0];
        let neg_vecs: Vec<Vec<f64>> = negs.iter().map(|&k| self.context.params.row(k as usize)).collect();
        let neg_refs: Vec<&[f64]> = neg_vecs.iter().map(Vec::as_slice).collect();
        let g = ms_objective_and_grads(&b, ctx, &neg_refs).expect("table widths agree");
        batch.add(0, sense_row, &g.target);
        // ∂c_t/∂v_i is the identity for every summand
        for &c in &pair.contexts {
            batch.add(1, c as usize, &g.context);
        }
        for (&k, gk) in negs.iter().zip(&g.negatives) {
            batch.add(1, k as usize, gk);
        }
        (g.objective, 1)
    }
}
