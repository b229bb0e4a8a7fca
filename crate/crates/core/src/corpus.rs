//! Corpus streaming, vocabulary construction and training-pair generation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};

/// Exponent applied to unigram counts for the negative-sampling distribution.
pub const NEGATIVE_EXPONENT: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SenseMetric {
    Cosine,
    Dot,
}

/// Hyperparameters shared by the corpus pipeline and the trainers.
///
/// Defaults follow the published training setup: window 5, 5 negatives,
/// subsampling 1e-5, min count 50, 17 dimensions, Adam at 0.001, 16 sentences
/// per batch, 4 epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub window: usize,
    pub negatives: usize,
    /// Subsampling rate `t`; `0` disables subsampling.
    pub subsample: f64,
    pub min_count: u64,
    pub dim: usize,
    pub senses: usize,
    pub learning_rate: f64,
    pub batch_sentences: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub sense_metric: SenseMetric,
    /// Worker count. `1` is the deterministic mode.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            window: 5,
            negatives: 5,
            subsample: 1e-5,
            min_count: 50,
            dim: 17,
            senses: 5,
            learning_rate: 0.001,
            batch_sentences: 16,
            epochs: 4,
            seed: 1,
            optimizer: OptimizerKind::Adam,
            sense_metric: SenseMetric::Cosine,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.window < 1 {
            return fail("window must be at least 1");
        }
        if self.dim < 1 {
            return fail("dimension must be at least 1");
        }
        if self.senses < 1 {
            return fail("sense count must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return fail("learning rate must be positive");
        }
        if !(self.subsample >= 0.0) {
            return fail("subsampling rate must be non-negative");
        }
        if self.batch_sentences < 1 {
            return fail("batch size must be at least 1 sentence");
        }
        if self.threads < 1 {
            return fail("thread count must be at least 1");
        }
        Ok(())
    }
}

/// Named random sub-streams derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RngStream {
    Vocab = 0,
    Windows = 1,
    Negatives = 2,
    Init = 3,
}

/// A ChaCha generator for `stream`; `shard` separates parallel workers.
pub fn stream_rng(seed: u64, stream: RngStream, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | shard);
    rng
}

/// The per-worker generators consumed by [`training_windows`].
#[derive(Clone, Debug)]
pub struct SamplingRngs {
    pub windows: ChaCha8Rng,
    pub negatives: ChaCha8Rng,
}

impl SamplingRngs {
    pub fn new(seed: u64, shard: u64) -> Self {
        SamplingRngs {
            windows: stream_rng(seed, RngStream::Windows, shard),
            negatives: stream_rng(seed, RngStream::Negatives, shard),
        }
    }
}

/// `min(1, sqrt(t / f))`.
pub fn keep_probability(word_freq: f64, rate: f64) -> Result<f64> {
    if !(word_freq > 0.0) || word_freq > 1.0 {
        return Err(Error::Domain(format!("word frequency {word_freq} outside (0, 1]")));
    }
    if !(rate > 0.0) {
        return Err(Error::Domain(format!("subsampling rate {rate} must be positive")));
    }
    Ok((rate / word_freq).sqrt().min(1.0))
}

pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    keep_prob: Vec<f64>,
    neg_dist: Vec<f64>,
    neg_sampler: WeightedIndex<f64>,
}

impl std::fmt::Debug for Vocabulary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Vocabulary")
            .field("len", &self.words.len())
            .field("total_tokens", &self.total_tokens)
            .finish()
    }
}

impl Vocabulary {
    /// Builds a vocabulary from explicit `(word, count)` pairs.
    ///
    /// Words are ordered by descending count, ties by surface form, and ids
    /// are assigned densely in that order. `total_tokens` is the size of the
    /// full stream, including words that did not survive the cutoff.
    pub fn from_counts(
        counts: impl IntoIterator<Item = (String, u64)>,
        total_tokens: u64,
        subsample: f64,
    ) -> Result<Self> {
        let mut entries: Vec<(String, u64)> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary("no words survived the minimum count".into()));
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total_tokens = total_tokens.max(entries.iter().map(|e| e.1).sum());

        let mut words = Vec::with_capacity(entries.len());
        let mut word_counts = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (word, count)) in entries.into_iter().enumerate() {
            if index.insert(word.clone(), id as u32).is_some() {
                return Err(Error::Domain(format!("duplicate vocabulary entry '{word}'")));
            }
            words.push(word);
            word_counts.push(count);
        }

        let keep_prob = word_counts
            .iter()
            .map(|&c| {
                if subsample > 0.0 {
                    keep_probability(c as f64 / total_tokens as f64, subsample)
                } else {
                    Ok(1.0)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let weights: Vec<f64> = word_counts
            .iter()
            .map(|&c| (c as f64).powf(NEGATIVE_EXPONENT))
            .collect();
        let z: f64 = weights.iter().sum();
        let neg_dist: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let neg_sampler = WeightedIndex::new(&neg_dist)
            .map_err(|e| Error::Domain(format!("negative-sampling distribution: {e}")))?;

        Ok(Vocabulary {
            words,
            counts: word_counts,
            index,
            total_tokens,
            keep_prob,
            neg_dist,
            neg_sampler,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn keep_prob(&self, id: u32) -> f64 {
        self.keep_prob[id as usize]
    }

    pub fn neg_dist(&self) -> &[f64] {
        &self.neg_dist
    }

    /// Maps a whitespace-tokenized sentence to ids, dropping unknown words.
    pub fn encode(&self, sentence: &str) -> Vec<u32> {
        tokens(sentence).filter_map(|t| self.id(t)).collect()
    }

    /// Text export: `V total_tokens`, then `word count` per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.total_tokens)?;
        for (word, count) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{word} {count}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R, label: &str, subsample: f64) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => return Err(Error::parse(label, 1, "missing header")),
        };
        let mut fields = header.split_whitespace();
        let declared: usize = parse_field(fields.next(), label, 1, "vocabulary size")?;
        let total: u64 = parse_field(fields.next(), label, 1, "token total")?;
        let mut counts = Vec::with_capacity(declared);
        for (i, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields
                .next()
                .ok_or_else(|| Error::parse(label, i + 1, "missing word"))?;
            let count: u64 = parse_field(fields.next(), label, i + 1, "count")?;
            counts.push((word.to_string(), count));
        }
        if counts.len() != declared {
            return Err(Error::parse(
                label,
                1,
                format!("header declares {declared} words, found {}", counts.len()),
            ));
        }
        Self::from_counts(counts, total, subsample)
    }
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    label: &str,
    line: usize,
    what: &str,
) -> Result<T> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::parse(label, line, format!("invalid or missing {what}")))
}

pub fn tokens(sentence: &str) -> impl Iterator<Item = &str> {
    sentence.split_whitespace()
}

/// Counts every token of the stream and keeps words with `count ≥ min_count`.
pub fn build_vocab<I, S>(sentences: I, config: &TrainingConfig) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for sentence in sentences {
        for token in tokens(sentence.as_ref()) {
            total += 1;
            match counts.get_mut(token) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(token.to_string(), 1);
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyVocabulary("corpus contains no tokens".into()));
    }
    let distinct = counts.len();
    let kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary(format!(
            "none of {distinct} distinct words reaches min_count {}",
            config.min_count
        )));
    }
    Vocabulary::from_counts(kept, total, config.subsample)
}

/// Reads a corpus file into memory, one sentence per line.
pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    reader.lines().map(|l| l.map_err(Error::from)).collect()
}

/// Encodes every sentence, dropping out-of-vocabulary tokens.
pub fn encode_corpus<S: AsRef<str>>(sentences: &[S], vocab: &Vocabulary) -> Vec<Vec<u32>> {
    sentences.iter().map(|s| vocab.encode(s.as_ref())).collect()
}

/// Draws one word from the smoothed unigram distribution, rejecting `exclude`.
pub fn sample_negative<R: Rng + ?Sized>(
    vocab: &Vocabulary,
    rng: &mut R,
    exclude: Option<u32>,
) -> Result<u32> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary("cannot sample from an empty vocabulary".into()));
    }
    match exclude {
        Some(_) if vocab.len() < 2 => Err(Error::Domain(
            "cannot exclude the only word of a single-word vocabulary".into(),
        )),
        Some(ex) => loop {
            let id = vocab.neg_sampler.sample(rng) as u32;
            if id != ex {
                return Ok(id);
            }
        },
        None => Ok(vocab.neg_sampler.sample(rng) as u32),
    }
}

/// One target position with its window and negative samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingPair {
    pub target: u32,
    pub contexts: Vec<u32>,
    /// One list per context, or a single list in [`NegativeLayout::PerTarget`].
    pub negatives: Vec<Vec<u32>>,
    /// Window radius drawn for this position.
    pub radius: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativeLayout {
    /// `K` negatives for every context word (SGNS, Word2DM).
    PerContext,
    /// `K` negatives for the whole window (multi-sense model).
    PerTarget,
}

/// Generates the training pairs of one encoded sentence.
///
/// Tokens are first subsampled with their keep probability; discarded tokens
/// do not occupy window slots. Each remaining position draws a radius from
/// `1..=window` and pairs with the tokens within that radius.
pub fn training_windows(
    sentence: &[u32],
    config: &TrainingConfig,
    vocab: &Vocabulary,
    rngs: &mut SamplingRngs,
    layout: NegativeLayout,
) -> Result<Vec<TrainingPair>> {
    let kept: Vec<u32> = if config.subsample > 0.0 {
        sentence
            .iter()
            .copied()
            .filter(|&w| {
                let p = vocab.keep_prob(w);
                p >= 1.0 || rngs.windows.gen::<f64>() < p
            })
            .collect()
    } else {
        sentence.to_vec()
    };

    let mut pairs = Vec::with_capacity(kept.len());
    for (pos, &target) in kept.iter().enumerate() {
        let radius = rngs.windows.gen_range(1..=config.window);
        let lo = pos.saturating_sub(radius);
        let hi = (pos + radius + 1).min(kept.len());
        let contexts: Vec<u32> = (lo..hi).filter(|&j| j != pos).map(|j| kept[j]).collect();
        if contexts.is_empty() {
            continue;
        }
        let lists = match layout {
            NegativeLayout::PerContext => contexts.len(),
            NegativeLayout::PerTarget => 1,
        };
        let mut negatives = Vec::with_capacity(lists);
        for _ in 0..lists {
            let draws = (0..config.negatives)
                .map(|_| sample_negative(vocab, &mut rngs.negatives, Some(target)))
                .collect::<Result<Vec<_>>>()?;
            negatives.push(draws);
        }
        pairs.push(TrainingPair {
            target,
            contexts,
            negatives,
            radius,
        });
    }
    Ok(pairs)
}
