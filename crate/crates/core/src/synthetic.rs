//! Deterministic synthetic corpora and evaluation fixtures.
//!
//! Everything here is a pure function of its seed, so fixtures written to
//! disk can be regenerated and compared byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh", "tr"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai"];

/// The `index`-th pseudo-word: a bijective base-96 spelling in syllables,
/// always at least two syllables long.
pub fn pseudo_word(index: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    let mut n = index + base; // skip single-syllable words
    let mut sylls = Vec::new();
    loop {
        let s = n % base;
        sylls.push(format!("{}{}", ONSETS[s / VOWELS.len()], VOWELS[s % VOWELS.len()]));
        n /= base;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    sylls.reverse();
    sylls.concat()
}

#[derive(Clone, Debug)]
pub struct HomonymyConfig {
    pub seed: u64,
    pub sentences: usize,
    /// Vocabulary size of each of the two topics.
    pub topic_words: usize,
    /// Monosemous control words per topic.
    pub controls_per_topic: usize,
    /// Fraction of all sentences containing the pseudoword; each control
    /// has the same overall frequency.
    pub target_rate: f64,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for HomonymyConfig {
    fn default() -> Self {
        HomonymyConfig {
            seed: 7,
            sentences: 6000,
            topic_words: 40,
            controls_per_topic: 5,
            target_rate: 0.1,
            min_len: 8,
            max_len: 12,
        }
    }
}

/// A two-topic corpus in which `pseudoword` occurs in both topics and every
/// control occurs in exactly one.
#[derive(Clone, Debug)]
pub struct HomonymyCorpus {
    pub sentences: Vec<String>,
    pub pseudoword: String,
    pub controls: Vec<String>,
    /// One ordinary word from each topic, usable as a disambiguating cue.
    pub cues: [String; 2],
}

pub fn homonymy_corpus(config: &HomonymyConfig) -> HomonymyCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let topic = |t: usize| -> Vec<String> {
        let prefix = ["river", "money"][t];
        (0..config.topic_words).map(|i| format!("{prefix}{i:02}")).collect()
    };
    let topics = [topic(0), topic(1)];
    let controls: [Vec<String>; 2] = [0, 1].map(|t| {
        (0..config.controls_per_topic)
            .map(|i| format!("{}ctl{i}", ["river", "money"][t]))
            .collect()
    });
    let pseudoword = "bank".to_string();

    let mut sentences = Vec::with_capacity(config.sentences);
    for s in 0..config.sentences {
        let t = s % 2;
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut words: Vec<&str> = (0..len).map(|_| topics[t].choose(&mut rng).unwrap().as_str()).collect();
        let mut extra: Vec<&str> = Vec::new();
        if rng.gen_bool(config.target_rate) {
            extra.push(&pseudoword);
        }
        for c in &controls[t] {
            // a control sees only half the sentences, so double its rate
            if rng.gen_bool((2.0 * config.target_rate).min(1.0)) {
                extra.push(c);
            }
        }
        for w in extra {
            let pos = rng.gen_range(0..=words.len());
            words.insert(pos, w);
        }
        sentences.push(words.join(" "));
    }
    HomonymyCorpus {
        sentences,
        pseudoword,
        controls: controls.concat(),
        cues: [topics[0][0].clone(), topics[1][0].clone()],
    }
}

/// Word inventory of the bundled corpus.
#[derive(Clone, Debug)]
pub struct TopicLexicon {
    pub topics: usize,
    pub nouns: Vec<TopicWord>,
    pub verbs: Vec<TopicWord>,
    pub adjs: Vec<TopicWord>,
    pub function_words: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct TopicWord {
    pub surface: String,
    /// One topic for most words, two for the ambiguous ones.
    pub topics: Vec<usize>,
}

impl TopicLexicon {
    pub fn generate(seed: u64) -> Self {
        let topics = 24;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = 0usize;
        let mut fresh = |n: usize, rng: &mut ChaCha8Rng, ambiguous: f64| -> Vec<TopicWord> {
            (0..n)
                .map(|i| {
                    let surface = pseudo_word(next);
                    next += 1;
                    let first = i % topics;
                    let mut ts = vec![first];
                    if rng.gen_bool(ambiguous) {
                        let other = (first + rng.gen_range(1..topics)) % topics;
                        ts.push(other);
                    }
                    TopicWord { surface, topics: ts }
                })
                .collect()
        };
        let nouns = fresh(360, &mut rng, 0.1);
        let verbs = fresh(192, &mut rng, 0.35);
        let adjs = fresh(144, &mut rng, 0.1);
        let function_words = (next..next + 12).map(pseudo_word).collect();
        TopicLexicon {
            topics,
            nouns,
            verbs,
            adjs,
            function_words,
        }
    }

    fn in_topic(words: &[TopicWord], topic: usize) -> Vec<&TopicWord> {
        words.iter().filter(|w| w.topics.contains(&topic)).collect()
    }
}

/// Zipf-like weights `1/(rank+1)` for `n` items.
fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|r| 1.0 / (r as f64 + 1.0))).expect("non-empty")
}

/// A topical corpus of roughly `target_tokens` tokens built from
/// `adj noun verb adj noun` clauses padded with function words.
pub fn bundled_corpus(lexicon: &TopicLexicon, seed: u64, target_tokens: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_topic = |words: &[TopicWord]| -> Vec<Vec<String>> {
        (0..lexicon.topics)
            .map(|t| TopicLexicon::in_topic(words, t).into_iter().map(|w| w.surface.clone()).collect())
            .collect()
    };
    let (nouns, verbs, adjs) = (by_topic(&lexicon.nouns), by_topic(&lexicon.verbs), by_topic(&lexicon.adjs));
    let topic_dist = zipf(lexicon.topics);
    let func_dist = zipf(lexicon.function_words.len());

    let mut out = Vec::new();
    let mut tokens = 0;
    while tokens < target_tokens {
        let t = topic_dist.sample(&mut rng);
        let pick = |pool: &[Vec<String>], rng: &mut ChaCha8Rng| -> String {
            let p = &pool[t];
            p[zipf(p.len()).sample(rng)].clone()
        };
        let mut words = Vec::new();
        let func = |rng: &mut ChaCha8Rng| lexicon.function_words[func_dist.sample(rng)].clone();
        words.push(func(&mut rng));
        if rng.gen_bool(0.6) {
            words.push(pick(&adjs, &mut rng));
        }
        words.push(pick(&nouns, &mut rng));
        words.push(pick(&verbs, &mut rng));
        words.push(func(&mut rng));
        if rng.gen_bool(0.6) {
            words.push(pick(&adjs, &mut rng));
        }
        words.push(pick(&nouns, &mut rng));
        if rng.gen_bool(0.5) {
            words.push(func(&mut rng));
            words.push(pick(&nouns, &mut rng));
        }
        tokens += words.len();
        out.push(words.join(" "));
    }
    out
}

/// The canonical fixture sets: name, structure tag, number of pairs.
pub const DISAMBIGUATION_FIXTURES: [(&str, &str, usize); 4] = [
    ("ml2008", "SV", 120),
    ("gs2011", "SVO", 200),
    ("gs2012", "ASVAO", 194),
    ("ks2013", "ASVAO", 194),
];

/// Disambiguation pairs: an ambiguous verb in a context from one of its
/// topics, paired with a landmark verb that matches (high score) or does
/// not match (low score) that topic.
pub fn disambiguation_fixture(lexicon: &TopicLexicon, structure: &str, pairs: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ambiguous: Vec<&TopicWord> = lexicon.verbs.iter().filter(|v| v.topics.len() == 2).collect();
    let landmarks = |t: usize| -> Vec<&TopicWord> {
        lexicon.verbs.iter().filter(|v| v.topics == [t]).collect()
    };
    let pick = |pool: &[TopicWord], t: usize, rng: &mut ChaCha8Rng| -> String {
        let cands = TopicLexicon::in_topic(pool, t);
        cands.choose(rng).map(|w| w.surface.clone()).unwrap_or_else(|| pool[0].surface.clone())
    };

    let mut text = String::from("id\tstructure\tsentence1\tsentence2\tscore\n");
    for i in 0..pairs {
        let verb = ambiguous[i % ambiguous.len()];
        let context = verb.topics[rng.gen_range(0..2)];
        let matching = rng.gen_bool(0.5);
        let landmark_topic = if matching {
            context
        } else {
            *verb.topics.iter().find(|&&t| t != context).unwrap()
        };
        let landmark = landmarks(landmark_topic)
            .choose(&mut rng)
            .map(|w| w.surface.clone())
            .unwrap_or_else(|| verb.surface.clone());
        let subj = pick(&lexicon.nouns, context, &mut rng);
        let obj = pick(&lexicon.nouns, context, &mut rng);
        let (adj_s, adj_o) = (pick(&lexicon.adjs, context, &mut rng), pick(&lexicon.adjs, context, &mut rng));
        let sentence = |v: &str| match structure {
            "SV" => format!("{subj} {v}"),
            "SVO" => format!("{subj} {v} {obj}"),
            _ => format!("{adj_s} {subj} {v} {adj_o} {obj}"),
        };
        let base = if matching { 5.5 } else { 2.0 };
        let score = base + rng.gen_range(-1.0..1.0_f64);
        writeln!(
            text,
            "{}\t{structure}\t{}\t{}\t{score:.2}",
            i + 1,
            sentence(&verb.surface),
            sentence(&landmark)
        )
        .unwrap();
    }
    text
}

/// Word pairs scored by topic overlap.
pub fn similarity_fixture(lexicon: &TopicLexicon, pairs: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("word1\tword2\tscore\n");
    let nouns = &lexicon.nouns[..lexicon.nouns.len().min(96)];
    for _ in 0..pairs {
        let a = nouns.choose(&mut rng).unwrap();
        let b = nouns.choose(&mut rng).unwrap();
        let shared = a.topics.iter().filter(|t| b.topics.contains(t)).count();
        let score = if shared > 0 { 7.0 } else { 2.0 } + rng.gen_range(-1.5..1.5_f64);
        writeln!(text, "{}\t{}\t{score:.2}", a.surface, b.surface).unwrap();
    }
    text
}

/// Topic counts standing in for synset counts.
pub fn synset_fixture(lexicon: &TopicLexicon) -> String {
    let mut text = String::from("word\tcount\n");
    for w in lexicon.nouns.iter().chain(&lexicon.verbs).chain(&lexicon.adjs) {
        writeln!(text, "{}\t{}", w.surface, w.topics.len()).unwrap();
    }
    text
}

pub const FIXTURE_SEED: u64 = 2024;
pub const CORPUS_FILE: &str = "corpus.txt";

/// All bundled fixture files as `(file name, contents)`.
pub fn fixture_files() -> Vec<(String, String)> {
    let lexicon = TopicLexicon::generate(FIXTURE_SEED);
    let mut corpus = bundled_corpus(&lexicon, FIXTURE_SEED + 1, 200_000).join("\n");
    corpus.push('\n');
    let mut files = vec![(CORPUS_FILE.to_string(), corpus)];
    for (i, (name, structure, pairs)) in DISAMBIGUATION_FIXTURES.iter().enumerate() {
        files.push((
            format!("{name}.tsv"),
            disambiguation_fixture(&lexicon, structure, *pairs, FIXTURE_SEED + 10 + i as u64),
        ));
    }
    files.push(("wordsim.tsv".into(), similarity_fixture(&lexicon, 150, FIXTURE_SEED + 20)));
    files.push(("synsets.tsv".into(), synset_fixture(&lexicon)));
    files
}

pub fn write_fixtures(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in fixture_files() {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
