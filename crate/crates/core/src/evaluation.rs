//! Correlation statistics and the evaluation harnesses.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::debug;

use crate::composition::{compose_phrase, lookup, Method, PhraseTree, Representation, Structure, SvOrder};
use crate::densecore::{normalize_trace, trace_inner_product, von_neumann_entropy, DensityMatrix};
use crate::error::{Error, Result};
use crate::lexicon::{DensityLexicon, Representations};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub spearman: f64,
    pub pearson: f64,
}

/// Spearman (Pearson over average ranks) and Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::dims(format!("{} values", xs.len()), format!("{} values", ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::UndefinedCorrelation(format!("need at least 3 pairs, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlation input".into()));
    }
    Ok(Correlation {
        pearson: pearson(xs, ys)?,
        spearman: pearson(&average_ranks(xs), &average_ranks(ys))?,
    })
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if flat(xs) || flat(ys) {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// All values equal up to rounding (relative spread ≤ 1e-12).
fn flat(values: &[f64]) -> bool {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo <= 1e-12 * lo.abs().max(hi.abs())
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Similarity between two meanings of the same kind.
///
/// Matrices are trace-normalized first and compared with `tr(XY)`, or with
/// `tr(XY)/(‖X‖_F‖Y‖_F)` when `normalized_trace` is set. Vectors use cosine.
pub fn similarity(a: &Representation, b: &Representation, normalized_trace: bool) -> Result<f64> {
    match (a, b) {
        (Representation::Density(x), Representation::Density(y)) => {
            let (x, y) = (normalize_trace(x)?, normalize_trace(y)?);
            let ip = trace_inner_product(&x, &y)?;
            if normalized_trace {
                Ok(ip / (x.as_matrix().norm() * y.as_matrix().norm()))
            } else {
                Ok(ip)
            }
        }
        (Representation::Vector(x), Representation::Vector(y)) => Ok(cosine(x, y)),
        _ => Err(Error::Config("cannot compare a matrix with a vector".into())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityItem {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisambiguationItem {
    pub id: String,
    pub structure: Structure,
    pub sentence1: Vec<String>,
    pub sentence2: Vec<String>,
    pub gold: f64,
}

impl DisambiguationItem {
    pub fn verbs(&self) -> (&str, &str) {
        let v = self.structure.verb_index();
        (&self.sentence1[v], &self.sentence2[v])
    }
}

fn data_lines<R: BufRead>(input: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    input.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_score(field: &str, label: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(label, line, format!("invalid score '{field}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(label, line, "score is not finite"));
    }
    Ok(v)
}

/// `word1<TAB>word2<TAB>score`; a non-numeric first row is a header.
pub fn parse_similarity<R: BufRead>(input: R, label: &str) -> Result<Vec<SimilarityItem>> {
    let mut items = Vec::new();
    for (no, line) in data_lines(input) {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(label, no, format!("expected 3 fields, got {}", fields.len())));
        }
        if no == 1 && fields[2].trim().parse::<f64>().is_err() {
            continue;
        }
        items.push(SimilarityItem {
            word1: fields[0].trim().to_string(),
            word2: fields[1].trim().to_string(),
            gold: parse_score(fields[2], label, no)?,
        });
    }
    Ok(items)
}

/// `id<TAB>structure<TAB>sentence1<TAB>sentence2<TAB>score`.
pub fn parse_disambiguation<R: BufRead>(input: R, label: &str) -> Result<Vec<DisambiguationItem>> {
    let mut items = Vec::new();
    for (no, line) in data_lines(input) {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(label, no, format!("expected 5 fields, got {}", fields.len())));
        }
        if no == 1 && fields[1].trim().eq_ignore_ascii_case("structure") {
            continue;
        }
        let structure: Structure = fields[1]
            .trim()
            .parse()
            .map_err(|e: Error| Error::parse(label, no, e.to_string()))?;
        let sentence = |f: &str| -> Result<Vec<String>> {
            let toks: Vec<String> = f.split_whitespace().map(str::to_string).collect();
            if toks.len() != structure.arity() {
                return Err(Error::parse(
                    label,
                    no,
                    format!("{structure} sentence needs {} tokens, got {}", structure.arity(), toks.len()),
                ));
            }
            Ok(toks)
        };
        items.push(DisambiguationItem {
            id: fields[0].trim().to_string(),
            structure,
            sentence1: sentence(fields[2])?,
            sentence2: sentence(fields[3])?,
            gold: parse_score(fields[4], label, no)?,
        });
    }
    Ok(items)
}

/// `word<TAB>count`.
pub fn parse_synset_counts<R: BufRead>(input: R, label: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (no, line) in data_lines(input) {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(label, no, format!("expected 2 fields, got {}", fields.len())));
        }
        if no == 1 && fields[1].trim().parse::<f64>().is_err() {
            continue;
        }
        out.push((fields[0].trim().to_string(), parse_score(fields[1], label, no)?));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn read_similarity(path: &Path) -> Result<Vec<SimilarityItem>> {
    parse_similarity(open(path)?, &path.display().to_string())
}

pub fn read_disambiguation(path: &Path) -> Result<Vec<DisambiguationItem>> {
    parse_disambiguation(open(path)?, &path.display().to_string())
}

pub fn read_synset_counts(path: &Path) -> Result<Vec<(String, f64)>> {
    parse_synset_counts(open(path)?, &path.display().to_string())
}

/// Averages gold scores over rows that share a structure and sentence pair.
/// The first row's id is kept; order of first appearance is preserved.
pub fn average_annotations(items: &[DisambiguationItem]) -> Vec<DisambiguationItem> {
    let mut slots: HashMap<(Structure, &[String], &[String]), usize> = HashMap::new();
    let mut out: Vec<(DisambiguationItem, usize)> = Vec::new();
    for item in items {
        let key = (item.structure, item.sentence1.as_slice(), item.sentence2.as_slice());
        match slots.get(&key) {
            Some(&i) => {
                out[i].0.gold += item.gold;
                out[i].1 += 1;
            }
            None => {
                slots.insert(key, out.len());
                out.push((item.clone(), 1));
            }
        }
    }
    out.into_iter()
        .map(|(mut item, n)| {
            item.gold /= n as f64;
            item
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    pub spearman: f64,
    pub pearson: f64,
    pub evaluated: usize,
    pub total: usize,
}

impl EvalReport {
    pub fn coverage(&self) -> String {
        format!("{}/{}", self.evaluated, self.total)
    }
}

const REPORT_HEADER: [&str; 5] = ["dataset", "method", "spearman", "pearson", "coverage"];

fn report_rows(reports: &[EvalReport]) -> Vec<[String; 5]> {
    reports
        .iter()
        .map(|r| {
            [
                r.dataset.clone(),
                r.method.clone(),
                format!("{:.4}", r.spearman),
                format!("{:.4}", r.pearson),
                r.coverage(),
            ]
        })
        .collect()
}

/// Aligned plain-text table.
pub fn render_table(reports: &[EvalReport]) -> String {
    let header = REPORT_HEADER.map(String::from);
    let rows = report_rows(reports);
    let mut widths = header.clone().map(|h| h.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
    }
    out
}

pub fn render_tsv(reports: &[EvalReport]) -> String {
    let mut out = REPORT_HEADER.join("\t");
    out.push('\n');
    for row in report_rows(reports) {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

fn finish(dataset: &str, method: &str, model: &[f64], gold: &[f64], total: usize) -> Result<EvalReport> {
    if model.len() < 3 {
        return Err(Error::InsufficientData {
            message: format!("{dataset}: fewer than 3 evaluable items"),
            evaluated: model.len(),
            total,
        });
    }
    let c = correlation(model, gold)?;
    Ok(EvalReport {
        dataset: dataset.to_string(),
        method: method.to_string(),
        spearman: c.spearman,
        pearson: c.pearson,
        evaluated: model.len(),
        total,
    })
}

/// Correlates model similarity with gold scores; pairs with a missing word
/// are skipped and reflected in the coverage.
pub fn eval_word_similarity(
    dataset: &str,
    items: &[SimilarityItem],
    reps: &Representations,
    normalized_trace: bool,
) -> Result<EvalReport> {
    let mut model = Vec::new();
    let mut gold = Vec::new();
    for item in items {
        let (Ok(a), Ok(b)) = (lookup(reps, &item.word1), lookup(reps, &item.word2)) else {
            debug!("skipping {} / {}: missing word", item.word1, item.word2);
            continue;
        };
        model.push(similarity(&a, &b, normalized_trace)?);
        gold.push(item.gold);
    }
    let method = if reps.is_density() { "trace" } else { "cosine" };
    finish(dataset, method, &model, &gold, items.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisambiguationMode {
    /// Compare the two verbs without composition; the composer is ignored.
    VerbOnly,
    Composed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DisambiguationOptions {
    pub sv_order: SvOrder,
    pub normalized_trace: bool,
    /// Correlate every annotation row instead of per-pair means.
    pub per_annotation: bool,
}

pub fn eval_disambiguation(
    dataset: &str,
    items: &[DisambiguationItem],
    reps: &Representations,
    composer: Method,
    mode: DisambiguationMode,
    options: DisambiguationOptions,
) -> Result<EvalReport> {
    let averaged;
    let items = if options.per_annotation {
        items
    } else {
        averaged = average_annotations(items);
        &averaged
    };
    let mut model = Vec::new();
    let mut gold = Vec::new();
    for item in items {
        let pair = match mode {
            DisambiguationMode::VerbOnly => {
                let (v1, v2) = item.verbs();
                lookup(reps, v1).and_then(|a| Ok((a, lookup(reps, v2)?)))
            }
            DisambiguationMode::Composed => {
                let t1 = PhraseTree::from_structure(item.structure, &item.sentence1, options.sv_order)?;
                let t2 = PhraseTree::from_structure(item.structure, &item.sentence2, options.sv_order)?;
                compose_phrase(&t1, composer, reps).and_then(|a| Ok((a, compose_phrase(&t2, composer, reps)?)))
            }
        };
        let (a, b) = match pair {
            Ok(p) => p,
            Err(Error::MissingWord(w)) => {
                debug!("skipping item {}: missing word '{w}'", item.id);
                continue;
            }
            Err(e) => return Err(e),
        };
        match similarity(&a, &b, options.normalized_trace) {
            Ok(sim) => model.push(sim),
            // composition annihilated the phrase (e.g. mult of orthogonal states)
            Err(Error::Domain(msg)) => {
                debug!("skipping item {}: {msg}", item.id);
                continue;
            }
            Err(e) => return Err(e),
        }
        gold.push(item.gold);
    }
    let label = match mode {
        DisambiguationMode::VerbOnly => "verb",
        DisambiguationMode::Composed => composer.name(),
    };
    finish(dataset, label, &model, &gold, items.len())
}

/// Correlation between word entropies and synset counts over the words
/// present in both. Returns the correlation and the overlap size.
pub fn vne_polysemy_correlation(lexicon: &DensityLexicon, counts: &[(String, f64)]) -> Result<(Correlation, usize)> {
    let mut vne = Vec::new();
    let mut senses = Vec::new();
    for (word, count) in counts {
        if let Some(rho) = lexicon.get(word) {
            vne.push(von_neumann_entropy(rho, false)?);
            senses.push(*count);
        }
    }
    if vne.len() < 3 {
        return Err(Error::InsufficientData {
            message: "fewer than 3 words shared by lexicon and synset counts".into(),
            evaluated: vne.len(),
            total: counts.len(),
        });
    }
    Ok((correlation(&vne, &senses)?, vne.len()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VneReportOptions {
    pub renormalize: bool,
    /// Average over both sentences of each pair instead of only the first.
    pub both_sentences: bool,
    pub sv_order: SvOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VneReport {
    pub verb_mean: f64,
    pub composed: Vec<(Method, f64)>,
    pub evaluated: usize,
    pub total: usize,
}

impl VneReport {
    pub fn render_table(&self, dataset: &str) -> String {
        let mut header = vec!["dataset".to_string(), "verb".to_string()];
        let mut row = vec![dataset.to_string(), format!("{:.4}", self.verb_mean)];
        for (m, v) in &self.composed {
            header.push(m.name().to_string());
            row.push(format!("{v:.4}"));
        }
        header.push("coverage".into());
        row.push(format!("{}/{}", self.evaluated, self.total));
        let widths: Vec<usize> = header.iter().zip(&row).map(|(a, b)| a.len().max(b.len())).collect();
        let fmt = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        format!("{}\n{}\n", fmt(&header), fmt(&row))
    }
}

/// Mean entropy of the target verbs versus the mean entropy of the
/// composed sentences, per composition method. Sentences with a missing
/// word are skipped for every column so the averages share one item set.
pub fn vne_composition_report(
    items: &[DisambiguationItem],
    lexicon: &DensityLexicon,
    methods: &[Method],
    options: VneReportOptions,
) -> Result<VneReport> {
    let reps = Representations::Density(lexicon.clone());
    let mut sentences: Vec<(Structure, &[String])> = Vec::new();
    for item in items {
        sentences.push((item.structure, &item.sentence1));
        if options.both_sentences {
            sentences.push((item.structure, &item.sentence2));
        }
    }
    let total = sentences.len();
    sentences.retain(|(_, toks)| toks.iter().all(|t| lexicon.contains(t)));
    if sentences.is_empty() {
        return Err(Error::InsufficientData {
            message: "no sentence has all its words in the lexicon".into(),
            evaluated: 0,
            total,
        });
    }
    let n = sentences.len() as f64;
    let entropy = |rho: &DensityMatrix| von_neumann_entropy(rho, options.renormalize);

    let mut verb_sum = 0.0;
    for (structure, toks) in &sentences {
        let verb = lexicon.get(&toks[structure.verb_index()]).expect("checked above");
        verb_sum += entropy(verb)?;
    }
    let mut composed = Vec::new();
    for &method in methods {
        let mut sum = 0.0;
        for (structure, toks) in &sentences {
            let tree = PhraseTree::from_structure(*structure, toks, options.sv_order)?;
            let Representation::Density(rho) = compose_phrase(&tree, method, &reps)? else {
                unreachable!("density lexicon composes to matrices");
            };
            sum += entropy(&rho)?;
        }
        composed.push((method, sum / n));
    }
    Ok(VneReport {
        verb_mean: verb_sum / n,
        composed,
        evaluated: sentences.len(),
        total,
    })
}
