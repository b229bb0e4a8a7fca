use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use lexdm::builders::{build_bert2dm, build_context2dm, ReductionSpec};
use lexdm::composition::{compose_phrase, Method, PhraseTree, Representation, Structure, SvOrder};
use lexdm::corpus::{build_vocab, encode_corpus, read_corpus, TrainingConfig, Vocabulary};
use lexdm::densecore::normalize_trace;
use lexdm::evaluation::{
    eval_disambiguation, eval_word_similarity, read_disambiguation, read_similarity, read_synset_counts,
    render_table, render_tsv, vne_composition_report, vne_polysemy_correlation, DisambiguationMode,
    DisambiguationOptions, EvalReport, VneReportOptions,
};
use lexdm::formats::{read_ceb_file, read_representations, read_vectors, read_word_list, write_dmat, write_representations};
use lexdm::lexicon::{DensityLexicon, Representations, VectorLexicon};
use lexdm::trainers::{train_model_with, ModelKind};
use log::{info, warn};

use crate::args::*;
use crate::manifest::{RunManifest, FILE_NAME};
use crate::CliResult;

pub const VOCAB_FILE: &str = "vocab.txt";
pub const DMAT_FILE: &str = "lexicon.dmat";
pub const VECTORS_FILE: &str = "vectors.txt";

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Vocab(a) => vocab(&a),
        Command::Train(a) => train(&a),
        Command::BuildBert2dm(a) => bert2dm(&a),
        Command::BuildContext2dm(a) => context2dm(&a),
        Command::Compose(a) => compose(&a),
        Command::EvalWordsim(a) => eval_wordsim(&a),
        Command::EvalDisambig(a) => eval_disambig(&a),
        Command::VneReport(a) => vne_report(&a),
        Command::VneSynsets(a) => vne_synsets(&a),
        Command::Replay(a) => replay(&a),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| format!("{}: {e}", path.display()))?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn density_lexicon(path: &Path) -> CliResult<DensityLexicon> {
    match read_representations(path)? {
        Representations::Density(lex) => Ok(lex),
        Representations::Vector(_) => Err(format!("{}: expected a DMAT density-matrix lexicon", path.display()).into()),
    }
}

fn vocab(a: &VocabArgs) -> CliResult<()> {
    let config = TrainingConfig {
        min_count: a.min_count,
        subsample: a.subsample,
        ..Default::default()
    };
    let sentences = read_corpus(&a.corpus)?;
    let vocab = build_vocab(sentences.iter(), &config)?;
    create_dir(&a.out_dir)?;
    let path = a.out_dir.join(VOCAB_FILE);
    write_file(&path, |out| vocab.write_to(out))?;

    let mut m = RunManifest::new("vocab");
    m.input("corpus", &a.corpus)?;
    m.flag("min-count", a.min_count);
    m.flag("subsample", a.subsample);
    m.set("words", vocab.len());
    m.set("tokens", vocab.total_tokens());
    m.output(&path)?;
    m.write_to_dir(&a.out_dir)?;
    eprintln!("{} words from {} tokens", vocab.len(), vocab.total_tokens());
    Ok(())
}

fn train(a: &TrainArgs) -> CliResult<()> {
    let config = a.config();
    if a.deterministic && a.threads.is_some_and(|t| t > 1) {
        warn!("--deterministic overrides --threads {}; training on one thread", a.threads.unwrap_or(1));
    }
    config.validate()?;
    let kind = ModelKind::from(a.kind);
    let sentences = read_corpus(&a.corpus)?;
    let vocab = match &a.vocab {
        Some(path) => Vocabulary::read_from(BufReader::new(File::open(path)?), &path.display().to_string(), a.subsample)?,
        None => build_vocab(sentences.iter(), &config)?,
    };
    let corpus = encode_corpus(&sentences, &vocab);
    info!("{} sentences, {} words, {} threads", corpus.len(), vocab.len(), config.threads);

    create_dir(&a.out_dir)?;
    let checkpoint_dir = a.out_dir.join("checkpoints");
    if a.checkpoints {
        create_dir(&checkpoint_dir)?;
    }
    let (model, _) = train_model_with(kind, &corpus, &vocab, &config, |stats, live| {
        eprintln!(
            "epoch {}/{}  loss {:.6}  predictions {}",
            stats.epoch,
            config.epochs,
            stats.mean_loss,
            stats.predictions
        );
        if a.checkpoints {
            let reps = live.snapshot().export(&vocab)?;
            let path = checkpoint_dir.join(format!("epoch-{}.{}", stats.epoch, extension(&reps)));
            write_file(&path, |out| write_representations(&reps, out)).map_err(|e| io::Error::other(e.to_string()))?;
        }
        Ok(())
    })?;
    let reps = model.export(&vocab)?;
    let lexicon_path = a.out_dir.join(artifact_name(&reps));
    write_file(&lexicon_path, |out| write_representations(&reps, out))?;
    let vocab_path = a.out_dir.join(VOCAB_FILE);
    write_file(&vocab_path, |out| vocab.write_to(out))?;

    let mut m = RunManifest::new("train");
    m.set("seed", config.seed);
    m.set("threads", config.threads);
    m.input("corpus", &a.corpus)?;
    if let Some(path) = &a.vocab {
        m.input("vocab", path)?;
    }
    m.flag("kind", kind.name());
    m.flag("senses", config.senses);
    m.flag("sense-metric", value_name(a.sense_metric));
    m.flag("dim", config.dim);
    m.flag("window", config.window);
    m.flag("negatives", config.negatives);
    m.flag("subsample", config.subsample);
    m.flag("min-count", config.min_count);
    m.flag("epochs", config.epochs);
    m.flag("lr", config.learning_rate);
    m.flag("batch-sentences", config.batch_sentences);
    m.flag("optimizer", value_name(a.optimizer));
    m.flag("seed", config.seed);
    m.flag("threads", config.threads);
    m.switch("deterministic", a.deterministic);
    m.switch("checkpoints", a.checkpoints);
    m.output(&lexicon_path)?;
    m.output(&vocab_path)?;
    m.write_to_dir(&a.out_dir)?;
    Ok(())
}

fn value_name<T: clap::ValueEnum>(v: T) -> String {
    v.to_possible_value().map_or_else(String::new, |p| p.get_name().to_string())
}

fn extension(reps: &Representations) -> &'static str {
    if reps.is_density() {
        "dmat"
    } else {
        "vec"
    }
}

fn artifact_name(reps: &Representations) -> &'static str {
    if reps.is_density() {
        DMAT_FILE
    } else {
        VECTORS_FILE
    }
}

fn bert2dm(a: &Bert2dmArgs) -> CliResult<()> {
    let embeddings = read_ceb_file(&a.embeddings).map_err(|e| format!("{}: {e}", a.embeddings.display()))?;
    let stop_words: HashSet<String> = match &a.stopwords {
        Some(path) => read_word_list(path)?.into_iter().collect(),
        None => HashSet::new(),
    };
    let spec = ReductionSpec {
        method: a.method.into(),
        out_dim: a.dim,
        cluster_first: a.cluster,
        k_min: a.k_min,
        k_max: a.k_max,
    };
    let lexicon = build_bert2dm(&embeddings, &spec, &stop_words)?;
    create_dir(&a.out_dir)?;
    let path = a.out_dir.join(DMAT_FILE);
    write_file(&path, |out| write_dmat(&lexicon, out))?;

    let mut m = RunManifest::new("build-bert2dm");
    m.input("embeddings", &a.embeddings)?;
    if let Some(path) = &a.stopwords {
        m.input("stopwords", path)?;
    }
    m.flag("method", value_name(a.method));
    m.flag("dim", a.dim);
    m.switch("cluster", a.cluster);
    m.flag("k-min", a.k_min);
    m.flag("k-max", a.k_max);
    m.set("records", embeddings.len());
    m.set("words", lexicon.len());
    m.output(&path)?;
    m.write_to_dir(&a.out_dir)?;
    eprintln!("{} words from {} occurrences", lexicon.len(), embeddings.len());
    Ok(())
}

fn context2dm(a: &Context2dmArgs) -> CliResult<()> {
    let label = a.vectors.display().to_string();
    let vectors: VectorLexicon = read_vectors(BufReader::new(File::open(&a.vectors)?), &label)?;
    let sentences = read_corpus(&a.corpus)?;
    let lexicon = build_context2dm(&sentences, &vectors, a.window, a.k_min, a.k_max)?;
    create_dir(&a.out_dir)?;
    let path = a.out_dir.join(DMAT_FILE);
    write_file(&path, |out| write_dmat(&lexicon, out))?;

    let mut m = RunManifest::new("build-context2dm");
    m.input("corpus", &a.corpus)?;
    m.input("vectors", &a.vectors)?;
    m.flag("window", a.window);
    m.flag("k-min", a.k_min);
    m.flag("k-max", a.k_max);
    m.set("words", lexicon.len());
    m.output(&path)?;
    m.write_to_dir(&a.out_dir)?;
    eprintln!("{} words", lexicon.len());
    Ok(())
}

/// One phrase per line: a structure tag followed by role-ordered tokens,
/// e.g. `SVO dog chases cat`. Blank lines and `#` comments are ignored.
fn parse_phrases(text: &str, label: &str) -> CliResult<Vec<(Structure, Vec<String>)>> {
    let mut phrases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        let structure: Structure = tag.parse().map_err(|e| format!("{label}:{}: {e}", i + 1))?;
        let tokens: Vec<String> = fields.map(str::to_string).collect();
        if tokens.len() != structure.arity() {
            return Err(format!(
                "{label}:{}: {} takes {} tokens, found {}",
                i + 1,
                structure.name(),
                structure.arity(),
                tokens.len()
            )
            .into());
        }
        phrases.push((structure, tokens));
    }
    Ok(phrases)
}

fn compose(a: &ComposeArgs) -> CliResult<()> {
    let reps = read_representations(&a.lexicon)?;
    let method = Method::from(a.method);
    if !reps.is_density() && !method.supports_vectors() {
        return Err(format!("{} composition needs a density-matrix lexicon", method.name()).into());
    }
    let mut text = String::new();
    let label = match &a.phrases {
        Some(path) => {
            text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            path.display().to_string()
        }
        None => {
            io::stdin().read_to_string(&mut text)?;
            "<stdin>".to_string()
        }
    };
    let phrases = parse_phrases(&text, &label)?;
    let sv_order = SvOrder::from(a.sv_order);

    let mut density = DensityLexicon::new(reps.dim());
    let mut vectors = VectorLexicon::new(reps.dim());
    let mut skipped = 0;
    for (structure, tokens) in &phrases {
        let key = tokens.join("_");
        let tree = PhraseTree::from_structure(*structure, tokens, sv_order)?;
        let composed = match compose_phrase(&tree, method, &reps) {
            Ok(c) => c,
            Err(lexdm::Error::MissingWord(w)) => {
                warn!("skipping '{}': '{w}' not in lexicon", tokens.join(" "));
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match composed {
            Representation::Density(rho) => match normalize_trace(&rho) {
                Ok(rho) => density.insert(key, rho)?,
                Err(_) => {
                    warn!("skipping '{}': composition has zero trace", tokens.join(" "));
                    skipped += 1;
                }
            },
            Representation::Vector(v) => vectors.insert(key, v)?,
        }
    }
    let out = if reps.is_density() {
        Representations::Density(density)
    } else {
        Representations::Vector(vectors)
    };
    eprintln!("composed {} of {} phrases", phrases.len() - skipped, phrases.len());

    let Some(dir) = &a.out_dir else {
        write_representations(&out, io::stdout().lock())?;
        return Ok(());
    };
    create_dir(dir)?;
    // keep a copy of the phrases so the manifest can replay the run
    let phrases_path = dir.join("phrases.txt");
    fs::write(&phrases_path, &text)?;
    let path = dir.join(artifact_name(&out));
    write_file(&path, |w| write_representations(&out, w))?;
    let mut m = RunManifest::new("compose");
    m.input("lexicon", &a.lexicon)?;
    m.input("phrases", &phrases_path)?;
    m.flag("method", method.name());
    m.flag("sv-order", value_name(a.sv_order));
    m.set("skipped", skipped);
    m.output(&path)?;
    m.write_to_dir(dir)?;
    Ok(())
}

fn render(reports: &[EvalReport], format: FormatArg) -> String {
    match format {
        FormatArg::Table => render_table(reports),
        FormatArg::Tsv => render_tsv(reports),
    }
}

fn eval_wordsim(a: &WordsimArgs) -> CliResult<()> {
    let reps = read_representations(&a.lexicon)?;
    let mut reports = Vec::new();
    for path in &a.datasets {
        let items = read_similarity(path)?;
        let report = eval_word_similarity(&dataset_name(path), &items, &reps, a.normalized_trace)?;
        if report.evaluated < report.total {
            eprintln!("{}: coverage {}", report.dataset, report.coverage());
        }
        reports.push(report);
    }
    emit(&render(&reports, a.report.format), a.report.out.as_deref())
}

fn composers(requested: &[MethodArg], reps: &Representations) -> Vec<Method> {
    if requested.is_empty() {
        Method::ALL
            .into_iter()
            .filter(|m| reps.is_density() || m.supports_vectors())
            .collect()
    } else {
        requested.iter().map(|&m| m.into()).collect()
    }
}

fn eval_disambig(a: &DisambigArgs) -> CliResult<()> {
    let reps = read_representations(&a.lexicon)?;
    let mode = DisambiguationMode::from(a.mode);
    let options = DisambiguationOptions {
        sv_order: a.sv_order.into(),
        normalized_trace: a.normalized_trace,
        per_annotation: a.per_annotation,
    };
    // the composer is irrelevant without composition
    let methods = match mode {
        DisambiguationMode::VerbOnly => vec![Method::Add],
        DisambiguationMode::Composed => composers(&a.methods, &reps),
    };
    let mut reports = Vec::new();
    for path in &a.datasets {
        let items = read_disambiguation(path)?;
        let name = dataset_name(path);
        for &method in &methods {
            let report = eval_disambiguation(&name, &items, &reps, method, mode, options)?;
            if report.evaluated < report.total {
                eprintln!("{}/{}: coverage {}", report.dataset, report.method, report.coverage());
            }
            reports.push(report);
        }
    }
    emit(&render(&reports, a.report.format), a.report.out.as_deref())
}

fn vne_report(a: &VneReportArgs) -> CliResult<()> {
    let lexicon = density_lexicon(&a.lexicon)?;
    let methods: Vec<Method> = if a.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        a.methods.iter().map(|&m| m.into()).collect()
    };
    let options = VneReportOptions {
        renormalize: a.renormalize,
        both_sentences: a.both_sentences,
        sv_order: a.sv_order.into(),
    };
    let mut text = String::new();
    for path in &a.datasets {
        let items = read_disambiguation(path)?;
        let report = vne_composition_report(&items, &lexicon, &methods, options)?;
        text.push_str(&report.render_table(&dataset_name(path)));
    }
    emit(&text, a.out.as_deref())
}

fn vne_synsets(a: &VneSynsetsArgs) -> CliResult<()> {
    let lexicon = density_lexicon(&a.lexicon)?;
    let counts = read_synset_counts(&a.synsets)?;
    let (c, overlap) = vne_polysemy_correlation(&lexicon, &counts)?;
    let text = format!(
        "pearson  spearman  overlap\n{:<7.4}  {:<8.4}  {overlap}/{}\n",
        c.pearson,
        c.spearman,
        counts.len()
    );
    emit(&text, a.out.as_deref())
}

fn replay(a: &ReplayArgs) -> CliResult<()> {
    let path = if a.manifest.is_dir() {
        a.manifest.join(FILE_NAME)
    } else {
        a.manifest.clone()
    };
    let manifest = RunManifest::read(&path)?;
    if manifest.get("command") == Some("replay") {
        return Err("refusing to replay a replay manifest".into());
    }
    manifest.verify_inputs()?;
    let args = manifest.replay_args(&a.out_dir);
    let cli = <Cli as clap::Parser>::try_parse_from(args).map_err(|e| format!("{}: {e}", path.display()))?;
    dispatch(cli)
}

