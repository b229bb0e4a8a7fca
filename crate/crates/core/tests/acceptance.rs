//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The report goes straight to stderr so it shows up even when libtest
//! captures output.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::gradcheck::{check_ms, check_sgns, check_word2dm, TOL};
use common::{brute_force_correlation, max_abs_diff, naive_gram, naive_trace_product, random_intermediary, random_psd};
use lexdm::composition::{compose_pair_dm, Method};
use lexdm::corpus::{build_vocab, encode_corpus, read_corpus, TrainingConfig};
use lexdm::densecore::*;
use lexdm::evaluation::{
    correlation, eval_disambiguation, read_disambiguation, DisambiguationMode, DisambiguationOptions,
};
use lexdm::lexicon::{DensityLexicon, Representations};
use lexdm::synthetic::{homonymy_corpus, HomonymyConfig, DISAMBIGUATION_FIXTURES};
use lexdm::trainers::{sgns_objective_and_grads, train_model, word2dm_grads, ModelKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn trace_identity_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=32);
        let (mt, mc) = (rng.gen_range(1..=17), rng.gen_range(1..=17));
        let t = random_intermediary(&mut rng, n, mt);
        let c = random_intermediary(&mut rng, n, mc);
        let fast = trace_ip_from_intermediaries(&t, &c).map_err(|e| e.to_string())?;
        let slow = naive_trace_product(&naive_gram(&t), &naive_gram(&c));
        worst = worst.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    ensure(worst <= 1e-10, || format!("worst relative error {worst:e}"))?;
    Ok(format!("200 pairs, worst relative error {worst:.1e}, {:.0?}", start.elapsed()))
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let n = 60;
    let errs = [check_sgns(201, n), check_word2dm(202, n), check_ms(203, n)];
    within(start.elapsed(), Duration::from_secs(10))?;
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    ensure(worst < TOL, || format!("worst relative error {worst:e}"))?;
    Ok(format!(
        "{n} instances per model; worst relative error sgns {:.1e}, word2dm {:.1e}, ms-word2dm {:.1e}",
        errs[0], errs[1], errs[2]
    ))
}

fn pathology() -> Outcome {
    let h = 0.5f64.sqrt();
    let t = IntermediaryMatrix::from_row_major(4, 2, vec![h, 0.0, 0.0, h, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let c = IntermediaryMatrix::from_row_major(4, 2, vec![0.0, 0.0, 0.0, 0.0, h, 0.0, 0.0, h]).unwrap();
    ensure((t.frobenius_norm() - 1.0).abs() < 1e-15 && (c.frobenius_norm() - 1.0).abs() < 1e-15, || {
        "fixture norms".into()
    })?;
    let g = word2dm_grads(&t, &c, &[]).map_err(|e| e.to_string())?;
    let dm_norm = g.positive_target.iter().map(|v| v * v).sum::<f64>().sqrt();
    let v = sgns_objective_and_grads(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[]).map_err(|e| e.to_string())?;
    let vec_norm = v.target.iter().map(|x| x * x).sum::<f64>().sqrt();
    ensure(dm_norm <= 1e-9, || format!("word2dm positive gradient norm {dm_norm:e}"))?;
    ensure((vec_norm - 0.5).abs() <= 1e-12, || format!("sgns gradient norm {vec_norm}"))?;
    Ok(format!("word2dm positive-context gradient norm {dm_norm:.1e}; sgns analogue {vec_norm}"))
}

fn representation_invariants() -> Outcome {
    let start = Instant::now();
    let sentences = read_corpus(&common::data_dir().join("corpus.txt")).map_err(|e| e.to_string())?;
    let config = TrainingConfig {
        epochs: 1,
        threads: 1,
        ..Default::default()
    };
    let vocab = build_vocab(sentences.iter().map(String::as_str), &config).map_err(|e| e.to_string())?;
    let corpus = encode_corpus(&sentences, &vocab);
    let mut checked = 0;
    let mut summary = Vec::new();
    for kind in [ModelKind::Sgns, ModelKind::Word2Dm, ModelKind::MsWord2Dm] {
        let (model, _) = train_model(kind, &corpus, &vocab, &config).map_err(|e| e.to_string())?;
        match model.export(&vocab).map_err(|e| e.to_string())? {
            Representations::Density(lex) => {
                for (word, rho) in lex.iter() {
                    let asym = rho.asymmetry();
                    let lmin = rho.eigenvalues()[0];
                    let tr = rho.trace();
                    ensure(asym <= 1e-9 && lmin >= -1e-8 && (tr - 1.0).abs() <= 1e-9, || {
                        format!("{} '{word}': asymmetry {asym:e}, λmin {lmin:e}, trace {tr}", kind.name())
                    })?;
                    checked += 1;
                }
                summary.push(format!("{} {}", kind.name(), lex.len()));
            }
            Representations::Vector(lex) => {
                let finite = lex.iter().all(|(_, v)| v.iter().all(|x| x.is_finite()));
                ensure(finite, || "sgns exported a non-finite vector".into())?;
                summary.push(format!("sgns {} vectors", lex.len()));
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    Ok(format!(
        "{tokens} in-vocabulary tokens; {checked} matrices checked ({}); {:.1?}",
        summary.join(", "),
        start.elapsed()
    ))
}

fn synthetic_homonymy() -> Outcome {
    let corpus = homonymy_corpus(&HomonymyConfig::default());
    let config = TrainingConfig {
        senses: 5,
        subsample: 0.0,
        min_count: 5,
        epochs: 5,
        threads: 1,
        ..Default::default()
    };
    let vocab = build_vocab(corpus.sentences.iter().map(String::as_str), &config).map_err(|e| e.to_string())?;
    let encoded = encode_corpus(&corpus.sentences, &vocab);
    let (model, _) = train_model(ModelKind::MsWord2Dm, &encoded, &vocab, &config).map_err(|e| e.to_string())?;
    let Representations::Density(lex) = model.export(&vocab).map_err(|e| e.to_string())? else {
        return Err("expected density matrices".into());
    };
    let get = |w: &str| lex.get(w).ok_or_else(|| format!("'{w}' missing from lexicon"));
    let vne = |rho: &DensityMatrix| von_neumann_entropy(rho, false).map_err(|e| e.to_string());

    let pseudo = vne(get(&corpus.pseudoword)?)?;
    let mut controls = corpus
        .controls
        .iter()
        .map(|w| vne(get(w)?))
        .collect::<Result<Vec<f64>, String>>()?;
    controls.sort_by(f64::total_cmp);
    let median = (controls[(controls.len() - 1) / 2] + controls[controls.len() / 2]) / 2.0;
    ensure(pseudo - median >= 0.2, || format!("pseudoword {pseudo:.3} vs control median {median:.3}"))?;

    let mut reductions = Vec::new();
    for cue in &corpus.cues {
        let composed = compose_pair_dm(Method::Phaser, get(cue)?, get(&corpus.pseudoword)?).map_err(|e| e.to_string())?;
        let after = vne(&normalize_trace(&composed).map_err(|e| e.to_string())?)?;
        ensure(after <= 0.5 * pseudo, || format!("phaser with '{cue}' gives {after:.3} from {pseudo:.3}"))?;
        reductions.push(format!("{cue}: {after:.3}"));
    }
    Ok(format!(
        "pseudoword VNE {pseudo:.3}, control median {median:.3}; after phaser {}",
        reductions.join(", ")
    ))
}

fn composition_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let mut worst_lmin = f64::INFINITY;
    for method in Method::ALL {
        for _ in 0..100 {
            let d = rng.gen_range(2..=17);
            let (rx, ry) = (rng.gen_range(1..=d), rng.gen_range(1..=d));
            let x = random_psd(&mut rng, d, rx);
            let y = random_psd(&mut rng, d, ry);
            let out = compose_pair_dm(method, &x, &y).map_err(|e| e.to_string())?;
            let lmin = out.eigenvalues()[0] / out.trace().max(1.0);
            worst_lmin = worst_lmin.min(lmin);
            ensure(lmin >= -1e-8, || format!("{method}: λmin {lmin:e}"))?;
        }
    }
    let mut worst_tensor: f64 = 0.0;
    for d in 1..=6 {
        for _ in 0..10 {
            let x = random_psd(&mut rng, d, d);
            let y = random_psd(&mut rng, d, d);
            let closed = compose_pair_dm(Method::Tensor, &x, &y).map_err(|e| e.to_string())?;
            worst_tensor = worst_tensor.max(max_abs_diff(&closed, &common::tensor_contraction(&x, &y)));
        }
    }
    ensure(worst_tensor <= 1e-10, || format!("tensor contraction mismatch {worst_tensor:e}"))?;
    let mut worst_vne: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(2..=17);
        let v = common::random_vec(&mut rng, d);
        let x = DensityMatrix::outer(&v);
        let y = random_psd(&mut rng, d, d);
        let out = compose_pair_dm(Method::Phaser, &x, &y).map_err(|e| e.to_string())?;
        let h = von_neumann_entropy(&normalize_trace(&out).map_err(|e| e.to_string())?, false)
            .map_err(|e| e.to_string())?;
        worst_vne = worst_vne.max(h);
    }
    ensure(worst_vne <= 1e-8, || format!("rank-1 phaser entropy {worst_vne:e}"))?;
    Ok(format!(
        "min scaled λ {worst_lmin:.1e}; tensor vs contraction {worst_tensor:.1e}; rank-1 phaser VNE ≤ {worst_vne:.1e}"
    ))
}

fn vne_anchors() -> Outcome {
    let err = |e: lexdm::Error| e.to_string();
    let mixed = von_neumann_entropy(&DensityMatrix::maximally_mixed(17), false).map_err(err)?;
    ensure((mixed - 17f64.ln()).abs() <= 1e-9, || format!("I/17 gives {mixed}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut worst_pure: f64 = 0.0;
    for _ in 0..50 {
        let v = common::random_vec(&mut rng, 17);
        let rho = normalize_trace(&DensityMatrix::outer(&v)).map_err(err)?;
        worst_pure = worst_pure.max(von_neumann_entropy(&rho, false).map_err(err)?.abs());
    }
    ensure(worst_pure <= 1e-10, || format!("pure state entropy {worst_pure:e}"))?;
    let two = von_neumann_entropy(&DensityMatrix::diagonal(&[2.0 / 3.0, 1.0 / 3.0]), false).map_err(err)?;
    ensure((two - 0.6365).abs() <= 1e-4, || format!("diag(2/3, 1/3) gives {two}"))?;
    Ok(format!("ln 17 = {mixed:.12}; pure ≤ {worst_pure:.1e}; diag(2/3,1/3) = {two:.4}"))
}

fn correlation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let mut worst: f64 = 0.0;
    let mut with_ties = 0;
    let mut cases = 0;
    while cases < 100 {
        let n = rng.gen_range(3..=12);
        // small integer grids force tied ranks
        let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..5))).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let Ok(c) = correlation(&xs, &ys) else {
            continue;
        };
        let (s, p) = brute_force_correlation(&xs, &ys);
        worst = worst.max((c.spearman - s).abs()).max((c.pearson - p).abs());
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        with_ties += usize::from(sorted.len() < n);
        cases += 1;
    }
    ensure(worst <= 1e-12, || format!("worst deviation {worst:e}"))?;
    Ok(format!("100 lists ({with_ties} with ties), worst deviation {worst:.1e}"))
}

fn dataset_plumbing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let mut lines = Vec::new();
    for (name, _, pairs) in DISAMBIGUATION_FIXTURES {
        let items = read_disambiguation(&common::data_dir().join(format!("{name}.tsv"))).map_err(|e| e.to_string())?;
        ensure(items.len() == pairs, || format!("{name}: {} pairs, expected {pairs}", items.len()))?;

        // a lexicon covering every word of the fixture
        let mut lex = DensityLexicon::new(4);
        for item in &items {
            for w in item.sentence1.iter().chain(&item.sentence2) {
                if !lex.contains(w) {
                    let b = random_intermediary(&mut rng, 4, 2);
                    lex.insert(w.as_str(), normalize_trace(&density_from_intermediary(&b)).unwrap()).unwrap();
                }
            }
        }
        let reps = Representations::Density(lex);
        let opts = DisambiguationOptions::default();
        let mut verb_reports = Vec::new();
        for method in Method::ALL {
            let verb = eval_disambiguation(name, &items, &reps, method, DisambiguationMode::VerbOnly, opts)
                .map_err(|e| e.to_string())?;
            let composed = eval_disambiguation(name, &items, &reps, method, DisambiguationMode::Composed, opts)
                .map_err(|e| e.to_string())?;
            ensure(verb.evaluated == verb.total && composed.evaluated == composed.total, || {
                format!("{name}/{method}: coverage {} and {}", verb.coverage(), composed.coverage())
            })?;
            verb_reports.push(verb);
        }
        ensure(verb_reports.windows(2).all(|w| w[0] == w[1]), || {
            format!("{name}: verb-only report depends on the composer")
        })?;
        lines.push(format!("{name} {pairs}"));
    }
    Ok(format!("{}; full coverage; verb-only composer-invariant", lines.join(", ")))
}

fn report(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

#[test]
fn acceptance_suite() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("trace identity", trace_identity_equivalence),
        ("gradient suite", gradient_suite),
        ("pathology reproduction", pathology),
        ("representation invariants", representation_invariants),
        ("synthetic homonymy", synthetic_homonymy),
        ("composition algebra", composition_algebra),
        ("vne anchors", vne_anchors),
        ("correlation oracle", correlation_oracle),
        ("dataset plumbing", dataset_plumbing),
    ];
    let mut failures = Vec::new();
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => report(&format!("PASS  {name}: {detail}")),
            Err(why) => {
                report(&format!("FAIL  {name}: {why}"));
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
