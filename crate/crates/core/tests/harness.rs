mod common;

use std::collections::HashSet;

use lexdm::builders::{agglomerative_cluster, build_bert2dm, build_context2dm, ReductionMethod, ReductionSpec};
use lexdm::composition::{Method, Structure, SvOrder};
use lexdm::densecore::*;
use lexdm::evaluation::*;
use lexdm::formats::{read_ceb_file, ContextualEmbeddingSet};
use lexdm::lexicon::{DensityLexicon, Representations, VectorLexicon};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_lexicon_against_shuffled_gold_is_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lex = DensityLexicon::new(6);
    for i in 0..200 {
        let b = common::random_intermediary(&mut rng, 6, 3);
        lex.insert(format!("w{i}"), normalize_trace(&density_from_intermediary(&b)).unwrap()).unwrap();
    }
    let items: Vec<SimilarityItem> = (0..1000)
        .map(|_| SimilarityItem {
            word1: format!("w{}", rng.gen_range(0..200)),
            word2: format!("w{}", rng.gen_range(0..200)),
            gold: rng.gen_range(0.0..10.0),
        })
        .collect();
    let report = eval_word_similarity("null", &items, &Representations::Density(lex), false).unwrap();
    assert_eq!(report.evaluated, 1000);
    assert!(report.spearman.abs() < 0.1, "{}", report.spearman);
}

#[test]
fn identical_sentences_have_no_variance() {
    let mut lex = DensityLexicon::new(2);
    lex.insert("a", DensityMatrix::diagonal(&[0.5, 0.5])).unwrap();
    lex.insert("b", DensityMatrix::diagonal(&[0.9, 0.1])).unwrap();
    let text = "1\tSV\ta b\ta b\t1\n2\tSV\tb a\tb a\t5\n3\tSV\ta a\ta a\t3\n";
    let items = parse_disambiguation(text.as_bytes(), "t").unwrap();
    let err = eval_disambiguation(
        "t",
        &items,
        &Representations::Density(lex),
        Method::Add,
        DisambiguationMode::Composed,
        DisambiguationOptions {
            normalized_trace: true,
            ..Default::default()
        },
    );
    // raw tr(X²) is the purity and varies; the normalized overlap is always 1
    assert!(matches!(err, Err(lexdm::Error::UndefinedCorrelation(_))));
}

/// Two-topic lexicon: topic words lean towards e1 or e2, the ambiguous
/// verb mixes both evenly.
fn topical_lexicon() -> DensityLexicon {
    let mut lex = DensityLexicon::new(2);
    for w in ["river", "water", "fish", "flow"] {
        lex.insert(w, DensityMatrix::diagonal(&[0.9, 0.1])).unwrap();
    }
    for w in ["money", "loan", "cash", "lend"] {
        lex.insert(w, DensityMatrix::diagonal(&[0.1, 0.9])).unwrap();
    }
    lex.insert("bank", DensityMatrix::diagonal(&[0.5, 0.5])).unwrap();
    lex
}

#[test]
fn constructed_disambiguation_data_is_recovered() {
    // landmark k agrees with the context topic to degree q_k; gold follows q_k
    let mut lex = topical_lexicon();
    let grades = [0.95, 0.8, 0.65, 0.5, 0.35, 0.2, 0.05];
    let mut text = String::new();
    for (t, (noun, lean)) in [("river", true), ("money", false)].into_iter().enumerate() {
        for (k, q) in grades.iter().enumerate() {
            let landmark = format!("lm{t}{k}");
            let diag = if lean { [*q, 1.0 - q] } else { [1.0 - q, *q] };
            lex.insert(landmark.as_str(), DensityMatrix::diagonal(&diag)).unwrap();
            let gold = 1.0 + 6.0 * q;
            text += &format!("{t}{k}\tSVO\t{noun} bank {noun}\t{noun} {landmark} {noun}\t{gold}\n");
        }
    }
    let items = parse_disambiguation(text.as_bytes(), "t").unwrap();
    let reps = Representations::Density(lex);
    for method in Method::ALL {
        let r = eval_disambiguation("t", &items, &reps, method, DisambiguationMode::Composed, Default::default())
            .unwrap();
        assert!(r.spearman > 0.9, "{method}: {}", r.spearman);
    }
}

#[test]
fn annihilated_phrases_are_skipped() {
    let mut lex = DensityLexicon::new(2);
    lex.insert("x", DensityMatrix::diagonal(&[1.0, 0.0])).unwrap();
    lex.insert("y", DensityMatrix::diagonal(&[0.0, 1.0])).unwrap();
    lex.insert("z", DensityMatrix::diagonal(&[0.5, 0.5])).unwrap();
    lex.insert("w", DensityMatrix::diagonal(&[0.8, 0.2])).unwrap();
    let text = "1\tSV\tx y\tx z\t1\n2\tSV\tx z\tx w\t2\n3\tSV\tz w\tz z\t3\n4\tSV\tw z\tw x\t4\n";
    let items = parse_disambiguation(text.as_bytes(), "t").unwrap();
    let reps = Representations::Density(lex);
    let r = eval_disambiguation("t", &items, &reps, Method::Mult, DisambiguationMode::Composed, Default::default())
        .unwrap();
    assert_eq!((r.evaluated, r.total), (3, 4));
}

#[test]
fn per_annotation_rows_can_be_kept() {
    let text = "1\tSV\tbank river\tflow river\t6\n2\tSV\tbank river\tflow river\t4\n\
                3\tSV\tbank money\tflow money\t1\n4\tSV\tbank cash\tlend cash\t7\n";
    let items = parse_disambiguation(text.as_bytes(), "t").unwrap();
    let reps = Representations::Density(topical_lexicon());
    let (method, mode) = (Method::Mult, DisambiguationMode::Composed);
    let averaged = eval_disambiguation("t", &items, &reps, method, mode, Default::default()).unwrap();
    assert_eq!((averaged.evaluated, averaged.total), (3, 3));
    let opts = DisambiguationOptions {
        per_annotation: true,
        sv_order: SvOrder::VerbFirst,
        ..Default::default()
    };
    let raw = eval_disambiguation("t", &items, &reps, method, mode, opts).unwrap();
    assert_eq!((raw.evaluated, raw.total), (4, 4));
}

#[test]
fn polysemy_correlation() {
    let mut lex = DensityLexicon::new(3);
    let spectra: [(&str, [f64; 3], f64); 5] = [
        ("a", [1.0, 0.0, 0.0], 1.0),
        ("b", [0.5, 0.5, 0.0], 2.0),
        ("c", [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 3.0),
        ("d", [0.9, 0.1, 0.0], 1.5),
        ("e", [0.6, 0.3, 0.1], 2.5),
    ];
    let mut counts = Vec::new();
    for (w, diag, senses) in spectra {
        lex.insert(w, DensityMatrix::diagonal(&diag)).unwrap();
        counts.push((w.to_string(), senses));
    }
    counts.push(("unknown".to_string(), 9.0));
    // counts ranked identically to the constructed entropies
    let (c, overlap) = vne_polysemy_correlation(&lex, &counts).unwrap();
    assert_eq!(overlap, 5);
    assert!((c.spearman - 1.0).abs() < 1e-12);

    // proportional counts give a perfect linear fit too
    let exact: Vec<(String, f64)> = lex
        .iter()
        .map(|(w, rho)| (w.to_string(), 3.0 * von_neumann_entropy(rho, false).unwrap()))
        .collect();
    let (c, _) = vne_polysemy_correlation(&lex, &exact).unwrap();
    assert!((c.pearson - 1.0).abs() < 1e-12 && (c.spearman - 1.0).abs() < 1e-12);

    let mut pure = DensityLexicon::new(2);
    for w in ["a", "b", "c"] {
        pure.insert(w, DensityMatrix::outer(&[0.6, 0.8])).unwrap();
    }
    let counts: Vec<(String, f64)> = ["a", "b", "c"].iter().zip([1.0, 2.0, 3.0]).map(|(w, c)| (w.to_string(), c)).collect();
    assert!(vne_polysemy_correlation(&pure, &counts).is_err());
}

#[test]
fn vne_report_columns() {
    let mut lex = DensityLexicon::new(2);
    lex.insert("s", DensityMatrix::outer(&[1.0, 0.0])).unwrap();
    lex.insert("o", DensityMatrix::outer(&[0.6, 0.8])).unwrap();
    lex.insert("v1", DensityMatrix::diagonal(&[0.5, 0.5])).unwrap();
    lex.insert("v2", DensityMatrix::diagonal(&[0.8, 0.2])).unwrap();
    let text = "1\tSVO\ts v1 o\ts v2 o\t3\n2\tSVO\ts v2 o\ts v1 o\t4\n3\tSVO\ts zz o\ts v1 o\t4\n";
    let items = parse_disambiguation(text.as_bytes(), "t").unwrap();
    let opts = VneReportOptions::default();
    let full = vne_composition_report(&items, &lex, &Method::ALL, opts).unwrap();
    let none = vne_composition_report(&items, &lex, &[], opts).unwrap();
    let expected = (von_neumann_entropy(lex.get("v1").unwrap(), false).unwrap()
        + von_neumann_entropy(lex.get("v2").unwrap(), false).unwrap())
        / 2.0;
    assert_eq!((full.evaluated, full.total), (2, 3));
    assert!((full.verb_mean - expected).abs() < 1e-12);
    assert_eq!(full.verb_mean, none.verb_mean);
    // the subject is a pure functor: phaser collapses every sentence to a
    // rank-1 matrix, whose entropy vanishes once it is renormalized
    let renorm = VneReportOptions { renormalize: true, ..opts };
    let collapsed = vne_composition_report(&items, &lex, &[Method::Phaser], renorm).unwrap();
    assert!(collapsed.composed[0].1.abs() <= 1e-8);
    // unnormalized, a rank-1 matrix with eigenvalue λ has entropy −λ ln λ
    let phaser = full.composed.iter().find(|(m, _)| *m == Method::Phaser).unwrap().1;
    assert!(phaser > 0.0);
    let both = vne_composition_report(&items, &lex, &[Method::Add], VneReportOptions { both_sentences: true, ..opts })
        .unwrap();
    assert_eq!(both.total, 6);
    assert!(full.render_table("t").contains("phaser"));
}

#[test]
fn fixtures_parse_with_published_pair_counts() {
    for (name, structure, pairs) in lexdm::synthetic::DISAMBIGUATION_FIXTURES {
        let items = read_disambiguation(&common::data_dir().join(format!("{name}.tsv"))).unwrap();
        assert_eq!(items.len(), pairs, "{name}");
        let s: Structure = structure.parse().unwrap();
        assert!(items.iter().all(|i| i.structure == s));
    }
    assert!(read_similarity(&common::data_dir().join("wordsim.tsv")).unwrap().len() >= 100);
    assert!(!read_synset_counts(&common::data_dir().join("synsets.tsv")).unwrap().is_empty());
}

#[test]
fn two_blobs_give_two_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pts = Vec::new();
    for centre in [[0.0, 0.0, 0.0], [10.0, 10.0, 0.0]] {
        for _ in 0..30 {
            pts.push(centre.iter().map(|c| c + rng.gen_range(-0.5..0.5)).collect::<Vec<f64>>());
        }
    }
    pts.shuffle(&mut rng);
    let c = agglomerative_cluster(&pts, 2, 10).unwrap();
    assert_eq!(c.k, 2);
    let mut sizes = c.sizes.clone();
    sizes.sort();
    assert_eq!(sizes, vec![30, 30]);
    for centroid in &c.centroids {
        let near = (centroid[0] - 0.0).abs() < 0.3 || (centroid[0] - 10.0).abs() < 0.3;
        assert!(near, "{centroid:?}");
    }
}

#[test]
fn context2dm_separates_two_context_populations() {
    let mut vecs = VectorLexicon::new(4);
    vecs.insert("river", vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    vecs.insert("water", vec![0.9, 0.1, 0.0, 0.0]).unwrap();
    vecs.insert("money", vec![0.0, 0.0, 1.0, 0.0]).unwrap();
    vecs.insert("loan", vec![0.0, 0.0, 0.9, 0.1]).unwrap();
    let mut sentences = Vec::new();
    for _ in 0..10 {
        sentences.push("river bank water");
        sentences.push("money bank loan");
        sentences.push("water bank river");
        sentences.push("loan bank money");
    }
    let lex = build_context2dm(&sentences, &vecs, 2, 2, 10).unwrap();
    let bank = lex.get("bank").unwrap();
    bank.check_invariants(true).unwrap();
    assert_eq!(bank.numerical_rank(1e-8), 2);
    assert!(von_neumann_entropy(bank, false).unwrap() > 0.5);
}

#[test]
fn bert2dm_from_hand_written_ceb_fixture() {
    // CEB1 | dim=2 | ("bank", [1, 0]) ("bank", [0, 1]) ("the", [1, 1])
    let mut bytes = b"CEB1".to_vec();
    bytes.extend(2u32.to_le_bytes());
    for (w, v) in [("bank", [1.0f32, 0.0]), ("bank", [0.0, 1.0]), ("the", [1.0, 1.0])] {
        bytes.extend((w.len() as u16).to_le_bytes());
        bytes.extend(w.as_bytes());
        for x in v {
            bytes.extend(x.to_le_bytes());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.ceb");
    std::fs::write(&path, &bytes).unwrap();
    let set: ContextualEmbeddingSet = read_ceb_file(&path).unwrap();
    assert_eq!(set.len(), 3);

    let stop: HashSet<String> = ["the".to_string()].into();
    let spec = ReductionSpec {
        method: ReductionMethod::Svd,
        out_dim: 2,
        ..Default::default()
    };
    let lex = build_bert2dm(&set, &spec, &stop).unwrap();
    let bank = lex.get("bank").unwrap();
    assert!((von_neumann_entropy(bank, false).unwrap() - 2f64.ln()).abs() < 1e-12);
    let clustered = build_bert2dm(&set, &ReductionSpec { cluster_first: true, ..spec }, &stop).unwrap();
    clustered.get("bank").unwrap().check_invariants(true).unwrap();
}
