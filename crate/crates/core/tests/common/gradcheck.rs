//! Finite-difference checks of the analytic gradients against
//! independently written objectives. Each check panics on the first
//! mismatch and otherwise returns the worst relative error seen.

use lexdm::corpus::SenseMetric;
use lexdm::densecore::IntermediaryMatrix;
use lexdm::trainers::{
    ms_context_embedding, ms_objective_and_grads, ms_select_sense, sgns_objective_and_grads, word2dm_grads,
    word2dm_objective,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_difference, naive_gram, naive_trace_product, random_intermediary, random_vec, relative_error};

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-5;

fn ln_sigmoid(x: f64) -> f64 {
    -(1.0 + (-x).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sgns_reference(t: &[f64], c: &[f64], negs: &[Vec<f64>]) -> f64 {
    ln_sigmoid(dot(t, c)) + negs.iter().map(|n| ln_sigmoid(-dot(t, n))).sum::<f64>()
}

fn matrix(n: usize, m: usize, data: &[f64]) -> IntermediaryMatrix {
    IntermediaryMatrix::from_row_major(n, m, data.to_vec()).unwrap()
}

/// `ln σ(tr(A_t A_c)) + Σ ln σ(−tr(A_t A_k))` with explicit Gram products.
fn word2dm_reference(t: &IntermediaryMatrix, c: &IntermediaryMatrix, negs: &[IntermediaryMatrix]) -> f64 {
    let at = naive_gram(t);
    ln_sigmoid(naive_trace_product(&at, &naive_gram(c)))
        + negs
            .iter()
            .map(|k| ln_sigmoid(-naive_trace_product(&at, &naive_gram(k))))
            .sum::<f64>()
}

fn track(worst: &mut f64, err: f64) -> f64 {
    *worst = worst.max(err);
    err
}

pub fn check_sgns(seed: u64, instances: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..instances {
        let n = rng.gen_range(2..=20);
        let t = random_vec(&mut rng, n);
        let c = random_vec(&mut rng, n);
        let negs: Vec<Vec<f64>> = (0..rng.gen_range(0..=5)).map(|_| random_vec(&mut rng, n)).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = sgns_objective_and_grads(&t, &c, &neg_refs).unwrap();
        assert!((g.objective - sgns_reference(&t, &c, &negs)).abs() < 1e-12, "case {case}");

        let fd_t = finite_difference(&t, H, |x| sgns_reference(x, &c, &negs));
        assert!(track(&mut worst, relative_error(&fd_t, &g.target)) < TOL, "target, case {case}");
        let fd_c = finite_difference(&c, H, |x| sgns_reference(&t, x, &negs));
        assert!(track(&mut worst, relative_error(&fd_c, &g.context)) < TOL, "context, case {case}");
        for k in 0..negs.len() {
            let fd_k = finite_difference(&negs[k], H, |x| {
                let mut ns = negs.clone();
                ns[k] = x.to_vec();
                sgns_reference(&t, &c, &ns)
            });
            assert!(track(&mut worst, relative_error(&fd_k, &g.negatives[k])) < TOL, "negative {k}, case {case}");
        }
    }
    worst
}

pub fn check_word2dm(seed: u64, instances: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..instances {
        let (n, m) = (rng.gen_range(2..=8), rng.gen_range(1..=5));
        let scale = 1.0 / (m as f64).sqrt();
        let draw = |rng: &mut ChaCha8Rng| {
            let b = random_intermediary(rng, n, m);
            matrix(n, m, &b.as_slice().iter().map(|v| v * scale).collect::<Vec<_>>())
        };
        let t = draw(&mut rng);
        let c = draw(&mut rng);
        let negs: Vec<IntermediaryMatrix> = (0..rng.gen_range(0..=5)).map(|_| draw(&mut rng)).collect();
        let neg_refs: Vec<&IntermediaryMatrix> = negs.iter().collect();

        let g = word2dm_grads(&t, &c, &neg_refs).unwrap();
        let reference = word2dm_reference(&t, &c, &negs);
        assert!((g.objective - reference).abs() < 1e-10, "case {case}");
        assert!((word2dm_objective(&t, &c, &neg_refs).unwrap() - reference).abs() < 1e-10);

        let fd_t = finite_difference(t.as_slice(), H, |x| word2dm_reference(&matrix(n, m, x), &c, &negs));
        assert!(track(&mut worst, relative_error(&fd_t, &g.target)) < TOL, "target, case {case}");
        let fd_c = finite_difference(c.as_slice(), H, |x| word2dm_reference(&t, &matrix(n, m, x), &negs));
        assert!(track(&mut worst, relative_error(&fd_c, &g.context)) < TOL, "context, case {case}");
        for k in 0..negs.len() {
            let fd_k = finite_difference(negs[k].as_slice(), H, |x| {
                let mut ns = negs.clone();
                ns[k] = matrix(n, m, x);
                word2dm_reference(&t, &c, &ns)
            });
            assert!(track(&mut worst, relative_error(&fd_k, &g.negatives[k])) < TOL, "negative {k}, case {case}");
        }
        // the positive-only part is the derivative of the first term alone
        let fd_pos = finite_difference(t.as_slice(), H, |x| word2dm_reference(&matrix(n, m, x), &c, &[]));
        assert!(track(&mut worst, relative_error(&fd_pos, &g.positive_target)) < TOL, "positive, case {case}");
    }
    worst
}

/// Objective of one multi-sense step as a function of the raw parameters:
/// the sense is selected from the current sense matrix and context sum.
fn ms_reference(senses: &IntermediaryMatrix, contexts: &[Vec<f64>], negs: &[Vec<f64>]) -> f64 {
    let refs: Vec<&[f64]> = contexts.iter().map(Vec::as_slice).collect();
    let c = ms_context_embedding(&refs).unwrap();
    let s = ms_select_sense(senses, &c, SenseMetric::Cosine).unwrap();
    sgns_reference(&senses.column(s), &c, negs)
}

pub fn check_ms(seed: u64, instances: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    while checked < instances {
        let (n, m) = (rng.gen_range(2..=10), rng.gen_range(1..=5));
        let senses = random_intermediary(&mut rng, n, m);
        let contexts: Vec<Vec<f64>> = (0..rng.gen_range(1..=4)).map(|_| random_vec(&mut rng, n)).collect();
        let negs: Vec<Vec<f64>> = (0..rng.gen_range(0..=5)).map(|_| random_vec(&mut rng, n)).collect();

        let refs: Vec<&[f64]> = contexts.iter().map(Vec::as_slice).collect();
        let c = ms_context_embedding(&refs).unwrap();
        let s = ms_select_sense(&senses, &c, SenseMetric::Cosine).unwrap();
        // skip near-ties, where a finite step could flip the selection
        let cos = |j: usize| {
            let col = senses.column(j);
            dot(&col, &c) / (dot(&col, &col).sqrt() * dot(&c, &c).sqrt())
        };
        if (0..m).any(|j| j != s && cos(s) - cos(j) < 1e-3) {
            continue;
        }
        checked += 1;

        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = ms_objective_and_grads(&senses.column(s), &c, &neg_refs).unwrap();
        assert!((g.objective - ms_reference(&senses, &contexts, &negs)).abs() < 1e-12);

        // full-matrix gradient: only the selected column is non-zero
        let mut analytic = vec![0.0; n * m];
        for i in 0..n {
            analytic[i * m + s] = g.target[i];
        }
        let fd_b = finite_difference(senses.as_slice(), H, |x| ms_reference(&matrix(n, m, x), &contexts, &negs));
        assert!(track(&mut worst, relative_error(&fd_b, &analytic)) < TOL, "senses");

        // every context word receives the gradient of the context sum
        for k in 0..contexts.len() {
            let fd_k = finite_difference(&contexts[k], H, |x| {
                let mut cs = contexts.clone();
                cs[k] = x.to_vec();
                ms_reference(&senses, &cs, &negs)
            });
            assert!(track(&mut worst, relative_error(&fd_k, &g.context)) < TOL, "context {k}");
        }
        for k in 0..negs.len() {
            let fd_k = finite_difference(&negs[k], H, |x| {
                let mut ns = negs.clone();
                ns[k] = x.to_vec();
                ms_reference(&senses, &contexts, &ns)
            });
            assert!(track(&mut worst, relative_error(&fd_k, &g.negatives[k])) < TOL, "negative {k}");
        }
    }
    worst
}
