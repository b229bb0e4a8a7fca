//! Per-prediction objectives and their analytic gradients.
//!
//! All objectives are maximized: callers apply `θ ← θ + α·∂J/∂θ`.

use crate::corpus::SenseMetric;
use crate::densecore::IntermediaryMatrix;
use crate::error::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Objective value and gradients of a vector-valued prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrads {
    pub objective: f64,
    /// Gradient for the target (SGNS) or selected sense vector (multi-sense).
    pub target: Vec<f64>,
    /// Gradient for the context vector (SGNS) or summed context `c_t` (multi-sense).
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `J = ln σ(v_t·v_c) + Σ_k ln σ(−v_t·v_k)` and its gradients.
///
/// `∂J/∂v_t = (1 − σ(v_t·v_c))·v_c − Σ_k σ(v_t·v_k)·v_k`, where
/// `σ(v_t·v_k) = 1 − σ(−v_t·v_k)`.
pub fn sgns_objective_and_grads(target: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<VectorGrads> {
    check_len(target.len(), context.len())?;
    for n in negatives {
        check_len(target.len(), n.len())?;
    }
    let dim = target.len();
    let mut grads = VectorGrads {
        objective: 0.0,
        target: vec![0.0; dim],
        context: vec![0.0; dim],
        negatives: Vec::with_capacity(negatives.len()),
    };
    let s = dot(target, context);
    grads.objective += log_sigmoid(s);
    let g = 1.0 - sigmoid(s);
    axpy(g, context, &mut grads.target);
    axpy(g, target, &mut grads.context);
    for neg in negatives {
        let s = dot(target, neg);
        grads.objective += log_sigmoid(-s);
        let h = sigmoid(s);
        axpy(-h, neg, &mut grads.target);
        grads.negatives.push(target.iter().map(|t| -h * t).collect());
    }
    Ok(grads)
}

/// The multi-sense objective `ln σ(b_t·c_t) + Σ_k ln σ(−b_t·v_k)`.
///
/// Same functional form as SGNS with the selected sense column standing in
/// for the target vector and the summed window standing in for the context.
pub fn ms_objective_and_grads(sense: &[f64], context_sum: &[f64], negatives: &[&[f64]]) -> Result<VectorGrads> {
    sgns_objective_and_grads(sense, context_sum, negatives)
}

/// Sum of the context vectors of a window; `None` for an empty window.
pub fn ms_context_embedding(contexts: &[&[f64]]) -> Option<Vec<f64>> {
    let first = contexts.first()?;
    let mut sum = first.to_vec();
    for c in &contexts[1..] {
        axpy(1.0, c, &mut sum);
    }
    Some(sum)
}

/// Index of the column of `b` most similar to `context`.
///
/// Ties go to the lowest index. A cosine with a zero-norm operand counts as 0.
pub fn ms_select_sense(b: &IntermediaryMatrix, context: &[f64], metric: SenseMetric) -> Result<usize> {
    check_len(b.rows(), context.len())?;
    let columns: Vec<Vec<f64>> = (0..b.cols()).map(|j| b.column(j)).collect();
    Ok(best_sense(columns.iter().map(Vec::as_slice), context, metric))
}

pub(crate) fn best_sense<'a>(
    senses: impl Iterator<Item = &'a [f64]>,
    context: &[f64],
    metric: SenseMetric,
) -> usize {
    let context_norm = dot(context, context).sqrt();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, sense) in senses.enumerate() {
        let d = dot(sense, context);
        let score = match metric {
            SenseMetric::Dot => d,
            SenseMetric::Cosine => {
                let norm = dot(sense, sense).sqrt() * context_norm;
                if norm > 0.0 {
                    d / norm
                } else {
                    0.0
                }
            }
        };
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Objective value and gradients of one Word2DM prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct Word2DmGrads {
    pub objective: f64,
    /// `∂J/∂B_t`, row-major `n × m`.
    pub target: Vec<f64>,
    /// `∂J/∂B_c`.
    pub context: Vec<f64>,
    /// `∂J/∂B_{w_k}` per negative.
    pub negatives: Vec<Vec<f64>>,
    /// The true-context part of `∂J/∂B_t`, `(1 − σ(y))·2·B_c B_cᵀ B_t`.
    pub positive_target: Vec<f64>,
}

/// `J = ln σ(‖B_cᵀB_t‖²_F) + Σ_k ln σ(−‖B_kᵀB_t‖²_F)`.
pub fn word2dm_objective(
    target: &IntermediaryMatrix,
    context: &IntermediaryMatrix,
    negatives: &[&IntermediaryMatrix],
) -> Result<f64> {
    Ok(word2dm_grads(target, context, negatives)?.objective)
}

/// Gradients of [`word2dm_objective`] for every participating matrix.
///
/// With `C = B_cᵀB_t` and `y = ‖C‖²_F`:
/// `∂y/∂B_t = 2·B_c·C` and `∂y/∂B_c = 2·B_t·Cᵀ`. Each negative enters with
/// `z_k = −‖B_kᵀB_t‖²_F`, contributing `−(1 − σ(z_k))·2·B_k B_kᵀ B_t` to the
/// target gradient.
pub fn word2dm_grads(
    target: &IntermediaryMatrix,
    context: &IntermediaryMatrix,
    negatives: &[&IntermediaryMatrix],
) -> Result<Word2DmGrads> {
    let (n, m) = (target.rows(), target.cols());
    for other in std::iter::once(&context).chain(negatives.iter()) {
        if other.rows() != n || other.cols() != m {
            return Err(Error::dims(
                format!("{n}x{m}"),
                format!("{}x{}", other.rows(), other.cols()),
            ));
        }
    }
    let neg_slices: Vec<&[f64]> = negatives.iter().map(|b| b.as_slice()).collect();
    let mut scratch = Word2DmScratch::new(n, m);
    let mut out = Word2DmGrads {
        objective: 0.0,
        target: vec![0.0; n * m],
        context: vec![0.0; n * m],
        negatives: vec![vec![0.0; n * m]; negatives.len()],
        positive_target: vec![0.0; n * m],
    };
    out.objective = word2dm_accumulate(
        target.as_slice(),
        context.as_slice(),
        &neg_slices,
        n,
        m,
        &mut scratch,
        &mut out.target,
        &mut out.context,
        &mut out.negatives,
        Some(&mut out.positive_target),
    );
    Ok(out)
}

pub(crate) struct Word2DmScratch {
    cross: Vec<f64>,
}

impl Word2DmScratch {
    pub(crate) fn new(_n: usize, m: usize) -> Self {
        Word2DmScratch {
            cross: vec![0.0; m * m],
        }
    }
}

/// `C = Bᵀ_other · B_t` (m × m, row-major), returns `‖C‖²_F`.
fn cross_product(bt: &[f64], other: &[f64], n: usize, m: usize, c: &mut [f64]) -> f64 {
    c.iter_mut().for_each(|v| *v = 0.0);
    for l in 0..n {
        let brow = &other[l * m..(l + 1) * m];
        let trow = &bt[l * m..(l + 1) * m];
        for (i, &b) in brow.iter().enumerate() {
            if b != 0.0 {
                axpy(b, trow, &mut c[i * m..(i + 1) * m]);
            }
        }
    }
    dot(c, c)
}

/// `out += scale · B_other · C` where `B_other` is `n × m` and `C` is `m × m`.
fn add_b_times_c(other: &[f64], c: &[f64], n: usize, m: usize, scale: f64, out: &mut [f64]) {
    for p in 0..n {
        let brow = &other[p * m..(p + 1) * m];
        let orow = &mut out[p * m..(p + 1) * m];
        for (i, &b) in brow.iter().enumerate() {
            if b != 0.0 {
                axpy(scale * b, &c[i * m..(i + 1) * m], orow);
            }
        }
    }
}

/// `out += scale · B_t · Cᵀ`.
fn add_b_times_ct(bt: &[f64], c: &[f64], n: usize, m: usize, scale: f64, out: &mut [f64]) {
    for p in 0..n {
        let trow = &bt[p * m..(p + 1) * m];
        let orow = &mut out[p * m..(p + 1) * m];
        for (i, o) in orow.iter_mut().enumerate() {
            *o += scale * dot(trow, &c[i * m..(i + 1) * m]);
        }
    }
}

/// Adds the gradients of one prediction into the output buffers and returns
/// its objective value.
#[allow(clippy::too_many_arguments)]
pub(crate) fn word2dm_accumulate(
    bt: &[f64],
    bc: &[f64],
    negatives: &[&[f64]],
    n: usize,
    m: usize,
    scratch: &mut Word2DmScratch,
    grad_t: &mut [f64],
    grad_c: &mut [f64],
    grad_negs: &mut [Vec<f64>],
    positive_target: Option<&mut Vec<f64>>,
) -> f64 {
    let c = &mut scratch.cross;
    let y = cross_product(bt, bc, n, m, c);
    let mut objective = log_sigmoid(y);
    let g = 2.0 * (1.0 - sigmoid(y));
    add_b_times_c(bc, c, n, m, g, grad_t);
    if let Some(pos) = positive_target {
        add_b_times_c(bc, c, n, m, g, pos);
    }
    add_b_times_ct(bt, c, n, m, g, grad_c);

    for (bk, gk) in negatives.iter().zip(grad_negs.iter_mut()) {
        let z = -cross_product(bt, bk, n, m, c);
        objective += log_sigmoid(z);
        let h = -2.0 * (1.0 - sigmoid(z));
        add_b_times_c(bk, c, n, m, h, grad_t);
        add_b_times_ct(bt, c, n, m, h, gk);
    }
    objective
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::dims(expected, actual))
    }
}
