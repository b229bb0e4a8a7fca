//! Shared parameter tables and optimizers.
//!
//! Parameters live in relaxed atomics so that parallel workers can apply
//! unsynchronized (hogwild) updates without undefined behaviour. In the
//! single-worker mode every access is sequential and results are exact.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::corpus::OptimizerKind;

pub(crate) struct ParamTable {
    width: usize,
    data: Vec<AtomicU64>,
}

impl ParamTable {
    pub(crate) fn from_fn(rows: usize, width: usize, mut init: impl FnMut() -> f64) -> Self {
        ParamTable {
            width,
            data: (0..rows * width).map(|_| AtomicU64::new(init().to_bits())).collect(),
        }
    }

    pub(crate) fn zeros(rows: usize, width: usize) -> Self {
        Self::from_fn(rows, width, || 0.0)
    }

    /// Uniform in `(−0.5/dim, 0.5/dim)`.
    pub(crate) fn uniform<R: Rng>(rows: usize, width: usize, dim: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim as f64;
        Self::from_fn(rows, width, || rng.gen_range(-half..half))
    }

    #[inline]
    fn load(&self, idx: usize) -> f64 {
        f64::from_bits(self.data[idx].load(Ordering::Relaxed))
    }

    #[inline]
    fn store(&self, idx: usize, v: f64) {
        self.data[idx].store(v.to_bits(), Ordering::Relaxed);
    }

    pub(crate) fn read_row(&self, row: usize, out: &mut [f64]) {
        let base = row * self.width;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.load(base + i);
        }
    }

    pub(crate) fn row(&self, row: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        self.read_row(row, &mut out);
        out
    }

    pub(crate) fn snapshot(&self) -> Vec<f64> {
        (0..self.data.len()).map(|i| self.load(i)).collect()
    }
}

/// A parameter table plus its optimizer state.
pub(crate) struct Trainable {
    pub(crate) params: ParamTable,
    adam: Option<AdamMoments>,
}

struct AdamMoments {
    first: ParamTable,
    second: ParamTable,
    steps: Vec<AtomicU64>,
}

impl Trainable {
    pub(crate) fn new(params: ParamTable, optimizer: OptimizerKind) -> Self {
        let adam = match optimizer {
            OptimizerKind::Adam => {
                let rows = params.data.len() / params.width.max(1);
                Some(AdamMoments {
                    first: ParamTable::zeros(rows, params.width),
                    second: ParamTable::zeros(rows, params.width),
                    steps: (0..rows).map(|_| AtomicU64::new(0)).collect(),
                })
            }
            OptimizerKind::Sgd => None,
        };
        Trainable { params, adam }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Optimizer {
    pub(crate) learning_rate: f64,
    pub(crate) beta1: f64,
    pub(crate) beta2: f64,
    pub(crate) epsilon: f64,
}

impl Optimizer {
    pub(crate) fn new(learning_rate: f64) -> Self {
        Optimizer {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Gradient-ascent step on one row.
    ///
    /// Adam is lazy: only rows with a gradient in this batch advance their
    /// moments, and bias correction uses the row's own step count.
    pub(crate) fn step(&self, t: &Trainable, row: usize, grad: &[f64]) {
        let base = row * t.params.width;
        match &t.adam {
            None => {
                for (i, g) in grad.iter().enumerate() {
                    let idx = base + i;
                    t.params.store(idx, t.params.load(idx) + self.learning_rate * g);
                }
            }
            Some(adam) => {
                let step = adam.steps[row].fetch_add(1, Ordering::Relaxed) + 1;
                let c1 = 1.0 - self.beta1.powi(step as i32);
                let c2 = 1.0 - self.beta2.powi(step as i32);
                for (i, &g) in grad.iter().enumerate() {
                    let idx = base + i;
                    let m = self.beta1 * adam.first.load(idx) + (1.0 - self.beta1) * g;
                    let v = self.beta2 * adam.second.load(idx) + (1.0 - self.beta2) * g * g;
                    adam.first.store(idx, m);
                    adam.second.store(idx, v);
                    let update = self.learning_rate * (m / c1) / ((v / c2).sqrt() + self.epsilon);
                    t.params.store(idx, t.params.load(idx) + update);
                }
            }
        }
    }
}

/// Sparse gradient accumulator for one batch, one map per parameter table.
pub(crate) struct GradBatch {
    tables: Vec<HashMap<usize, Vec<f64>>>,
}

impl GradBatch {
    pub(crate) fn new(tables: usize) -> Self {
        GradBatch {
            tables: (0..tables).map(|_| HashMap::new()).collect(),
        }
    }

    pub(crate) fn add(&mut self, table: usize, row: usize, grad: &[f64]) {
        let slot = self.tables[table]
            .entry(row)
            .or_insert_with(|| vec![0.0; grad.len()]);
        for (s, g) in slot.iter_mut().zip(grad) {
            *s += g;
        }
    }

    /// Applies and clears the accumulated gradients.
    pub(crate) fn apply(&mut self, optimizer: &Optimizer, trainables: &[&Trainable]) {
        for (table, grads) in self.tables.iter_mut().enumerate() {
            let mut rows: Vec<(usize, Vec<f64>)> = grads.drain().collect();
            rows.sort_unstable_by_key(|(r, _)| *r);
            for (row, grad) in rows {
                optimizer.step(trainables[table], row, &grad);
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn is_empty(&self) -> bool {
        self.tables.iter().all(HashMap::is_empty)
    }
}
