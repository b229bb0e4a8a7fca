//! Density matrices built without gradient training: from contextual
//! embeddings (BERT2DM) and from clustered context sums (Context2DM).

use std::collections::{HashMap, HashSet};

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::densecore::{normalize_trace, DensityMatrix, MIN_TRACE};
use crate::error::{Error, Result};
use crate::formats::ContextualEmbeddingSet;
use crate::lexicon::{DensityLexicon, VectorLexicon};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMethod {
    /// Centered projection onto the top right singular vectors.
    Pca,
    /// The same projection without centering.
    Svd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionSpec {
    pub method: ReductionMethod,
    pub out_dim: usize,
    pub cluster_first: bool,
    pub k_min: usize,
    pub k_max: usize,
}

impl Default for ReductionSpec {
    fn default() -> Self {
        ReductionSpec {
            method: ReductionMethod::Pca,
            out_dim: 17,
            cluster_first: false,
            k_min: 2,
            k_max: 10,
        }
    }
}

impl ReductionSpec {
    fn validate(&self) -> Result<()> {
        if self.out_dim == 0 {
            return Err(Error::Config("output dimension must be positive".into()));
        }
        validate_k_range(self.k_min, self.k_max)
    }
}

fn validate_k_range(k_min: usize, k_max: usize) -> Result<()> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Config(format!("invalid cluster range {k_min}..={k_max}")));
    }
    Ok(())
}

/// Projects the rows of `data` (`N × D`) onto `out_dim` principal directions.
///
/// Components are ordered by descending singular value and signed so that
/// their largest-magnitude entry is positive. Components beyond
/// `min(N, D)` are zero.
pub fn reduce_dimensions(data: &DMatrix<f64>, method: ReductionMethod, out_dim: usize) -> Result<DMatrix<f64>> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input to dimensionality reduction".into()));
    }
    let (n, d) = data.shape();
    if n == 0 {
        return Err(Error::Domain("cannot reduce an empty data set".into()));
    }
    let mut x = data.clone();
    if method == ReductionMethod::Pca {
        for mut col in x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }
    let basis = principal_axes(&x, out_dim.min(n).min(d));
    let mut out = DMatrix::zeros(n, out_dim);
    if basis.ncols() > 0 {
        let projected = &x * &basis;
        out.columns_mut(0, basis.ncols()).copy_from(&projected);
    }
    Ok(out)
}

/// Top `k` right singular vectors of `x` as columns of a `D × k` matrix,
/// from the eigendecomposition of the smaller Gram matrix. Directions with
/// numerically zero singular value are left as zeros.
fn principal_axes(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut axes = DMatrix::zeros(d, k);
    if k == 0 {
        return axes;
    }
    let wide = d > n;
    let gram = if wide { x * x.transpose() } else { x.transpose() * x };
    let eig = SymmetricEigen::new(gram);
    let cutoff = eig.eigenvalues.amax() * 8.0 * n.max(d) as f64 * f64::EPSILON;
    for (slot, idx) in descending(&eig.eigenvalues).into_iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= cutoff {
            continue;
        }
        if wide {
            // v = Xᵀu / σ
            let v = x.transpose() * eig.eigenvectors.column(idx) / lambda.sqrt();
            axes.set_column(slot, &v.normalize());
        } else {
            axes.set_column(slot, &eig.eigenvectors.column(idx));
        }
    }
    for mut col in axes.column_iter_mut() {
        let (mut best, mut best_abs) = (0.0, 0.0);
        for &v in col.iter() {
            if v.abs() > best_abs {
                best = v;
                best_abs = v.abs();
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
    axes
}

fn descending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Result of Ward clustering with an elbow-selected cluster count.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub k: usize,
    /// Cluster means, ordered by each cluster's first member.
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    /// Within-cluster sum of squares `W(k)` for `k = 1..=N`.
    pub within: Vec<f64>,
}

/// Ward-linkage agglomeration; `k` maximizes the second difference
/// `W(k−1) − 2W(k) + W(k+1)` over `k_min..=k_max` (capped at `N`).
///
/// Where a neighbour of `k` does not exist the missing value is replaced by
/// `W(k)`, giving a one-sided difference. Ties go to the smallest `k`.
pub fn agglomerative_cluster(points: &[Vec<f64>], k_min: usize, k_max: usize) -> Result<Clustering> {
    validate_k_range(k_min, k_max)?;
    let n = points.len();
    match n {
        0 => return Err(Error::Domain("cannot cluster zero points".into())),
        1 => {
            return Ok(Clustering {
                k: 1,
                centroids: vec![points[0].clone()],
                sizes: vec![1],
                within: vec![0.0],
            })
        }
        _ => {}
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Domain("points have inconsistent widths".into()));
    }

    let merges = ward_merges(points);
    // within[k-1] = W(k): the cost of the first N − k merges.
    let mut within = vec![0.0; n];
    let mut acc = 0.0;
    for (i, m) in merges.iter().enumerate() {
        acc += m.cost;
        within[n - 2 - i] = acc;
    }
    let w = |k: usize| within[k - 1];

    let hi = k_max.min(n);
    let lo = k_min.min(hi);
    let mut best_k = lo;
    let mut best_score = f64::NEG_INFINITY;
    for k in lo..=hi {
        let prev = if k > 1 { w(k - 1) } else { w(k) };
        let next = if k < n { w(k + 1) } else { w(k) };
        let score = prev - 2.0 * w(k) + next;
        if score > best_score {
            best_k = k;
            best_score = score;
        }
    }

    let mut uf = UnionFind::new(n);
    for m in &merges[..n - best_k] {
        uf.union(m.a, m.b);
    }
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let mut sizes = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let root = uf.find(i);
        let s = *slot.entry(root).or_insert_with(|| {
            centroids.push(vec![0.0; dim]);
            sizes.push(0);
            centroids.len() - 1
        });
        sizes[s] += 1;
        for (c, v) in centroids[s].iter_mut().zip(p) {
            *c += v;
        }
    }
    for (c, &size) in centroids.iter_mut().zip(&sizes) {
        c.iter_mut().for_each(|v| *v /= size as f64);
    }
    Ok(Clustering {
        k: best_k,
        centroids,
        sizes,
        within,
    })
}

struct Merge {
    /// Representative original points of the two merged clusters.
    a: usize,
    b: usize,
    cost: f64,
    order: usize,
}

/// Ward merges via the nearest-neighbour chain, sorted by cost.
fn ward_merges(points: &[Vec<f64>]) -> Vec<Merge> {
    let n = points.len();
    let mut centroid: Vec<Vec<f64>> = points.to_vec();
    let mut size: Vec<f64> = vec![1.0; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut remaining = n;
    let mut chain: Vec<usize> = Vec::new();
    let mut merges = Vec::with_capacity(n - 1);

    let cost = |c: &[Vec<f64>], s: &[f64], i: usize, j: usize| -> f64 {
        let d2: f64 = c[i].iter().zip(&c[j]).map(|(x, y)| (x - y) * (x - y)).sum();
        s[i] * s[j] / (s[i] + s[j]) * d2
    };

    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("active cluster"));
        }
        let a = *chain.last().unwrap();
        let prev = chain.len().checked_sub(2).map(|i| chain[i]);
        let mut best = usize::MAX;
        let mut best_cost = f64::INFINITY;
        if let Some(p) = prev {
            best = p;
            best_cost = cost(&centroid, &size, a, p);
        }
        for j in 0..n {
            if j == a || !active[j] || Some(j) == prev {
                continue;
            }
            let c = cost(&centroid, &size, a, j);
            if c < best_cost || (c == best_cost && j < best && Some(best) != prev) {
                best = j;
                best_cost = c;
            }
        }
        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let (keep, gone) = (a.min(best), a.max(best));
            let total = size[keep] + size[gone];
            for t in 0..centroid[keep].len() {
                centroid[keep][t] = (size[keep] * centroid[keep][t] + size[gone] * centroid[gone][t]) / total;
            }
            size[keep] = total;
            active[gone] = false;
            remaining -= 1;
            merges.push(Merge {
                a: keep,
                b: gone,
                cost: best_cost,
                order: merges.len(),
            });
        } else {
            chain.push(best);
        }
    }
    merges.sort_by(|x, y| x.cost.total_cmp(&y.cost).then(x.order.cmp(&y.order)));
    merges
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// `normalize_trace(Σ wᵢ vᵢ vᵢᵀ)`; `None` when the sum has (near) zero trace.
fn mixture(rows: impl Iterator<Item = (f64, Vec<f64>)>, dim: usize) -> Option<DensityMatrix> {
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for (weight, v) in rows {
        let col = nalgebra::DVector::from_vec(v);
        acc.ger(weight, &col, &col, 1.0);
    }
    let rho = DensityMatrix::from_matrix(acc).ok()?;
    if rho.trace() <= MIN_TRACE {
        return None;
    }
    normalize_trace(&rho).ok()
}

/// Density matrices from per-occurrence contextual embeddings.
///
/// Stop-word records are dropped. With `cluster_first`, each word's
/// occurrences are replaced by their cluster centroids weighted by cluster
/// size. A single reduction basis is fitted over all remaining rows, then
/// each word's matrix is the normalized weighted sum of outer products of
/// its reduced rows.
pub fn build_bert2dm(
    embeddings: &ContextualEmbeddingSet,
    spec: &ReductionSpec,
    stop_words: &HashSet<String>,
) -> Result<DensityLexicon> {
    spec.validate()?;
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&[f64]>> = HashMap::new();
    for (word, v) in embeddings.records() {
        if stop_words.contains(word) {
            continue;
        }
        groups
            .entry(word.as_str())
            .or_insert_with(|| {
                order.push(word.as_str());
                Vec::new()
            })
            .push(v.as_slice());
    }
    if order.is_empty() {
        return Err(Error::InsufficientData {
            message: "no contextual embeddings survive stop-word filtering".into(),
            evaluated: 0,
            total: embeddings.len(),
        });
    }

    // (word index, weight, row)
    let mut rows: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    for (wi, word) in order.iter().enumerate() {
        let occurrences = &groups[word];
        if spec.cluster_first {
            let points: Vec<Vec<f64>> = occurrences.iter().map(|v| v.to_vec()).collect();
            let clusters = agglomerative_cluster(&points, spec.k_min, spec.k_max)?;
            for (c, size) in clusters.centroids.into_iter().zip(clusters.sizes) {
                rows.push((wi, size as f64, c));
            }
        } else {
            rows.extend(occurrences.iter().map(|v| (wi, 1.0, v.to_vec())));
        }
    }

    let data = DMatrix::from_fn(rows.len(), embeddings.dim(), |i, j| rows[i].2[j]);
    let reduced = reduce_dimensions(&data, spec.method, spec.out_dim)?;

    let mut per_word: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); order.len()];
    for (i, (wi, weight, _)) in rows.iter().enumerate() {
        per_word[*wi].push((*weight, reduced.row(i).iter().copied().collect()));
    }
    let mut lexicon = DensityLexicon::new(spec.out_dim);
    for (word, rows) in order.iter().zip(per_word) {
        match mixture(rows.into_iter(), spec.out_dim) {
            Some(rho) => lexicon.insert(*word, rho)?,
            None => warn!("'{word}' has a zero-trace matrix after reduction; omitted"),
        }
    }
    Ok(lexicon)
}

/// Context2DM: cluster each word's context sums and mix the centroids.
///
/// A context embedding is the sum of the vectors of words within `window`
/// positions of an occurrence (words without a vector are skipped). The
/// density matrix is the unit-trace, unweighted sum of centroid outer
/// products.
pub fn build_context2dm<S: AsRef<str>>(
    sentences: &[S],
    word_vectors: &VectorLexicon,
    window: usize,
    k_min: usize,
    k_max: usize,
) -> Result<DensityLexicon> {
    validate_k_range(k_min, k_max)?;
    if window == 0 {
        return Err(Error::Config("context window must be at least 1".into()));
    }
    let dim = word_vectors.dim();
    let mut lexicon = DensityLexicon::new(dim);
    if word_vectors.is_empty() {
        warn!("no word vectors supplied; Context2DM output is empty");
        return Ok(lexicon);
    }

    let mut order: Vec<String> = Vec::new();
    let mut contexts: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
    for sentence in sentences {
        let tokens: Vec<&str> = sentence.as_ref().split_whitespace().collect();
        for (pos, &word) in tokens.iter().enumerate() {
            let lo = pos.saturating_sub(window);
            let hi = (pos + window + 1).min(tokens.len());
            let mut sum = vec![0.0; dim];
            let mut found = false;
            for (j, tok) in tokens.iter().enumerate().take(hi).skip(lo) {
                if j == pos {
                    continue;
                }
                if let Some(v) = word_vectors.get(tok) {
                    found = true;
                    sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
                }
            }
            if !found {
                continue;
            }
            match contexts.get_mut(word) {
                Some(list) => list.push(sum),
                None => {
                    order.push(word.to_string());
                    contexts.insert(word.to_string(), vec![sum]);
                }
            }
        }
    }

    for word in order {
        let points = &contexts[&word];
        let clusters = agglomerative_cluster(points, k_min, k_max)?;
        match mixture(clusters.centroids.into_iter().map(|c| (1.0, c)), dim) {
            Some(rho) => lexicon.insert(word, rho)?,
            None => warn!("'{word}' has only zero context sums; omitted"),
        }
    }
    Ok(lexicon)
}
