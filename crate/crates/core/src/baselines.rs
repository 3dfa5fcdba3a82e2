//! Comparison methods: probabilistic matrix factorization fitted by
//! alternating ridge solves, regularized SVD fitted by SGD, and a CTR-style
//! configuration of the joint model with one topic matrix shared by all jobs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Observations, PairDocument};
use crate::error::{Error, Result};
use crate::inference::{fit_with_layout, Corpus, FitResult, TopicLayout};
use crate::linalg::{add_outer, dot, scaled_identity, solve_spd_in};
use crate::par;
use crate::types::Hyperparams;

const INIT_STD: f64 = 0.1;
const DIVERGENCE_LIMIT: f64 = 1e6;

/// Observed cells of a rows × cols matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return Err(Error::InvalidArgument(format!("cell ({r}, {c}) outside a {rows}×{cols} matrix")));
        }
        if entries.iter().any(|(_, _, x)| !x.is_finite()) {
            return Err(Error::NonFinite("SparseMatrix"));
        }
        Ok(SparseMatrix { rows, cols, entries })
    }

    /// Job × company salary matrix from observations.
    pub fn salaries(obs: &Observations, rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, obs.salaries.iter().map(|(k, &s)| (k.job, k.company, s)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorMethod {
    Pmf,
    Rsvd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub method: FactorMethod,
    pub k: usize,
    pub lambda_row: f64,
    pub lambda_col: f64,
    pub learning_rate: Option<f64>,
    pub row_factors: Vec<Vec<f64>>,
    pub col_factors: Vec<Vec<f64>>,
}

impl FactorModel {
    /// Inner-product prediction; rows or columns never seen in training have
    /// zero factors.
    pub fn predict(&self, row: usize, col: usize) -> f64 {
        match (self.row_factors.get(row), self.col_factors.get(col)) {
            (Some(r), Some(c)) => dot(r, c),
            _ => 0.0,
        }
    }

    /// `½ Σ_obs (y − rᵀc)² + λ_row/2 Σ‖r‖² + λ_col/2 Σ‖c‖²`.
    pub fn objective(&self, m: &SparseMatrix) -> f64 {
        let sq: f64 = m.entries.iter().map(|&(r, c, y)| (y - self.predict(r, c)).powi(2)).sum();
        let reg = |fs: &[Vec<f64>]| fs.iter().map(|f| dot(f, f)).sum::<f64>();
        0.5 * sq + 0.5 * self.lambda_row * reg(&self.row_factors) + 0.5 * self.lambda_col * reg(&self.col_factors)
    }
}

fn random_factors(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    (0..n).map(|_| (0..k).map(|_| normal.sample(rng)).collect()).collect()
}

fn check_common(k: usize, lambdas: &[f64]) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("regularization weights must be positive".into()));
    }
    Ok(())
}

/// Ridge solve for every factor on one side, holding the other side fixed.
/// `cells[i]` lists `(other index, value)` for factor `i`.
fn ridge_side(cells: &[Vec<(usize, f64)>], other: &[Vec<f64>], k: usize, lambda: f64, side: &str) -> Result<Vec<Vec<f64>>> {
    par::map_indexed(cells.len(), |i| {
        let mut a = scaled_identity(k, lambda);
        let mut rhs = vec![0.0; k];
        for &(o, y) in &cells[i] {
            add_outer(&mut a, &other[o], 1.0);
            for (r, x) in rhs.iter_mut().zip(&other[o]) {
                *r += x * y;
            }
        }
        solve_spd_in(&a, &rhs, &format!("pmf {side} {i}"))
    })
    .into_iter()
    .collect()
}

/// MAP factors of the Gaussian-prior model by alternating ridge least
/// squares. Returns the model and the objective after every half-step (rows,
/// then columns), which is non-increasing.
pub fn fit_pmf(
    m: &SparseMatrix,
    k: usize,
    lambda_row: f64,
    lambda_col: f64,
    iters: usize,
    seed: u64,
) -> Result<(FactorModel, Vec<f64>)> {
    check_common(k, &[lambda_row, lambda_col])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = FactorModel {
        method: FactorMethod::Pmf,
        k,
        lambda_row,
        lambda_col,
        learning_rate: None,
        row_factors: random_factors(&mut rng, m.rows, k),
        col_factors: random_factors(&mut rng, m.cols, k),
    };
    let mut by_row = vec![Vec::new(); m.rows];
    let mut by_col = vec![Vec::new(); m.cols];
    for &(r, c, y) in &m.entries {
        by_row[r].push((c, y));
        by_col[c].push((r, y));
    }
    let mut trace = Vec::with_capacity(2 * iters);
    for _ in 0..iters {
        model.row_factors = ridge_side(&by_row, &model.col_factors, k, lambda_row, "row")?;
        trace.push(model.objective(m));
        model.col_factors = ridge_side(&by_col, &model.row_factors, k, lambda_col, "column")?;
        trace.push(model.objective(m));
    }
    Ok((model, trace))
}

/// Regularized SVD by stochastic gradient descent over observed cells, in a
/// seeded shuffled order each epoch.
pub fn fit_rsvd(m: &SparseMatrix, k: usize, lambda: f64, learning_rate: f64, epochs: usize, seed: u64) -> Result<FactorModel> {
    check_common(k, &[lambda])?;
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {learning_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = FactorModel {
        method: FactorMethod::Rsvd,
        k,
        lambda_row: lambda,
        lambda_col: lambda,
        learning_rate: Some(learning_rate),
        row_factors: random_factors(&mut rng, m.rows, k),
        col_factors: random_factors(&mut rng, m.cols, k),
    };
    let mut order: Vec<usize> = (0..m.entries.len()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (r, c, y) = m.entries[idx];
            let err = y - dot(&model.row_factors[r], &model.col_factors[c]);
            for t in 0..k {
                let (rv, cv) = (model.row_factors[r][t], model.col_factors[c][t]);
                model.row_factors[r][t] += learning_rate * (err * cv - lambda * rv);
                model.col_factors[c][t] += learning_rate * (err * rv - lambda * cv);
            }
        }
        let obj = model.objective(m);
        if !obj.is_finite() || obj > DIVERGENCE_LIMIT {
            return Err(Error::Divergence(obj));
        }
    }
    Ok(model)
}

/// Pools positive and negative tokens into the positive side.
pub fn pool_document(doc: &PairDocument) -> PairDocument {
    let mut counts = std::collections::BTreeMap::new();
    for &(t, c) in doc.pos.iter().chain(&doc.neg) {
        *counts.entry(t).or_insert(0u32) += c;
    }
    PairDocument::from_counts(doc.key, &counts, &Default::default())
}

pub fn ctr_mode_corpus(corpus: &Corpus) -> Corpus {
    Corpus {
        documents: corpus.documents.iter().map(pool_document).collect(),
        ..corpus.clone()
    }
}

/// The joint model restricted to a CTR-like configuration: one topic matrix
/// shared across jobs, pros and cons pooled, ratings unused.
pub fn fit_ctr_mode(corpus: &Corpus, obs: &Observations, hyper: &Hyperparams) -> Result<FitResult> {
    fit_with_layout(&ctr_mode_corpus(corpus), &obs.without_ratings(), hyper, TopicLayout::Shared)
}
