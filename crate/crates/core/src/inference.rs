//! MAP learning of the joint model: closed-form ridge updates for the job
//! factors `u`, `b` and the pair factors `v`, interleaved with variational EM
//! over the per-pair topic proportions `θ` and the per-job positive/negative
//! topic-word matrices `β`, `φ`.
//!
//! The objective is
//!
//! ```text
//! L = −λ_b/2 Σ‖b_j‖² − λ_u/2 Σ‖u_j‖² − λ_r/2 Σ_obs (r − b_jᵀv)² − λ_s/2 Σ_obs (s − u_jᵀv)²
//!     − λ_v/2 Σ‖v − θ‖² + Σ_pairs Σ_w count(w) · log Σ_k θ_k β_{j,k,w}   (+ the same for cons/φ)
//! ```
//!
//! with rating and salary sums restricted to observed cells.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Observations, PairDocument};
use crate::error::{Error, Result};
use crate::linalg::{add_outer, dot, project_to_simplex, scaled_identity, solve_spd_in};
use crate::par;
use crate::sampling::dirichlet;
use crate::types::{Hyperparams, PairKey};

/// Lower clamp for θ entries inside the bound's gradient.
pub const THETA_FLOOR: f64 = 1e-12;

const MAX_HALVINGS: usize = 60;
const ARMIJO: f64 = 1e-4;

/// Documents plus the dimensions they index into.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<PairDocument>,
    pub n_jobs: usize,
    pub n_terms: usize,
}

impl Corpus {
    pub fn new(documents: Vec<PairDocument>, n_jobs: usize, n_terms: usize) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for d in &documents {
            if d.key.job >= n_jobs {
                return Err(Error::InvalidArgument(format!(
                    "document job id {} out of range ({n_jobs} jobs)",
                    d.key.job
                )));
            }
            if let Some(&(t, _)) = d.pos.iter().chain(&d.neg).find(|(t, _)| *t >= n_terms) {
                return Err(Error::InvalidArgument(format!(
                    "term id {t} out of range ({n_terms} terms)"
                )));
            }
            if !seen.insert(d.key) {
                return Err(Error::InvalidArgument(format!("duplicate document for pair {:?}", d.key)));
            }
        }
        Ok(Corpus {
            documents,
            n_jobs,
            n_terms,
        })
    }

    /// Same pairs with every document emptied.
    pub fn without_text(&self) -> Self {
        Corpus {
            documents: self.documents.iter().map(|d| PairDocument::empty(d.key)).collect(),
            ..self.clone()
        }
    }
}

/// Row-major K×G row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMatrix {
    pub k: usize,
    pub g: usize,
    pub data: Vec<f64>,
}

impl TopicMatrix {
    pub fn uniform(k: usize, g: usize) -> Self {
        TopicMatrix {
            k,
            g,
            data: vec![1.0 / g as f64; k * g],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let k = rows.len();
        let g = rows.first().map_or(0, |r| r.len());
        TopicMatrix {
            k,
            g,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn get(&self, topic: usize, term: usize) -> f64 {
        self.data[topic * self.g + term]
    }

    pub fn row(&self, topic: usize) -> &[f64] {
        &self.data[topic * self.g..(topic + 1) * self.g]
    }

    /// Builds a row-stochastic matrix from non-negative weights plus additive
    /// smoothing. Rows with zero total mass become uniform.
    pub fn normalized(k: usize, g: usize, mut weights: Vec<f64>, smooth: f64) -> Self {
        for row in weights.chunks_mut(g) {
            for x in row.iter_mut() {
                *x += smooth;
            }
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for x in row.iter_mut() {
                    *x /= total;
                }
            } else {
                row.fill(1.0 / g as f64);
            }
        }
        TopicMatrix { k, g, data: weights }
    }
}

/// How topic-word matrices are tied across jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopicLayout {
    /// One positive and one negative matrix per job.
    #[default]
    PerJob,
    /// A single matrix pair shared by every job (stored replicated per job).
    Shared,
}

/// All learned latent quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub k: usize,
    pub g: usize,
    pub n_jobs: usize,
    pub layout: TopicLayout,
    pub pairs: Vec<PairKey>,
    pub theta: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub beta: Vec<TopicMatrix>,
    pub varphi: Vec<TopicMatrix>,
}

impl ModelState {
    pub fn pair_index(&self, key: PairKey) -> Option<usize> {
        self.pairs.binary_search(&key).ok()
    }

    /// Checks the simplex, positivity and shape invariants.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(format!("model invariant violated: {m}")));
        if self.theta.len() != self.pairs.len() || self.v.len() != self.pairs.len() {
            return fail("pair-indexed vectors do not match the pair list".into());
        }
        if self.u.len() != self.n_jobs || self.b.len() != self.n_jobs {
            return fail("job-indexed vectors do not match n_jobs".into());
        }
        if self.beta.len() != self.n_jobs || self.varphi.len() != self.n_jobs {
            return fail("topic matrices do not match n_jobs".into());
        }
        if self.pairs.windows(2).any(|w| w[0] >= w[1]) {
            return fail("pairs are not strictly sorted".into());
        }
        for (i, t) in self.theta.iter().enumerate() {
            let s: f64 = t.iter().sum();
            if t.len() != self.k || (s - 1.0).abs() > tol || t.iter().any(|x| !(*x >= 0.0)) {
                return fail(format!("theta of pair {i} is not on the simplex"));
            }
        }
        for (j, m) in self.beta.iter().chain(&self.varphi).enumerate() {
            if m.k != self.k || m.g != self.g || m.data.len() != self.k * self.g {
                return fail(format!("topic matrix {j} has the wrong shape"));
            }
            for r in 0..m.k {
                let row = m.row(r);
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > tol || row.iter().any(|x| !(*x > 0.0)) {
                    return fail(format!("topic matrix {j} row {r} is not a positive distribution"));
                }
            }
        }
        let all_finite = self
            .u
            .iter()
            .chain(&self.b)
            .chain(&self.v)
            .all(|x| x.iter().all(|y| y.is_finite()));
        if !all_finite {
            return fail("non-finite latent factor".into());
        }
        Ok(())
    }
}

/// Per-token soft topic assignments for one pair, stored per distinct term in
/// the same order as the document's `pos`/`neg` lists (stride `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalAssignments {
    pub k: usize,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

impl VariationalAssignments {
    pub fn pos_row(&self, i: usize) -> &[f64] {
        &self.pos[i * self.k..(i + 1) * self.k]
    }

    pub fn neg_row(&self, i: usize) -> &[f64] {
        &self.neg[i * self.k..(i + 1) * self.k]
    }

    /// Expected number of tokens assigned to each topic.
    pub fn topic_counts(&self, doc: &PairDocument) -> Vec<f64> {
        let mut n = vec![0.0; self.k];
        for (i, &(_, c)) in doc.pos.iter().enumerate() {
            for (nk, p) in n.iter_mut().zip(self.pos_row(i)) {
                *nk += c as f64 * p;
            }
        }
        for (i, &(_, c)) in doc.neg.iter().enumerate() {
            for (nk, p) in n.iter_mut().zip(self.neg_row(i)) {
                *nk += c as f64 * p;
            }
        }
        n
    }
}

// ---------------------------------------------------------------------------
// observation lookups

/// Observed rating/salary per pair (aligned with the model's pair list) and
/// the pair indices belonging to each job.
#[derive(Debug, Clone)]
pub(crate) struct PairIndex {
    pub rating: Vec<Option<f64>>,
    pub salary: Vec<Option<f64>>,
    pub job_pairs: Vec<Vec<usize>>,
}

impl PairIndex {
    pub fn new(pairs: &[PairKey], n_jobs: usize, obs: &Observations) -> Self {
        let mut job_pairs = vec![Vec::new(); n_jobs];
        for (i, p) in pairs.iter().enumerate() {
            job_pairs[p.job].push(i);
        }
        let unmatched = obs
            .salaries
            .keys()
            .chain(obs.ratings.keys())
            .filter(|k| pairs.binary_search(k).is_err())
            .count();
        if unmatched > 0 {
            log::warn!("{unmatched} observations have no document and are ignored");
        }
        PairIndex {
            rating: pairs.iter().map(|p| obs.ratings.get(p).copied()).collect(),
            salary: pairs.iter().map(|p| obs.salaries.get(p).copied()).collect(),
            job_pairs,
        }
    }
}

// ---------------------------------------------------------------------------
// closed-form updates

/// Ridge solve `(λ_prior I + λ_obs Σ v vᵀ)⁻¹ λ_obs Σ v y` over observed cells.
fn ridge_factor<'a>(
    k: usize,
    lambda_prior: f64,
    lambda_obs: f64,
    cells: impl Iterator<Item = (&'a [f64], f64)>,
    context: impl FnOnce() -> String,
) -> Result<Vec<f64>> {
    let mut a = scaled_identity(k, lambda_prior);
    let mut rhs = vec![0.0; k];
    let mut any = false;
    for (v, y) in cells {
        any = true;
        add_outer(&mut a, v, lambda_obs);
        for (r, vi) in rhs.iter_mut().zip(v) {
            *r += lambda_obs * vi * y;
        }
    }
    if !any {
        return Ok(vec![0.0; k]);
    }
    solve_spd_in(&a, &rhs, &context())
}

/// `v = (λ_v I + λ_s u uᵀ + λ_r b bᵀ)⁻¹ (λ_v θ + λ_s u s + λ_r b r)` with the
/// salary and rating terms present only when observed.
pub(crate) fn solve_pair_factor(
    theta: &[f64],
    u: &[f64],
    b: &[f64],
    salary: Option<f64>,
    rating: Option<f64>,
    hyper: &Hyperparams,
    context: impl FnOnce() -> String,
) -> Result<Vec<f64>> {
    if salary.is_none() && rating.is_none() {
        return Ok(theta.to_vec());
    }
    let k = theta.len();
    let mut a = scaled_identity(k, hyper.lambda_v);
    let mut rhs: Vec<f64> = theta.iter().map(|t| hyper.lambda_v * t).collect();
    if let Some(s) = salary {
        add_outer(&mut a, u, hyper.lambda_s);
        for (r, ui) in rhs.iter_mut().zip(u) {
            *r += hyper.lambda_s * ui * s;
        }
    }
    if let Some(r) = rating {
        add_outer(&mut a, b, hyper.lambda_r);
        for (x, bi) in rhs.iter_mut().zip(b) {
            *x += hyper.lambda_r * bi * r;
        }
    }
    solve_spd_in(&a, &rhs, &context())
}

fn job_cells<'a>(
    state: &'a ModelState,
    job: usize,
    obs: &'a BTreeMap<PairKey, f64>,
) -> impl Iterator<Item = (&'a [f64], f64)> + 'a {
    state
        .pairs
        .iter()
        .enumerate()
        .filter(move |(_, p)| p.job == job)
        .filter_map(move |(i, p)| obs.get(p).map(|&y| (state.v[i].as_slice(), y)))
}

/// Salary factor of `job` maximizing the objective with everything else fixed.
pub fn update_u(job: usize, state: &ModelState, obs: &Observations, hyper: &Hyperparams) -> Result<Vec<f64>> {
    ridge_factor(
        state.k,
        hyper.lambda_u,
        hyper.lambda_s,
        job_cells(state, job, &obs.salaries),
        || format!("update_u(job {job})"),
    )
}

/// Rating factor of `job` maximizing the objective with everything else fixed.
pub fn update_b(job: usize, state: &ModelState, obs: &Observations, hyper: &Hyperparams) -> Result<Vec<f64>> {
    ridge_factor(
        state.k,
        hyper.lambda_b,
        hyper.lambda_r,
        job_cells(state, job, &obs.ratings),
        || format!("update_b(job {job})"),
    )
}

/// Pair factor maximizing the objective with everything else fixed.
pub fn update_v(pair: PairKey, state: &ModelState, obs: &Observations, hyper: &Hyperparams) -> Result<Vec<f64>> {
    let i = state.pair_index(pair).ok_or_else(|| Error::UnknownPair {
        job: pair.job.to_string(),
        company: pair.company.to_string(),
    })?;
    solve_pair_factor(
        &state.theta[i],
        &state.u[pair.job],
        &state.b[pair.job],
        obs.salaries.get(&pair).copied(),
        obs.ratings.get(&pair).copied(),
        hyper,
        || format!("update_v(job {}, company {})", pair.job, pair.company),
    )
}

// ---------------------------------------------------------------------------
// gradients of the objective (used for stationarity checks)

/// ∂L/∂u_j.
pub fn grad_u(job: usize, state: &ModelState, obs: &Observations, hyper: &Hyperparams) -> Vec<f64> {
    factor_gradient(&state.u[job], hyper.lambda_u, hyper.lambda_s, job_cells(state, job, &obs.salaries))
}

/// ∂L/∂b_j.
pub fn grad_b(job: usize, state: &ModelState, obs: &Observations, hyper: &Hyperparams) -> Vec<f64> {
    factor_gradient(&state.b[job], hyper.lambda_b, hyper.lambda_r, job_cells(state, job, &obs.ratings))
}

fn factor_gradient<'a>(
    x: &[f64],
    lambda_prior: f64,
    lambda_obs: f64,
    cells: impl Iterator<Item = (&'a [f64], f64)>,
) -> Vec<f64> {
    let mut g: Vec<f64> = x.iter().map(|xi| -lambda_prior * xi).collect();
    for (v, y) in cells {
        let resid = y - dot(x, v);
        for (gi, vi) in g.iter_mut().zip(v) {
            *gi += lambda_obs * resid * vi;
        }
    }
    g
}

/// ∂L/∂v for pair index `i`.
pub fn grad_v(i: usize, state: &ModelState, obs: &Observations, hyper: &Hyperparams) -> Vec<f64> {
    let key = state.pairs[i];
    let (u, b, v, theta) = (&state.u[key.job], &state.b[key.job], &state.v[i], &state.theta[i]);
    let mut g: Vec<f64> = v.iter().zip(theta).map(|(vi, ti)| -hyper.lambda_v * (vi - ti)).collect();
    if let Some(&s) = obs.salaries.get(&key) {
        let r = s - dot(u, v);
        for (gi, ui) in g.iter_mut().zip(u) {
            *gi += hyper.lambda_s * r * ui;
        }
    }
    if let Some(&y) = obs.ratings.get(&key) {
        let r = y - dot(b, v);
        for (gi, bi) in g.iter_mut().zip(b) {
            *gi += hyper.lambda_r * r * bi;
        }
    }
    g
}

// ---------------------------------------------------------------------------
// variational E-step and proportion update

fn assign_side(theta: &[f64], terms: &[(usize, u32)], topics: &TopicMatrix) -> Vec<f64> {
    let k = theta.len();
    let mut out = Vec::with_capacity(terms.len() * k);
    for &(w, _) in terms {
        let start = out.len();
        let mut z = 0.0;
        for (t, th) in theta.iter().enumerate() {
            let p = th * topics.get(t, w);
            z += p;
            out.push(p);
        }
        if z > 0.0 {
            for p in &mut out[start..] {
                *p /= z;
            }
        } else {
            // term has zero mass under every active topic; fall back to θ
            out[start..].copy_from_slice(theta);
        }
    }
    out
}

/// Optimal per-term assignments `φ_k ∝ θ_k β_{k,w}` (pros) and `θ_k φ_{k,w}` (cons).
pub fn e_step_pair(doc: &PairDocument, theta: &[f64], beta_j: &TopicMatrix, varphi_j: &TopicMatrix) -> VariationalAssignments {
    VariationalAssignments {
        k: theta.len(),
        pos: assign_side(theta, &doc.pos, beta_j),
        neg: assign_side(theta, &doc.neg, varphi_j),
    }
}

/// θ-dependent part of the variational bound:
/// `−λ_v/2 ‖v − θ‖² + Σ_k n_k log θ_k`, with `n` the expected topic counts.
pub fn theta_bound(theta: &[f64], v: &[f64], topic_counts: &[f64], lambda_v: f64) -> f64 {
    let mut f = 0.0;
    for ((t, vi), n) in theta.iter().zip(v).zip(topic_counts) {
        f -= 0.5 * lambda_v * (vi - t) * (vi - t);
        if *n > 0.0 {
            f += n * t.ln();
        }
    }
    f
}

/// Gradient of [`theta_bound`] with θ floored at [`THETA_FLOOR`].
pub fn theta_bound_gradient(theta: &[f64], v: &[f64], topic_counts: &[f64], lambda_v: f64) -> Vec<f64> {
    theta
        .iter()
        .zip(v)
        .zip(topic_counts)
        .map(|((t, vi), n)| lambda_v * (vi - t) + n / t.max(THETA_FLOOR))
        .collect()
}

/// The full per-pair lower bound on the θ-dependent objective terms:
/// `−λ_v/2‖v−θ‖² + Σ_tokens Σ_k φ_k (log θ_k β_{k,w} − log φ_k)` over both sides.
pub fn variational_bound(
    doc: &PairDocument,
    theta: &[f64],
    v: &[f64],
    assign: &VariationalAssignments,
    beta_j: &TopicMatrix,
    varphi_j: &TopicMatrix,
    lambda_v: f64,
) -> f64 {
    let k = theta.len();
    let side = |terms: &[(usize, u32)], rows: &[f64], topics: &TopicMatrix| -> f64 {
        let mut f = 0.0;
        for (i, &(w, c)) in terms.iter().enumerate() {
            let mut s = 0.0;
            for (t, &p) in rows[i * k..(i + 1) * k].iter().enumerate() {
                if p > 0.0 {
                    s += p * ((theta[t] * topics.get(t, w)).ln() - p.ln());
                }
            }
            f += c as f64 * s;
        }
        f
    };
    let quad: f64 = v.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * lambda_v * quad + side(&doc.pos, &assign.pos, beta_j) + side(&doc.neg, &assign.neg, varphi_j)
}

/// Exact log-marginal word likelihood of a pair document: `Σ count · log Σ_k θ_k β_{k,w}`.
pub fn document_log_likelihood(doc: &PairDocument, theta: &[f64], beta_j: &TopicMatrix, varphi_j: &TopicMatrix) -> f64 {
    let side = |terms: &[(usize, u32)], topics: &TopicMatrix| -> f64 {
        terms
            .iter()
            .map(|&(w, c)| {
                let p: f64 = theta.iter().enumerate().map(|(k, t)| t * topics.get(k, w)).sum();
                c as f64 * p.ln()
            })
            .sum()
    };
    side(&doc.pos, beta_j) + side(&doc.neg, varphi_j)
}

/// Projected-gradient ascent on the variational bound in θ, holding the
/// assignments and `v` fixed. Each step uses Armijo backtracking, so the bound
/// never decreases. An empty document reduces the bound to
/// `−λ_v/2 ‖v − θ‖²`, whose maximizer is the projection of `v`.
pub fn optimize_theta(
    doc: &PairDocument,
    theta: &[f64],
    v: &[f64],
    assign: &VariationalAssignments,
    hyper: &Hyperparams,
) -> Result<Vec<f64>> {
    if doc.is_empty() {
        return project_to_simplex(v);
    }
    let n = assign.topic_counts(doc);
    let lv = hyper.lambda_v;
    let mut cur = theta.to_vec();
    let mut f_cur = theta_bound(&cur, v, &n, lv);
    if !f_cur.is_finite() {
        // start from the interior if θ sits on a face that carries mass
        cur = project_to_simplex(&cur.iter().map(|t| t + 1e-6).collect::<Vec<_>>())?;
        f_cur = theta_bound(&cur, v, &n, lv);
    }
    let mut eta = 1.0;
    for _ in 0..hyper.theta_steps {
        let g = theta_bound_gradient(&cur, v, &n, lv);
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = cur.iter().zip(&g).map(|(t, gi)| t + eta * gi).collect();
            let cand = project_to_simplex(&trial)?;
            let ascent: f64 = g.iter().zip(cand.iter().zip(&cur)).map(|(gi, (c, t))| gi * (c - t)).sum();
            let f_cand = theta_bound(&cand, v, &n, lv);
            if f_cand.is_finite() && f_cand >= f_cur + ARMIJO * ascent && f_cand > f_cur {
                cur = cand;
                f_cur = f_cand;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        eta *= 2.0;
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// M-step

/// Expected term counts `Σ count · φ_k` accumulated into a K×G buffer.
fn accumulate(into: &mut [f64], g: usize, terms: &[(usize, u32)], rows: &[f64], k: usize) {
    for (i, &(w, c)) in terms.iter().enumerate() {
        for t in 0..k {
            into[t * g + w] += c as f64 * rows[i * k + t];
        }
    }
}

/// Re-estimates topic-word matrices from the assignments: per job and topic,
/// `β_{k,g} ∝ topic_smooth + Σ_pairs count(g) φ_k`, analogously for cons.
/// `assignments[i]` belongs to `corpus.documents[i]`.
pub fn m_step_topics(
    corpus: &Corpus,
    assignments: &[VariationalAssignments],
    hyper: &Hyperparams,
    layout: TopicLayout,
) -> (Vec<TopicMatrix>, Vec<TopicMatrix>) {
    let mut job_docs = vec![Vec::new(); corpus.n_jobs];
    for (i, d) in corpus.documents.iter().enumerate() {
        job_docs[d.key.job].push(i);
    }
    m_step_indexed(corpus, &job_docs, assignments, hyper, layout)
}

fn m_step_indexed(
    corpus: &Corpus,
    job_docs: &[Vec<usize>],
    assignments: &[VariationalAssignments],
    hyper: &Hyperparams,
    layout: TopicLayout,
) -> (Vec<TopicMatrix>, Vec<TopicMatrix>) {
    let (k, g) = (hyper.k_topics, corpus.n_terms);
    let per_job: Vec<(Vec<f64>, Vec<f64>)> = par::map_indexed(corpus.n_jobs, |j| {
        let mut pos = vec![0.0; k * g];
        let mut neg = vec![0.0; k * g];
        for &i in &job_docs[j] {
            let d = &corpus.documents[i];
            accumulate(&mut pos, g, &d.pos, &assignments[i].pos, k);
            accumulate(&mut neg, g, &d.neg, &assignments[i].neg, k);
        }
        (pos, neg)
    });
    let smooth = hyper.topic_smooth;
    match layout {
        TopicLayout::PerJob => per_job
            .into_iter()
            .map(|(p, n)| (TopicMatrix::normalized(k, g, p, smooth), TopicMatrix::normalized(k, g, n, smooth)))
            .unzip(),
        TopicLayout::Shared => {
            let mut pos = vec![0.0; k * g];
            let mut neg = vec![0.0; k * g];
            for (p, n) in &per_job {
                pos.iter_mut().zip(p).for_each(|(a, b)| *a += b);
                neg.iter_mut().zip(n).for_each(|(a, b)| *a += b);
            }
            let beta = TopicMatrix::normalized(k, g, pos, smooth);
            let varphi = TopicMatrix::normalized(k, g, neg, smooth);
            (vec![beta; corpus.n_jobs], vec![varphi; corpus.n_jobs])
        }
    }
}

// ---------------------------------------------------------------------------
// objective

/// The MAP objective with masked observation sums and per-job topics.
pub fn compute_objective(state: &ModelState, corpus: &Corpus, obs: &Observations, hyper: &Hyperparams) -> f64 {
    let index = PairIndex::new(&state.pairs, state.n_jobs, obs);
    objective_indexed(state, corpus, &index, hyper)
}

fn objective_indexed(state: &ModelState, corpus: &Corpus, index: &PairIndex, hyper: &Hyperparams) -> f64 {
    let job_terms: f64 = state
        .u
        .iter()
        .zip(&state.b)
        .map(|(u, b)| -0.5 * hyper.lambda_u * dot(u, u) - 0.5 * hyper.lambda_b * dot(b, b))
        .sum();
    let pair_terms = par::map_indexed(state.pairs.len(), |i| {
        let key = state.pairs[i];
        let (u, b, v, theta) = (&state.u[key.job], &state.b[key.job], &state.v[i], &state.theta[i]);
        let mut f = 0.0;
        if let Some(s) = index.salary[i] {
            let r = s - dot(u, v);
            f -= 0.5 * hyper.lambda_s * r * r;
        }
        if let Some(y) = index.rating[i] {
            let r = y - dot(b, v);
            f -= 0.5 * hyper.lambda_r * r * r;
        }
        f -= 0.5 * hyper.lambda_v * v.iter().zip(theta).map(|(a, t)| (a - t) * (a - t)).sum::<f64>();
        f + document_log_likelihood(&corpus.documents[i], theta, &state.beta[key.job], &state.varphi[key.job])
    });
    job_terms + pair_terms.iter().sum::<f64>()
}

/// `topic_smooth · Σ log β` over every distinct topic matrix: the log-prior the
/// smoothed M-step maximizes alongside the data terms.
pub fn topic_log_prior(state: &ModelState, hyper: &Hyperparams) -> f64 {
    if hyper.topic_smooth == 0.0 {
        return 0.0;
    }
    let mats: Vec<&TopicMatrix> = match state.layout {
        TopicLayout::PerJob => state.beta.iter().chain(&state.varphi).collect(),
        TopicLayout::Shared => state.beta.iter().take(1).chain(state.varphi.iter().take(1)).collect(),
    };
    hyper.topic_smooth * mats.iter().flat_map(|m| m.data.iter()).map(|x| x.ln()).sum::<f64>()
}

// ---------------------------------------------------------------------------
// initialization and training loop

pub fn init_model(corpus: &Corpus, hyper: &Hyperparams) -> Result<ModelState> {
    init_model_with(corpus, hyper, TopicLayout::PerJob)
}

/// Seeded initialization: θ ~ Dir(alpha_smooth), topic rows ~ Dir(1) then
/// smoothed, `v = θ`, `u = b = 0`.
pub fn init_model_with(corpus: &Corpus, hyper: &Hyperparams, layout: TopicLayout) -> Result<ModelState> {
    hyper.validate()?;
    if corpus.documents.is_empty() {
        return Err(Error::EmptyInput("init_model: no job-company pairs"));
    }
    if corpus.n_terms == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let (k, g, n_jobs) = (hyper.k_topics, corpus.n_terms, corpus.n_jobs);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let draw_topics = |rng: &mut ChaCha8Rng| {
        let data: Vec<f64> = (0..k).flat_map(|_| dirichlet(rng, 1.0, g)).collect();
        TopicMatrix::normalized(k, g, data, hyper.topic_smooth / g as f64)
    };
    let (beta, varphi) = match layout {
        TopicLayout::PerJob => {
            let beta: Vec<_> = (0..n_jobs).map(|_| draw_topics(&mut rng)).collect();
            let varphi: Vec<_> = (0..n_jobs).map(|_| draw_topics(&mut rng)).collect();
            (beta, varphi)
        }
        TopicLayout::Shared => {
            let b = draw_topics(&mut rng);
            let p = draw_topics(&mut rng);
            (vec![b; n_jobs], vec![p; n_jobs])
        }
    };

    let mut order: Vec<usize> = (0..corpus.documents.len()).collect();
    order.sort_by_key(|&i| corpus.documents[i].key);
    let pairs: Vec<PairKey> = order.iter().map(|&i| corpus.documents[i].key).collect();
    let theta: Vec<Vec<f64>> = pairs.iter().map(|_| dirichlet(&mut rng, hyper.alpha_smooth, k)).collect();
    Ok(ModelState {
        k,
        g,
        n_jobs,
        layout,
        v: theta.clone(),
        theta,
        pairs,
        u: vec![vec![0.0; k]; n_jobs],
        b: vec![vec![0.0; k]; n_jobs],
        beta,
        varphi,
    })
}

/// Result of [`fit`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: ModelState,
    /// Training objective after each sweep.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Step-wise trainer. One sweep is `update_jobs`, `update_pair_factors`,
/// `update_proportions`, `update_topics`; the phases are exposed so callers can
/// inspect intermediate states.
pub struct Trainer<'a> {
    corpus: Corpus,
    hyper: &'a Hyperparams,
    index: PairIndex,
    state: ModelState,
}

impl<'a> Trainer<'a> {
    pub fn new(corpus: &Corpus, obs: &Observations, hyper: &'a Hyperparams, layout: TopicLayout) -> Result<Self> {
        let state = init_model_with(corpus, hyper, layout)?;
        // documents reordered to match the sorted pair list
        let mut documents = corpus.documents.clone();
        documents.sort_by_key(|d| d.key);
        let corpus = Corpus { documents, ..corpus.clone() };
        let index = PairIndex::new(&state.pairs, state.n_jobs, obs);
        Ok(Trainer {
            corpus,
            hyper,
            index,
            state,
        })
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    /// Documents in model pair order.
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }

    /// Closed-form `u_j` and `b_j` for every job given the current `v`.
    pub fn update_jobs(&mut self) -> Result<()> {
        let (state, index, hyper) = (&self.state, &self.index, self.hyper);
        let k = state.k;
        let updates = par::map_indexed(state.n_jobs, |j| -> Result<(Vec<f64>, Vec<f64>)> {
            let pairs = &index.job_pairs[j];
            let u = ridge_factor(
                k,
                hyper.lambda_u,
                hyper.lambda_s,
                pairs.iter().filter_map(|&i| index.salary[i].map(|s| (state.v[i].as_slice(), s))),
                || format!("update_u(job {j})"),
            )?;
            let b = ridge_factor(
                k,
                hyper.lambda_b,
                hyper.lambda_r,
                pairs.iter().filter_map(|&i| index.rating[i].map(|r| (state.v[i].as_slice(), r))),
                || format!("update_b(job {j})"),
            )?;
            Ok((u, b))
        });
        for (j, up) in updates.into_iter().enumerate() {
            let (u, b) = up?;
            self.state.u[j] = u;
            self.state.b[j] = b;
        }
        Ok(())
    }

    /// Closed-form `v` for every pair given `u`, `b`, `θ`.
    pub fn update_pair_factors(&mut self) -> Result<()> {
        let (state, index, hyper) = (&self.state, &self.index, self.hyper);
        let vs = par::map_indexed(state.pairs.len(), |i| {
            let key = state.pairs[i];
            solve_pair_factor(
                &state.theta[i],
                &state.u[key.job],
                &state.b[key.job],
                index.salary[i],
                index.rating[i],
                hyper,
                || format!("update_v(job {}, company {})", key.job, key.company),
            )
        });
        for (i, v) in vs.into_iter().enumerate() {
            self.state.v[i] = v?;
        }
        Ok(())
    }

    /// E-step, θ ascent, then a refreshed E-step at the new θ. Returns the
    /// refreshed assignments for the M-step.
    pub fn update_proportions(&mut self) -> Result<Vec<VariationalAssignments>> {
        let (state, corpus, hyper) = (&self.state, &self.corpus, self.hyper);
        let results = par::map_indexed(state.pairs.len(), |i| -> Result<(Vec<f64>, VariationalAssignments)> {
            let job = state.pairs[i].job;
            let doc = &corpus.documents[i];
            let (beta, varphi) = (&state.beta[job], &state.varphi[job]);
            let assign = e_step_pair(doc, &state.theta[i], beta, varphi);
            let theta = optimize_theta(doc, &state.theta[i], &state.v[i], &assign, hyper)?;
            let assign = e_step_pair(doc, &theta, beta, varphi);
            Ok((theta, assign))
        });
        let mut assignments = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            let (theta, assign) = r?;
            self.state.theta[i] = theta;
            assignments.push(assign);
        }
        Ok(assignments)
    }

    pub fn update_topics(&mut self, assignments: &[VariationalAssignments]) {
        let (beta, varphi) = m_step_indexed(
            &self.corpus,
            &self.index.job_pairs,
            assignments,
            self.hyper,
            self.state.layout,
        );
        self.state.beta = beta;
        self.state.varphi = varphi;
    }

    /// The objective as written (no topic prior term).
    pub fn objective(&self) -> f64 {
        objective_indexed(&self.state, &self.corpus, &self.index, self.hyper)
    }

    /// The quantity each sweep ascends: the objective plus the topic log-prior
    /// implied by M-step smoothing.
    pub fn training_objective(&self) -> f64 {
        self.objective() + topic_log_prior(&self.state, self.hyper)
    }

    pub fn sweep(&mut self) -> Result<f64> {
        self.update_jobs()?;
        self.update_pair_factors()?;
        let assignments = self.update_proportions()?;
        self.update_topics(&assignments);
        Ok(self.training_objective())
    }

    pub fn run(mut self) -> Result<FitResult> {
        let mut trace = Vec::new();
        let mut converged = false;
        for it in 1..=self.hyper.max_iter {
            let obj = self.sweep()?;
            log::debug!("sweep {it}: objective {obj:.10e}");
            let prev = trace.last().copied();
            trace.push(obj);
            if let Some(prev) = prev {
                let rel = ((obj - prev) / prev).abs();
                if it >= self.hyper.min_iter && rel < self.hyper.rel_tol {
                    converged = true;
                    break;
                }
            }
        }
        log::info!("training finished after {} sweeps (converged: {converged})", trace.len());
        Ok(FitResult {
            state: self.state,
            trace,
            converged,
        })
    }
}

/// Trains the model with per-job topics.
pub fn fit(corpus: &Corpus, obs: &Observations, hyper: &Hyperparams) -> Result<FitResult> {
    fit_with_layout(corpus, obs, hyper, TopicLayout::PerJob)
}

pub fn fit_with_layout(corpus: &Corpus, obs: &Observations, hyper: &Hyperparams, layout: TopicLayout) -> Result<FitResult> {
    if obs.salaries.is_empty() {
        return Err(Error::EmptyInput("fit: no observed salaries"));
    }
    Trainer::new(corpus, obs, hyper, layout)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper(k: usize) -> Hyperparams {
        Hyperparams {
            k_topics: k,
            ..Hyperparams::default()
        }
    }

    fn state_with(k: usize, pairs: Vec<PairKey>, v: Vec<Vec<f64>>, theta: Vec<Vec<f64>>, n_jobs: usize) -> ModelState {
        ModelState {
            k,
            g: 2,
            n_jobs,
            layout: TopicLayout::PerJob,
            pairs,
            theta,
            v,
            u: vec![vec![0.0; k]; n_jobs],
            b: vec![vec![0.0; k]; n_jobs],
            beta: vec![TopicMatrix::uniform(k, 2); n_jobs],
            varphi: vec![TopicMatrix::uniform(k, 2); n_jobs],
        }
    }

    fn obs(salaries: &[(PairKey, f64)], ratings: &[(PairKey, f64)]) -> Observations {
        Observations::normalized(ratings.iter().copied().collect(), salaries.iter().copied().collect())
    }

    #[test]
    fn u_is_zero_without_salaries() {
        let p = PairKey::new(0, 0);
        let s = state_with(2, vec![p], vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]], 1);
        assert_eq!(update_u(0, &s, &obs(&[], &[]), &hyper(2)).unwrap(), vec![0.0, 0.0]);
        assert_eq!(update_b(0, &s, &obs(&[], &[]), &hyper(2)).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn u_scalar_case() {
        let p = PairKey::new(0, 0);
        let s = state_with(1, vec![p], vec![vec![1.0]], vec![vec![1.0]], 1);
        let h = Hyperparams {
            k_topics: 1,
            lambda_u: 1.0,
            lambda_s: 1.0,
            ..Hyperparams::default()
        };
        let u = update_u(0, &s, &obs(&[(p, 0.5)], &[]), &h).unwrap();
        assert!((u[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn u_two_dim_case() {
        let p = PairKey::new(0, 0);
        let s = state_with(2, vec![p], vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]], 1);
        let h = Hyperparams {
            k_topics: 2,
            lambda_u: 1.0,
            lambda_s: 1.0,
            ..Hyperparams::default()
        };
        let u = update_u(0, &s, &obs(&[(p, 1.0)], &[]), &h).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && u[1].abs() < 1e-15);
    }

    #[test]
    fn b_scalar_case_and_ridge_shrinkage() {
        let p = PairKey::new(0, 0);
        let s = state_with(1, vec![p], vec![vec![1.0]], vec![vec![1.0]], 1);
        let mut h = Hyperparams {
            k_topics: 1,
            lambda_b: 1.0,
            lambda_r: 1.0,
            ..Hyperparams::default()
        };
        let o = obs(&[], &[(p, 1.0)]);
        let b1 = update_b(0, &s, &o, &h).unwrap();
        assert!((b1[0] - 0.5).abs() < 1e-15);
        h.lambda_b = 2.0;
        let b2 = update_b(0, &s, &o, &h).unwrap();
        assert!(b2[0].abs() < b1[0].abs());
    }

    #[test]
    fn v_collapses_to_theta() {
        let p = PairKey::new(0, 0);
        let theta = vec![0.2, 0.8];
        let s = state_with(2, vec![p], vec![vec![0.0, 0.0]], vec![theta.clone()], 1);
        // u = b = 0 with observations present
        let v = update_v(p, &s, &obs(&[(p, 0.4)], &[(p, 0.9)]), &hyper(2)).unwrap();
        for (a, b) in v.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-15);
        }
        // no observations at all: exact copy
        let mut s2 = s.clone();
        s2.u[0] = vec![3.0, -1.0];
        assert_eq!(update_v(p, &s2, &obs(&[], &[]), &hyper(2)).unwrap(), theta);
    }

    #[test]
    fn v_scalar_case() {
        let p = PairKey::new(0, 0);
        let mut s = state_with(1, vec![p], vec![vec![0.0]], vec![vec![0.0]], 1);
        s.u[0] = vec![1.0];
        let h = Hyperparams {
            k_topics: 1,
            lambda_v: 1.0,
            lambda_s: 1.0,
            ..Hyperparams::default()
        };
        let v = update_v(p, &s, &obs(&[(p, 1.0)], &[]), &h).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn e_step_examples() {
        let doc = PairDocument::from_tokens(PairKey::new(0, 0), &[0], &[1]);
        let beta = TopicMatrix::from_rows(&[vec![0.1, 0.9], vec![0.2, 0.8]]);
        let a = e_step_pair(&doc, &[0.5, 0.5], &beta, &beta);
        assert!((a.pos_row(0)[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.pos_row(0)[1] - 2.0 / 3.0).abs() < 1e-15);

        let a = e_step_pair(&doc, &[1.0, 0.0], &beta, &beta);
        assert_eq!(a.pos_row(0), &[1.0, 0.0]);
        assert_eq!(a.neg_row(0), &[1.0, 0.0]);

        let uni = TopicMatrix::uniform(3, 2);
        let a = e_step_pair(&doc, &[1.0 / 3.0; 3], &uni, &uni);
        for p in a.pos_row(0) {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn optimize_theta_empty_document_projects_v() {
        let doc = PairDocument::empty(PairKey::new(0, 0));
        let a = VariationalAssignments {
            k: 2,
            pos: vec![],
            neg: vec![],
        };
        let t = optimize_theta(&doc, &[0.5, 0.5], &[0.6, 0.2], &a, &hyper(2)).unwrap();
        assert!((t[0] - 0.7).abs() < 1e-15 && (t[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn optimize_theta_moves_toward_evidence() {
        // term 0 is topic 0's signature
        let beta = TopicMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]);
        let doc = PairDocument::from_tokens(PairKey::new(0, 0), &[0; 20], &[]);
        let h = Hyperparams {
            k_topics: 2,
            lambda_v: 1e-3,
            ..Hyperparams::default()
        };
        let theta = vec![0.5, 0.5];
        let v = vec![0.5, 0.5];
        let a = e_step_pair(&doc, &theta, &beta, &beta);
        let before = variational_bound(&doc, &theta, &v, &a, &beta, &beta, h.lambda_v);
        let t = optimize_theta(&doc, &theta, &v, &a, &h).unwrap();
        let after = variational_bound(&doc, &t, &v, &a, &beta, &beta, h.lambda_v);
        assert!(t[0] > 0.9, "{t:?}");
        assert!(after > before);
    }

    #[test]
    fn optimize_theta_fixed_point() {
        // with λ_v tiny the bound optimum is θ ∝ n; start there
        let beta = TopicMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]);
        let doc = PairDocument::from_tokens(PairKey::new(0, 0), &[0, 0, 0, 1], &[]);
        let h = Hyperparams {
            k_topics: 2,
            lambda_v: 1.0,
            ..Hyperparams::default()
        };
        let theta0 = vec![0.6, 0.4];
        let a = e_step_pair(&doc, &theta0, &beta, &beta);
        let n = a.topic_counts(&doc);
        // choose v so that θ0 is stationary: λ_v (v − θ) + n/θ = c·1
        let c = n[0] / theta0[0];
        let v: Vec<f64> = (0..2).map(|k| theta0[k] + (c - n[k] / theta0[k]) / h.lambda_v).collect();
        let t = optimize_theta(&doc, &theta0, &v, &a, &h).unwrap();
        for (x, y) in t.iter().zip(&theta0) {
            assert!((x - y).abs() < 1e-10, "{t:?}");
        }
    }

    #[test]
    fn m_step_examples() {
        let h = Hyperparams {
            k_topics: 2,
            topic_smooth: 0.0,
            ..Hyperparams::default()
        };
        let d = PairDocument::from_tokens(PairKey::new(0, 0), &[0, 0], &[]);
        let corpus = Corpus::new(vec![d.clone()], 1, 3).unwrap();
        let a = e_step_pair(&d, &[1.0, 0.0], &TopicMatrix::uniform(2, 3), &TopicMatrix::uniform(2, 3));
        let (beta, _) = m_step_topics(&corpus, std::slice::from_ref(&a), &h, TopicLayout::PerJob);
        assert_eq!(beta[0].row(0), &[1.0, 0.0, 0.0]);

        let hs = Hyperparams { topic_smooth: 0.5, ..h.clone() };
        let (beta, _) = m_step_topics(&corpus, &[a], &hs, TopicLayout::PerJob);
        for x in beta[0].row(1) {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }

        let d1 = PairDocument::from_tokens(PairKey::new(0, 0), &[0], &[]);
        let d2 = PairDocument::from_tokens(PairKey::new(0, 1), &[1], &[]);
        let corpus = Corpus::new(vec![d1.clone(), d2.clone()], 1, 3).unwrap();
        let uni = TopicMatrix::uniform(2, 3);
        let a1 = e_step_pair(&d1, &[1.0, 0.0], &uni, &uni);
        let a2 = e_step_pair(&d2, &[1.0, 0.0], &uni, &uni);
        let (beta, _) = m_step_topics(&corpus, &[a1, a2], &h, TopicLayout::PerJob);
        assert_eq!(beta[0].row(0), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn objective_examples() {
        let p = PairKey::new(0, 0);
        let corpus = Corpus::new(vec![PairDocument::empty(p)], 1, 2).unwrap();
        let mut s = state_with(2, vec![p], vec![vec![0.0, 0.0]], vec![vec![0.0, 0.0]], 1);
        let h = hyper(2);
        assert_eq!(compute_objective(&s, &corpus, &obs(&[], &[]), &h), 0.0);

        // perfect salary prediction contributes nothing
        s.u[0] = vec![1.0, 0.0];
        s.v[0] = vec![0.5, 0.5];
        s.theta[0] = vec![0.5, 0.5];
        let base = compute_objective(&s, &corpus, &obs(&[], &[]), &h);
        let with = compute_objective(&s, &corpus, &obs(&[(p, 0.5)], &[]), &h);
        assert_eq!(base, with);

        // single token under a degenerate θ
        let doc = PairDocument::from_tokens(p, &[1], &[]);
        let corpus = Corpus::new(vec![doc], 1, 2).unwrap();
        let mut s = state_with(2, vec![p], vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]], 1);
        s.beta[0] = TopicMatrix::from_rows(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let l = compute_objective(&s, &corpus, &obs(&[], &[]), &h);
        assert!((l - 0.25f64.ln()).abs() < 1e-15);
    }

    fn toy_corpus() -> (Corpus, Observations) {
        let mut docs = Vec::new();
        let mut sal = BTreeMap::new();
        let mut rat = BTreeMap::new();
        for j in 0..3 {
            for e in 0..6 {
                let key = PairKey::new(j, e);
                let pos: Vec<usize> = (0..12).map(|n| (n * (e + 1) + j) % 7).collect();
                let neg: Vec<usize> = (0..8).map(|n| (n + 2 * e) % 7).collect();
                docs.push(PairDocument::from_tokens(key, &pos, &neg));
                if (j + e) % 3 != 0 {
                    sal.insert(key, ((j * 7 + e * 3) % 10) as f64 / 10.0);
                }
                rat.insert(key, ((j + 2 * e) % 5) as f64 / 4.0);
            }
        }
        (Corpus::new(docs, 3, 7).unwrap(), Observations::normalized(rat, sal))
    }

    #[test]
    fn init_contract() {
        let (c, _) = toy_corpus();
        let h = Hyperparams {
            k_topics: 3,
            ..Hyperparams::default()
        };
        let a = init_model(&c, &h).unwrap();
        let b = init_model(&c, &h).unwrap();
        assert_eq!(a, b);
        for t in &a.theta {
            assert_eq!(t.len(), 3);
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(a.u.iter().all(|u| u.iter().all(|&x| x == 0.0)));
        assert_eq!(a.v, a.theta);
        a.check_invariants(1e-8).unwrap();
    }

    #[test]
    fn fit_is_monotone_and_deterministic() {
        let (c, o) = toy_corpus();
        let h = Hyperparams {
            k_topics: 3,
            max_iter: 30,
            min_iter: 30,
            lambda_v: 10.0,
            ..Hyperparams::default()
        };
        let r = fit(&c, &o, &h).unwrap();
        assert_eq!(r.trace.len(), 30);
        for w in r.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "{} -> {}", w[0], w[1]);
        }
        r.state.check_invariants(1e-8).unwrap();
        let r2 = fit(&c, &o, &h).unwrap();
        assert_eq!(r.state, r2.state);
    }

    #[test]
    fn fit_single_sweep() {
        let (c, o) = toy_corpus();
        let h = Hyperparams {
            k_topics: 2,
            max_iter: 1,
            min_iter: 1,
            ..Hyperparams::default()
        };
        assert_eq!(fit(&c, &o, &h).unwrap().trace.len(), 1);
    }

    #[test]
    fn fit_requires_salaries() {
        let (c, o) = toy_corpus();
        let o = Observations::normalized(o.ratings, BTreeMap::new());
        assert!(fit(&c, &o, &Hyperparams::default()).is_err());
    }

    #[test]
    fn shared_layout_ties_topics() {
        let (c, o) = toy_corpus();
        let h = Hyperparams {
            k_topics: 2,
            max_iter: 5,
            min_iter: 5,
            ..Hyperparams::default()
        };
        let r = fit_with_layout(&c, &o, &h, TopicLayout::Shared).unwrap();
        for j in 1..c.n_jobs {
            assert_eq!(r.state.beta[j], r.state.beta[0]);
            assert_eq!(r.state.varphi[j], r.state.varphi[0]);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let (c, o) = toy_corpus();
        let h = Hyperparams {
            k_topics: 3,
            max_iter: 8,
            min_iter: 8,
            ..Hyperparams::default()
        };
        let a = par::with_threads(1, || fit(&c, &o, &h).unwrap());
        let b = par::with_threads(4, || fit(&c, &o, &h).unwrap());
        assert_eq!(a.state, b.state);
        assert_eq!(a.trace, b.trace);
    }
}
