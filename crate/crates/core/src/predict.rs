//! Held-out salary prediction by folding a pair's text (and optional rating)
//! into a trained model, and opinion-profiling reports.

use serde::{Deserialize, Serialize};

use crate::corpus::{Bounds, PairDocument};
use crate::error::{Error, Result};
use crate::inference::{document_log_likelihood, e_step_pair, optimize_theta, solve_pair_factor, ModelState, TopicMatrix};
use crate::linalg::dot;
use crate::types::{Hyperparams, PairKey, Vocabulary};

/// `ŝ = uᵀv` on the normalized scale.
pub fn predict_salary(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalaryPrediction {
    pub key: PairKey,
    pub normalized: f64,
    pub raw: f64,
}

impl SalaryPrediction {
    pub fn new(key: PairKey, normalized: f64, bounds: Bounds) -> Self {
        SalaryPrediction {
            key,
            normalized,
            raw: bounds.denormalize(normalized),
        }
    }

    /// Whether the normalized value lies inside the training range.
    pub fn in_range(&self) -> bool {
        (0.0..=1.0).contains(&self.normalized)
    }
}

/// Proportions and pair factor inferred for a pair whose salary is withheld.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldIn {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
}

fn pair_local_objective(doc: &PairDocument, f: &FoldIn, b: &[f64], rating: Option<f64>, beta: &TopicMatrix, varphi: &TopicMatrix, hyper: &Hyperparams) -> f64 {
    let quad: f64 = f.v.iter().zip(&f.theta).map(|(a, t)| (a - t) * (a - t)).sum();
    let mut obj = -0.5 * hyper.lambda_v * quad + document_log_likelihood(doc, &f.theta, beta, varphi);
    if let Some(r) = rating {
        let res = r - dot(b, &f.v);
        obj -= 0.5 * hyper.lambda_r * res * res;
    }
    obj
}

/// Infers `(θ*, v*)` for a pair of `job` from its document and optional
/// normalized rating. Starts from uniform θ with `v = θ` and alternates the
/// E-step, the θ ascent and the `v` update with the salary term masked out.
/// The pair's salary is never an input.
pub fn fold_in_pair(doc: &PairDocument, rating: Option<f64>, job: usize, trained: &ModelState, hyper: &Hyperparams) -> Result<FoldIn> {
    if job >= trained.n_jobs {
        return Err(Error::UnknownJob(job.to_string()));
    }
    let k = trained.k;
    let (u, b) = (&trained.u[job], &trained.b[job]);
    let (beta, varphi) = (&trained.beta[job], &trained.varphi[job]);
    let uniform = vec![1.0 / k as f64; k];
    let mut state = FoldIn {
        theta: uniform.clone(),
        v: uniform,
        iterations: 0,
    };
    let mut prev = pair_local_objective(doc, &state, b, rating, beta, varphi, hyper);
    let max_iter = hyper.theta_steps * 10;
    for it in 1..=max_iter {
        let assign = e_step_pair(doc, &state.theta, beta, varphi);
        state.theta = optimize_theta(doc, &state.theta, &state.v, &assign, hyper)?;
        state.v = solve_pair_factor(&state.theta, u, b, None, rating, hyper, || format!("fold_in(job {job})"))?;
        state.iterations = it;
        let obj = pair_local_objective(doc, &state, b, rating, beta, varphi, hyper);
        let change = (obj - prev).abs();
        prev = obj;
        if change == 0.0 || change < hyper.rel_tol * obj.abs() {
            break;
        }
    }
    Ok(state)
}

/// Salary prediction for `key`: the stored factors when the pair was trained
/// on, otherwise a fold-in from `doc` and `rating`.
pub fn predict_pair(key: PairKey, doc: &PairDocument, rating: Option<f64>, trained: &ModelState, hyper: &Hyperparams) -> Result<f64> {
    if key.job >= trained.n_jobs {
        return Err(Error::UnknownJob(key.job.to_string()));
    }
    if let Some(i) = trained.pair_index(key) {
        return Ok(predict_salary(&trained.u[key.job], &trained.v[i]));
    }
    let f = fold_in_pair(doc, rating, key.job, trained, hyper)?;
    Ok(predict_salary(&trained.u[key.job], &f.v))
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTerm {
    pub term: String,
    pub prob: f64,
}

fn rank_terms(row: &[f64], n: usize, vocab: &Vocabulary) -> Vec<RankedTerm> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| vocab.term(a).cmp(vocab.term(b))));
    idx.into_iter()
        .take(n)
        .map(|i| RankedTerm {
            term: vocab.term(i).to_string(),
            prob: row[i],
        })
        .collect()
}

/// The `n` most probable terms of one topic row, ties broken lexicographically.
pub fn top_words(matrix: &TopicMatrix, topic: usize, n: usize, vocab: &Vocabulary) -> Vec<RankedTerm> {
    rank_terms(matrix.row(topic), n, vocab)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWords {
    pub topic: usize,
    pub terms: Vec<RankedTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub job: String,
    pub polarity: Polarity,
    pub topics: Vec<TopicWords>,
}

/// Positive and negative topic reports for one job.
pub fn job_topic_reports(state: &ModelState, job: usize, job_name: &str, n: usize, vocab: &Vocabulary) -> [TopicReport; 2] {
    let build = |m: &TopicMatrix, polarity| TopicReport {
        job: job_name.to_string(),
        polarity,
        topics: (0..m.k)
            .map(|t| TopicWords {
                topic: t,
                terms: top_words(m, t, n, vocab),
            })
            .collect(),
    };
    [build(&state.beta[job], Polarity::Positive), build(&state.varphi[job], Polarity::Negative)]
}

/// How per-pair pros/cons words are aggregated from the job's topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Rank terms of the θ-weighted mixture `Σ_k θ_k β_k`.
    #[default]
    Mixture,
    /// Rank terms of the single topic with the largest θ entry.
    Dominant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsCons {
    pub job: String,
    pub company: String,
    pub pros: Vec<RankedTerm>,
    pub cons: Vec<RankedTerm>,
}

fn aggregate(theta: &[f64], m: &TopicMatrix, how: Aggregation) -> Vec<f64> {
    match how {
        Aggregation::Mixture => {
            let mut out = vec![0.0; m.g];
            for (t, w) in theta.iter().enumerate() {
                for (o, p) in out.iter_mut().zip(m.row(t)) {
                    *o += w * p;
                }
            }
            out
        }
        Aggregation::Dominant => {
            let best = (0..theta.len()).max_by(|&a, &b| theta[a].total_cmp(&theta[b]).then(b.cmp(&a))).unwrap_or(0);
            m.row(best).to_vec()
        }
    }
}

/// Top-`n` pros and cons terms for a trained pair.
pub fn pros_cons_report(
    pair: PairKey,
    state: &ModelState,
    n: usize,
    vocab: &Vocabulary,
    how: Aggregation,
) -> Result<(Vec<RankedTerm>, Vec<RankedTerm>)> {
    let i = state.pair_index(pair).ok_or_else(|| Error::UnknownPair {
        job: pair.job.to_string(),
        company: pair.company.to_string(),
    })?;
    let theta = &state.theta[i];
    let pros = rank_terms(&aggregate(theta, &state.beta[pair.job], how), n, vocab);
    let cons = rank_terms(&aggregate(theta, &state.varphi[pair.job], how), n, vocab);
    Ok((pros, cons))
}

/// Aligned-column text rendering of topic reports.
pub fn render_topic_reports(reports: &[TopicReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let label = match r.polarity {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        };
        out.push_str(&format!("job: {}  ({label} topics)\n", r.job));
        let width = r
            .topics
            .iter()
            .flat_map(|t| t.terms.iter().map(|w| w.term.chars().count()))
            .max()
            .unwrap_or(0)
            .max(4);
        for t in &r.topics {
            out.push_str(&format!("  topic {:<3}", t.topic));
            for w in &t.terms {
                out.push_str(&format!(" {:<width$} {:.4}", w.term, w.prob));
            }
            out.push('\n');
        }
    }
    out
}

pub fn render_pros_cons(reports: &[ProsCons]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!("job: {}  company: {}\n", r.job, r.company));
        for (label, terms) in [("pros", &r.pros), ("cons", &r.cons)] {
            out.push_str(&format!("  {label:<5}"));
            for w in terms {
                out.push_str(&format!(" {} ({:.4})", w.term, w.prob));
            }
            out.push('\n');
        }
    }
    out
}
