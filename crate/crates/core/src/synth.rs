//! Synthetic corpora drawn from the model's generative process, with the
//! ground truth kept for recovery and oracle tests.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_minmax, Bounds, IdTable, Observations, PairDocument, RawReview, RawSalary};
use crate::error::{Error, Result};
use crate::inference::{Corpus, TopicMatrix};
use crate::linalg::dot;
use crate::sampling::{categorical, dirichlet};
use crate::types::{Hyperparams, PairKey, Vocabulary};

/// Raw scale used when emitting synthetic ratings (normalized 0..1 → 1..5).
pub const EMIT_RATING: Bounds = Bounds { min: 1.0, max: 5.0 };
/// Raw scale used when emitting synthetic salaries.
pub const EMIT_SALARY: Bounds = Bounds {
    min: 1000.0,
    max: 10000.0,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_jobs: usize,
    pub n_companies: usize,
    pub k: usize,
    pub n_terms: usize,
    pub pos_len: usize,
    pub neg_len: usize,
    /// Probability that a pair's salary is observed.
    pub density: f64,
    /// Dirichlet concentration of the topic-word rows.
    pub topic_concentration: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_jobs: 10,
            n_companies: 15,
            k: 3,
            n_terms: 200,
            pos_len: 50,
            neg_len: 50,
            density: 0.3,
            topic_concentration: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_jobs == 0 || self.n_companies == 0 || self.k == 0 || self.n_terms == 0 {
            return Err(Error::InvalidArgument("synthetic sizes must be at least 1".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!("density must lie in (0, 1], got {}", self.density)));
        }
        if !(self.topic_concentration > 0.0) {
            return Err(Error::InvalidArgument("topic_concentration must be positive".into()));
        }
        Ok(())
    }
}

/// Everything drawn by the generator, on the raw (pre-normalization) scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pairs: Vec<PairKey>,
    pub theta: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub beta: Vec<TopicMatrix>,
    pub varphi: Vec<TopicMatrix>,
    /// `(term, topic)` per positive token, per pair.
    pub pos_tokens: Vec<Vec<(usize, usize)>>,
    pub neg_tokens: Vec<Vec<(usize, usize)>>,
    pub ratings: Vec<f64>,
    /// Salary of every pair, observed or not.
    pub salaries: Vec<f64>,
    pub salary_observed: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub corpus: Corpus,
    pub observations: Observations,
    pub truth: GroundTruth,
    pub vocab: Vocabulary,
    pub jobs: IdTable,
    pub companies: IdTable,
}

impl SynthData {
    /// Normalized salary of pair `i` with the observation bounds, whether or
    /// not it was retained.
    pub fn normalized_salary(&self, i: usize) -> f64 {
        self.observations.salary_bounds.normalize(self.truth.salaries[i])
    }
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("finite std")
}

/// Samples a corpus from the generative process: per-job topic rows, job
/// factors, then per pair θ, tokens, the offset `v − θ`, rating and salary.
/// Ratings are always retained; each salary is kept with probability
/// `density`. Values are min-max normalized afterwards.
pub fn generate(cfg: &SynthConfig, hyper: &Hyperparams, seed: u64) -> Result<SynthData> {
    cfg.validate()?;
    hyper.validate()?;
    let (k, g) = (cfg.k, cfg.n_terms);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let topics = |rng: &mut ChaCha8Rng| {
        let rows: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(rng, cfg.topic_concentration, g)).collect();
        TopicMatrix::from_rows(&rows)
    };
    let beta: Vec<TopicMatrix> = (0..cfg.n_jobs).map(|_| topics(&mut rng)).collect();
    let varphi: Vec<TopicMatrix> = (0..cfg.n_jobs).map(|_| topics(&mut rng)).collect();

    let (nu, nb) = (normal(hyper.lambda_u.recip().sqrt()), normal(hyper.lambda_b.recip().sqrt()));
    let mut u = Vec::with_capacity(cfg.n_jobs);
    let mut b = Vec::with_capacity(cfg.n_jobs);
    for _ in 0..cfg.n_jobs {
        u.push((0..k).map(|_| nu.sample(&mut rng)).collect::<Vec<f64>>());
        b.push((0..k).map(|_| nb.sample(&mut rng)).collect::<Vec<f64>>());
    }

    let nv = normal(hyper.lambda_v.recip().sqrt());
    let nr = normal(hyper.lambda_r.recip().sqrt());
    let ns = normal(hyper.lambda_s.recip().sqrt());
    let mut truth = GroundTruth {
        pairs: Vec::new(),
        theta: Vec::new(),
        v: Vec::new(),
        u,
        b,
        beta,
        varphi,
        pos_tokens: Vec::new(),
        neg_tokens: Vec::new(),
        ratings: Vec::new(),
        salaries: Vec::new(),
        salary_observed: Vec::new(),
    };
    let draw_tokens = |rng: &mut ChaCha8Rng, theta: &[f64], m: &TopicMatrix, n: usize| -> Vec<(usize, usize)> {
        (0..n)
            .map(|_| {
                let z = categorical(rng, theta);
                (categorical(rng, m.row(z)), z)
            })
            .collect()
    };
    for j in 0..cfg.n_jobs {
        for e in 0..cfg.n_companies {
            let theta = dirichlet(&mut rng, hyper.alpha_smooth, k);
            let pos = draw_tokens(&mut rng, &theta, &truth.beta[j], cfg.pos_len);
            let neg = draw_tokens(&mut rng, &theta, &truth.varphi[j], cfg.neg_len);
            let v: Vec<f64> = theta.iter().map(|t| t + nv.sample(&mut rng)).collect();
            let r = dot(&truth.b[j], &v) + nr.sample(&mut rng);
            let s = dot(&truth.u[j], &v) + ns.sample(&mut rng);
            let keep = rng.random::<f64>() < cfg.density;
            truth.pairs.push(PairKey::new(j, e));
            truth.theta.push(theta);
            truth.v.push(v);
            truth.pos_tokens.push(pos);
            truth.neg_tokens.push(neg);
            truth.ratings.push(r);
            truth.salaries.push(s);
            truth.salary_observed.push(keep);
        }
    }

    let documents: Vec<PairDocument> = truth
        .pairs
        .iter()
        .enumerate()
        .map(|(i, &key)| {
            let pos: Vec<usize> = truth.pos_tokens[i].iter().map(|t| t.0).collect();
            let neg: Vec<usize> = truth.neg_tokens[i].iter().map(|t| t.0).collect();
            PairDocument::from_tokens(key, &pos, &neg)
        })
        .collect();
    let raw_ratings: BTreeMap<PairKey, f64> = truth.pairs.iter().copied().zip(truth.ratings.iter().copied()).collect();
    let raw_salaries: BTreeMap<PairKey, f64> = truth
        .pairs
        .iter()
        .zip(&truth.salaries)
        .zip(&truth.salary_observed)
        .filter(|(_, &keep)| keep)
        .map(|((&p, &s), _)| (p, s))
        .collect();
    let (ratings, rating_bounds) = normalize_minmax(&raw_ratings, "rating")?;
    let (salaries, salary_bounds) = normalize_minmax(&raw_salaries, "salary")?;

    let vocab = Vocabulary::from_terms((0..g).map(term_name).collect())?;
    let jobs = IdTable::from((0..cfg.n_jobs).map(|j| format!("job{j:03}")).collect::<Vec<_>>());
    let companies = IdTable::from((0..cfg.n_companies).map(|e| format!("company{e:03}")).collect::<Vec<_>>());
    Ok(SynthData {
        corpus: Corpus::new(documents, cfg.n_jobs, g)?,
        observations: Observations {
            ratings,
            salaries,
            rating_bounds,
            salary_bounds,
        },
        truth,
        vocab,
        jobs,
        companies,
    })
}

pub fn term_name(id: usize) -> String {
    format!("w{id:04}")
}

/// Review and salary records in the ingestion formats: one review per pair
/// whose pros/cons are the sampled tokens, normalized ratings mapped onto
/// 1..5 and normalized salaries onto [`EMIT_SALARY`].
pub fn to_records(data: &SynthData) -> (Vec<RawReview>, Vec<RawSalary>) {
    let t = &data.truth;
    let text = |toks: &[(usize, usize)]| toks.iter().map(|&(w, _)| term_name(w)).collect::<Vec<_>>().join(" ");
    let reviews = t
        .pairs
        .iter()
        .enumerate()
        .map(|(i, key)| RawReview {
            job: data.jobs.name(key.job).to_string(),
            company: data.companies.name(key.company).to_string(),
            rating: data.observations.ratings.get(key).map(|&r| EMIT_RATING.denormalize(r)),
            pros: text(&t.pos_tokens[i]),
            cons: text(&t.neg_tokens[i]),
        })
        .collect();
    let salaries = data
        .observations
        .salaries
        .iter()
        .map(|(key, &s)| RawSalary {
            job: data.jobs.name(key.job).to_string(),
            company: data.companies.name(key.company).to_string(),
            salary: EMIT_SALARY.denormalize(s),
        })
        .collect();
    (reviews, salaries)
}

// ---------------------------------------------------------------------------
// moment checks

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicFit {
    pub job: usize,
    pub negative: bool,
    pub topic: usize,
    pub tokens: usize,
    /// Total-variation distance between empirical term frequencies and the row.
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub topics: Vec<TopicFit>,
    /// Tokens per topic across every pair and both sides.
    pub topic_usage: Vec<usize>,
    pub salary_residual_mean: f64,
    pub salary_residual_std: f64,
    pub salary_residual_se: f64,
}

impl EmpiricalSummary {
    /// Largest TV distance among topics with at least `min_tokens` tokens.
    pub fn max_tv(&self, min_tokens: usize) -> Option<f64> {
        self.topics
            .iter()
            .filter(|t| t.tokens >= min_tokens)
            .map(|t| t.tv)
            .max_by(f64::total_cmp)
    }
}

/// Empirical statistics of a sample against its ground truth.
pub fn empirical_check(truth: &GroundTruth, k: usize) -> EmpiricalSummary {
    let n_jobs = truth.u.len();
    let g = truth.beta.first().map_or(0, |m| m.g);
    let mut counts = vec![vec![0usize; g]; n_jobs * 2 * k];
    let mut usage = vec![0usize; k];
    for (i, p) in truth.pairs.iter().enumerate() {
        for (side, toks) in [(0, &truth.pos_tokens[i]), (1, &truth.neg_tokens[i])] {
            for &(w, z) in toks {
                counts[(p.job * 2 + side) * k + z][w] += 1;
                usage[z] += 1;
            }
        }
    }
    let mut topics = Vec::new();
    for j in 0..n_jobs {
        for side in 0..2 {
            let m = if side == 0 { &truth.beta[j] } else { &truth.varphi[j] };
            for z in 0..k {
                let c = &counts[(j * 2 + side) * k + z];
                let n: usize = c.iter().sum();
                let tv = if n == 0 {
                    1.0
                } else {
                    0.5 * c.iter().zip(m.row(z)).map(|(&x, p)| (x as f64 / n as f64 - p).abs()).sum::<f64>()
                };
                topics.push(TopicFit {
                    job: j,
                    negative: side == 1,
                    topic: z,
                    tokens: n,
                    tv,
                });
            }
        }
    }
    let resid: Vec<f64> = truth
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| truth.salaries[i] - dot(&truth.u[p.job], &truth.v[i]))
        .collect();
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    EmpiricalSummary {
        topics,
        topic_usage: usage,
        salary_residual_mean: mean,
        salary_residual_std: var.sqrt(),
        salary_residual_se: (var / n).sqrt(),
    }
}
