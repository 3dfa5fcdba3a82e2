//! Error metrics, the per-job k-fold split, and the cross-validation runner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_ctr_mode, fit_pmf, fit_rsvd, pool_document, SparseMatrix};
use crate::corpus::{normalize_minmax, Bounds, Observations, PairDocument, RawObservations};
use crate::error::{Error, Result};
use crate::inference::{fit, Corpus, ModelState};
use crate::par;
use crate::predict::{fold_in_pair, predict_salary};
use crate::types::{Hyperparams, PairKey};

fn check_lengths(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput("metric over zero values"));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let sq: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p) * (a - p)).sum();
    Ok((sq / predicted.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let abs: f64 = predicted.iter().zip(actual).map(|(p, a)| (a - p).abs()).sum();
    Ok(abs / predicted.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    Fold(usize),
    AlwaysTrain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<PairKey, Assignment>,
}

impl FoldPlan {
    /// Test pairs of `fold`, in key order.
    pub fn test_pairs(&self, fold: usize) -> Vec<PairKey> {
        self.assignments
            .iter()
            .filter(|(_, a)| **a == Assignment::Fold(fold))
            .map(|(k, _)| *k)
            .collect()
    }

    pub fn is_test(&self, key: PairKey, fold: usize) -> bool {
        self.assignments.get(&key) == Some(&Assignment::Fold(fold))
    }
}

/// Splits each job with at least `min_companies` observed salaries evenly
/// over `k` folds: the job's pairs are shuffled, then dealt round-robin.
/// Pairs of the remaining jobs are always in training.
pub fn kfold_split(salaries: &BTreeMap<PairKey, f64>, k: usize, min_companies: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    if min_companies < 2 {
        return Err(Error::InvalidArgument(format!(
            "min_companies must be at least 2 so every test job keeps a training pair, got {min_companies}"
        )));
    }
    let mut by_job: BTreeMap<usize, Vec<PairKey>> = BTreeMap::new();
    for key in salaries.keys() {
        by_job.entry(key.job).or_default().push(*key);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    let mut next = 0;
    let mut eligible = 0;
    for keys in by_job.values_mut() {
        if keys.len() < min_companies {
            assignments.extend(keys.iter().map(|k| (*k, Assignment::AlwaysTrain)));
            continue;
        }
        eligible += 1;
        keys.shuffle(&mut rng);
        for key in keys.iter() {
            assignments.insert(*key, Assignment::Fold(next % k));
            next += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::NoEligibleJobs(min_companies));
    }
    Ok(FoldPlan { k, assignments })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cpctr,
    /// The joint model with shared, pooled topics and no ratings.
    Ctr,
    Pmf,
    Rsvd,
    /// Mean of the training salaries.
    Mean,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Cpctr, Method::Ctr, Method::Pmf, Method::Rsvd, Method::Mean];
    pub const DEFAULT: [Method; 4] = [Method::Cpctr, Method::Ctr, Method::Pmf, Method::Rsvd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cpctr => "cpctr",
            Method::Ctr => "ctr",
            Method::Pmf => "pmf",
            Method::Rsvd => "rsvd",
            Method::Mean => "mean",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?} (expected cpctr, ctr, pmf, rsvd or mean)")))
    }
}

/// Settings for the matrix factorization baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub pmf_iters: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            lambda: 0.1,
            learning_rate: 0.005,
            epochs: 200,
            pmf_iters: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub hyper: Hyperparams,
    pub baseline: BaselineParams,
    /// Normalize salaries with bounds over all pairs instead of the training fold.
    pub global_normalize: bool,
    /// Score in the original salary units instead of the normalized scale.
    pub raw_units: bool,
}

impl ExperimentConfig {
    pub fn new(methods: Vec<Method>, hyper: Hyperparams) -> Self {
        ExperimentConfig {
            methods,
            hyper,
            baseline: BaselineParams::default(),
            global_normalize: false,
            raw_units: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub key: PairKey,
    pub actual: f64,
    /// One value per method, in report method order.
    pub predicted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub salary_bounds: Bounds,
    pub scores: Vec<Score>,
    pub predictions: Vec<PairPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub methods: Vec<Method>,
    pub raw_units: bool,
    pub folds: Vec<FoldResult>,
    pub average: Vec<Score>,
}

impl EvalReport {
    pub fn average_of(&self, method: Method) -> Option<Score> {
        self.methods.iter().position(|m| *m == method).map(|i| self.average[i])
    }

    /// Wide CSV: one row per fold plus an `average` row, two columns per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,n_test");
        for m in &self.methods {
            out.push_str(&format!(",{m}_rmse,{m}_mae"));
        }
        out.push('\n');
        let row = |label: String, n: String, scores: &[Score]| {
            let mut line = format!("{label},{n}");
            for s in scores {
                line.push_str(&format!(",{},{}", s.rmse, s.mae));
            }
            line.push('\n');
            line
        };
        for f in &self.folds {
            out.push_str(&row((f.fold + 1).to_string(), f.predictions.len().to_string(), &f.scores));
        }
        let total: usize = self.folds.iter().map(|f| f.predictions.len()).sum();
        out.push_str(&row("average".into(), total.to_string(), &self.average));
        out
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut header = vec!["fold".to_string(), "n".to_string()];
        for m in &self.methods {
            header.push(format!("{m} rMSE"));
            header.push(format!("{m} MAE"));
        }
        let cells = |scores: &[Score]| scores.iter().flat_map(|s| [format!("{:.4}", s.rmse), format!("{:.4}", s.mae)]).collect::<Vec<_>>();
        let mut rows = vec![header];
        for f in &self.folds {
            let mut r = vec![(f.fold + 1).to_string(), f.predictions.len().to_string()];
            r.extend(cells(&f.scores));
            rows.push(r);
        }
        let total: usize = self.folds.iter().map(|f| f.predictions.len()).sum();
        let mut avg = vec!["average".to_string(), total.to_string()];
        avg.extend(cells(&self.average));
        rows.push(avg);

        let widths: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Training view of one fold: test salaries removed before normalization.
struct FoldData {
    train: Observations,
    corpus: Corpus,
    test: Vec<PairKey>,
    /// Normalized ratings of the test pairs, visible to fold-in.
    test_ratings: Vec<Option<f64>>,
    /// Normalized held-out salaries, used only for scoring.
    actual: Vec<f64>,
}

fn fold_data(corpus: &Corpus, raw: &RawObservations, plan: &FoldPlan, fold: usize, global: Option<Bounds>) -> Result<FoldData> {
    let train_raw = RawObservations {
        ratings: raw.ratings.clone(),
        salaries: raw
            .salaries
            .iter()
            .filter(|(k, _)| !plan.is_test(**k, fold))
            .map(|(k, v)| (*k, *v))
            .collect(),
    };
    let bounds = match global {
        Some(b) => b,
        None => normalize_minmax(&train_raw.salaries, "training salary")?.1,
    };
    let mut train = train_raw.normalize_with(bounds, None);
    let test = plan.test_pairs(fold);
    let test_ratings = test.iter().map(|k| train.ratings.remove(k)).collect();
    let actual = test.iter().map(|k| bounds.normalize(raw.salaries[k])).collect();
    let documents = corpus
        .documents
        .iter()
        .filter(|d| !plan.is_test(d.key, fold))
        .cloned()
        .collect();
    Ok(FoldData {
        train,
        corpus: Corpus {
            documents,
            n_jobs: corpus.n_jobs,
            n_terms: corpus.n_terms,
        },
        test,
        test_ratings,
        actual,
    })
}

fn n_companies(corpus: &Corpus, raw: &RawObservations) -> usize {
    let docs = corpus.documents.iter().map(|d| d.key.company);
    let obs = raw.salaries.keys().chain(raw.ratings.keys()).map(|k| k.company);
    docs.chain(obs).max().map_or(0, |c| c + 1)
}

fn fold_in_all(state: &ModelState, docs: &[PairDocument], ratings: &[Option<f64>], hyper: &Hyperparams) -> Result<Vec<f64>> {
    par::map_indexed(docs.len(), |i| {
        let key = docs[i].key;
        let f = fold_in_pair(&docs[i], ratings[i], key.job, state, hyper)?;
        Ok(predict_salary(&state.u[key.job], &f.v))
    })
    .into_iter()
    .collect()
}

fn predict_method(method: Method, data: &FoldData, full: &BTreeMap<PairKey, &PairDocument>, n_jobs: usize, n_cols: usize, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let hyper = &cfg.hyper;
    let test_doc = |k: &PairKey| full.get(k).map_or_else(|| PairDocument::empty(*k), |d| (*d).clone());
    match method {
        Method::Cpctr => {
            let state = fit(&data.corpus, &data.train, hyper)?.state;
            let docs: Vec<_> = data.test.iter().map(test_doc).collect();
            fold_in_all(&state, &docs, &data.test_ratings, hyper)
        }
        Method::Ctr => {
            let state = fit_ctr_mode(&data.corpus, &data.train, hyper)?.state;
            let docs: Vec<_> = data.test.iter().map(|k| pool_document(&test_doc(k))).collect();
            fold_in_all(&state, &docs, &vec![None; docs.len()], hyper)
        }
        Method::Pmf | Method::Rsvd => {
            let m = SparseMatrix::salaries(&data.train, n_jobs, n_cols)?;
            let b = &cfg.baseline;
            let model = if method == Method::Pmf {
                fit_pmf(&m, hyper.k_topics, b.lambda, b.lambda, b.pmf_iters, hyper.seed)?.0
            } else {
                fit_rsvd(&m, hyper.k_topics, b.lambda, b.learning_rate, b.epochs, hyper.seed)?
            };
            Ok(data.test.iter().map(|k| model.predict(k.job, k.company)).collect())
        }
        Method::Mean => {
            let s = &data.train.salaries;
            let mean = s.values().sum::<f64>() / s.len() as f64;
            Ok(vec![mean; data.test.len()])
        }
    }
}

fn run_fold(corpus: &Corpus, raw: &RawObservations, plan: &FoldPlan, fold: usize, cfg: &ExperimentConfig, global: Option<Bounds>) -> Result<FoldResult> {
    let data = fold_data(corpus, raw, plan, fold, global)?;
    if data.test.is_empty() {
        return Err(Error::EmptyInput("fold without test pairs"));
    }
    let bounds = data.train.salary_bounds;
    let full: BTreeMap<PairKey, &PairDocument> = corpus.documents.iter().map(|d| (d.key, d)).collect();
    let n_cols = n_companies(corpus, raw);
    let scale = |x: f64| if cfg.raw_units { bounds.denormalize(x) } else { x };
    let actual: Vec<f64> = data.actual.iter().map(|&a| scale(a)).collect();

    let mut per_method = Vec::with_capacity(cfg.methods.len());
    let mut scores = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        log::info!("fold {} method {method}: {} test pairs", fold + 1, data.test.len());
        let tag = |source: Error| Error::Method {
            method: method.to_string(),
            fold: fold + 1,
            source: Box::new(source),
        };
        let predicted: Vec<f64> = predict_method(method, &data, &full, corpus.n_jobs, n_cols, cfg)
            .map_err(tag)?
            .into_iter()
            .map(scale)
            .collect();
        scores.push(Score {
            rmse: rmse(&predicted, &actual)?,
            mae: mae(&predicted, &actual)?,
        });
        per_method.push(predicted);
    }
    let predictions = data
        .test
        .iter()
        .enumerate()
        .map(|(i, key)| PairPrediction {
            key: *key,
            actual: actual[i],
            predicted: per_method.iter().map(|p| p[i]).collect(),
        })
        .collect();
    Ok(FoldResult {
        fold,
        salary_bounds: bounds,
        scores,
        predictions,
    })
}

/// Cross-validates every method over the folds of `plan`. Each fold trains on
/// all pairs outside it with the held-out salaries removed; the joint model
/// then folds in each test pair from its document and rating.
pub fn run_experiment(corpus: &Corpus, raw: &RawObservations, plan: &FoldPlan, cfg: &ExperimentConfig) -> Result<EvalReport> {
    if cfg.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods to evaluate".into()));
    }
    let distinct: BTreeSet<_> = cfg.methods.iter().collect();
    if distinct.len() != cfg.methods.len() {
        return Err(Error::InvalidArgument("methods listed more than once".into()));
    }
    cfg.hyper.validate()?;
    let global = if cfg.global_normalize {
        Some(normalize_minmax(&raw.salaries, "salary")?.1)
    } else {
        None
    };
    let folds: Vec<FoldResult> = par::map_indexed(plan.k, |f| run_fold(corpus, raw, plan, f, cfg, global))
        .into_iter()
        .collect::<Result<_>>()?;
    let n = folds.len() as f64;
    let average = (0..cfg.methods.len())
        .map(|m| Score {
            rmse: folds.iter().map(|f| f.scores[m].rmse).sum::<f64>() / n,
            mae: folds.iter().map(|f| f.scores[m].mae).sum::<f64>() / n,
        })
        .collect();
    Ok(EvalReport {
        methods: cfg.methods.clone(),
        raw_units: cfg.raw_units,
        folds,
        average,
    })
}
