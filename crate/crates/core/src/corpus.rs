//! Ingestion: reviews and salary records in, per-pair bag-of-words documents
//! and min-max normalized observations out.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{PairKey, Vocabulary};

/// Lower bound of the review rating scale.
pub const RATING_MIN: f64 = 1.0;
/// Upper bound of the review rating scale.
pub const RATING_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReview {
    pub job: String,
    pub company: String,
    /// Missing for prediction queries that carry no rating.
    #[serde(default)]
    pub rating: Option<f64>,
    #[serde(default)]
    pub pros: String,
    #[serde(default)]
    pub cons: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSalary {
    pub job: String,
    pub company: String,
    pub salary: f64,
}

/// Aggregated bag of words for one pair; both sides are sorted by term id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDocument {
    pub key: PairKey,
    pub pos: Vec<(usize, u32)>,
    pub neg: Vec<(usize, u32)>,
}

impl PairDocument {
    pub fn empty(key: PairKey) -> Self {
        PairDocument {
            key,
            pos: Vec::new(),
            neg: Vec::new(),
        }
    }

    pub fn from_counts(key: PairKey, pos: &BTreeMap<usize, u32>, neg: &BTreeMap<usize, u32>) -> Self {
        let collect = |m: &BTreeMap<usize, u32>| m.iter().filter(|(_, &c)| c > 0).map(|(&t, &c)| (t, c)).collect();
        PairDocument {
            key,
            pos: collect(pos),
            neg: collect(neg),
        }
    }

    /// Builds a document from token id sequences, aggregating repeats.
    pub fn from_tokens(key: PairKey, pos: &[usize], neg: &[usize]) -> Self {
        let count = |ids: &[usize]| {
            let mut m = BTreeMap::new();
            for &t in ids {
                *m.entry(t).or_insert(0u32) += 1;
            }
            m
        };
        Self::from_counts(key, &count(pos), &count(neg))
    }

    pub fn pos_len(&self) -> u64 {
        self.pos.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn neg_len(&self) -> u64 {
        self.neg.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidArgument(format!("invalid bounds ({min}, {max})")));
        }
        Ok(Bounds { min, max })
    }

    pub fn unit() -> Self {
        Bounds { min: 0.0, max: 1.0 }
    }

    pub fn normalize(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }

    /// Inverse of [`Bounds::normalize`]. Values outside `[0, 1]` pass through
    /// the affine map unclamped.
    pub fn denormalize(&self, value: f64) -> f64 {
        self.min + value * (self.max - self.min)
    }
}

pub fn denormalize(value: f64, bounds: Bounds) -> f64 {
    bounds.denormalize(value)
}

/// Min-max normalizes `values` into `[0, 1]`.
pub fn normalize_minmax<K: Ord + Clone>(
    values: &BTreeMap<K, f64>,
    what: &'static str,
) -> Result<(BTreeMap<K, f64>, Bounds)> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values.values() {
        if !v.is_finite() {
            return Err(Error::NonFinite("normalize_minmax"));
        }
        min = min.min(v);
        max = max.max(v);
    }
    if !(min < max) {
        return Err(Error::DegenerateRange(what));
    }
    let bounds = Bounds { min, max };
    let out = values.iter().map(|(k, &v)| (k.clone(), bounds.normalize(v))).collect();
    Ok((out, bounds))
}

/// Sparse normalized ratings and salaries keyed by pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations {
    pub ratings: BTreeMap<PairKey, f64>,
    pub salaries: BTreeMap<PairKey, f64>,
    pub rating_bounds: Bounds,
    pub salary_bounds: Bounds,
}

impl Observations {
    /// Observations already on the normalized scale.
    pub fn normalized(ratings: BTreeMap<PairKey, f64>, salaries: BTreeMap<PairKey, f64>) -> Self {
        Observations {
            ratings,
            salaries,
            rating_bounds: Bounds::unit(),
            salary_bounds: Bounds::unit(),
        }
    }

    pub fn without_ratings(&self) -> Self {
        Observations {
            ratings: BTreeMap::new(),
            ..self.clone()
        }
    }
}

/// Per-pair averages on the raw scale, before normalization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawObservations {
    pub ratings: BTreeMap<PairKey, f64>,
    pub salaries: BTreeMap<PairKey, f64>,
}

impl RawObservations {
    /// Rating bounds from the data, falling back to the 1..5 scale when every
    /// rating is identical.
    pub fn rating_bounds(&self) -> Bounds {
        match normalize_minmax(&self.ratings, "rating") {
            Ok((_, b)) => b,
            Err(_) => Bounds {
                min: RATING_MIN,
                max: RATING_MAX,
            },
        }
    }

    /// Normalizes ratings and salaries with bounds computed over every value.
    pub fn normalize(&self) -> Result<Observations> {
        let (salaries, salary_bounds) = normalize_minmax(&self.salaries, "salary")?;
        Ok(self.normalize_with(salary_bounds, Some(&salaries)))
    }

    /// Normalizes with fixed salary bounds (e.g. computed on a training fold).
    pub fn normalize_with(&self, salary_bounds: Bounds, salaries: Option<&BTreeMap<PairKey, f64>>) -> Observations {
        let rating_bounds = self.rating_bounds();
        let salaries = match salaries {
            Some(s) => s.clone(),
            None => self
                .salaries
                .iter()
                .map(|(k, &v)| (*k, salary_bounds.normalize(v)))
                .collect(),
        };
        Observations {
            ratings: self
                .ratings
                .iter()
                .map(|(k, &v)| (*k, rating_bounds.normalize(v)))
                .collect(),
            salaries,
            rating_bounds,
            salary_bounds,
        }
    }
}

/// Dense id assignment for names, in first-seen order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct IdTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for IdTable {
    fn from(names: Vec<String>) -> Self {
        let mut t = IdTable::default();
        for n in names {
            t.intern(&n);
        }
        t
    }
}

impl From<IdTable> for Vec<String> {
    fn from(t: IdTable) -> Self {
        t.names
    }
}

impl IdTable {
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Output of [`group_reviews`].
#[derive(Debug, Clone)]
pub struct Grouped {
    /// One document per distinct pair, sorted by key.
    pub documents: Vec<PairDocument>,
    pub raw: RawObservations,
    pub jobs: IdTable,
    pub companies: IdTable,
}

impl Grouped {
    /// Globally normalized observations.
    pub fn observations(&self) -> Result<Observations> {
        self.raw.normalize()
    }

    /// Fraction of unobserved cells in the job × company salary matrix.
    pub fn salary_sparsity(&self) -> f64 {
        let cells = (self.jobs.len() * self.companies.len()) as f64;
        if cells == 0.0 {
            return 1.0;
        }
        1.0 - self.raw.salaries.len() as f64 / cells
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocabOptions {
    pub max_terms: usize,
    pub min_doc_count: usize,
    pub max_doc_fraction: f64,
}

impl Default for VocabOptions {
    fn default() -> Self {
        VocabOptions {
            max_terms: 10_000,
            min_doc_count: 1,
            max_doc_fraction: 0.9,
        }
    }
}

/// Selects the vocabulary: drops stopwords and single-character terms, applies
/// document-frequency limits, then keeps the `max_terms` most frequent terms
/// (ties broken lexicographically).
pub fn build_vocabulary(docs: &[Vec<String>], opts: &VocabOptions, stopwords: &HashSet<String>) -> Result<Vocabulary> {
    if opts.max_terms == 0 {
        return Err(Error::InvalidArgument("max_terms must be at least 1".into()));
    }
    if !(opts.max_doc_fraction > 0.0 && opts.max_doc_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "max_doc_fraction must lie in (0, 1], got {}",
            opts.max_doc_fraction
        )));
    }
    let mut total: HashMap<&str, u64> = HashMap::new();
    let mut doc_freq: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for t in doc {
            if t.chars().count() < 2 || stopwords.contains(t) {
                continue;
            }
            *total.entry(t).or_default() += 1;
            if seen.insert(t.as_str()) {
                *doc_freq.entry(t).or_default() += 1;
            }
        }
    }
    let n_docs = docs.len() as f64;
    let mut ranked: Vec<(&str, u64)> = total
        .into_iter()
        .filter(|(t, _)| {
            let df = doc_freq[t];
            df >= opts.min_doc_count && (df as f64) <= opts.max_doc_fraction * n_docs
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(opts.max_terms);
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_terms(ranked.into_iter().map(|(t, _)| t.to_string()).collect())
}

/// Token lists used for vocabulary selection, one per review.
pub fn review_token_lists(reviews: &[RawReview]) -> Vec<Vec<String>> {
    reviews
        .iter()
        .map(|r| {
            let mut toks = tokenize(&r.pros);
            toks.extend(tokenize(&r.cons));
            toks
        })
        .collect()
}

fn add_tokens(text: &str, vocab: &Vocabulary, into: &mut BTreeMap<usize, u32>) {
    for t in tokenize(text) {
        if let Some(id) = vocab.id(&t) {
            *into.entry(id).or_insert(0) += 1;
        }
    }
}

/// Groups reviews and salary records by (job, company): concatenates review
/// text into one document per pair and averages ratings and salaries. Pairs
/// that only have salary records get an empty document.
pub fn group_reviews(reviews: &[RawReview], salaries: &[RawSalary], vocab: &Vocabulary) -> Grouped {
    let mut jobs = IdTable::default();
    let mut companies = IdTable::default();
    let mut pos: BTreeMap<PairKey, BTreeMap<usize, u32>> = BTreeMap::new();
    let mut neg: BTreeMap<PairKey, BTreeMap<usize, u32>> = BTreeMap::new();
    let mut rating_sum: BTreeMap<PairKey, (f64, usize)> = BTreeMap::new();
    let mut salary_sum: BTreeMap<PairKey, (f64, usize)> = BTreeMap::new();

    for r in reviews {
        let key = PairKey::new(jobs.intern(&r.job), companies.intern(&r.company));
        add_tokens(&r.pros, vocab, pos.entry(key).or_default());
        add_tokens(&r.cons, vocab, neg.entry(key).or_default());
        if let Some(rating) = r.rating {
            let e = rating_sum.entry(key).or_insert((0.0, 0));
            e.0 += rating;
            e.1 += 1;
        }
    }
    for s in salaries {
        let key = PairKey::new(jobs.intern(&s.job), companies.intern(&s.company));
        pos.entry(key).or_default();
        neg.entry(key).or_default();
        let e = salary_sum.entry(key).or_insert((0.0, 0));
        e.0 += s.salary;
        e.1 += 1;
    }

    let documents = pos
        .iter()
        .map(|(key, p)| PairDocument::from_counts(*key, p, &neg[key]))
        .collect();
    let mean = |m: BTreeMap<PairKey, (f64, usize)>| m.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    Grouped {
        documents,
        raw: RawObservations {
            ratings: mean(rating_sum),
            salaries: mean(salary_sum),
        },
        jobs,
        companies,
    }
}

// ---------------------------------------------------------------------------
// file formats

pub fn read_reviews_jsonl(path: &Path) -> Result<Vec<RawReview>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let review: RawReview = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if let Some(r) = review.rating {
            if !(RATING_MIN..=RATING_MAX).contains(&r) {
                return Err(parse_err(format!("rating {r} outside [{RATING_MIN}, {RATING_MAX}]")));
            }
        }
        out.push(review);
    }
    Ok(out)
}

pub fn write_reviews_jsonl(path: &Path, reviews: &[RawReview]) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in reviews {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn read_salaries_csv(path: &Path) -> Result<Vec<RawSalary>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<RawSalary>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message: e.to_string(),
        })?;
        if !(rec.salary > 0.0 && rec.salary.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("salary must be positive, got {}", rec.salary),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_salaries_csv(path: &Path, salaries: &[RawSalary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in salaries {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect())
}
