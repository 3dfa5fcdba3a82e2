use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model and optimizer settings. Defaults follow the published experimental
/// configuration (K=5, λ_u=0.1, λ_b=0.01, λ_v=1000, λ_r=λ_s=1, max_iter=500).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub k_topics: usize,
    pub lambda_u: f64,
    pub lambda_b: f64,
    pub lambda_v: f64,
    pub lambda_r: f64,
    pub lambda_s: f64,
    /// Dirichlet concentration used to draw the initial topic proportions.
    pub alpha_smooth: f64,
    /// Additive pseudo-count applied to every topic-word cell in the M-step.
    pub topic_smooth: f64,
    pub max_iter: usize,
    pub min_iter: usize,
    pub rel_tol: f64,
    /// Projected-gradient iterations per proportion update.
    pub theta_steps: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k_topics: 5,
            lambda_u: 0.1,
            lambda_b: 0.01,
            lambda_v: 1000.0,
            lambda_r: 1.0,
            lambda_s: 1.0,
            alpha_smooth: 0.01,
            topic_smooth: 0.01,
            max_iter: 500,
            min_iter: 10,
            rel_tol: 1e-4,
            theta_steps: 5,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyper(msg));
        if self.k_topics == 0 {
            return bad("k_topics must be at least 1".into());
        }
        for (name, value) in [
            ("lambda_u", self.lambda_u),
            ("lambda_b", self.lambda_b),
            ("lambda_v", self.lambda_v),
            ("lambda_r", self.lambda_r),
            ("lambda_s", self.lambda_s),
            ("alpha_smooth", self.alpha_smooth),
            ("rel_tol", self.rel_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if !(self.topic_smooth >= 0.0 && self.topic_smooth.is_finite()) {
            return bad(format!(
                "topic_smooth must be non-negative, got {}",
                self.topic_smooth
            ));
        }
        if self.max_iter == 0 || self.min_iter == 0 {
            return bad("max_iter and min_iter must be positive".into());
        }
        if self.min_iter > self.max_iter {
            return bad(format!(
                "min_iter ({}) exceeds max_iter ({})",
                self.min_iter, self.max_iter
            ));
        }
        if self.theta_steps == 0 {
            return bad("theta_steps must be positive".into());
        }
        Ok(())
    }
}

/// A (job, company) cell identified by dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub job: usize,
    pub company: usize,
}

impl PairKey {
    pub fn new(job: usize, company: usize) -> Self {
        PairKey { job, company }
    }
}

/// Ordered term list with its inverse index. Ids are dense in `[0, len)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary term {t:?}")));
            }
        }
        Ok(Vocabulary { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<String>::deserialize(d)?;
        Vocabulary::from_terms(terms).map_err(serde::de::Error::custom)
    }
}
