//! Versioned JSON envelope for trained models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::FactorModel;
use crate::corpus::{Bounds, IdTable};
use crate::error::{Error, Result};
use crate::eval::Method;
use crate::inference::ModelState;
use crate::types::{Hyperparams, PairKey, Vocabulary};

pub const FORMAT: &str = "cpctr-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub k: usize,
    pub g: usize,
    pub n_jobs: usize,
    pub pairs: Vec<PairKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Topic { state: ModelState },
    Factor { model: FactorModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub method: Method,
    pub dimensions: Dimensions,
    pub hyper: Hyperparams,
    pub vocabulary: Vocabulary,
    pub jobs: IdTable,
    pub companies: IdTable,
    pub rating_bounds: Bounds,
    pub salary_bounds: Bounds,
    pub payload: Payload,
}

impl ModelFile {
    #[allow(clippy::too_many_arguments)]
    pub fn topic_model(
        method: Method,
        state: ModelState,
        hyper: Hyperparams,
        vocabulary: Vocabulary,
        jobs: IdTable,
        companies: IdTable,
        rating_bounds: Bounds,
        salary_bounds: Bounds,
    ) -> Self {
        let dimensions = Dimensions {
            k: state.k,
            g: state.g,
            n_jobs: state.n_jobs,
            pairs: state.pairs.clone(),
        };
        ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            method,
            dimensions,
            hyper,
            vocabulary,
            jobs,
            companies,
            rating_bounds,
            salary_bounds,
            payload: Payload::Topic { state },
        }
    }

    /// Envelope for a matrix factorization baseline; `pairs` are the cells it
    /// was fitted on.
    #[allow(clippy::too_many_arguments)]
    pub fn factor_model(
        method: Method,
        model: FactorModel,
        pairs: Vec<PairKey>,
        hyper: Hyperparams,
        vocabulary: Vocabulary,
        jobs: IdTable,
        companies: IdTable,
        rating_bounds: Bounds,
        salary_bounds: Bounds,
    ) -> Self {
        let dimensions = Dimensions {
            k: model.k,
            g: vocabulary.len(),
            n_jobs: jobs.len(),
            pairs,
        };
        ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            method,
            dimensions,
            hyper,
            vocabulary,
            jobs,
            companies,
            rating_bounds,
            salary_bounds,
            payload: Payload::Factor { model },
        }
    }

    pub fn state(&self) -> Option<&ModelState> {
        match &self.payload {
            Payload::Topic { state } => Some(state),
            Payload::Factor { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format tag {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (this build reads {VERSION})",
                self.version
            )));
        }
        if let Payload::Topic { state } = &self.payload {
            let d = &self.dimensions;
            if (state.k, state.g, state.n_jobs) != (d.k, d.g, d.n_jobs) || state.pairs != d.pairs {
                return Err(Error::ModelFormat("dimensions do not match the stored state".into()));
            }
            if state.g != self.vocabulary.len() || state.n_jobs != self.jobs.len() {
                return Err(Error::ModelFormat("vocabulary or job table size does not match the state".into()));
            }
            state.check_invariants(1e-8).map_err(|e| Error::ModelFormat(e.to_string()))?;
        }
        if let Payload::Factor { model } = &self.payload {
            let finite = model.row_factors.iter().chain(&model.col_factors).flatten().all(|x| x.is_finite());
            let shaped = model.row_factors.iter().chain(&model.col_factors).all(|f| f.len() == model.k);
            if !finite || !shaped || model.row_factors.len() != self.jobs.len() {
                return Err(Error::ModelFormat("factor model has inconsistent or non-finite factors".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
