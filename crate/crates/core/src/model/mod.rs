//! Linear classifiers: feature extraction, naive Bayes training, plaintext
//! scoring (the non-private reference), fixed-point quantization and
//! chi-square feature selection.

mod features;
mod quantize;
mod score;
mod select;
mod train;

pub use features::{extract_features, tokenize, FeatureVector, Vocabulary};
pub use quantize::{quantize, quantize_auto, quantize_threshold, QuantizedModel};
pub use score::{
    classify_plain, posterior_all, posterior_direct, score_categories, spam_log_alpha, Decision,
};
pub use select::{chi_square_scores, select_features};
pub use train::{train_nb, Corpus, SPAM_LABEL};

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Graham-Robinson style Bernoulli naive Bayes, two categories, spam first.
    GrnbSpam,
    MultinomialNb,
    Logistic,
    Svm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GrnbSpam => "grnb_spam",
            ModelKind::MultinomialNb => "multinomial_nb",
            ModelKind::Logistic => "logistic",
            ModelKind::Svm => "svm",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "grnb_spam" => ModelKind::GrnbSpam,
            "multinomial_nb" => ModelKind::MultinomialNb,
            "logistic" => ModelKind::Logistic,
            "svm" => ModelKind::Svm,
            _ => return None,
        })
    }

    pub fn is_naive_bayes(self) -> bool {
        matches!(self, ModelKind::GrnbSpam | ModelKind::MultinomialNb)
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::GrnbSpam => 0,
            ModelKind::MultinomialNb => 1,
            ModelKind::Logistic => 2,
            ModelKind::Svm => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => ModelKind::GrnbSpam,
            1 => ModelKind::MultinomialNb,
            2 => ModelKind::Logistic,
            3 => ModelKind::Svm,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("need {needed} category labels, corpus has {found}")]
    LabelCount { needed: usize, found: usize },
    #[error("spam model requires a category labelled \"spam\"")]
    MissingSpamLabel,
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("feature id {id} out of range for a model with {num_features} features")]
    FeatureOutOfRange { id: u32, num_features: usize },
    #[error("operation requires a {expected} model, got {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("all category likelihoods are zero")]
    DegenerateLikelihood,
    #[error("weight range {range} needs more than {b_in} bits at scale {scale}")]
    RangeExceeded { range: f64, b_in: u32, scale: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("model shape invalid: {0}")]
    Shape(&'static str),
}

/// Per-category parameter vectors plus priors (or bias terms).
///
/// For the naive Bayes kinds `weights[j][i] = log p(t_i | C_j)` and
/// `priors[j] = log p(C_j)`; for logistic regression and SVM they are the
/// learned weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub labels: Vec<String>,
    pub vocab: Vocabulary,
    /// `weights[j]` has one entry per feature.
    pub weights: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

impl LinearModel {
    pub fn new(
        kind: ModelKind,
        labels: Vec<String>,
        vocab: Vocabulary,
        weights: Vec<Vec<f64>>,
        priors: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let m = Self {
            kind,
            labels,
            vocab,
            weights,
            priors,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn num_features(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_categories(&self) -> usize {
        self.priors.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let b = self.priors.len();
        if b == 0 {
            return Err(ModelError::Shape("no categories"));
        }
        if self.labels.len() != b || self.weights.len() != b {
            return Err(ModelError::Shape("labels/weights/priors disagree on B"));
        }
        let n = self.vocab.len();
        if self.weights.iter().any(|w| w.len() != n) {
            return Err(ModelError::Shape("weight vector length differs from N"));
        }
        if self.kind == ModelKind::GrnbSpam && b != 2 {
            return Err(ModelError::LabelCount {
                needed: 2,
                found: b,
            });
        }
        if self.kind.is_naive_bayes() {
            let all = self.weights.iter().flatten().chain(self.priors.iter());
            for &v in all {
                if !(v <= 0.0) {
                    return Err(ModelError::Shape(
                        "naive Bayes log-probabilities must be <= 0",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Column `i` of the weight matrix (one value per category).
    pub fn feature_row(&self, i: usize) -> Vec<f64> {
        self.weights.iter().map(|w| w[i]).collect()
    }
}
