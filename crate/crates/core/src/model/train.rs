use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::features::{keep_new_token, tokenize};
use super::{LinearModel, ModelError, ModelKind, Vocabulary};

/// Label that marks category 0 (C1) of a spam model.
pub const SPAM_LABEL: &str = "spam";

/// Labelled training documents.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<(String, String)>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, text: impl Into<String>, label: impl Into<String>) {
        self.documents.push((text.into(), label.into()));
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Distinct labels in sorted order.
    pub fn labels(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.documents.iter().map(|(_, l)| l.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    /// Vocabulary of every 2-24 character token, in first-seen order.
    pub fn vocabulary(&self) -> Vocabulary {
        let mut v = Vocabulary::new();
        for (text, _) in &self.documents {
            for tok in tokenize(text) {
                if keep_new_token(&tok) {
                    v.insert(tok);
                }
            }
        }
        v
    }
}

fn category_order(corpus: &Corpus, kind: ModelKind) -> Result<Vec<String>, ModelError> {
    let mut labels = corpus.labels();
    if kind == ModelKind::GrnbSpam {
        if labels.len() != 2 {
            return Err(ModelError::LabelCount {
                needed: 2,
                found: labels.len(),
            });
        }
        let pos = labels
            .iter()
            .position(|l| l == SPAM_LABEL)
            .ok_or(ModelError::MissingSpamLabel)?;
        labels.swap(0, pos);
    }
    Ok(labels)
}

/// Train a naive Bayes model.
///
/// Multinomial: `weight[j][i] = ln((tf_ij + 1) / (sum_i tf_ij + N))`
/// (add-one smoothing). GR-NB spam: `weight[j][i] = ln((df_ij + 1) /
/// (docs_j + 2))`, the smoothed probability that feature `i` is present in
/// a document of category `j`. Priors are `ln(docs_j / docs)` for both.
///
/// When `vocab` is `None` the vocabulary is every 2-24 character token seen
/// in training.
pub fn train_nb(
    corpus: &Corpus,
    kind: ModelKind,
    vocab: Option<&Vocabulary>,
) -> Result<LinearModel, ModelError> {
    if !kind.is_naive_bayes() {
        return Err(ModelError::WrongKind {
            expected: "naive Bayes",
            found: kind.name(),
        });
    }
    if corpus.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let labels = category_order(corpus, kind)?;
    let vocab = match vocab {
        Some(v) => v.clone(),
        None => corpus.vocabulary(),
    };
    if vocab.is_empty() {
        return Err(ModelError::EmptyVocabulary);
    }
    let n = vocab.len();
    let b = labels.len();

    let mut docs = vec![0u64; b];
    // term counts (multinomial) or document counts (GR-NB)
    let mut counts = vec![vec![0u64; n]; b];
    let mut seen = vec![false; n];
    for (text, label) in &corpus.documents {
        let j = labels.iter().position(|l| l == label).unwrap();
        docs[j] += 1;
        seen.iter_mut().for_each(|s| *s = false);
        for tok in tokenize(text) {
            let Some(id) = vocab.get(&tok) else { continue };
            let id = id as usize;
            match kind {
                ModelKind::MultinomialNb => counts[j][id] += 1,
                _ => {
                    if !seen[id] {
                        seen[id] = true;
                        counts[j][id] += 1;
                    }
                }
            }
        }
    }

    let total = corpus.len() as f64;
    let priors: Vec<f64> = docs.iter().map(|&d| libm::log(d as f64 / total)).collect();
    let weights: Vec<Vec<f64>> = (0..b)
        .map(|j| {
            let denom = match kind {
                ModelKind::MultinomialNb => counts[j].iter().sum::<u64>() as f64 + n as f64,
                _ => docs[j] as f64 + 2.0,
            };
            counts[j]
                .iter()
                .map(|&c| libm::log((c as f64 + 1.0) / denom))
                .collect()
        })
        .collect();
    LinearModel::new(kind, labels, vocab, weights, priors)
}
