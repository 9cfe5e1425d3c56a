use alloc::vec;
use alloc::vec::Vec;

use super::features::tokenize;
use super::{Corpus, LinearModel, ModelError, Vocabulary};

/// Chi-square statistic of the (feature present?) x (category) contingency
/// table, one value per model feature.
pub fn chi_square_scores(model: &LinearModel, corpus: &Corpus) -> Vec<f64> {
    let n = model.num_features();
    let b = model.num_categories();
    let mut docs = vec![0f64; b];
    let mut present = vec![vec![0f64; b]; n];
    let mut seen = vec![false; n];
    for (text, label) in &corpus.documents {
        let Some(j) = model.labels.iter().position(|l| l == label) else {
            continue;
        };
        docs[j] += 1.0;
        seen.iter_mut().for_each(|s| *s = false);
        for tok in tokenize(text) {
            if let Some(id) = model.vocab.get(&tok) {
                let id = id as usize;
                if !seen[id] {
                    seen[id] = true;
                    present[id][j] += 1.0;
                }
            }
        }
    }
    let total: f64 = docs.iter().sum();
    present
        .iter()
        .map(|row| {
            let with: f64 = row.iter().sum();
            let without = total - with;
            let mut chi = 0.0;
            for j in 0..b {
                for (observed, margin) in [(row[j], with), (docs[j] - row[j], without)] {
                    let expected = margin * docs[j] / total;
                    if expected > 0.0 {
                        let d = observed - expected;
                        chi += d * d / expected;
                    }
                }
            }
            chi
        })
        .collect()
}

/// Keep the `n_prime` features with the highest chi-square statistic,
/// re-indexed densely in their original order.
pub fn select_features(
    model: &LinearModel,
    corpus: &Corpus,
    n_prime: usize,
) -> Result<LinearModel, ModelError> {
    if n_prime == 0 {
        return Err(ModelError::InvalidParameter("N' must be at least 1"));
    }
    if n_prime > model.num_features() {
        return Err(ModelError::InvalidParameter("N' exceeds N"));
    }
    let chi = chi_square_scores(model, corpus);
    let mut order: Vec<usize> = (0..chi.len()).collect();
    order.sort_by(|&a, &b| chi[b].total_cmp(&chi[a]).then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[..n_prime].to_vec();
    keep.sort_unstable();

    let vocab = Vocabulary::from_tokens(keep.iter().map(|&i| model.vocab.tokens()[i].clone()))?;
    let weights = model
        .weights
        .iter()
        .map(|w| keep.iter().map(|&i| w[i]).collect())
        .collect();
    LinearModel::new(
        model.kind,
        model.labels.clone(),
        vocab,
        weights,
        model.priors.clone(),
    )
}
