use alloc::vec::Vec;

use super::{FeatureVector, LinearModel, ModelError, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Spam,
    NotSpam,
    /// 0-based category index.
    Category(usize),
}

/// `result[j] = sum_i x_i * weights[j][i] + priors[j]`.
pub fn score_categories(model: &LinearModel, fv: &FeatureVector) -> Result<Vec<f64>, ModelError> {
    fv.check_range(model.num_features())?;
    Ok(model
        .weights
        .iter()
        .zip(&model.priors)
        .map(|(w, &prior)| {
            fv.entries()
                .iter()
                .fold(prior, |acc, &(id, x)| acc + x as f64 * w[id as usize])
        })
        .collect())
}

fn require_spam(model: &LinearModel) -> Result<(), ModelError> {
    if model.kind != ModelKind::GrnbSpam {
        return Err(ModelError::WrongKind {
            expected: "grnb_spam",
            found: model.kind.name(),
        });
    }
    Ok(())
}

/// `log alpha = score(non-spam) - score(spam)` where `alpha = 1/p(spam|x) - 1`.
pub fn spam_log_alpha(model: &LinearModel, fv: &FeatureVector) -> Result<f64, ModelError> {
    require_spam(model)?;
    let s = score_categories(model, fv)?;
    Ok(s[1] - s[0])
}

/// Mantissa/exponent accumulator so long probability products do not underflow.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    mant: f64,
    exp: i64,
}

impl Scaled {
    fn new(v: f64) -> Self {
        let (m, e) = libm::frexp(v);
        Self {
            mant: m,
            exp: e as i64,
        }
    }

    fn mul(self, v: f64) -> Self {
        let (m, e) = libm::frexp(self.mant * v);
        Self {
            mant: m,
            exp: self.exp + e as i64,
        }
    }

    fn is_zero(self) -> bool {
        self.mant == 0.0
    }
}

/// Joint `p(x | C_j) p(C_j)` (up to the category-independent multinomial
/// coefficient) computed as a product of probabilities.
fn joints(model: &LinearModel, fv: &FeatureVector) -> Vec<Scaled> {
    model
        .weights
        .iter()
        .zip(&model.priors)
        .map(|(w, &prior)| {
            let mut acc = Scaled::new(libm::exp(prior));
            for &(id, x) in fv.entries() {
                let p = libm::exp(w[id as usize]);
                for _ in 0..x {
                    acc = acc.mul(p);
                }
            }
            acc
        })
        .collect()
}

/// Exact posterior `p(C_j | x)` for naive Bayes models, evaluated in
/// probability space with exponent rescaling.
pub fn posterior_all(model: &LinearModel, fv: &FeatureVector) -> Result<Vec<f64>, ModelError> {
    if !model.kind.is_naive_bayes() {
        return Err(ModelError::WrongKind {
            expected: "naive Bayes",
            found: model.kind.name(),
        });
    }
    fv.check_range(model.num_features())?;
    let js = joints(model, fv);
    let top = js
        .iter()
        .filter(|s| !s.is_zero())
        .map(|s| s.exp)
        .max()
        .ok_or(ModelError::DegenerateLikelihood)?;
    let vals: Vec<f64> = js
        .iter()
        .map(|s| {
            if s.is_zero() {
                0.0
            } else {
                let shift = (s.exp - top).max(-2000) as i32;
                libm::ldexp(s.mant, shift)
            }
        })
        .collect();
    let total: f64 = vals.iter().sum();
    Ok(vals.into_iter().map(|v| v / total).collect())
}

/// `p(spam | x)` from Bayes' rule directly (the reference for `spam_log_alpha`).
pub fn posterior_direct(model: &LinearModel, fv: &FeatureVector) -> Result<f64, ModelError> {
    require_spam(model)?;
    Ok(posterior_all(model, fv)?[0])
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Non-private classification: spam iff `log alpha < tau` for spam models,
/// otherwise the arg-max category (lowest index wins ties).
pub fn classify_plain(
    model: &LinearModel,
    fv: &FeatureVector,
    tau: f64,
) -> Result<Decision, ModelError> {
    if model.kind == ModelKind::GrnbSpam {
        return Ok(if spam_log_alpha(model, fv)? < tau {
            Decision::Spam
        } else {
            Decision::NotSpam
        });
    }
    let s = score_categories(model, fv)?;
    Ok(Decision::Category(argmax(&s)))
}
