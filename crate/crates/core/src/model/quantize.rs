use alloc::string::String;
use alloc::vec::Vec;

use super::score::argmax;
use super::{Decision, FeatureVector, LinearModel, ModelError, ModelKind, Vocabulary};

pub const MIN_B_IN: u32 = 2;
pub const MAX_B_IN: u32 = 24;
const MAX_SCALE: u32 = 40;

/// Fixed-point model: `q = round((w - offset) * 2^scale)`, every value in
/// `[0, 2^b_in)`.
///
/// The common offset shifts every category score by `offset * (sum x + 1)`,
/// which leaves arg-max and score differences unchanged and keeps all packed
/// values non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub kind: ModelKind,
    pub labels: Vec<String>,
    pub vocab: Vocabulary,
    pub b_in: u32,
    pub scale: u32,
    pub offset: f64,
    /// `qweights[j][i]`, B rows of N values.
    pub qweights: Vec<Vec<u64>>,
    pub qpriors: Vec<u64>,
}

fn range_of(model: &LinearModel) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in model.weights.iter().flatten().chain(&model.priors) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn check_b_in(b_in: u32) -> Result<(), ModelError> {
    if !(MIN_B_IN..=MAX_B_IN).contains(&b_in) {
        return Err(ModelError::InvalidParameter("b_in must be in 2..=24"));
    }
    Ok(())
}

fn q(v: f64, offset: f64, scale: u32) -> u64 {
    libm::round((v - offset) * libm::ldexp(1.0, scale as i32)) as u64
}

pub fn quantize(model: &LinearModel, b_in: u32, scale: u32) -> Result<QuantizedModel, ModelError> {
    check_b_in(b_in)?;
    if scale > MAX_SCALE {
        return Err(ModelError::InvalidParameter("scale must be <= 40"));
    }
    let (lo, hi) = range_of(model);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(ModelError::InvalidParameter(
            "model has non-finite parameters",
        ));
    }
    if q(hi, lo, scale) >= 1u64 << b_in {
        return Err(ModelError::RangeExceeded {
            range: hi - lo,
            b_in,
            scale,
        });
    }
    Ok(QuantizedModel {
        kind: model.kind,
        labels: model.labels.clone(),
        vocab: model.vocab.clone(),
        b_in,
        scale,
        offset: lo,
        qweights: model
            .weights
            .iter()
            .map(|w| w.iter().map(|&v| q(v, lo, scale)).collect())
            .collect(),
        qpriors: model.priors.iter().map(|&v| q(v, lo, scale)).collect(),
    })
}

/// Quantize at the largest scale that still fits `b_in` bits.
pub fn quantize_auto(model: &LinearModel, b_in: u32) -> Result<QuantizedModel, ModelError> {
    check_b_in(b_in)?;
    let (lo, hi) = range_of(model);
    let scale = (0..=MAX_SCALE)
        .rev()
        .find(|&s| q(hi, lo, s) < 1u64 << b_in)
        .ok_or(ModelError::RangeExceeded {
            range: hi - lo,
            b_in,
            scale: 0,
        })?;
    quantize(model, b_in, scale)
}

/// Threshold on `log alpha` expressed in quantized score units.
pub fn quantize_threshold(tau: f64, scale: u32) -> i64 {
    libm::round(tau * libm::ldexp(1.0, scale as i32)) as i64
}

impl QuantizedModel {
    pub fn num_features(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_categories(&self) -> usize {
        self.qpriors.len()
    }

    /// Row `i` of the quantized matrix, one value per category.
    pub fn feature_row(&self, i: usize) -> Vec<u64> {
        self.qweights.iter().map(|w| w[i]).collect()
    }

    /// Integer scores `sum_i x_i * qw[j][i] + qp[j]`.
    pub fn scores(&self, fv: &FeatureVector) -> Result<Vec<u64>, ModelError> {
        fv.check_range(self.num_features())?;
        Ok(self
            .qweights
            .iter()
            .zip(&self.qpriors)
            .map(|(w, &p)| {
                fv.entries()
                    .iter()
                    .fold(p, |acc, &(id, x)| acc + x as u64 * w[id as usize])
            })
            .collect())
    }

    /// Quantized reference decision: spam iff `d_nonspam - d_spam < tau_q`,
    /// else arg-max with lowest index on ties.
    pub fn classify(&self, fv: &FeatureVector, tau_q: i64) -> Result<Decision, ModelError> {
        let d = self.scores(fv)?;
        if self.kind == ModelKind::GrnbSpam {
            let diff = d[1] as i64 - d[0] as i64;
            return Ok(if diff < tau_q {
                Decision::Spam
            } else {
                Decision::NotSpam
            });
        }
        Ok(Decision::Category(argmax(&d)))
    }

    /// Worst-case error of any score difference, in model units, introduced
    /// by rounding: `(sum x + 1) * 2^(1 - scale)`.
    pub fn error_bound(&self, fv: &FeatureVector) -> f64 {
        (fv.total_frequency() as f64 + 1.0) * libm::ldexp(1.0, 1 - self.scale as i32)
    }

    /// Largest absolute rounding error of any single parameter, in model units.
    pub fn max_parameter_error(&self, model: &LinearModel) -> f64 {
        let unit = libm::ldexp(1.0, -(self.scale as i32));
        let mut worst: f64 = 0.0;
        for (qw, w) in self.qweights.iter().zip(&model.weights) {
            for (&qv, &v) in qw.iter().zip(w) {
                worst = worst.max(libm::fabs(qv as f64 * unit + self.offset - v));
            }
        }
        for (&qv, &v) in self.qpriors.iter().zip(&model.priors) {
            worst = worst.max(libm::fabs(qv as f64 * unit + self.offset - v));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn model(weights: Vec<Vec<f64>>, priors: Vec<f64>) -> LinearModel {
        let n = weights[0].len();
        let vocab = Vocabulary::from_tokens((0..n).map(|i| alloc::format!("t{i}"))).unwrap();
        let labels = (0..priors.len()).map(|j| alloc::format!("c{j}")).collect();
        LinearModel::new(ModelKind::Logistic, labels, vocab, weights, priors).unwrap()
    }

    #[test]
    fn formula_example() {
        let m = model(vec![vec![-1.5, -4.0]], vec![-4.0]);
        let qm = quantize(&m, 8, 4).unwrap();
        assert_eq!(qm.offset, -4.0);
        assert_eq!(qm.qweights[0], vec![40, 0]);
        assert_eq!(qm.qpriors, vec![0]);
    }

    #[test]
    fn constant_model_quantizes_to_zero() {
        let m = model(vec![vec![-2.0; 3]; 2], vec![-2.0, -2.0]);
        let qm = quantize(&m, 4, 10).unwrap();
        assert!(qm.qweights.iter().flatten().all(|&v| v == 0));
        assert!(qm.qpriors.iter().all(|&v| v == 0));
    }

    #[test]
    fn range_exceeded() {
        let m = model(vec![vec![0.0, 1.0]], vec![0.0]);
        assert!(matches!(
            quantize(&m, 4, 4),
            Err(ModelError::RangeExceeded { .. })
        ));
        assert!(quantize(&m, 5, 4).is_ok());
    }

    #[test]
    fn b_in_bounds() {
        let m = model(vec![vec![0.0]], vec![0.0]);
        assert!(quantize(&m, 1, 0).is_err());
        assert!(quantize(&m, 25, 0).is_err());
    }

    #[test]
    fn auto_scale_is_maximal() {
        let m = model(vec![vec![-3.0, 0.0]], vec![-1.0]);
        let qm = quantize_auto(&m, 12).unwrap();
        assert!(qm.qweights[0][1] < 1 << 12);
        assert!(quantize(&m, 12, qm.scale + 1).is_err());
        assert!(qm.max_parameter_error(&m) <= libm::ldexp(1.0, -(qm.scale as i32) - 1) + 1e-12);
    }

    #[test]
    fn integer_scores() {
        let m = model(vec![vec![-1.5, -4.0], vec![-2.0, -3.0]], vec![-4.0, -3.5]);
        let qm = quantize(&m, 8, 4).unwrap();
        let fv = FeatureVector::new(vec![(0, 2), (1, 1)]).unwrap();
        // row 1: 2*32 + 16 + prior 8
        assert_eq!(qm.scores(&fv).unwrap(), vec![80, 88]);
        assert_eq!(qm.classify(&fv, 0).unwrap(), Decision::Category(1));
    }

    #[test]
    fn threshold_quantization() {
        assert_eq!(quantize_threshold(0.0, 8), 0);
        assert_eq!(quantize_threshold(-1.25, 4), -20);
    }
}
