//! Log-space softmax and inverse-CDF sampling shared by all policies.

use rand::Rng;

use crate::error::{LabError, Result};

/// Normalizes `exp(logits)` after subtracting the largest logit.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = logits.iter().find(|l| !l.is_finite()) {
        return Err(LabError::Numerical(format!("non-finite log-weight {bad}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        // The maximal entry contributes exp(0) = 1, so this is unreachable
        // for finite input.
        log::warn!("softmax normalizer {total} degenerate; falling back to uniform");
        let k = weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = 1.0 / k);
        return Ok(weights);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// `ln sum_a exp(logits[a])`, computed with max subtraction.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Inverse-CDF lookup of `u` in `[0, 1)`; cumulative sums run in arm order
/// and the last arm absorbs any rounding residue.
pub fn inverse_cdf(probabilities: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (arm, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return arm;
        }
    }
    probabilities.len() - 1
}

/// Draws an arm from `probabilities` with a single uniform variate.
pub fn sample_arm<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    inverse_cdf(probabilities, rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax(&[-1e8, 0.0, -1e8 + 1.0]).unwrap();
        assert_eq!(p[1], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rejects_nan() {
        assert!(softmax(&[0.0, f64::NAN]).is_err());
        assert!(softmax(&[0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn log_sum_exp_matches_naive() {
        let xs = [0.3, -1.2, 2.5];
        let naive: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn inverse_cdf_buckets() {
        let p = [0.25, 0.5, 0.25];
        assert_eq!(inverse_cdf(&p, 0.0), 0);
        assert_eq!(inverse_cdf(&p, 0.2499), 0);
        assert_eq!(inverse_cdf(&p, 0.25), 1);
        assert_eq!(inverse_cdf(&p, 0.7499), 1);
        assert_eq!(inverse_cdf(&p, 0.9999999), 2);
        // residue lands in the last bucket
        assert_eq!(inverse_cdf(&[0.5, 0.4999999], 0.99999999), 1);
    }
}
