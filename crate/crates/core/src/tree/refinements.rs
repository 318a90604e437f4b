//! Quantal-response choice probabilities and discounted stage totals.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefinementError {
    #[error("no options to choose from")]
    NoOptions,
    #[error("rationality parameter must be finite and non-negative, got {0}")]
    Lambda(f64),
    #[error("discount factor must lie in (0, 1], got {0}")]
    Discount(f64),
}

/// Logit choice probabilities `exp(λu) / Σ exp(λu')`, computed stably.
pub fn quantal_response(utilities: &[f64], lambda: f64) -> Result<Vec<f64>, RefinementError> {
    if utilities.is_empty() {
        return Err(RefinementError::NoOptions);
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(RefinementError::Lambda(lambda));
    }
    let top = utilities.iter().map(|u| lambda * u).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities.iter().map(|u| (lambda * u - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `Σ_t δ^t U(t)` with the first entry at t = 0.
pub fn discounted_total(stage_utilities: &[f64], delta: f64) -> Result<f64, RefinementError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(RefinementError::Discount(delta));
    }
    let mut factor = 1.0;
    let mut total = 0.0;
    for u in stage_utilities {
        total += factor * u;
        factor *= delta;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_limits() {
        assert_eq!(quantal_response(&[1.0, 0.0, 3.0], 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        let eq = quantal_response(&[2.0, 2.0], 7.0).unwrap();
        assert_eq!(eq, vec![0.5, 0.5]);
        let sharp = quantal_response(&[1.0, 0.0], 50.0).unwrap();
        assert!((sharp[0] - 1.0).abs() < 1e-6);
        assert_eq!(quantal_response(&[], 1.0), Err(RefinementError::NoOptions));
        assert!(quantal_response(&[1.0], -1.0).is_err());
        // Large utilities do not overflow.
        let big = quantal_response(&[1000.0, 999.0], 1.0).unwrap();
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discounting() {
        assert_eq!(discounted_total(&[1.0, 2.0, 3.0], 1.0).unwrap(), 6.0);
        assert_eq!(discounted_total(&[4.0, 2.0], 0.5).unwrap(), 5.0);
        assert_eq!(discounted_total(&[], 0.9).unwrap(), 0.0);
        assert!(discounted_total(&[1.0], 0.0).is_err());
        assert!(discounted_total(&[1.0], 1.5).is_err());
    }
}
