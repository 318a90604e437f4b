//! Adaptive revision of likelihoods and parameters from observed outcomes.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearningError {
    #[error("rate {0} is outside [0,1]")]
    Rate(f64),
    #[error("{name} = {value} is outside [0,1]")]
    Probability { name: &'static str, value: f64 },
    #[error("value {0} is not finite")]
    NotFinite(f64),
}

fn rate(x: f64) -> Result<f64, LearningError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(LearningError::Rate(x))
    }
}

fn probability(name: &'static str, value: f64) -> Result<f64, LearningError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(LearningError::Probability { name, value })
    }
}

/// Moves a likelihood toward an observed frequency: `ℓ + β(f − ℓ)`.
pub fn adaptive_likelihood_update(likelihood: f64, frequency: f64, beta: f64) -> Result<f64, LearningError> {
    let l = probability("likelihood", likelihood)?;
    let f = probability("frequency", frequency)?;
    Ok((l + rate(beta)? * (f - l)).clamp(0.0, 1.0))
}

/// Moves a parameter toward its estimate from realized outcomes: `θ + η(θ̂ − θ)`.
pub fn calibrate_parameter(current: f64, estimate: f64, eta: f64) -> Result<f64, LearningError> {
    for x in [current, estimate] {
        if !x.is_finite() {
            return Err(LearningError::NotFinite(x));
        }
    }
    Ok(current + rate(eta)? * (estimate - current))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_interpolate() {
        assert_eq!(adaptive_likelihood_update(0.2, 0.6, 0.5).unwrap(), 0.4);
        assert_eq!(adaptive_likelihood_update(0.2, 0.6, 0.0).unwrap(), 0.2);
        assert_eq!(adaptive_likelihood_update(0.2, 0.6, 1.0).unwrap(), 0.6);
        assert_eq!(calibrate_parameter(2.0, 4.0, 0.25).unwrap(), 2.5);
        assert!(adaptive_likelihood_update(0.2, 1.2, 0.5).is_err());
        assert!(calibrate_parameter(1.0, 2.0, 1.5).is_err());
    }
}
