//! Gradient-prediction strategies built from the observed gradient history.

use crate::error::{check_dim, Error, Result};

/// How the next-round gradient guess is formed.
///
/// `Zero` recovers the non-optimistic adaptive FTRL family, `LastGradient`
/// is the martingale guess (next gradient equals the last one seen), and
/// `HalfLipschitz` pins each coordinate to half its Lipschitz bound, the
/// midpoint guess used with importance-sampled coordinate updates.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictorKind {
    Zero,
    LastGradient,
    HalfLipschitz(Vec<f64>),
}

impl PredictorKind {
    pub fn half_lipschitz(bounds: Vec<f64>) -> Result<Self> {
        if bounds.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::InvalidParameter(
                "half-Lipschitz predictor needs positive finite bounds".into(),
            ));
        }
        Ok(PredictorKind::HalfLipschitz(bounds))
    }

    /// Prediction for the next round given the gradients seen so far.
    ///
    /// An empty history yields the zero vector, so the first round always
    /// runs with a null guess.
    pub fn predict(&self, history: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
        for g in history {
            check_dim(dim, g.len())?;
        }
        Ok(match self {
            PredictorKind::Zero => vec![0.0; dim],
            PredictorKind::LastGradient => match history.last() {
                Some(g) => g.clone(),
                None => vec![0.0; dim],
            },
            PredictorKind::HalfLipschitz(bounds) => {
                check_dim(dim, bounds.len())?;
                bounds.iter().map(|l| l / 2.0).collect()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_history_predicts_zero() {
        let p = PredictorKind::LastGradient;
        assert_eq!(p.predict(&[], 3).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn last_gradient_returns_last() {
        let p = PredictorKind::LastGradient;
        let hist = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        assert_eq!(p.predict(&hist, 2).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn half_lipschitz_ignores_history() {
        let p = PredictorKind::half_lipschitz(vec![2.0, 4.0]).unwrap();
        assert_eq!(p.predict(&[], 2).unwrap(), vec![1.0, 2.0]);
        let hist = vec![vec![9.0, -9.0]];
        assert_eq!(p.predict(&hist, 2).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn predict_is_pure() {
        let p = PredictorKind::LastGradient;
        let hist = vec![vec![0.5, -0.5]];
        assert_eq!(p.predict(&hist, 2).unwrap(), p.predict(&hist, 2).unwrap());
    }

    #[test]
    fn ragged_history_is_rejected() {
        let p = PredictorKind::Zero;
        let hist = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(p.predict(&hist, 2).is_err());
    }
}
