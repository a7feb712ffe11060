//! Baseline online optimizers used for comparison tables.

use std::collections::BTreeMap;

use anyhow::{bail, Result};

use aoftrl_core::domains::Domain;
use aoftrl_core::ftrl::{regret_against, RegretReport, RoundRecord};
use aoftrl_core::oracle::{self, OracleConfig};
use aoftrl_core::regularizers::CompositeTerm;
use aoftrl_core::stream::LossFamily;
use aoftrl_core::vec_ops;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// Projected gradient steps `c / sqrt(t)` scaled by the largest radius.
    Ogd,
    /// Per-coordinate steps scaled by the inverse root of the accumulated
    /// squared gradients, floored at 1e-12.
    AdaGradDiag,
    /// Multiplicative weights with a constant learning rate.
    FixedEtaEg { eta: f64 },
}

/// Runs a baseline and assembles the same report shape the adaptive solvers
/// produce. The AdaGrad row also carries the classic data-dependent bound
/// `sqrt(2) max_t ||x* - x_t||_inf Σ_i sqrt(Σ_t g_{t,i}^2)` for reference.
pub fn run_baseline<F: LossFamily>(
    kind: BaselineKind,
    family: &F,
    domain: &Domain,
    horizon: usize,
    oracle_cfg: &OracleConfig,
) -> Result<RegretReport> {
    let n = domain.dim();
    let mut x = domain.center();
    let mut trace: Vec<RoundRecord> = Vec::with_capacity(horizon);
    let mut accum_sq = vec![0.0; n];

    match (&kind, domain) {
        (BaselineKind::FixedEtaEg { .. }, Domain::Simplex(_)) => {}
        (BaselineKind::FixedEtaEg { .. }, _) => bail!("multiplicative weights needs a simplex"),
        (_, Domain::Rect(_)) => {}
        (_, Domain::Simplex(_)) => bail!("descent baselines need a box domain"),
    }

    for t in 1..=horizon {
        let (loss, gradient) = family.eval(t, &x);
        trace.push(RoundRecord {
            t,
            iterate: x.clone(),
            loss,
            gradient: gradient.clone(),
            prediction: vec![0.0; n],
            dual_term_sq: 0.0,
            composite_value: 0.0,
        });
        for i in 0..n {
            accum_sq[i] += gradient[i] * gradient[i];
        }
        x = match (&kind, domain) {
            (BaselineKind::Ogd, Domain::Rect(b)) => {
                let c = b.radii().iter().fold(0.0f64, |m, r| m.max(*r));
                let eta = c / (t as f64).sqrt();
                let moved: Vec<f64> = x.iter().zip(&gradient).map(|(xi, gi)| xi - eta * gi).collect();
                b.clip(&moved)?
            }
            (BaselineKind::AdaGradDiag, Domain::Rect(b)) => {
                let moved: Vec<f64> = (0..n)
                    .map(|i| {
                        let denom = accum_sq[i].sqrt().max(1e-12);
                        x[i] - b.radii()[i] * gradient[i] / denom
                    })
                    .collect();
                b.clip(&moved)?
            }
            (BaselineKind::FixedEtaEg { eta }, Domain::Simplex(_)) => {
                let mut next: Vec<f64> = x
                    .iter()
                    .zip(&gradient)
                    .map(|(xi, gi)| xi.max(1e-300) * (-eta * gi).exp())
                    .collect();
                let sum: f64 = next.iter().sum();
                for v in next.iter_mut() {
                    *v /= sum;
                }
                next
            }
            _ => unreachable!(),
        };
    }

    let comparator =
        oracle::best_fixed_point(family, horizon, domain, &CompositeTerm::None, oracle_cfg).point;
    let realized_regret = regret_against(family, &trace, &CompositeTerm::None, &comparator);
    let regret_vs_center = regret_against(family, &trace, &CompositeTerm::None, &domain.center());

    let mut bounds = BTreeMap::new();
    if kind == BaselineKind::AdaGradDiag {
        let d_inf = trace
            .iter()
            .map(|r| vec_ops::inf_norm(&vec_ops::sub(&comparator, &r.iterate)))
            .fold(0.0f64, f64::max);
        let col_sum: f64 = (0..n).map(|i| accum_sq[i].sqrt()).sum();
        bounds.insert("adagrad".to_string(), 2f64.sqrt() * d_inf * col_sum);
    }

    Ok(RegretReport {
        horizon,
        comparator,
        realized_regret,
        regret_vs_center,
        bounds,
        final_iterate: x,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{ConstLinear, ListLinear};
    use aoftrl_core::domains::Hyperrectangle;

    #[test]
    fn ogd_descends_toward_the_facing_wall() {
        let family = ConstLinear::new(vec![1.0]);
        let dom = Domain::Rect(Hyperrectangle::new(vec![1.0]).unwrap());
        let report = run_baseline(BaselineKind::Ogd, &family, &dom, 30, &OracleConfig::default()).unwrap();
        for w in report.trace.windows(2) {
            assert!(w[1].iterate[0] <= w[0].iterate[0] + 1e-15);
        }
        assert!(report.final_iterate[0] < -0.9);
    }

    #[test]
    fn adagrad_freezes_on_zero_gradients() {
        let family = ListLinear::new(vec![vec![0.0, 0.0]; 10]);
        let dom = Domain::Rect(Hyperrectangle::new(vec![1.0, 1.0]).unwrap());
        let report =
            run_baseline(BaselineKind::AdaGradDiag, &family, &dom, 10, &OracleConfig::default())
                .unwrap();
        for r in &report.trace {
            assert_eq!(r.iterate, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let family = ConstLinear::new(vec![1.0, 1.0]);
        let dom = Domain::Rect(Hyperrectangle::new(vec![1.0, 1.0]).unwrap());
        assert!(run_baseline(
            BaselineKind::FixedEtaEg { eta: 0.5 },
            &family,
            &dom,
            5,
            &OracleConfig::default()
        )
        .is_err());
    }
}
