//! Randomized coordinate descent with importance-weighted gradient
//! estimates and adaptive sampling distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domains::{Domain, Hyperrectangle};
use crate::error::{check_dim, Error, Result};
use crate::ftrl::{aogd_step, cao_l1_step, ftrl_regret_bound, regret_against, RegretReport, RoundRecord};
use crate::oracle::{self, OracleConfig};
use crate::predictors::PredictorKind;
use crate::regularizers::{AogdRegState, CompositeTerm};
use crate::sampling::{check_probabilities, sample_categorical};
use crate::stream::LossFamily;
use crate::vec_ops;

/// A sampling distribution over coordinates, or over blocks of coordinates
/// when a partition is present (then `block_radii` holds the summed radii of
/// each block).
#[derive(Debug, Clone)]
pub struct CoordSampler {
    probs: Vec<f64>,
    partition: Option<Vec<Vec<usize>>>,
    block_radii: Option<Vec<f64>>,
}

impl CoordSampler {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probabilities(&probs)?;
        Ok(Self { probs, partition: None, block_radii: None })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn partition(&self) -> Option<&[Vec<usize>]> {
        self.partition.as_deref()
    }

    pub fn block_radii(&self) -> Option<&[f64]> {
        self.block_radii.as_deref()
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one coordinate".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }
}

/// Sparse unbiased estimate: everything zero except `index`, which holds
/// `g_component / p_index`.
pub fn importance_estimate(
    g_component: f64,
    index: usize,
    sampler: &CoordSampler,
    n: usize,
) -> Result<Vec<f64>> {
    if index >= sampler.probs.len() {
        return Err(Error::InvalidParameter(format!(
            "sampled index {index} out of range for {} probabilities",
            sampler.probs.len()
        )));
    }
    let p = sampler.probs[index];
    if p <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "coordinate {index} has zero sampling probability"
        )));
    }
    check_dim(sampler.probs.len(), n)?;
    let mut out = vec![0.0; n];
    out[index] = g_component / p;
    Ok(out)
}

/// Sampling distribution proportional to `(R_i L_i)^{2/3}`, the minimizer of
/// the variance-style objective `Σ_i (R_i L_i)^2 / p_i` over the simplex.
pub fn lipschitz_distribution(radii: &[f64], bounds: &[f64]) -> Result<CoordSampler> {
    check_dim(radii.len(), bounds.len())?;
    if radii.iter().chain(bounds).any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidParameter("radii and bounds must be positive".into()));
    }
    let weights: Vec<f64> = radii
        .iter()
        .zip(bounds)
        .map(|(r, l)| (r * l).cbrt().powi(2))
        .collect();
    let total: f64 = weights.iter().sum();
    CoordSampler::new(weights.iter().map(|w| w / total).collect())
}

/// Block version: probabilities proportional to `(S_i L_i)^{2/3}` where
/// `S_i` sums the radii of the block's coordinates.
pub fn minibatch_distribution(
    partition: &[Vec<usize>],
    radii: &[f64],
    block_bounds: &[f64],
) -> Result<CoordSampler> {
    validate_partition(partition, radii.len())?;
    check_dim(partition.len(), block_bounds.len())?;
    if block_bounds.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::InvalidParameter("block bounds must be positive".into()));
    }
    let block_radii: Vec<f64> = partition
        .iter()
        .map(|block| block.iter().map(|&j| radii[j]).sum())
        .collect();
    let weights: Vec<f64> = block_radii
        .iter()
        .zip(block_bounds)
        .map(|(s, l)| (s * l).cbrt().powi(2))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut sampler = CoordSampler::new(weights.iter().map(|w| w / total).collect())?;
    sampler.partition = Some(partition.to_vec());
    sampler.block_radii = Some(block_radii);
    Ok(sampler)
}

fn validate_partition(partition: &[Vec<usize>], n: usize) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::InvalidParameter("empty partition".into()));
    }
    let mut seen = vec![false; n];
    for block in partition {
        if block.is_empty() {
            return Err(Error::InvalidParameter("empty block in partition".into()));
        }
        for &j in block {
            if j >= n || seen[j] {
                return Err(Error::InvalidParameter(
                    "partition blocks must be disjoint and in range".into(),
                ));
            }
            seen[j] = true;
        }
    }
    if !seen.iter().all(|s| *s) {
        return Err(Error::InvalidParameter("partition must cover all coordinates".into()));
    }
    Ok(())
}

/// How the per-round sampling distribution is chosen. It is held fixed over
/// rounds; per-round adaptation can reuse the same machinery later.
#[derive(Debug, Clone)]
pub enum SamplerPolicy {
    Uniform,
    /// Per-coordinate gradient bounds; probabilities `∝ (R_i L_i)^{2/3}`.
    Lipschitz { bounds: Vec<f64> },
    /// Block sampling with per-block bounds; probabilities `∝ (S_i L_i)^{2/3}`.
    MiniBatch { partition: Vec<Vec<usize>>, block_bounds: Vec<f64> },
}

/// Worst-case regret bound of the Lipschitz-optimal distribution:
/// `2 sqrt(T) (Σ_i (R_i L_i)^{2/3})^{3/2}`. Pass block radii and block
/// bounds for the mini-batch variant.
pub fn rcd_lipschitz_bound(radii: &[f64], bounds: &[f64], horizon: usize) -> f64 {
    assert_eq!(radii.len(), bounds.len());
    let z: f64 = radii.iter().zip(bounds).map(|(r, l)| (r * l).cbrt().powi(2)).sum();
    2.0 * (horizon as f64).sqrt() * z.powf(1.5)
}

/// Trace-evaluated expected-regret bound: `4 Σ_i R_i sqrt(Σ_t (g_{t,i} -
/// pred_{t,i})^2 / q_i)` where `g`, `pred` are the true per-round gradients
/// and predictions and `q_i` is the probability of the block containing `i`.
pub fn rcd_sampled_bound(
    gradients: &[Vec<f64>],
    predictions: &[Vec<f64>],
    radii: &[f64],
    coord_probs: &[f64],
) -> f64 {
    assert_eq!(gradients.len(), predictions.len());
    let n = radii.len();
    let mut total = 0.0;
    for i in 0..n {
        let sum: f64 = gradients
            .iter()
            .zip(predictions)
            .map(|(g, p)| (g[i] - p[i]) * (g[i] - p[i]) / coord_probs[i])
            .sum();
        total += radii[i] * sum.sqrt();
    }
    4.0 * total
}

/// Outcome of a randomized coordinate run: the regret report over the true
/// losses plus the sampling trail.
#[derive(Debug, Clone)]
pub struct RcdRunResult {
    pub report: RegretReport,
    pub sampled: Vec<usize>,
    pub sampler: CoordSampler,
}

/// Runs the importance-sampled coordinate solver. The loss family yields
/// full gradients, but the solver touches only the sampled block of each
/// round; full vectors are used solely for reporting and bound evaluation.
pub fn run_cao_rcd<F: LossFamily>(
    family: &F,
    box_domain: &Hyperrectangle,
    policy: &SamplerPolicy,
    predictor: &PredictorKind,
    composite: &CompositeTerm,
    horizon: usize,
    seed: u64,
    oracle_cfg: &OracleConfig,
) -> Result<RcdRunResult> {
    let n = box_domain.dim();
    check_dim(n, family.dim())?;
    composite.validate()?;
    let alpha = match composite {
        CompositeTerm::None => 0.0,
        CompositeTerm::L1(a) => *a,
        CompositeTerm::SquaredL2(_) => {
            return Err(Error::InvalidParameter(
                "the coordinate solver ships closed forms for L1 only".into(),
            ))
        }
    };

    let sampler = match policy {
        SamplerPolicy::Uniform => CoordSampler::uniform(n)?,
        SamplerPolicy::Lipschitz { bounds } => lipschitz_distribution(box_domain.radii(), bounds)?,
        SamplerPolicy::MiniBatch { partition, block_bounds } => {
            minibatch_distribution(partition, box_domain.radii(), block_bounds)?
        }
    };
    let blocks: Vec<Vec<usize>> = match sampler.partition() {
        Some(p) => p.to_vec(),
        None => (0..n).map(|i| vec![i]).collect(),
    };
    // probability of the block owning each coordinate
    let mut coord_probs = vec![0.0; n];
    for (b, block) in blocks.iter().enumerate() {
        for &i in block {
            coord_probs[i] = sampler.probs()[b];
        }
    }

    let block_estimate = |full: &[f64], block_idx: usize| -> Vec<f64> {
        let mut out = vec![0.0; n];
        let p = sampler.probs()[block_idx];
        for &i in &blocks[block_idx] {
            out[i] = full[i] / p;
        }
        out
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = AogdRegState::new(box_domain);
    let mut x = vec![0.0; n];
    let mut cur_block = sample_categorical(&mut rng, sampler.probs());
    let mut pred_full = vec![0.0; n];
    let mut pred_est = vec![0.0; n];
    let mut cum_est = vec![0.0; n];
    let mut est_history: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut trace: Vec<RoundRecord> = Vec::with_capacity(horizon);
    let mut sampled = Vec::with_capacity(horizon);

    for t in 1..=horizon {
        let (loss, gradient) = family.eval(t, &x);
        if !loss.is_finite() || !vec_ops::all_finite(&gradient) {
            return Err(Error::NonFinite { round: t });
        }
        sampled.push(cur_block);
        let estimate = block_estimate(&gradient, cur_block);
        state.accumulate(&x, &estimate, &pred_est)?;
        let diff = vec_ops::sub(&estimate, &pred_est);
        let dual_term_sq = state.dual_norm_sq(&diff)?;

        trace.push(RoundRecord {
            t,
            iterate: x.clone(),
            loss,
            gradient: gradient.clone(),
            prediction: pred_full.clone(),
            dual_term_sq,
            composite_value: composite.eval(&x),
        });

        vec_ops::add_assign(&mut cum_est, &estimate);
        est_history.push(estimate);
        pred_full = predictor.predict(&est_history, n)?;
        let next_block = sample_categorical(&mut rng, sampler.probs());
        pred_est = block_estimate(&pred_full, next_block);
        let pull: Vec<f64> = cum_est.iter().zip(&pred_est).map(|(a, b)| a + b).collect();
        x = if alpha > 0.0 {
            cao_l1_step(&state, &pull, (t + 1) as f64 * alpha, &x, box_domain)?
        } else {
            aogd_step(&state, &pull, &x, box_domain)?
        };
        cur_block = next_block;
    }

    let domain = Domain::Rect(box_domain.clone());
    let comparator = oracle::best_fixed_point(family, horizon, &domain, composite, oracle_cfg).point;
    let realized_regret = regret_against(family, &trace, composite, &comparator);
    let regret_vs_center = regret_against(family, &trace, composite, &domain.center());

    let grads: Vec<Vec<f64>> = trace.iter().map(|r| r.gradient.clone()).collect();
    let preds: Vec<Vec<f64>> = trace.iter().map(|r| r.prediction.clone()).collect();
    let mut bounds = std::collections::BTreeMap::new();
    bounds.insert(
        "rcd_sampled".to_string(),
        rcd_sampled_bound(&grads, &preds, box_domain.radii(), &coord_probs),
    );
    match policy {
        SamplerPolicy::Lipschitz { bounds: lb } => {
            bounds.insert(
                "rcd_lipschitz".to_string(),
                rcd_lipschitz_bound(box_domain.radii(), lb, horizon),
            );
        }
        SamplerPolicy::MiniBatch { block_bounds, .. } => {
            let block_radii = sampler.block_radii().expect("set by constructor");
            bounds.insert(
                "rcd_lipschitz".to_string(),
                rcd_lipschitz_bound(block_radii, block_bounds, horizon),
            );
        }
        SamplerPolicy::Uniform => {}
    }
    bounds.insert(
        "ftrl_estimate".to_string(),
        ftrl_regret_bound(&trace, |p| state.eval(p).unwrap_or(f64::NAN), &comparator),
    );

    let report = RegretReport {
        horizon,
        comparator,
        realized_regret,
        regret_vs_center,
        bounds,
        final_iterate: x,
        trace,
    };
    Ok(RcdRunResult { report, sampled, sampler })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn importance_estimate_examples() {
        let s = CoordSampler::new(vec![0.5, 0.5]).unwrap();
        let est = importance_estimate(4.0, 1, &s, 2).unwrap();
        assert_eq!(est, vec![0.0, 8.0]);

        // expectation over both draws recovers the gradient
        let g = [2.0, 4.0];
        let mut mean = vec![0.0; 2];
        for i in 0..2 {
            let e = importance_estimate(g[i], i, &s, 2).unwrap();
            for j in 0..2 {
                mean[j] += 0.5 * e[j];
            }
        }
        assert_eq!(mean, vec![2.0, 4.0]);
    }

    #[test]
    fn degenerate_single_coordinate() {
        let s = CoordSampler::new(vec![1.0]).unwrap();
        let est = importance_estimate(3.0, 0, &s, 1).unwrap();
        assert_eq!(est, vec![3.0]);
    }

    #[test]
    fn lipschitz_distribution_examples() {
        let s = lipschitz_distribution(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.probs(), &[0.5, 0.5]);

        let s = lipschitz_distribution(&[1.0, 1.0, 1.0], &[1.0, 8.0, 27.0]).unwrap();
        let expect = [1.0 / 14.0, 4.0 / 14.0, 9.0 / 14.0];
        for (p, e) in s.probs().iter().zip(expect) {
            assert!((p - e).abs() < 1e-12);
        }

        // scaling all bounds leaves the distribution unchanged
        let a = lipschitz_distribution(&[1.0, 2.0], &[3.0, 0.5]).unwrap();
        let b = lipschitz_distribution(&[1.0, 2.0], &[30.0, 5.0]).unwrap();
        for (p, q) in a.probs().iter().zip(b.probs()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn minibatch_distribution_examples() {
        let s = minibatch_distribution(&[vec![0], vec![1]], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.probs(), &[0.5, 0.5]);

        let s = minibatch_distribution(&[vec![0, 1], vec![2]], &[1.0, 1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(s.block_radii().unwrap(), &[2.0, 2.0]);
        assert!((s.probs()[0] - 0.5).abs() < 1e-12);

        let s = minibatch_distribution(&[vec![0], vec![1]], &[1.0, 8.0], &[1.0, 1.0]).unwrap();
        assert!((s.probs()[0] - 0.2).abs() < 1e-12);
        assert!((s.probs()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn bad_partitions_are_rejected() {
        assert!(minibatch_distribution(&[vec![0], vec![0]], &[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(minibatch_distribution(&[vec![0]], &[1.0, 1.0], &[1.0]).is_err());
        assert!(minibatch_distribution(&[vec![0], vec![]], &[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn lipschitz_bound_examples() {
        assert!((rcd_lipschitz_bound(&[1.0, 1.0], &[1.0, 1.0], 100) - 56.568542494923804).abs() < 1e-9);
        assert_eq!(rcd_lipschitz_bound(&[1.0, 1.0], &[1.0, 1.0], 0), 0.0);
        assert!((rcd_lipschitz_bound(&[1.0], &[1.0], 4) - 4.0).abs() < 1e-12);
    }
}
