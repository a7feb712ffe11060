//! Adaptive-optimistic FTRL update loop with closed-form argmin steps, plus
//! the regret-bound calculators evaluated on recorded traces.

use std::collections::BTreeMap;

use crate::domains::{Domain, Hyperrectangle};
use crate::error::{check_dim, Error, Result};
use crate::oracle::{self, OracleConfig};
use crate::predictors::PredictorKind;
use crate::regularizers::{negative_entropy, AoegRegState, AogdRegState, CompositeTerm};
use crate::stream::LossFamily;
use crate::vec_ops;

/// Everything observed in one round of the online loop.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub t: usize,
    pub iterate: Vec<f64>,
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub prediction: Vec<f64>,
    /// Squared dual norm of the prediction error under the round's norm.
    pub dual_term_sq: f64,
    pub composite_value: f64,
}

/// Aggregated outcome of a run: realized regret against the hindsight
/// comparator and every bound the algorithm's analysis provides.
#[derive(Debug, Clone)]
pub struct RegretReport {
    pub horizon: usize,
    pub comparator: Vec<f64>,
    /// Cumulative loss difference against the comparator, composite-inclusive
    /// when a composite term is active. Summed round by round.
    pub realized_regret: f64,
    pub regret_vs_center: f64,
    pub bounds: BTreeMap<String, f64>,
    pub final_iterate: Vec<f64>,
    pub trace: Vec<RoundRecord>,
}

/// Closed-form instantiations of the update loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// Per-coordinate proximal quadratic regularizer on a box.
    Aogd,
    /// Scaled negative entropy on the simplex. `grad_bound` is the declared
    /// bound on the infinity norm of the gradients; its square seeds the
    /// regularizer scale.
    Aoeg { grad_bound: f64 },
    /// The box algorithm with an un-linearized L1 penalty of per-round
    /// weight `alpha`.
    CaogdL1 { alpha: f64 },
}

/// Minimizer of `c.x + Σ_i (A_i x_i^2 - 2 B_i x_i)` over the box.
///
/// The objective is separable; each coordinate clamps its unconstrained
/// minimum `(2 B_i - c_i) / (2 A_i)` to `[-R_i, R_i]`. Coordinates with no
/// quadratic mass are linear: they go to the facing wall, or keep the
/// previous iterate's value when the linear coefficient also vanishes.
pub fn aogd_step(
    state: &AogdRegState,
    c: &[f64],
    prev: &[f64],
    box_domain: &Hyperrectangle,
) -> Result<Vec<f64>> {
    let n = box_domain.dim();
    check_dim(n, c.len())?;
    check_dim(n, prev.len())?;
    check_dim(n, state.dim())?;
    let a = state.quad_mass();
    let b = state.center_mass();
    let radii = box_domain.radii();
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = if a[i] > 0.0 {
            ((2.0 * b[i] - c[i]) / (2.0 * a[i])).clamp(-radii[i], radii[i])
        } else if c[i] != 0.0 {
            -radii[i] * c[i].signum()
        } else {
            prev[i]
        };
    }
    Ok(out)
}

/// Minimizer of `c.x + Σ_i (A_i x_i^2 - 2 B_i x_i) + w ||x||_1` over the box:
/// soft-threshold of `2 B_i - c_i` at `w`, scaled by the quadratic mass and
/// clamped. With `w = 0` this is exactly [`aogd_step`].
pub fn cao_l1_step(
    state: &AogdRegState,
    c: &[f64],
    w: f64,
    prev: &[f64],
    box_domain: &Hyperrectangle,
) -> Result<Vec<f64>> {
    if w < 0.0 || !w.is_finite() {
        return Err(Error::InvalidParameter("l1 weight must be non-negative".into()));
    }
    if w == 0.0 {
        return aogd_step(state, c, prev, box_domain);
    }
    let n = box_domain.dim();
    check_dim(n, c.len())?;
    check_dim(n, prev.len())?;
    check_dim(n, state.dim())?;
    let a = state.quad_mass();
    let b = state.center_mass();
    let radii = box_domain.radii();
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = if a[i] > 0.0 {
            let z = 2.0 * b[i] - c[i];
            let st = z.signum() * (z.abs() - w).max(0.0);
            (st / (2.0 * a[i])).clamp(-radii[i], radii[i])
        } else if c[i].abs() <= w {
            // the penalty dominates the linear pull
            0.0
        } else {
            -radii[i] * c[i].signum()
        };
    }
    Ok(out)
}

/// Minimizer of `c.x + η (φ(x) + ln n)` over the simplex, where `φ` is the
/// negative entropy: the max-shifted softmax of `-c / η`.
pub fn aoeg_step(state: &AoegRegState, c: &[f64]) -> Result<Vec<f64>> {
    check_dim(state.dim(), c.len())?;
    let eta = state.eta();
    let scores: Vec<f64> = c.iter().map(|ci| -ci / eta).collect();
    softmax(&scores)
}

fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    let m = scores.iter().fold(f64::NEG_INFINITY, |acc, v| acc.max(*v));
    if !m.is_finite() {
        return Err(Error::InvalidParameter("non-finite softmax scores".into()));
    }
    let mut out: Vec<f64> = scores.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= sum;
    }
    Ok(out)
}

/// Generic adaptive-optimistic regret bound evaluated on a trace:
/// total regularizer at the comparator plus the accumulated squared dual
/// prediction errors.
pub fn ftrl_regret_bound<R>(trace: &[RoundRecord], r_total_at: R, x_star: &[f64]) -> f64
where
    R: Fn(&[f64]) -> f64,
{
    r_total_at(x_star) + trace.iter().map(|r| r.dual_term_sq).sum::<f64>()
}

/// Closed-form regret bound of the box algorithm:
/// `4 Σ_i R_i sqrt(Σ_t (g_{t,i} - pred_{t,i})^2)`.
pub fn aogd_regret_bound(gradients: &[Vec<f64>], predictions: &[Vec<f64>], radii: &[f64]) -> f64 {
    assert_eq!(gradients.len(), predictions.len());
    let n = radii.len();
    let mut total = 0.0;
    for i in 0..n {
        let sum_sq: f64 = gradients
            .iter()
            .zip(predictions)
            .map(|(g, p)| (g[i] - p[i]) * (g[i] - p[i]))
            .sum();
        total += radii[i] * sum_sq.sqrt();
    }
    4.0 * total
}

/// Closed-form regret bound of the simplex algorithm:
/// `2 sqrt(2 ln n (C + Σ_{t<=T-1} ||g_t - pred_t||_∞^2))`, using the first
/// `T-1` prediction-error terms.
pub fn aoeg_regret_bound(
    gradients: &[Vec<f64>],
    predictions: &[Vec<f64>],
    grad_bound_sq: f64,
    n: usize,
) -> f64 {
    assert_eq!(gradients.len(), predictions.len());
    let horizon = gradients.len();
    let sum_sq: f64 = gradients
        .iter()
        .zip(predictions)
        .take(horizon.saturating_sub(1))
        .map(|(g, p)| {
            let d = vec_ops::inf_norm(&vec_ops::sub(g, p));
            d * d
        })
        .sum();
    2.0 * (2.0 * (n as f64).ln() * (grad_bound_sq + sum_sq)).sqrt()
}

/// The hindsight-optimal diagonal scaling identity. For per-coordinate
/// column norms `c_i`, the infimum of `Σ_i c_i^2 / s_i` over
/// `{s >= 0, <s,1> <= n}` equals `(Σ_i c_i)^2 / n`, attained at
/// `s_i ∝ c_i`; `root_value` is `sqrt(n * inf_value) = Σ_i c_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosterioriIdentity {
    pub inf_value: f64,
    pub root_value: f64,
}

pub fn posteriori_optimal_value(column_norms: &[f64], n: usize) -> PosterioriIdentity {
    debug_assert!(column_norms.iter().all(|c| *c >= 0.0));
    let total: f64 = column_norms.iter().sum();
    PosterioriIdentity {
        inf_value: total * total / n as f64,
        root_value: total,
    }
}

/// Runs the online loop for `horizon` rounds and assembles the report.
///
/// Each round observes the loss and a subgradient at the current iterate,
/// folds the prediction error into the regularizer state, forms the next
/// prediction from the gradient history, and takes the algorithm's
/// closed-form step on the accumulated linear pull. The comparator is the
/// best fixed point found by the numeric oracle on the recorded losses.
pub fn run_online<F: LossFamily>(
    family: &F,
    domain: &Domain,
    predictor: &PredictorKind,
    algorithm: &Algorithm,
    horizon: usize,
    oracle_cfg: &OracleConfig,
) -> Result<RegretReport> {
    let n = domain.dim();
    check_dim(n, family.dim())?;

    enum EngineState {
        Box(AogdRegState, Hyperrectangle),
        Entropy(AoegRegState),
    }

    let composite = match algorithm {
        Algorithm::CaogdL1 { alpha } => {
            let term = CompositeTerm::L1(*alpha);
            term.validate()?;
            term
        }
        _ => CompositeTerm::None,
    };

    let mut engine = match (algorithm, domain) {
        (Algorithm::Aogd | Algorithm::CaogdL1 { .. }, Domain::Rect(b)) => {
            EngineState::Box(AogdRegState::new(b), b.clone())
        }
        (Algorithm::Aoeg { grad_bound }, Domain::Simplex(s)) => {
            EngineState::Entropy(AoegRegState::new(s.dim(), grad_bound * grad_bound)?)
        }
        (Algorithm::Aoeg { .. }, _) => {
            return Err(Error::DomainMismatch("entropy algorithm needs a simplex".into()))
        }
        (_, Domain::Simplex(_)) => {
            return Err(Error::DomainMismatch("box algorithm needs a rectangle".into()))
        }
    };

    let mut x = domain.center();
    let mut prediction = vec![0.0; n];
    let mut cum_grad = vec![0.0; n];
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(horizon);
    let mut trace: Vec<RoundRecord> = Vec::with_capacity(horizon);
    // entropy scale before the final round's accumulation, for the bound
    let mut eta_prev = match &engine {
        EngineState::Entropy(st) => st.eta(),
        _ => 0.0,
    };

    for t in 1..=horizon {
        let (loss, gradient) = family.eval(t, &x);
        if !loss.is_finite() || !vec_ops::all_finite(&gradient) {
            return Err(Error::NonFinite { round: t });
        }
        let diff = vec_ops::sub(&gradient, &prediction);
        let dual_term_sq = match &mut engine {
            EngineState::Box(state, _) => {
                state.accumulate(&x, &gradient, &prediction)?;
                state.dual_norm_sq(&diff)?
            }
            EngineState::Entropy(state) => {
                // the entropy path measures the error against the previous
                // round's scale
                eta_prev = state.eta();
                let d = vec_ops::inf_norm(&diff);
                state.accumulate(&gradient, &prediction)?;
                d * d / eta_prev
            }
        };

        trace.push(RoundRecord {
            t,
            iterate: x.clone(),
            loss,
            gradient: gradient.clone(),
            prediction: prediction.clone(),
            dual_term_sq,
            composite_value: composite.eval(&x),
        });

        vec_ops::add_assign(&mut cum_grad, &gradient);
        history.push(gradient);
        prediction = predictor.predict(&history, n)?;
        let pull: Vec<f64> = cum_grad.iter().zip(&prediction).map(|(a, b)| a + b).collect();

        x = match (&engine, algorithm) {
            (EngineState::Box(state, b), Algorithm::Aogd) => aogd_step(state, &pull, &x, b)?,
            (EngineState::Box(state, b), Algorithm::CaogdL1 { alpha }) => {
                let w = (t + 1) as f64 * alpha;
                cao_l1_step(state, &pull, w, &x, b)?
            }
            (EngineState::Entropy(state), _) => aoeg_step(state, &pull)?,
            _ => unreachable!(),
        };
    }

    let comparator = oracle::best_fixed_point(family, horizon, domain, &composite, oracle_cfg).point;
    let center = domain.center();
    let realized_regret = regret_against(family, &trace, &composite, &comparator);
    let regret_vs_center = regret_against(family, &trace, &composite, &center);

    let mut bounds = BTreeMap::new();
    let grads: Vec<Vec<f64>> = trace.iter().map(|r| r.gradient.clone()).collect();
    let preds: Vec<Vec<f64>> = trace.iter().map(|r| r.prediction.clone()).collect();
    match &engine {
        EngineState::Box(state, b) => {
            let ftrl = ftrl_regret_bound(&trace, |p| state.eval(p).unwrap_or(f64::NAN), &comparator);
            bounds.insert("ftrl".to_string(), ftrl);
            bounds.insert(
                "aogd".to_string(),
                aogd_regret_bound(&grads, &preds, b.radii()),
            );
        }
        EngineState::Entropy(state) => {
            let ln_n = (n as f64).ln();
            let ftrl = ftrl_regret_bound(
                &trace,
                |p| eta_prev * (negative_entropy(p) + ln_n),
                &comparator,
            );
            bounds.insert("ftrl".to_string(), ftrl);
            bounds.insert(
                "aoeg".to_string(),
                aoeg_regret_bound(&grads, &preds, state.grad_bound_sq(), n),
            );
        }
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

/// Cumulative loss difference against a fixed point, summed round by round
/// so that identical rounds cancel exactly.
pub fn regret_against<F: LossFamily>(
    family: &F,
    trace: &[RoundRecord],
    composite: &CompositeTerm,
    point: &[f64],
) -> f64 {
    let comp_at_point = composite.eval(point);
    trace
        .iter()
        .map(|r| {
            let (v, _) = family.eval(r.t, point);
            (r.loss + r.composite_value) - (v + comp_at_point)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Simplex;

    fn state_with(radii: &[f64], a: &[f64], b: &[f64]) -> (AogdRegState, Hyperrectangle) {
        // drive a fresh state to the target masses with synthetic rounds:
        // one round with x chosen so that the increment lands exactly on
        // (a_i, a_i * x_i).
        let rect = Hyperrectangle::new(radii.to_vec()).unwrap();
        let mut st = AogdRegState::new(&rect);
        let n = radii.len();
        let mut x = vec![0.0; n];
        let mut g = vec![0.0; n];
        for i in 0..n {
            // a = delta / (2R) with delta = |g|, so g = 2 R a
            g[i] = 2.0 * radii[i] * a[i];
            x[i] = if a[i] > 0.0 { b[i] / a[i] } else { 0.0 };
        }
        st.accumulate(&x, &g, &vec![0.0; n]).unwrap();
        (st, rect)
    }

    #[test]
    fn aogd_step_examples() {
        let (st, rect) = state_with(&[1.0], &[1.0], &[0.0]);
        assert_eq!(aogd_step(&st, &[0.0], &[0.0], &rect).unwrap(), vec![0.0]);

        let (st, rect) = state_with(&[1.0], &[1.0], &[1.0]);
        assert_eq!(aogd_step(&st, &[0.0], &[0.0], &rect).unwrap(), vec![1.0]);

        let (st, rect) = state_with(&[1.0], &[0.5], &[0.0]);
        assert_eq!(aogd_step(&st, &[4.0], &[0.0], &rect).unwrap(), vec![-1.0]);
    }

    #[test]
    fn aogd_step_degenerate_coordinates() {
        let rect = Hyperrectangle::new(vec![2.0, 2.0]).unwrap();
        let st = AogdRegState::new(&rect);
        // no mass anywhere: linear coordinate goes to the wall, flat one stays
        let out = aogd_step(&st, &[3.0, 0.0], &[0.7, 0.7], &rect).unwrap();
        assert_eq!(out, vec![-2.0, 0.7]);
    }

    #[test]
    fn cao_l1_step_examples() {
        let (st, rect) = state_with(&[1.0], &[1.0], &[1.0]);
        assert_eq!(cao_l1_step(&st, &[0.0], 1.0, &[0.0], &rect).unwrap(), vec![0.5]);

        let (st, rect) = state_with(&[1.0], &[1.0], &[0.25]);
        assert_eq!(cao_l1_step(&st, &[0.0], 1.0, &[0.0], &rect).unwrap(), vec![0.0]);
    }

    #[test]
    fn cao_l1_with_zero_weight_is_aogd() {
        let (st, rect) = state_with(&[1.0, 2.0], &[0.7, 0.0], &[0.3, 0.0]);
        for c in [[0.4, 0.0], [-2.0, 1.5], [0.0, 0.0]] {
            let prev = [0.11, -0.22];
            let plain = aogd_step(&st, &c, &prev, &rect).unwrap();
            let l1 = cao_l1_step(&st, &c, 0.0, &prev, &rect).unwrap();
            assert_eq!(plain, l1);
        }
    }

    #[test]
    fn l1_weight_above_pull_zeroes_everything() {
        let (st, rect) = state_with(&[1.0, 1.0], &[1.0, 2.0], &[0.5, -0.75]);
        let c = [0.3, 0.2];
        let z_max = (0..2)
            .map(|i| (2.0 * st.center_mass()[i] - c[i]).abs())
            .fold(0.0f64, f64::max);
        let out = cao_l1_step(&st, &c, z_max + 0.1, &[0.0, 0.0], &rect).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn aoeg_step_examples() {
        let st = AoegRegState::new(2, 1.0).unwrap();
        let out = aoeg_step(&st, &[0.0, 0.0]).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-15 && (out[1] - 0.5).abs() < 1e-15);

        let st3 = AoegRegState::new(3, 1.0).unwrap();
        let shifted = aoeg_step(&st3, &[7.5, 7.5, 7.5]).unwrap();
        for v in &shifted {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn aoeg_step_softmax_value() {
        // eta = 1 requires 2(C+S)/ln 2 = 1; pick C so that a fresh state has it
        let c_bound_sq = 2f64.ln() / 2.0;
        let st = AoegRegState::new(2, c_bound_sq).unwrap();
        assert!((st.eta() - 1.0).abs() < 1e-15);
        let out = aoeg_step(&st, &[0.0, 4f64.ln()]).unwrap();
        assert!((out[0] - 0.8).abs() < 1e-12, "{out:?}");
        assert!((out[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn aoeg_output_stays_on_simplex_under_extreme_pull() {
        let st = AoegRegState::new(4, 1.0).unwrap();
        let out = aoeg_step(&st, &[1e6, -1e6, 0.0, 3.0]).unwrap();
        let s = Simplex::new(4).unwrap();
        assert!(s.contains(&out).unwrap());
    }

    #[test]
    fn aogd_bound_examples() {
        let g = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let p = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert!((aogd_regret_bound(&g, &p, &[1.0, 1.0]) - 4.0).abs() < 1e-12);

        let exact = aogd_regret_bound(&g, &g, &[1.0, 1.0]);
        assert_eq!(exact, 0.0);

        let g1 = vec![vec![3.0, 4.0]];
        let p1 = vec![vec![0.0, 0.0]];
        assert!((aogd_regret_bound(&g1, &p1, &[1.0, 1.0]) - 28.0).abs() < 1e-12);
    }

    #[test]
    fn aoeg_bound_examples() {
        let g = vec![vec![0.3, -0.3]];
        let p = vec![vec![0.0, 0.0]];
        // single round: no difference terms enter
        assert!((aoeg_regret_bound(&g, &p, 1.0, 2) - 2.3548200450309493).abs() < 1e-12);

        let g2 = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let p2 = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        // only the first of the two difference terms counts
        assert!((aoeg_regret_bound(&g2, &p2, 1.0, 2) - 3.3302184446307908).abs() < 1e-12);

        let exact = aoeg_regret_bound(&g2, &g2, 1.0, 2);
        assert!((exact - 2.3548200450309493).abs() < 1e-12);
    }

    #[test]
    fn posteriori_identity_examples() {
        let id = posteriori_optimal_value(&[3.0, 4.0], 2);
        assert_eq!(id.inf_value, 24.5);
        assert_eq!(id.root_value, 7.0);
        assert_eq!(posteriori_optimal_value(&[0.0, 0.0], 2).inf_value, 0.0);
        assert_eq!(posteriori_optimal_value(&[5.0], 1).inf_value, 25.0);
    }
}
