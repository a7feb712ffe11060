//! Adaptive regularizer state: the per-coordinate proximal quadratic, the
//! scaled negative entropy on the simplex, and composite penalty terms.

use crate::domains::Hyperrectangle;
use crate::error::{check_dim, Error, Result};
use crate::vec_ops;

/// Running state of the per-coordinate proximal quadratic regularizer.
///
/// Each round adds the increment `a_{t,i} (x_i - x_{t,i})^2` with
/// `a_{t,i} = (Δ_{t,i} - Δ_{t-1,i}) / (2 R_i)`, where `Δ_{t,i}` is the root
/// of the accumulated squared prediction errors in coordinate `i`. The state
/// stores the running sums needed to evaluate and minimize the total
/// regularizer in O(n): the quadratic mass `A_i = Σ_s a_{s,i}`, the weighted
/// center mass `B_i = Σ_s a_{s,i} x_{s,i}`, and the constant mass
/// `D_i = Σ_s a_{s,i} x_{s,i}^2`, so that
/// `r_{0:t}(x) = Σ_i (A_i x_i^2 - 2 B_i x_i + D_i)`.
#[derive(Debug, Clone)]
pub struct AogdRegState {
    radii: Vec<f64>,
    delta: Vec<f64>,
    quad_mass: Vec<f64>,
    center_mass: Vec<f64>,
    const_mass: Vec<f64>,
    /// Per-round increments `(a_t, x_t)`, kept only in debug mode.
    history: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl AogdRegState {
    pub fn new(box_domain: &Hyperrectangle) -> Self {
        let n = box_domain.dim();
        Self {
            radii: box_domain.radii().to_vec(),
            delta: vec![0.0; n],
            quad_mass: vec![0.0; n],
            center_mass: vec![0.0; n],
            const_mass: vec![0.0; n],
            history: None,
        }
    }

    /// Same state but retaining the full increment history, so the running-sum
    /// evaluation can be cross-checked against the direct double sum.
    pub fn with_history(box_domain: &Hyperrectangle) -> Self {
        let mut s = Self::new(box_domain);
        s.history = Some(Vec::new());
        s
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn quad_mass(&self) -> &[f64] {
        &self.quad_mass
    }

    pub fn center_mass(&self) -> &[f64] {
        &self.center_mass
    }

    /// Fold one observed round into the state.
    pub fn accumulate(&mut self, x_t: &[f64], g_t: &[f64], pred_t: &[f64]) -> Result<()> {
        let n = self.dim();
        check_dim(n, x_t.len())?;
        check_dim(n, g_t.len())?;
        check_dim(n, pred_t.len())?;
        let mut increment = self.history.is_some().then(|| vec![0.0; n]);
        for i in 0..n {
            let err = g_t[i] - pred_t[i];
            let delta_new = (self.delta[i] * self.delta[i] + err * err).sqrt();
            let a = (delta_new - self.delta[i]) / (2.0 * self.radii[i]);
            self.quad_mass[i] += a;
            self.center_mass[i] += a * x_t[i];
            self.const_mass[i] += a * x_t[i] * x_t[i];
            self.delta[i] = delta_new;
            if let Some(inc) = increment.as_mut() {
                inc[i] = a;
            }
        }
        if let (Some(hist), Some(inc)) = (self.history.as_mut(), increment) {
            hist.push((inc, x_t.to_vec()));
        }
        Ok(())
    }

    /// Total regularizer value at `x` from the running sums.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                self.quad_mass[i] * xi * xi - 2.0 * self.center_mass[i] * xi + self.const_mass[i]
            })
            .sum())
    }

    /// Direct double-sum evaluation from the retained history. `None` when the
    /// state was built without history.
    pub fn eval_direct(&self, x: &[f64]) -> Option<f64> {
        let hist = self.history.as_ref()?;
        let mut total = 0.0;
        for (a, xs) in hist {
            for i in 0..x.len() {
                let d = x[i] - xs[i];
                total += a[i] * d * d;
            }
        }
        Some(total)
    }

    pub fn history(&self) -> Option<&[(Vec<f64>, Vec<f64>)]> {
        self.history.as_deref()
    }

    /// Squared dual norm `Σ_i R_i v_i^2 / Δ_i` of the accumulated weighted
    /// quadratic. Zero-mass coordinates contribute nothing when `v_i = 0` and
    /// are an error otherwise.
    pub fn dual_norm_sq(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        let mut total = 0.0;
        for i in 0..v.len() {
            if v[i] == 0.0 {
                continue;
            }
            if self.delta[i] == 0.0 {
                return Err(Error::UndefinedDualNorm { coord: i });
            }
            total += self.radii[i] * v[i] * v[i] / self.delta[i];
        }
        Ok(total)
    }
}

/// Running state of the scaled negative-entropy regularizer on the simplex.
///
/// The scale is `η_t = sqrt(2 (C + S_t) / ln n)` with
/// `S_t = Σ_{s<=t} ||g_s - pred_s||_∞^2` and `C` an a-priori bound on the
/// squared infinity norm of the gradients.
#[derive(Debug, Clone)]
pub struct AoegRegState {
    dim: usize,
    grad_bound_sq: f64,
    sum_sq: f64,
}

impl AoegRegState {
    pub fn new(dim: usize, grad_bound_sq: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("entropy regularizer needs dim >= 2".into()));
        }
        if !grad_bound_sq.is_finite() || grad_bound_sq <= 0.0 {
            return Err(Error::InvalidParameter("gradient bound must be positive".into()));
        }
        Ok(Self { dim, grad_bound_sq, sum_sq: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grad_bound_sq(&self) -> f64 {
        self.grad_bound_sq
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// Current entropy scale.
    pub fn eta(&self) -> f64 {
        (2.0 * (self.grad_bound_sq + self.sum_sq) / (self.dim as f64).ln()).sqrt()
    }

    pub fn accumulate(&mut self, g_t: &[f64], pred_t: &[f64]) -> Result<()> {
        check_dim(self.dim, g_t.len())?;
        check_dim(self.dim, pred_t.len())?;
        let diff = vec_ops::sub(g_t, pred_t);
        let d = vec_ops::inf_norm(&diff);
        self.sum_sq += d * d;
        Ok(())
    }

    /// Regularizer value `η (φ(x) + ln n)` at the current scale, where `φ` is
    /// the negative entropy. Non-negative on the simplex.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.eta() * (negative_entropy(x) + (self.dim as f64).ln()))
    }
}

/// Negative entropy `Σ x_i ln x_i` with the `0 ln 0 = 0` convention.
pub fn negative_entropy(x: &[f64]) -> f64 {
    x.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum()
}

/// Composite penalty kept un-linearized in the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompositeTerm {
    None,
    L1(f64),
    SquaredL2(f64),
}

impl CompositeTerm {
    pub fn validate(&self) -> Result<()> {
        match self {
            CompositeTerm::None => Ok(()),
            CompositeTerm::L1(a) | CompositeTerm::SquaredL2(a) => {
                if a.is_finite() && *a > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("composite weight must be positive".into()))
                }
            }
        }
    }

    /// Per-round penalty value at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CompositeTerm::None => 0.0,
            CompositeTerm::L1(a) => a * vec_ops::l1_norm(x),
            CompositeTerm::SquaredL2(a) => a * vec_ops::l2_norm_sq(x),
        }
    }

    pub fn weight(&self) -> f64 {
        match self {
            CompositeTerm::None => 0.0,
            CompositeTerm::L1(a) | CompositeTerm::SquaredL2(a) => *a,
        }
    }

    /// A subgradient of the per-round penalty (zero at kinks).
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            CompositeTerm::None => vec![0.0; x.len()],
            CompositeTerm::L1(a) => x
                .iter()
                .map(|v| if *v > 0.0 { *a } else if *v < 0.0 { -*a } else { 0.0 })
                .collect(),
            CompositeTerm::SquaredL2(a) => x.iter().map(|v| 2.0 * a * v).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn boxed(radii: &[f64]) -> Hyperrectangle {
        Hyperrectangle::new(radii.to_vec()).unwrap()
    }

    #[test]
    fn accumulate_fresh_state() {
        let mut s = AogdRegState::new(&boxed(&[1.0]));
        s.accumulate(&[0.0], &[3.0], &[0.0]).unwrap();
        assert_eq!(s.delta(), &[3.0]);
        assert_eq!(s.quad_mass(), &[1.5]);
        assert_eq!(s.center_mass(), &[0.0]);
    }

    #[test]
    fn perfect_prediction_leaves_state_unchanged() {
        let mut s = AogdRegState::new(&boxed(&[2.0, 0.5]));
        s.accumulate(&[0.1, -0.2], &[1.0, 2.0], &[0.0, 0.0]).unwrap();
        let before = s.clone();
        s.accumulate(&[0.3, 0.4], &[5.0, -1.0], &[5.0, -1.0]).unwrap();
        assert_eq!(s.delta(), before.delta());
        assert_eq!(s.quad_mass(), before.quad_mass());
        assert_eq!(s.center_mass(), before.center_mass());
    }

    #[test]
    fn accumulate_second_round() {
        let mut s = AogdRegState::new(&boxed(&[1.0]));
        s.accumulate(&[0.0], &[3.0], &[0.0]).unwrap();
        s.accumulate(&[0.5], &[0.0], &[4.0]).unwrap();
        assert_eq!(s.delta(), &[5.0]);
        assert!((s.quad_mass()[0] - 2.5).abs() < 1e-15); // 1.5 + 1
        assert!((s.center_mass()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dual_norm_examples() {
        let mut s = AogdRegState::new(&boxed(&[1.0]));
        s.accumulate(&[0.0], &[3.0], &[0.0]).unwrap();
        assert!((s.dual_norm_sq(&[3.0]).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(s.dual_norm_sq(&[0.0]).unwrap(), 0.0);

        let mut s2 = AogdRegState::new(&boxed(&[1.0, 2.0]));
        s2.accumulate(&[0.0, 0.0], &[5.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!((s2.dual_norm_sq(&[5.0, 0.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn dual_norm_undefined_without_mass() {
        let s = AogdRegState::new(&boxed(&[1.0]));
        assert!(matches!(
            s.dual_norm_sq(&[1.0]),
            Err(Error::UndefinedDualNorm { coord: 0 })
        ));
        assert_eq!(s.dual_norm_sq(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn eta_examples() {
        let s = AoegRegState::new(2, 1.0).unwrap();
        assert!((s.eta() - 1.6986436005760381).abs() < 1e-12);
        let mut s8 = AoegRegState::new(8, 1.0).unwrap();
        s8.sum_sq = 3.0;
        assert!((s8.eta() - 1.9614246800996216).abs() < 1e-12);
    }

    #[test]
    fn eta_scales_with_sqrt_of_mass() {
        let a = AoegRegState::new(5, 2.0).unwrap();
        let b = AoegRegState::new(5, 4.0).unwrap();
        assert!((b.eta() / a.eta() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn composite_eval_examples() {
        assert_eq!(CompositeTerm::L1(2.0).eval(&[1.0, -3.0]), 8.0);
        assert_eq!(CompositeTerm::None.eval(&[9.0, 9.0]), 0.0);
        assert_eq!(CompositeTerm::SquaredL2(0.5).eval(&[2.0, 0.0]), 2.0);
    }

    #[test]
    fn running_sums_match_direct_history_eval() {
        let mut s = AogdRegState::with_history(&boxed(&[1.0, 2.0]));
        let rounds: [([f64; 2], [f64; 2], [f64; 2]); 4] = [
            ([0.0, 0.0], [1.0, -2.0], [0.0, 0.0]),
            ([0.5, -1.0], [0.3, 1.0], [1.0, -2.0]),
            ([-0.2, 0.8], [-1.5, 0.7], [0.3, 1.0]),
            ([0.9, 0.1], [0.2, -0.4], [-1.5, 0.7]),
        ];
        for (x, g, p) in rounds {
            s.accumulate(&x, &g, &p).unwrap();
        }
        for x in [[0.0, 0.0], [0.7, -0.3], [-1.0, 2.0], [0.25, 0.5]] {
            let fast = s.eval(&x).unwrap();
            let direct = s.eval_direct(&x).unwrap();
            let scale = direct.abs().max(1.0);
            assert!((fast - direct).abs() / scale < 1e-10, "{fast} vs {direct}");
        }
    }

    #[test]
    fn each_increment_is_minimized_at_its_center() {
        let mut s = AogdRegState::with_history(&boxed(&[1.0, 1.0]));
        s.accumulate(&[0.4, -0.6], &[2.0, 1.0], &[0.0, 0.0]).unwrap();
        let (a, xs) = &s.history().unwrap()[0];
        let inc = |x: &[f64]| -> f64 {
            (0..2).map(|i| a[i] * (x[i] - xs[i]) * (x[i] - xs[i])).sum()
        };
        let at_center = inc(xs);
        assert_eq!(at_center, 0.0);
        for x in [[0.0, 0.0], [1.0, -1.0], [0.4, 0.0]] {
            assert!(inc(&x) >= at_center);
        }
    }

    proptest! {
        // After any accumulate the per-coordinate root mass and quadratic mass
        // never decrease, and the increments telescope back to delta/(2R).
        #[test]
        fn masses_are_monotone_and_telescope(
            gs in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 1..12),
            ps in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 12),
            xs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 12),
        ) {
            let b = Hyperrectangle::new(vec![1.0, 0.5, 2.0]).unwrap();
            let mut s = AogdRegState::new(&b);
            for (t, g) in gs.iter().enumerate() {
                let prev_delta = s.delta().to_vec();
                let prev_mass = s.quad_mass().to_vec();
                s.accumulate(&xs[t], g, &ps[t]).unwrap();
                for i in 0..3 {
                    prop_assert!(s.delta()[i] >= prev_delta[i]);
                    prop_assert!(s.quad_mass()[i] >= prev_mass[i]);
                }
            }
            for i in 0..3 {
                let expect = s.delta()[i] / (2.0 * s.radii()[i]);
                let scale = expect.abs().max(1e-12);
                prop_assert!((s.quad_mass()[i] - expect).abs() / scale < 1e-10);
            }
        }
    }
}
