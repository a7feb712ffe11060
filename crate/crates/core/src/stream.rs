//! Interface between the solvers and whatever produces the losses.

/// A sequence of convex losses, each evaluable (value plus one subgradient)
/// at arbitrary points. Rounds are 1-based. Implementations must be
/// deterministic in `(t, x)` so that traces can be replayed and the
/// best fixed comparator searched after a run.
pub trait LossFamily {
    fn dim(&self) -> usize;

    /// Value and a subgradient of the round-`t` loss at `x`.
    fn eval(&self, t: usize, x: &[f64]) -> (f64, Vec<f64>);

    /// Cumulative loss over rounds `1..=horizon` at `x`. The default sums
    /// round by round; implementations with closed-form accumulations
    /// (linear losses, repeated objectives) should override it.
    fn cumulative(&self, horizon: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for t in 1..=horizon {
            let (v, g) = self.eval(t, x);
            value += v;
            for (acc, gi) in grad.iter_mut().zip(&g) {
                *acc += gi;
            }
        }
        (value, grad)
    }
}

impl<F: LossFamily + ?Sized> LossFamily for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: usize, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).eval(t, x)
    }
    fn cumulative(&self, horizon: usize, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).cumulative(horizon, x)
    }
}
