//! Seeded loss-stream generators.
//!
//! Every stream pre-draws its randomness at construction from `(kind, seed)`,
//! so `eval(t, x)` is a pure function and the cumulative loss admits a
//! closed-form accumulation via prefix sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aoftrl_core::stream::LossFamily;
use aoftrl_core::vec_ops;

/// Linear losses `f_t(x) = g_t . x` with one fixed gradient.
pub struct ConstLinear {
    gradient: Vec<f64>,
}

impl ConstLinear {
    pub fn new(gradient: Vec<f64>) -> Self {
        Self { gradient }
    }

    /// Seeded base gradient with coordinates of magnitude in `[0.3, 1)`.
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gradient = (0..dim)
            .map(|_| {
                let mag = rng.random_range(0.3..1.0);
                if rng.random_range(0.0..1.0) < 0.5 {
                    -mag
                } else {
                    mag
                }
            })
            .collect();
        Self { gradient }
    }

    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }
}

impl LossFamily for ConstLinear {
    fn dim(&self) -> usize {
        self.gradient.len()
    }

    fn eval(&self, _t: usize, x: &[f64]) -> (f64, Vec<f64>) {
        (vec_ops::dot(&self.gradient, x), self.gradient.clone())
    }

    fn cumulative(&self, horizon: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let t = horizon as f64;
        let g: Vec<f64> = self.gradient.iter().map(|v| v * t).collect();
        (vec_ops::dot(&g, x), g)
    }
}

/// Linear losses from a pre-drawn list of gradients.
pub struct ListLinear {
    gradients: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
}

impl ListLinear {
    pub fn new(gradients: Vec<Vec<f64>>) -> Self {
        let n = gradients.first().map_or(0, |g| g.len());
        let mut prefix = Vec::with_capacity(gradients.len() + 1);
        prefix.push(vec![0.0; n]);
        for g in &gradients {
            let mut next = prefix.last().unwrap().clone();
            vec_ops::add_assign(&mut next, g);
            prefix.push(next);
        }
        Self { gradients, prefix }
    }

    /// Independent uniform gradients in `[-scale, scale]^n`.
    pub fn random(dim: usize, horizon: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(
            (0..horizon)
                .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
                .collect(),
        )
    }

    /// Slowly-varying gradients: a fixed base with a bounded oscillation on
    /// top. Each coordinate's base has magnitude in `[base_scale/2,
    /// base_scale]` with a random sign; the oscillation walks with steps of
    /// at most `sigma` inside a band of half-width `2 sigma`. Consecutive
    /// gradients differ by at most `sigma` in the infinity norm, and
    /// everything stays clamped to `[-1, 1]`.
    pub fn slowly_varying(dim: usize, horizon: usize, sigma: f64, base_scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..dim)
            .map(|_| {
                let mag = rng.random_range(0.5 * base_scale..base_scale);
                if rng.random_range(0.0..1.0) < 0.5 {
                    -mag
                } else {
                    mag
                }
            })
            .collect();
        let band = 2.0 * sigma;
        let mut offset = vec![0.0; dim];
        let mut gradients = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            gradients.push(
                base.iter()
                    .zip(&offset)
                    .map(|(b, o)| (b + o).clamp(-1.0, 1.0))
                    .collect(),
            );
            for o in offset.iter_mut() {
                *o = (*o + sigma * rng.random_range(-1.0..1.0)).clamp(-band, band);
            }
        }
        Self::new(gradients)
    }

    pub fn gradients(&self) -> &[Vec<f64>] {
        &self.gradients
    }
}

impl LossFamily for ListLinear {
    fn dim(&self) -> usize {
        self.prefix[0].len()
    }

    fn eval(&self, t: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let g = &self.gradients[t - 1];
        (vec_ops::dot(g, x), g.clone())
    }

    fn cumulative(&self, horizon: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let g = &self.prefix[horizon];
        (vec_ops::dot(g, x), g.clone())
    }
}

/// Quadratic losses `f_t(x) = (q/2) ||x - c_t||^2` with drifting centers.
pub struct QuadraticBox {
    curvature: f64,
    centers: Vec<Vec<f64>>,
    center_prefix: Vec<Vec<f64>>,
    center_norm_prefix: Vec<f64>,
}

impl QuadraticBox {
    pub fn new(dim: usize, horizon: usize, curvature: f64, center_drift: f64, radius: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5 * radius..0.5 * radius)).collect();
        let mut centers = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            centers.push(c.clone());
            for v in c.iter_mut() {
                *v = (*v + center_drift * rng.random_range(-1.0..1.0)).clamp(-radius, radius);
            }
        }
        let mut center_prefix = vec![vec![0.0; dim]];
        let mut center_norm_prefix = vec![0.0];
        for c in &centers {
            let mut next = center_prefix.last().unwrap().clone();
            vec_ops::add_assign(&mut next, c);
            center_prefix.push(next);
            center_norm_prefix.push(center_norm_prefix.last().unwrap() + vec_ops::l2_norm_sq(c));
        }
        Self { curvature, centers, center_prefix, center_norm_prefix }
    }
}

impl LossFamily for QuadraticBox {
    fn dim(&self) -> usize {
        self.center_prefix[0].len()
    }

    fn eval(&self, t: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let c = &self.centers[t - 1];
        let diff = vec_ops::sub(x, c);
        let v = 0.5 * self.curvature * vec_ops::l2_norm_sq(&diff);
        let g = diff.iter().map(|d| self.curvature * d).collect();
        (v, g)
    }

    fn cumulative(&self, horizon: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let t = horizon as f64;
        let q = self.curvature;
        let cs = &self.center_prefix[horizon];
        let cn = self.center_norm_prefix[horizon];
        let v = 0.5 * q * (t * vec_ops::l2_norm_sq(x) - 2.0 * vec_ops::dot(x, cs) + cn);
        let g = x.iter().zip(cs).map(|(xi, ci)| q * (t * xi - ci)).collect();
        (v, g)
    }
}
