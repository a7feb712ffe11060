//! Independent numeric verifiers: a projected-subgradient argmin, hindsight
//! comparator search, a brute-force check of the a-posteriori scaling
//! identity, and the non-negative-sequence summation inequality.
//!
//! Nothing in here shares code with the closed-form solver steps; these
//! routines exist to certify them.

use crate::domains::Domain;
use crate::regularizers::CompositeTerm;
use crate::stream::LossFamily;
use crate::vec_ops;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Total subgradient evaluations allowed.
    pub budget: usize,
    /// Stop once a full restart phase improves the objective by less than this.
    pub tol: f64,
    /// Grid spacing for the brute-force scaling search.
    pub grid_resolution: f64,
    /// Initial step scale; defaults to twice the domain diameter.
    pub step_scale: Option<f64>,
    /// Iterations per restart phase.
    pub phase_len: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            budget: 50_000,
            tol: 1e-8,
            grid_resolution: 1e-3,
            step_scale: None,
            phase_len: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArgminResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// False when the budget ran out before the phase-improvement test fired.
    pub converged: bool,
}

/// Minimizes a convex objective over the domain by deterministic projected
/// subgradient descent: normalized steps on a halving `scale / sqrt(k)`
/// schedule, each phase restarting from the best point seen (Polyak-style
/// restart). Positions converge geometrically with the phase scale no matter
/// how flat the objective is, and walls, kinks and vertices land exactly
/// through the projection.
///
/// On the simplex the step direction is the gradient's tangent component
/// `g - mean(g)`: the all-ones component would be removed by the projection
/// anyway, and normalizing before that removal would stall the walk near
/// interior optima where the gradient is almost parallel to the ones vector.
pub fn numeric_argmin<F>(objective: F, domain: &Domain, cfg: &OracleConfig) -> ArgminResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let tangent = |g: &[f64]| -> Vec<f64> {
        match domain {
            Domain::Rect(_) => g.to_vec(),
            Domain::Simplex(_) => {
                let mean = g.iter().sum::<f64>() / g.len() as f64;
                g.iter().map(|v| v - mean).collect()
            }
        }
    };

    let mut best_x = domain.center();
    let (mut best_f, mut g) = objective(&best_x);
    let mut used = 1usize;
    let c0 = cfg
        .step_scale
        .unwrap_or_else(|| 2.0 * domain.diameter_inf().max(1.0));
    let mut scale = c0;
    let phase_len = cfg.phase_len.max(8);
    let mut converged = false;

    'phases: while used < cfg.budget {
        let phase_start_f = best_f;
        let mut x = best_x.clone();
        for k in 1..=phase_len {
            let dir = tangent(&g);
            let gn = vec_ops::l2_norm_sq(&dir).sqrt();
            if gn <= 1e-300 {
                converged = true;
                break 'phases;
            }
            let step = scale / (k as f64).sqrt() / gn;
            let moved: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi - step * di).collect();
            x = domain.project(&moved);
            let (v, gv) = objective(&x);
            used += 1;
            if v < best_f {
                best_f = v;
                best_x = x.clone();
            }
            g = gv;
            if used >= cfg.budget {
                break 'phases;
            }
        }
        let improvement = phase_start_f - best_f;
        if improvement < cfg.tol && scale < 1e-9 * c0 {
            converged = true;
            break;
        }
        scale *= 0.5;
        if scale < 1e-17 * c0 {
            converged = true;
            break;
        }
        let (_, g_restart) = objective(&best_x);
        used += 1;
        g = g_restart;
    }

    ArgminResult { point: best_x, value: best_f, converged }
}

/// Best fixed comparator in hindsight: minimizes the cumulative recorded loss
/// (plus the accumulated composite penalty, when present) over the domain.
pub fn best_fixed_point<F: LossFamily>(
    family: &F,
    horizon: usize,
    domain: &Domain,
    composite: &CompositeTerm,
    cfg: &OracleConfig,
) -> ArgminResult {
    if horizon == 0 {
        let center = domain.center();
        return ArgminResult {
            point: center,
            value: 0.0,
            converged: true,
        };
    }
    let t = horizon as f64;
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let (v, mut g) = family.cumulative(horizon, x);
        let pv = composite.eval(x);
        let pg = composite.subgradient(x);
        for (gi, pi) in g.iter_mut().zip(&pg) {
            *gi += t * pi;
        }
        (v + t * pv, g)
    };
    numeric_argmin(objective, domain, cfg)
}

/// Brute-force infimum of `Σ_i c_i^2 / s_i` over the scaled simplex
/// `{s >= 0, <s,1> <= n}` on a grid. Coordinates with `c_i = 0` are excluded
/// (their optimal share tends to zero). The objective decreases in every
/// `s_i`, so the search runs on the face `<s,1> = n`. Supports up to three
/// active coordinates.
pub fn brute_force_inf(column_norms: &[f64], n: usize, resolution: f64) -> f64 {
    assert!(resolution > 0.0, "grid resolution must be positive");
    let c: Vec<f64> = column_norms.iter().copied().filter(|v| *v != 0.0).collect();
    let budget = n as f64;
    match c.len() {
        0 => 0.0,
        1 => c[0] * c[0] / budget,
        2 => {
            let (c0, c1) = (c[0] * c[0], c[1] * c[1]);
            let steps = (budget / resolution) as usize;
            let mut best = f64::INFINITY;
            for k in 1..steps {
                let s0 = k as f64 * resolution;
                let s1 = budget - s0;
                if s1 <= 0.0 {
                    break;
                }
                best = best.min(c0 / s0 + c1 / s1);
            }
            best
        }
        3 => {
            let (c0, c1, c2) = (c[0] * c[0], c[1] * c[1], c[2] * c[2]);
            let steps = (budget / resolution) as usize;
            let mut best = f64::INFINITY;
            for i in 1..steps {
                let s0 = i as f64 * resolution;
                let v0 = c0 / s0;
                if v0 >= best {
                    continue;
                }
                for j in 1..(steps - i) {
                    let s1 = j as f64 * resolution;
                    let s2 = budget - s0 - s1;
                    if s2 <= 0.0 {
                        break;
                    }
                    let v = v0 + c1 / s1 + c2 / s2;
                    if v < best {
                        best = v;
                    }
                }
            }
            best
        }
        d => panic!("brute-force grid supports at most 3 active coordinates, got {d}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// For non-negative `a_j`, checks `Σ_j a_j / sqrt(Σ_{k<=j} a_k)
/// <= 2 sqrt(Σ_j a_j)`, with empty-prefix terms contributing zero.
pub fn lemma2_check(a: &[f64]) -> Lemma2Outcome {
    debug_assert!(a.iter().all(|v| *v >= 0.0));
    let mut prefix = 0.0;
    let mut lhs = 0.0;
    for &v in a {
        prefix += v;
        if v > 0.0 {
            lhs += v / prefix.sqrt();
        }
    }
    let rhs = 2.0 * prefix.sqrt();
    Lemma2Outcome {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    }
}
