//! Feasible sets: per-coordinate boxes and the probability simplex.

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance on `|sum(x) - 1|` for simplex membership.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Coordinates down to this value count as zero for simplex membership;
/// softmax arithmetic can leave tiny negative noise.
pub const SIMPLEX_COORD_TOL: f64 = -1e-15;

/// Axis-aligned box `×_i [-R_i, R_i]` with positive per-coordinate radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    radii: Vec<f64>,
}

impl Hyperrectangle {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidParameter("box needs at least one radius".into()));
        }
        if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidParameter("box radii must be positive and finite".into()));
        }
        Ok(Self { radii })
    }

    pub fn dim(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Per-coordinate clamp onto the box.
    pub fn clip(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(v.iter()
            .zip(&self.radii)
            .map(|(x, r)| x.clamp(-*r, *r))
            .collect())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(x.iter().zip(&self.radii).all(|(v, r)| v.abs() <= *r))
    }
}

/// The probability simplex `{x : x_i >= 0, sum x_i = 1}` in `n >= 2` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Simplex {
    dim: usize,
}

impl Simplex {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("simplex dimension must be >= 2".into()));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| *v < SIMPLEX_COORD_TOL) {
            return Ok(false);
        }
        let sum: f64 = x.iter().map(|v| v.max(0.0)).sum();
        Ok((sum - 1.0).abs() <= SIMPLEX_SUM_TOL)
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.dim as f64; self.dim]
    }

    /// Euclidean projection onto the simplex (sort-based threshold).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut sorted = v.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cumsum = 0.0;
        let mut theta = 0.0;
        for (k, u) in sorted.iter().enumerate() {
            cumsum += u;
            let candidate = (cumsum - 1.0) / (k + 1) as f64;
            if u - candidate > 0.0 {
                theta = candidate;
            }
        }
        v.iter().map(|x| (x - theta).max(0.0)).collect()
    }
}

/// Feasible set used by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Rect(Hyperrectangle),
    Simplex(Simplex),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Rect(b) => b.dim(),
            Domain::Simplex(s) => s.dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        match self {
            Domain::Rect(b) => b.contains(x),
            Domain::Simplex(s) => s.contains(x),
        }
    }

    /// Canonical initial point: the box center (zero) or the uniform
    /// distribution. Ties in the initial argmin are broken here so that the
    /// composite term vanishes at the first iterate.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Rect(b) => vec![0.0; b.dim()],
            Domain::Simplex(s) => s.uniform(),
        }
    }

    /// Euclidean projection, used by the numeric argmin oracle.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Domain::Rect(b) => b.clip(v).expect("dimension checked by caller"),
            Domain::Simplex(s) => s.project(v),
        }
    }

    /// Infinity-norm diameter, used to scale oracle step sizes.
    pub fn diameter_inf(&self) -> f64 {
        match self {
            Domain::Rect(b) => 2.0 * b.radii().iter().fold(0.0f64, |m, r| m.max(*r)),
            Domain::Simplex(_) => 1.0,
        }
    }
}
