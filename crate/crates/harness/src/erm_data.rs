//! Synthetic datasets, CSV ingestion, and construction of finite-sum
//! problems (logistic, hinge, lasso) with data-derived gradient bounds.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use aoftrl_core::domains::Hyperrectangle;
use aoftrl_core::erm::{ComponentFn, ErmProblem};
use aoftrl_core::regularizers::CompositeTerm;
use aoftrl_core::vec_ops;

/// Dense examples with one label each. Logistic and hinge losses expect
/// labels in `{-1, +1}`; the squared loss takes real labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |f| f.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErmLossKind {
    Logistic,
    Hinge,
    Lasso,
}

/// Classification data from a noisy ground-truth hyperplane.
pub fn synthetic_classification(features: usize, examples: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..features).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut rows = Vec::with_capacity(examples);
    let mut labels = Vec::with_capacity(examples);
    for _ in 0..examples {
        let a: Vec<f64> = (0..features).map(|_| rng.random_range(-1.0..1.0)).collect();
        let margin = vec_ops::dot(&a, &truth) + 0.1 * rng.random_range(-1.0..1.0);
        labels.push(if margin >= 0.0 { 1.0 } else { -1.0 });
        rows.push(a);
    }
    Dataset { features: rows, labels }
}

/// Regression data from a sparse ground truth: roughly a quarter of the
/// coordinates carry signal, the rest are exactly zero, so an L1 penalty
/// can recover the sparsity pattern.
pub fn synthetic_sparse_regression(features: usize, examples: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..features)
        .map(|i| {
            if i % 4 == 0 {
                rng.random_range(0.3..0.8) * if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 }
            } else {
                let _ = rng.random_range(0.0..1.0);
                0.0
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(examples);
    let mut labels = Vec::with_capacity(examples);
    for _ in 0..examples {
        let a: Vec<f64> = (0..features).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = vec_ops::dot(&a, &truth) + 0.05 * rng.random_range(-1.0..1.0);
        labels.push(y);
        rows.push(a);
    }
    Dataset { features: rows, labels }
}

/// Writes a headerless CSV: one example per row, label in the final column.
pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for (row, label) in data.features.iter().zip(&data.labels) {
        let mut record: Vec<f64> = row.clone();
        record.push(*label);
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.deserialize() {
        let mut row: Vec<f64> = record?;
        let label = match row.pop() {
            Some(l) => l,
            None => bail!("empty CSV row"),
        };
        features.push(row);
        labels.push(label);
    }
    if features.is_empty() {
        bail!("dataset {} has no rows", path.display());
    }
    let dim = features[0].len();
    if features.iter().any(|r| r.len() != dim) {
        bail!("ragged rows in {}", path.display());
    }
    Ok(Dataset { features, labels })
}

fn logistic_component(a: Vec<f64>, y: f64) -> ComponentFn {
    Box::new(move |x: &[f64]| {
        let margin = y * vec_ops::dot(&a, x);
        // ln(1 + e^{-m}) computed stably on both tails
        let z = -margin;
        let value = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        let sigma = 1.0 / (1.0 + margin.exp());
        let g = a.iter().map(|ai| -y * ai * sigma).collect();
        (value, g)
    })
}

fn hinge_component(a: Vec<f64>, y: f64) -> ComponentFn {
    Box::new(move |x: &[f64]| {
        let margin = y * vec_ops::dot(&a, x);
        if margin < 1.0 {
            (1.0 - margin, a.iter().map(|ai| -y * ai).collect())
        } else {
            (0.0, vec![0.0; a.len()])
        }
    })
}

fn squared_component(a: Vec<f64>, y: f64) -> ComponentFn {
    Box::new(move |x: &[f64]| {
        let residual = vec_ops::dot(&a, x) - y;
        let value = 0.5 * residual * residual;
        let g = a.iter().map(|ai| ai * residual).collect();
        (value, g)
    })
}

/// Builds the finite-sum problem, one component per example, with
/// per-component infinity-norm gradient bounds derived from the data:
/// logistic and hinge gradients are feature rows scaled by at most one;
/// squared-loss residuals are bounded through the box radius.
pub fn build_erm_problem(
    kind: ErmLossKind,
    data: &Dataset,
    alpha: f64,
    radius: f64,
) -> Result<ErmProblem> {
    let n = data.dim();
    let box_domain = Hyperrectangle::new(vec![radius; n])?;
    let mut components: Vec<ComponentFn> = Vec::with_capacity(data.len());
    let mut lipschitz = Vec::with_capacity(data.len());
    for (a, &y) in data.features.iter().zip(&data.labels) {
        let inf = vec_ops::inf_norm(a);
        match kind {
            ErmLossKind::Logistic => {
                if y != 1.0 && y != -1.0 {
                    bail!("logistic labels must be +/-1, got {y}");
                }
                lipschitz.push(inf.max(1e-12));
                components.push(logistic_component(a.clone(), y));
            }
            ErmLossKind::Hinge => {
                if y != 1.0 && y != -1.0 {
                    bail!("hinge labels must be +/-1, got {y}");
                }
                lipschitz.push(inf.max(1e-12));
                components.push(hinge_component(a.clone(), y));
            }
            ErmLossKind::Lasso => {
                let residual_bound = vec_ops::l1_norm(a) * radius + y.abs();
                lipschitz.push((inf * residual_bound).max(1e-12));
                components.push(squared_component(a.clone(), y));
            }
        }
    }
    let composite = match kind {
        ErmLossKind::Lasso | ErmLossKind::Logistic | ErmLossKind::Hinge if alpha > 0.0 => {
            CompositeTerm::L1(alpha)
        }
        _ => CompositeTerm::None,
    };
    Ok(ErmProblem::new(components, lipschitz, composite, box_domain)?)
}
