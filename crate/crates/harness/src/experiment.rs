//! Experiment configuration and the (algorithm x seed) grid runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use aoftrl_core::domains::{Domain, Hyperrectangle, Simplex};
use aoftrl_core::erm::{
    run_caos_reg_erm_epoch, run_caos_reg_erm_epoch_minibatch, ErmProblem, ErmRunConfig,
};
use aoftrl_core::ftrl::{run_online, Algorithm, RegretReport};
use aoftrl_core::oracle::OracleConfig;
use aoftrl_core::predictors::PredictorKind;
use aoftrl_core::rcd::{run_cao_rcd, SamplerPolicy};
use aoftrl_core::regularizers::CompositeTerm;
use aoftrl_core::stream::LossFamily;

use crate::baselines::{run_baseline, BaselineKind};
use crate::erm_data::{
    build_erm_problem, read_csv, synthetic_classification, synthetic_sparse_regression,
    ErmLossKind,
};
use crate::report::{ExperimentReport, ReportRow};
use crate::streams::{ConstLinear, ListLinear, QuadraticBox};

/// Seeds as an explicit list or a `"lo..hi"` / `"a,b,c"` / `"n"` string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Text(String),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<Vec<u64>> {
        match self {
            SeedSpec::List(v) => Ok(v.clone()),
            SeedSpec::Text(s) => parse_seed_spec(s),
        }
    }
}

pub fn parse_seed_spec(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u64 = lo.trim().parse().context("seed range start")?;
        let hi: u64 = hi.trim().parse().context("seed range end")?;
        if hi <= lo {
            bail!("empty seed range {spec}");
        }
        return Ok((lo..hi).collect());
    }
    spec.split(',')
        .map(|part| part.trim().parse::<u64>().with_context(|| format!("seed {part:?}")))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    FixedLinear {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gradient: Option<Vec<f64>>,
    },
    SlowlyVaryingLinear {
        dim: usize,
        sigma: f64,
        #[serde(default = "default_base_scale")]
        base_scale: f64,
    },
    RandomLinear {
        dim: usize,
        #[serde(default = "default_one")]
        scale: f64,
    },
    QuadraticBox {
        dim: usize,
        #[serde(default = "default_one")]
        curvature: f64,
        #[serde(default = "default_drift")]
        center_drift: f64,
    },
    ErmLogistic {
        features: usize,
        components: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        alpha: f64,
    },
    ErmHinge {
        features: usize,
        components: usize,
        #[serde(default)]
        data_seed: u64,
        #[serde(default)]
        alpha: f64,
    },
    ErmLasso {
        features: usize,
        components: usize,
        #[serde(default)]
        data_seed: u64,
        alpha: f64,
    },
    ErmCsv {
        path: PathBuf,
        loss: ErmLossKind,
        #[serde(default)]
        alpha: f64,
    },
}

fn default_base_scale() -> f64 {
    0.05
}
fn default_one() -> f64 {
    1.0
}
fn default_drift() -> f64 {
    0.05
}

impl ProblemSpec {
    pub fn dim(&self) -> Result<usize> {
        Ok(match self {
            ProblemSpec::FixedLinear { dim, .. }
            | ProblemSpec::SlowlyVaryingLinear { dim, .. }
            | ProblemSpec::RandomLinear { dim, .. }
            | ProblemSpec::QuadraticBox { dim, .. } => *dim,
            ProblemSpec::ErmLogistic { features, .. }
            | ProblemSpec::ErmHinge { features, .. }
            | ProblemSpec::ErmLasso { features, .. } => *features,
            ProblemSpec::ErmCsv { path, .. } => read_csv(path)?.dim(),
        })
    }

    pub fn is_erm(&self) -> bool {
        matches!(
            self,
            ProblemSpec::ErmLogistic { .. }
                | ProblemSpec::ErmHinge { .. }
                | ProblemSpec::ErmLasso { .. }
                | ProblemSpec::ErmCsv { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::FixedLinear { dim, gradient } => {
                if *dim == 0 {
                    bail!("dim must be positive");
                }
                if let Some(g) = gradient {
                    if g.len() != *dim {
                        bail!("gradient length {} != dim {}", g.len(), dim);
                    }
                }
            }
            ProblemSpec::SlowlyVaryingLinear { dim, sigma, base_scale } => {
                if *dim == 0 || *sigma < 0.0 || *base_scale <= 0.0 {
                    bail!("invalid slowly-varying-linear parameters");
                }
            }
            ProblemSpec::RandomLinear { dim, scale } => {
                if *dim == 0 || *scale <= 0.0 {
                    bail!("invalid random-linear parameters");
                }
            }
            ProblemSpec::QuadraticBox { dim, curvature, center_drift } => {
                if *dim == 0 || *curvature <= 0.0 || *center_drift < 0.0 {
                    bail!("invalid quadratic-box parameters");
                }
            }
            ProblemSpec::ErmLogistic { features, components, .. }
            | ProblemSpec::ErmHinge { features, components, .. } => {
                if *features == 0 || *components == 0 {
                    bail!("invalid classification problem size");
                }
            }
            ProblemSpec::ErmLasso { features, components, alpha, .. } => {
                if *features == 0 || *components == 0 || *alpha <= 0.0 {
                    bail!("invalid lasso parameters");
                }
            }
            ProblemSpec::ErmCsv { alpha, .. } => {
                if *alpha < 0.0 {
                    bail!("alpha must be non-negative");
                }
            }
        }
        Ok(())
    }

    /// Declared per-coordinate gradient bounds, used by the half-Lipschitz
    /// predictor and the coordinate-sampling policies.
    pub fn gradient_bounds(&self, dim: usize, radius: f64) -> Vec<f64> {
        match self {
            ProblemSpec::FixedLinear { gradient: Some(g), .. } => {
                g.iter().map(|v| v.abs().max(1e-9)).collect()
            }
            ProblemSpec::FixedLinear { gradient: None, .. } => vec![1.0; dim],
            ProblemSpec::SlowlyVaryingLinear { .. } => vec![1.0; dim],
            ProblemSpec::RandomLinear { scale, .. } => vec![*scale; dim],
            ProblemSpec::QuadraticBox { curvature, .. } => vec![curvature * 2.0 * radius; dim],
            _ => vec![1.0; dim],
        }
    }

    pub fn build_stream(&self, seed: u64, horizon: usize) -> Result<Box<dyn LossFamily>> {
        Ok(match self {
            ProblemSpec::FixedLinear { dim, gradient } => match gradient {
                Some(g) => Box::new(ConstLinear::new(g.clone())),
                None => Box::new(ConstLinear::seeded(*dim, seed)),
            },
            ProblemSpec::SlowlyVaryingLinear { dim, sigma, base_scale } => {
                Box::new(ListLinear::slowly_varying(*dim, horizon, *sigma, *base_scale, seed))
            }
            ProblemSpec::RandomLinear { dim, scale } => {
                Box::new(ListLinear::random(*dim, horizon, *scale, seed))
            }
            ProblemSpec::QuadraticBox { dim, curvature, center_drift } => {
                Box::new(QuadraticBox::new(*dim, horizon, *curvature, *center_drift, 1.0, seed))
            }
            _ => bail!("{self:?} is a finite-sum problem, not a stream"),
        })
    }

    pub fn build_erm(&self, radius: f64) -> Result<ErmProblem> {
        match self {
            ProblemSpec::ErmLogistic { features, components, data_seed, alpha } => {
                let data = synthetic_classification(*features, *components, *data_seed);
                build_erm_problem(ErmLossKind::Logistic, &data, *alpha, radius)
            }
            ProblemSpec::ErmHinge { features, components, data_seed, alpha } => {
                let data = synthetic_classification(*features, *components, *data_seed);
                build_erm_problem(ErmLossKind::Hinge, &data, *alpha, radius)
            }
            ProblemSpec::ErmLasso { features, components, data_seed, alpha } => {
                let data = synthetic_sparse_regression(*features, *components, *data_seed);
                build_erm_problem(ErmLossKind::Lasso, &data, *alpha, radius)
            }
            ProblemSpec::ErmCsv { path, loss, alpha } => {
                let data = read_csv(path)?;
                build_erm_problem(*loss, &data, *alpha, radius)
            }
            _ => bail!("{self:?} is a stream problem, not a finite sum"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    Box {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radii: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RcdPolicyKind {
    Uniform,
    #[default]
    Lipschitz,
    MiniBatch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Aogd,
    Aoeg {
        #[serde(default = "default_one")]
        grad_bound: f64,
    },
    CaogdL1 {
        alpha: f64,
    },
    Rcd {
        #[serde(default)]
        policy: RcdPolicyKind,
        #[serde(default)]
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks: Option<usize>,
    },
    ErmEpoch {
        epochs: usize,
        #[serde(default)]
        uniform: bool,
    },
    ErmEpochMinibatch {
        epochs: usize,
        groups: usize,
    },
    Ogd,
    AdagradDiag,
    FixedEtaEg {
        #[serde(default = "default_half")]
        eta: f64,
    },
}

fn default_half() -> f64 {
    0.5
}

impl AlgorithmSpec {
    pub fn name(&self) -> String {
        match self {
            AlgorithmSpec::Aogd => "aogd".into(),
            AlgorithmSpec::Aoeg { .. } => "aoeg".into(),
            AlgorithmSpec::CaogdL1 { .. } => "caogd-l1".into(),
            AlgorithmSpec::Rcd { .. } => "rcd".into(),
            AlgorithmSpec::ErmEpoch { .. } => "erm-epoch".into(),
            AlgorithmSpec::ErmEpochMinibatch { .. } => "erm-epoch-minibatch".into(),
            AlgorithmSpec::Ogd => "ogd".into(),
            AlgorithmSpec::AdagradDiag => "adagrad-diag".into(),
            AlgorithmSpec::FixedEtaEg { .. } => "fixed-eta-eg".into(),
        }
    }

    /// Parses a bare name with default parameters, for `--algos` lists.
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "aogd" => AlgorithmSpec::Aogd,
            "aoeg" => AlgorithmSpec::Aoeg { grad_bound: 1.0 },
            "caogd-l1" => AlgorithmSpec::CaogdL1 { alpha: 0.1 },
            "rcd" => AlgorithmSpec::Rcd {
                policy: RcdPolicyKind::Lipschitz,
                alpha: 0.0,
                blocks: None,
            },
            "erm-epoch" => AlgorithmSpec::ErmEpoch { epochs: 10, uniform: false },
            "ogd" => AlgorithmSpec::Ogd,
            "adagrad-diag" => AlgorithmSpec::AdagradDiag,
            "fixed-eta-eg" => AlgorithmSpec::FixedEtaEg { eta: 0.5 },
            other => bail!("unknown algorithm {other:?}"),
        })
    }

    fn needs_simplex(&self) -> bool {
        matches!(self, AlgorithmSpec::Aoeg { .. } | AlgorithmSpec::FixedEtaEg { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorSpec {
    Zero,
    #[default]
    LastGradient,
    HalfLipschitz,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub predictor: PredictorSpec,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: SeedSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub include_runtime: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)?,
            _ => toml::from_str(&text)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.algorithms.is_empty() {
            bail!("no algorithms configured");
        }
        let seeds = self.seeds.resolve()?;
        if seeds.is_empty() {
            bail!("empty seed list");
        }
        for algo in &self.algorithms {
            match algo {
                AlgorithmSpec::Aoeg { grad_bound } if *grad_bound <= 0.0 => {
                    bail!("aoeg gradient bound must be positive")
                }
                AlgorithmSpec::CaogdL1 { alpha } if *alpha <= 0.0 => {
                    bail!("caogd-l1 alpha must be positive")
                }
                AlgorithmSpec::ErmEpoch { epochs, .. }
                | AlgorithmSpec::ErmEpochMinibatch { epochs, .. } => {
                    if *epochs == 0 || self.horizon % *epochs != 0 {
                        bail!("epochs must divide T");
                    }
                    if !self.problem.is_erm() {
                        bail!("epoch solvers need a finite-sum problem");
                    }
                }
                AlgorithmSpec::FixedEtaEg { eta } if *eta <= 0.0 => {
                    bail!("fixed-eta-eg eta must be positive")
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn box_radii(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.domain {
            None | Some(DomainSpec::Simplex) => Ok(vec![1.0; dim]),
            Some(DomainSpec::Box { radii: Some(r), .. }) => {
                if r.len() != dim {
                    bail!("domain radii length {} != dim {}", r.len(), dim);
                }
                Ok(r.clone())
            }
            Some(DomainSpec::Box { radius: Some(r), .. }) => Ok(vec![*r; dim]),
            Some(DomainSpec::Box { .. }) => Ok(vec![1.0; dim]),
        }
    }
}

/// A finished cell plus the per-round comparator losses (for curve output).
pub struct CellOutput {
    pub report: RegretReport,
    pub comparator_losses: Vec<f64>,
}

pub fn run_cell(config: &ExperimentConfig, algo: &AlgorithmSpec, seed: u64) -> Result<CellOutput> {
    let dim = config.problem.dim()?;
    let horizon = config.horizon;
    let oracle_cfg = OracleConfig::default();
    let radii = config.box_radii(dim)?;
    let radius_max = radii.iter().fold(0.0f64, |m, r| m.max(*r));

    // finite-sum problems route to the epoch solvers or serve as repeated
    // losses for the online algorithms
    if config.problem.is_erm() {
        let problem = config.problem.build_erm(radius_max)?;
        match algo {
            AlgorithmSpec::ErmEpoch { epochs, uniform } => {
                let mut cfg = ErmRunConfig::new(*epochs, horizon, seed);
                cfg.uniform_sampling = *uniform;
                let run = run_caos_reg_erm_epoch(&problem, &cfg)?;
                let losses = comparator_losses(&problem, problem.composite(), &run.report);
                return Ok(CellOutput { report: run.report, comparator_losses: losses });
            }
            AlgorithmSpec::ErmEpochMinibatch { epochs, groups } => {
                let partition = contiguous_partition(problem.len(), *groups)?;
                let mut cfg = ErmRunConfig::new(*epochs, horizon, seed);
                cfg.uniform_sampling = false;
                let run = run_caos_reg_erm_epoch_minibatch(&problem, &partition, &cfg)?;
                let losses = comparator_losses(&problem, problem.composite(), &run.report);
                return Ok(CellOutput { report: run.report, comparator_losses: losses });
            }
            _ => {
                return run_stream_cell(
                    config,
                    algo,
                    seed,
                    &problem,
                    &radii,
                    &vec![problem.lipschitz().iter().sum::<f64>(); dim],
                    &oracle_cfg,
                );
            }
        }
    }

    let stream = config.problem.build_stream(seed, horizon)?;
    let bounds = config.problem.gradient_bounds(dim, radius_max);
    run_stream_cell(config, algo, seed, stream.as_ref(), &radii, &bounds, &oracle_cfg)
}

fn run_stream_cell<F: LossFamily + ?Sized>(
    config: &ExperimentConfig,
    algo: &AlgorithmSpec,
    seed: u64,
    family: &F,
    radii: &[f64],
    grad_bounds: &[f64],
    oracle_cfg: &OracleConfig,
) -> Result<CellOutput> {
    let dim = family.dim();
    let horizon = config.horizon;
    let domain = if algo.needs_simplex() {
        Domain::Simplex(Simplex::new(dim)?)
    } else {
        Domain::Rect(Hyperrectangle::new(radii.to_vec())?)
    };
    let predictor = match config.predictor {
        PredictorSpec::Zero => PredictorKind::Zero,
        PredictorSpec::LastGradient => PredictorKind::LastGradient,
        PredictorSpec::HalfLipschitz => PredictorKind::half_lipschitz(grad_bounds.to_vec())?,
    };

    let (report, composite) = match algo {
        AlgorithmSpec::Aogd => (
            run_online(&family, &domain, &predictor, &Algorithm::Aogd, horizon, oracle_cfg)?,
            CompositeTerm::None,
        ),
        AlgorithmSpec::Aoeg { grad_bound } => (
            run_online(
                &family,
                &domain,
                &predictor,
                &Algorithm::Aoeg { grad_bound: *grad_bound },
                horizon,
                oracle_cfg,
            )?,
            CompositeTerm::None,
        ),
        AlgorithmSpec::CaogdL1 { alpha } => (
            run_online(
                &family,
                &domain,
                &predictor,
                &Algorithm::CaogdL1 { alpha: *alpha },
                horizon,
                oracle_cfg,
            )?,
            CompositeTerm::L1(*alpha),
        ),
        AlgorithmSpec::Rcd { policy, alpha, blocks } => {
            let rect = match &domain {
                Domain::Rect(b) => b.clone(),
                _ => bail!("coordinate solver needs a box"),
            };
            let sampler_policy = match policy {
                RcdPolicyKind::Uniform => SamplerPolicy::Uniform,
                RcdPolicyKind::Lipschitz => SamplerPolicy::Lipschitz { bounds: grad_bounds.to_vec() },
                RcdPolicyKind::MiniBatch => {
                    let k = blocks.unwrap_or_else(|| dim.div_ceil(2));
                    let partition = contiguous_partition(dim, k)?;
                    let block_bounds = partition
                        .iter()
                        .map(|b| {
                            (b.iter().map(|&i| grad_bounds[i] * grad_bounds[i]).sum::<f64>()).sqrt()
                        })
                        .collect();
                    SamplerPolicy::MiniBatch { partition, block_bounds }
                }
            };
            let composite = if *alpha > 0.0 { CompositeTerm::L1(*alpha) } else { CompositeTerm::None };
            let run = run_cao_rcd(
                &family,
                &rect,
                &sampler_policy,
                &predictor,
                &composite,
                horizon,
                seed,
                oracle_cfg,
            )?;
            (run.report, composite)
        }
        AlgorithmSpec::Ogd => (
            run_baseline(BaselineKind::Ogd, &family, &domain, horizon, oracle_cfg)?,
            CompositeTerm::None,
        ),
        AlgorithmSpec::AdagradDiag => (
            run_baseline(BaselineKind::AdaGradDiag, &family, &domain, horizon, oracle_cfg)?,
            CompositeTerm::None,
        ),
        AlgorithmSpec::FixedEtaEg { eta } => (
            run_baseline(BaselineKind::FixedEtaEg { eta: *eta }, &family, &domain, horizon, oracle_cfg)?,
            CompositeTerm::None,
        ),
        AlgorithmSpec::ErmEpoch { .. } | AlgorithmSpec::ErmEpochMinibatch { .. } => {
            bail!("epoch solvers need a finite-sum problem")
        }
    };

    let losses = comparator_losses(&family, &composite, &report);
    Ok(CellOutput { report, comparator_losses: losses })
}

fn comparator_losses<F: LossFamily + ?Sized>(
    family: &F,
    composite: &CompositeTerm,
    report: &RegretReport,
) -> Vec<f64> {
    let comp = composite.eval(&report.comparator);
    (1..=report.horizon)
        .map(|t| family.eval(t, &report.comparator).0 + comp)
        .collect()
}

pub fn contiguous_partition(n: usize, groups: usize) -> Result<Vec<Vec<usize>>> {
    if groups == 0 || groups > n {
        bail!("cannot split {n} items into {groups} groups");
    }
    let base = n / groups;
    let extra = n % groups;
    let mut out = Vec::with_capacity(groups);
    let mut next = 0;
    for g in 0..groups {
        let len = base + usize::from(g < extra);
        out.push((next..next + len).collect());
        next += len;
    }
    Ok(out)
}

/// Runs every (algorithm, seed) cell; per-cell failures land in the report
/// instead of aborting the sweep.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let seeds = config.seeds.resolve()?;
    let mut rows = Vec::with_capacity(config.algorithms.len() * seeds.len());
    for algo in &config.algorithms {
        for &seed in &seeds {
            let started = Instant::now();
            match run_cell(config, algo, seed) {
                Ok(cell) => {
                    let mut row = ReportRow::from_report(&algo.name(), seed, &cell.report);
                    if config.include_runtime {
                        row.runtime_ms = Some(started.elapsed().as_millis() as u64);
                    }
                    rows.push(row);
                }
                Err(err) => {
                    rows.push(ReportRow::failed(&algo.name(), seed, config.horizon, err.to_string()
))
                }
            }
        }
    }
    Ok(ExperimentReport::new(serde_json::to_value(config)?, rows))
}

/// Writes one CSV per cell with the per-round regret curve.
pub fn emit_curves(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let seeds = config.seeds.resolve()?;
    for algo in &config.algorithms {
        for &seed in &seeds {
            let cell = run_cell(config, algo, seed)
                .map_err(|e| anyhow!("cell {} seed {seed}: {e}", algo.name()))?;
            let path = out_dir.join(format!("{}_seed{}.csv", algo.name(), seed));
            let mut out = String::from("t,loss,composite,comparator_loss,cumulative_regret\n");
            let mut cum = 0.0;
            for (r, comp_loss) in cell.report.trace.iter().zip(&cell.comparator_losses) {
                cum += r.loss + r.composite_value - comp_loss;
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.t, r.loss, r.composite_value, comp_loss, cum
                ));
            }
            fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}
