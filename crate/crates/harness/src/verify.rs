//! Bound-verification suites: seeded sweeps asserting that realized regret
//! stays under every applicable bound. Reports are fully deterministic given
//! the seed set.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use aoftrl_core::domains::{Domain, Hyperrectangle, Simplex};
use aoftrl_core::erm::{run_caos_reg_erm_epoch, run_caos_reg_erm_epoch_minibatch, ErmRunConfig};
use aoftrl_core::ftrl::{run_online, Algorithm};
use aoftrl_core::oracle::{numeric_argmin, OracleConfig};
use aoftrl_core::predictors::PredictorKind;
use aoftrl_core::rcd::{run_cao_rcd, SamplerPolicy};
use aoftrl_core::regularizers::CompositeTerm;

use crate::erm_data::{build_erm_problem, synthetic_sparse_regression, ErmLossKind};
use crate::streams::ListLinear;

pub const BOUND_SLACK: f64 = 1e-9;
pub const MEAN_SLACK: f64 = 1.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub seeds: Vec<u64>,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Aogd,
    Aoeg,
    Rcd,
    Erm,
    All,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "aogd" => Suite::Aogd,
            "aoeg" => Suite::Aoeg,
            "rcd" => Suite::Rcd,
            "erm" => Suite::Erm,
            "all" => Suite::All,
            other => anyhow::bail!("unknown suite {other:?}"),
        })
    }
}

fn suite_result(suite: &str, seeds: &[u64], checks: Vec<CheckResult>) -> SuiteResult {
    SuiteResult {
        suite: suite.to_string(),
        seeds: seeds.to_vec(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Box solver on random linear streams: per-seed regret under both the
/// generic adaptive-optimistic bound and its closed-form corollary.
pub fn aogd_suite(seeds: &[u64]) -> SuiteResult {
    let dim = 5;
    let horizon = 1000;
    let dom = Domain::Rect(Hyperrectangle::new(vec![1.0; dim]).unwrap());
    let oracle_cfg = OracleConfig::default();
    let mut min_ftrl_margin = f64::INFINITY;
    let mut min_corollary_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for &seed in seeds {
        let family = ListLinear::random(dim, horizon, 1.0, seed);
        let report = run_online(
            &family,
            &dom,
            &PredictorKind::LastGradient,
            &Algorithm::Aogd,
            horizon,
            &oracle_cfg,
        )
        .expect("aogd run");
        let ftrl_margin = report.bounds["ftrl"] - report.realized_regret;
        let cor_margin = report.bounds["aogd"] - report.realized_regret;
        min_ftrl_margin = min_ftrl_margin.min(ftrl_margin);
        min_corollary_margin = min_corollary_margin.min(cor_margin);
        if ftrl_margin < -BOUND_SLACK || cor_margin < -BOUND_SLACK {
            failures.push(seed);
        }
    }
    let checks = vec![
        CheckResult::new(
            "regret_under_adaptive_optimistic_bound",
            min_ftrl_margin >= -BOUND_SLACK,
            format!("min margin {min_ftrl_margin} over {} seeds", seeds.len()),
        ),
        CheckResult::new(
            "regret_under_closed_form_bound",
            min_corollary_margin >= -BOUND_SLACK,
            format!("min margin {min_corollary_margin}; failing seeds {failures:?}"),
        ),
    ];
    suite_result("aogd", seeds, checks)
}

/// Simplex solver on bounded random linear streams: regret under the
/// entropy-scale bound, and all iterates on the simplex.
pub fn aoeg_suite(seeds: &[u64]) -> SuiteResult {
    let dim = 10;
    let horizon = 1000;
    let simplex = Simplex::new(dim).unwrap();
    let dom = Domain::Simplex(simplex);
    let oracle_cfg = OracleConfig::default();
    let mut min_margin = f64::INFINITY;
    let mut all_on_simplex = true;
    for &seed in seeds {
        let family = ListLinear::random(dim, horizon, 1.0, seed);
        let report = run_online(
            &family,
            &dom,
            &PredictorKind::LastGradient,
            &Algorithm::Aoeg { grad_bound: 1.0 },
            horizon,
            &oracle_cfg,
        )
        .expect("aoeg run");
        min_margin = min_margin.min(report.bounds["aoeg"] - report.realized_regret);
        for r in &report.trace {
            if !simplex.contains(&r.iterate).unwrap() {
                all_on_simplex = false;
            }
        }
    }
    let checks = vec![
        CheckResult::new(
            "regret_under_entropy_bound",
            min_margin >= -BOUND_SLACK,
            format!("min margin {min_margin} over {} seeds", seeds.len()),
        ),
        CheckResult::new(
            "iterates_on_simplex",
            all_on_simplex,
            "membership tolerance 1e-12".to_string(),
        ),
    ];
    suite_result("aoeg", seeds, checks)
}

/// Importance-sampled coordinate solver on 2-D linear streams: mean regret
/// under the trace-evaluated expected-regret bound with Monte-Carlo slack.
pub fn rcd_suite(seeds: &[u64]) -> SuiteResult {
    let dim = 2;
    let horizon = 500;
    let rect = Hyperrectangle::new(vec![1.0; dim]).unwrap();
    let bounds = vec![1.0; dim];
    let policy = SamplerPolicy::Lipschitz { bounds: bounds.clone() };
    let predictor = PredictorKind::half_lipschitz(bounds).unwrap();
    let oracle_cfg = OracleConfig::default();
    let mut regrets = Vec::with_capacity(seeds.len());
    let mut trace_bounds = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let family = ListLinear::random(dim, horizon, 1.0, seed);
        let run = run_cao_rcd(
            &family,
            &rect,
            &policy,
            &predictor,
            &CompositeTerm::None,
            horizon,
            seed,
            &oracle_cfg,
        )
        .expect("rcd run");
        regrets.push(run.report.realized_regret);
        trace_bounds.push(run.report.bounds["rcd_sampled"]);
    }
    let mean_regret = regrets.iter().sum::<f64>() / regrets.len().max(1) as f64;
    let mean_bound = trace_bounds.iter().sum::<f64>() / trace_bounds.len().max(1) as f64;
    let checks = vec![CheckResult::new(
        "mean_regret_under_sampled_bound",
        mean_regret <= mean_bound * MEAN_SLACK,
        format!("mean regret {mean_regret} vs bound {mean_bound} (x{MEAN_SLACK})"),
    )];
    suite_result("rcd", seeds, checks)
}

/// Epoch solver on a synthetic lasso problem: convergence to the oracle
/// objective, mean regret under the data-dependent bound, singleton
/// mini-batch trace identity, and composite sparsity.
pub fn erm_suite(seeds: &[u64]) -> SuiteResult {
    let features = 20;
    let components = 50;
    let horizon = 2000;
    let epochs = 10;
    let alpha = 0.4;
    let data = synthetic_sparse_regression(features, components, 0);
    let problem = build_erm_problem(ErmLossKind::Lasso, &data, alpha, 1.0).expect("problem");
    let dom = Domain::Rect(problem.box_domain().clone());

    // one oracle search serves every seed: the objective has no sampling noise
    let oracle_min = numeric_argmin(
        |x| {
            let (v, mut g) = problem.sum_eval(x);
            let pv = problem.composite().eval(x);
            let pg = problem.composite().subgradient(x);
            for (gi, pi) in g.iter_mut().zip(&pg) {
                *gi += pi;
            }
            (v + pv, g)
        },
        &dom,
        &OracleConfig::default(),
    );

    let mut regrets = Vec::new();
    let mut data_bounds = Vec::new();
    let mut first_final_objective = f64::NAN;
    for (i, &seed) in seeds.iter().enumerate() {
        let mut cfg = ErmRunConfig::new(epochs, horizon, seed);
        cfg.comparator_override = Some(oracle_min.point.clone());
        let run = run_caos_reg_erm_epoch(&problem, &cfg).expect("erm run");
        regrets.push(run.report.realized_regret);
        data_bounds.push(run.report.bounds["erm_data"]);
        if i == 0 {
            first_final_objective = problem.objective(&run.report.final_iterate);
        }
    }
    let mean_regret = regrets.iter().sum::<f64>() / regrets.len().max(1) as f64;
    let mean_bound = data_bounds.iter().sum::<f64>() / data_bounds.len().max(1) as f64;

    // trace identity: singleton partition must replay the component run
    let first_seed = seeds.first().copied().unwrap_or(0);
    let mut cfg = ErmRunConfig::new(epochs, horizon, first_seed);
    cfg.comparator_override = Some(oracle_min.point.clone());
    let plain = run_caos_reg_erm_epoch(&problem, &cfg).expect("erm run");
    let singleton: Vec<Vec<usize>> = (0..components).map(|j| vec![j]).collect();
    let batched = run_caos_reg_erm_epoch_minibatch(&problem, &singleton, &cfg).expect("erm run");
    let trace_identical = plain.sampled == batched.sampled
        && plain
            .report
            .trace
            .iter()
            .zip(&batched.report.trace)
            .all(|(a, b)| a.iterate == b.iterate);

    // sparsity: a heavier penalty leaves most oracle coordinates at zero and
    // the solver's final iterate must carry exact zeros
    let alpha_sparse = 4.0;
    let sparse_problem =
        build_erm_problem(ErmLossKind::Lasso, &data, alpha_sparse, 1.0).expect("problem");
    let sparse_oracle = numeric_argmin(
        |x| {
            let (v, mut g) = sparse_problem.sum_eval(x);
            let pv = sparse_problem.composite().eval(x);
            let pg = sparse_problem.composite().subgradient(x);
            for (gi, pi) in g.iter_mut().zip(&pg) {
                *gi += pi;
            }
            (v + pv, g)
        },
        &dom,
        &OracleConfig::default(),
    );
    let oracle_zeros = sparse_oracle.point.iter().filter(|v| v.abs() < 1e-6).count();
    let mut sparse_cfg = ErmRunConfig::new(epochs, horizon, first_seed);
    sparse_cfg.comparator_override = Some(sparse_oracle.point.clone());
    sparse_cfg.record_component_gradients = false;
    let sparse_run = run_caos_reg_erm_epoch(&sparse_problem, &sparse_cfg).expect("erm run");
    let exact_zeros = sparse_run
        .report
        .final_iterate
        .iter()
        .filter(|v| **v == 0.0)
        .count();

    let objective_gap = first_final_objective - oracle_min.value;
    let checks = vec![
        CheckResult::new(
            "final_objective_near_oracle_minimum",
            objective_gap.abs() <= 1e-2,
            format!("gap {objective_gap} (solver {first_final_objective} vs oracle {})", oracle_min.value),
        ),
        CheckResult::new(
            "mean_regret_under_data_bound",
            mean_regret <= mean_bound * MEAN_SLACK,
            format!("mean regret {mean_regret} vs bound {mean_bound} (x{MEAN_SLACK})"),
        ),
        CheckResult::new(
            "singleton_minibatch_trace_identity",
            trace_identical,
            format!("seed {first_seed}"),
        ),
        CheckResult::new(
            "composite_sparsity",
            oracle_zeros * 2 >= features && exact_zeros > 0,
            format!("oracle zeros {oracle_zeros}/{features}, solver exact zeros {exact_zeros}"),
        ),
    ];
    suite_result("erm", seeds, checks)
}

/// Runs the requested suites. `seeds_override` replaces each suite's default
/// seed set.
pub fn verify_bounds(suite: Suite, seeds_override: Option<&[u64]>) -> VerifyReport {
    let default_50: Vec<u64> = (0..50).collect();
    let default_30: Vec<u64> = (0..30).collect();
    let pick = |default: &[u64]| -> Vec<u64> {
        seeds_override.map_or_else(|| default.to_vec(), |s| s.to_vec())
    };
    let mut suites = Vec::new();
    if matches!(suite, Suite::Aogd | Suite::All) {
        suites.push(aogd_suite(&pick(&default_50)));
    }
    if matches!(suite, Suite::Aoeg | Suite::All) {
        suites.push(aoeg_suite(&pick(&default_50)));
    }
    if matches!(suite, Suite::Rcd | Suite::All) {
        suites.push(rcd_suite(&pick(&default_50)));
    }
    if matches!(suite, Suite::Erm | Suite::All) {
        suites.push(erm_suite(&pick(&default_30)));
    }
    let all_passed = suites.iter().all(|s| s.passed);
    VerifyReport { suites, all_passed }
}
