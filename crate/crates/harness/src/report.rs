//! Report schema shared by the experiment runner and the CLI. JSON output is
//! deterministic: sorted map keys, no timestamps, and timing only on request.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use aoftrl_core::ftrl::RegretReport;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: String,
    pub seed: u64,
    pub horizon: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_vs_center: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bounds: BTreeMap<String, f64>,
    /// bound / regret for each bound, present when the regret is positive.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bound_regret_ratios: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub final_iterate: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportRow {
    pub fn from_report(algorithm: &str, seed: u64, report: &RegretReport) -> Self {
        let mut ratios = BTreeMap::new();
        if report.realized_regret > 1e-12 {
            for (name, bound) in &report.bounds {
                ratios.insert(name.clone(), bound / report.realized_regret);
            }
        }
        Self {
            algorithm: algorithm.to_string(),
            seed,
            horizon: report.horizon,
            regret: Some(report.realized_regret),
            regret_vs_center: Some(report.regret_vs_center),
            bounds: report.bounds.clone(),
            bound_regret_ratios: ratios,
            final_iterate: report.final_iterate.clone(),
            runtime_ms: None,
            error: None,
        }
    }

    pub fn failed(algorithm: &str, seed: u64, horizon: usize, error: String) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            seed,
            horizon,
            regret: None,
            regret_vs_center: None,
            bounds: BTreeMap::new(),
            bound_regret_ratios: BTreeMap::new(),
            final_iterate: Vec::new(),
            runtime_ms: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmAggregate {
    pub seeds: usize,
    pub failures: usize,
    pub mean_regret: f64,
    pub max_regret: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mean_bounds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config_echo: serde_json::Value,
    pub rows: Vec<ReportRow>,
    pub aggregates: BTreeMap<String, AlgorithmAggregate>,
}

impl ExperimentReport {
    pub fn new(config_echo: serde_json::Value, rows: Vec<ReportRow>) -> Self {
        let mut aggregates = BTreeMap::new();
        let mut by_algo: BTreeMap<String, Vec<&ReportRow>> = BTreeMap::new();
        for row in &rows {
            by_algo.entry(row.algorithm.clone()).or_default().push(row);
        }
        for (algo, group) in by_algo {
            let ok: Vec<&&ReportRow> = group.iter().filter(|r| r.error.is_none()).collect();
            let failures = group.len() - ok.len();
            let mut mean_bounds: BTreeMap<String, f64> = BTreeMap::new();
            for row in &ok {
                for (name, b) in &row.bounds {
                    *mean_bounds.entry(name.clone()).or_insert(0.0) += b;
                }
            }
            let count = ok.len().max(1) as f64;
            for v in mean_bounds.values_mut() {
                *v /= count;
            }
            let regrets: Vec<f64> = ok.iter().filter_map(|r| r.regret).collect();
            aggregates.insert(
                algo,
                AlgorithmAggregate {
                    seeds: group.len(),
                    failures,
                    mean_regret: regrets.iter().sum::<f64>() / (regrets.len().max(1) as f64),
                    max_regret: regrets.iter().fold(f64::NEG_INFINITY, |m, r| m.max(*r)),
                    mean_bounds,
                },
            );
        }
        Self { config_echo, rows, aggregates }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV line per row, mirroring the JSON rows.
    pub fn to_csv(&self) -> String {
        let mut bound_names: Vec<String> = Vec::new();
        for row in &self.rows {
            for name in row.bounds.keys() {
                if !bound_names.contains(name) {
                    bound_names.push(name.clone());
                }
            }
        }
        bound_names.sort();
        let mut out = String::from("algorithm,seed,horizon,regret");
        for name in &bound_names {
            out.push_str(&format!(",bound_{name}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}",
                row.algorithm,
                row.seed,
                row.horizon,
                row.regret.map_or(String::from(""), |r| format!("{r}"))
            ));
            for name in &bound_names {
                match row.bounds.get(name) {
                    Some(b) => out.push_str(&format!(",{b}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}
