//! The four experiment workflows and their report files.

use std::fs;
use std::io;
use std::path::Path;

use riskgap::bounds::{self, ReplicationPlan};
use riskgap::gap;
use riskgap::oracle;
use riskgap::sampling::draw_sample;
use riskgap::study::{self, BiasStudyConfig, CoverageConfig, StudyMethod};
use riskgap::{GapEstimate64, StreamKey, UCertificate64};
use serde::Serialize;
use serde_json::json;

use crate::config::{EstimatorChoice, ExperimentConfig};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; exit code 2.
    Config(Vec<String>),
    /// Failure while running the experiment; exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(v) => write!(f, "invalid configuration:\n  {}", v.join("\n  ")),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<riskgap::Error> for CliError {
    fn from(e: riskgap::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `u` certificate as `name=value` pairs joined by `;`.
pub fn format_certificate(u: &UCertificate64) -> String {
    u.columns()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Serialize)]
struct GapRow<'a> {
    replication: usize,
    mode: &'a str,
    n: usize,
    m: Option<usize>,
    l: Option<usize>,
    z_hat: f64,
    z_star_n: f64,
    gap: f64,
    u: String,
    candidate: &'a str,
    saa_decision: &'a str,
    selected_vertex: Option<usize>,
}

fn write_gaps(path: &Path, estimates: &[GapEstimate64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, e) in estimates.iter().enumerate() {
        w.serialize(GapRow {
            replication: i,
            mode: e.mode.as_str(),
            n: e.sizes.n,
            m: e.sizes.m,
            l: e.sizes.l,
            z_hat: e.z_hat,
            z_star_n: e.z_star_n,
            gap: e.gap,
            u: format_certificate(&e.u_certificate),
            candidate: &e.candidate.label,
            saa_decision: &e.saa_decision.label,
            selected_vertex: e.selected_vertex,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_report(out: &Path, command: &str, config: &ExperimentConfig, result: serde_json::Value) -> CliResult<()> {
    let report = json!({
        "command": command,
        "versions": {
            "riskgap": riskgap::VERSION,
            "riskgap-cli": env!("CARGO_PKG_VERSION"),
        },
        "config_hash": config.hash(),
        "master_seed": config.master_seed,
        "config": config,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(out.join("report.json"), text + "\n")?;
    Ok(())
}

fn to_json<S: Serialize>(value: &S) -> serde_json::Value {
    serde_json::to_value(value).expect("report value serializes")
}

fn plan(config: &ExperimentConfig) -> ReplicationPlan {
    ReplicationPlan {
        k: config.k,
        n: config.n,
        m: config.m,
        l: config.l,
        master_seed: config.master_seed,
        naive: false,
    }
}

/// One gap estimate on streams `S_n`, `S_m` (and `S_l` for coherent measures).
pub fn cmd_gap(config: &ExperimentConfig, out: &Path) -> CliResult<GapEstimate64> {
    let problem = config.build_problem()?;
    let x_hat = config.resolve_candidate(&problem)?;
    let dist = problem.distribution();
    let key = |label: &str| StreamKey::new(config.master_seed, label);
    let s_n = draw_sample(dist, config.n, &key("S_n"))?;
    let s_m = draw_sample(dist, config.m, &key("S_m"))?;
    let estimate = if config.risk.is_coherent() {
        let s_l = draw_sample(dist, config.l, &key("S_l"))?;
        gap::gap_coherent(&problem, &config.risk, &x_hat, &s_n, &s_m, &s_l)?
    } else {
        gap::gap_two_sample(&problem, &config.risk, &x_hat, &s_n, &s_m)?
    };
    let truth = oracle::exact_solution(&problem, &config.risk, &x_hat).ok();
    fs::create_dir_all(out)?;
    write_gaps(&out.join("gaps.csv"), std::slice::from_ref(&estimate))?;
    write_report(
        out,
        "gap",
        config,
        json!({ "estimate": to_json(&estimate), "oracle": to_json(&truth) }),
    )?;
    Ok(estimate)
}

#[derive(Serialize)]
struct BoundSummary {
    procedure: &'static str,
    alpha: f64,
    k: usize,
    n: usize,
    m: usize,
    point_estimate: f64,
    b_alpha: f64,
    seed: u64,
}

/// Bound procedure from the `procedure` field: replications, bound, summary.
pub fn cmd_mrp(config: &ExperimentConfig, out: &Path) -> CliResult<riskgap::BoundReport64> {
    if config.estimator == EstimatorChoice::Naive {
        return Err(CliError::Config(vec![
            "estimator: the naive estimator is only available in bias and coverage studies".into(),
        ]));
    }
    if config.procedure == riskgap::Procedure::Mrp && config.k < 2 {
        return Err(CliError::Config(vec!["k: mrp needs at least 2 replications".into()]));
    }
    let problem = config.build_problem()?;
    let x_hat = config.resolve_candidate(&problem)?;
    let (report, estimates) =
        bounds::bound_procedure(&problem, &config.risk, &x_hat, &plan(config), config.procedure, config.alpha)?;
    fs::create_dir_all(out)?;
    write_gaps(&out.join("gaps.csv"), &estimates)?;
    write_rows(
        &out.join("summary.csv"),
        &[BoundSummary {
            procedure: report.procedure.as_str(),
            alpha: report.alpha,
            k: report.k,
            n: config.n,
            m: config.m,
            point_estimate: report.point_estimate,
            b_alpha: report.b_alpha,
            seed: config.master_seed,
        }],
    )?;
    write_report(out, "mrp", config, to_json(&report))?;
    Ok(report)
}

/// Bias table over `m_grid` against oracle truth.
pub fn cmd_bias_study(config: &ExperimentConfig, out: &Path) -> CliResult<Vec<study::BiasRow>> {
    let problem = config.build_problem()?;
    let x_hat = config.resolve_candidate(&problem)?;
    let rows = study::bias_study(
        &problem,
        &config.risk,
        &x_hat,
        &BiasStudyConfig {
            n: config.n,
            m_grid: config.m_grid.clone(),
            reps: config.bias_reps,
            master_seed: config.master_seed,
            method: StudyMethod::Auto,
        },
    )?;
    fs::create_dir_all(out)?;
    write_rows(&out.join("bias_table.csv"), &rows)?;
    write_report(out, "bias-study", config, json!({ "rows": to_json(&rows) }))?;
    Ok(rows)
}

#[derive(Serialize)]
struct CoverageSummary<'a> {
    estimator: &'a str,
    valid_basis: bool,
    procedure: &'static str,
    alpha: f64,
    macro_reps: usize,
    true_gap: f64,
    coverage: f64,
    coverage_se: f64,
    mean_point_estimate: f64,
    bias: f64,
    mean_b_alpha: f64,
}

/// Coverage frequency of `{B^α ≥ G}` over `macro_reps` repetitions.
pub fn cmd_coverage(config: &ExperimentConfig, out: &Path) -> CliResult<study::CoverageReport> {
    if config.macro_reps < 100 {
        return Err(CliError::Config(vec!["macro_reps: coverage needs at least 100".into()]));
    }
    let problem = config.build_problem()?;
    let x_hat = config.resolve_candidate(&problem)?;
    let mut plan = plan(config);
    plan.naive = config.estimator == EstimatorChoice::Naive;
    let report = study::coverage_study(
        &problem,
        &config.risk,
        &x_hat,
        &CoverageConfig {
            plan,
            procedure: config.procedure,
            alpha: config.alpha,
            macro_reps: config.macro_reps,
        },
    )?;
    fs::create_dir_all(out)?;
    write_rows(&out.join("coverage.csv"), &report.rows)?;
    write_rows(
        &out.join("summary.csv"),
        &[CoverageSummary {
            estimator: &report.estimator,
            valid_basis: report.valid_basis,
            procedure: report.procedure.as_str(),
            alpha: report.alpha,
            macro_reps: report.macro_reps,
            true_gap: report.true_gap,
            coverage: report.coverage,
            coverage_se: report.coverage_se,
            mean_point_estimate: report.mean_point_estimate,
            bias: report.bias,
            mean_b_alpha: report.mean_b_alpha,
        }],
    )?;
    let mut result = to_json(&report);
    result["notes"] = json!([
        "coverage target 1 - alpha is approximate; acceptance tolerance 0.05",
        if report.valid_basis { "two-sample estimator" } else { "naive estimator: not a valid upper-bound basis" },
    ]);
    write_report(out, "coverage", config, result)?;
    Ok(report)
}
