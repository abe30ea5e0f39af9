//! Simulation studies against oracle truth: bias of the estimators as the
//! fresh-sample size grows, and empirical coverage of the bound procedures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, Procedure, ReplicationPlan};
use crate::error::{Error, Result};
use crate::gap;
use crate::oracle::{self, EnumerationSizes, Estimator};
use crate::problems::{self, Decision, ProblemInstance};
use crate::risk::{self, Costs, RiskSpec, UCertificate};
use crate::sampling::{draw_sample, StreamKey};
use crate::scalar::{self, CompensatedSum, Scalar};

/// How a bias-table row is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMethod {
    /// Enumerate when within the oracle budget, otherwise Monte Carlo.
    Auto,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStudyConfig {
    pub n: usize,
    pub m_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub method: StudyMethod,
}

/// One row of the bias table. Monte Carlo entries carry standard errors;
/// exact entries have zero standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub n: usize,
    pub m: usize,
    pub method: String,
    pub reps: usize,
    pub e_zhat_n: f64,
    pub e_zhat_nm: f64,
    pub e_zstar_n: f64,
    pub e_gap_n: f64,
    pub e_gap_nm: f64,
    pub z_hat: f64,
    pub z_star: f64,
    pub true_gap: f64,
    /// `E[ẑ_{n,m}] - ẑ`.
    pub bias_zhat_nm: f64,
    pub bias_se: f64,
    pub gap_nm_se: f64,
}

#[derive(Default)]
struct Column(Vec<f64>);

impl Column {
    fn mean(&self) -> f64 {
        scalar::mean(self.0.iter().copied()).unwrap_or(f64::NAN)
    }

    fn std_error(&self) -> f64 {
        scalar::sample_variance(&self.0).map_or(0.0, |v| (v / self.0.len() as f64).sqrt())
    }
}

#[derive(Default)]
struct Tally {
    zhat_n: Column,
    zhat_nm: Column,
    zstar_n: Column,
    gap_n: Column,
    gap_nm: Column,
}

/// `E[ẑ_{n,m} | S_m]`: the plug-in at `u*_m` under the true distribution.
///
/// Averaging this over fresh samples estimates `E[ẑ_{n,m}]` for every `n`
/// with lower variance than the raw estimator.
pub fn conditional_plugin<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    s_m: &crate::sampling::Sample<T>,
) -> Result<T> {
    let fresh = problems::cost_vector(problem, x_hat, s_m)?;
    let u = risk::minimize_u(spec, &Costs::equal(&fresh))?.certificate;
    true_plugin(problem, spec, x_hat, &u)
}

/// `E[r(f_x̂, u)]` under the true distribution.
pub fn true_plugin<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    u: &UCertificate<T>,
) -> Result<T> {
    let outcome_costs = problem.outcome_costs(x_hat);
    let weighted = Costs::weighted(&outcome_costs, problem.distribution().probabilities())?;
    risk::plugin_estimate(spec, &weighted, u)
}

fn bias_row_exact<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    n: usize,
    m: usize,
    truth: &oracle::ExactSolution<T>,
) -> Result<BiasRow> {
    let sizes = EnumerationSizes::new(n, m, 1);
    let e = |est| oracle::exact_estimator_expectation(est, problem, spec, x_hat, sizes).map(|v| v.as_f64());
    let e_zhat_nm = e(Estimator::ZHatNM)?;
    let z_hat = truth.z_hat.as_f64();
    Ok(BiasRow {
        n,
        m,
        method: "exact".into(),
        reps: 0,
        e_zhat_n: e(Estimator::EmpiricalRiskAtCandidate)?,
        e_zhat_nm,
        e_zstar_n: e(Estimator::ZStarN)?,
        e_gap_n: e(Estimator::GapNaive)?,
        e_gap_nm: e(Estimator::GapNM)?,
        z_hat,
        z_star: truth.z_star.as_f64(),
        true_gap: truth.true_gap.as_f64(),
        bias_zhat_nm: e_zhat_nm - z_hat,
        bias_se: 0.0,
        gap_nm_se: 0.0,
    })
}

fn bias_row_mc<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    config: &BiasStudyConfig,
    m: usize,
    truth: &oracle::ExactSolution<T>,
) -> Result<BiasRow> {
    if config.reps < 2 {
        return Err(Error::TooFew {
            needed: 2,
            got: config.reps,
        });
    }
    let dist = problem.distribution();
    let base = StreamKey::new(config.master_seed, format!("bias/m-{m}"));
    // Collected in order and summed sequentially, so results do not depend on
    // thread scheduling.
    let draws: Vec<[f64; 5]> = (0..config.reps)
        .into_par_iter()
        .map(|i| -> Result<[f64; 5]> {
            let rep = base.child(&format!("rep-{i}"));
            let s_n = draw_sample(dist, config.n, &rep.child("Sn"))?;
            let s_m = draw_sample(dist, m, &rep.child("Sm"))?;
            let naive = gap::gap_naive(problem, spec, x_hat, &s_n)?;
            let two = gap::gap_two_sample(problem, spec, x_hat, &s_n, &s_m)?;
            Ok([
                naive.z_hat.as_f64(),
                true_plugin(problem, spec, x_hat, &two.u_certificate)?.as_f64(),
                naive.z_star_n.as_f64(),
                naive.gap.as_f64(),
                two.gap.as_f64(),
            ])
        })
        .collect::<Result<_>>()?;
    let column = |j: usize| Column(draws.iter().map(|d| d[j]).collect());
    let tally = Tally {
        zhat_n: column(0),
        zhat_nm: column(1),
        zstar_n: column(2),
        gap_n: column(3),
        gap_nm: column(4),
    };
    let z_hat = truth.z_hat.as_f64();
    Ok(BiasRow {
        n: config.n,
        m,
        method: "monte_carlo".into(),
        reps: config.reps,
        e_zhat_n: tally.zhat_n.mean(),
        e_zhat_nm: tally.zhat_nm.mean(),
        e_zstar_n: tally.zstar_n.mean(),
        e_gap_n: tally.gap_n.mean(),
        e_gap_nm: tally.gap_nm.mean(),
        z_hat,
        z_star: truth.z_star.as_f64(),
        true_gap: truth.true_gap.as_f64(),
        bias_zhat_nm: tally.zhat_nm.mean() - z_hat,
        bias_se: tally.zhat_nm.std_error(),
        gap_nm_se: tally.gap_nm.std_error(),
    })
}

/// Expectations of `ẑ_n`, `ẑ_{n,m}`, `z*_n`, `G_n`, `G_{n,m}` for each `m`
/// in the grid, against the oracle's `ẑ`, `z*`, `G`.
///
/// Monte Carlo rows estimate `E[ẑ_{n,m}]` by averaging [`true_plugin`] at
/// each replication's `u*_m` (see [`conditional_plugin`]); the other columns
/// are plain replication means.
pub fn bias_study<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    config: &BiasStudyConfig,
) -> Result<Vec<BiasRow>> {
    if spec.is_coherent() {
        return Err(Error::Unsupported(
            "the bias study covers the two-sample estimator only".into(),
        ));
    }
    if config.n == 0 || config.m_grid.contains(&0) {
        return Err(Error::ZeroSampleSize);
    }
    let truth = oracle::exact_solution(problem, spec, x_hat)?;
    let support = problem.distribution().support_size();
    config
        .m_grid
        .iter()
        .map(|&m| {
            let atoms = oracle::enumeration_atoms(support, Estimator::GapNM, EnumerationSizes::new(config.n, m, 1));
            if config.method == StudyMethod::Auto && atoms <= oracle::ENUMERATION_BUDGET {
                bias_row_exact(problem, spec, x_hat, config.n, m, &truth)
            } else {
                bias_row_mc(problem, spec, x_hat, config, m, &truth)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub plan: ReplicationPlan,
    pub procedure: Procedure,
    pub alpha: f64,
    pub macro_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub macro_rep: usize,
    pub seed: u64,
    pub point_estimate: f64,
    pub b_alpha: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub estimator: String,
    /// `false` for the naive estimator, which does not support a bound.
    pub valid_basis: bool,
    pub procedure: Procedure,
    pub alpha: f64,
    pub macro_reps: usize,
    pub true_gap: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_point_estimate: f64,
    /// Mean point estimate minus the true gap.
    pub bias: f64,
    pub mean_b_alpha: f64,
    pub rows: Vec<CoverageRow>,
}

/// Seed of macro-replication `r`.
pub fn macro_seed(master_seed: u64, r: usize) -> u64 {
    StreamKey::new(master_seed, format!("macro-{r}")).derived_seed()
}

/// Frequency of `{B^α ≥ G}` over independent repetitions of the bound pipeline.
pub fn coverage_study<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    config: &CoverageConfig,
) -> Result<CoverageReport> {
    if config.macro_reps == 0 {
        return Err(Error::TooFew { needed: 1, got: 0 });
    }
    let truth = oracle::exact_solution(problem, spec, x_hat)?;
    let g = truth.true_gap.as_f64();
    let rows: Vec<CoverageRow> = (0..config.macro_reps)
        .into_par_iter()
        .map(|r| -> Result<CoverageRow> {
            let seed = macro_seed(config.plan.master_seed, r);
            let plan = ReplicationPlan {
                master_seed: seed,
                ..config.plan
            };
            let report = if plan.naive {
                let estimates = bounds::run_replications(problem, spec, x_hat, &plan)?;
                let gaps: Vec<T> = estimates.iter().map(|e| e.gap).collect();
                bounds::mrp_bound(&gaps, config.alpha)?
            } else {
                bounds::bound_procedure(problem, spec, x_hat, &plan, config.procedure, config.alpha)?.0
            };
            let b = report.b_alpha.as_f64();
            Ok(CoverageRow {
                macro_rep: r,
                seed,
                point_estimate: report.point_estimate.as_f64(),
                b_alpha: b,
                covered: b >= g,
            })
        })
        .collect::<Result<_>>()?;
    let k = rows.len() as f64;
    let hits = rows.iter().filter(|r| r.covered).count() as f64;
    let coverage = hits / k;
    let mean = |f: fn(&CoverageRow) -> f64| {
        let mut acc = CompensatedSum::new();
        for r in &rows {
            acc.add(f(r));
        }
        acc.value() / k
    };
    let mean_point_estimate = mean(|r| r.point_estimate);
    Ok(CoverageReport {
        estimator: if config.plan.naive { "naive" } else { "two_sample" }.into(),
        valid_basis: !config.plan.naive,
        procedure: if config.plan.naive { Procedure::Mrp } else { config.procedure },
        alpha: config.alpha,
        macro_reps: config.macro_reps,
        true_gap: g,
        coverage,
        coverage_se: (coverage * (1.0 - coverage) / k).sqrt(),
        mean_point_estimate,
        bias: mean_point_estimate - g,
        mean_b_alpha: mean(|r| r.b_alpha),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_row_on_two_point_instance() {
        let p = builtin::twopoint::<f64>();
        let x = p.decision("x").unwrap().clone();
        let config = BiasStudyConfig {
            n: 5,
            m_grid: vec![5],
            reps: 10,
            master_seed: 1,
            method: StudyMethod::Auto,
        };
        let rows = bias_study(&p, &RiskSpec::cvar(0.8).unwrap(), &x, &config).unwrap();
        let r = &rows[0];
        assert_eq!(r.method, "exact");
        assert_abs_diff_eq!(r.e_zhat_n, 4.0951, epsilon = 1e-12);
        assert_abs_diff_eq!(r.e_zhat_nm, 5.0 + 5.0 * (1.0 - 0.9f64.powi(5) - 0.5 * 0.9f64.powi(4)), epsilon = 1e-12);
        assert!(r.e_zhat_n < r.z_hat && r.e_zhat_nm > r.z_hat);
    }

    #[test]
    fn monte_carlo_row_agrees_with_enumeration() {
        let p = builtin::twopoint::<f64>();
        let x = p.decision("x").unwrap().clone();
        let spec = RiskSpec::cvar(0.8).unwrap();
        let mut config = BiasStudyConfig {
            n: 5,
            m_grid: vec![5],
            reps: 20_000,
            master_seed: 7,
            method: StudyMethod::MonteCarlo,
        };
        let mc = bias_study(&p, &spec, &x, &config).unwrap().remove(0);
        config.method = StudyMethod::Auto;
        let exact = bias_study(&p, &spec, &x, &config).unwrap().remove(0);
        assert!((mc.e_zhat_nm - exact.e_zhat_nm).abs() < 4.0 * mc.bias_se);
        assert!((mc.e_gap_nm - exact.e_gap_nm).abs() < 4.0 * mc.gap_nm_se);
    }

    #[test]
    fn degenerate_biases_vanish() {
        let p = builtin::degenerate::<f64>();
        let x = p.decision("b").unwrap().clone();
        let config = BiasStudyConfig {
            n: 3,
            m_grid: vec![2, 40],
            reps: 50,
            master_seed: 3,
            method: StudyMethod::Auto,
        };
        for row in bias_study(&p, &RiskSpec::cvar(0.5).unwrap(), &x, &config).unwrap() {
            assert_eq!(row.bias_zhat_nm, 0.0);
            assert_eq!(row.e_gap_nm, row.true_gap);
            assert_eq!(row.e_gap_n, row.true_gap);
        }
    }

    #[test]
    fn zero_variance_coverage_is_one() {
        let p = builtin::degenerate::<f64>();
        let x = p.decision("b").unwrap().clone();
        let config = CoverageConfig {
            plan: ReplicationPlan::new(5, 3, 6, 11),
            procedure: Procedure::Mrp,
            alpha: 0.1,
            macro_reps: 100,
        };
        let report = coverage_study(&p, &RiskSpec::cvar(0.5).unwrap(), &x, &config).unwrap();
        assert_eq!(report.coverage, 1.0);
        assert_eq!(report.coverage_se, 0.0);
    }

    #[test]
    fn naive_coverage_is_flagged() {
        let p = builtin::twodec::<f64>();
        let x = p.decision("x1").unwrap().clone();
        let mut plan = ReplicationPlan::new(10, 10, 10, 5);
        plan.naive = true;
        let config = CoverageConfig {
            plan,
            procedure: Procedure::Mrp,
            alpha: 0.1,
            macro_reps: 20,
        };
        let report = coverage_study(&p, &RiskSpec::cvar(0.5).unwrap(), &x, &config).unwrap();
        assert!(!report.valid_basis);
        assert_eq!(report.estimator, "naive");
    }
}
