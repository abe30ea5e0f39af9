//! Experiment configuration (TOML), validated strictly.

use std::path::PathBuf;

use riskgap::problems::{builtin, candidate_solution};
use riskgap::sampling::draw_sample;
use riskgap::{Decision64, DecisionSpace, Procedure, ProblemInstance64, RiskSpec64, StreamKey};
use serde::{Deserialize, Serialize};

/// Inline problem definitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InlineProblem {
    /// Finite decisions given by a `decisions × scenarios` cost matrix.
    Matrix {
        name: String,
        labels: Vec<String>,
        probabilities: Vec<f64>,
        costs: Vec<Vec<f64>>,
        #[serde(default = "yes")]
        nonneg: bool,
    },
    /// Order quantity on `[lo, hi]` against a discrete demand.
    Newsvendor {
        name: String,
        demands: Vec<f64>,
        probabilities: Vec<f64>,
        underage: f64,
        overage: f64,
        lo: f64,
        hi: f64,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    Builtin(String),
    Inline(InlineProblem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Label(String),
    /// Solve a sample problem of this size on stream `S_0`.
    Saa(usize),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    TwoSample,
    Naive,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: toml::Value,
    risk: RiskSpec64,
    candidate: toml::Value,
    n: usize,
    m: Option<usize>,
    l: Option<usize>,
    k: Option<usize>,
    alpha: Option<f64>,
    procedure: Option<Procedure>,
    macro_reps: Option<usize>,
    master_seed: Option<u64>,
    m_grid: Option<Vec<usize>>,
    bias_reps: Option<usize>,
    estimator: Option<EstimatorChoice>,
    out: Option<PathBuf>,
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub risk: RiskSpec64,
    pub candidate: CandidateSource,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub k: usize,
    pub alpha: f64,
    pub procedure: Procedure,
    pub macro_reps: usize,
    pub master_seed: u64,
    pub m_grid: Vec<usize>,
    pub bias_reps: usize,
    pub estimator: EstimatorChoice,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_K: usize = 30;
pub const DEFAULT_M_FACTOR: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.10;
pub const DEFAULT_MACRO_REPS: usize = 500;
pub const DEFAULT_BIAS_REPS: usize = 10_000;
pub const DEFAULT_M_GRID: [usize; 3] = [5, 50, 500];

fn parse_problem(value: toml::Value, violations: &mut Vec<String>) -> Option<ProblemSource> {
    match value {
        toml::Value::String(name) => {
            if builtin::NAMES.contains(&name.as_str()) {
                Some(ProblemSource::Builtin(name))
            } else {
                violations.push(format!(
                    "problem: unknown built-in `{name}` (available: {})",
                    builtin::NAMES.join(", ")
                ));
                None
            }
        }
        toml::Value::Table(_) => match value.try_into::<InlineProblem>() {
            Ok(p) => Some(ProblemSource::Inline(p)),
            Err(e) => {
                violations.push(format!("problem: {}", e.message()));
                None
            }
        },
        _ => {
            violations.push("problem: expected a built-in name or an inline table".into());
            None
        }
    }
}

fn parse_candidate(value: toml::Value, violations: &mut Vec<String>) -> Option<CandidateSource> {
    match value {
        toml::Value::String(s) => match s.strip_prefix("saa:") {
            Some(n0) => match n0.parse::<usize>() {
                Ok(n0) if n0 >= 1 => Some(CandidateSource::Saa(n0)),
                _ => {
                    violations.push(format!("candidate: `{s}` needs a positive sample size after `saa:`"));
                    None
                }
            },
            None => Some(CandidateSource::Label(s)),
        },
        toml::Value::Array(items) => {
            let point: Option<Vec<f64>> = items
                .iter()
                .map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                .collect();
            match point {
                Some(p) if !p.is_empty() => Some(CandidateSource::Point(p)),
                _ => {
                    violations.push("candidate: inline vector must be a nonempty list of numbers".into());
                    None
                }
            }
        }
        _ => {
            violations.push("candidate: expected a label, `saa:<n0>` or a list of numbers".into());
            None
        }
    }
}

/// Parses and validates a TOML configuration. On failure every violation
/// found is returned, each naming its field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| vec![e.message().to_string()])?;
    let mut violations = Vec::new();
    let problem = parse_problem(raw.problem, &mut violations);
    let candidate = parse_candidate(raw.candidate, &mut violations);

    let n = raw.n;
    let m = raw.m.unwrap_or(DEFAULT_M_FACTOR * n);
    let l = raw.l.unwrap_or(n);
    let k = raw.k.unwrap_or(DEFAULT_K);
    let alpha = raw.alpha.unwrap_or(DEFAULT_ALPHA);
    let procedure = raw.procedure.unwrap_or(Procedure::Mrp);
    let macro_reps = raw.macro_reps.unwrap_or(DEFAULT_MACRO_REPS);
    let m_grid = raw.m_grid.unwrap_or_else(|| DEFAULT_M_GRID.to_vec());
    let bias_reps = raw.bias_reps.unwrap_or(DEFAULT_BIAS_REPS);

    for (field, value) in [("n", n), ("m", m), ("l", l), ("k", k), ("macro_reps", macro_reps), ("bias_reps", bias_reps)] {
        if value < 1 {
            violations.push(format!("{field}: must be at least 1"));
        }
    }
    if m_grid.is_empty() || m_grid.contains(&0) {
        violations.push("m_grid: must be a nonempty list of positive sizes".into());
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        violations.push(format!("alpha: {alpha} is outside (0, 1)"));
    }
    if raw.risk.is_coherent() && procedure != Procedure::Mrp {
        violations.push(format!(
            "procedure: {} is not supported for coherent risk measures (use mrp)",
            procedure.as_str()
        ));
    }
    if let (Some(p), Some(c)) = (&problem, &candidate) {
        let cfg = ExperimentConfig {
            problem: p.clone(),
            risk: raw.risk.clone(),
            candidate: c.clone(),
            n,
            m,
            l,
            k,
            alpha,
            procedure,
            macro_reps,
            master_seed: raw.master_seed.unwrap_or(0),
            m_grid: m_grid.clone(),
            bias_reps,
            estimator: raw.estimator.unwrap_or(EstimatorChoice::TwoSample),
            out: raw.out.clone(),
        };
        match cfg.build_problem() {
            Ok(instance) => {
                if raw.risk.requires_nonnegative() && !instance.nonneg() {
                    violations.push(format!("risk: {} needs an instance with non-negative costs", raw.risk));
                }
                match c {
                    CandidateSource::Label(label) if instance.decision(label).is_none() => {
                        violations.push(format!("candidate: no decision labelled `{label}`"));
                    }
                    CandidateSource::Point(v) if find_point(&instance, v).is_none() => {
                        violations.push(format!("candidate: {v:?} is not a point of the decision space"));
                    }
                    _ => {}
                }
            }
            Err(e) => violations.push(format!("problem: {e}")),
        }
        if violations.is_empty() {
            return Ok(cfg);
        }
    }
    Err(violations)
}

fn find_point(problem: &ProblemInstance64, v: &[f64]) -> Option<Decision64> {
    match problem.space() {
        DecisionSpace::Interval { .. } if v.len() == 1 => problem.point(v[0]).ok(),
        DecisionSpace::Interval { .. } => None,
        DecisionSpace::Finite(list) => list.iter().find(|d| d.point == v).cloned(),
    }
}

impl ExperimentConfig {
    pub fn build_problem(&self) -> riskgap::Result<ProblemInstance64> {
        match &self.problem {
            ProblemSource::Builtin(name) => builtin::by_name(name)
                .ok_or_else(|| riskgap::Error::InvalidSpace(format!("unknown built-in `{name}`"))),
            ProblemSource::Inline(InlineProblem::Matrix {
                name,
                labels,
                probabilities,
                costs,
                nonneg,
            }) => {
                let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
                ProblemInstance64::from_cost_matrix(name.clone(), &labels, probabilities, costs.clone(), *nonneg)
            }
            ProblemSource::Inline(InlineProblem::Newsvendor {
                name,
                demands,
                probabilities,
                underage,
                overage,
                lo,
                hi,
            }) => ProblemInstance64::newsvendor(name.clone(), demands, probabilities, *underage, *overage, *lo, *hi),
        }
    }

    /// The candidate `x̂`; `saa:<n0>` solves a sample problem on stream `S_0`.
    pub fn resolve_candidate(&self, problem: &ProblemInstance64) -> riskgap::Result<Decision64> {
        match &self.candidate {
            CandidateSource::Label(label) => problem
                .decision(label)
                .cloned()
                .ok_or_else(|| riskgap::Error::NotInSpace(label.clone())),
            CandidateSource::Point(v) => {
                find_point(problem, v).ok_or_else(|| riskgap::Error::NotInSpace(format!("{v:?}")))
            }
            CandidateSource::Saa(n0) => {
                let key = StreamKey::new(self.master_seed, "S_0");
                let s0 = draw_sample(problem.distribution(), *n0, &key)?;
                candidate_solution(problem, &self.risk, &s0)
            }
        }
    }

    /// SHA-256 of the canonical JSON form of the validated configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}
