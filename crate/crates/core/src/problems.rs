//! Stochastic-program instances and their sample average approximations.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{self, Costs, RiskMinimum, RiskSpec, SpectralMeasure, UCertificate};
use crate::sampling::{FiniteDistribution, Sample, Scenario};
use crate::scalar::Scalar;

/// Absolute x-tolerance of the golden-section search on interval spaces.
pub const GOLDEN_TOLERANCE: f64 = 1e-8;

/// A point of the decision space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Decision<T> {
    pub label: String,
    pub point: Vec<T>,
    /// Position in a finite decision list.
    pub index: Option<usize>,
}

impl<T: Scalar> fmt::Display for Decision<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionSpace<T> {
    Finite(Vec<Decision<T>>),
    /// One-dimensional interval; `convex` is the author's declaration that
    /// `x ↦ ρ(f_x)` is convex, which golden-section search relies on.
    Interval { lo: T, hi: T, convex: bool },
}

/// What a cost function sees of a scenario.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioView<'a, T> {
    pub index: Option<usize>,
    pub realization: &'a [T],
}

pub type CostFn<T> = Arc<dyn Fn(&Decision<T>, ScenarioView<'_, T>) -> T + Send + Sync>;

#[derive(Clone)]
pub struct ProblemInstance<T> {
    name: String,
    space: DecisionSpace<T>,
    distribution: FiniteDistribution<T>,
    cost: CostFn<T>,
    nonneg: bool,
}

impl<T: Scalar> fmt::Debug for ProblemInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("distribution", &self.distribution)
            .field("nonneg", &self.nonneg)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(
        name: impl Into<String>,
        space: DecisionSpace<T>,
        distribution: FiniteDistribution<T>,
        cost: CostFn<T>,
        nonneg: bool,
    ) -> Result<Self> {
        let name = name.into();
        let space = match space {
            DecisionSpace::Finite(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidSpace("empty decision list".into()));
                }
                let list: Vec<Decision<T>> = list
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| Decision { index: Some(i), ..d })
                    .collect();
                for (i, d) in list.iter().enumerate() {
                    if list[..i].iter().any(|e| e.label == d.label) {
                        return Err(Error::InvalidSpace(format!("duplicate label `{}`", d.label)));
                    }
                }
                DecisionSpace::Finite(list)
            }
            DecisionSpace::Interval { lo, hi, convex } => {
                if lo >= hi || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidSpace(format!("interval [{lo}, {hi}]")));
                }
                DecisionSpace::Interval { lo, hi, convex }
            }
        };
        let problem = Self {
            name,
            space,
            distribution,
            cost,
            nonneg,
        };
        problem.check_costs()?;
        Ok(problem)
    }

    /// Finite instance given by a `decisions × scenarios` cost matrix.
    pub fn from_cost_matrix(
        name: impl Into<String>,
        labels: &[&str],
        probabilities: &[T],
        matrix: Vec<Vec<T>>,
        nonneg: bool,
    ) -> Result<Self> {
        if matrix.len() != labels.len() {
            return Err(Error::InvalidSpace(format!(
                "{} labels but {} cost rows",
                labels.len(),
                matrix.len()
            )));
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != probabilities.len()) {
            return Err(Error::InvalidSpace(format!(
                "cost row has {} entries, expected {}",
                row.len(),
                probabilities.len()
            )));
        }
        let outcomes = (0..probabilities.len()).map(|j| vec![T::from_count(j)]).collect();
        let distribution = FiniteDistribution::new(outcomes, probabilities.to_vec())?;
        let space = DecisionSpace::Finite(
            labels
                .iter()
                .map(|l| Decision {
                    label: l.to_string(),
                    point: Vec::new(),
                    index: None,
                })
                .collect(),
        );
        let cost: CostFn<T> = Arc::new(move |d: &Decision<T>, s: ScenarioView<'_, T>| {
            matrix[d.index.expect("finite decision")][s.index.expect("finite scenario")]
        });
        Self::new(name, space, distribution, cost, nonneg)
    }

    /// Newsvendor with order quantity in `[lo, hi]` and cost
    /// `underage·(D - q)^+ + overage·(q - D)^+`.
    pub fn newsvendor(
        name: impl Into<String>,
        demands: &[T],
        probabilities: &[T],
        underage: T,
        overage: T,
        lo: T,
        hi: T,
    ) -> Result<Self> {
        if underage < T::zero() || overage < T::zero() {
            return Err(Error::InvalidSpace("newsvendor costs must be non-negative".into()));
        }
        let distribution = FiniteDistribution::scalar(demands, probabilities)?;
        let cost: CostFn<T> = Arc::new(move |d: &Decision<T>, s: ScenarioView<'_, T>| {
            let q = d.point[0];
            let demand = s.realization[0];
            underage * (demand - q).max(T::zero()) + overage * (q - demand).max(T::zero())
        });
        Self::new(
            name,
            DecisionSpace::Interval {
                lo,
                hi,
                convex: true,
            },
            distribution,
            cost,
            true,
        )
    }

    fn check_costs(&self) -> Result<()> {
        let probe: Vec<Decision<T>> = match &self.space {
            DecisionSpace::Finite(list) => list.clone(),
            DecisionSpace::Interval { lo, hi, .. } => (0..=100)
                .map(|i| {
                    let x = *lo + (*hi - *lo) * T::from_count(i) / T::from_count(100);
                    self.interval_decision(x)
                })
                .collect(),
        };
        for d in &probe {
            for j in 0..self.distribution.support_size() {
                let c = self.cost_of(d, &Scenario::Outcome(j));
                if !c.is_finite() {
                    return Err(Error::InvalidSpace(format!(
                        "cost of `{d}` in scenario {j} is not finite"
                    )));
                }
                if self.nonneg && c < T::zero() {
                    return Err(Error::InvalidSpace(format!(
                        "cost of `{d}` in scenario {j} is negative but instance declares non-negative costs"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &DecisionSpace<T> {
        &self.space
    }

    pub fn distribution(&self) -> &FiniteDistribution<T> {
        &self.distribution
    }

    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn is_finite_space(&self) -> bool {
        matches!(self.space, DecisionSpace::Finite(_))
    }

    /// Finite decisions, in order (empty for interval spaces).
    pub fn decisions(&self) -> &[Decision<T>] {
        match &self.space {
            DecisionSpace::Finite(list) => list,
            DecisionSpace::Interval { .. } => &[],
        }
    }

    pub fn decision(&self, label: &str) -> Option<&Decision<T>> {
        self.decisions().iter().find(|d| d.label == label)
    }

    fn interval_decision(&self, x: T) -> Decision<T> {
        Decision {
            label: format!("{x}"),
            point: vec![x],
            index: None,
        }
    }

    /// Decision at `x` of an interval space.
    pub fn point(&self, x: T) -> Result<Decision<T>> {
        match self.space {
            DecisionSpace::Interval { lo, hi, .. } if x >= lo && x <= hi => Ok(self.interval_decision(x)),
            _ => Err(Error::NotInSpace(format!("{x}"))),
        }
    }

    pub fn contains(&self, x: &Decision<T>) -> bool {
        match &self.space {
            DecisionSpace::Finite(list) => x.index.and_then(|i| list.get(i)) == Some(x),
            DecisionSpace::Interval { lo, hi, .. } => {
                x.point.len() == 1 && x.point[0] >= *lo && x.point[0] <= *hi
            }
        }
    }

    #[inline]
    pub fn cost_of(&self, x: &Decision<T>, scenario: &Scenario<T>) -> T {
        let view = match scenario {
            Scenario::Outcome(i) => ScenarioView {
                index: Some(*i),
                realization: self.distribution.outcome(*i),
            },
            Scenario::Realization(v) => ScenarioView {
                index: None,
                realization: v,
            },
        };
        (self.cost)(x, view)
    }

    /// Cost of `x` in each support outcome, in support order.
    pub fn outcome_costs(&self, x: &Decision<T>) -> Vec<T> {
        (0..self.distribution.support_size())
            .map(|j| self.cost_of(x, &Scenario::Outcome(j)))
            .collect()
    }
}

fn ensure_member<T: Scalar>(problem: &ProblemInstance<T>, x: &Decision<T>) -> Result<()> {
    if problem.contains(x) {
        Ok(())
    } else {
        Err(Error::NotInSpace(x.label.clone()))
    }
}

/// `f(x, ω^i)` for every scenario of the sample, in sample order.
pub fn cost_vector<T: Scalar>(
    problem: &ProblemInstance<T>,
    x: &Decision<T>,
    sample: &Sample<T>,
) -> Result<Vec<T>> {
    ensure_member(problem, x)?;
    Ok(costs_unchecked(problem, x, sample))
}

fn costs_unchecked<T: Scalar>(problem: &ProblemInstance<T>, x: &Decision<T>, sample: &Sample<T>) -> Vec<T> {
    if let DecisionSpace::Finite(_) = problem.space {
        // Tabulate once per outcome; samples are usually much larger than the support.
        let table = problem.outcome_costs(x);
        sample
            .scenarios()
            .iter()
            .map(|s| match s {
                Scenario::Outcome(i) => table[*i],
                other => problem.cost_of(x, other),
            })
            .collect()
    } else {
        sample.scenarios().iter().map(|s| problem.cost_of(x, s)).collect()
    }
}

/// `ρ^n(f_x)` on the sample together with its certificate.
pub fn empirical_risk<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x: &Decision<T>,
    sample: &Sample<T>,
) -> Result<RiskMinimum<T>> {
    let costs = cost_vector(problem, x, sample)?;
    risk::minimize_u(spec, &Costs::equal(&costs))
}

/// Solution of the sample problem `min_x ρ^n(f_x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SaaSolution<T> {
    pub decision: Decision<T>,
    pub certificate: UCertificate<T>,
    pub value: T,
}

/// Minimizes `ρ^n(f_x)` jointly over `(x, u)`: the inner `u` problem is
/// solved in closed form, the outer one by enumeration (finite spaces) or
/// golden-section search (declared-convex intervals). Ties go to the first
/// decision.
pub fn solve_saa<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    sample: &Sample<T>,
) -> Result<SaaSolution<T>> {
    if spec.is_coherent() {
        return Err(Error::Unsupported(
            "coherent sample problems are solved at a fixed vertex".into(),
        ));
    }
    if spec.requires_nonnegative() && !problem.nonneg {
        return Err(Error::NonNegativeRequired(problem.name.clone()));
    }
    solve_unchecked(problem, spec, sample)
}

fn solve_unchecked<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    sample: &Sample<T>,
) -> Result<SaaSolution<T>> {
    let evaluate = |x: &Decision<T>| -> Result<RiskMinimum<T>> {
        let costs = costs_unchecked(problem, x, sample);
        risk::minimize_u(spec, &Costs::equal(&costs))
    };
    match &problem.space {
        DecisionSpace::Finite(list) => {
            let mut best: Option<(usize, RiskMinimum<T>)> = None;
            for (i, x) in list.iter().enumerate() {
                let r = evaluate(x)?;
                if best.as_ref().is_none_or(|(_, b)| r.value < b.value) {
                    best = Some((i, r));
                }
            }
            let (i, r) = best.expect("nonempty decision list");
            Ok(SaaSolution {
                decision: list[i].clone(),
                certificate: r.certificate,
                value: r.value,
            })
        }
        DecisionSpace::Interval { lo, hi, convex } => {
            if !convex {
                return Err(Error::NotConvex);
            }
            let objective = |x: T| -> Result<T> { Ok(evaluate(&problem.interval_decision(x))?.value) };
            let x = golden_section(objective, *lo, *hi, T::lit(GOLDEN_TOLERANCE))?;
            // Compare against the endpoints; leftmost wins ties.
            let mut best: Option<(T, RiskMinimum<T>)> = None;
            for cand in [*lo, x, *hi] {
                let r = evaluate(&problem.interval_decision(cand))?;
                if best.as_ref().is_none_or(|(_, b)| r.value < b.value) {
                    best = Some((cand, r));
                }
            }
            let (x, r) = best.expect("three candidates");
            Ok(SaaSolution {
                decision: problem.interval_decision(x),
                certificate: r.certificate,
                value: r.value,
            })
        }
    }
}

/// Golden-section search for the minimizer of a unimodal function.
pub fn golden_section<T: Scalar>(
    mut f: impl FnMut(T) -> Result<T>,
    lo: T,
    hi: T,
    tolerance: T,
) -> Result<T> {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tolerance {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok((a + b) / T::lit(2.0))
}

/// `min_x ∫ CVaR^n_α(f_x) dμ(α)` for one spectral vertex.
pub fn solve_saa_fixed_mu<T: Scalar>(
    problem: &ProblemInstance<T>,
    vertex: &SpectralMeasure<T>,
    sample: &Sample<T>,
) -> Result<SaaSolution<T>> {
    let spec = RiskSpec::Spectral {
        atoms: vertex.clone(),
    };
    solve_saa(problem, &spec, sample)
}

/// Candidate `x̂` from a sample problem; the `u` part is discarded.
pub fn candidate_solution<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    sample: &Sample<T>,
) -> Result<Decision<T>> {
    let solution = match spec {
        // The empirical coherent risk is a maximum of convex functions, so the
        // same enumeration / golden-section strategy applies.
        RiskSpec::Coherent { .. } => {
            if !problem.nonneg {
                return Err(Error::NonNegativeRequired(problem.name.clone()));
            }
            solve_unchecked(problem, spec, sample)?
        }
        _ => solve_saa(problem, spec, sample)?,
    };
    Ok(solution.decision)
}

/// Shipped desk-scale instances.
pub mod builtin {
    use super::*;

    pub const NAMES: [&str; 5] = ["twodec", "twopoint", "newsvendor1d", "portfolio-menu", "degenerate"];

    pub fn by_name<T: Scalar>(name: &str) -> Option<ProblemInstance<T>> {
        match name {
            "twodec" => Some(twodec()),
            "twopoint" => Some(twopoint()),
            "newsvendor1d" => Some(newsvendor1d()),
            "portfolio-menu" => Some(portfolio_menu()),
            "degenerate" => Some(degenerate()),
            _ => None,
        }
    }

    fn lits<T: Scalar>(v: &[f64]) -> Vec<T> {
        v.iter().map(|&x| T::lit(x)).collect()
    }

    /// Two equally likely scenarios; `x1` costs `(0, 10)`, `x2` costs `(4, 6)`.
    pub fn twodec<T: Scalar>() -> ProblemInstance<T> {
        ProblemInstance::from_cost_matrix(
            "twodec",
            &["x1", "x2"],
            &lits(&[0.5, 0.5]),
            vec![lits(&[0.0, 10.0]), lits(&[4.0, 6.0])],
            true,
        )
        .expect("valid instance")
    }

    /// Single decision with cost 0 w.p. 0.9 and 10 w.p. 0.1.
    pub fn twopoint<T: Scalar>() -> ProblemInstance<T> {
        ProblemInstance::from_cost_matrix(
            "twopoint",
            &["x"],
            &lits(&[0.9, 0.1]),
            vec![lits(&[0.0, 10.0])],
            true,
        )
        .expect("valid instance")
    }

    /// Order quantity in `[0, 10]`, demand 2/5/8 w.p. 0.3/0.4/0.3,
    /// underage cost 4 and overage cost 1 per unit.
    pub fn newsvendor1d<T: Scalar>() -> ProblemInstance<T> {
        ProblemInstance::newsvendor(
            "newsvendor1d",
            &lits(&[2.0, 5.0, 8.0]),
            &lits(&[0.3, 0.4, 0.3]),
            T::lit(4.0),
            T::lit(1.0),
            T::zero(),
            T::lit(10.0),
        )
        .expect("valid instance")
    }

    /// Five fixed allocations over three assets with a four-outcome return
    /// distribution; cost is `100 (1 - wᵀr)`.
    pub fn portfolio_menu<T: Scalar>() -> ProblemInstance<T> {
        let returns = vec![
            lits(&[0.05, 0.10, 0.02]),
            lits(&[0.02, -0.05, 0.02]),
            lits(&[-0.03, 0.20, 0.02]),
            lits(&[-0.10, -0.30, 0.02]),
        ];
        let distribution =
            FiniteDistribution::new(returns, lits(&[0.4, 0.3, 0.2, 0.1])).expect("valid distribution");
        let menu: [(&str, [f64; 3]); 5] = [
            ("equal", [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]),
            ("stock-a", [1.0, 0.0, 0.0]),
            ("stock-b", [0.0, 1.0, 0.0]),
            ("bond", [0.0, 0.0, 1.0]),
            ("balanced", [0.5, 0.25, 0.25]),
        ];
        let space = DecisionSpace::Finite(
            menu.iter()
                .map(|(label, w)| Decision {
                    label: label.to_string(),
                    point: lits(w),
                    index: None,
                })
                .collect(),
        );
        let cost: CostFn<T> = Arc::new(|d: &Decision<T>, s: ScenarioView<'_, T>| {
            let gain = crate::scalar::sum(d.point.iter().zip(s.realization).map(|(w, r)| *w * *r));
            T::lit(100.0) * (T::one() - gain)
        });
        ProblemInstance::new("portfolio-menu", space, distribution, cost, true).expect("valid instance")
    }

    /// One scenario: `a` costs 3 and `b` costs 5.
    pub fn degenerate<T: Scalar>() -> ProblemInstance<T> {
        ProblemInstance::from_cost_matrix(
            "degenerate",
            &["a", "b"],
            &lits(&[1.0]),
            vec![lits(&[3.0]), lits(&[5.0])],
            true,
        )
        .expect("valid instance")
    }
}

#[cfg(test)]
mod tests {
    use super::builtin::*;
    use super::*;
    use crate::sampling::{draw_sample, StreamKey};
    use approx::assert_abs_diff_eq;

    fn full(problem: &ProblemInstance<f64>) -> Sample<f64> {
        let idx: Vec<usize> = (0..problem.distribution().support_size()).collect();
        Sample::from_outcomes(problem.distribution(), &idx, StreamKey::new(0, "S_n")).unwrap()
    }

    #[test]
    fn cost_vector_examples() {
        let p = twodec::<f64>();
        let x2 = p.decision("x2").unwrap();
        assert_eq!(cost_vector(&p, x2, &full(&p)).unwrap(), vec![4.0, 6.0]);

        let d = degenerate::<f64>();
        let s = draw_sample(d.distribution(), 4, &StreamKey::new(1, "S_n")).unwrap();
        assert_eq!(cost_vector(&d, d.decision("b").unwrap(), &s).unwrap(), vec![5.0; 4]);

        // q = 0 with only shortage cost: costs are the per-scenario demand penalties.
        let nv = ProblemInstance::newsvendor("nv", &[3.0, 7.0], &[0.5, 0.5], 2.0, 0.0, 0.0, 10.0).unwrap();
        let q0 = nv.point(0.0).unwrap();
        assert_eq!(cost_vector(&nv, &q0, &full(&nv)).unwrap(), vec![6.0, 14.0]);
    }

    #[test]
    fn cost_vector_rejects_foreign_decisions() {
        let p = twodec::<f64>();
        let foreign = Decision { label: "x3".into(), point: vec![], index: Some(2) };
        assert!(matches!(cost_vector(&p, &foreign, &full(&p)), Err(Error::NotInSpace(_))));
        let nv = newsvendor1d::<f64>();
        assert!(nv.point(11.0).is_err());
    }

    #[test]
    fn solve_saa_examples() {
        let p = twodec::<f64>();
        let s = full(&p);
        let sol = solve_saa(&p, &RiskSpec::cvar(0.5).unwrap(), &s).unwrap();
        assert_eq!(sol.decision.label, "x2");
        assert_abs_diff_eq!(sol.value, 6.0, epsilon = 1e-12);

        let sol = solve_saa(&p, &RiskSpec::Expectation, &s).unwrap();
        assert_eq!(sol.decision.label, "x1");
        assert_eq!(sol.value, 5.0);

        let tp = twopoint::<f64>();
        let s = Sample::from_outcomes(tp.distribution(), &[0, 1, 0], StreamKey::new(0, "S_n")).unwrap();
        let sol = solve_saa(&tp, &RiskSpec::cvar(0.5).unwrap(), &s).unwrap();
        let direct = empirical_risk(&tp, &RiskSpec::cvar(0.5).unwrap(), tp.decision("x").unwrap(), &s).unwrap();
        assert_eq!(sol.value, direct.value);
    }

    #[test]
    fn solve_saa_fixed_mu_examples() {
        let p = twodec::<f64>();
        let s = full(&p);
        let sol = solve_saa_fixed_mu(&p, &SpectralMeasure::point(0.0).unwrap(), &s).unwrap();
        assert_eq!(sol.decision.label, "x1");
        assert_abs_diff_eq!(sol.value, 5.0, epsilon = 1e-12);
        let sol = solve_saa_fixed_mu(&p, &SpectralMeasure::point(0.5).unwrap(), &s).unwrap();
        assert_eq!(sol.decision.label, "x2");
        assert_abs_diff_eq!(sol.value, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn candidate_examples() {
        let p = twodec::<f64>();
        let x = candidate_solution(&p, &RiskSpec::cvar(0.5).unwrap(), &full(&p)).unwrap();
        assert_eq!(x.label, "x2");
        let d = degenerate::<f64>();
        let x = candidate_solution(&d, &RiskSpec::cvar(0.9).unwrap(), &full(&d)).unwrap();
        assert_eq!(x.label, "a");
        let tp = twopoint::<f64>();
        let x = candidate_solution(&tp, &RiskSpec::Expectation, &full(&tp)).unwrap();
        assert_eq!(x.label, "x");
    }

    #[test]
    fn nonconvex_interval_is_refused() {
        let nv = newsvendor1d::<f64>();
        let key = StreamKey::new(0, "S_n");
        let s = draw_sample(nv.distribution(), 5, &key).unwrap();
        let flagged = ProblemInstance::new(
            "nv-unflagged",
            DecisionSpace::Interval { lo: 0.0, hi: 10.0, convex: false },
            nv.distribution().clone(),
            nv.cost.clone(),
            true,
        )
        .unwrap();
        assert_eq!(solve_saa(&flagged, &RiskSpec::Expectation, &s), Err(Error::NotConvex));
    }

    #[test]
    fn golden_section_finds_newsvendor_quantile() {
        // Expected-cost newsvendor: optimum at the 4/5 demand quantile, which is 8.
        let nv = newsvendor1d::<f64>();
        let s = full(&nv);
        let sol = solve_saa(&nv, &RiskSpec::Expectation, &s).unwrap();
        // Full-support sample weights outcomes equally: optimum is the 0.8-quantile of {2,5,8}.
        assert_abs_diff_eq!(sol.decision.point[0], 8.0, epsilon = 1e-6);
        for i in 0..=100 {
            let x = nv.point(i as f64 / 10.0).unwrap();
            let v = empirical_risk(&nv, &RiskSpec::Expectation, &x, &s).unwrap().value;
            assert!(sol.value <= v + 1e-9);
        }
    }

    #[test]
    fn saa_value_bounds_every_decision() {
        let p = portfolio_menu::<f64>();
        let s = draw_sample(p.distribution(), 40, &StreamKey::new(3, "S_n")).unwrap();
        for spec in [
            RiskSpec::Expectation,
            RiskSpec::cvar(0.8).unwrap(),
            RiskSpec::entropic(0.2).unwrap(),
            RiskSpec::spectral(&[(0.0, 0.3), (0.9, 0.7)]).unwrap(),
        ] {
            let sol = solve_saa(&p, &spec, &s).unwrap();
            for x in p.decisions() {
                assert!(sol.value <= empirical_risk(&p, &spec, x, &s).unwrap().value);
            }
        }
    }

    #[test]
    fn joint_grid_matches_nested_solution() {
        // Joint minimization over (x, u ∈ sample costs) for CVaR.
        let p = portfolio_menu::<f64>();
        let s = draw_sample(p.distribution(), 25, &StreamKey::new(8, "S_n")).unwrap();
        for alpha in [0.0, 0.3, 0.5, 0.9] {
            let spec = RiskSpec::cvar(alpha).unwrap();
            let mut joint = f64::INFINITY;
            for x in p.decisions() {
                let c = cost_vector(&p, x, &s).unwrap();
                for &u in &c {
                    let v = risk::plugin_estimate(&spec, &Costs::equal(&c), &UCertificate::Scalar(u)).unwrap();
                    joint = joint.min(v);
                }
            }
            assert_eq!(solve_saa(&p, &spec, &s).unwrap().value, joint);
        }
    }

    #[test]
    fn spectral_needs_nonnegative_instances() {
        let p = ProblemInstance::from_cost_matrix("neg", &["a"], &[1.0], vec![vec![-1.0]], false).unwrap();
        let s = full(&p);
        let spec = RiskSpec::spectral(&[(0.5, 1.0)]).unwrap();
        assert!(matches!(solve_saa(&p, &spec, &s), Err(Error::NonNegativeRequired(_))));
        assert!(ProblemInstance::from_cost_matrix("lie", &["a"], &[1.0], vec![vec![-1.0]], true).is_err());
    }

    #[test]
    fn builtins_resolve_by_name() {
        for name in NAMES {
            assert_eq!(by_name::<f64>(name).unwrap().name(), name);
        }
        assert!(by_name::<f64>("nope").is_none());
    }
}
