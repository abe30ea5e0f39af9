//! Exact ground truth on finite instances.
//!
//! True risks are computed from formulas that do not share code with the
//! sample estimators: CVaR integrates the quantile function over the upper
//! tail, the entropic risk is a shifted log-sum-exp. Estimator expectations
//! are obtained by enumerating every ordered sample with its probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap;
use crate::problems::{self, Decision, DecisionSpace, ProblemInstance};
use crate::risk::{Costs, RiskSpec, SpectralMeasure};
use crate::sampling::{make_stream, Sample, StreamKey};
use crate::scalar::{CompensatedSum, Scalar};

/// Maximum number of enumerated joint samples.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Grid resolution used for interval decision spaces.
pub const INTERVAL_GRID_POINTS: usize = 100_000;

fn tail_cvar<T: Scalar>(alpha: T, values: &[T], weights: &[T]) -> T {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite costs"));
    let total: T = weights.iter().copied().sum();
    if alpha == T::zero() {
        let mut acc = CompensatedSum::new();
        for (&y, &w) in values.iter().zip(weights) {
            acc.add(y * w);
        }
        return acc.value() / total;
    }
    let level = alpha * total;
    let mut acc = CompensatedSum::new();
    let mut lower = T::zero();
    for &i in &order {
        let upper = lower + weights[i];
        let overlap = upper.min(total) - lower.max(level);
        if overlap > T::zero() {
            acc.add(values[i] * overlap);
        }
        lower = upper;
    }
    acc.value() / (total - level)
}

fn spectral_exact<T: Scalar>(measure: &SpectralMeasure<T>, values: &[T], weights: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for a in measure.atoms() {
        acc.add(a.weight * tail_cvar(a.level, values, weights));
    }
    acc.value()
}

/// Exact `ρ(Y)` for a cost taking value `values[i]` with probability `weights[i]`.
pub fn exact_risk<T: Scalar>(spec: &RiskSpec<T>, values: &[T], weights: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    // Validates shape, finiteness and positivity of the weights.
    Costs::weighted(values, weights)?;
    Ok(match spec {
        RiskSpec::Expectation => tail_cvar(T::zero(), values, weights),
        RiskSpec::Cvar { alpha } => tail_cvar(*alpha, values, weights),
        RiskSpec::Entropic { theta } => {
            let top = values.iter().copied().fold(T::neg_infinity(), T::max);
            let total: T = weights.iter().copied().sum();
            let mut acc = CompensatedSum::new();
            for (&y, &w) in values.iter().zip(weights) {
                acc.add(w * ((*theta) * (y - top)).exp());
            }
            top + (acc.value() / total).ln() / *theta
        }
        RiskSpec::Spectral { atoms } => spectral_exact(atoms, values, weights),
        RiskSpec::Coherent { vertices } => vertices
            .iter()
            .map(|v| spectral_exact(v, values, weights))
            .fold(T::neg_infinity(), T::max),
    })
}

/// `ρ(f_x)` under the instance's true distribution.
pub fn true_risk<T: Scalar>(problem: &ProblemInstance<T>, spec: &RiskSpec<T>, x: &Decision<T>) -> Result<T> {
    if !problem.contains(x) {
        return Err(Error::NotInSpace(x.label.clone()));
    }
    exact_risk(spec, &problem.outcome_costs(x), problem.distribution().probabilities())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ExactSolution<T> {
    pub x_star: Decision<T>,
    pub z_star: T,
    pub z_hat: T,
    pub true_gap: T,
    /// Grid spacing for interval spaces; `None` when the optimum is exact.
    pub grid_spacing: Option<T>,
}

/// `x*`, `z*`, `ẑ = ρ(f_x̂)` and `G = ẑ - z*`.
///
/// Interval spaces are searched on a grid of [`INTERVAL_GRID_POINTS`] points
/// that also includes `x̂`; `z*` is then only accurate up to the grid spacing.
pub fn exact_solution<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
) -> Result<ExactSolution<T>> {
    let z_hat = true_risk(problem, spec, x_hat)?;
    let (candidates, grid_spacing): (Vec<Decision<T>>, Option<T>) = match problem.space() {
        DecisionSpace::Finite(list) => (list.clone(), None),
        DecisionSpace::Interval { lo, hi, .. } => {
            let steps = INTERVAL_GRID_POINTS - 1;
            let h = (*hi - *lo) / T::from_count(steps);
            let mut grid: Vec<Decision<T>> = (0..=steps)
                .map(|i| problem.point((*lo + h * T::from_count(i)).min(*hi)))
                .collect::<Result<_>>()?;
            grid.push(x_hat.clone());
            (grid, Some(h))
        }
    };
    let mut best: Option<(Decision<T>, T)> = None;
    for x in candidates {
        let z = true_risk(problem, spec, &x)?;
        if best.as_ref().is_none_or(|(_, b)| z < *b) {
            best = Some((x, z));
        }
    }
    let (x_star, z_star) = best.expect("nonempty space");
    Ok(ExactSolution {
        x_star,
        z_star,
        z_hat,
        true_gap: z_hat - z_star,
        grid_spacing,
    })
}

/// `min_u u + (1-α)^{-1} E[(Y-u)^+]` by brute-force grid search on
/// `[min cost, max cost]`, refined once on the bracket around the best point.
///
/// The objective is convex, so the minimizer lies within one step of the
/// coarse argmin and the refined grid error is `O(range / points²)`.
pub fn grid_minimized_cvar(alpha: f64, values: &[f64], weights: &[f64], points: usize) -> f64 {
    let objective = |u: f64| {
        let tail: f64 = values
            .iter()
            .zip(weights)
            .map(|(&y, &w)| w * (y - u).max(0.0))
            .sum();
        u + tail / (1.0 - alpha)
    };
    let scan = |lo: f64, hi: f64| -> (f64, f64) {
        (0..=points)
            .map(|i| {
                let u = lo + (hi - lo) * i as f64 / points as f64;
                (u, objective(u))
            })
            .fold((lo, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (u, coarse) = scan(lo, hi);
    let h = (hi - lo) / points as f64;
    let (_, fine) = scan((u - h).max(lo), (u + h).min(hi));
    coarse.min(fine)
}

/// Estimators whose expectation can be enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `ρ^n(f_x̂)`.
    EmpiricalRiskAtCandidate,
    /// `z*_n = min_x ρ^n(f_x)`.
    ZStarN,
    /// `G_n = ρ^n(f_x̂) - z*_n`.
    GapNaive,
    /// `ẑ_{n,m} = E^n[r(f_x̂, u*_m)]`.
    #[serde(rename = "z_hat_nm")]
    ZHatNM,
    /// `G_{n,m}`.
    #[serde(rename = "gap_nm")]
    GapNM,
    /// `z*_{n,ℓ}` (coherent).
    #[serde(rename = "z_star_n_ell")]
    ZStarNEll,
    /// `ẑ_{n,m}` with vertex maximization (coherent).
    #[serde(rename = "z_hat_nm_coherent")]
    ZHatNMCoherent,
    /// `G_{n,m,ℓ}` (coherent).
    #[serde(rename = "gap_nml")]
    GapNML,
}

impl Estimator {
    pub const ALL: [Estimator; 8] = [
        Estimator::EmpiricalRiskAtCandidate,
        Estimator::ZStarN,
        Estimator::GapNaive,
        Estimator::ZHatNM,
        Estimator::GapNM,
        Estimator::ZStarNEll,
        Estimator::ZHatNMCoherent,
        Estimator::GapNML,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::EmpiricalRiskAtCandidate => "empirical_risk_at_candidate",
            Estimator::ZStarN => "z_star_n",
            Estimator::GapNaive => "gap_naive",
            Estimator::ZHatNM => "z_hat_nm",
            Estimator::GapNM => "gap_nm",
            Estimator::ZStarNEll => "z_star_n_ell",
            Estimator::ZHatNMCoherent => "z_hat_nm_coherent",
            Estimator::GapNML => "gap_nml",
        }
    }

    pub fn coherent(self) -> bool {
        matches!(
            self,
            Estimator::ZStarNEll | Estimator::ZHatNMCoherent | Estimator::GapNML
        )
    }

    fn uses_m(self) -> bool {
        matches!(
            self,
            Estimator::ZHatNM | Estimator::GapNM | Estimator::ZHatNMCoherent | Estimator::GapNML
        )
    }

    fn uses_l(self) -> bool {
        matches!(self, Estimator::ZStarNEll | Estimator::GapNML)
    }
}

/// Sample sizes for an enumeration; unused sizes are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationSizes {
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

impl EnumerationSizes {
    pub fn new(n: usize, m: usize, l: usize) -> Self {
        Self { n, m, l }
    }
}

/// Number of joint ordered samples the enumeration would visit.
pub fn enumeration_atoms(support: usize, estimator: Estimator, sizes: EnumerationSizes) -> u128 {
    let mut length = sizes.n as u32;
    if estimator.uses_m() {
        length += sizes.m as u32;
    }
    if estimator.uses_l() {
        length += sizes.l as u32;
    }
    (support as u128).checked_pow(length).unwrap_or(u128::MAX)
}

fn evaluate<T: Scalar>(
    estimator: Estimator,
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    s_n: &Sample<T>,
    s_m: &Sample<T>,
    s_l: &Sample<T>,
) -> Result<T> {
    Ok(match estimator {
        Estimator::EmpiricalRiskAtCandidate => problems::empirical_risk(problem, spec, x_hat, s_n)?.value,
        Estimator::ZStarN => gap::gap_naive(problem, spec, x_hat, s_n)?.z_star_n,
        Estimator::GapNaive => gap::gap_naive(problem, spec, x_hat, s_n)?.gap,
        Estimator::ZHatNM => gap::gap_two_sample(problem, spec, x_hat, s_n, s_m)?.z_hat,
        Estimator::GapNM => gap::gap_two_sample(problem, spec, x_hat, s_n, s_m)?.gap,
        Estimator::ZStarNEll => gap::gap_coherent(problem, spec, x_hat, s_n, s_m, s_l)?.z_star_n,
        Estimator::ZHatNMCoherent => gap::gap_coherent(problem, spec, x_hat, s_n, s_m, s_l)?.z_hat,
        Estimator::GapNML => gap::gap_coherent(problem, spec, x_hat, s_n, s_m, s_l)?.gap,
    })
}

/// Exact expectation of `estimator` over i.i.d. samples of the given sizes,
/// by probability-weighted enumeration of every ordered joint sample.
pub fn exact_estimator_expectation<T: Scalar>(
    estimator: Estimator,
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    sizes: EnumerationSizes,
) -> Result<T> {
    let dist = problem.distribution();
    let support = dist.support_size();
    let atoms = enumeration_atoms(support, estimator, sizes);
    if atoms > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            atoms,
            budget: ENUMERATION_BUDGET,
        });
    }
    if sizes.n == 0 || (estimator.uses_m() && sizes.m == 0) || (estimator.uses_l() && sizes.l == 0) {
        return Err(Error::ZeroSampleSize);
    }
    if estimator.coherent() != spec.is_coherent()
        && !matches!(estimator, Estimator::EmpiricalRiskAtCandidate)
    {
        return Err(Error::Unsupported(format!(
            "{} does not apply to {spec}",
            estimator.as_str()
        )));
    }
    let n = sizes.n;
    let m = if estimator.uses_m() { sizes.m } else { 0 };
    let l = if estimator.uses_l() { sizes.l } else { 0 };
    // Components that ignore S_m or S_ℓ still receive a one-point sample.
    let (m_len, l_len) = (m.max(1), l.max(1));

    let probs = dist.probabilities();
    let keys = [
        StreamKey::new(0, "oracle/Sn"),
        StreamKey::new(0, "oracle/Sm"),
        StreamKey::new(0, "oracle/Sl"),
    ];
    let varying = n + m + l;
    let mut digits = vec![0usize; varying];
    let mut acc = CompensatedSum::new();
    loop {
        let mut weight = T::one();
        for &d in &digits {
            weight = weight * probs[d];
        }
        let (dn, rest) = digits.split_at(n);
        let (dm, dl) = rest.split_at(m);
        let pad = |part: &[usize], len: usize| -> Vec<usize> {
            let mut v = part.to_vec();
            v.resize(len, 0);
            v
        };
        let s_n = Sample::from_outcomes(dist, dn, keys[0].clone())?;
        let s_m = Sample::from_outcomes(dist, &pad(dm, m_len), keys[1].clone())?;
        let s_l = Sample::from_outcomes(dist, &pad(dl, l_len), keys[2].clone())?;
        let value = evaluate(estimator, problem, spec, x_hat, &s_n, &s_m, &s_l)?;
        acc.add(weight * value);

        // odometer
        let mut pos = 0;
        loop {
            if pos == varying {
                return Ok(acc.value());
            }
            digits[pos] += 1;
            if digits[pos] < support {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Finite instance with random costs, for property checks.
///
/// Support size is drawn from `1..=max_support`, decision count from
/// `1..=max_decisions`, costs from the half-integers in `[0, 10]`, so ties
/// between costs are common.
pub fn random_instance<T: Scalar>(
    seed: u64,
    max_support: usize,
    max_decisions: usize,
) -> Result<ProblemInstance<T>> {
    let mut rng = make_stream(&StreamKey::new(seed, "oracle/random-instance"));
    let support = rng.random_range(1..=max_support);
    let decisions = rng.random_range(1..=max_decisions);
    let raw: Vec<f64> = (0..support).map(|_| rng.random_range(1..=9) as f64).collect();
    let total: f64 = raw.iter().sum();
    let probs: Vec<T> = raw.iter().map(|w| T::lit(w / total)).collect();
    let matrix: Vec<Vec<T>> = (0..decisions)
        .map(|_| {
            (0..support)
                .map(|_| T::lit(rng.random_range(0..=20) as f64 / 2.0))
                .collect()
        })
        .collect();
    let labels: Vec<String> = (1..=decisions).map(|i| format!("x{i}")).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    ProblemInstance::from_cost_matrix(format!("random-{seed}"), &labels, &probs, matrix, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_risk_examples() {
        let cvar = |a| RiskSpec::cvar(a).unwrap();
        assert_abs_diff_eq!(exact_risk(&cvar(0.5), &[0.0, 10.0], &[0.5, 0.5]).unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_risk(&cvar(0.8), &[0.0, 10.0], &[0.9, 0.1]).unwrap(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_risk(&cvar(0.0), &[1.0, 4.0], &[0.25, 0.75]).unwrap(), 3.25, epsilon = 1e-12);
        let specs = [
            RiskSpec::Expectation,
            cvar(0.3),
            RiskSpec::entropic(2.0).unwrap(),
            RiskSpec::spectral(&[(0.2, 0.5), (0.9, 0.5)]).unwrap(),
        ];
        for s in &specs {
            assert_abs_diff_eq!(exact_risk(s, &[7.0, 7.0], &[0.4, 0.6]).unwrap(), 7.0, epsilon = 1e-12);
        }
        assert_eq!(exact_risk(&RiskSpec::<f64>::Expectation, &[], &[]), Err(Error::Empty));
    }

    #[test]
    fn cvar_matches_grid_minimization() {
        for seed in 0..20u64 {
            let mut rng = make_stream(&StreamKey::new(seed, "grid-check"));
            let s = rng.random_range(1..=4);
            let values: Vec<f64> = (0..s).map(|_| rng.random_range(0.0..10.0)).collect();
            let raw: Vec<f64> = (0..s).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let alpha = rng.random_range(0.0..0.95);
            let exact = exact_risk(&RiskSpec::cvar(alpha).unwrap(), &values, &weights).unwrap();
            let grid = grid_minimized_cvar(alpha, &values, &weights, 1_000_000);
            assert!(exact <= grid + 1e-12, "seed {seed}");
            assert_abs_diff_eq!(exact, grid, epsilon = 1e-7);
        }
    }

    #[test]
    fn exact_solution_examples() {
        let p = builtin::twodec::<f64>();
        let x1 = p.decision("x1").unwrap().clone();
        let sol = exact_solution(&p, &RiskSpec::cvar(0.5).unwrap(), &x1).unwrap();
        assert_eq!(sol.x_star.label, "x2");
        assert_abs_diff_eq!(sol.z_star, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.z_hat, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.true_gap, 4.0, epsilon = 1e-12);
        let x2 = p.decision("x2").unwrap().clone();
        assert_eq!(exact_solution(&p, &RiskSpec::cvar(0.5).unwrap(), &x2).unwrap().true_gap, 0.0);
        let mean = exact_solution(&p, &RiskSpec::Expectation, &x1).unwrap();
        assert_abs_diff_eq!(mean.z_star, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mean.true_gap, 0.0, epsilon = 1e-12);
        let foreign = Decision { label: "x9".into(), point: vec![], index: Some(9) };
        assert!(matches!(exact_solution(&p, &RiskSpec::Expectation, &foreign), Err(Error::NotInSpace(_))));
    }

    #[test]
    fn interval_solution_reports_grid() {
        let p = builtin::newsvendor1d::<f64>();
        let x = p.point(5.0).unwrap();
        let sol = exact_solution(&p, &RiskSpec::Expectation, &x).unwrap();
        let h = sol.grid_spacing.unwrap();
        // critical ratio 4/5 puts the optimum at the 0.8-quantile of demand
        assert_abs_diff_eq!(sol.x_star.point[0], 8.0, epsilon = h);
        assert_abs_diff_eq!(sol.z_star, 0.3 * 6.0 + 0.4 * 3.0, epsilon = 5.0 * h);
        assert_abs_diff_eq!(sol.z_hat, 0.3 * 3.0 + 0.3 * 12.0, epsilon = 1e-12);
        assert!(sol.true_gap >= 0.0);
    }

    #[test]
    fn two_point_expectations() {
        let p = builtin::twopoint::<f64>();
        let x = p.decision("x").unwrap().clone();
        let spec = RiskSpec::cvar(0.8).unwrap();
        let sizes = EnumerationSizes::new(5, 5, 1);
        let e = exact_estimator_expectation(Estimator::EmpiricalRiskAtCandidate, &p, &spec, &x, sizes).unwrap();
        assert_abs_diff_eq!(e, 10.0 * (1.0 - 0.9f64.powi(5)), epsilon = 1e-12);
        let z = exact_estimator_expectation(Estimator::ZHatNM, &p, &spec, &x, sizes).unwrap();
        let expected = 5.0 + 5.0 * (1.0 - 0.9f64.powi(5) - 5.0 * 0.1 * 0.9f64.powi(4));
        assert_abs_diff_eq!(z, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 5.4073, epsilon = 1e-4);
    }

    #[test]
    fn budget_guard() {
        let p = builtin::twodec::<f64>();
        let x = p.decision("x1").unwrap().clone();
        let err = exact_estimator_expectation(
            Estimator::GapNM,
            &p,
            &RiskSpec::Expectation,
            &x,
            EnumerationSizes::new(12, 12, 1),
        );
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn degenerate_expectations_are_deterministic() {
        let p = builtin::degenerate::<f64>();
        let x = p.decision("b").unwrap().clone();
        let spec = RiskSpec::cvar(0.7).unwrap();
        let sizes = EnumerationSizes::new(3, 4, 2);
        for est in [Estimator::EmpiricalRiskAtCandidate, Estimator::ZStarN, Estimator::ZHatNM, Estimator::GapNM] {
            let v = exact_estimator_expectation(est, &p, &spec, &x, sizes).unwrap();
            let want = match est {
                Estimator::ZStarN => 3.0,
                Estimator::GapNM => 2.0,
                _ => 5.0,
            };
            assert_abs_diff_eq!(v, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn estimator_directions_on_random_instances() {
        for seed in 0..20 {
            let p = random_instance::<f64>(seed, 3, 3).unwrap();
            let spec = RiskSpec::cvar(0.6).unwrap();
            for x in p.decisions().to_vec() {
                let exact = exact_solution(&p, &spec, &x).unwrap();
                let sizes = EnumerationSizes::new(3, 3, 1);
                let plugin =
                    exact_estimator_expectation(Estimator::EmpiricalRiskAtCandidate, &p, &spec, &x, sizes).unwrap();
                assert!(plugin <= exact.z_hat + 1e-12);
                let z_star = exact_estimator_expectation(Estimator::ZStarN, &p, &spec, &x, sizes).unwrap();
                assert!(z_star <= exact.z_star + 1e-12);
                let gap = exact_estimator_expectation(Estimator::GapNM, &p, &spec, &x, sizes).unwrap();
                assert!(gap >= exact.true_gap - 1e-12, "seed {seed}: {gap} < {}", exact.true_gap);
            }
        }
    }

    #[test]
    fn coherent_direction() {
        let p = builtin::twodec::<f64>();
        let vertices = vec![
            SpectralMeasure::point(0.0).unwrap(),
            SpectralMeasure::point(0.5).unwrap(),
        ];
        let spec = RiskSpec::coherent(vertices).unwrap();
        let x = p.decision("x1").unwrap().clone();
        let exact = exact_solution(&p, &spec, &x).unwrap();
        let sizes = EnumerationSizes::new(3, 3, 3);
        let z = exact_estimator_expectation(Estimator::ZStarNEll, &p, &spec, &x, sizes).unwrap();
        assert!(z <= exact.z_star + 1e-12);
        let g = exact_estimator_expectation(Estimator::GapNML, &p, &spec, &x, sizes).unwrap();
        assert!(g >= exact.true_gap - 1e-12);
    }
}
