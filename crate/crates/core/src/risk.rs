//! Risk measures in minimization form, `ρ(Y) = min_u E[r(Y, u)]`.
//!
//! Covered families:
//!
//! * expectation, `r(y) = y` with no auxiliary variable;
//! * CVaR at level `α`, `r(y, u) = u + (1-α)^{-1} (y-u)^+`;
//! * entropic risk with rate `θ`, `r(y, u) = u + θ^{-1} (e^{θ(y-u)} - 1)`;
//! * spectral measures with a finitely supported representer `μ`, where the
//!   auxiliary variable is one threshold `u(α_j)` per atom;
//! * coherent measures given as the maximum over a finite list of spectral
//!   vertices.
//!
//! Cost lists may carry probability weights so that exact risks of a finite
//! distribution go through the same routines as sample estimates.
//!
//! The empirical CVaR threshold is the lower `α`-quantile: the `k`-th order
//! statistic with `k = max(1, ⌈α m⌉)` for `m` equally weighted costs, and the
//! smallest cost whose cumulative weight reaches `α` otherwise. It is the
//! smallest minimizer over the sample cost range.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// One atom `(α, w)` of a Kusuoka representer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Atom<T> {
    pub level: T,
    pub weight: T,
}

impl<T> From<(T, T)> for Atom<T> {
    fn from((level, weight): (T, T)) -> Self {
        Atom { level, weight }
    }
}

/// Finitely supported probability measure on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(T, T)>", into = "Vec<(T, T)>", bound = "T: Scalar")]
pub struct SpectralMeasure<T> {
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> TryFrom<Vec<(T, T)>> for SpectralMeasure<T> {
    type Error = Error;

    fn try_from(pairs: Vec<(T, T)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(Atom::from).collect())
    }
}

impl<T: Scalar> From<SpectralMeasure<T>> for Vec<(T, T)> {
    fn from(m: SpectralMeasure<T>) -> Self {
        m.atoms.into_iter().map(|a| (a.level, a.weight)).collect()
    }
}

impl<T: Scalar> SpectralMeasure<T> {
    pub fn new(atoms: Vec<Atom<T>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidRiskSpec("spectral measure has no atoms".into()));
        }
        for a in &atoms {
            check_level(a.level)?;
            if a.weight.is_nan() || a.weight <= T::zero() || !a.weight.is_finite() {
                return Err(Error::InvalidRiskSpec(format!(
                    "atom weight {} must be positive",
                    a.weight
                )));
            }
        }
        let total = crate::scalar::sum(atoms.iter().map(|a| a.weight));
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_count(16 * atoms.len()));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidRiskSpec(format!(
                "atom weights sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Shorthand for a list of `(level, weight)` pairs.
    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        Self::try_from(pairs.to_vec())
    }

    /// Point mass at `alpha`, i.e. CVaR at that level.
    pub fn point(alpha: T) -> Result<Self> {
        Self::new(vec![Atom {
            level: alpha,
            weight: T::one(),
        }])
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }
}

fn check_level<T: Scalar>(alpha: T) -> Result<()> {
    if alpha >= T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidRiskSpec(format!(
            "level {alpha} outside [0, 1)"
        )))
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound = "T: Scalar")]
enum RawRiskSpec<T> {
    Expectation,
    Cvar { alpha: T },
    Entropic { theta: T },
    Spectral { atoms: SpectralMeasure<T> },
    Coherent { vertices: Vec<SpectralMeasure<T>> },
}

/// Risk measure with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(try_from = "RawRiskSpec<T>", bound = "T: Scalar")]
pub enum RiskSpec<T> {
    Expectation,
    Cvar { alpha: T },
    Entropic { theta: T },
    Spectral { atoms: SpectralMeasure<T> },
    Coherent { vertices: Vec<SpectralMeasure<T>> },
}

impl<T: Scalar> TryFrom<RawRiskSpec<T>> for RiskSpec<T> {
    type Error = Error;

    fn try_from(raw: RawRiskSpec<T>) -> Result<Self> {
        match raw {
            RawRiskSpec::Expectation => Ok(RiskSpec::Expectation),
            RawRiskSpec::Cvar { alpha } => RiskSpec::cvar(alpha),
            RawRiskSpec::Entropic { theta } => RiskSpec::entropic(theta),
            RawRiskSpec::Spectral { atoms } => Ok(RiskSpec::Spectral { atoms }),
            RawRiskSpec::Coherent { vertices } => RiskSpec::coherent(vertices),
        }
    }
}

impl<T: Scalar> RiskSpec<T> {
    pub fn cvar(alpha: T) -> Result<Self> {
        check_level(alpha)?;
        Ok(RiskSpec::Cvar { alpha })
    }

    pub fn entropic(theta: T) -> Result<Self> {
        if theta > T::zero() && theta.is_finite() {
            Ok(RiskSpec::Entropic { theta })
        } else {
            Err(Error::InvalidRiskSpec(format!("theta {theta} must be positive")))
        }
    }

    pub fn spectral(pairs: &[(T, T)]) -> Result<Self> {
        Ok(RiskSpec::Spectral {
            atoms: SpectralMeasure::from_pairs(pairs)?,
        })
    }

    pub fn coherent(vertices: Vec<SpectralMeasure<T>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidRiskSpec("coherent measure has no vertices".into()));
        }
        Ok(RiskSpec::Coherent { vertices })
    }

    pub fn is_coherent(&self) -> bool {
        matches!(self, RiskSpec::Coherent { .. })
    }

    /// Spectral and coherent measures are only defined for non-negative costs.
    pub fn requires_nonnegative(&self) -> bool {
        matches!(self, RiskSpec::Spectral { .. } | RiskSpec::Coherent { .. })
    }

    /// Sorted, deduplicated atom levels (empty for non-spectral measures).
    pub fn levels(&self) -> Vec<T> {
        let mut levels: Vec<T> = match self {
            RiskSpec::Spectral { atoms } => atoms.atoms().iter().map(|a| a.level).collect(),
            RiskSpec::Coherent { vertices } => vertices
                .iter()
                .flat_map(|v| v.atoms().iter().map(|a| a.level))
                .collect(),
            _ => Vec::new(),
        };
        levels.sort_by(total_cmp);
        levels.dedup();
        levels
    }
}

impl<T: Scalar> fmt::Display for RiskSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms = |m: &SpectralMeasure<T>| {
            m.atoms()
                .iter()
                .map(|a| format!("{}:{}", a.level, a.weight))
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            RiskSpec::Expectation => write!(f, "expectation"),
            RiskSpec::Cvar { alpha } => write!(f, "cvar({alpha})"),
            RiskSpec::Entropic { theta } => write!(f, "entropic({theta})"),
            RiskSpec::Spectral { atoms: m } => write!(f, "spectral({})", atoms(m)),
            RiskSpec::Coherent { vertices } => {
                let parts: Vec<String> = vertices.iter().map(|v| format!("[{}]", atoms(v))).collect();
                write!(f, "coherent({})", parts.join(","))
            }
        }
    }
}

/// Auxiliary variable of the minimization representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum UCertificate<T> {
    Empty,
    Scalar(T),
    /// `(α, u(α))` pairs sorted by level.
    Levels(Vec<(T, T)>),
}

impl<T: Scalar> UCertificate<T> {
    pub fn level(&self, alpha: T) -> Option<T> {
        match self {
            UCertificate::Levels(pairs) => pairs.iter().find(|(a, _)| *a == alpha).map(|p| p.1),
            _ => None,
        }
    }

    /// Column names and values for CSV reports: `u` or `u(α)`.
    pub fn columns(&self) -> Vec<(String, T)> {
        match self {
            UCertificate::Empty => Vec::new(),
            UCertificate::Scalar(u) => vec![("u".to_string(), *u)],
            UCertificate::Levels(pairs) => pairs
                .iter()
                .map(|(a, u)| (format!("u({a})"), *u))
                .collect(),
        }
    }

    fn check_shape(&self, spec: &RiskSpec<T>) -> Result<()> {
        let ok = match (spec, self) {
            (RiskSpec::Expectation, UCertificate::Empty) => true,
            (RiskSpec::Cvar { .. } | RiskSpec::Entropic { .. }, UCertificate::Scalar(u)) => {
                u.is_finite()
            }
            (RiskSpec::Spectral { .. } | RiskSpec::Coherent { .. }, UCertificate::Levels(pairs)) => {
                let levels = spec.levels();
                pairs.iter().all(|(_, u)| u.is_finite())
                    && levels.iter().all(|l| self.level(*l).is_some())
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("{self:?} for {spec}")))
        }
    }
}

/// Costs with optional probability weights (equal weights when absent).
#[derive(Debug, Clone, Copy)]
pub struct Costs<'a, T> {
    values: &'a [T],
    weights: Option<&'a [T]>,
}

impl<'a, T: Scalar> Costs<'a, T> {
    pub fn equal(values: &'a [T]) -> Self {
        Self {
            values,
            weights: None,
        }
    }

    /// Weighted costs. Weights must be positive and sum to one.
    pub fn weighted(values: &'a [T], weights: &'a [T]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} costs but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| w.is_nan() || *w <= T::zero()) {
            return Err(Error::InvalidDistribution("weights must be positive".into()));
        }
        let total = crate::scalar::sum(weights.iter().copied());
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_count(16 * weights.len().max(1)));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self {
            values,
            weights: Some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &'a [T] {
        self.values
    }

    /// Weighted mean of `g(cost)`.
    pub fn mean_of(&self, g: impl Fn(T) -> T) -> T {
        let mut acc = CompensatedSum::new();
        match self.weights {
            None => {
                for &y in self.values {
                    acc.add(g(y));
                }
                acc.value() / T::from_count(self.values.len())
            }
            Some(w) => {
                for (&y, &p) in self.values.iter().zip(w) {
                    acc.add(p * g(y));
                }
                acc.value()
            }
        }
    }

    fn nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::Empty)
        } else {
            Ok(())
        }
    }
}

fn total_cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// One-based order-statistic index `max(1, ⌈α m⌉)`, treating `α m` within
/// `1e-9` of an integer as that integer.
pub fn order_index<T: Scalar>(alpha: T, m: usize) -> usize {
    let x = alpha.as_f64() * m as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, m.max(1))
}

/// Costs sorted ascending, with cumulative weights for weighted lists.
#[derive(Debug, Clone)]
pub struct SortedCosts<T> {
    values: Vec<T>,
    weights: Option<Vec<T>>,
    cumulative: Option<Vec<T>>,
}

impl<T: Scalar> SortedCosts<T> {
    pub fn new(costs: &Costs<'_, T>) -> Result<Self> {
        costs.nonempty()?;
        match costs.weights {
            None => {
                let mut values = costs.values.to_vec();
                values.sort_unstable_by(total_cmp);
                Ok(Self {
                    values,
                    weights: None,
                    cumulative: None,
                })
            }
            Some(w) => {
                let mut pairs: Vec<(T, T)> =
                    costs.values.iter().copied().zip(w.iter().copied()).collect();
                pairs.sort_by(|a, b| total_cmp(&a.0, &b.0));
                let mut acc = CompensatedSum::new();
                let cumulative = pairs
                    .iter()
                    .map(|p| {
                        acc.add(p.1);
                        acc.value()
                    })
                    .collect();
                let (values, weights) = pairs.into_iter().unzip();
                Ok(Self {
                    values,
                    weights: Some(weights),
                    cumulative: Some(cumulative),
                })
            }
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn costs(&self) -> Costs<'_, T> {
        Costs {
            values: &self.values,
            weights: self.weights.as_deref(),
        }
    }

    /// Lower `α`-quantile: the smallest CVaR minimizer in the cost range.
    pub fn lower_quantile(&self, alpha: T) -> T {
        match &self.cumulative {
            None => self.values[order_index(alpha, self.values.len()) - 1],
            Some(cum) => {
                let target = alpha - T::lit(1e-12);
                let i = cum.partition_point(|&c| c < target);
                self.values[i.min(self.values.len() - 1)]
            }
        }
    }

    /// `(u*, CVaR_α)` of the listed costs.
    pub fn cvar(&self, alpha: T) -> (T, T) {
        let u = self.lower_quantile(alpha);
        (u, cvar_objective(&self.costs(), alpha, u))
    }
}

/// `u + (1-α)^{-1} E[(Y-u)^+]`.
fn cvar_objective<T: Scalar>(costs: &Costs<'_, T>, alpha: T, u: T) -> T {
    let scale = (T::one() - alpha).recip();
    u + scale * costs.mean_of(|y| (y - u).max(T::zero()))
}

/// Integrand `r(y, u)` of a non-coherent measure.
pub fn r_value<T: Scalar>(spec: &RiskSpec<T>, y: T, u: &UCertificate<T>) -> Result<T> {
    if spec.is_coherent() {
        return Err(Error::Unsupported(
            "coherent integrand is evaluated per spectral vertex".into(),
        ));
    }
    u.check_shape(spec)?;
    Ok(r_unchecked(spec, y, u))
}

#[inline]
pub(crate) fn r_unchecked<T: Scalar>(spec: &RiskSpec<T>, y: T, u: &UCertificate<T>) -> T {
    match (spec, u) {
        (RiskSpec::Expectation, _) => y,
        (RiskSpec::Cvar { alpha }, UCertificate::Scalar(u)) => {
            *u + (y - *u).max(T::zero()) / (T::one() - *alpha)
        }
        (RiskSpec::Entropic { theta }, UCertificate::Scalar(u)) => {
            *u + (*theta * (y - *u)).exp_m1() / *theta
        }
        (RiskSpec::Spectral { atoms }, cert) => spectral_r(atoms, y, cert),
        _ => unreachable!("shape checked"),
    }
}

/// `Σ_j w_j [u(α_j) + (1-α_j)^{-1} (y - u(α_j))^+]`.
pub(crate) fn spectral_r<T: Scalar>(measure: &SpectralMeasure<T>, y: T, u: &UCertificate<T>) -> T {
    let mut acc = CompensatedSum::new();
    for a in measure.atoms() {
        let ua = u.level(a.level).expect("certificate covers every level");
        acc.add(a.weight * (ua + (y - ua).max(T::zero()) / (T::one() - a.level)));
    }
    acc.value()
}

/// Minimizer of the empirical objective and its value `ρ^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RiskMinimum<T> {
    pub certificate: UCertificate<T>,
    pub value: T,
}

/// Minimizes `u ↦ E[r(Y, u)]` over the (weighted) cost list.
pub fn minimize_u<T: Scalar>(spec: &RiskSpec<T>, costs: &Costs<'_, T>) -> Result<RiskMinimum<T>> {
    costs.nonempty()?;
    match spec {
        RiskSpec::Expectation => Ok(RiskMinimum {
            certificate: UCertificate::Empty,
            value: costs.mean_of(|y| y),
        }),
        RiskSpec::Cvar { alpha } => {
            let (u, value) = SortedCosts::new(costs)?.cvar(*alpha);
            Ok(RiskMinimum {
                certificate: UCertificate::Scalar(u),
                value,
            })
        }
        RiskSpec::Entropic { theta } => {
            let u = entropic_minimizer(costs, *theta)?;
            let value = u + costs.mean_of(|y| (*theta * (y - u)).exp_m1()) / *theta;
            if !value.is_finite() {
                return Err(Error::Overflow("entropic risk"));
            }
            Ok(RiskMinimum {
                certificate: UCertificate::Scalar(u),
                value,
            })
        }
        RiskSpec::Spectral { .. } | RiskSpec::Coherent { .. } => {
            let sorted = SortedCosts::new(costs)?;
            let levels = spec.levels();
            let per_level: Vec<(T, T, T)> = levels
                .iter()
                .map(|&a| {
                    let (u, v) = sorted.cvar(a);
                    (a, u, v)
                })
                .collect();
            let value = match spec {
                RiskSpec::Spectral { atoms } => mix_cvars(atoms, &per_level),
                RiskSpec::Coherent { vertices } => vertices
                    .iter()
                    .map(|v| mix_cvars(v, &per_level))
                    .fold(T::neg_infinity(), T::max),
                _ => unreachable!(),
            };
            Ok(RiskMinimum {
                certificate: UCertificate::Levels(per_level.iter().map(|p| (p.0, p.1)).collect()),
                value,
            })
        }
    }
}

/// `θ^{-1} log E[e^{θY}]` through a max-shifted log-sum-exp.
fn entropic_minimizer<T: Scalar>(costs: &Costs<'_, T>, theta: T) -> Result<T> {
    let top = costs
        .values()
        .iter()
        .copied()
        .fold(T::neg_infinity(), T::max);
    if !top.is_finite() {
        return Err(Error::Overflow("entropic log-sum-exp"));
    }
    let shifted = costs.mean_of(|y| (theta * (y - top)).exp());
    let u = top + shifted.ln() / theta;
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::Overflow("entropic log-sum-exp"))
    }
}

fn mix_cvars<T: Scalar>(measure: &SpectralMeasure<T>, per_level: &[(T, T, T)]) -> T {
    let mut acc = CompensatedSum::new();
    for a in measure.atoms() {
        let v = per_level
            .iter()
            .find(|p| p.0 == a.level)
            .map(|p| p.2)
            .expect("level present");
        acc.add(a.weight * v);
    }
    acc.value()
}

/// Weighted mean of `r(cost, u)` at a fixed certificate.
///
/// For coherent measures this is the vertex maximum of the spectral plug-in
/// values.
pub fn plugin_estimate<T: Scalar>(
    spec: &RiskSpec<T>,
    costs: &Costs<'_, T>,
    u: &UCertificate<T>,
) -> Result<T> {
    costs.nonempty()?;
    u.check_shape(spec)?;
    let value = match spec {
        RiskSpec::Coherent { vertices } => {
            plugin_coherent_unchecked(vertices, costs, u).0
        }
        _ => costs.mean_of(|y| r_unchecked(spec, y, u)),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow("plug-in estimate"))
    }
}

/// Coherent plug-in value together with the maximizing vertex index.
pub fn plugin_coherent<T: Scalar>(
    spec: &RiskSpec<T>,
    costs: &Costs<'_, T>,
    u: &UCertificate<T>,
) -> Result<(T, usize)> {
    costs.nonempty()?;
    u.check_shape(spec)?;
    match spec {
        RiskSpec::Coherent { vertices } => Ok(plugin_coherent_unchecked(vertices, costs, u)),
        _ => Err(Error::Unsupported(format!("{spec} is not coherent"))),
    }
}

fn plugin_coherent_unchecked<T: Scalar>(
    vertices: &[SpectralMeasure<T>],
    costs: &Costs<'_, T>,
    u: &UCertificate<T>,
) -> (T, usize) {
    let mut best = (T::neg_infinity(), 0);
    for (i, v) in vertices.iter().enumerate() {
        let value = costs.mean_of(|y| spectral_r(v, y, u));
        if value > best.0 {
            best = (value, i);
        }
    }
    best
}

/// Masses of a representer binned on the grid `{0} ∪ ((k-1)/m, k/m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SpectralCoefficients<T> {
    /// `μ_0, …, μ_m`.
    pub mu: Vec<T>,
    /// `μ̄_k = ∫ (1-α)^{-1} dμ` over the same cells.
    pub mu_bar: Vec<T>,
    pub m: usize,
}

pub fn spectral_coefficients<T: Scalar>(
    measure: &SpectralMeasure<T>,
    m: usize,
) -> Result<SpectralCoefficients<T>> {
    if m == 0 {
        return Err(Error::ZeroSampleSize);
    }
    let mut mu = vec![T::zero(); m + 1];
    let mut mu_bar = vec![T::zero(); m + 1];
    for a in measure.atoms() {
        let k = if a.level == T::zero() {
            0
        } else {
            order_index(a.level, m)
        };
        mu[k] = mu[k] + a.weight;
        mu_bar[k] = mu_bar[k] + a.weight / (T::one() - a.level);
    }
    Ok(SpectralCoefficients { mu, mu_bar, m })
}

/// Spectral plug-in value `ẑ_{n,m}` as two sums over the order statistics of
/// the fresh costs:
/// `Σ_k μ_k q_k + Σ_k μ̄_k E^n[(Y - q_k)^+]`, with `q_0 = q_1`.
pub fn plugin_spectral_collapsed<T: Scalar>(
    coefficients: &SpectralCoefficients<T>,
    fresh: &SortedCosts<T>,
    costs: &Costs<'_, T>,
) -> Result<T> {
    if fresh.weights.is_some() || fresh.values.len() != coefficients.m {
        return Err(Error::ShapeMismatch(format!(
            "coefficients built for m = {} equally weighted costs",
            coefficients.m
        )));
    }
    costs.nonempty()?;
    let mut acc = CompensatedSum::new();
    for k in 0..=coefficients.m {
        let (mu, mu_bar) = (coefficients.mu[k], coefficients.mu_bar[k]);
        if mu == T::zero() && mu_bar == T::zero() {
            continue;
        }
        let q = fresh.values[k.max(1) - 1];
        acc.add(mu * q);
        acc.add(mu_bar * costs.mean_of(|y| (y - q).max(T::zero())));
    }
    Ok(acc.value())
}

/// Vertex of a coherent measure maximizing the empirical risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VertexChoice<T> {
    pub index: usize,
    pub value: T,
}

/// `argmax_μ ∫ CVaR_α(costs) dμ(α)` over the listed vertices, lowest index on ties.
pub fn select_vertex<T: Scalar>(spec: &RiskSpec<T>, costs: &Costs<'_, T>) -> Result<VertexChoice<T>> {
    let RiskSpec::Coherent { vertices } = spec else {
        return Err(Error::Unsupported(format!("{spec} is not coherent")));
    };
    let sorted = SortedCosts::new(costs)?;
    let per_level: Vec<(T, T, T)> = spec
        .levels()
        .iter()
        .map(|&a| {
            let (u, v) = sorted.cvar(a);
            (a, u, v)
        })
        .collect();
    let mut best = VertexChoice {
        index: 0,
        value: T::neg_infinity(),
    };
    for (i, v) in vertices.iter().enumerate() {
        let value = mix_cvars(v, &per_level);
        if value > best.value {
            best = VertexChoice { index: i, value };
        }
    }
    Ok(best)
}
