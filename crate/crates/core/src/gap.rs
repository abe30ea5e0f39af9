//! Optimality-gap estimators.
//!
//! * [`gap_naive`]: `ρ^n(f_x̂) - z*_n` on one sample. Downward biased in its
//!   first term for risk-averse measures, so it is not a valid basis for an
//!   upper bound; kept for bias studies.
//! * [`gap_two_sample`]: the threshold `u*_m` is fitted on a fresh sample
//!   `S_m`, then plugged into `E^n[r(f_x̂, u*_m)]` on `S_n`. Both terms share
//!   `S_n`, so the estimate is non-negative and upward biased in expectation.
//! * [`gap_coherent`]: for coherent measures the optimal vertex is fitted on a
//!   third sample `S_ℓ` and the sample problem is solved at that vertex.
//!
//! Per-observation gaps are `r(f_x̂(ω^i), û) - r(f_{x*_n}(ω^i), u*_n)`, whose
//! mean is the gap itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{self, Decision, ProblemInstance, SaaSolution};
use crate::risk::{self, Costs, RiskSpec, UCertificate};
use crate::sampling::Sample;
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    Naive,
    TwoSample,
    Coherent,
}

impl GapMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GapMode::Naive => "naive",
            GapMode::TwoSample => "two_sample",
            GapMode::Coherent => "coherent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub n: usize,
    pub m: Option<usize>,
    pub l: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GapEstimate<T> {
    pub mode: GapMode,
    pub z_hat: T,
    pub z_star_n: T,
    pub gap: T,
    /// Threshold plugged into the candidate term.
    pub u_certificate: UCertificate<T>,
    pub candidate: Decision<T>,
    pub saa_decision: Decision<T>,
    /// Certificate of the sample problem's solution.
    pub saa_certificate: UCertificate<T>,
    pub per_obs_gaps: Vec<T>,
    pub sizes: SampleSizes,
    /// Coherent mode: vertex chosen on `S_ℓ`.
    pub selected_vertex: Option<usize>,
}

fn independent<T: Scalar>(a: &Sample<T>, b: &Sample<T>, what: &str) -> Result<()> {
    if a.provenance() == b.provenance() {
        Err(Error::IndependenceViolation(format!(
            "{what} share stream {}",
            a.provenance()
        )))
    } else {
        Ok(())
    }
}

/// Sample problem minimum over `X`, never above the candidate's own value.
///
/// Finite spaces are enumerated exactly; on intervals the search result is
/// compared with `x̂`, which is itself feasible.
fn sample_optimum<T: Scalar>(
    mut solution: SaaSolution<T>,
    candidate: &Decision<T>,
    candidate_risk: &risk::RiskMinimum<T>,
) -> SaaSolution<T> {
    if candidate_risk.value < solution.value {
        solution = SaaSolution {
            decision: candidate.clone(),
            certificate: candidate_risk.certificate.clone(),
            value: candidate_risk.value,
        };
    }
    solution
}

fn per_observation<T: Scalar>(
    hat: impl Fn(T) -> T,
    star: impl Fn(T) -> T,
    hat_costs: &[T],
    star_costs: &[T],
) -> Vec<T> {
    hat_costs
        .iter()
        .zip(star_costs)
        .map(|(&a, &b)| hat(a) - star(b))
        .collect()
}

/// `G_n = ρ^n(f_x̂) - z*_n` on a single sample.
pub fn gap_naive<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    s_n: &Sample<T>,
) -> Result<GapEstimate<T>> {
    let hat_costs = problems::cost_vector(problem, x_hat, s_n)?;
    let hat = risk::minimize_u(spec, &Costs::equal(&hat_costs))?;
    let saa = sample_optimum(problems::solve_saa(problem, spec, s_n)?, x_hat, &hat);
    let star_costs = problems::cost_vector(problem, &saa.decision, s_n)?;
    let per_obs_gaps = per_observation(
        |y| risk::r_unchecked(spec, y, &hat.certificate),
        |y| risk::r_unchecked(spec, y, &saa.certificate),
        &hat_costs,
        &star_costs,
    );
    Ok(GapEstimate {
        mode: GapMode::Naive,
        z_hat: hat.value,
        z_star_n: saa.value,
        gap: hat.value - saa.value,
        u_certificate: hat.certificate,
        candidate: x_hat.clone(),
        saa_decision: saa.decision,
        saa_certificate: saa.certificate,
        per_obs_gaps,
        sizes: SampleSizes {
            n: s_n.size(),
            m: None,
            l: None,
        },
        selected_vertex: None,
    })
}

/// `G_{n,m} = E^n[r(f_x̂, u*_m)] - z*_n` with `u*_m` fitted on `S_m`.
pub fn gap_two_sample<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    s_n: &Sample<T>,
    s_m: &Sample<T>,
) -> Result<GapEstimate<T>> {
    if spec.is_coherent() {
        return Err(Error::Unsupported(
            "coherent measures use the three-sample estimator".into(),
        ));
    }
    independent(s_n, s_m, "S_n and S_m")?;
    let fresh_costs = problems::cost_vector(problem, x_hat, s_m)?;
    let u_m = risk::minimize_u(spec, &Costs::equal(&fresh_costs))?.certificate;

    let hat_costs = problems::cost_vector(problem, x_hat, s_n)?;
    let z_hat = risk::plugin_estimate(spec, &Costs::equal(&hat_costs), &u_m)?;
    let hat_min = risk::minimize_u(spec, &Costs::equal(&hat_costs))?;
    let saa = sample_optimum(problems::solve_saa(problem, spec, s_n)?, x_hat, &hat_min);
    let star_costs = problems::cost_vector(problem, &saa.decision, s_n)?;
    let per_obs_gaps = per_observation(
        |y| risk::r_unchecked(spec, y, &u_m),
        |y| risk::r_unchecked(spec, y, &saa.certificate),
        &hat_costs,
        &star_costs,
    );
    Ok(GapEstimate {
        mode: GapMode::TwoSample,
        z_hat,
        z_star_n: saa.value,
        gap: z_hat - saa.value,
        u_certificate: u_m,
        candidate: x_hat.clone(),
        saa_decision: saa.decision,
        saa_certificate: saa.certificate,
        per_obs_gaps,
        sizes: SampleSizes {
            n: s_n.size(),
            m: Some(s_m.size()),
            l: None,
        },
        selected_vertex: None,
    })
}

/// `G_{n,m,ℓ} = ẑ_{n,m} - z*_{n,ℓ}` for a coherent measure.
///
/// `ẑ_{n,m}` maximizes the plug-in value over vertices with thresholds from
/// `S_m`; `z*_{n,ℓ}` solves the sample problem on `S_n` at the vertex that
/// maximizes the candidate's empirical risk on `S_ℓ`. The result may be
/// negative in a finite sample and is reported as is.
pub fn gap_coherent<T: Scalar>(
    problem: &ProblemInstance<T>,
    spec: &RiskSpec<T>,
    x_hat: &Decision<T>,
    s_n: &Sample<T>,
    s_m: &Sample<T>,
    s_l: &Sample<T>,
) -> Result<GapEstimate<T>> {
    let RiskSpec::Coherent { vertices } = spec else {
        return Err(Error::Unsupported(format!("{spec} is not coherent")));
    };
    if !problem.nonneg() {
        return Err(Error::NonNegativeRequired(problem.name().to_string()));
    }
    independent(s_n, s_m, "S_n and S_m")?;
    independent(s_n, s_l, "S_n and S_l")?;

    let fresh_costs = problems::cost_vector(problem, x_hat, s_m)?;
    let u_m = risk::minimize_u(spec, &Costs::equal(&fresh_costs))?.certificate;
    let hat_costs = problems::cost_vector(problem, x_hat, s_n)?;
    let (z_hat, hat_vertex) = risk::plugin_coherent(spec, &Costs::equal(&hat_costs), &u_m)?;

    let third_costs = problems::cost_vector(problem, x_hat, s_l)?;
    let choice = risk::select_vertex(spec, &Costs::equal(&third_costs))?;
    let vertex = &vertices[choice.index];
    let vertex_spec = RiskSpec::Spectral {
        atoms: vertex.clone(),
    };
    let hat_at_vertex = risk::minimize_u(&vertex_spec, &Costs::equal(&hat_costs))?;
    let saa = sample_optimum(
        problems::solve_saa_fixed_mu(problem, vertex, s_n)?,
        x_hat,
        &hat_at_vertex,
    );
    let star_costs = problems::cost_vector(problem, &saa.decision, s_n)?;
    let per_obs_gaps = per_observation(
        |y| risk::spectral_r(&vertices[hat_vertex], y, &u_m),
        |y| risk::spectral_r(vertex, y, &saa.certificate),
        &hat_costs,
        &star_costs,
    );
    Ok(GapEstimate {
        mode: GapMode::Coherent,
        z_hat,
        z_star_n: saa.value,
        gap: z_hat - saa.value,
        u_certificate: u_m,
        candidate: x_hat.clone(),
        saa_decision: saa.decision,
        saa_certificate: saa.certificate,
        per_obs_gaps,
        sizes: SampleSizes {
            n: s_n.size(),
            m: Some(s_m.size()),
            l: Some(s_l.size()),
        },
        selected_vertex: Some(choice.index),
    })
}

impl<T: Scalar> GapEstimate<T> {
    /// Mean of the per-observation gaps.
    pub fn per_obs_mean(&self) -> T {
        scalar::mean(self.per_obs_gaps.iter().copied()).unwrap_or_else(T::nan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;
    use crate::risk::SpectralMeasure;
    use crate::sampling::{draw_sample, StreamKey};
    use approx::assert_abs_diff_eq;

    fn full(problem: &ProblemInstance<f64>, label: &str) -> Sample<f64> {
        let idx: Vec<usize> = (0..problem.distribution().support_size()).collect();
        Sample::from_outcomes(problem.distribution(), &idx, StreamKey::new(0, label)).unwrap()
    }

    fn cvar(a: f64) -> RiskSpec<f64> {
        RiskSpec::cvar(a).unwrap()
    }

    #[test]
    fn naive_examples() {
        let p = builtin::twodec::<f64>();
        let x1 = p.decision("x1").unwrap().clone();
        let g = gap_naive(&p, &cvar(0.5), &x1, &full(&p, "S_n")).unwrap();
        assert_abs_diff_eq!(g.z_hat, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.z_star_n, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.gap, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.per_obs_mean(), g.gap, epsilon = 1e-9);

        let x2 = p.decision("x2").unwrap().clone();
        let g = gap_naive(&p, &cvar(0.5), &x2, &full(&p, "S_n")).unwrap();
        assert_eq!(g.gap, 0.0);

        let d = builtin::degenerate::<f64>();
        let b = d.decision("b").unwrap().clone();
        let s = draw_sample(d.distribution(), 3, &StreamKey::new(1, "S_n")).unwrap();
        let g = gap_naive(&d, &cvar(0.7), &b, &s).unwrap();
        assert_eq!((g.z_hat, g.z_star_n, g.gap), (5.0, 3.0, 2.0));
    }

    #[test]
    fn two_sample_examples() {
        let p = builtin::twodec::<f64>();
        let x1 = p.decision("x1").unwrap().clone();
        let g = gap_two_sample(&p, &cvar(0.5), &x1, &full(&p, "S_n"), &full(&p, "S_m")).unwrap();
        // u ↦ E^m[r] is flat on [0, 10]; the lower order statistic is kept.
        assert_eq!(g.u_certificate, UCertificate::Scalar(0.0));
        assert_abs_diff_eq!(g.z_hat, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.z_star_n, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.gap, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.per_obs_mean(), g.gap, epsilon = 1e-9);

        let d = builtin::degenerate::<f64>();
        let b = d.decision("b").unwrap().clone();
        let sn = draw_sample(d.distribution(), 4, &StreamKey::new(1, "S_n")).unwrap();
        let sm = draw_sample(d.distribution(), 9, &StreamKey::new(1, "S_m")).unwrap();
        let g = gap_two_sample(&d, &cvar(0.3), &b, &sn, &sm).unwrap();
        assert_eq!(g.u_certificate, UCertificate::Scalar(5.0));
        assert_eq!(g.gap, 2.0);
    }

    #[test]
    fn two_sample_rejects_shared_stream() {
        let p = builtin::twodec::<f64>();
        let x1 = p.decision("x1").unwrap().clone();
        let s = full(&p, "S_n");
        assert!(matches!(
            gap_two_sample(&p, &cvar(0.5), &x1, &s, &s),
            Err(Error::IndependenceViolation(_))
        ));
    }

    #[test]
    fn expectation_modes_coincide() {
        let p = builtin::portfolio_menu::<f64>();
        let x = p.decision("stock-b").unwrap().clone();
        let sn = draw_sample(p.distribution(), 30, &StreamKey::new(4, "S_n")).unwrap();
        for label in ["S_m", "other"] {
            let sm = draw_sample(p.distribution(), 7, &StreamKey::new(4, label)).unwrap();
            let a = gap_naive(&p, &RiskSpec::Expectation, &x, &sn).unwrap();
            let b = gap_two_sample(&p, &RiskSpec::Expectation, &x, &sn, &sm).unwrap();
            assert_eq!(a.gap, b.gap);
            assert_eq!(a.per_obs_gaps, b.per_obs_gaps);
            assert_eq!(b.u_certificate, UCertificate::Empty);
        }
    }

    #[test]
    fn coherent_examples() {
        let p = builtin::twodec::<f64>();
        let x1 = p.decision("x1").unwrap().clone();
        let mean = SpectralMeasure::point(0.0).unwrap();
        let tail = SpectralMeasure::point(0.5).unwrap();
        let spec = RiskSpec::coherent(vec![mean, tail.clone()]).unwrap();
        let (sn, sm, sl) = (full(&p, "S_n"), full(&p, "S_m"), full(&p, "S_l"));
        let g = gap_coherent(&p, &spec, &x1, &sn, &sm, &sl).unwrap();
        assert_eq!(g.selected_vertex, Some(1));
        assert_abs_diff_eq!(g.z_hat, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.z_star_n, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.gap, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.per_obs_mean(), g.gap, epsilon = 1e-9);

        // A singleton vertex set reduces to the spectral two-sample estimator.
        let single = RiskSpec::coherent(vec![tail.clone()]).unwrap();
        let spectral = RiskSpec::Spectral { atoms: tail };
        let sn = draw_sample(p.distribution(), 6, &StreamKey::new(2, "S_n")).unwrap();
        let sm = draw_sample(p.distribution(), 11, &StreamKey::new(2, "S_m")).unwrap();
        let sl = draw_sample(p.distribution(), 5, &StreamKey::new(2, "S_l")).unwrap();
        let a = gap_coherent(&p, &single, &x1, &sn, &sm, &sl).unwrap();
        let b = gap_two_sample(&p, &spectral, &x1, &sn, &sm).unwrap();
        assert_eq!((a.z_hat, a.z_star_n, a.gap), (b.z_hat, b.z_star_n, b.gap));
        assert_eq!(a.per_obs_gaps, b.per_obs_gaps);
    }

    #[test]
    fn coherent_guards() {
        let p = builtin::twodec::<f64>();
        let x1 = p.decision("x1").unwrap().clone();
        let spec = RiskSpec::coherent(vec![SpectralMeasure::point(0.5).unwrap()]).unwrap();
        let (sn, sm) = (full(&p, "S_n"), full(&p, "S_m"));
        assert!(matches!(
            gap_coherent(&p, &spec, &x1, &sn, &sm, &sn),
            Err(Error::IndependenceViolation(_))
        ));
        // S_l may share its stream with S_m.
        assert!(gap_coherent(&p, &spec, &x1, &sn, &sm, &sm).is_ok());
        assert!(gap_two_sample(&p, &spec, &x1, &sn, &sm).is_err());
        let neg = ProblemInstance::from_cost_matrix("neg", &["a"], &[1.0], vec![vec![-1.0]], false).unwrap();
        let a = neg.decision("a").unwrap().clone();
        let s1 = full(&neg, "1");
        let s2 = full(&neg, "2");
        let s3 = full(&neg, "3");
        assert!(matches!(
            gap_coherent(&neg, &spec, &a, &s1, &s2, &s3),
            Err(Error::NonNegativeRequired(_))
        ));
    }

    #[test]
    fn interval_gap_is_nonnegative() {
        let p = builtin::newsvendor1d::<f64>();
        for seed in 0..30 {
            let sn = draw_sample(p.distribution(), 8, &StreamKey::new(seed, "S_n")).unwrap();
            let sm = draw_sample(p.distribution(), 40, &StreamKey::new(seed, "S_m")).unwrap();
            for x in [0.0, 2.0, 5.0, 7.9, 10.0] {
                let x = p.point(x).unwrap();
                let g = gap_two_sample(&p, &cvar(0.7), &x, &sn, &sm).unwrap();
                assert!(g.gap >= -1e-12, "gap {}", g.gap);
                assert_abs_diff_eq!(g.per_obs_mean(), g.gap, epsilon = 1e-9);
            }
        }
    }
}
