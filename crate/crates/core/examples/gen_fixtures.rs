//! Regenerates `tests/fixtures/oracle_values.json`:
//!
//!     cargo run -p riskgap --example gen_fixtures > crates/core/tests/fixtures/oracle_values.json

use riskgap::oracle::{self, EnumerationSizes, Estimator};
use riskgap::problems::builtin;
use riskgap::{RiskSpec64, SpectralMeasure64};
use serde_json::{json, Value};

fn case(problem: &str, spec: &RiskSpec64, candidate: &str, estimator: Estimator, n: usize, m: usize, l: usize) -> Value {
    let p = builtin::by_name::<f64>(problem).expect("built-in");
    let x = p.decision(candidate).expect("candidate").clone();
    let value = oracle::exact_estimator_expectation(estimator, &p, spec, &x, EnumerationSizes::new(n, m, l))
        .expect("within budget");
    json!({
        "problem": problem,
        "risk": spec,
        "candidate": candidate,
        "estimator": estimator,
        "n": n, "m": m, "l": l,
        "value": value,
    })
}

fn solution(problem: &str, spec: &RiskSpec64, candidate: &str) -> Value {
    let p = builtin::by_name::<f64>(problem).expect("built-in");
    let x = p.decision(candidate).expect("candidate").clone();
    let s = oracle::exact_solution(&p, spec, &x).expect("finite instance");
    json!({
        "problem": problem,
        "risk": spec,
        "candidate": candidate,
        "x_star": s.x_star.label,
        "z_star": s.z_star,
        "z_hat": s.z_hat,
        "true_gap": s.true_gap,
    })
}

fn main() {
    let cvar = |a| RiskSpec64::cvar(a).unwrap();
    let spectral = RiskSpec64::spectral(&[(0.5, 0.5), (0.8, 0.5)]).unwrap();
    let coherent = RiskSpec64::coherent(vec![
        SpectralMeasure64::point(0.0).unwrap(),
        SpectralMeasure64::point(0.5).unwrap(),
    ])
    .unwrap();

    let mut expectations = vec![
        case("twopoint", &cvar(0.8), "x", Estimator::EmpiricalRiskAtCandidate, 5, 1, 1),
        case("twopoint", &cvar(0.8), "x", Estimator::ZHatNM, 5, 5, 1),
        case("twopoint", &cvar(0.8), "x", Estimator::GapNM, 5, 5, 1),
        case("twopoint", &spectral, "x", Estimator::ZHatNM, 1, 5, 1),
        case("twodec", &cvar(0.5), "x1", Estimator::ZStarN, 2, 1, 1),
        case("twodec", &coherent, "x1", Estimator::ZStarNEll, 3, 3, 3),
        case("twodec", &coherent, "x1", Estimator::GapNML, 3, 3, 3),
        case("portfolio-menu", &cvar(0.8), "equal", Estimator::ZStarN, 3, 1, 1),
    ];
    for n in 1..=4 {
        for m in 1..=4 {
            expectations.push(case("twodec", &cvar(0.5), "x1", Estimator::GapNM, n, m, 1));
        }
    }
    let solutions = vec![
        solution("twopoint", &cvar(0.8), "x"),
        solution("twopoint", &spectral, "x"),
        solution("twodec", &cvar(0.5), "x1"),
        solution("twodec", &RiskSpec64::Expectation, "x1"),
        solution("twodec", &coherent, "x1"),
        solution("portfolio-menu", &cvar(0.8), "equal"),
        solution("portfolio-menu", &RiskSpec64::entropic(0.05).unwrap(), "stock-b"),
    ];
    let doc = json!({ "expectations": expectations, "solutions": solutions });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
}
