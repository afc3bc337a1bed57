//! End-to-end flows through the public API: CSV ingestion, auditing,
//! fitting, and serialization of the report types.

use std::io::Write;

use treg_core::gibbs::{run_chain, summarize, ChainConfig};
use treg_core::priors::{write_prior_curve_csv, PriorKind, PriorSpec};
use treg_core::propriety::{audit, Verdict};
use treg_core::regression::Dataset;
use treg_core::Error;

fn fixture_csv() -> &'static str {
    "y,x1\n0.4,0.1\n-0.3,-0.5\n1.2,0.9\n0.8,0.4\n-0.9,-1.1\n0.1,0.2\n1.6,1.3\n-0.2,-0.4\n0.9,0.8\n-1.4,-1.2\n"
}

#[test]
fn csv_to_fit_to_summary() {
    let dataset = Dataset::from_csv_reader(fixture_csv().as_bytes(), true).unwrap();
    assert_eq!(dataset.n(), 10);
    assert_eq!(dataset.p(), 2);

    let prior = PriorSpec::independence_jeffreys(dataset.p()).unwrap();
    let config = ChainConfig::new(4_000, 1_000, 3, 7);
    let trace = run_chain(&dataset, &prior, &config).unwrap();
    assert_eq!(trace.draws.len(), 1000);

    let summary = summarize(&trace).unwrap();
    assert_eq!(summary.parameters.len(), dataset.p() + 2);
    let names: Vec<&str> = summary
        .parameters
        .iter()
        .map(|p| p.name.as_str())
        .collect();
    assert_eq!(names, vec!["beta_1", "beta_2", "sigma2", "nu"]);
    for param in &summary.parameters {
        assert!(param.mean.is_finite());
        assert!(param.sd >= 0.0);
        assert!(param.ci_lower <= param.mean && param.mean <= param.ci_upper);
        assert!(param.ess > 0.0);
    }
}

#[test]
fn rule_prior_is_refused_with_the_threshold_attached() {
    let dataset = Dataset::from_csv_reader(fixture_csv().as_bytes(), true).unwrap();
    let prior = PriorSpec::jeffreys_rule(dataset.p()).unwrap();
    let config = ChainConfig::new(2_000, 500, 1, 7);
    let err = run_chain(&dataset, &prior, &config).unwrap_err();
    match err {
        Error::ImproperPosterior { critical_nu, .. } => {
            // a = 1 + p/2 = 2 and n - p = 8 here.
            assert!((critical_nu - 0.25).abs() < 1e-15);
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
}

#[test]
fn audit_report_serializes_with_stable_field_names() {
    let dataset = Dataset::from_csv_reader(fixture_csv().as_bytes(), true).unwrap();
    let prior = PriorSpec::jeffreys_rule(dataset.p()).unwrap();
    let report = audit(&dataset, &prior, &[0.05, 0.5]).unwrap();
    assert_eq!(report.verdict, Verdict::Improper);

    let json: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(json["verdict"], "improper");
    assert_eq!(json["n"], 10);
    assert_eq!(json["p"], 2);
    assert!(json["critical_nu"].as_f64().unwrap() > 0.0);
    assert!(json["evidence"].as_array().unwrap().len() == 2);
    assert!(json["evidence"][0]["growth"].as_array().unwrap().len() >= 5);
}

#[test]
fn trace_summary_serializes_every_parameter() {
    let dataset = Dataset::from_csv_reader(fixture_csv().as_bytes(), true).unwrap();
    let prior = PriorSpec::independence_jeffreys(dataset.p()).unwrap();
    let trace = run_chain(&dataset, &prior, &ChainConfig::new(1_200, 200, 2, 11)).unwrap();
    let summary = summarize(&trace).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["draws"], 500);
    assert_eq!(json["parameters"].as_array().unwrap().len(), 4);
    assert!(json["nu_acceptance_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn prior_curve_csv_round_trips_through_a_reader() {
    let grid: Vec<f64> = (0..50)
        .map(|i| 1e-2 * (1e4f64.powf(i as f64 / 49.0)))
        .collect();
    let mut buf = Vec::new();
    write_prior_curve_csv(&mut buf, &PriorKind::IndependenceJeffreys, 1, &grid).unwrap();
    buf.flush().unwrap();

    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        vec!["nu", "log_unnormalized_density", "kind"]
    );
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let nu: f64 = record[0].parse().unwrap();
        let lp: f64 = record[1].parse().unwrap();
        assert!(nu > 0.0);
        assert!(lp.is_finite());
        assert_eq!(&record[2], "independence");
        rows += 1;
    }
    assert_eq!(rows, 50);
}

#[test]
fn chains_are_deterministic_given_a_seed() {
    let dataset = Dataset::from_csv_reader(fixture_csv().as_bytes(), true).unwrap();
    let prior = PriorSpec::independence_jeffreys(dataset.p()).unwrap();
    let config = ChainConfig::new(2_000, 400, 4, 0xfeed);
    let a = run_chain(&dataset, &prior, &config).unwrap();
    let b = run_chain(&dataset, &prior, &config).unwrap();
    for (da, db) in a.draws.iter().zip(&b.draws) {
        assert_eq!(da.sigma2, db.sigma2);
        assert_eq!(da.nu, db.nu);
        assert_eq!(da.beta, db.beta);
    }

    let mut other = config;
    other.seed ^= 1;
    let c = run_chain(&dataset, &prior, &other).unwrap();
    assert!(a.draws.iter().zip(&c.draws).any(|(x, y)| x.nu != y.nu));
}
