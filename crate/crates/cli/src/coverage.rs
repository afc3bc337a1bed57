//! Frequentist coverage study for the 95% credible intervals.
//!
//! Each replicate simulates a dataset from the model at the given true
//! parameters, fits it with the independence-Jeffreys prior (the proper
//! one), and records which intervals cover the truth. Replicates run in
//! parallel with per-replicate seeds derived from the master seed, so the
//! report does not depend on scheduling order.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::Serialize;
use treg_core::gibbs::{run_chain, summarize, ChainConfig};
use treg_core::priors::PriorSpec;
use treg_core::regression::Dataset;
use treg_core::{Error, Result};

use crate::commands::write_json;
use crate::{CoverageArgs, SCHEMA_VERSION};

#[derive(Debug, Serialize)]
struct CoverageRow {
    parameter: String,
    covered: usize,
    attempted: usize,
    coverage: f64,
    /// Binomial standard error of the coverage estimate.
    se: f64,
}

#[derive(Debug, Serialize)]
struct CoverageReport {
    schema_version: u32,
    n: usize,
    p: usize,
    true_beta: f64,
    true_sigma2: f64,
    true_nu: f64,
    replicates: usize,
    /// Replicates whose fit failed; excluded from the denominators.
    failures: usize,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
    rows: Vec<CoverageRow>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn replicate_seed(master: u64, replicate: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(replicate.wrapping_mul(2).wrapping_add(stream)))
}

/// Simulates one dataset and reports which true parameters its fitted 95%
/// intervals cover, ordered as beta components, then sigma^2, then nu.
fn one_replicate(args: &CoverageArgs, replicate: u64) -> Result<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(args.seed, replicate, 0));
    let x = DMatrix::from_fn(args.n, args.p, |_, _| {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let noise = StudentT::new(args.true_nu)
        .map_err(|e| Error::InvalidInput(format!("true-nu: {e}")))?;
    let sigma = args.true_sigma2.sqrt();
    let beta = DVector::from_element(args.p, args.true_beta);
    let eps = DVector::from_fn(args.n, |_, _| noise.sample(&mut rng) * sigma);
    let y = &x * &beta + eps;
    let dataset = Dataset::new(y, x)?;

    let prior = PriorSpec::independence_jeffreys(args.p)?;
    let config = ChainConfig::new(
        args.iters,
        args.burn,
        args.thin,
        replicate_seed(args.seed, replicate, 1),
    );
    let trace = run_chain(&dataset, &prior, &config)?;
    let summary = summarize(&trace)?;

    let mut covered = Vec::with_capacity(args.p + 2);
    for (i, param) in summary.parameters.iter().enumerate() {
        let truth = if i < args.p {
            args.true_beta
        } else if i == args.p {
            args.true_sigma2
        } else {
            args.true_nu
        };
        covered.push(param.ci_lower <= truth && truth <= param.ci_upper);
    }
    Ok(covered)
}

pub fn run(args: &CoverageArgs) -> Result<()> {
    if args.replicates == 0 {
        return Err(Error::InvalidInput(
            "coverage needs at least one replicate".into(),
        ));
    }
    if args.p < 1 || args.n <= args.p {
        return Err(Error::InvalidInput(format!(
            "coverage needs n > p >= 1, got n = {}, p = {}",
            args.n, args.p
        )));
    }
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if !positive(args.true_sigma2) || !positive(args.true_nu) {
        return Err(Error::InvalidInput(
            "true-sigma2 and true-nu must be positive".into(),
        ));
    }

    let results: Vec<Result<Vec<bool>>> = (0..args.replicates as u64)
        .into_par_iter()
        .map(|r| one_replicate(args, r))
        .collect();

    let mut failures = 0;
    let mut counts = vec![0usize; args.p + 2];
    let mut attempted = 0usize;
    for result in results {
        match result {
            Ok(covered) => {
                attempted += 1;
                for (slot, hit) in counts.iter_mut().zip(covered) {
                    *slot += hit as usize;
                }
            }
            Err(err) => {
                failures += 1;
                eprintln!("replicate failed: {err}");
            }
        }
    }
    if attempted == 0 {
        return Err(Error::NoConvergence(
            "every coverage replicate failed".into(),
        ));
    }

    let names: Vec<String> = (1..=args.p)
        .map(|j| format!("beta_{j}"))
        .chain(["sigma2".to_string(), "nu".to_string()])
        .collect();
    let rows: Vec<CoverageRow> = names
        .into_iter()
        .zip(counts)
        .map(|(parameter, covered)| {
            let coverage = covered as f64 / attempted as f64;
            CoverageRow {
                parameter,
                covered,
                attempted,
                coverage,
                se: (coverage * (1.0 - coverage) / attempted as f64).sqrt(),
            }
        })
        .collect();

    println!(
        "coverage of 95% intervals over {} replicates (n = {}, p = {}, {} failures)",
        attempted, args.n, args.p, failures
    );
    println!("{:<10} {:>10} {:>10} {:>16}", "parameter", "coverage", "se", "covered/attempted");
    for row in &rows {
        println!(
            "{:<10} {:>10.3} {:>10.3} {:>13}/{}",
            row.parameter, row.coverage, row.se, row.covered, row.attempted
        );
    }

    let report = CoverageReport {
        schema_version: SCHEMA_VERSION,
        n: args.n,
        p: args.p,
        true_beta: args.true_beta,
        true_sigma2: args.true_sigma2,
        true_nu: args.true_nu,
        replicates: args.replicates,
        failures,
        iterations: args.iters,
        burn_in: args.burn,
        thin: args.thin,
        seed: args.seed,
        rows,
    };
    if let Some(path) = &args.out {
        write_json(path, &serde_json::to_value(&report).expect("serializable report"))?;
        println!("report: {}", path.display());
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::to_value(&report).expect("serializable"))
                .expect("serializable")
        );
    }
    Ok(())
}
