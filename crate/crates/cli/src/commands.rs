//! Implementations of the non-simulation subcommands.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use treg_core::gibbs::{run_chain, summarize, ChainConfig, ParameterSummary};
use treg_core::priors::PriorDescription;
use treg_core::propriety::{audit as audit_data, audit_dims, DivergenceKind};
use treg_core::regression::Dataset;
use treg_core::{Error, Result};

use crate::custom_prior::build_prior;
use crate::{AuditArgs, DivergenceDemoArgs, FitArgs, PriorCurveArgs, SCHEMA_VERSION};

/// Summary emitted by `fit` as `summary.json`.
#[derive(Debug, Serialize)]
struct FitReport {
    schema_version: u32,
    prior: PriorDescription,
    data_file: String,
    n: usize,
    p: usize,
    seed: u64,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    nu_floor: f64,
    draws: usize,
    nu_acceptance_rate: f64,
    parameters: Vec<ParameterSummary>,
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let dataset = Dataset::from_csv_path(&args.data, args.intercept)?;
    let prior = build_prior(&args.prior, dataset.p())?;

    let mut config = ChainConfig::new(args.iters, args.burn, args.thin, args.seed);
    config.nu_proposal_sd = args.nu_proposal_sd;
    config.nu_floor = args.nu_floor;
    config.propriety_override = args.nu_floor > 0.0;

    let trace = run_chain(&dataset, &prior, &config)?;
    let summary = summarize(&trace)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::Io(format!("{}: {e}", args.out.display())))?;

    let trace_path = args.out.join("trace.csv");
    let mut w = fs::File::create(&trace_path)
        .map_err(|e| Error::Io(format!("{}: {e}", trace_path.display())))?;
    let names = trace.parameter_names().join(",");
    writeln!(w, "iter,{names}")?;
    for (k, draw) in trace.draws.iter().enumerate() {
        let iter = config.burn_in + (k + 1) * config.thin - 1;
        write!(w, "{iter}")?;
        for b in draw.beta.iter() {
            write!(w, ",{b}")?;
        }
        writeln!(w, ",{},{}", draw.sigma2, draw.nu)?;
    }

    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        prior: prior.describe(),
        data_file: args.data.display().to_string(),
        n: dataset.n(),
        p: dataset.p(),
        seed: args.seed,
        iterations: args.iters,
        burn_in: args.burn,
        thin: args.thin,
        nu_floor: args.nu_floor,
        draws: summary.draws,
        nu_acceptance_rate: summary.nu_acceptance_rate,
        parameters: summary.parameters.clone(),
    };
    let summary_path = args.out.join("summary.json");
    write_json(&summary_path, &serde_json::to_value(&report).expect("serializable report"))?;

    println!(
        "fitted {} draws ({} scans, burn-in {}, thin {}), nu acceptance {:.2}",
        summary.draws, args.iters, args.burn, args.thin, summary.nu_acceptance_rate
    );
    println!(
        "{:<10} {:>12} {:>12} {:>12} {:>12} {:>9}",
        "parameter", "mean", "sd", "2.5%", "97.5%", "ess"
    );
    for p in &summary.parameters {
        println!(
            "{:<10} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>9.1}",
            p.name, p.mean, p.sd, p.ci_lower, p.ci_upper, p.ess
        );
    }
    println!("trace:   {}", trace_path.display());
    println!("summary: {}", summary_path.display());
    Ok(())
}

pub fn audit(args: &AuditArgs) -> Result<()> {
    let report = match (&args.data, args.n, args.p) {
        (Some(path), _, _) => {
            let dataset = Dataset::from_csv_path(path, args.intercept)?;
            let prior = build_prior(&args.prior, dataset.p())?;
            audit_data(&dataset, &prior, &args.nu_grid)?
        }
        (None, Some(n), Some(p)) => {
            let prior = build_prior(&args.prior, p)?;
            audit_dims(n, p, &prior, &args.nu_grid)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "audit needs either --data or both --n and --p".into(),
            ))
        }
    };

    let mut json = serde_json::to_value(&report).expect("serializable report");
    json.as_object_mut()
        .expect("report serializes to an object")
        .insert("schema_version".into(), SCHEMA_VERSION.into());
    let text = serde_json::to_string_pretty(&json).expect("serializable report");
    println!("{text}");
    if let Some(path) = &args.out {
        fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn prior_curve(args: &PriorCurveArgs) -> Result<()> {
    if !(args.nu_min.is_finite() && args.nu_max.is_finite())
        || args.nu_min <= 0.0
        || args.nu_max <= args.nu_min
    {
        return Err(Error::InvalidInput(format!(
            "need 0 < nu-min < nu-max, got [{}, {}]",
            args.nu_min, args.nu_max
        )));
    }
    if args.steps < 2 {
        return Err(Error::InvalidInput("need at least 2 steps".into()));
    }
    let prior = build_prior(&args.prior, args.p)?;
    let normalizer = prior.normalizer_cached()?;

    let mut text = String::from("nu,density,kind\n");
    let label = prior.kind().label();
    let step = (args.nu_max / args.nu_min).ln() / (args.steps - 1) as f64;
    for i in 0..args.steps {
        let nu = args.nu_min * (step * i as f64).exp();
        let density = prior.nu_log_unnormalized(nu)?.exp() / normalizer;
        text.push_str(&format!("{nu},{density},{label}\n"));
    }
    emit(args.out.as_deref(), &text)
}

pub fn divergence_demo(args: &DivergenceDemoArgs) -> Result<()> {
    if args.nu.is_empty() {
        return Err(Error::InvalidInput(
            "pass at least one probe value with --nu".into(),
        ));
    }
    let evidence =
        treg_core::propriety::divergence_diagnostic(&args.nu, args.n, args.p, args.a, 0.0)?;

    println!(
        "{:<10} {:>10} {:>24} {:>14}",
        "nu", "c", "classification", "law_residual"
    );
    for ev in &evidence {
        let label = if ev.c.abs() <= 1e-9 {
            "log-divergent (c = 0)".to_string()
        } else {
            match ev.classification {
                DivergenceKind::Divergent => "divergent".to_string(),
                DivergenceKind::Convergent => "convergent".to_string(),
            }
        };
        println!(
            "{:<10.6} {:>10.4} {:>24} {:>14.3e}",
            ev.nu, ev.c, label, ev.law_residual
        );
    }

    let mut text = String::from("nu,eps,value\n");
    for ev in &evidence {
        for g in &ev.growth {
            text.push_str(&format!("{},{},{}\n", ev.nu, g.eps, g.value));
        }
    }
    emit(args.out.as_deref(), &text)
}

/// Writes `text` to `path`, or to stdout when no path was given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => {
            fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub(crate) fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
