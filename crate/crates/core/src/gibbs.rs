//! Gibbs sampler for the Student-t regression model under a [`PriorSpec`].
//!
//! The scale-mixture augmentation makes every block conditionally tractable
//! except the degrees of freedom: `beta` is Gaussian around the weighted
//! least-squares solution, `sigma^2` is inverse gamma, each mixing weight is
//! gamma, and `nu` moves by a random-walk Metropolis step on `ln nu`.
//!
//! Running a chain against a prior whose posterior is improper would produce
//! draws from nothing; [`run_chain`] audits first and refuses with
//! [`Error::ImproperPosterior`] unless the caller explicitly truncates `nu`
//! above the critical threshold and sets the override flag.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::priors::PriorSpec;
use crate::propriety::{audit_dims, sigma_integrability_check, Verdict};
use crate::regression::{weighted_regression, Dataset, MixingVector, WlsDecomposition};
use crate::specfun;

/// Sampler configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    /// Total Gibbs scans, including burn-in.
    pub iterations: usize,
    /// Leading scans discarded before any draw is kept.
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in scan.
    pub thin: usize,
    pub seed: u64,
    /// Standard deviation of the random-walk proposal on `ln nu`.
    pub nu_proposal_sd: f64,
    /// Hard lower truncation for `nu`; proposals at or below it are
    /// rejected. Zero means no truncation.
    pub nu_floor: f64,
    /// Acknowledges an improper posterior and requests sampling of the
    /// truncated model anyway; only honored when `nu_floor` exceeds the
    /// critical threshold.
    pub propriety_override: bool,
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        ChainConfig {
            iterations,
            burn_in,
            thin,
            seed,
            nu_proposal_sd: 0.5,
            nu_floor: 0.0,
            propriety_override: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if !self.nu_proposal_sd.is_finite() || self.nu_proposal_sd <= 0.0 {
            return Err(Error::invalid(format!(
                "nu proposal sd must be positive, got {}",
                self.nu_proposal_sd
            )));
        }
        if !self.nu_floor.is_finite() || self.nu_floor < 0.0 {
            return Err(Error::invalid(format!(
                "nu floor must be finite and >= 0, got {}",
                self.nu_floor
            )));
        }
        Ok(())
    }
}

/// Current sampler state.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub nu: f64,
    pub lambda: MixingVector,
}

impl ChainState {
    /// Deterministic initialization: unweighted least squares for `beta`,
    /// its residual variance for `sigma^2`, unit mixing weights, and a
    /// moderate `nu` compatible with the floor and the prior's support.
    pub fn init(dataset: &Dataset, prior: &PriorSpec, config: &ChainConfig) -> Result<Self> {
        let lambda = MixingVector::ones(dataset.n());
        let wls = weighted_regression(dataset, &lambda)?;
        let dof = (dataset.n() - dataset.p()) as f64;
        let sigma2 = (wls.s2() / dof).max(1e-12);
        let support = prior.support();
        let floor = config.nu_floor.max(support.min);
        let mut nu = (floor + 1.0).max(5.0);
        if let Some(hi) = support.max {
            if nu >= hi {
                nu = 0.5 * (floor + hi);
            }
        }
        Ok(ChainState {
            beta: wls.b().clone(),
            sigma2,
            nu,
            lambda,
        })
    }

    /// One full Gibbs scan; returns whether the `nu` move was accepted.
    pub fn step<R: Rng>(
        &mut self,
        rng: &mut R,
        dataset: &Dataset,
        prior: &PriorSpec,
        config: &ChainConfig,
    ) -> Result<bool> {
        let wls = weighted_regression(dataset, &self.lambda)?;
        self.beta = update_beta(rng, &wls, self.sigma2)?;
        self.sigma2 = update_sigma2(rng, dataset, &self.beta, &self.lambda, prior.a())?;
        self.lambda = update_lambda(rng, dataset, &self.beta, self.sigma2, self.nu)?;
        let (nu, accepted) = update_nu(
            rng,
            &self.lambda,
            prior,
            self.nu,
            config.nu_proposal_sd,
            config.nu_floor,
        )?;
        self.nu = nu;
        Ok(accepted)
    }
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub nu: f64,
}

/// Retained draws plus bookkeeping.
#[derive(Debug, Clone)]
pub struct Trace {
    pub p: usize,
    pub draws: Vec<Draw>,
    pub nu_acceptance_rate: f64,
    pub config: ChainConfig,
}

impl Trace {
    /// Series of one scalar parameter: `beta` components first, then
    /// `sigma2`, then `nu`.
    pub fn series(&self, index: usize) -> Vec<f64> {
        self.draws
            .iter()
            .map(|d| {
                if index < self.p {
                    d.beta[index]
                } else if index == self.p {
                    d.sigma2
                } else {
                    d.nu
                }
            })
            .collect()
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.p).map(|j| format!("beta_{j}")).collect();
        names.push("sigma2".into());
        names.push("nu".into());
        names
    }
}

/// Draws `beta` from its Gaussian full conditional
/// `N(b, sigma^2 (X'DX)^-1)` using the triangular factor of the decomposition.
pub fn update_beta<R: Rng>(
    rng: &mut R,
    wls: &WlsDecomposition,
    sigma2: f64,
) -> Result<DVector<f64>> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "update_beta requires sigma2 > 0, got {sigma2}"
        )));
    }
    let p = wls.b().len();
    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let w = wls.solve_r(&z)?;
    Ok(wls.b() + w * sigma2.sqrt())
}

/// Shape and rate of the inverse-gamma full conditional of `sigma^2`.
pub fn sigma2_conditional_params(
    dataset: &Dataset,
    beta: &DVector<f64>,
    lambda: &MixingVector,
    a: f64,
) -> Result<(f64, f64)> {
    if lambda.len() != dataset.n() {
        return Err(Error::invalid("mixing vector length mismatch"));
    }
    let shape = dataset.n() as f64 / 2.0 + a - 1.0;
    if shape <= 0.0 {
        return Err(Error::domain(format!(
            "inverse-gamma shape n/2 + a - 1 = {shape} is not positive"
        )));
    }
    let resid = dataset.residuals(beta)?;
    let rate: f64 = resid
        .iter()
        .zip(lambda.as_vector().iter())
        .map(|(r, l)| l * r * r)
        .sum::<f64>()
        / 2.0;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::domain(
            "weighted residuals are degenerate; the scale conditional is undefined",
        ));
    }
    Ok((shape, rate))
}

/// Draws `sigma^2` from its inverse-gamma full conditional.
pub fn update_sigma2<R: Rng>(
    rng: &mut R,
    dataset: &Dataset,
    beta: &DVector<f64>,
    lambda: &MixingVector,
    a: f64,
) -> Result<f64> {
    let (shape, rate) = sigma2_conditional_params(dataset, beta, lambda, a)?;
    let gamma = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::domain(format!("invalid gamma parameters: {e}")))?;
    let g: f64 = gamma.sample(rng);
    Ok(1.0 / g.max(f64::MIN_POSITIVE))
}

/// Shape and rate of one mixing weight's gamma full conditional.
pub fn lambda_conditional_params(residual: f64, sigma2: f64, nu: f64) -> (f64, f64) {
    let shape = 0.5 * (nu + 1.0);
    let rate = 0.5 * (nu + residual * residual / sigma2);
    (shape, rate)
}

/// Draws the mixing weights from their independent gamma conditionals.
pub fn update_lambda<R: Rng>(
    rng: &mut R,
    dataset: &Dataset,
    beta: &DVector<f64>,
    sigma2: f64,
    nu: f64,
) -> Result<MixingVector> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "update_lambda requires sigma2 > 0, got {sigma2}"
        )));
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "update_lambda requires nu > 0, got {nu}"
        )));
    }
    let resid = dataset.residuals(beta)?;
    let mut values = DVector::zeros(dataset.n());
    for i in 0..dataset.n() {
        let (shape, rate) = lambda_conditional_params(resid[i], sigma2, nu);
        let gamma = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| Error::domain(format!("invalid gamma parameters: {e}")))?;
        values[i] = gamma.sample(rng).max(1e-300);
    }
    MixingVector::new(values)
}

/// Log full conditional of `nu` given the mixing weights, up to a constant:
/// the prior factor plus the gamma log likelihood of the weights expressed
/// through the sufficient statistics `sum lambda` and `sum ln lambda`.
pub fn nu_log_conditional(
    prior: &PriorSpec,
    nu: f64,
    n: usize,
    sum_lambda: f64,
    sum_ln_lambda: f64,
) -> Result<f64> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "nu_log_conditional requires nu > 0, got {nu}"
        )));
    }
    let prior_part = prior.nu_log_unnormalized(nu)?;
    if prior_part == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let h = 0.5 * nu;
    Ok(prior_part + (n as f64) * (h * h.ln() - specfun::log_gamma(h)?)
        + (h - 1.0) * sum_ln_lambda
        - h * sum_lambda)
}

/// Log Metropolis ratio for a log-scale random walk from `current` to
/// `proposal`, including the Jacobian of the transform.
fn nu_log_ratio(
    prior: &PriorSpec,
    n: usize,
    sum_lambda: f64,
    sum_ln_lambda: f64,
    current: f64,
    proposal: f64,
) -> Result<f64> {
    let num = nu_log_conditional(prior, proposal, n, sum_lambda, sum_ln_lambda)?;
    let den = nu_log_conditional(prior, current, n, sum_lambda, sum_ln_lambda)?;
    Ok(num + proposal.ln() - (den + current.ln()))
}

/// One Metropolis step for `nu`; returns the (possibly unchanged) value and
/// whether the proposal was accepted.
pub fn update_nu<R: Rng>(
    rng: &mut R,
    lambda: &MixingVector,
    prior: &PriorSpec,
    current: f64,
    proposal_sd: f64,
    nu_floor: f64,
) -> Result<(f64, bool)> {
    if !current.is_finite() || current <= 0.0 {
        return Err(Error::domain(format!(
            "update_nu requires a positive current value, got {current}"
        )));
    }
    if !proposal_sd.is_finite() || proposal_sd <= 0.0 {
        return Err(Error::domain(format!(
            "update_nu requires a positive proposal sd, got {proposal_sd}"
        )));
    }
    let z: f64 = rng.sample(StandardNormal);
    let proposal = current * (proposal_sd * z).exp();
    if !proposal.is_finite() || proposal <= nu_floor || proposal <= 0.0 {
        return Ok((current, false));
    }
    let n = lambda.len();
    let sum_lambda: f64 = lambda.as_vector().iter().sum();
    let sum_ln_lambda: f64 = lambda.as_vector().iter().map(|l| l.ln()).sum();
    let ratio = nu_log_ratio(prior, n, sum_lambda, sum_ln_lambda, current, proposal)?;
    let ln_u = rng.gen::<f64>().ln();
    if ln_u < ratio {
        Ok((proposal, true))
    } else {
        Ok((current, false))
    }
}

/// Runs a full chain, refusing improper posteriors.
///
/// An improper verdict aborts with [`Error::ImproperPosterior`] unless the
/// caller set [`ChainConfig::propriety_override`] together with a
/// `nu_floor` strictly above the critical threshold, in which case the
/// truncated (and hence proper) model is sampled instead.
pub fn run_chain(dataset: &Dataset, prior: &PriorSpec, config: &ChainConfig) -> Result<Trace> {
    config.validate()?;
    let report = audit_dims(dataset.n(), dataset.p(), prior, &[])?;
    if report.verdict == Verdict::Improper {
        let overridable = sigma_integrability_check(dataset.n(), dataset.p(), prior.a())
            && report.critical_nu > 0.0;
        let honored =
            config.propriety_override && overridable && config.nu_floor > report.critical_nu;
        if !honored {
            let mut reason = format!(
                "the posterior under the {} prior is improper: {}",
                prior.kind().label(),
                report.reason
            );
            if overridable {
                reason.push_str(&format!(
                    "; to sample the truncated model instead, set a nu floor above {:.6e} and \
                     the propriety override flag",
                    report.critical_nu
                ));
            }
            return Err(Error::ImproperPosterior {
                reason,
                critical_nu: report.critical_nu,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = ChainState::init(dataset, prior, config)?;
    let keep = (config.iterations - config.burn_in) / config.thin;
    let mut draws = Vec::with_capacity(keep);
    let mut accepted = 0usize;
    for i in 0..config.iterations {
        if state.step(&mut rng, dataset, prior, config)? {
            accepted += 1;
        }
        if i >= config.burn_in && (i + 1 - config.burn_in).is_multiple_of(config.thin) {
            draws.push(Draw {
                beta: state.beta.clone(),
                sigma2: state.sigma2,
                nu: state.nu,
            });
        }
    }
    Ok(Trace {
        p: dataset.p(),
        draws,
        nu_acceptance_rate: accepted as f64 / config.iterations as f64,
        config: *config,
    })
}

/// Posterior summary of one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Equal-tailed 95% credible interval endpoints.
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Effective sample size from Geyer's initial positive sequence.
    pub ess: f64,
}

/// Summary of a whole trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub draws: usize,
    pub nu_acceptance_rate: f64,
    pub parameters: Vec<ParameterSummary>,
}

/// Summarizes every parameter of a trace: moments, equal-tailed 95%
/// intervals by order statistics, and effective sample sizes.
pub fn summarize(trace: &Trace) -> Result<TraceSummary> {
    if trace.draws.is_empty() {
        return Err(Error::invalid("trace has no draws to summarize"));
    }
    let names = trace.parameter_names();
    let mut parameters = Vec::with_capacity(names.len());
    for (idx, name) in names.into_iter().enumerate() {
        let series = trace.series(idx);
        parameters.push(summarize_series(name, &series));
    }
    Ok(TraceSummary {
        draws: trace.draws.len(),
        nu_acceptance_rate: trace.nu_acceptance_rate,
        parameters,
    })
}

fn summarize_series(name: String, series: &[f64]) -> ParameterSummary {
    let m = series.len();
    let mean = series.iter().sum::<f64>() / m as f64;
    let sd = if m > 1 {
        (series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ParameterSummary {
        name,
        mean,
        sd,
        ci_lower: quantile_sorted(&sorted, 0.025),
        ci_upper: quantile_sorted(&sorted, 0.975),
        ess: effective_sample_size(series),
    }
}

/// Order-statistic quantile: the `ceil(q m)`-th smallest value.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let idx = ((q * m as f64).ceil() as usize).clamp(1, m) - 1;
    sorted[idx]
}

/// Effective sample size by Geyer's initial positive sequence: sum the
/// lag-pair autocorrelations `rho(2j) + rho(2j+1)` while they stay positive.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let m = series.len();
    if m < 3 {
        return m as f64;
    }
    let mf = m as f64;
    let mean = series.iter().sum::<f64>() / mf;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = centered.iter().map(|d| d * d).sum::<f64>() / mf;
    if c0 <= 0.0 {
        // A constant series carries no autocorrelation information.
        return mf;
    }
    let auto = |k: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..(m - k) {
            s += centered[t] * centered[t + k];
        }
        s / mf / c0
    };
    let mut tau = 0.0;
    let mut j = 0usize;
    loop {
        let k0 = 2 * j;
        let k1 = 2 * j + 1;
        if k1 >= m {
            break;
        }
        let pair = auto(k0) + auto(k1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        j += 1;
    }
    tau -= 1.0;
    if tau < 1e-12 {
        return mf;
    }
    mf / tau
}
