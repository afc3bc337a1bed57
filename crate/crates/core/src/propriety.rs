//! Posterior propriety audit for the objective priors.
//!
//! The marginal posterior of `nu` behaves, after integrating out `beta` and
//! `sigma^2`, like a kernel whose small-`sigma^2` exponent is
//! `c = (nu (n - p) + 2 - 2a) / 2`. The kernel integrates iff `c > 0`, so
//! mass below the threshold `nu <= (2a - 2)/(n - p)` makes the posterior
//! improper. With `a = 1 + p/2` (the Jeffreys-rule coupling) the threshold
//! is `p/(n - p) > 0` and the posterior is always improper; with `a = 1`
//! (independence Jeffreys) the threshold is zero and the posterior is
//! proper. This module turns that argument into checkable numerics.

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::priors::{PriorKind, PriorSpec};
use crate::quadrature;
use crate::regression::{Dataset, MixingVector};
use crate::specfun;

/// Largest subset count the exhaustive search will enumerate.
const MAX_SUBSETS: f64 = 1e6;

/// Relative determinant tolerance for declaring a subset singular, applied
/// against the Hadamard bound (product of row norms).
const SUBSET_DET_TOL: f64 = 1e-10;

/// Probe points per decade when checking a custom prior for mass below the
/// critical threshold.
const MASS_PROBES: usize = 33;

/// Epsilon ladder used by the divergence diagnostic, `1e-2` down to `1e-12`.
fn eps_ladder() -> Vec<f64> {
    (2..=12).map(|k| 10f64.powi(-k)).collect()
}

/// Upper endpoint of the truncated kernel used by the diagnostic.
const KERNEL_UPPER: f64 = 1.0;

/// The propriety threshold `(2a - 2)/(n - p)`: posterior mass of `nu` at or
/// below it is fatal.
pub fn critical_nu(a: f64, n: usize, p: usize) -> Result<f64> {
    if !a.is_finite() || a < 1.0 {
        return Err(Error::domain(format!(
            "critical_nu requires a >= 1, got {a}"
        )));
    }
    check_dims(n, p)?;
    Ok((2.0 * a - 2.0) / (n - p) as f64)
}

/// Exponent of the small-scale kernel `lambda^(c-1)` governing integrability
/// at `sigma^2 -> 0` for a fixed `nu`.
pub fn c_exponent(nu: f64, n: usize, p: usize, a: f64) -> Result<f64> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "c_exponent requires nu > 0, got {nu}"
        )));
    }
    if !a.is_finite() || a < 0.0 {
        return Err(Error::domain(format!(
            "c_exponent requires a >= 0, got {a}"
        )));
    }
    check_dims(n, p)?;
    Ok((nu * (n - p) as f64 + 2.0 - 2.0 * a) / 2.0)
}

/// Whether the large-`sigma^2` tail integrates: `n + 2a - p - 2 > 0`.
pub fn sigma_integrability_check(n: usize, p: usize, a: f64) -> bool {
    n as f64 + 2.0 * a - p as f64 - 2.0 > 0.0
}

fn check_dims(n: usize, p: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::domain("requires p >= 1"));
    }
    if n <= p {
        return Err(Error::domain(format!(
            "requires n > p, got n = {n}, p = {p}"
        )));
    }
    Ok(())
}

/// Elementary bounds bracketing `int_0^L t^(v-1) e^(-r t) dt` together with
/// its closed-form value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichBounds {
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
}

/// Bounds the truncated Gamma-kernel integral by `L^v/v` above and by
/// `(L^v/v) e^(-r L)` below; both collapse to the exact value at `r = 0`.
///
/// The integral diverges for `v <= 0`, which is reported as a domain error
/// rather than a value.
pub fn sandwich_bounds(v: f64, r: f64, upper_limit: f64) -> Result<SandwichBounds> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::domain(format!(
            "sandwich_bounds requires v > 0 (the integral diverges otherwise), got {v}"
        )));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::domain(format!(
            "sandwich_bounds requires r >= 0, got {r}"
        )));
    }
    if !upper_limit.is_finite() || upper_limit <= 0.0 {
        return Err(Error::domain(format!(
            "sandwich_bounds requires a positive upper limit, got {upper_limit}"
        )));
    }
    let upper = upper_limit.powf(v) / v;
    let lower = upper * (-r * upper_limit).exp();
    let exact = if r == 0.0 {
        upper
    } else {
        let log_scale = specfun::log_gamma(v)? - v * r.ln();
        let p = specfun::lower_incomplete_gamma_regularized(v, r * upper_limit)?;
        // Clamp ulp-level violations so the bracketing invariant is exact.
        (log_scale.exp() * p).clamp(lower, upper)
    };
    Ok(SandwichBounds {
        lower,
        exact,
        upper,
    })
}

/// The winning subset of an exhaustive nonsingularity search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSelection {
    /// Zero-based observation indices, ascending.
    pub indices: Vec<usize>,
    /// Product of the mixing weights over the subset.
    pub product: f64,
}

/// Finds the subset of `size` observations maximizing the product of mixing
/// weights subject to nonsingularity of the induced square matrix: the
/// stacked covariate rows for `size = p`, or the stacked `(x_i, y_i)`
/// columns for `size = p + 1`.
///
/// Singularity is judged against the Hadamard bound: a determinant at or
/// below `1e-10` times the product of row norms counts as singular.
pub fn max_nonsingular_subset_product(
    lambda: &MixingVector,
    dataset: &Dataset,
    size: usize,
) -> Result<SubsetSelection> {
    let n = dataset.n();
    let p = dataset.p();
    if lambda.len() != n {
        return Err(Error::invalid(format!(
            "mixing vector has {} entries but the dataset has {n} rows",
            lambda.len()
        )));
    }
    if size != p && size != p + 1 {
        return Err(Error::domain(format!(
            "subset size must be p = {p} or p + 1 = {}, got {size}",
            p + 1
        )));
    }
    let combos = binomial_approx(n, size);
    if combos > MAX_SUBSETS {
        return Err(Error::invalid(format!(
            "subset search over C({n}, {size}) ~ {combos:.3e} combinations exceeds the {MAX_SUBSETS:.0e} guard"
        )));
    }

    let mut best: Option<SubsetSelection> = None;
    let mut m = DMatrix::zeros(size, size);
    for combo in (0..n).combinations(size) {
        let product: f64 = combo.iter().map(|&i| lambda.get(i)).product();
        if let Some(b) = &best {
            if product <= b.product {
                continue;
            }
        }
        fill_subset_matrix(&mut m, dataset, &combo, size);
        if subset_is_nonsingular(&m) {
            best = Some(SubsetSelection {
                indices: combo,
                product,
            });
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no nonsingular subset of size {size} exists; the data sit on a lower-dimensional set"
        ))
    })
}

fn fill_subset_matrix(m: &mut DMatrix<f64>, dataset: &Dataset, combo: &[usize], size: usize) {
    let p = dataset.p();
    if size == p {
        for (r, &i) in combo.iter().enumerate() {
            for c in 0..p {
                m[(r, c)] = dataset.x()[(i, c)];
            }
        }
    } else {
        // Columns are the stacked vectors (x_i, y_i).
        for (c, &i) in combo.iter().enumerate() {
            for r in 0..p {
                m[(r, c)] = dataset.x()[(i, r)];
            }
            m[(p, c)] = dataset.y()[i];
        }
    }
}

fn subset_is_nonsingular(m: &DMatrix<f64>) -> bool {
    let det = m.determinant().abs();
    let mut hadamard = 1.0;
    for r in 0..m.nrows() {
        hadamard *= m.row(r).norm();
    }
    det > SUBSET_DET_TOL * hadamard
}

fn binomial_approx(n: usize, k: usize) -> f64 {
    let mut v = 1.0f64;
    for i in 0..k {
        v *= (n - i) as f64 / (i + 1) as f64;
        if v > 1e18 {
            return v;
        }
    }
    v
}

/// `int_eps^t lambda^(c-1) e^(-r lambda) dlambda`, exactly the kernel whose
/// `eps -> 0` behavior separates proper from improper.
///
/// Closed forms cover `r = 0` and the incomplete-gamma case `c > 0`; the
/// remaining `c <= 0, r > 0` branch integrates on the log scale where the
/// integrand is smooth.
pub fn truncated_kernel_integral(c: f64, r: f64, eps: f64, t: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::domain(format!("kernel exponent must be finite, got {c}")));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::domain(format!("kernel rate must satisfy r >= 0, got {r}")));
    }
    if !(eps.is_finite() && t.is_finite() && eps > 0.0 && t > eps) {
        return Err(Error::domain(format!(
            "kernel limits must satisfy 0 < eps < t, got eps = {eps}, t = {t}"
        )));
    }
    let value = if r == 0.0 {
        if c == 0.0 {
            (t / eps).ln()
        } else {
            // Factored around the dominant endpoint power, with expm1
            // carrying the difference; this stays accurate when c is so
            // small that t^c and eps^c agree to many digits, and never
            // overflows unless the value itself does.
            let ratio_log = (t / eps).ln();
            if c > 0.0 {
                t.powf(c) * -(-c * ratio_log).exp_m1() / c
            } else {
                eps.powf(c) * (c * ratio_log).exp_m1() / c
            }
        }
    } else if c > 0.0 {
        let log_scale = specfun::log_gamma(c)? - c * r.ln();
        let hi = specfun::lower_incomplete_gamma_regularized(c, r * t)?;
        let lo = specfun::lower_incomplete_gamma_regularized(c, r * eps)?;
        log_scale.exp() * (hi - lo).max(0.0)
    } else {
        let integrand = move |u: f64| (c * u - r * u.exp()).exp();
        quadrature::integrate(integrand, eps.ln(), t.ln(), 1e-10, 0.0)?.value
    };
    if !value.is_finite() {
        return Err(Error::DivergenceDetected(format!(
            "truncated kernel overflowed at c = {c}, eps = {eps}"
        )));
    }
    Ok(value)
}

/// How a kernel behaves as its lower truncation is released.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Divergent,
    Convergent,
}

/// One point of a truncation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub eps: f64,
    pub value: f64,
}

/// Numerical evidence about the kernel at a single `nu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceEvidence {
    pub nu: f64,
    pub c: f64,
    pub classification: DivergenceKind,
    /// Relative misfit of the expected limiting behavior at the deep end of
    /// the ladder: the power-law (or logarithmic) growth rate for divergent
    /// kernels, agreement of successive extrapolated limits for convergent
    /// ones.
    pub law_residual: f64,
    pub growth: Vec<GrowthPoint>,
}

/// Evaluates the truncated kernel along the epsilon ladder for each probe
/// `nu`, classifies it by the sign of the exponent `c`, and quantifies how
/// well the observed growth matches the analytic law.
pub fn divergence_diagnostic(
    nu_grid: &[f64],
    n: usize,
    p: usize,
    a: f64,
    r: f64,
) -> Result<Vec<DivergenceEvidence>> {
    check_dims(n, p)?;
    let ladder = eps_ladder();
    let mut out = Vec::with_capacity(nu_grid.len());
    for &nu in nu_grid {
        let c = c_exponent(nu, n, p, a)?;
        let growth: Vec<GrowthPoint> = ladder
            .iter()
            .map(|&eps| {
                truncated_kernel_integral(c, r, eps, KERNEL_UPPER).map(|value| GrowthPoint {
                    eps,
                    value,
                })
            })
            .collect::<Result<_>>()?;
        let classification = if c <= 0.0 {
            DivergenceKind::Divergent
        } else {
            DivergenceKind::Convergent
        };
        let law_residual = growth_law_residual(c, &growth);
        out.push(DivergenceEvidence {
            nu,
            c,
            classification,
            law_residual,
            growth,
        });
    }
    Ok(out)
}

/// Relative misfit between the observed ladder and the limiting law implied
/// by the exponent, measured at the deep (small-eps) end.
fn growth_law_residual(c: f64, growth: &[GrowthPoint]) -> f64 {
    let m = growth.len();
    if m < 4 {
        return f64::NAN;
    }
    let vals: Vec<f64> = growth.iter().map(|g| g.value).collect();
    if c < -1e-8 {
        // Values blow up like eps^c, so one ladder decade multiplies the
        // integral by 10^|c|.
        let expect = 10f64.powf(-c);
        let mut worst = 0.0f64;
        for k in (m - 3)..m {
            let ratio = vals[k] / vals[k - 1];
            worst = worst.max((ratio / expect - 1.0).abs());
        }
        worst
    } else if c <= 1e-8 {
        // Logarithmic divergence: each decade adds ln 10.
        let mut worst = 0.0f64;
        for k in (m - 3)..m {
            let diff = vals[k] - vals[k - 1];
            worst = worst.max((diff / std::f64::consts::LN_10 - 1.0).abs());
        }
        worst
    } else {
        // Convergent: the increments decay geometrically with ratio 10^-c;
        // successive geometric-tail extrapolations must agree.
        let extrapolate = |k: usize| -> f64 {
            let d1 = vals[k] - vals[k - 1];
            let d0 = vals[k - 1] - vals[k - 2];
            if d0 == 0.0 || d1 == 0.0 {
                return vals[k];
            }
            let q = d1 / d0;
            if q <= 0.0 || q >= 1.0 {
                return vals[k];
            }
            vals[k] + d1 * q / (1.0 - q)
        };
        let l1 = extrapolate(m - 2);
        let l2 = extrapolate(m - 1);
        (l2 - l1).abs() / l2.abs().max(f64::MIN_POSITIVE)
    }
}

/// Audit verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Proper,
    Improper,
    Inconclusive,
}

/// Outcome of a propriety audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub verdict: Verdict,
    /// Threshold `(2a - 2)/(n - p)` clamped at zero; `nu` mass at or below a
    /// positive threshold is fatal.
    pub critical_nu: f64,
    pub a: f64,
    pub n: usize,
    pub p: usize,
    pub reason: String,
    pub evidence: Vec<DivergenceEvidence>,
}

/// Audits the posterior for the given dataset shape and prior; probe points
/// in `nu_grid` only feed the attached divergence evidence.
pub fn audit(dataset: &Dataset, prior: &PriorSpec, nu_grid: &[f64]) -> Result<AuditReport> {
    audit_dims(dataset.n(), dataset.p(), prior, nu_grid)
}

/// Shape-only variant of [`audit`]: the verdict depends on the data solely
/// through `n` and `p`.
pub fn audit_dims(
    n: usize,
    p: usize,
    prior: &PriorSpec,
    nu_grid: &[f64],
) -> Result<AuditReport> {
    check_dims(n, p)?;
    if prior.p() != p {
        return Err(Error::invalid(format!(
            "prior was built for p = {} but the data have p = {p}",
            prior.p()
        )));
    }
    let a = prior.a();
    let crit = ((2.0 * a - 2.0) / (n - p) as f64).max(0.0);

    let (verdict, reason) = match prior.kind() {
        PriorKind::JeffreysRule => (
            Verdict::Improper,
            format!(
                "the sigma^2 exponent a = 1 + p/2 puts the threshold at {crit:.6e} > 0, and the \
                 degrees-of-freedom factor has positive mass below it for every sample size"
            ),
        ),
        PriorKind::IndependenceJeffreys => (
            Verdict::Proper,
            "with a = 1 the threshold is zero and both scale tails integrate for n > p".into(),
        ),
        PriorKind::CustomNu(custom) => custom_verdict(custom, prior, crit, n, p, a, nu_grid),
    };

    let evidence = divergence_diagnostic(nu_grid, n, p, a, 0.0)?;
    Ok(AuditReport {
        verdict,
        critical_nu: crit,
        a,
        n,
        p,
        reason,
        evidence,
    })
}

/// Decides the verdict for a custom prior.
///
/// Beyond the threshold test, the deciding quantity is integrability of the
/// prior itself: away from the threshold the marginal density of `nu` is
/// bounded between positive constants (it tends to the Gaussian-model value
/// as `nu` grows), so the posterior inherits propriety from
/// `int pi(nu) dnu`. The one exception is a prior unbounded near `nu = 0`
/// when the threshold is zero; there the likelihood factor collapses to
/// zero fast enough that no rate-free conclusion is possible.
fn custom_verdict(
    custom: &crate::priors::CustomNuPrior,
    prior: &PriorSpec,
    crit: f64,
    n: usize,
    p: usize,
    a: f64,
    nu_grid: &[f64],
) -> (Verdict, String) {
    let support = custom.support();
    if !sigma_integrability_check(n, p, a) {
        return (
            Verdict::Improper,
            format!(
                "large-scale tail fails: n + 2a - p - 2 = {} <= 0",
                n as f64 + 2.0 * a - p as f64 - 2.0
            ),
        );
    }
    if crit > 0.0 && custom_mass_below(custom, crit, nu_grid) {
        return (
            Verdict::Improper,
            format!("the prior places mass at or below the threshold {crit:.6e}"),
        );
    }
    if crit > 0.0 && support.min < crit {
        return (
            Verdict::Inconclusive,
            format!(
                "the support reaches below the threshold {crit:.6e} but the probes found no \
                 mass there; emptiness of that region was not established"
            ),
        );
    }
    if crit > 0.0 && support.min == crit {
        return (
            Verdict::Inconclusive,
            format!(
                "the support touches the threshold {crit:.6e}; the boundary case is not \
                 decided numerically"
            ),
        );
    }
    match prior.normalizer(1e-7) {
        Ok(_) => (
            Verdict::Proper,
            format!(
                "the prior is integrable and carries no mass at or below the threshold \
                 {crit:.6e}"
            ),
        ),
        Err(_) => {
            if support.min > 0.0 {
                return (
                    Verdict::Improper,
                    "the prior is not integrable over its support, where the marginal \
                     density of nu is bounded below by a positive constant"
                        .into(),
                );
            }
            // Divergence with support reaching down to zero: an upper-tail
            // divergence is still fatal, a divergence at the origin is not
            // decidable without rates.
            let tail_diverges = support.max.is_none()
                && quadrature::integrate_upper_tail(
                    |nu| custom.log_density(nu).exp(),
                    1.0,
                    1e-7,
                    0.0,
                )
                .is_err();
            if tail_diverges {
                (
                    Verdict::Improper,
                    "the prior's upper tail is not integrable, while the marginal density \
                     of nu tends to a positive constant"
                        .into(),
                )
            } else {
                (
                    Verdict::Inconclusive,
                    "the prior fails to integrate near nu = 0, where the likelihood factor \
                     also vanishes; the verdict depends on rates this audit does not resolve"
                        .into(),
                )
            }
        }
    }
}

/// Probes a custom prior for positive density on `(0, crit]`.
fn custom_mass_below(custom: &crate::priors::CustomNuPrior, crit: f64, nu_grid: &[f64]) -> bool {
    let support = custom.support();
    let hi = support.max.map_or(crit, |m| m.min(crit));
    let lo = support.min.max(hi * 1e-9);
    if lo >= hi {
        return false;
    }
    let mut probes: Vec<f64> = nu_grid
        .iter()
        .copied()
        .filter(|&nu| nu > 0.0 && nu <= crit)
        .collect();
    let step = (hi / lo).ln() / (MASS_PROBES - 1) as f64;
    probes.extend((0..MASS_PROBES).map(|i| lo * (step * i as f64).exp()));
    probes
        .into_iter()
        .any(|nu| custom.log_density(nu) > f64::NEG_INFINITY)
}
