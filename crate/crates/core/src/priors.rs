//! Objective priors for the Student-t regression model.
//!
//! Both priors have the product form `pi(beta, sigma^2, nu) ~ (sigma^2)^-a
//! pi(nu)` with a flat beta component. The Jeffreys-rule prior uses
//! `a = 1 + p/2` and carries an extra `((nu+1)/(nu+3))^(p/2)` factor in
//! `pi(nu)`; the independence-Jeffreys prior uses `a = 1`. The shared kernel
//! is
//!
//! ```text
//! pi(nu) ~ sqrt(nu/(nu+3)) * sqrt(psi'(nu/2) - psi'((nu+1)/2) - 2(nu+3)/(nu(nu+1)^2))
//! ```
//!
//! The bracket under the square root collapses to `6/nu^4 + O(nu^-5)` for
//! large `nu`, so evaluating it directly loses all precision to cancellation
//! once `nu` is large; past `nu = 64` we switch to that asymptotic expansion.

use std::fmt;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::specfun;

/// Relative tolerance used by the memoized normalizer.
pub const DEFAULT_QUAD_TOL: f64 = 1e-9;

/// Bracket arguments at or above this switch to the asymptotic expansion.
const BRACKET_SERIES_CUTOFF: f64 = 64.0;

/// The integration range is split here; the upper piece is mapped onto a
/// bounded interval with `u = 1/nu`.
const NU_SPLIT: f64 = 1.0;

/// Support interval for a degrees-of-freedom prior, open at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuSupport {
    pub min: f64,
    pub max: Option<f64>,
}

impl NuSupport {
    /// The full half line `(0, inf)`.
    pub fn positive_half_line() -> Self {
        NuSupport {
            min: 0.0,
            max: None,
        }
    }

    pub fn new(min: f64, max: Option<f64>) -> Result<Self> {
        if !min.is_finite() || min < 0.0 {
            return Err(Error::domain(format!(
                "support lower endpoint must be finite and >= 0, got {min}"
            )));
        }
        if let Some(m) = max {
            if !m.is_finite() || m <= min {
                return Err(Error::domain(format!(
                    "support upper endpoint must be finite and exceed {min}, got {m}"
                )));
            }
        }
        Ok(NuSupport { min, max })
    }

    pub fn contains(&self, nu: f64) -> bool {
        nu > self.min && self.max.is_none_or(|m| nu < m)
    }
}

/// A user-supplied prior for the degrees of freedom: an unnormalized log
/// density on an explicit support, paired with the `sigma^2` exponent `a`
/// the user intends to pair it with.
#[derive(Clone)]
pub struct CustomNuPrior {
    a: f64,
    support: NuSupport,
    log_density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomNuPrior {
    pub fn new<F>(a: f64, support: NuSupport, log_density: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::domain(format!(
                "custom prior exponent a must be finite and >= 0, got {a}"
            )));
        }
        Ok(CustomNuPrior {
            a,
            support,
            log_density: Arc::new(log_density),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn support(&self) -> NuSupport {
        self.support
    }

    /// Unnormalized log density, `-inf` outside the support.
    pub fn log_density(&self, nu: f64) -> f64 {
        if self.support.contains(nu) {
            (self.log_density)(nu)
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl fmt::Debug for CustomNuPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNuPrior")
            .field("a", &self.a)
            .field("support", &self.support)
            .finish_non_exhaustive()
    }
}

/// Which prior family is in use.
#[derive(Debug, Clone)]
pub enum PriorKind {
    JeffreysRule,
    IndependenceJeffreys,
    CustomNu(CustomNuPrior),
}

impl PriorKind {
    pub fn label(&self) -> &'static str {
        match self {
            PriorKind::JeffreysRule => "jeffreys-rule",
            PriorKind::IndependenceJeffreys => "independence",
            PriorKind::CustomNu(_) => "custom",
        }
    }

    pub fn support(&self) -> NuSupport {
        match self {
            PriorKind::CustomNu(c) => c.support(),
            _ => NuSupport::positive_half_line(),
        }
    }
}

/// A fully specified prior: the family, the `sigma^2` exponent `a`, and the
/// covariate count `p` it is paired with.
#[derive(Debug)]
pub struct PriorSpec {
    kind: PriorKind,
    a: f64,
    p: usize,
    normalizer_cache: OnceLock<Result<f64>>,
}

impl Clone for PriorSpec {
    fn clone(&self) -> Self {
        let cache = OnceLock::new();
        if let Some(v) = self.normalizer_cache.get() {
            let _ = cache.set(v.clone());
        }
        PriorSpec {
            kind: self.kind.clone(),
            a: self.a,
            p: self.p,
            normalizer_cache: cache,
        }
    }
}

impl PriorSpec {
    /// Jeffreys-rule prior; fixes `a = 1 + p/2`.
    pub fn jeffreys_rule(p: usize) -> Result<Self> {
        check_p(p)?;
        Ok(PriorSpec {
            kind: PriorKind::JeffreysRule,
            a: 1.0 + p as f64 / 2.0,
            p,
            normalizer_cache: OnceLock::new(),
        })
    }

    /// Independence-Jeffreys prior; fixes `a = 1`.
    pub fn independence_jeffreys(p: usize) -> Result<Self> {
        check_p(p)?;
        Ok(PriorSpec {
            kind: PriorKind::IndependenceJeffreys,
            a: 1.0,
            p,
            normalizer_cache: OnceLock::new(),
        })
    }

    /// Custom degrees-of-freedom prior; `a` is taken from the custom prior.
    pub fn custom(prior: CustomNuPrior, p: usize) -> Result<Self> {
        check_p(p)?;
        Ok(PriorSpec {
            a: prior.a(),
            kind: PriorKind::CustomNu(prior),
            p,
            normalizer_cache: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    /// Exponent of `(sigma^2)^-a` in the prior.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Covariate count the prior is paired with.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn support(&self) -> NuSupport {
        self.kind.support()
    }

    pub fn nu_log_unnormalized(&self, nu: f64) -> Result<f64> {
        nu_prior_log_unnormalized(nu, &self.kind, self.p)
    }

    /// Normalizing constant of the `nu` factor at the given tolerance.
    pub fn normalizer(&self, quad_tol: f64) -> Result<f64> {
        nu_prior_normalizer(&self.kind, self.p, quad_tol)
    }

    /// Normalizing constant at [`DEFAULT_QUAD_TOL`], computed once and
    /// memoized; concurrent readers share the single initialization.
    pub fn normalizer_cached(&self) -> Result<f64> {
        self.normalizer_cache
            .get_or_init(|| self.normalizer(DEFAULT_QUAD_TOL))
            .clone()
    }

    /// A serializable description of the prior for reports.
    pub fn describe(&self) -> PriorDescription {
        PriorDescription {
            kind: self.kind.label(),
            a: self.a,
            p: self.p,
            support: self.support(),
        }
    }
}

/// Serializable summary of a [`PriorSpec`] for JSON reports.
#[derive(Debug, Clone, Serialize)]
pub struct PriorDescription {
    pub kind: &'static str,
    pub a: f64,
    pub p: usize,
    pub support: NuSupport,
}

fn check_p(p: usize) -> Result<()> {
    if p < 1 {
        return Err(Error::domain("prior requires p >= 1"));
    }
    Ok(())
}

/// The bracket `psi'(nu/2) - psi'((nu+1)/2) - 2(nu+3)/(nu(nu+1)^2)`.
///
/// Analytically positive for all `nu > 0`; evaluated by the asymptotic
/// expansion beyond [`BRACKET_SERIES_CUTOFF`] because direct evaluation
/// cancels to noise (the true value decays like `6/nu^4` while the
/// individual terms are of order `1/nu^2`).
pub fn prior_bracket(nu: f64) -> f64 {
    if nu >= BRACKET_SERIES_CUTOFF {
        let r = 1.0 / nu;
        let poly = 6.0
            + r * (-12.0
                + r * (14.0
                    + r * (-12.0
                        + r * (22.0
                            + r * (-60.0
                                + r * (30.0 + r * (276.0 + r * (38.0 + r * -4188.0))))))));
        poly * r * r * r * r
    } else {
        bracket_direct(nu)
    }
}

fn bracket_direct(nu: f64) -> f64 {
    specfun::trigamma_raw(nu / 2.0) - specfun::trigamma_raw((nu + 1.0) / 2.0)
        - 2.0 * (nu + 3.0) / (nu * (nu + 1.0) * (nu + 1.0))
}

/// Unnormalized log density of the degrees-of-freedom factor `pi(nu)`.
///
/// Returns `-inf` where the density vanishes: outside a custom prior's
/// support, or in the defensive case that the bracket under the square root
/// evaluates as nonpositive (a cancellation artifact; analytically it is
/// strictly positive).
pub fn nu_prior_log_unnormalized(nu: f64, kind: &PriorKind, p: usize) -> Result<f64> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "nu_prior_log_unnormalized requires nu > 0, got {nu}"
        )));
    }
    match kind {
        PriorKind::CustomNu(c) => Ok(c.log_density(nu)),
        PriorKind::JeffreysRule | PriorKind::IndependenceJeffreys => {
            check_p(p)?;
            let bracket = prior_bracket(nu);
            if bracket <= 0.0 {
                // Only reachable through rounding; treat the density as zero.
                return Ok(f64::NEG_INFINITY);
            }
            let base = 0.5 * (nu / (nu + 3.0)).ln() + 0.5 * bracket.ln();
            Ok(match kind {
                PriorKind::JeffreysRule => {
                    base + (p as f64 / 2.0) * ((nu + 1.0) / (nu + 3.0)).ln()
                }
                _ => base,
            })
        }
    }
}

/// Log of the full prior `(sigma^2)^-a pi(nu)` (flat in `beta`).
///
/// `beta` only participates through a dimension check against the prior's
/// `p`.
pub fn full_prior_log(
    beta: &nalgebra::DVector<f64>,
    sigma2: f64,
    nu: f64,
    spec: &PriorSpec,
) -> Result<f64> {
    if beta.len() != spec.p() {
        return Err(Error::invalid(format!(
            "beta has {} entries but the prior was built for p = {}",
            beta.len(),
            spec.p()
        )));
    }
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "full_prior_log requires sigma2 > 0, got {sigma2}"
        )));
    }
    Ok(-spec.a() * sigma2.ln() + spec.nu_log_unnormalized(nu)?)
}

/// Normalizing constant `int pi(nu) dnu` over the prior's support.
///
/// The integral is split at `nu = 1` and the upper piece handled through
/// `u = 1/nu`; an integrand that fails to stabilize under adaptive
/// refinement is reported as [`Error::DivergenceDetected`], which is the
/// expected outcome for non-integrable custom priors.
pub fn nu_prior_normalizer(kind: &PriorKind, p: usize, quad_tol: f64) -> Result<f64> {
    if !quad_tol.is_finite() || quad_tol <= 0.0 || quad_tol >= 1.0 {
        return Err(Error::domain(format!(
            "quad_tol must lie in (0, 1), got {quad_tol}"
        )));
    }
    let support = kind.support();
    let density = |nu: f64| {
        nu_prior_log_unnormalized(nu, kind, p)
            .map(f64::exp)
            .unwrap_or(0.0)
    };

    let lo = support.min;
    let mut total = 0.0;
    match support.max {
        Some(hi) => {
            if lo < NU_SPLIT && hi > NU_SPLIT {
                total += quadrature::integrate(density, lo, NU_SPLIT, quad_tol, 0.0)?.value;
                total += quadrature::integrate(density, NU_SPLIT, hi, quad_tol, 0.0)?.value;
            } else {
                total += quadrature::integrate(density, lo, hi, quad_tol, 0.0)?.value;
            }
        }
        None => {
            let split = NU_SPLIT.max(lo);
            if lo < split {
                total += quadrature::integrate(density, lo, split, quad_tol, 0.0)?.value;
            }
            total += quadrature::integrate_upper_tail(density, split, quad_tol, 0.0)?.value;
        }
    }

    if !total.is_finite() {
        return Err(Error::DivergenceDetected(
            "nu prior normalizer is non-finite".into(),
        ));
    }
    if total <= 0.0 {
        return Err(Error::invalid(
            "nu prior has zero mass on its support; normalizer is not positive",
        ));
    }
    Ok(total)
}

/// Fisher information of the Student-t regression model at `(sigma^2, nu)`
/// for the design matrix `x`, in the parameter order `(beta, sigma^2, nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    matrix: DMatrix<f64>,
    p: usize,
}

impl FisherMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The `p x p` beta block.
    pub fn beta_block(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (self.p, self.p)).into()
    }

    pub fn sigma2_sigma2(&self) -> f64 {
        self.matrix[(self.p, self.p)]
    }

    pub fn sigma2_nu(&self) -> f64 {
        self.matrix[(self.p, self.p + 1)]
    }

    pub fn nu_nu(&self) -> f64 {
        self.matrix[(self.p + 1, self.p + 1)]
    }
}

/// The `(nu, nu)` bracket of the Fisher information,
/// `psi'(nu/2) - psi'((nu+1)/2) - 2(nu+5)/(nu(nu+1)(nu+3))`.
///
/// Computed from the prior bracket by the exact rational relation between
/// the two, which keeps the large-`nu` regime on the cancellation-safe path.
pub fn fisher_nu_bracket(nu: f64) -> f64 {
    prior_bracket(nu) + 8.0 / (nu * (nu + 1.0) * (nu + 1.0) * (nu + 3.0))
}

pub fn fisher_information(sigma2: f64, nu: f64, x: &DMatrix<f64>) -> Result<FisherMatrix> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "fisher_information requires sigma2 > 0, got {sigma2}"
        )));
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "fisher_information requires nu > 0, got {nu}"
        )));
    }
    let n = x.nrows();
    let p = x.ncols();
    if n == 0 || p == 0 {
        return Err(Error::domain(
            "fisher_information requires a non-empty design matrix",
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("design matrix contains non-finite entries"));
    }
    let svd = x.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let tol = (n.max(p) as f64) * f64::EPSILON * smax;
    if svd.rank(tol) < p {
        return Err(Error::singular(format!(
            "design matrix is rank deficient (rank < {p})"
        )));
    }

    let nf = n as f64;
    let mut m = DMatrix::zeros(p + 2, p + 2);
    let beta_scale = (nu + 1.0) / (nu + 3.0) / sigma2;
    let xtx = x.transpose() * x;
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = beta_scale * xtx[(i, j)];
        }
    }
    m[(p, p)] = nf / (2.0 * sigma2 * sigma2) * nu / (nu + 3.0);
    let off = -nf / (sigma2 * (nu + 1.0) * (nu + 3.0));
    m[(p, p + 1)] = off;
    m[(p + 1, p)] = off;
    m[(p + 1, p + 1)] = nf / 4.0 * fisher_nu_bracket(nu);

    Ok(FisherMatrix { matrix: m, p })
}

/// Relative residual of the determinant identity linking the Fisher
/// `(sigma^2, nu)` block to the prior kernel.
///
/// The square root of that block's determinant, divided by
/// `(1/sigma^2) sqrt(nu/(nu+3)) sqrt(bracket)`, is the constant
/// `n / (2 sqrt 2)` for every `nu`; the returned value is the relative
/// departure from that constant.
pub fn jeffreys_determinant_identity_residual(nu: f64, sigma2: f64, n: usize) -> Result<f64> {
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "determinant identity requires nu > 0, got {nu}"
        )));
    }
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "determinant identity requires sigma2 > 0, got {sigma2}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("determinant identity requires n >= 1"));
    }
    let nf = n as f64;
    let i_ss = nf / (2.0 * sigma2 * sigma2) * nu / (nu + 3.0);
    let i_sn = -nf / (sigma2 * (nu + 1.0) * (nu + 3.0));
    let i_nn = nf / 4.0 * fisher_nu_bracket(nu);
    let det = i_ss * i_nn - i_sn * i_sn;
    if det <= 0.0 {
        return Err(Error::domain(format!(
            "Fisher (sigma^2, nu) block is not positive definite at nu = {nu}"
        )));
    }
    let bracket = prior_bracket(nu);
    if bracket <= 0.0 {
        return Err(Error::domain(format!(
            "prior bracket is nonpositive at nu = {nu}"
        )));
    }
    let denom = (1.0 / sigma2) * (nu / (nu + 3.0)).sqrt() * bracket.sqrt();
    let ratio = det.sqrt() / denom;
    let constant = nf / (2.0 * std::f64::consts::SQRT_2);
    Ok((ratio - constant).abs() / constant)
}

/// Write a plotting-friendly CSV of the unnormalized log prior over `grid`.
///
/// Columns: `nu,log_unnormalized_density,kind`.
pub fn write_prior_curve_csv<W: Write>(
    mut w: W,
    kind: &PriorKind,
    p: usize,
    grid: &[f64],
) -> Result<()> {
    writeln!(w, "nu,log_unnormalized_density,kind")?;
    let label = kind.label();
    for &nu in grid {
        let lp = nu_prior_log_unnormalized(nu, kind, p)?;
        writeln!(w, "{nu},{lp},{label}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{dmatrix, DVector};
    use std::f64::consts::PI;

    fn geometric_grid(lo: f64, hi: f64, len: usize) -> Vec<f64> {
        let step = (hi / lo).ln() / (len - 1) as f64;
        (0..len).map(|i| lo * (step * i as f64).exp()).collect()
    }

    #[test]
    fn bracket_matches_high_precision_references() {
        // Reference values from 40-digit arithmetic.
        assert_relative_eq!(
            prior_bracket(100.0),
            5.88138821403275962e-8,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            prior_bracket(1024.0),
            5.44632220251925393e-12,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            prior_bracket(1e6),
            5.99998800001399999e-24,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            prior_bracket(1.0),
            PI * PI / 2.0 - PI * PI / 6.0 - 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn bracket_series_agrees_with_direct_evaluation_in_the_overlap() {
        // Direct evaluation is still accurate to ~1e-10 relative below the
        // cutoff; the two paths must agree there.
        for &nu in geometric_grid(24.0, 63.9, 50).iter() {
            let direct = bracket_direct(nu);
            let r = 1.0 / nu;
            let poly = 6.0
                + r * (-12.0
                    + r * (14.0
                        + r * (-12.0
                            + r * (22.0
                                + r * (-60.0
                                    + r * (30.0 + r * (276.0 + r * (38.0 + r * -4188.0))))))));
            let series = poly * r * r * r * r;
            assert_relative_eq!(direct, series, max_relative = 1e-8);
        }
    }

    #[test]
    fn bracket_is_positive_on_a_wide_grid() {
        for &nu in geometric_grid(1e-3, 1e3, 1000).iter() {
            assert!(
                prior_bracket(nu) > 0.0,
                "bracket must be positive at nu = {nu}"
            );
        }
    }

    #[test]
    fn independence_prior_matches_closed_form_at_nu_one() {
        let kind = PriorKind::IndependenceJeffreys;
        let expected = (0.5 * (PI * PI / 3.0 - 2.0).sqrt()).ln();
        assert_abs_diff_eq!(
            nu_prior_log_unnormalized(1.0, &kind, 1).unwrap(),
            expected,
            epsilon = 1e-12
        );
        // Value is the same for any p.
        assert_eq!(
            nu_prior_log_unnormalized(1.0, &kind, 1).unwrap(),
            nu_prior_log_unnormalized(1.0, &kind, 4).unwrap()
        );
    }

    #[test]
    fn jeffreys_rule_prior_matches_closed_form_at_nu_one() {
        let kind = PriorKind::JeffreysRule;
        let expected = (0.5 * (PI * PI / 3.0 - 2.0).sqrt()).ln() + 0.5 * 0.5f64.ln();
        assert_abs_diff_eq!(
            nu_prior_log_unnormalized(1.0, &kind, 1).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rule_and_independence_differ_by_the_stated_factor() {
        let mut nu = 0.01;
        while nu < 500.0 {
            for p in 1..=4usize {
                let rule = nu_prior_log_unnormalized(nu, &PriorKind::JeffreysRule, p).unwrap();
                let ind =
                    nu_prior_log_unnormalized(nu, &PriorKind::IndependenceJeffreys, p).unwrap();
                let factor = (p as f64 / 2.0) * ((nu + 1.0) / (nu + 3.0)).ln();
                assert_abs_diff_eq!(rule - ind, factor, epsilon = 1e-12);
            }
            nu *= 3.7;
        }
    }

    #[test]
    fn prior_density_decays_along_a_geometric_tail() {
        let kind = PriorKind::IndependenceJeffreys;
        let mut last = f64::INFINITY;
        for &nu in [3.0, 10.0, 31.6, 100.0, 316.0, 1e3, 1e4, 1e5, 1e6].iter() {
            let val = nu_prior_log_unnormalized(nu, &kind, 1).unwrap().exp();
            assert!(val < last, "density must decay at nu = {nu}");
            last = val;
        }
        assert!(last < 1e-11);
    }

    #[test]
    fn prior_rejects_bad_nu() {
        let kind = PriorKind::IndependenceJeffreys;
        assert!(nu_prior_log_unnormalized(0.0, &kind, 1).is_err());
        assert!(nu_prior_log_unnormalized(-1.0, &kind, 1).is_err());
        assert!(nu_prior_log_unnormalized(f64::NAN, &kind, 1).is_err());
    }

    #[test]
    fn custom_prior_restricts_to_its_support() {
        let c = CustomNuPrior::new(2.0, NuSupport::new(1.0, Some(10.0)).unwrap(), |_| 0.0)
            .unwrap();
        let kind = PriorKind::CustomNu(c);
        assert_eq!(
            nu_prior_log_unnormalized(0.5, &kind, 1).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(nu_prior_log_unnormalized(5.0, &kind, 1).unwrap(), 0.0);
        assert_eq!(
            nu_prior_log_unnormalized(20.0, &kind, 1).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn full_prior_log_combines_exponent_and_nu_factor() {
        let spec = PriorSpec::independence_jeffreys(2).unwrap();
        let beta = DVector::from_vec(vec![0.3, -0.7]);
        let nu_part = spec.nu_log_unnormalized(2.5).unwrap();
        let val = full_prior_log(&beta, 1.0, 2.5, &spec).unwrap();
        assert_abs_diff_eq!(val, nu_part, epsilon = 1e-15);

        let e2 = (2.0f64).exp();
        let val = full_prior_log(&beta, e2, 2.5, &spec).unwrap();
        assert_abs_diff_eq!(val, nu_part - 2.0, epsilon = 1e-12);

        let rule = PriorSpec::jeffreys_rule(2).unwrap();
        let val = full_prior_log(&beta, e2, 2.5, &rule).unwrap();
        assert_abs_diff_eq!(
            val,
            rule.nu_log_unnormalized(2.5).unwrap() - 2.0 * 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn full_prior_log_validates_inputs() {
        let spec = PriorSpec::independence_jeffreys(2).unwrap();
        let beta = DVector::from_vec(vec![0.0, 0.0]);
        assert!(full_prior_log(&beta, 0.0, 1.0, &spec).is_err());
        assert!(full_prior_log(&beta, -1.0, 1.0, &spec).is_err());
        let wrong = DVector::from_vec(vec![0.0]);
        assert!(full_prior_log(&wrong, 1.0, 1.0, &spec).is_err());
    }

    #[test]
    fn normalizers_match_reference_values() {
        // References from 40-digit quadrature of the same kernels.
        let zi = nu_prior_normalizer(&PriorKind::IndependenceJeffreys, 1, 1e-9).unwrap();
        assert_relative_eq!(zi, 2.9675806589771288, max_relative = 1e-8);
        let zj1 = nu_prior_normalizer(&PriorKind::JeffreysRule, 1, 1e-9).unwrap();
        assert_relative_eq!(zj1, 2.0794952165017507, max_relative = 1e-8);
        let zj2 = nu_prior_normalizer(&PriorKind::JeffreysRule, 2, 1e-9).unwrap();
        assert_relative_eq!(zj2, 1.4992246619989818, max_relative = 1e-8);
    }

    #[test]
    fn normalizer_is_stable_under_tolerance_tightening() {
        for kind in [PriorKind::IndependenceJeffreys, PriorKind::JeffreysRule] {
            let loose = nu_prior_normalizer(&kind, 2, 1e-6).unwrap();
            let tight = nu_prior_normalizer(&kind, 2, 1e-9).unwrap();
            assert_relative_eq!(loose, tight, max_relative = 1e-6);
        }
    }

    #[test]
    fn normalizer_flags_improper_custom_priors() {
        let flat = CustomNuPrior::new(1.0, NuSupport::positive_half_line(), |_| 0.0).unwrap();
        let err = nu_prior_normalizer(&PriorKind::CustomNu(flat), 1, 1e-8);
        assert!(matches!(err, Err(Error::DivergenceDetected(_))));
    }

    #[test]
    fn normalizer_handles_proper_custom_priors() {
        // pi(nu) = exp(-nu/10) integrates to 10 on (0, inf).
        let c = CustomNuPrior::new(1.0, NuSupport::positive_half_line(), |nu| -0.1 * nu)
            .unwrap();
        let z = nu_prior_normalizer(&PriorKind::CustomNu(c), 1, 1e-10).unwrap();
        assert_relative_eq!(z, 10.0, max_relative = 1e-8);

        // Bounded support integrates to the interval length for a flat prior.
        let c = CustomNuPrior::new(1.0, NuSupport::new(2.0, Some(7.0)).unwrap(), |_| 0.0)
            .unwrap();
        let z = nu_prior_normalizer(&PriorKind::CustomNu(c), 1, 1e-10).unwrap();
        assert_relative_eq!(z, 5.0, max_relative = 1e-10);
    }

    #[test]
    fn normalizer_cache_returns_the_same_value() {
        let spec = PriorSpec::independence_jeffreys(1).unwrap();
        let first = spec.normalizer_cached().unwrap();
        let second = spec.normalizer_cached().unwrap();
        assert_eq!(first, second);
        assert_relative_eq!(first, 2.9675806589771288, max_relative = 1e-8);
        // Clones carry the cached value.
        let clone = spec.clone();
        assert_eq!(clone.normalizer_cached().unwrap(), first);
    }

    #[test]
    fn fisher_information_matches_spot_values() {
        // Single observation, single covariate equal to one.
        let x = dmatrix![1.0];
        let f = fisher_information(1.0, 1.0, &x).unwrap();
        assert_abs_diff_eq!(f.beta_block()[(0, 0)], 0.5, epsilon = 1e-15);

        // In the large-nu limit the beta block tends to X'X / sigma^2.
        let f = fisher_information(1.0, 1e12, &x).unwrap();
        assert_abs_diff_eq!(f.beta_block()[(0, 0)], 1.0, epsilon = 1e-11);

        // (sigma^2, sigma^2) entry at sigma^2 = 2, nu = 3, n = 5.
        let x5 = DMatrix::from_element(5, 1, 1.0);
        let f = fisher_information(2.0, 3.0, &x5).unwrap();
        assert_abs_diff_eq!(f.sigma2_sigma2(), 0.3125, epsilon = 1e-15);
        assert_abs_diff_eq!(
            f.sigma2_nu(),
            -5.0 / (2.0 * 4.0 * 6.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn fisher_information_beta_cross_blocks_are_exactly_zero() {
        let x = dmatrix![1.0, 0.5; -0.3, 2.0; 1.1, -0.7];
        let f = fisher_information(0.7, 4.2, &x).unwrap();
        let m = f.matrix();
        assert_eq!(m.nrows(), 4);
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(m[(i, j)], 0.0);
                assert_eq!(m[(j, i)], 0.0);
            }
        }
        // Symmetry is exact by construction.
        assert_eq!(m[(2, 3)], m[(3, 2)]);
    }

    #[test]
    fn fisher_information_beta_block_scales_inversely_with_sigma2() {
        let x = dmatrix![1.0, 0.5; -0.3, 2.0; 1.1, -0.7];
        let f1 = fisher_information(1.0, 2.5, &x).unwrap();
        let f4 = fisher_information(4.0, 2.5, &x).unwrap();
        let scaled = f4.beta_block() * 4.0;
        assert_eq!(f1.beta_block(), scaled);
    }

    #[test]
    fn fisher_information_rejects_bad_inputs() {
        let x = dmatrix![1.0; 2.0];
        assert!(fisher_information(0.0, 1.0, &x).is_err());
        assert!(fisher_information(1.0, -1.0, &x).is_err());
        // Rank-deficient design.
        let xdup = dmatrix![1.0, 2.0; 2.0, 4.0; 3.0, 6.0];
        assert!(matches!(
            fisher_information(1.0, 1.0, &xdup),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn determinant_identity_holds_at_spot_points() {
        assert!(jeffreys_determinant_identity_residual(1.0, 2.0, 1).unwrap() <= 1e-10);
        assert!(jeffreys_determinant_identity_residual(7.3, 0.2, 5).unwrap() <= 1e-8);
    }

    #[test]
    fn determinant_identity_holds_on_a_wide_grid_and_ignores_sigma2() {
        for &nu in geometric_grid(1e-3, 1e3, 1000).iter() {
            for &s2 in [0.5, 1.0, 7.0].iter() {
                let res = jeffreys_determinant_identity_residual(nu, s2, 12).unwrap();
                assert!(
                    res <= 1e-8,
                    "identity residual {res:e} too large at nu = {nu}, sigma2 = {s2}"
                );
            }
        }
    }

    #[test]
    fn determinant_identity_rejects_bad_inputs() {
        assert!(jeffreys_determinant_identity_residual(0.0, 1.0, 5).is_err());
        assert!(jeffreys_determinant_identity_residual(1.0, 0.0, 5).is_err());
        assert!(jeffreys_determinant_identity_residual(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn prior_curve_csv_has_expected_shape() {
        let mut buf = Vec::new();
        write_prior_curve_csv(
            &mut buf,
            &PriorKind::IndependenceJeffreys,
            1,
            &[0.5, 1.0, 2.0],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "nu,log_unnormalized_density,kind");
        assert!(lines[1].starts_with("0.5,"));
        assert!(lines[1].ends_with(",independence"));
    }

    #[test]
    fn constructors_enforce_the_exponent_coupling() {
        let rule = PriorSpec::jeffreys_rule(2).unwrap();
        assert_eq!(rule.a(), 2.0);
        let rule3 = PriorSpec::jeffreys_rule(3).unwrap();
        assert_eq!(rule3.a(), 2.5);
        let ind = PriorSpec::independence_jeffreys(3).unwrap();
        assert_eq!(ind.a(), 1.0);
        assert!(PriorSpec::jeffreys_rule(0).is_err());
        let c = CustomNuPrior::new(1.5, NuSupport::positive_half_line(), |_| 0.0).unwrap();
        let spec = PriorSpec::custom(c, 2).unwrap();
        assert_eq!(spec.a(), 1.5);
    }

    #[test]
    fn support_validation() {
        assert!(NuSupport::new(-1.0, None).is_err());
        assert!(NuSupport::new(2.0, Some(1.0)).is_err());
        assert!(NuSupport::new(f64::NAN, None).is_err());
        let s = NuSupport::new(1.0, Some(4.0)).unwrap();
        assert!(s.contains(2.0));
        assert!(!s.contains(1.0));
        assert!(!s.contains(4.0));
        assert!(!s.contains(5.0));
    }

    #[test]
    fn custom_prior_rejects_bad_exponent() {
        assert!(CustomNuPrior::new(-0.5, NuSupport::positive_half_line(), |_| 0.0).is_err());
        assert!(CustomNuPrior::new(f64::NAN, NuSupport::positive_half_line(), |_| 0.0).is_err());
    }
}
