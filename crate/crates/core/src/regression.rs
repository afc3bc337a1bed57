//! Datasets, the Student-t likelihood, and the weighted least-squares core.
//!
//! The sampler and the propriety audit both lean on the scale-mixture view
//! of the t model: conditional on a vector of positive mixing weights
//! `lambda`, the response is Gaussian with per-observation precision
//! `lambda_i / sigma^2`, and the weights are iid `Gamma(nu/2, rate nu/2)`.
//! Everything downstream reduces to weighted least squares against
//! `D = diag(lambda)`, which this module computes through a QR factorization
//! of `D^(1/2) X` rather than the normal equations.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::priors::{full_prior_log, PriorSpec};
use crate::specfun;

/// A validated regression dataset: response `y` and full-column-rank design
/// `x` with more rows than columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        let p = x.ncols();
        if y.len() != n {
            return Err(Error::invalid(format!(
                "response has {} entries but the design has {n} rows",
                y.len()
            )));
        }
        if p < 1 {
            return Err(Error::invalid("design matrix needs at least one column"));
        }
        if n <= p {
            return Err(Error::invalid(format!(
                "need more observations than covariates, got n = {n}, p = {p}"
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "response entry {i} is not finite"
            )));
        }
        for j in 0..p {
            for i in 0..n {
                if !x[(i, j)].is_finite() {
                    return Err(Error::invalid(format!(
                        "design entry ({i}, {j}) is not finite"
                    )));
                }
            }
        }
        let svd = x.clone().svd(false, false);
        let tol = (n.max(p) as f64) * f64::EPSILON * svd.singular_values.max();
        if svd.rank(tol) < p {
            return Err(Error::singular(
                "design matrix is rank deficient; drop collinear covariates",
            ));
        }
        Ok(Dataset { y, x })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Residual vector `y - x beta`.
    pub fn residuals(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.p() {
            return Err(Error::invalid(format!(
                "beta has {} entries, expected {}",
                beta.len(),
                self.p()
            )));
        }
        Ok(&self.y - &self.x * beta)
    }

    /// Load a dataset from CSV text: a header whose first column is `y`,
    /// followed by one column per covariate. With `intercept` a leading
    /// column of ones is prepended to the design.
    pub fn from_csv_reader<R: Read>(reader: R, intercept: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::invalid(format!("cannot read CSV header: {e}")))?
            .clone();
        if headers.is_empty() || headers.get(0).map(str::trim) != Some("y") {
            return Err(Error::invalid(
                "CSV must start with a header whose first column is named 'y'",
            ));
        }
        let covariates = headers.len() - 1;
        let mut ys = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let record =
                record.map_err(|e| Error::invalid(format!("CSV row {}: {e}", idx + 1)))?;
            if record.len() != headers.len() {
                return Err(Error::invalid(format!(
                    "CSV row {} has {} fields, expected {}",
                    idx + 1,
                    record.len(),
                    headers.len()
                )));
            }
            let mut parsed = Vec::with_capacity(record.len());
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::invalid(format!(
                        "CSV row {} column '{}' is not a number: {field:?}",
                        idx + 1,
                        headers.get(col).unwrap_or("?")
                    ))
                })?;
                parsed.push(v);
            }
            ys.push(parsed[0]);
            rows.push(parsed[1..].to_vec());
        }
        let n = ys.len();
        if n == 0 {
            return Err(Error::invalid("CSV contains no data rows"));
        }
        let p = covariates + usize::from(intercept);
        if p == 0 {
            return Err(Error::invalid(
                "CSV has no covariate columns; pass intercept to fit a location model",
            ));
        }
        let mut x = DMatrix::zeros(n, p);
        for (i, row) in rows.iter().enumerate() {
            let mut j = 0;
            if intercept {
                x[(i, 0)] = 1.0;
                j = 1;
            }
            for &v in row {
                x[(i, j)] = v;
                j += 1;
            }
        }
        Dataset::new(DVector::from_vec(ys), x)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P, intercept: bool) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file, intercept)
    }
}

/// A strictly positive, finite vector of mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingVector(DVector<f64>);

impl MixingVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("mixing vector must be non-empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::domain(format!(
                "mixing weight {i} must be finite and positive, got {}",
                values[i]
            )));
        }
        Ok(MixingVector(values))
    }

    pub fn ones(n: usize) -> Self {
        MixingVector(DVector::from_element(n, 1.0))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Weighted least-squares decomposition against `D = diag(lambda)`:
/// `a = X'DX`, its Cholesky-like triangular factor from the QR of
/// `D^(1/2) X`, the WLS solution `b`, and the residual quadratic form
/// `s2 = min_beta (y - X beta)' D (y - X beta)`.
#[derive(Debug, Clone)]
pub struct WlsDecomposition {
    a: DMatrix<f64>,
    r: DMatrix<f64>,
    b: DVector<f64>,
    s2: f64,
    log_det_a: f64,
}

impl WlsDecomposition {
    /// The weighted Gram matrix `X'DX`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Upper-triangular factor with `r'r = X'DX` (up to rounding).
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// The WLS coefficient vector.
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// Weighted residual sum of squares at the optimum; never negative.
    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// `ln det(X'DX)`, taken from the triangular factor.
    pub fn log_det_a(&self) -> f64 {
        self.log_det_a
    }

    /// Solves `r w = z` for the upper-triangular factor; used to turn a
    /// standard normal vector into a draw with covariance `(X'DX)^-1`.
    pub fn solve_r(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.r
            .solve_upper_triangular(z)
            .ok_or_else(|| Error::singular("triangular factor is singular"))
    }
}

/// Relative floor on the triangular factor's diagonal; below it the weighted
/// design is treated as numerically rank deficient.
const WLS_SINGULARITY_TOL: f64 = 1e-12;

/// Weighted least squares of `y` on `x` with weights `lambda`.
pub fn weighted_regression(dataset: &Dataset, lambda: &MixingVector) -> Result<WlsDecomposition> {
    let n = dataset.n();
    let p = dataset.p();
    if lambda.len() != n {
        return Err(Error::invalid(format!(
            "mixing vector has {} entries but the dataset has {n} rows",
            lambda.len()
        )));
    }
    let mut xw = dataset.x().clone();
    let mut yw = dataset.y().clone();
    for i in 0..n {
        let w = lambda.get(i).sqrt();
        for j in 0..p {
            xw[(i, j)] *= w;
        }
        yw[i] *= w;
    }

    let a = xw.transpose() * &xw;
    let qr = xw.clone().qr();
    let q = qr.q();
    let r = qr.r();

    let scale = (0..p)
        .map(|j| r[(j, j)].abs())
        .fold(0.0f64, f64::max);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::singular(
            "weighted design collapsed to zero; mixing weights are degenerate",
        ));
    }
    let mut log_det_a = 0.0;
    for j in 0..p {
        let d = r[(j, j)].abs();
        if d <= WLS_SINGULARITY_TOL * scale {
            return Err(Error::singular(format!(
                "weighted design is numerically rank deficient (pivot {j})"
            )));
        }
        log_det_a += 2.0 * d.ln();
    }

    let qty = q.transpose() * &yw;
    let b = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::singular("triangular solve failed"))?;
    let resid = &yw - &xw * &b;
    let s2 = resid.norm_squared().max(0.0);

    Ok(WlsDecomposition {
        a,
        r,
        b,
        s2,
        log_det_a,
    })
}

/// Log likelihood of the Student-t regression model.
pub fn student_t_loglik(
    dataset: &Dataset,
    beta: &DVector<f64>,
    sigma2: f64,
    nu: f64,
) -> Result<f64> {
    check_scale_and_nu(sigma2, nu)?;
    let resid = dataset.residuals(beta)?;
    let n = dataset.n() as f64;
    let half = 0.5 * (nu + 1.0);
    let constant = specfun::log_gamma(half)?
        - specfun::log_gamma(0.5 * nu)?
        - 0.5 * (nu * std::f64::consts::PI * sigma2).ln();
    let mut kernel = 0.0;
    for r in resid.iter() {
        kernel += (r * r / (nu * sigma2)).ln_1p();
    }
    Ok(n * constant - half * kernel)
}

/// Log density of a single mixing weight, `Gamma(nu/2, rate nu/2)`.
pub fn mixing_density_log(lambda: f64, nu: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::domain(format!(
            "mixing_density_log requires lambda > 0, got {lambda}"
        )));
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!(
            "mixing_density_log requires nu > 0, got {nu}"
        )));
    }
    let h = 0.5 * nu;
    Ok(h * h.ln() - specfun::log_gamma(h)? + (h - 1.0) * lambda.ln() - h * lambda)
}

/// Log of the augmented joint density of `(y, lambda)` given the parameters,
/// times the prior: the Gaussian layer is evaluated through the completed
/// square `(beta - b)' X'DX (beta - b) + s2` of the weighted least-squares
/// decomposition, and the mixing weights contribute their Gamma log
/// densities.
pub fn augmented_joint_logdensity(
    dataset: &Dataset,
    beta: &DVector<f64>,
    sigma2: f64,
    nu: f64,
    lambda: &MixingVector,
    prior: &PriorSpec,
) -> Result<f64> {
    check_scale_and_nu(sigma2, nu)?;
    let n = dataset.n() as f64;
    let wls = weighted_regression(dataset, lambda)?;
    let diff = beta - wls.b();
    let quad = (wls.a() * &diff).dot(&diff) + wls.s2();

    let mut log_dens = -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln();
    log_dens -= 0.5 * quad / sigma2;
    for i in 0..lambda.len() {
        log_dens += 0.5 * lambda.get(i).ln();
        log_dens += mixing_density_log(lambda.get(i), nu)?;
    }
    log_dens += full_prior_log(beta, sigma2, nu, prior)?;
    Ok(log_dens)
}

fn check_scale_and_nu(sigma2: f64, nu: f64) -> Result<()> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::domain(format!(
            "requires sigma2 > 0, got {sigma2}"
        )));
    }
    if !nu.is_finite() || nu <= 0.0 {
        return Err(Error::domain(format!("requires nu > 0, got {nu}")));
    }
    Ok(())
}
