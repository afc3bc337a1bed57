//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 7-point Gauss / 15-point Kronrod pair drives a worklist refinement loop:
//! the segment with the largest error estimate is bisected until the summed
//! error meets the tolerance or the refinement budget is exhausted. Failure
//! to stabilize is reported as divergence, which is exactly the signal the
//! prior-normalizer code uses to reject non-integrable densities.

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1] side of the symmetric 15-point rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_84,
];

/// Weights of the embedded 7-point Gauss rule (for `XGK[1]`, `XGK[3]`,
/// `XGK[5]`, `XGK[7]`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    /// Number of segments in the final partition.
    pub segments: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);

    let fc = f(center);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - reskh).abs() + (fv[14 - j] - reskh).abs());
    }

    let value = resk * half;
    let mut err = ((resk - resg) * half).abs();
    let resasc = resasc * half.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0f64.min((200.0 * err / resasc).powf(1.5));
    }
    let round_floor = 50.0 * f64::EPSILON * resabs * half.abs();
    (value, err.max(round_floor))
}

/// Integrate `f` over the finite interval `[a, b]`.
///
/// The returned error estimate satisfies
/// `error <= max(abs_tol, rel_tol * |value|)` on success. Non-integrable
/// behavior surfaces as [`Error::DivergenceDetected`].
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::domain(format!(
            "integrate requires finite a < b, got [{a}, {b}]"
        )));
    }
    let usable = |tol: f64| tol.is_finite() && tol > 0.0;
    if !usable(rel_tol) && !usable(abs_tol) {
        return Err(Error::domain(
            "integrate requires a positive rel_tol or abs_tol",
        ));
    }

    const MAX_SEGMENTS: usize = 4096;
    let (value, error) = gk15(&f, a, b);
    let mut segments = vec![Segment {
        a,
        b,
        value,
        error,
    }];

    loop {
        let total_value: f64 = segments.iter().map(|s| s.value).sum();
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * total_value.abs());
        if !total_value.is_finite() {
            return Err(Error::DivergenceDetected(
                "integrand produced a non-finite partial sum".into(),
            ));
        }
        if total_error <= target {
            return Ok(QuadResult {
                value: total_value,
                error: total_error,
                segments: segments.len(),
            });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::DivergenceDetected(format!(
                "integral failed to stabilize after {} segments (estimate {total_value:e}, \
                 error {total_error:e})",
                segments.len()
            )));
        }

        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("segment list is never empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // The interval is at floating-point resolution and still failing.
            return Err(Error::DivergenceDetected(format!(
                "integral failed to stabilize near {mid:e} (segment error {:e})",
                seg.error
            )));
        }
        for (lo, hi) in [(seg.a, mid), (mid, seg.b)] {
            let (v, e) = gk15(&f, lo, hi);
            segments.push(Segment {
                a: lo,
                b: hi,
                value: v,
                error: e,
            });
        }
    }
}

/// Integrate `f` over `[a, infinity)` for `a > 0` via the substitution
/// `u = 1/x`, which maps the tail onto `(0, 1/a]`.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<QuadResult> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::domain(format!(
            "integrate_upper_tail requires a > 0, got {a}"
        )));
    }
    integrate(
        |u| {
            let x = 1.0 / u;
            f(x) * x * x
        },
        0.0,
        1.0 / a,
        rel_tol,
        abs_tol,
    )
}
