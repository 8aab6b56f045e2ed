//! Special functions used by the closed-form expressions.
//!
//! Everything here is plain `f64`. The accuracy targets are set by the
//! consumers: the coverage and scheduling formulas need ~1e-9 relative
//! accuracy, well inside what these kernels deliver.

use crate::error::Error;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Maximum number of series terms before a hypergeometric evaluation is
/// declared non-convergent.
pub const SERIES_ITERATION_CAP: usize = 10_000;

/// Argument threshold above which the Gauss series is abandoned in favor of
/// the 1-z connection formula.
const GAUSS_SERIES_Z_MAX: f64 = 0.95;

fn lanczos_sum(z: f64) -> f64 {
    let mut acc = LANCZOS_COEFFS[0];
    for (i, coeff) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += coeff / (z + i as f64);
    }
    acc
}

/// Gamma function for strictly positive arguments.
///
/// Arguments at or below zero are a domain error: the network formulas only
/// evaluate gamma at positive shifts of the cell-load shape parameter.
pub fn gamma(x: f64) -> Result<f64, Error> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("gamma", format!("argument must be positive, got {x}")));
    }
    if x < 0.5 {
        // Recurrence keeps the Lanczos kernel in its accurate range.
        return Ok(gamma(x + 1.0)? / x);
    }
    if x > 140.0 {
        // t^(x-0.5) overflows long before the result does; the log form
        // stays representable up to the true overflow near x = 171.6.
        return Ok(ln_gamma(x)?.exp());
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(SQRT_2PI * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z))
}

/// Natural log of the gamma function for strictly positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64, Error> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("ln_gamma", format!("argument must be positive, got {x}")));
    }
    if x < 0.5 {
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(SQRT_2PI.ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// ln|Gamma(x)| and the sign of Gamma(x) for any non-pole argument.
///
/// Only the hypergeometric connection formula needs negative arguments, so
/// this stays private; the public `gamma` keeps its positive-only contract.
fn ln_gamma_signed(x: f64) -> Result<(f64, f64), Error> {
    if x > 0.0 {
        return Ok((ln_gamma(x)?, 1.0));
    }
    if x == x.floor() {
        return Err(Error::domain("ln_gamma_signed", format!("pole at non-positive integer {x}")));
    }
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x), with 1-x > 1 > 0.
    let s = (std::f64::consts::PI * x).sin();
    let ln_abs = std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x)?;
    Ok((ln_abs, s.signum()))
}

/// Gauss series sum(n) (a)_n (b)_n / (c)_n z^n / n!, valid for |z| < 1.
fn gauss_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, Error> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut small_streak = 0u32;
    for n in 0..SERIES_ITERATION_CAP {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs().max(f64::MIN_POSITIVE) {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
        if !sum.is_finite() {
            return Err(Error::domain(
                "hyp2f1",
                format!("series diverged for a={a} b={b} c={c} z={z}"),
            ));
        }
    }
    Err(Error::Convergence { function: "hyp2f1", iterations: SERIES_ITERATION_CAP, achieved: sum })
}

fn is_near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for real arguments, z < 1.
///
/// Evaluation strategy:
/// - z in [0, 0.95]: direct Gauss series;
/// - z < 0: Pfaff transformation onto [0, 1);
/// - z in (0.95, 1): connection formula in powers of 1-z (requires c-a-b
///   non-integer; otherwise the direct series is attempted under the
///   iteration cap).
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, Error> {
    if c <= 0.0 && is_near_integer(c) {
        return Err(Error::domain("hyp2f1", format!("c must not be a non-positive integer, got {c}")));
    }
    if z >= 1.0 {
        return Err(Error::domain("hyp2f1", format!("argument must satisfy z < 1, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 {
        // Pfaff maps (-inf, 0) onto (0, 1).
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * hyp2f1(a, c - b, c, w)?);
    }
    if z <= GAUSS_SERIES_Z_MAX {
        return gauss_series(a, b, c, z);
    }
    let cab = c - a - b;
    if is_near_integer(cab) || is_near_integer(c - a) && (c - a) <= 0.0 || is_near_integer(c - b) && (c - b) <= 0.0 {
        // Degenerate connection coefficients; the direct series still
        // converges for z < 1, just slowly.
        return gauss_series(a, b, c, z);
    }
    // 2F1(a,b;c;z) = G1 * 2F1(a,b;a+b-c+1;1-z)
    //              + G2 * (1-z)^(c-a-b) * 2F1(c-a,c-b;c-a-b+1;1-z)
    let w = 1.0 - z;
    let (ln_c, sg_c) = ln_gamma_signed(c)?;
    let (ln_cab, sg_cab) = ln_gamma_signed(cab)?;
    let (ln_ca, sg_ca) = ln_gamma_signed(c - a)?;
    let (ln_cb, sg_cb) = ln_gamma_signed(c - b)?;
    let (ln_abc, sg_abc) = ln_gamma_signed(a + b - c)?;
    let (ln_a, sg_a) = ln_gamma_signed(a)?;
    let (ln_b, sg_b) = ln_gamma_signed(b)?;
    let g1 = sg_c * sg_cab * sg_ca * sg_cb * (ln_c + ln_cab - ln_ca - ln_cb).exp();
    let g2 = sg_c * sg_abc * sg_a * sg_b * (ln_c + ln_abc - ln_a - ln_b).exp();
    let f1 = gauss_series(a, b, a + b - c + 1.0, w)?;
    let f2 = gauss_series(c - a, c - b, cab + 1.0, w)?;
    Ok(g1 * f1 + g2 * w.powf(cab) * f2)
}

/// Confluent hypergeometric function 1F1(a; b; z) by Kummer's series.
///
/// Negative arguments are routed through the Kummer transformation
/// 1F1(a;b;z) = e^z 1F1(b-a;b;-z) so the series keeps positive terms.
pub fn hyp1f1(a: f64, b: f64, z: f64) -> Result<f64, Error> {
    if b <= 0.0 && is_near_integer(b) {
        return Err(Error::domain("hyp1f1", format!("b must not be a non-positive integer, got {b}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 {
        return Ok(z.exp() * hyp1f1(b - a, b, -z)?);
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut small_streak = 0u32;
    for n in 0..SERIES_ITERATION_CAP {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs().max(f64::MIN_POSITIVE) {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
        if !sum.is_finite() {
            return Err(Error::domain("hyp1f1", format!("series diverged for a={a} b={b} z={z}")));
        }
    }
    Err(Error::Convergence { function: "hyp1f1", iterations: SERIES_ITERATION_CAP, achieved: sum })
}

/// Interference functional Theta(x) = 2F1(1, -delta; 1-delta; -x) - 1.
///
/// `x` is a linear (not dB) power ratio threshold and `delta = 2/beta` with
/// path-loss exponent `beta > 2`. Theta(0) = 0, and Theta is strictly
/// increasing and nonnegative on x >= 0.
pub fn theta(x: f64, delta: f64) -> Result<f64, Error> {
    if !(x >= 0.0) {
        return Err(Error::domain("theta", format!("threshold must be nonnegative, got {x}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("theta", format!("delta must lie in (0, 1), got {delta}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let value = hyp2f1(1.0, -delta, 1.0 - delta, -x)? - 1.0;
    // The subtraction can produce a few-ulp negative for tiny x.
    debug_assert!(value > -1e-9, "theta({x}, {delta}) = {value}");
    Ok(value.max(0.0))
}

// ============================================================================
// Adaptive quadrature on [0, inf)
// ============================================================================

/// Tolerances and budget for `integrate`.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-12, max_subdivisions: 200 }
    }
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (positive half; the rule is
// symmetric). Standard QUADPACK constants.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// One G7-K15 evaluation over [lo, hi]. Returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut fv = [0.0_f64; 15];
    fv[7] = g(center);
    for i in 0..7 {
        fv[i] = g(center - half * XGK[i]);
        fv[14 - i] = g(center + half * XGK[i]);
    }
    let mut kronrod = WGK[7] * fv[7];
    for i in 0..7 {
        kronrod += WGK[i] * (fv[i] + fv[14 - i]);
    }
    // The embedded Gauss rule uses the odd Kronrod nodes plus the center.
    let mut gauss = WG[3] * fv[7];
    for j in 0..3 {
        let i = 2 * j + 1;
        gauss += WG[j] * (fv[i] + fv[14 - i]);
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive integration of `f` over [0, inf).
///
/// The half-line is folded onto [0, 1) by x = t/(1-t); the integrand must be
/// absolutely integrable with a decaying tail so the folded integrand vanishes
/// at t -> 1. Subdivision is bisection of the segment with the largest error
/// estimate; evaluation order is fixed, so results are bit-reproducible.
pub fn integrate<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64, Error> {
    let g = |t: f64| -> f64 {
        let om = 1.0 - t;
        let x = t / om;
        let fx = f(x);
        if fx == 0.0 {
            0.0
        } else {
            fx / (om * om)
        }
    };
    let (v, e) = gk15(&g, 0.0, 1.0);
    let mut segments = vec![Segment { lo: 0.0, hi: 1.0, value: v, error: e }];
    loop {
        let total_value: f64 = segments.iter().map(|s| s.value).sum();
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        if !total_value.is_finite() {
            return Err(Error::domain("integrate", "integrand produced a non-finite value".to_string()));
        }
        let tol = spec.abs_tol.max(spec.rel_tol * total_value.abs());
        if total_error <= tol {
            return Ok(total_value);
        }
        if segments.len() >= spec.max_subdivisions {
            return Err(Error::Convergence {
                function: "integrate",
                iterations: segments.len(),
                achieved: total_value,
            });
        }
        // Deterministic worst-segment selection: largest error, first index
        // breaking ties.
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                a.error.partial_cmp(&b.error).unwrap_or(std::cmp::Ordering::Equal).then(ib.cmp(ia))
            })
            .map(|(i, _)| i)
            .expect("segment list is never empty");
        let Segment { lo, hi, .. } = segments[worst];
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&g, lo, mid);
        let (v2, e2) = gk15(&g, mid, hi);
        segments[worst] = Segment { lo, hi: mid, value: v1, error: e1 };
        segments.push(Segment { lo: mid, hi, value: v2, error: e2 });
    }
}
