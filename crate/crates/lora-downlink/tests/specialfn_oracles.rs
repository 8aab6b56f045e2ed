//! Quadrature and series oracles for the special-function layer.
//!
//! Every closed-form routine here is checked against an independent
//! evaluation route: the interference functional against two different
//! integral representations, the Gauss hypergeometric against its Euler
//! integral, gamma against the Legendre duplication formula, and the
//! adaptive quadrature against a second rule built from different nodes.
//! Frozen reference literals come from a 25-digit arbitrary-precision
//! evaluation of the same expressions.

use lora_downlink::specialfn::{gamma, hyp1f1, hyp2f1, integrate, theta, QuadratureSpec};
use proptest::prelude::*;

/// dB entries of the capture matrix, the only thresholds `theta` sees.
const REJECTION_DB: [[f64; 6]; 6] = [
    [1.0, -8.0, -9.0, -9.0, -9.0, -9.0],
    [-11.0, 1.0, -11.0, -12.0, -13.0, -13.0],
    [-15.0, -13.0, 1.0, -13.0, -14.0, -15.0],
    [-19.0, -18.0, -17.0, 1.0, -17.0, -18.0],
    [-22.0, -22.0, -21.0, -20.0, 1.0, -20.0],
    [-25.0, -25.0, -25.0, -24.0, -23.0, 1.0],
];

fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
    let denom = expected.abs().max(1e-300);
    let rel = (actual - expected).abs() / denom;
    assert!(
        rel <= tol || (actual - expected).abs() <= tol,
        "{what}: got {actual}, want {expected} (rel {rel:.3e} > {tol:.1e})"
    );
}

fn tight() -> QuadratureSpec {
    QuadratureSpec { rel_tol: 1e-11, abs_tol: 1e-14, ..QuadratureSpec::default() }
}

/// Theta(x) recomputed from the Laplace-transform identity
///   2F1(1, a; b; -x) = (1/x) * integral_0^inf e^(-t/x) 1F1(a; b; -t) dt,
/// an algebraic identity between the two hypergeometric families, so the
/// series route and the quadrature route must agree to quadrature accuracy.
fn theta_confluent_oracle(x: f64, delta: f64) -> f64 {
    let f = |t: f64| {
        if t > 200.0 {
            // e^(-t/x) < 1e-69 for every tested x; skipping the tail keeps
            // the Kummer series short.
            return 0.0;
        }
        (-(t / x)).exp() * hyp1f1(-delta, 1.0 - delta, -t).unwrap()
    };
    integrate(f, &tight()).unwrap() / x - 1.0
}

/// Theta(x) from a bounded smooth-kernel form: substituting
/// s = (1+t)^(1-1/delta) into the radial integral gives
///   Theta(x) = x/(1/delta - 1) * integral_0^1 ds / (1 + x s^(1/(1-delta))).
fn theta_smooth_oracle(x: f64, delta: f64) -> f64 {
    let q = 1.0 / (1.0 - delta);
    let on_unit = |s: f64| 1.0 / (1.0 + x * s.powf(q));
    // Map [0,1) onto [0,inf) via s = u/(1+u).
    let f = |u: f64| on_unit(u / (1.0 + u)) / ((1.0 + u) * (1.0 + u));
    x / (1.0 / delta - 1.0) * integrate(f, &tight()).unwrap()
}

#[test]
fn theta_matches_confluent_integral_on_capture_grid() {
    for beta in [2.5, 2.9, 4.0] {
        let delta = 2.0 / beta;
        for row in REJECTION_DB {
            for db in row {
                let x = 10f64.powf(db / 10.0);
                let oracle = theta_confluent_oracle(x, delta);
                let got = theta(x, delta).unwrap();
                assert_rel(got, oracle, 1e-7, &format!("theta({db} dB, beta {beta})"));
            }
        }
    }
}

#[test]
fn theta_matches_smooth_kernel_integral() {
    for beta in [2.5, 2.9, 4.0] {
        let delta = 2.0 / beta;
        for db in [-25.0, -8.0, 1.0] {
            let x = 10f64.powf(db / 10.0);
            let oracle = theta_smooth_oracle(x, delta);
            let got = theta(x, delta).unwrap();
            assert_rel(got, oracle, 1e-8, &format!("theta({db} dB, beta {beta})"));
        }
    }
}

/// Plain Gauss series, no transformation. Converges for |z| < 1; the
/// alternating terms at z < 0 stay mild for |z| <= 0.9.
fn gauss_series_direct(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut comp = 0.0_f64; // Kahan carry
    for n in 0..200_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / (c + nf) * z / (nf + 1.0);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-18 * sum.abs() {
            return sum;
        }
    }
    panic!("direct series did not converge for ({a},{b},{c},{z})");
}

#[test]
fn negative_argument_route_agrees_with_direct_series() {
    let delta = 2.0 / 2.9;
    let cases = [
        (1.0, -delta, 1.0 - delta),
        (1.0, 5.5, 2.0),
        (0.3, 0.7, 1.2),
        (2.0, 1.0, 3.5),
    ];
    for (a, b, c) in cases {
        for z in [-0.05, -0.2, -0.5, -0.8, -0.9] {
            let direct = gauss_series_direct(a, b, c, z);
            let got = hyp2f1(a, b, c, z).unwrap();
            assert_rel(got, direct, 1e-9, &format!("2F1({a},{b};{c};{z})"));
        }
    }
}

/// Euler integral for 2F1(1, b; c; z) with c > 1, using the symmetry in the
/// first two parameters: (c-1) * integral_0^1 (1-t)^(c-2) (1-zt)^(-b) dt.
fn hyp2f1_euler_oracle(b: f64, c: f64, z: f64) -> f64 {
    let on_unit = |t: f64| (1.0 - t).powf(c - 2.0) * (1.0 - z * t).powf(-b);
    let f = |u: f64| on_unit(u / (1.0 + u)) / ((1.0 + u) * (1.0 + u));
    (c - 1.0) * integrate(f, &tight()).unwrap()
}

#[test]
fn gauss_hypergeometric_matches_euler_integral() {
    // The argument family used by the scheduling analysis: z = A/(A+3.5)
    // for load ratios A spanning four orders of magnitude, including two
    // points beyond the series/continuation switchover.
    for i in [1u32, 2, 4, 8, 16] {
        let b = f64::from(i) + 4.5;
        for a_ratio in [0.1, 1.0, 5.0, 20.0, 100.0] {
            let z = a_ratio / (a_ratio + 3.5);
            for c in [f64::from(i) + 1.0, f64::from(i) + 2.0] {
                let oracle = hyp2f1_euler_oracle(b, c, z);
                let got = hyp2f1(1.0, b, c, z).unwrap();
                assert_rel(got, oracle, 1e-8, &format!("2F1(1,{b};{c};{z})"));
            }
        }
    }
}

#[test]
fn gamma_satisfies_legendre_duplication() {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    for x in [0.25, 0.75, 1.5, 3.25, 7.5, 20.5, 45.0, 70.25] {
        let lhs = gamma(2.0 * x).unwrap();
        let rhs = gamma(x).unwrap() * gamma(x + 0.5).unwrap() * 2f64.powf(2.0 * x - 1.0) / sqrt_pi;
        assert_rel(lhs, rhs, 5e-13, &format!("duplication at {x}"));
    }
}

#[test]
fn frozen_reference_values() {
    let d = 2.0 / 2.9;
    assert_rel(hyp2f1(1.0, -d, 1.0 - d, -1.0).unwrap(), 2.875_133_136_187_144_3, 1e-9, "2F1 at -1");
    assert_rel(
        hyp2f1(0.3, 0.7, 1.2, 0.4).unwrap(),
        1.089_250_980_558_504_8,
        1e-9,
        "2F1(0.3,0.7;1.2;0.4)",
    );
    assert_rel(
        hyp1f1(-0.69, 0.31, -2.0).unwrap(),
        4.690_891_315_028_131_7,
        1e-8,
        "1F1(-0.69;0.31;-2)",
    );
    assert_rel(
        theta(10f64.powf(0.1), d).unwrap(),
        2.288_711_071_382_911_5,
        1e-9,
        "theta(10^0.1)",
    );
    assert_rel(gamma(20.5).unwrap(), 5.406_242_982_335_075e17, 1e-12, "gamma(20.5)");
    // Values past the point where the Lanczos intermediate would overflow.
    assert_rel(gamma(140.5).unwrap(), 1.136_732_321_459_971_2e240, 1e-12, "gamma(140.5)");
    assert_rel(gamma(150.5).unwrap(), 4.661_072_627_097_377_9e261, 1e-12, "gamma(150.5)");
    assert_rel(gamma(170.25).unwrap(), 1.540_656_022_718_819e305, 1e-12, "gamma(170.25)");
}

/// Composite Simpson on the substituted integrand, a different node family
/// from the Gauss-Kronrod pairs inside `integrate`.
fn simpson_oracle_qos_integral(delta: f64) -> f64 {
    // u = x^delta turns x^(delta-1) e^(-x - x^delta) dx into
    // (1/delta) e^(-u^(1/delta) - u) du with a smooth integrand.
    let g = |u: f64| (-(u.powf(1.0 / delta)) - u).exp();
    let (lo, hi, n) = (0.0_f64, 80.0_f64, 40_000_usize);
    let h = (hi - lo) / n as f64;
    let mut sum = g(lo) + g(hi);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * g(lo + h * j as f64);
    }
    sum * h / 3.0 / delta
}

#[test]
fn quadrature_agrees_with_independent_rule() {
    let delta = 2.0 / 2.9;
    let direct = integrate(
        |x: f64| {
            if x == 0.0 {
                return 0.0; // x^(delta-1) pole is integrable; endpoint weight is zero
            }
            x.powf(delta - 1.0) * (-x - x.powf(delta)).exp()
        },
        &tight(),
    )
    .unwrap();
    let simpson = simpson_oracle_qos_integral(delta);
    assert_rel(direct, simpson, 1e-8, "qos integral, two rules");
    assert_rel(direct, 0.761_178_710_240_483_88, 1e-10, "qos integral, frozen");
}

proptest! {
    #[test]
    fn theta_nonnegative_and_increasing(
        x in 1e-4f64..3.0,
        step in 1e-3f64..2.0,
        delta in 0.05f64..0.95,
    ) {
        let lo = theta(x, delta).unwrap();
        let hi = theta(x + step, delta).unwrap();
        prop_assert!(lo >= 0.0);
        prop_assert!(hi > lo, "theta must increase: {hi} vs {lo}");
    }

    #[test]
    fn gamma_recurrence_holds(x in 0.5f64..80.0) {
        let lhs = gamma(x + 1.0).unwrap();
        let rhs = x * gamma(x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs());
    }

    #[test]
    fn hypergeometric_is_one_at_origin(
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        c in 0.1f64..6.0,
    ) {
        prop_assert_eq!(hyp2f1(a, b, c, 0.0).unwrap(), 1.0);
    }
}
